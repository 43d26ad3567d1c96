#include "seine/trec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace seine {

void write_run(const Rankings& rankings, const std::string& tag, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open run file for writing: " + path);
    }
    char score_buf[64];
    for (const auto& [query_id, ranked] : rankings) {
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            std::snprintf(score_buf, sizeof(score_buf), "%.17g", ranked[i].score);
            out << query_id << " Q0 " << ranked[i].doc_id << ' ' << (i + 1) << ' ' << score_buf
                << ' ' << tag << '\n';
        }
    }
    if (!out) {
        throw IoError("failed writing run file: " + path);
    }
}

Run read_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open run file: " + path);
    }
    Run run;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(line);
        RunEntry entry;
        std::string q0;
        if (!(fields >> entry.query_id >> q0 >> entry.doc_id >> entry.rank >> entry.score >>
              entry.tag)) {
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed run line");
        }
        run.push_back(std::move(entry));
    }
    return run;
}

Qrels read_qrels(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open qrels file: " + path);
    }
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(line);
        std::string query_id;
        std::string iteration;
        std::string doc_id;
        int grade = 0;
        if (!(fields >> query_id >> iteration >> doc_id >> grade)) {
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed qrels line");
        }
        qrels[query_id][doc_id] = grade;
    }
    return qrels;
}

std::vector<std::pair<std::string, std::string>> read_queries(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open queries file: " + path);
    }
    std::vector<std::pair<std::string, std::string>> queries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw IoError(path + ":" + std::to_string(line_no) +
                          ": expected \"query_id<TAB>query text\"");
        }
        queries.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return queries;
}

EvalResult evaluate(const Run& run, const Qrels& qrels, std::span<const int> cutoffs) {
    if (cutoffs.empty()) {
        throw ConfigError("evaluate: no cutoffs given");
    }

    // Group the run by query, preserving run order.
    std::vector<std::pair<std::string, std::vector<const RunEntry*>>> grouped;
    StringMap<std::size_t> group_of;
    for (const auto& entry : run) {
        auto it = group_of.find(entry.query_id);
        if (it == group_of.end()) {
            group_of.emplace(entry.query_id, grouped.size());
            grouped.push_back({entry.query_id, {}});
            grouped.back().second.push_back(&entry);
        } else {
            grouped[it->second].second.push_back(&entry);
        }
    }

    EvalResult result;
    for (int c : cutoffs) {
        result.mean.p_at[c] = 0.0;
        result.mean.ndcg_at[c] = 0.0;
    }

    for (auto& [query_id, entries] : grouped) {
        auto judged = qrels.find(query_id);
        if (judged == qrels.end()) {
            std::cerr << "warning: query \"" << query_id << "\" has no relevance judgments; skipped\n";
            result.skipped.push_back(query_id);
            continue;
        }
        std::sort(entries.begin(), entries.end(),
                  [](const RunEntry* a, const RunEntry* b) { return a->rank < b->rank; });

        const auto& grades = judged->second;
        std::size_t total_relevant = 0;
        std::vector<int> ideal_grades;
        for (const auto& [doc_id, grade] : grades) {
            if (grade > 0) {
                ++total_relevant;
            }
            ideal_grades.push_back(grade);
        }
        std::sort(ideal_grades.begin(), ideal_grades.end(), std::greater<>());

        QueryMetrics metrics;
        std::size_t relevant_seen = 0;
        double ap_sum = 0.0;
        std::vector<int> ranked_grades;
        ranked_grades.reserve(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            auto grade_it = grades.find(entries[i]->doc_id);
            int grade = grade_it == grades.end() ? 0 : grade_it->second;
            ranked_grades.push_back(grade);
            if (grade > 0) {
                ++relevant_seen;
                ap_sum += static_cast<double>(relevant_seen) / static_cast<double>(i + 1);
            }
        }
        metrics.ap = total_relevant == 0 ? 0.0 : ap_sum / static_cast<double>(total_relevant);

        for (int c : cutoffs) {
            auto depth = static_cast<std::size_t>(c);
            std::size_t relevant_at_c = 0;
            double dcg = 0.0;
            for (std::size_t i = 0; i < std::min(depth, ranked_grades.size()); ++i) {
                if (ranked_grades[i] > 0) {
                    ++relevant_at_c;
                }
                dcg += (std::exp2(ranked_grades[i]) - 1.0) /
                       std::log2(static_cast<double>(i) + 2.0);
            }
            double idcg = 0.0;
            for (std::size_t i = 0; i < std::min(depth, ideal_grades.size()); ++i) {
                idcg += (std::exp2(ideal_grades[i]) - 1.0) /
                        std::log2(static_cast<double>(i) + 2.0);
            }
            metrics.p_at[c] = static_cast<double>(relevant_at_c) / static_cast<double>(c);
            metrics.ndcg_at[c] = idcg == 0.0 ? 0.0 : dcg / idcg;
        }

        if (total_relevant > 0) {
            ++result.evaluated;
            result.mean.ap += metrics.ap;
            for (int c : cutoffs) {
                result.mean.p_at[c] += metrics.p_at[c];
                result.mean.ndcg_at[c] += metrics.ndcg_at[c];
            }
        }
        result.per_query.emplace_back(query_id, std::move(metrics));
    }

    if (result.evaluated > 0) {
        result.mean.ap /= static_cast<double>(result.evaluated);
        for (int c : cutoffs) {
            result.mean.p_at[c] /= static_cast<double>(result.evaluated);
            result.mean.ndcg_at[c] /= static_cast<double>(result.evaluated);
        }
    }
    return result;
}

}  // namespace seine
