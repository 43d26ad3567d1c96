#include "seine/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace seine {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        if (alnum) {
            if (c >= 'A' && c <= 'Z') {
                c = static_cast<unsigned char>(c - 'A' + 'a');
            }
            current.push_back(static_cast<char>(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::vector<Document> load_corpus(const std::string& path, const Tokenizer& tokenizer) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open corpus file: " + path);
    }

    std::vector<Document> docs;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed corpus line: " +
                          e.what());
        }
        if (!obj.is_object()) {
            throw IoError(path + ":" + std::to_string(line_no) + ": corpus line is not an object");
        }
        for (const char* field : {"id", "text"}) {
            if (!obj.contains(field) || !obj[field].is_string()) {
                throw IoError(path + ":" + std::to_string(line_no) +
                              ": corpus line missing string field \"" + field + "\"");
            }
        }
        Document doc;
        doc.id = obj["id"].get<std::string>();
        doc.text = obj["text"].get<std::string>();
        if (doc.id.empty()) {
            throw IoError(path + ":" + std::to_string(line_no) + ": empty document id");
        }
        if (!seen_ids.insert(doc.id).second) {
            throw IoError(path + ":" + std::to_string(line_no) + ": duplicate document id \"" +
                          doc.id + "\"");
        }
        doc.tokens = tokenizer(doc.text);
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::uint32_t document_frequency(std::span<const Document> docs, std::string_view term) {
    std::uint32_t count = 0;
    for (const auto& doc : docs) {
        for (const auto& token : doc.tokens) {
            if (token == term) {
                ++count;
                break;
            }
        }
    }
    return count;
}

Vocabulary build_vocabulary(std::span<const Document> docs, double prune_top,
                            double prune_bottom) {
    if (docs.empty()) {
        throw Error("build_vocabulary: empty corpus");
    }
    if (prune_top < 0.0 || prune_bottom < 0.0 || prune_top + prune_bottom >= 1.0) {
        throw ConfigError("build_vocabulary: prune fractions must be non-negative and sum to < 1");
    }

    StringMap<std::uint64_t> cf;
    StringMap<std::uint32_t> df;
    std::uint64_t total_tokens = 0;
    {
        std::unordered_set<std::string_view> in_doc;
        for (const auto& doc : docs) {
            in_doc.clear();
            for (const auto& token : doc.tokens) {
                auto [it, fresh] = cf.try_emplace(token, 0);
                ++it->second;
                if (in_doc.insert(it->first).second) {
                    ++df[it->first];
                }
            }
            total_tokens += doc.tokens.size();
        }
    }

    // Rank by collection frequency, most frequent first, ties lexicographic.
    std::vector<std::pair<std::string_view, std::uint64_t>> ranked;
    ranked.reserve(cf.size());
    for (const auto& [term, freq] : cf) {
        ranked.emplace_back(term, freq);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });

    auto unique_terms = ranked.size();
    auto drop_top = static_cast<std::size_t>(std::ceil(prune_top * static_cast<double>(unique_terms)));
    auto drop_bottom =
        static_cast<std::size_t>(std::ceil(prune_bottom * static_cast<double>(unique_terms)));
    if (drop_top + drop_bottom >= unique_terms) {
        throw Error("build_vocabulary: empty vocabulary after pruning");
    }

    Vocabulary vocab;
    vocab.terms.reserve(unique_terms - drop_top - drop_bottom);
    for (std::size_t i = drop_top; i < unique_terms - drop_bottom; ++i) {
        vocab.terms.emplace_back(ranked[i].first);
    }
    std::sort(vocab.terms.begin(), vocab.terms.end());

    vocab.collection_size = static_cast<std::uint32_t>(docs.size());
    vocab.total_tokens = total_tokens;
    vocab.avg_doc_len = static_cast<double>(total_tokens) / static_cast<double>(docs.size());
    vocab.df.resize(vocab.terms.size());
    vocab.idf.resize(vocab.terms.size());
    vocab.cf.resize(vocab.terms.size());
    for (std::uint32_t id = 0; id < vocab.terms.size(); ++id) {
        const auto& term = vocab.terms[id];
        vocab.term_ids.emplace(term, id);
        vocab.df[id] = df.find(term)->second;
        vocab.cf[id] = cf.find(term)->second;
        vocab.idf[id] = std::log(static_cast<double>(vocab.collection_size) /
                                 (static_cast<double>(vocab.df[id]) + 1.0));
    }
    return vocab;
}

}  // namespace seine
