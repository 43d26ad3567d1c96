#include "seine/bench.hpp"

#include <chrono>

namespace seine {

BenchReport run_benchmark(const SegmentIndex& index, std::span<const Document> docs,
                          std::span<const std::vector<std::string>> queries,
                          const OnTheFly& onthefly, std::uint32_t repetitions) {
    if (repetitions < 1) {
        throw ConfigError("bench.repetitions must be >= 1");
    }

    // Resolve each query's candidates up front so both arms work on the same
    // (query, document) pairs.
    StringMap<const Document*> doc_by_id;
    for (const auto& doc : docs) {
        doc_by_id.emplace(doc.id, &doc);
    }
    struct PreparedQuery {
        std::vector<std::string> tokens;
        std::vector<std::string> matched;
        std::vector<const Document*> candidates;
    };
    std::vector<PreparedQuery> prepared;
    std::uint64_t pairs = 0;
    for (const auto& query : queries) {
        PreparedQuery pq;
        pq.tokens = query;
        pq.matched = onthefly.match_terms(query);
        auto assembly = assemble_qd(index, query);
        for (const auto& matrix : assembly.matrices) {
            auto it = doc_by_id.find(index.docs[matrix.doc].id);
            if (it == doc_by_id.end()) {
                throw Error("benchmark corpus is missing document \"" +
                            index.docs[matrix.doc].id + "\"");
            }
            pq.candidates.push_back(it->second);
        }
        pairs += pq.candidates.size();
        prepared.push_back(std::move(pq));
    }
    if (pairs == 0) {
        throw Error("benchmark queries matched no documents");
    }

    using clock = std::chrono::steady_clock;
    double index_total_us = 0.0;
    double fly_total_us = 0.0;
    // `sink` keeps the measured work observable.
    double sink = 0.0;

    for (std::uint32_t rep = 0; rep < repetitions; ++rep) {
        auto t0 = clock::now();
        for (const auto& pq : prepared) {
            auto assembly = assemble_qd(index, pq.tokens);
            for (const auto& matrix : assembly.matrices) {
                sink += matrix.rows.empty() ? 0.0 : static_cast<double>(matrix.rows.front());
            }
        }
        auto t1 = clock::now();
        for (const auto& pq : prepared) {
            for (const Document* doc : pq.candidates) {
                auto matrix = onthefly.build_matrix(pq.matched, *doc);
                sink += matrix.rows.empty() ? 0.0 : static_cast<double>(matrix.rows.front());
            }
        }
        auto t2 = clock::now();
        index_total_us += std::chrono::duration<double, std::micro>(t1 - t0).count();
        fly_total_us += std::chrono::duration<double, std::micro>(t2 - t1).count();
    }

    BenchReport report;
    report.pairs_per_rep = pairs;
    report.repetitions = repetitions;
    auto total_pairs = static_cast<double>(pairs) * repetitions;
    report.index_us_per_pair = index_total_us / total_pairs;
    report.onthefly_us_per_pair = fly_total_us / total_pairs;
    report.speedup = report.index_us_per_pair > 0.0
                         ? report.onthefly_us_per_pair / report.index_us_per_pair
                         : 0.0;
    (void)sink;
    return report;
}

}  // namespace seine
