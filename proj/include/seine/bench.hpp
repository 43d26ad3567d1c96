#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seine/index.hpp"
#include "seine/retrieval.hpp"

namespace seine {

struct BenchReport {
    double index_us_per_pair = 0.0;     ///< q-d matrix assembly via posting lookup
    double onthefly_us_per_pair = 0.0;  ///< q-d matrix construction from raw text
    double speedup = 0.0;               ///< onthefly / index
    std::uint64_t pairs_per_rep = 0;
    std::uint32_t repetitions = 0;
};

/// Paired comparison of matrix construction: for every query, assembles the
/// q-d matrices of the index-derived candidate set once via posting lookup
/// and once from raw document text, with both arms interleaved per
/// repetition. Documents must cover every candidate of the index.
BenchReport run_benchmark(const SegmentIndex& index, std::span<const Document> docs,
                          std::span<const std::vector<std::string>> queries,
                          const OnTheFly& onthefly, std::uint32_t repetitions);

}  // namespace seine
