#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seine/corpus.hpp"

namespace seine {

enum class SegmentMode {
    Tiling,    ///< topical segments from lexical-cohesion valleys
    Document,  ///< one segment holding the whole document
    Term,      ///< one single-token segment per token
};

SegmentMode segment_mode_from_name(std::string_view name);  // throws ConfigError
std::string_view segment_mode_name(SegmentMode mode);

struct SegmenterConfig {
    SegmentMode mode = SegmentMode::Tiling;
    std::uint32_t window = 20;
    std::uint32_t n_b = 20;
    double depth_cutoff_stddev = 0.5;
};

struct Segment {
    std::string doc_id;
    std::uint32_t index = 0;          ///< position within the document, 0..n_b-1
    std::vector<std::string> tokens;  ///< empty for padding segments

    bool empty() const { return tokens.empty(); }
};

struct SegmentedDocument {
    std::string doc_id;
    std::vector<Segment> segments;           ///< exactly n_b entries
    std::uint32_t raw_segment_count = 0;     ///< segment count before padding/squeezing
};

/// Cosine similarity of the two windows' term-frequency vectors; 0 when they
/// share no terms. Both windows must be non-empty.
double window_similarity(std::span<const std::string> left, std::span<const std::string> right);

/// Partitions the document at window boundaries whose gap-similarity depth
/// score exceeds mean + depth_cutoff_stddev * stddev. Every token lands in
/// exactly one segment; a non-empty document yields at least one segment and
/// an empty document yields none.
std::vector<std::vector<std::string>> texttile(const Document& doc, std::uint32_t window,
                                               double depth_cutoff_stddev = 0.5);

/// Standardizes a raw segmentation to exactly n_b segments: pads with empty
/// segments when there are at most n_b, otherwise keeps the first n_b - 1 and
/// squeezes the remainder into the final segment.
SegmentedDocument standardize(std::string doc_id, std::vector<std::vector<std::string>> raw,
                              std::uint32_t n_b);

/// Mode dispatch (tiling / document / term) followed by standardize.
SegmentedDocument segment_document(const Document& doc, const SegmenterConfig& config);

}  // namespace seine
