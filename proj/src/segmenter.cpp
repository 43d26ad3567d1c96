#include "seine/segmenter.hpp"

#include <cmath>
#include <stdexcept>

namespace seine {

SegmentMode segment_mode_from_name(std::string_view name) {
    if (name == "tiling") {
        return SegmentMode::Tiling;
    }
    if (name == "document") {
        return SegmentMode::Document;
    }
    if (name == "term") {
        return SegmentMode::Term;
    }
    throw ConfigError("unknown segment mode \"" + std::string(name) +
                      "\" (expected tiling, document, or term)");
}

std::string_view segment_mode_name(SegmentMode mode) {
    switch (mode) {
        case SegmentMode::Tiling: return "tiling";
        case SegmentMode::Document: return "document";
        case SegmentMode::Term: return "term";
    }
    return "tiling";
}

double window_similarity(std::span<const std::string> left, std::span<const std::string> right) {
    if (left.empty() || right.empty()) {
        throw std::invalid_argument("window_similarity: empty window");
    }
    StringMap<std::pair<std::uint32_t, std::uint32_t>> counts;
    for (const auto& token : left) {
        counts[token].first++;
    }
    for (const auto& token : right) {
        counts[token].second++;
    }
    double dot = 0.0;
    double left_sq = 0.0;
    double right_sq = 0.0;
    for (const auto& [token, c] : counts) {
        dot += static_cast<double>(c.first) * static_cast<double>(c.second);
        left_sq += static_cast<double>(c.first) * static_cast<double>(c.first);
        right_sq += static_cast<double>(c.second) * static_cast<double>(c.second);
    }
    if (dot == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(left_sq) * std::sqrt(right_sq));
}

std::vector<std::vector<std::string>> texttile(const Document& doc, std::uint32_t window,
                                               double depth_cutoff_stddev) {
    if (window < 1) {
        throw std::invalid_argument("texttile: window must be >= 1");
    }
    const auto& tokens = doc.tokens;
    if (tokens.empty()) {
        return {};
    }
    if (tokens.size() <= window) {
        return {tokens};
    }

    // Gap-similarity series at every interior window boundary.
    std::vector<std::size_t> gap_positions;
    std::vector<double> sims;
    for (std::size_t pos = window; pos < tokens.size(); pos += window) {
        std::span<const std::string> left(tokens.data() + pos - window, window);
        std::span<const std::string> right(tokens.data() + pos,
                                           std::min<std::size_t>(window, tokens.size() - pos));
        gap_positions.push_back(pos);
        sims.push_back(window_similarity(left, right));
    }

    // Depth at a gap: climb to the nearest peak on each side while the
    // similarity rises, then add both drops.
    auto n_gaps = sims.size();
    std::vector<double> depths(n_gaps);
    for (std::size_t i = 0; i < n_gaps; ++i) {
        double left_peak = sims[i];
        for (std::size_t j = i; j-- > 0;) {
            if (sims[j] >= left_peak) {
                left_peak = sims[j];
            } else {
                break;
            }
        }
        double right_peak = sims[i];
        for (std::size_t j = i + 1; j < n_gaps; ++j) {
            if (sims[j] >= right_peak) {
                right_peak = sims[j];
            } else {
                break;
            }
        }
        depths[i] = (left_peak - sims[i]) + (right_peak - sims[i]);
    }

    double mean = 0.0;
    for (double d : depths) {
        mean += d;
    }
    mean /= static_cast<double>(n_gaps);
    double variance = 0.0;
    for (double d : depths) {
        variance += (d - mean) * (d - mean);
    }
    variance /= static_cast<double>(n_gaps);
    double cutoff = mean + depth_cutoff_stddev * std::sqrt(variance);

    std::vector<std::vector<std::string>> segments;
    std::size_t start = 0;
    for (std::size_t i = 0; i < n_gaps; ++i) {
        if (depths[i] > cutoff) {
            segments.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                  tokens.begin() + static_cast<std::ptrdiff_t>(gap_positions[i]));
            start = gap_positions[i];
        }
    }
    segments.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(start), tokens.end());
    return segments;
}

SegmentedDocument standardize(std::string doc_id, std::vector<std::vector<std::string>> raw,
                              std::uint32_t n_b) {
    if (n_b < 1) {
        throw std::invalid_argument("standardize: n_b must be >= 1");
    }
    SegmentedDocument result;
    result.doc_id = std::move(doc_id);
    result.raw_segment_count = static_cast<std::uint32_t>(raw.size());
    result.segments.reserve(n_b);

    auto add_segment = [&](std::vector<std::string> tokens) {
        Segment seg;
        seg.doc_id = result.doc_id;
        seg.index = static_cast<std::uint32_t>(result.segments.size());
        seg.tokens = std::move(tokens);
        result.segments.push_back(std::move(seg));
    };

    if (raw.size() <= n_b) {
        for (auto& tokens : raw) {
            add_segment(std::move(tokens));
        }
        while (result.segments.size() < n_b) {
            add_segment({});
        }
    } else {
        for (std::uint32_t k = 0; k + 1 < n_b; ++k) {
            add_segment(std::move(raw[k]));
        }
        std::vector<std::string> tail;
        for (std::size_t k = n_b - 1; k < raw.size(); ++k) {
            tail.insert(tail.end(), std::make_move_iterator(raw[k].begin()),
                        std::make_move_iterator(raw[k].end()));
        }
        add_segment(std::move(tail));
    }
    return result;
}

SegmentedDocument segment_document(const Document& doc, const SegmenterConfig& config) {
    std::vector<std::vector<std::string>> raw;
    switch (config.mode) {
        case SegmentMode::Tiling:
            raw = texttile(doc, config.window, config.depth_cutoff_stddev);
            break;
        case SegmentMode::Document:
            if (!doc.tokens.empty()) {
                raw.push_back(doc.tokens);
            }
            break;
        case SegmentMode::Term:
            raw.reserve(doc.tokens.size());
            for (const auto& token : doc.tokens) {
                raw.push_back({token});
            }
            break;
    }
    return standardize(doc.id, std::move(raw), config.n_b);
}

}  // namespace seine
