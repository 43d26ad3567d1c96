#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "seine/corpus.hpp"
#include "seine/interactions.hpp"
#include "seine/segmenter.hpp"

namespace seine {

inline constexpr std::array<unsigned char, 8> kIndexMagic = {'S', 'E', 'I', 'N', 'E', 0, 0, 1};
inline constexpr const char* kIndexExtension = ".seine";

struct IndexHeader {
    std::uint32_t vocab_size = 0;
    std::uint32_t n_b = 0;
    std::uint32_t n_f = 0;
    InteractionSchema schema;
    std::uint32_t sigma_index = 0;
    std::uint32_t doc_count = 0;
    double avg_doc_len = 0.0;
    float log_floor = -30.0f;
    std::uint64_t build_config_hash = 0;  ///< FNV-1a64 over build_config
    std::string build_config;             ///< canonical build configuration text
};

struct DocInfo {
    std::string id;
    std::uint32_t length = 0;                    ///< token count of the whole document
    std::vector<std::uint32_t> segment_lengths;  ///< n_b entries
};

struct PostingEntry {
    std::uint32_t doc = 0;     ///< ordinal into SegmentIndex::docs
    std::vector<float> block;  ///< n_b x n_f values, row-major by segment
};

/// Build configuration for the index. `workers` affects only wall time; the
/// produced index is byte-identical for any worker count.
struct BuildConfig {
    SegmenterConfig segmenter;
    InteractionSchema schema;
    FunctionParams params;
    std::uint32_t sigma_index = 0;
    int workers = 1;
    double prune_top = 0.1;
    double prune_bottom = 0.1;
    std::string embedding_signature = "none";  ///< e.g. "file:<path>" or "pseudo:16:42"

    /// Sorted key=value lines covering everything that shapes index content
    /// (workers excluded). Hashed into the header.
    std::string canonical_text() const;
};

/// Segment-level inverted index: per retained term, the documents containing
/// it with one n_b x n_f interaction block each. Immutable after build/load.
class SegmentIndex {
public:
    IndexHeader header;
    Vocabulary vocab;
    std::vector<DocInfo> docs;                        ///< ascending doc id
    std::vector<std::vector<PostingEntry>> postings;  ///< per term id

    /// Posting list for a term; empty for out-of-vocabulary or fully
    /// filtered terms.
    std::span<const PostingEntry> lookup(std::string_view term) const;

    const DocInfo* find_doc(std::string_view doc_id) const;

    std::size_t posting_count() const;
    std::size_t block_values() const { return static_cast<std::size_t>(header.n_b) * header.n_f; }

    void save(const std::string& path) const;
    static SegmentIndex load(const std::string& path);
};

/// Computes interaction blocks for every (term, document) pair with
/// document-level tf > sigma_index and shapes them into per-term posting
/// lists. Deterministic for any worker count.
SegmentIndex build_index(std::span<const Document> docs, Vocabulary vocab,
                         const BuildConfig& config,
                         std::shared_ptr<const EmbeddingProvider> provider);

/// Query-document interaction matrix for one candidate document: one
/// n_b x n_f block per matched query term, in query order.
struct QDMatrix {
    std::uint32_t doc = 0;     ///< ordinal into SegmentIndex::docs
    std::vector<float> rows;   ///< terms x n_b x n_f

    std::span<const float> row(std::size_t term_row, std::size_t block_values) const {
        return {rows.data() + term_row * block_values, block_values};
    }
};

/// Matrices for every candidate document of one query. Rows are stacked in
/// query order over the query terms found in the vocabulary (duplicates
/// kept); documents absent from a term's posting list get an all-zero block
/// with logp at the log floor.
struct QDAssembly {
    std::vector<std::string> query_terms;  ///< matched terms, query order
    std::vector<std::uint32_t> term_ids;
    std::uint32_t n_b = 0;
    std::uint32_t n_f = 0;
    std::vector<QDMatrix> matrices;  ///< ascending doc ordinal

    std::size_t block_values() const { return static_cast<std::size_t>(n_b) * n_f; }
};

/// Assembles q-d matrices by posting-list lookup. The candidate set defaults
/// to the union of the matched terms' posting documents; pass `candidates`
/// (ascending ordinals) to override.
QDAssembly assemble_qd(const SegmentIndex& index, std::span<const std::string> query_tokens,
                       const std::vector<std::uint32_t>* candidates = nullptr);

}  // namespace seine
