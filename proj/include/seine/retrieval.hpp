#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seine/index.hpp"

namespace seine {

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
};

/// Fixed-weight kernel pooling over stored cosine values.
struct KernelPoolConfig {
    std::vector<double> mus;
    std::vector<double> sigmas;
    std::vector<double> weights;

    /// Ten soft-match kernels at 0.2 spacing plus one near-exact kernel.
    static KernelPoolConfig defaults();
    void validate() const;  // throws ConfigError
};

enum class ScorerKind { Dot, Bm25, Bm25Deepct, KernelPool };

ScorerKind scorer_from_name(std::string_view name);  // throws ConfigError
std::string_view scorer_name(ScorerKind kind);

struct ScorerOptions {
    double k1 = 1.2;
    double b = 0.75;
    KernelPoolConfig kernels = KernelPoolConfig::defaults();
};

/// Scores one q-d matrix. Construction fails with ConfigError when the index
/// schema lacks the function the scorer consumes.
class Scorer {
public:
    Scorer(ScorerKind kind, const IndexHeader& header, const Vocabulary& vocab,
           ScorerOptions options = {});

    ScorerKind kind() const { return kind_; }

    double score(const QDAssembly& assembly, const QDMatrix& matrix,
                 std::uint32_t doc_length) const;

private:
    ScorerKind kind_;
    const Vocabulary* vocab_;
    ScorerOptions options_;
    std::uint32_t n_b_ = 0;
    std::uint32_t n_f_ = 0;
    double avg_doc_len_ = 0.0;
    int column_ = 0;

    double okapi(double term_weight, double idf, std::uint32_t doc_length) const;
};

/// Scores every candidate in the assembly, in ascending doc ordinal.
std::vector<ScoredDoc> score_all(const Scorer& scorer, const QDAssembly& assembly,
                                 const SegmentIndex& index);

/// Top k by descending score, ties broken by ascending doc id; ranks are
/// implied by position (1-based).
std::vector<ScoredDoc> rank_topk(std::vector<ScoredDoc> scored, std::size_t k);

/// Reference path: builds q-d matrices directly from raw text with the same
/// shapes and sparsity filter as the index, bypassing posting lists. Used for
/// oracle checks and as the no-index benchmark arm. Re-segments the document
/// on every call.
class OnTheFly {
public:
    OnTheFly(const Vocabulary* vocab, SegmenterConfig segmenter, InteractionSchema schema,
             std::shared_ptr<const EmbeddingProvider> provider, FunctionParams params,
             std::uint32_t sigma_index);

    const InteractionSchema& schema() const { return engine_.schema(); }
    std::uint32_t n_b() const { return segmenter_.n_b; }

    /// Matched query terms, as assemble_qd would produce them.
    std::vector<std::string> match_terms(std::span<const std::string> query_tokens) const;

    /// The q-d matrix for one document; `matrix.doc` is left at 0 (no
    /// ordinal exists outside an index).
    QDMatrix build_matrix(std::span<const std::string> matched_terms, const Document& doc) const;

    /// Full scoring path for one (query, document) pair.
    double score(std::span<const std::string> query_tokens, const Document& doc,
                 const Scorer& scorer) const;

private:
    const Vocabulary* vocab_;
    SegmenterConfig segmenter_;
    InteractionEngine engine_;
    std::uint32_t sigma_index_;
};

}  // namespace seine
