#include "seine/retrieval.hpp"

#include <algorithm>
#include <cmath>

namespace seine {

KernelPoolConfig KernelPoolConfig::defaults() {
    KernelPoolConfig config;
    for (int i = 0; i < 10; ++i) {
        config.mus.push_back(-0.9 + 0.2 * i);
        config.sigmas.push_back(0.1);
        config.weights.push_back(1.0);
    }
    config.mus.push_back(1.0);
    config.sigmas.push_back(0.001);
    config.weights.push_back(1.0);
    return config;
}

void KernelPoolConfig::validate() const {
    if (mus.empty() || mus.size() != sigmas.size() || mus.size() != weights.size()) {
        throw ConfigError("kernel pool needs equal, non-empty mus/sigmas/weights lists");
    }
    for (double s : sigmas) {
        if (s <= 0.0) {
            throw ConfigError("kernel widths must be > 0");
        }
    }
}

ScorerKind scorer_from_name(std::string_view name) {
    if (name == "dot") {
        return ScorerKind::Dot;
    }
    if (name == "bm25") {
        return ScorerKind::Bm25;
    }
    if (name == "bm25-deepct") {
        return ScorerKind::Bm25Deepct;
    }
    if (name == "kernel") {
        return ScorerKind::KernelPool;
    }
    throw ConfigError("unknown scorer \"" + std::string(name) +
                      "\" (expected dot, bm25, bm25-deepct, or kernel)");
}

std::string_view scorer_name(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::Dot: return "dot";
        case ScorerKind::Bm25: return "bm25";
        case ScorerKind::Bm25Deepct: return "bm25-deepct";
        case ScorerKind::KernelPool: return "kernel";
    }
    return "dot";
}

namespace {

Fn required_fn(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::Dot: return Fn::Dot;
        case ScorerKind::Bm25: return Fn::Tf;
        case ScorerKind::Bm25Deepct: return Fn::Linagg;
        case ScorerKind::KernelPool: return Fn::Cos;
    }
    return Fn::Dot;
}

}  // namespace

Scorer::Scorer(ScorerKind kind, const IndexHeader& header, const Vocabulary& vocab,
               ScorerOptions options)
    : kind_(kind),
      vocab_(&vocab),
      options_(std::move(options)),
      n_b_(header.n_b),
      n_f_(header.n_f),
      avg_doc_len_(header.avg_doc_len) {
    Fn fn = required_fn(kind);
    auto column = header.schema.column(fn);
    if (!column) {
        throw ConfigError("scorer \"" + std::string(scorer_name(kind)) +
                          "\" requires interaction function \"" + std::string(fn_name(fn)) +
                          "\", which the index schema \"" + header.schema.to_string() +
                          "\" does not include");
    }
    column_ = *column;
    if (kind_ == ScorerKind::KernelPool) {
        options_.kernels.validate();
    }
}

double Scorer::okapi(double term_weight, double idf, std::uint32_t doc_length) const {
    if (term_weight <= 0.0) {
        return 0.0;
    }
    double K = options_.k1 * ((1.0 - options_.b) +
                              options_.b * static_cast<double>(doc_length) / avg_doc_len_);
    return idf * term_weight * (options_.k1 + 1.0) / (term_weight + K);
}

double Scorer::score(const QDAssembly& assembly, const QDMatrix& matrix,
                     std::uint32_t doc_length) const {
    auto block_values = static_cast<std::size_t>(n_b_) * n_f_;
    double total = 0.0;
    for (std::size_t row = 0; row < assembly.query_terms.size(); ++row) {
        const float* block = matrix.rows.data() + row * block_values;
        switch (kind_) {
            case ScorerKind::Dot: {
                for (std::uint32_t k = 0; k < n_b_; ++k) {
                    total += static_cast<double>(block[k * n_f_ + column_]);
                }
                break;
            }
            case ScorerKind::Bm25:
            case ScorerKind::Bm25Deepct: {
                double term_weight = 0.0;
                for (std::uint32_t k = 0; k < n_b_; ++k) {
                    term_weight += static_cast<double>(block[k * n_f_ + column_]);
                }
                if (kind_ == ScorerKind::Bm25Deepct) {
                    term_weight = std::max(0.0, term_weight);
                }
                double idf = vocab_->idf[assembly.term_ids[row]];
                total += okapi(term_weight, idf, doc_length);
                break;
            }
            case ScorerKind::KernelPool: {
                const auto& kernels = options_.kernels;
                for (std::size_t j = 0; j < kernels.mus.size(); ++j) {
                    double phi = 0.0;
                    for (std::uint32_t k = 0; k < n_b_; ++k) {
                        double v = static_cast<double>(block[k * n_f_ + column_]);
                        double d = v - kernels.mus[j];
                        phi += std::exp(-d * d / (2.0 * kernels.sigmas[j] * kernels.sigmas[j]));
                    }
                    total += kernels.weights[j] * std::log(std::max(phi, 1e-10));
                }
                break;
            }
        }
    }
    return total;
}

std::vector<ScoredDoc> score_all(const Scorer& scorer, const QDAssembly& assembly,
                                 const SegmentIndex& index) {
    std::vector<ScoredDoc> scored;
    scored.reserve(assembly.matrices.size());
    for (const auto& matrix : assembly.matrices) {
        const DocInfo& doc = index.docs[matrix.doc];
        scored.push_back({doc.id, scorer.score(assembly, matrix, doc.length)});
    }
    return scored;
}

std::vector<ScoredDoc> rank_topk(std::vector<ScoredDoc> scored, std::size_t k) {
    std::sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.doc_id < b.doc_id;
    });
    if (scored.size() > k) {
        scored.resize(k);
    }
    return scored;
}

OnTheFly::OnTheFly(const Vocabulary* vocab, SegmenterConfig segmenter, InteractionSchema schema,
                   std::shared_ptr<const EmbeddingProvider> provider, FunctionParams params,
                   std::uint32_t sigma_index)
    : vocab_(vocab),
      segmenter_(segmenter),
      engine_(std::move(schema), std::move(provider), std::move(params), vocab),
      sigma_index_(sigma_index) {
    if (vocab_ == nullptr) {
        throw ConfigError("on-the-fly scoring requires a vocabulary");
    }
}

std::vector<std::string> OnTheFly::match_terms(std::span<const std::string> query_tokens) const {
    std::vector<std::string> matched;
    for (const auto& token : query_tokens) {
        if (vocab_->contains(token)) {
            matched.push_back(token);
        }
    }
    return matched;
}

QDMatrix OnTheFly::build_matrix(std::span<const std::string> matched_terms,
                                const Document& doc) const {
    auto n_f = static_cast<std::uint32_t>(engine_.n_f());
    auto block_values = static_cast<std::size_t>(segmenter_.n_b) * n_f;

    auto segmented = segment_document(doc, segmenter_);
    std::vector<SegmentContext> contexts;
    contexts.reserve(segmented.segments.size());
    StringMap<std::uint32_t> doc_tf;
    for (const Segment& segment : segmented.segments) {
        contexts.push_back(engine_.make_segment_context(segment));
        for (const auto& [token, positions] : contexts.back().positions) {
            doc_tf[token] += static_cast<std::uint32_t>(positions.size());
        }
    }

    auto padding = engine_.padding_vector();
    QDMatrix matrix;
    matrix.rows.resize(matched_terms.size() * block_values);
    for (std::size_t row = 0; row < matched_terms.size(); ++row) {
        float* block = matrix.rows.data() + row * block_values;
        auto it = doc_tf.find(matched_terms[row]);
        std::uint32_t term_tf = it == doc_tf.end() ? 0 : it->second;
        if (term_tf <= sigma_index_) {
            // Same convention as a missing posting entry.
            for (std::uint32_t k = 0; k < segmenter_.n_b; ++k) {
                std::copy(padding.begin(), padding.end(),
                          block + static_cast<std::size_t>(k) * n_f);
            }
            continue;
        }
        auto term_ctx = engine_.make_term_context(matched_terms[row]);
        for (std::uint32_t k = 0; k < segmenter_.n_b; ++k) {
            engine_.evaluate(term_ctx, contexts[k],
                             std::span<float>(block + static_cast<std::size_t>(k) * n_f, n_f));
        }
    }
    return matrix;
}

double OnTheFly::score(std::span<const std::string> query_tokens, const Document& doc,
                       const Scorer& scorer) const {
    QDAssembly assembly;
    assembly.n_b = segmenter_.n_b;
    assembly.n_f = static_cast<std::uint32_t>(engine_.n_f());
    assembly.query_terms = match_terms(query_tokens);
    assembly.term_ids.reserve(assembly.query_terms.size());
    for (const auto& term : assembly.query_terms) {
        assembly.term_ids.push_back(*vocab_->id_of(term));
    }
    QDMatrix matrix = build_matrix(assembly.query_terms, doc);
    return scorer.score(assembly, matrix, static_cast<std::uint32_t>(doc.tokens.size()));
}

}  // namespace seine
