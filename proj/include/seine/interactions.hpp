#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seine/corpus.hpp"
#include "seine/embeddings.hpp"
#include "seine/segmenter.hpp"

namespace seine {

/// Atomic interaction functions. The numeric values are part of the index
/// file format; append only.
enum class Fn : std::uint8_t {
    Tf = 0,      ///< occurrence count of the term in the segment
    Iidf = 1,    ///< idf gated by segment membership
    Dot = 2,     ///< sum of embedding dot products over segment tokens
    Cos = 3,     ///< sum of embedding cosines over segment tokens
    Gauss = 4,   ///< max Gaussian kernel over segment tokens
    Linagg = 5,  ///< linear map of the mean contextual vector
    Maxsp = 6,   ///< max log-softplus-transformed dot over segment tokens
    Mlp = 7,     ///< feed-forward net on the mean contextual vector
    Logp = 8,    ///< log conditional probability (smoothed unigram)
};

inline constexpr int kFnCount = 9;

std::string_view fn_name(Fn fn);
std::optional<Fn> fn_from_name(std::string_view name);

/// Ordered, duplicate-free list of interaction functions. The order is fixed
/// at index build time and recorded in the index header.
struct InteractionSchema {
    std::vector<Fn> functions;

    /// Parses "tf,iidf,cos,..." (case-insensitive). Throws ConfigError on
    /// unknown or duplicate identifiers, or an empty list.
    static InteractionSchema parse(std::string_view csv);
    std::string to_string() const;

    int n_f() const { return static_cast<int>(functions.size()); }
    std::optional<int> column(Fn fn) const;
    bool contains(Fn fn) const { return column(fn).has_value(); }

    bool needs_embeddings() const;  ///< any of dot/cos/gauss/linagg/maxsp/mlp
    bool needs_contextual() const;  ///< linagg or mlp
};

struct MlpLayer {
    std::vector<std::vector<float>> weights;  ///< weights[out][in]
    std::vector<float> bias;                  ///< one per output
};

/// Fixed parameters of the parameterized interaction functions.
struct FunctionParams {
    std::vector<float> a;       ///< linagg weight vector (provider dim)
    float b = 0.0f;             ///< linagg bias
    std::vector<float> p;       ///< maxsp projection vector (reserved)
    std::vector<MlpLayer> mlp;  ///< layer dims chain provider dim -> 1
    double mu = 10.0;           ///< Dirichlet smoothing mass for logp
    float log_floor = -30.0f;   ///< logp value for zero-probability cases
    double gauss_sigma2 = 1.0;  ///< Gaussian kernel bandwidth divisor
    bool maxsp_softplus_only = false;  ///< use softplus(x) instead of ln(softplus(x))

    /// Zero weights, zero bias, single zero MLP layer: every parameterized
    /// function evaluates to 0 until real parameters are supplied.
    static FunctionParams defaults(int dim);

    /// JSON object with keys "a", "b", "p", "mlp" (list of {weights, bias}),
    /// "mu", "log_floor"; absent keys keep their defaults.
    static FunctionParams load(const std::string& path, int dim);

    /// Checks vector/matrix dimensions against the provider dim for every
    /// function the schema uses. Throws ConfigError.
    void validate(int dim, const InteractionSchema& schema) const;
    void validate_mlp(int dim) const;

    /// Canonical serialization used for config hashing.
    std::string fingerprint() const;
};

/// One value per schema function, in schema order.
using InteractionVector = std::vector<float>;

// --- the nine atomic functions, one call per (term, segment) pair ---

double tf(std::string_view w, std::span<const std::string> segment_tokens);

/// idf(w) when w occurs in the segment, else 0. w must be in the vocabulary.
double indicative_idf(std::string_view w, std::span<const std::string> segment_tokens,
                      const Vocabulary& vocab);

double dot_sum(std::string_view w, std::span<const std::string> segment_tokens,
               const EmbeddingProvider& provider);

/// Tokens whose embedding (or E(w)) has zero norm contribute 0.
double cosine_sum(std::string_view w, std::span<const std::string> segment_tokens,
                  const EmbeddingProvider& provider);

double gaussian_max(std::string_view w, std::span<const std::string> segment_tokens,
                    const EmbeddingProvider& provider, double sigma2 = 1.0);

/// a . mean contextual vector of w's occurrences + b; 0 when w is absent.
double linear_agg(std::string_view w, const Segment& segment, const EmbeddingProvider& provider,
                  const FunctionParams& params);

double max_softplus(std::string_view w, std::span<const std::string> segment_tokens,
                    const EmbeddingProvider& provider, const FunctionParams& params);

/// Feed-forward evaluation (ReLU between layers, linear output) on the mean
/// contextual vector of w's occurrences; 0 when w is absent.
double mlp_weight(std::string_view w, const Segment& segment, const EmbeddingProvider& provider,
                  const FunctionParams& params);

/// ln((tf + mu * P(w|C)) / (|S| + mu)); log_floor when the segment is empty
/// or the numerator is 0.
double log_cond_prob(std::string_view w, std::span<const std::string> segment_tokens,
                     const Vocabulary& stats, const FunctionParams& params);

/// Numerically stable ln(ln(1 + e^x)).
double log_softplus(double x);
/// Numerically stable ln(1 + e^x).
double softplus(double x);

// --- batched evaluation ---

/// Per-segment state that every vocabulary term reuses: token positions,
/// embedding rows and their aggregates. Built once per segment at index time.
struct SegmentContext {
    std::string doc_id;
    std::uint32_t segment_index = 0;
    std::size_t length = 0;
    StringMap<std::vector<std::uint32_t>> positions;  ///< token -> positions in segment
    std::vector<std::string> tokens;                  ///< kept for contextual fallback

    // filled only when the schema needs embeddings
    std::vector<float> emb;        ///< length x dim, row per token
    std::vector<double> emb_sum;   ///< sum of token embeddings
    std::vector<double> unit_sum;  ///< sum of unit-normalized token embeddings
    std::vector<float> gmat;       ///< log-softplus-transformed rows (maxsp only)
};

/// Per-term state reused across every segment of the collection.
struct TermContext {
    std::string term;
    double idf = 0.0;
    double coll_prob = 0.0;
    std::vector<float> emb;  ///< E(w); zero vector when unknown
    double norm = 0.0;       ///< |E(w)|
};

/// Evaluates the whole schema for (term, segment) pairs. The engine borrows
/// the vocabulary, which must outlive it.
class InteractionEngine {
public:
    InteractionEngine(InteractionSchema schema, std::shared_ptr<const EmbeddingProvider> provider,
                      FunctionParams params, const Vocabulary* vocab);

    const InteractionSchema& schema() const { return schema_; }
    const FunctionParams& params() const { return params_; }
    int n_f() const { return schema_.n_f(); }
    int dim() const { return dim_; }

    SegmentContext make_segment_context(const Segment& segment) const;
    TermContext make_term_context(std::string_view term) const;

    /// Writes n_f values in schema order into `out`.
    void evaluate(const TermContext& term, const SegmentContext& segment,
                  std::span<float> out) const;

    /// Interaction vector of an empty segment: zeros, logp at log_floor.
    InteractionVector padding_vector() const;

private:
    InteractionSchema schema_;
    std::shared_ptr<const EmbeddingProvider> provider_;
    FunctionParams params_;
    const Vocabulary* vocab_;
    int dim_ = 0;
    bool needs_embeddings_ = false;
};

/// One-shot evaluation through the same path the index build uses.
InteractionVector interaction_vector(std::string_view w, const Segment& segment,
                                     const InteractionSchema& schema,
                                     std::shared_ptr<const EmbeddingProvider> provider,
                                     const FunctionParams& params, const Vocabulary& vocab);

}  // namespace seine
