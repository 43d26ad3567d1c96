#include "seine/interactions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace seine {

namespace {

constexpr std::array<std::string_view, kFnCount> kFnNames = {
    "tf", "iidf", "dot", "cos", "gauss", "linagg", "maxsp", "mlp", "logp"};

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

double dot_d(std::span<const float> a, std::span<const float> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

double norm_d(std::span<const float> a) {
    double sum = 0.0;
    for (float v : a) {
        sum += static_cast<double>(v) * static_cast<double>(v);
    }
    return std::sqrt(sum);
}

/// E(token) with the absent-token convention: unknown tokens are zero vectors.
void lookup_or_zero(const EmbeddingProvider& provider, std::string_view token,
                    std::span<float> out) {
    if (!provider.static_lookup(token, out)) {
        std::fill(out.begin(), out.end(), 0.0f);
    }
}

/// Mean contextual vector over w's occurrences in the segment; false when w
/// does not occur.
bool mean_contextual(std::string_view w, const Segment& segment,
                     const EmbeddingProvider& provider, std::span<double> mean) {
    std::fill(mean.begin(), mean.end(), 0.0);
    std::vector<float> buf(mean.size());
    std::size_t occurrences = 0;
    for (std::uint32_t pos = 0; pos < segment.tokens.size(); ++pos) {
        if (segment.tokens[pos] != w) {
            continue;
        }
        TokenContext ctx{segment.doc_id, segment.index, pos};
        if (!provider.contextual_lookup(ctx, w, buf)) {
            std::fill(buf.begin(), buf.end(), 0.0f);
        }
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += static_cast<double>(buf[i]);
        }
        ++occurrences;
    }
    if (occurrences == 0) {
        return false;
    }
    for (double& v : mean) {
        v /= static_cast<double>(occurrences);
    }
    return true;
}

double mlp_forward(std::span<const MlpLayer> layers, std::span<const double> input) {
    std::vector<double> current(input.begin(), input.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        next.assign(layer.weights.size(), 0.0);
        for (std::size_t o = 0; o < layer.weights.size(); ++o) {
            double acc = static_cast<double>(layer.bias[o]);
            const auto& row = layer.weights[o];
            for (std::size_t i = 0; i < row.size(); ++i) {
                acc += static_cast<double>(row[i]) * current[i];
            }
            next[o] = acc;
        }
        if (l + 1 < layers.size()) {
            for (double& v : next) {
                v = std::max(0.0, v);
            }
        }
        current.swap(next);
    }
    return current.empty() ? 0.0 : current[0];
}

}  // namespace

std::string_view fn_name(Fn fn) { return kFnNames[static_cast<std::size_t>(fn)]; }

std::optional<Fn> fn_from_name(std::string_view name) {
    std::string lower = to_lower(name);
    for (std::size_t i = 0; i < kFnNames.size(); ++i) {
        if (kFnNames[i] == lower) {
            return static_cast<Fn>(i);
        }
    }
    return std::nullopt;
}

InteractionSchema InteractionSchema::parse(std::string_view csv) {
    InteractionSchema schema;
    std::size_t start = 0;
    while (start <= csv.size()) {
        auto comma = csv.find(',', start);
        auto end = comma == std::string_view::npos ? csv.size() : comma;
        auto item = csv.substr(start, end - start);
        while (!item.empty() && (item.front() == ' ' || item.front() == '\t')) {
            item.remove_prefix(1);
        }
        while (!item.empty() && (item.back() == ' ' || item.back() == '\t')) {
            item.remove_suffix(1);
        }
        if (!item.empty()) {
            auto fn = fn_from_name(item);
            if (!fn) {
                throw ConfigError("unknown interaction function \"" + std::string(item) + "\"");
            }
            if (schema.contains(*fn)) {
                throw ConfigError("duplicate interaction function \"" + std::string(item) + "\"");
            }
            schema.functions.push_back(*fn);
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    if (schema.functions.empty()) {
        throw ConfigError("interaction schema is empty");
    }
    return schema;
}

std::string InteractionSchema::to_string() const {
    std::string out;
    for (Fn fn : functions) {
        if (!out.empty()) {
            out.push_back(',');
        }
        out.append(fn_name(fn));
    }
    return out;
}

std::optional<int> InteractionSchema::column(Fn fn) const {
    for (std::size_t i = 0; i < functions.size(); ++i) {
        if (functions[i] == fn) {
            return static_cast<int>(i);
        }
    }
    return std::nullopt;
}

bool InteractionSchema::needs_embeddings() const {
    for (Fn fn : functions) {
        if (fn == Fn::Dot || fn == Fn::Cos || fn == Fn::Gauss || fn == Fn::Linagg ||
            fn == Fn::Maxsp || fn == Fn::Mlp) {
            return true;
        }
    }
    return false;
}

bool InteractionSchema::needs_contextual() const {
    return contains(Fn::Linagg) || contains(Fn::Mlp);
}

FunctionParams FunctionParams::defaults(int dim) {
    FunctionParams params;
    params.a.assign(static_cast<std::size_t>(std::max(dim, 0)), 0.0f);
    params.p.assign(static_cast<std::size_t>(std::max(dim, 0)), 0.0f);
    MlpLayer layer;
    layer.weights.assign(1, std::vector<float>(static_cast<std::size_t>(std::max(dim, 0)), 0.0f));
    layer.bias.assign(1, 0.0f);
    params.mlp.push_back(std::move(layer));
    return params;
}

FunctionParams FunctionParams::load(const std::string& path, int dim) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open params file: " + path);
    }
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": malformed params file: " + e.what());
    }
    FunctionParams params = defaults(dim);
    try {
        if (obj.contains("a")) {
            params.a = obj["a"].get<std::vector<float>>();
        }
        if (obj.contains("b")) {
            params.b = obj["b"].get<float>();
        }
        if (obj.contains("p")) {
            params.p = obj["p"].get<std::vector<float>>();
        }
        if (obj.contains("mlp")) {
            params.mlp.clear();
            for (const auto& layer_json : obj["mlp"]) {
                MlpLayer layer;
                layer.weights = layer_json.at("weights").get<std::vector<std::vector<float>>>();
                layer.bias = layer_json.at("bias").get<std::vector<float>>();
                params.mlp.push_back(std::move(layer));
            }
        }
        if (obj.contains("mu")) {
            params.mu = obj["mu"].get<double>();
        }
        if (obj.contains("log_floor")) {
            params.log_floor = obj["log_floor"].get<float>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": malformed params file: " + e.what());
    }
    if (!params.mlp.empty() && dim > 0) {
        try {
            params.validate_mlp(dim);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    return params;
}

void FunctionParams::validate_mlp(int dim) const {
    if (mlp.empty()) {
        throw ConfigError("schema includes mlp but no layers are defined");
    }
    std::size_t in_dim = static_cast<std::size_t>(dim);
    for (std::size_t l = 0; l < mlp.size(); ++l) {
        const auto& layer = mlp[l];
        if (layer.weights.empty() || layer.bias.size() != layer.weights.size()) {
            throw ConfigError("mlp layer " + std::to_string(l) +
                              " has mismatched weights/bias shapes");
        }
        for (const auto& row : layer.weights) {
            if (row.size() != in_dim) {
                throw ConfigError("mlp layer " + std::to_string(l) + " expects input dim " +
                                  std::to_string(row.size()) + ", previous layer provides " +
                                  std::to_string(in_dim));
            }
        }
        in_dim = layer.weights.size();
    }
    if (in_dim != 1) {
        throw ConfigError("mlp output dim is " + std::to_string(in_dim) + ", expected 1");
    }
}

void FunctionParams::validate(int dim, const InteractionSchema& schema) const {
    if (schema.contains(Fn::Linagg) && a.size() != static_cast<std::size_t>(dim)) {
        throw ConfigError("linagg weight vector has " + std::to_string(a.size()) +
                          " components, expected provider dim " + std::to_string(dim));
    }
    if (schema.contains(Fn::Maxsp) && !p.empty() && p.size() != static_cast<std::size_t>(dim)) {
        throw ConfigError("maxsp projection vector has " + std::to_string(p.size()) +
                          " components, expected provider dim " + std::to_string(dim));
    }
    if (schema.contains(Fn::Mlp)) {
        validate_mlp(dim);
    }
    if (mu < 0.0) {
        throw ConfigError("logp smoothing mass mu must be >= 0");
    }
    if (gauss_sigma2 <= 0.0) {
        throw ConfigError("gauss.sigma2 must be > 0");
    }
}

std::string FunctionParams::fingerprint() const {
    nlohmann::json obj;
    obj["a"] = a;
    obj["b"] = b;
    obj["p"] = p;
    auto layers = nlohmann::json::array();
    for (const auto& layer : mlp) {
        layers.push_back({{"weights", layer.weights}, {"bias", layer.bias}});
    }
    obj["mlp"] = std::move(layers);
    obj["mu"] = mu;
    obj["log_floor"] = log_floor;
    obj["gauss_sigma2"] = gauss_sigma2;
    obj["maxsp_softplus_only"] = maxsp_softplus_only;
    return obj.dump();
}

double softplus(double x) {
    if (x > 30.0) {
        return x + std::log1p(std::exp(-x));
    }
    if (x < -30.0) {
        return std::exp(x);
    }
    return std::log1p(std::exp(x));
}

double log_softplus(double x) {
    if (x < -30.0) {
        return x;  // ln(ln(1+e^x)) -> x as x -> -inf
    }
    return std::log(softplus(x));
}

double tf(std::string_view w, std::span<const std::string> segment_tokens) {
    std::size_t count = 0;
    for (const auto& token : segment_tokens) {
        if (token == w) {
            ++count;
        }
    }
    return static_cast<double>(count);
}

double indicative_idf(std::string_view w, std::span<const std::string> segment_tokens,
                      const Vocabulary& vocab) {
    auto id = vocab.id_of(w);
    if (!id) {
        throw Error("indicative_idf: term \"" + std::string(w) + "\" not in vocabulary");
    }
    return tf(w, segment_tokens) > 0 ? vocab.idf[*id] : 0.0;
}

double dot_sum(std::string_view w, std::span<const std::string> segment_tokens,
               const EmbeddingProvider& provider) {
    auto dim = static_cast<std::size_t>(provider.dim());
    std::vector<float> ew(dim);
    std::vector<float> et(dim);
    lookup_or_zero(provider, w, ew);
    double sum = 0.0;
    for (const auto& token : segment_tokens) {
        lookup_or_zero(provider, token, et);
        sum += dot_d(ew, et);
    }
    return sum;
}

double cosine_sum(std::string_view w, std::span<const std::string> segment_tokens,
                  const EmbeddingProvider& provider) {
    auto dim = static_cast<std::size_t>(provider.dim());
    std::vector<float> ew(dim);
    std::vector<float> et(dim);
    lookup_or_zero(provider, w, ew);
    double w_norm = norm_d(ew);
    if (w_norm == 0.0) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& token : segment_tokens) {
        lookup_or_zero(provider, token, et);
        double t_norm = norm_d(et);
        if (t_norm == 0.0) {
            continue;
        }
        sum += dot_d(ew, et) / (w_norm * t_norm);
    }
    return sum;
}

double gaussian_max(std::string_view w, std::span<const std::string> segment_tokens,
                    const EmbeddingProvider& provider, double sigma2) {
    if (segment_tokens.empty()) {
        return 0.0;
    }
    auto dim = static_cast<std::size_t>(provider.dim());
    std::vector<float> ew(dim);
    std::vector<float> et(dim);
    lookup_or_zero(provider, w, ew);
    double min_sq = std::numeric_limits<double>::infinity();
    for (const auto& token : segment_tokens) {
        lookup_or_zero(provider, token, et);
        double sq = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double d = static_cast<double>(ew[i]) - static_cast<double>(et[i]);
            sq += d * d;
        }
        min_sq = std::min(min_sq, sq);
    }
    return std::exp(-min_sq / sigma2);
}

double linear_agg(std::string_view w, const Segment& segment, const EmbeddingProvider& provider,
                  const FunctionParams& params) {
    auto dim = static_cast<std::size_t>(provider.dim());
    std::vector<double> mean(dim);
    if (!mean_contextual(w, segment, provider, mean)) {
        return 0.0;
    }
    double sum = static_cast<double>(params.b);
    for (std::size_t i = 0; i < dim; ++i) {
        sum += static_cast<double>(params.a[i]) * mean[i];
    }
    return sum;
}

double max_softplus(std::string_view w, std::span<const std::string> segment_tokens,
                    const EmbeddingProvider& provider, const FunctionParams& params) {
    if (segment_tokens.empty()) {
        return 0.0;
    }
    auto dim = static_cast<std::size_t>(provider.dim());
    std::vector<float> ew(dim);
    std::vector<float> et(dim);
    lookup_or_zero(provider, w, ew);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& token : segment_tokens) {
        lookup_or_zero(provider, token, et);
        double sum = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double g = params.maxsp_softplus_only ? softplus(static_cast<double>(et[i]))
                                                  : log_softplus(static_cast<double>(et[i]));
            sum += g * static_cast<double>(ew[i]);
        }
        best = std::max(best, sum);
    }
    return best;
}

double mlp_weight(std::string_view w, const Segment& segment, const EmbeddingProvider& provider,
                  const FunctionParams& params) {
    auto dim = static_cast<std::size_t>(provider.dim());
    std::vector<double> mean(dim);
    if (!mean_contextual(w, segment, provider, mean)) {
        return 0.0;
    }
    return mlp_forward(params.mlp, mean);
}

double log_cond_prob(std::string_view w, std::span<const std::string> segment_tokens,
                     const Vocabulary& stats, const FunctionParams& params) {
    if (segment_tokens.empty()) {
        return static_cast<double>(params.log_floor);
    }
    double count = tf(w, segment_tokens);
    double numerator = count + params.mu * stats.collection_prob(w);
    if (numerator <= 0.0) {
        return static_cast<double>(params.log_floor);
    }
    return std::log(numerator / (static_cast<double>(segment_tokens.size()) + params.mu));
}

InteractionEngine::InteractionEngine(InteractionSchema schema,
                                     std::shared_ptr<const EmbeddingProvider> provider,
                                     FunctionParams params, const Vocabulary* vocab)
    : schema_(std::move(schema)),
      provider_(std::move(provider)),
      params_(std::move(params)),
      vocab_(vocab) {
    if (schema_.functions.empty()) {
        throw ConfigError("interaction schema is empty");
    }
    needs_embeddings_ = schema_.needs_embeddings();
    if (needs_embeddings_) {
        if (!provider_) {
            throw ConfigError("schema \"" + schema_.to_string() +
                              "\" requires an embedding provider");
        }
        dim_ = provider_->dim();
    }
    if ((schema_.contains(Fn::Iidf) || schema_.contains(Fn::Logp)) && vocab_ == nullptr) {
        throw ConfigError("schema \"" + schema_.to_string() + "\" requires vocabulary statistics");
    }
    params_.validate(dim_, schema_);
}

SegmentContext InteractionEngine::make_segment_context(const Segment& segment) const {
    SegmentContext ctx;
    ctx.doc_id = segment.doc_id;
    ctx.segment_index = segment.index;
    ctx.length = segment.tokens.size();
    ctx.tokens = segment.tokens;
    for (std::uint32_t pos = 0; pos < segment.tokens.size(); ++pos) {
        ctx.positions[segment.tokens[pos]].push_back(pos);
    }
    if (!needs_embeddings_ || ctx.length == 0) {
        return ctx;
    }

    auto dim = static_cast<std::size_t>(dim_);
    ctx.emb.resize(ctx.length * dim);
    ctx.emb_sum.assign(dim, 0.0);
    ctx.unit_sum.assign(dim, 0.0);
    bool wants_maxsp = schema_.contains(Fn::Maxsp);
    if (wants_maxsp) {
        ctx.gmat.resize(ctx.length * dim);
    }
    for (std::size_t t = 0; t < ctx.length; ++t) {
        std::span<float> row(ctx.emb.data() + t * dim, dim);
        lookup_or_zero(*provider_, segment.tokens[t], row);
        double sq = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double v = static_cast<double>(row[i]);
            ctx.emb_sum[i] += v;
            sq += v * v;
        }
        if (sq > 0.0) {
            double inv = 1.0 / std::sqrt(sq);
            for (std::size_t i = 0; i < dim; ++i) {
                ctx.unit_sum[i] += static_cast<double>(row[i]) * inv;
            }
        }
        if (wants_maxsp) {
            for (std::size_t i = 0; i < dim; ++i) {
                double x = static_cast<double>(row[i]);
                ctx.gmat[t * dim + i] = static_cast<float>(
                    params_.maxsp_softplus_only ? softplus(x) : log_softplus(x));
            }
        }
    }
    return ctx;
}

TermContext InteractionEngine::make_term_context(std::string_view term) const {
    TermContext ctx;
    ctx.term = std::string(term);
    if (vocab_ != nullptr) {
        if (auto id = vocab_->id_of(term)) {
            ctx.idf = vocab_->idf[*id];
        }
        ctx.coll_prob = vocab_->collection_prob(term);
    }
    if (needs_embeddings_) {
        ctx.emb.resize(static_cast<std::size_t>(dim_));
        lookup_or_zero(*provider_, term, ctx.emb);
        ctx.norm = norm_d(ctx.emb);
    }
    return ctx;
}

void InteractionEngine::evaluate(const TermContext& term, const SegmentContext& segment,
                                 std::span<float> out) const {
    auto dim = static_cast<std::size_t>(dim_);
    auto pos_it = segment.positions.find(term.term);
    std::size_t term_count =
        pos_it == segment.positions.end() ? 0 : pos_it->second.size();

    // Mean contextual vector, shared by linagg and mlp; computed on demand.
    std::vector<double> ctx_mean;
    auto contextual_mean = [&]() -> const std::vector<double>& {
        if (!ctx_mean.empty()) {
            return ctx_mean;
        }
        ctx_mean.assign(dim, 0.0);
        std::vector<float> buf(dim);
        for (std::uint32_t pos : pos_it->second) {
            TokenContext tctx{segment.doc_id, segment.segment_index, pos};
            if (!provider_->contextual_lookup(tctx, term.term, buf)) {
                std::fill(buf.begin(), buf.end(), 0.0f);
            }
            for (std::size_t i = 0; i < dim; ++i) {
                ctx_mean[i] += static_cast<double>(buf[i]);
            }
        }
        for (double& v : ctx_mean) {
            v /= static_cast<double>(term_count);
        }
        return ctx_mean;
    };

    for (std::size_t col = 0; col < schema_.functions.size(); ++col) {
        double value = 0.0;
        switch (schema_.functions[col]) {
            case Fn::Tf:
                value = static_cast<double>(term_count);
                break;
            case Fn::Iidf:
                value = term_count > 0 ? term.idf : 0.0;
                break;
            case Fn::Dot: {
                if (segment.length == 0) {
                    value = 0.0;
                    break;
                }
                double sum = 0.0;
                for (std::size_t i = 0; i < dim; ++i) {
                    sum += static_cast<double>(term.emb[i]) * segment.emb_sum[i];
                }
                value = sum;
                break;
            }
            case Fn::Cos: {
                if (term.norm == 0.0 || segment.length == 0) {
                    value = 0.0;
                } else {
                    double sum = 0.0;
                    for (std::size_t i = 0; i < dim; ++i) {
                        sum += static_cast<double>(term.emb[i]) * segment.unit_sum[i];
                    }
                    value = sum / term.norm;
                }
                break;
            }
            case Fn::Gauss: {
                if (segment.length == 0) {
                    value = 0.0;
                } else {
                    double min_sq = std::numeric_limits<double>::infinity();
                    for (std::size_t t = 0; t < segment.length; ++t) {
                        const float* row = segment.emb.data() + t * dim;
                        double sq = 0.0;
                        for (std::size_t i = 0; i < dim; ++i) {
                            double d = static_cast<double>(term.emb[i]) -
                                       static_cast<double>(row[i]);
                            sq += d * d;
                        }
                        min_sq = std::min(min_sq, sq);
                    }
                    value = std::exp(-min_sq / params_.gauss_sigma2);
                }
                break;
            }
            case Fn::Linagg: {
                if (term_count == 0) {
                    value = 0.0;
                } else {
                    const auto& mean = contextual_mean();
                    double sum = static_cast<double>(params_.b);
                    for (std::size_t i = 0; i < dim; ++i) {
                        sum += static_cast<double>(params_.a[i]) * mean[i];
                    }
                    value = sum;
                }
                break;
            }
            case Fn::Maxsp: {
                if (segment.length == 0) {
                    value = 0.0;
                } else {
                    double best = -std::numeric_limits<double>::infinity();
                    for (std::size_t t = 0; t < segment.length; ++t) {
                        const float* row = segment.gmat.data() + t * dim;
                        double sum = 0.0;
                        for (std::size_t i = 0; i < dim; ++i) {
                            sum += static_cast<double>(row[i]) * static_cast<double>(term.emb[i]);
                        }
                        best = std::max(best, sum);
                    }
                    value = best;
                }
                break;
            }
            case Fn::Mlp: {
                if (term_count == 0) {
                    value = 0.0;
                } else {
                    value = mlp_forward(params_.mlp, contextual_mean());
                }
                break;
            }
            case Fn::Logp: {
                if (segment.length == 0) {
                    value = static_cast<double>(params_.log_floor);
                } else {
                    double numerator =
                        static_cast<double>(term_count) + params_.mu * term.coll_prob;
                    value = numerator <= 0.0
                                ? static_cast<double>(params_.log_floor)
                                : std::log(numerator /
                                           (static_cast<double>(segment.length) + params_.mu));
                }
                break;
            }
        }
        out[col] = static_cast<float>(value);
    }
}

InteractionVector InteractionEngine::padding_vector() const {
    InteractionVector out(static_cast<std::size_t>(schema_.n_f()), 0.0f);
    for (std::size_t col = 0; col < schema_.functions.size(); ++col) {
        if (schema_.functions[col] == Fn::Logp) {
            out[col] = params_.log_floor;
        }
    }
    return out;
}

InteractionVector interaction_vector(std::string_view w, const Segment& segment,
                                     const InteractionSchema& schema,
                                     std::shared_ptr<const EmbeddingProvider> provider,
                                     const FunctionParams& params, const Vocabulary& vocab) {
    InteractionEngine engine(schema, std::move(provider), params, &vocab);
    auto seg_ctx = engine.make_segment_context(segment);
    auto term_ctx = engine.make_term_context(w);
    InteractionVector out(static_cast<std::size_t>(engine.n_f()));
    engine.evaluate(term_ctx, seg_ctx, out);
    return out;
}

}  // namespace seine
