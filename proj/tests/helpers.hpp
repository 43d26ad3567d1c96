#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "seine/corpus.hpp"
#include "seine/embeddings.hpp"
#include "seine/index.hpp"
#include "seine/interactions.hpp"

namespace seine::test {

class TmpDir {
public:
    TmpDir() {
        auto base = std::filesystem::temp_directory_path() / "seine_test_XXXXXX";
        std::string templ = base.string();
        if (::mkdtemp(templ.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = templ;
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TmpDir(const TmpDir&) = delete;
    TmpDir& operator=(const TmpDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

    std::string file(const std::string& name, const std::string& content) const {
        auto full = path_ / name;
        std::ofstream out(full);
        out << content;
        return full.string();
    }

    std::string sub(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline Document make_doc(std::string id, std::string text) {
    Document doc;
    doc.id = std::move(id);
    doc.text = std::move(text);
    doc.tokens = tokenize(doc.text);
    return doc;
}

inline Document make_doc_tokens(std::string id, std::vector<std::string> tokens) {
    Document doc;
    doc.id = std::move(id);
    for (const auto& token : tokens) {
        if (!doc.text.empty()) {
            doc.text.push_back(' ');
        }
        doc.text += token;
    }
    doc.tokens = std::move(tokens);
    return doc;
}

inline std::string padded(std::string_view prefix, std::size_t k, int width = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", std::string(prefix).c_str(), width, k);
    return buf;
}

/// Random corpus with a zipf-like token distribution; deterministic per seed.
inline std::vector<Document> make_random_corpus(std::size_t n_docs, std::size_t min_len,
                                                std::size_t max_len, std::size_t vocab_size,
                                                std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::vector<double> weights(vocab_size);
    for (std::size_t k = 0; k < vocab_size; ++k) {
        weights[k] = 1.0 / static_cast<double>(k + 1);
    }
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::uniform_int_distribution<std::size_t> length(min_len, max_len);

    std::vector<Document> docs;
    docs.reserve(n_docs);
    for (std::size_t d = 0; d < n_docs; ++d) {
        std::vector<std::string> tokens;
        auto len = length(rng);
        tokens.reserve(len);
        for (std::size_t i = 0; i < len; ++i) {
            tokens.push_back(padded("t", pick(rng)));
        }
        docs.push_back(make_doc_tokens(padded("d", d), std::move(tokens)));
    }
    return docs;
}

inline std::vector<std::vector<std::string>> make_random_queries(std::size_t n_queries,
                                                                 std::size_t vocab_size,
                                                                 std::size_t min_len,
                                                                 std::size_t max_len,
                                                                 std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, vocab_size - 1);
    std::uniform_int_distribution<std::size_t> length(min_len, max_len);
    std::vector<std::vector<std::string>> queries;
    queries.reserve(n_queries);
    for (std::size_t q = 0; q < n_queries; ++q) {
        std::vector<std::string> tokens;
        auto len = length(rng);
        for (std::size_t i = 0; i < len; ++i) {
            tokens.push_back(padded("t", pick(rng)));
        }
        queries.push_back(std::move(tokens));
    }
    return queries;
}

/// Explicit token -> vector table; unknown tokens are absent.
class MapEmbeddings : public EmbeddingProvider {
public:
    explicit MapEmbeddings(int dim) : dim_(dim) {}

    int dim() const override { return dim_; }

    bool static_lookup(std::string_view token, std::span<float> out) const override {
        auto it = table_.find(token);
        if (it == table_.end()) {
            return false;
        }
        std::copy(it->second.begin(), it->second.end(), out.begin());
        return true;
    }

    void set(std::string token, std::vector<float> values) {
        table_[std::move(token)] = std::move(values);
    }

private:
    int dim_;
    StringMap<std::vector<float>> table_;
};

inline bool rel_close(double a, double b, double rel = 1e-5, double abs_floor = 1e-7) {
    double diff = std::fabs(a - b);
    if (diff <= abs_floor) {
        return true;
    }
    return diff <= rel * std::max(std::fabs(a), std::fabs(b));
}

// ---------------------------------------------------------------------------
// Brute-force oracles, written straight from the formulas and kept separate
// from the library implementation.
// ---------------------------------------------------------------------------

inline std::vector<float> ref_embed(const EmbeddingProvider& provider, std::string_view token) {
    std::vector<float> v(static_cast<std::size_t>(provider.dim()), 0.0f);
    provider.static_lookup(token, v);
    return v;
}

inline double ref_tf(std::string_view w, const std::vector<std::string>& tokens) {
    double count = 0;
    for (const auto& t : tokens) {
        if (t == w) {
            count += 1;
        }
    }
    return count;
}

inline double ref_dot(std::string_view w, const std::vector<std::string>& tokens,
                      const EmbeddingProvider& provider) {
    auto ew = ref_embed(provider, w);
    double sum = 0.0;
    for (const auto& t : tokens) {
        auto et = ref_embed(provider, t);
        for (std::size_t i = 0; i < ew.size(); ++i) {
            sum += static_cast<double>(ew[i]) * static_cast<double>(et[i]);
        }
    }
    return sum;
}

inline double ref_cos(std::string_view w, const std::vector<std::string>& tokens,
                      const EmbeddingProvider& provider) {
    auto ew = ref_embed(provider, w);
    double wn = 0.0;
    for (float v : ew) {
        wn += static_cast<double>(v) * v;
    }
    wn = std::sqrt(wn);
    if (wn == 0.0) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& t : tokens) {
        auto et = ref_embed(provider, t);
        double tn = 0.0;
        double dot = 0.0;
        for (std::size_t i = 0; i < ew.size(); ++i) {
            tn += static_cast<double>(et[i]) * et[i];
            dot += static_cast<double>(ew[i]) * et[i];
        }
        if (tn > 0.0) {
            sum += dot / (wn * std::sqrt(tn));
        }
    }
    return sum;
}

inline double ref_gauss(std::string_view w, const std::vector<std::string>& tokens,
                        const EmbeddingProvider& provider, double sigma2 = 1.0) {
    if (tokens.empty()) {
        return 0.0;
    }
    auto ew = ref_embed(provider, w);
    double best = -1.0;
    for (const auto& t : tokens) {
        auto et = ref_embed(provider, t);
        double sq = 0.0;
        for (std::size_t i = 0; i < ew.size(); ++i) {
            double d = static_cast<double>(ew[i]) - static_cast<double>(et[i]);
            sq += d * d;
        }
        best = std::max(best, std::exp(-sq / sigma2));
    }
    return best;
}

inline double ref_maxsp(std::string_view w, const std::vector<std::string>& tokens,
                        const EmbeddingProvider& provider, bool softplus_only = false) {
    if (tokens.empty()) {
        return 0.0;
    }
    auto ew = ref_embed(provider, w);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& t : tokens) {
        auto et = ref_embed(provider, t);
        double sum = 0.0;
        for (std::size_t i = 0; i < ew.size(); ++i) {
            double sp = std::log1p(std::exp(std::min(30.0, static_cast<double>(et[i]))));
            if (static_cast<double>(et[i]) > 30.0) {
                sp = et[i];
            }
            double g = softplus_only ? sp : std::log(sp);
            sum += g * static_cast<double>(ew[i]);
        }
        best = std::max(best, sum);
    }
    return best;
}

inline double ref_logp(std::string_view w, const std::vector<std::string>& tokens,
                       double coll_prob, double mu, double floor) {
    if (tokens.empty()) {
        return floor;
    }
    double num = ref_tf(w, tokens) + mu * coll_prob;
    if (num <= 0.0) {
        return floor;
    }
    return std::log(num / (static_cast<double>(tokens.size()) + mu));
}

/// Okapi BM25 per document over raw text, restricted to in-vocabulary query
/// terms; duplicate query terms contribute once per occurrence.
inline double ref_bm25(const std::vector<std::string>& query_tokens, const Document& doc,
                       const Vocabulary& vocab, double k1 = 1.2, double b = 0.75) {
    double score = 0.0;
    double K = k1 * ((1.0 - b) +
                     b * static_cast<double>(doc.tokens.size()) / vocab.avg_doc_len);
    for (const auto& term : query_tokens) {
        auto id = vocab.id_of(term);
        if (!id) {
            continue;
        }
        double tf = ref_tf(term, doc.tokens);
        if (tf <= 0.0) {
            continue;
        }
        score += vocab.idf[*id] * tf * (k1 + 1.0) / (tf + K);
    }
    return score;
}

}  // namespace seine::test
