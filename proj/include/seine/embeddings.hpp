#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seine/common.hpp"

namespace seine {

/// Identifies one token occurrence for contextual lookups.
struct TokenContext {
    std::string_view doc_id;
    std::uint32_t segment = 0;   ///< segment index within the document
    std::uint32_t position = 0;  ///< token position within the segment
};

/// Source of term and contextual-token vectors. Implementations are immutable
/// after construction and answer identical queries identically, so any number
/// of threads may read concurrently.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual int dim() const = 0;

    /// Writes the token's vector into `out` (size dim()). Returns false and
    /// leaves `out` untouched when the token is unknown.
    virtual bool static_lookup(std::string_view token, std::span<float> out) const = 0;

    /// Vector for a specific token occurrence; defaults to the static vector.
    virtual bool contextual_lookup(const TokenContext& ctx, std::string_view token,
                                   std::span<float> out) const {
        (void)ctx;
        return static_lookup(token, out);
    }

    std::optional<std::vector<float>> static_vector(std::string_view token) const {
        std::vector<float> buf(static_cast<std::size_t>(dim()));
        if (!static_lookup(token, buf)) {
            return std::nullopt;
        }
        return buf;
    }
};

/// In-memory table loaded from a word2vec-style text file:
/// header "count dim", then "token v1 ... v_dim" per line.
class StaticEmbeddings : public EmbeddingProvider {
public:
    StaticEmbeddings(int dim) : dim_(dim) {}

    int dim() const override { return dim_; }
    bool static_lookup(std::string_view token, std::span<float> out) const override;

    /// Throws IoError on duplicate tokens or dimension mismatch.
    void add(std::string token, std::span<const float> values);
    std::size_t size() const { return offsets_.size(); }

private:
    int dim_;
    std::vector<float> data_;
    StringMap<std::size_t> offsets_;
};

std::shared_ptr<StaticEmbeddings> load_static(const std::string& path);

/// Deterministic hash-derived unit vectors; every token is known. Two
/// providers with the same (dim, seed) are extensionally identical.
class PseudoEmbeddings : public EmbeddingProvider {
public:
    PseudoEmbeddings(int dim, std::uint64_t seed);

    int dim() const override { return dim_; }
    std::uint64_t seed() const { return seed_; }
    bool static_lookup(std::string_view token, std::span<float> out) const override;

private:
    int dim_;
    std::uint64_t seed_;
};

/// Wraps a base provider; contextual lookups hit the overlay's per-occurrence
/// table first and fall back to the base.
class ContextualOverlay : public EmbeddingProvider {
public:
    explicit ContextualOverlay(std::shared_ptr<const EmbeddingProvider> base);

    int dim() const override { return base_->dim(); }
    bool static_lookup(std::string_view token, std::span<float> out) const override {
        return base_->static_lookup(token, out);
    }
    bool contextual_lookup(const TokenContext& ctx, std::string_view token,
                           std::span<float> out) const override;

    /// Throws IoError when `values` does not match the base provider's dim.
    void add(std::string_view doc_id, std::uint32_t segment, std::uint32_t position,
             std::span<const float> values);
    std::size_t size() const { return entries_.size(); }

private:
    std::shared_ptr<const EmbeddingProvider> base_;
    StringMap<std::size_t> entries_;  ///< "doc_id\0segment\0position" -> offset
    std::vector<float> data_;

    static std::string make_key(std::string_view doc_id, std::uint32_t segment,
                                std::uint32_t position);
};

/// Loads a contextual-values overlay (JSON Lines with fields "doc_id",
/// "segment", "position", "values") on top of `base`.
std::shared_ptr<ContextualOverlay> load_contextual(const std::string& path,
                                                   std::shared_ptr<const EmbeddingProvider> base);

}  // namespace seine
