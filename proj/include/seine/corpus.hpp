#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seine/common.hpp"

namespace seine {

struct Document {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;
};

/// Frequency-pruned term set plus collection statistics. Statistics (df, idf,
/// cf, avg_doc_len) are computed over the full collection; pruning only
/// restricts membership. Immutable once built; safe for concurrent reads.
struct Vocabulary {
    std::vector<std::string> terms;       ///< lexicographic order; position == term id
    StringMap<std::uint32_t> term_ids;
    std::vector<std::uint32_t> df;        ///< documents containing the term
    std::vector<double> idf;              ///< ln(collection_size / (df + 1))
    std::vector<std::uint64_t> cf;        ///< total occurrences in the collection
    std::uint32_t collection_size = 0;
    std::uint64_t total_tokens = 0;
    double avg_doc_len = 0.0;

    std::size_t size() const { return terms.size(); }

    std::optional<std::uint32_t> id_of(std::string_view term) const {
        auto it = term_ids.find(term);
        if (it == term_ids.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    bool contains(std::string_view term) const { return term_ids.find(term) != term_ids.end(); }

    /// Collection unigram probability; 0 for out-of-vocabulary terms.
    double collection_prob(std::string_view term) const {
        auto id = id_of(term);
        if (!id || total_tokens == 0) {
            return 0.0;
        }
        return static_cast<double>(cf[*id]) / static_cast<double>(total_tokens);
    }
};

/// Lowercased maximal runs of ASCII alphanumerics, in order of appearance.
std::vector<std::string> tokenize(std::string_view text);

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

/// Reads a JSON Lines corpus (one object per line with string fields "id" and
/// "text"; unknown fields ignored) and tokenizes each document.
std::vector<Document> load_corpus(const std::string& path, const Tokenizer& tokenizer = tokenize);

/// Number of documents whose token set contains `term`.
std::uint32_t document_frequency(std::span<const Document> docs, std::string_view term);

/// Collects unique terms, drops the ceil(prune_top*U) most frequent and the
/// ceil(prune_bottom*U) least frequent by collection frequency (frequency ties
/// broken lexicographically), and computes df/idf/cf statistics over the
/// unpruned collection.
Vocabulary build_vocabulary(std::span<const Document> docs, double prune_top = 0.1,
                            double prune_bottom = 0.1);

}  // namespace seine
