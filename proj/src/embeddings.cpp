#include "seine/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace seine {

bool StaticEmbeddings::static_lookup(std::string_view token, std::span<float> out) const {
    auto it = offsets_.find(token);
    if (it == offsets_.end()) {
        return false;
    }
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(it->second),
                static_cast<std::size_t>(dim_), out.begin());
    return true;
}

void StaticEmbeddings::add(std::string token, std::span<const float> values) {
    if (values.size() != static_cast<std::size_t>(dim_)) {
        throw IoError("embedding row for \"" + token + "\" has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(dim_));
    }
    auto [it, fresh] = offsets_.try_emplace(std::move(token), data_.size());
    if (!fresh) {
        throw IoError("duplicate embedding token \"" + it->first + "\"");
    }
    data_.insert(data_.end(), values.begin(), values.end());
}

std::shared_ptr<StaticEmbeddings> load_static(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open embeddings file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError(path + ": empty embeddings file");
    }
    std::istringstream header(line);
    long long count = -1;
    long long dim = -1;
    if (!(header >> count >> dim) || count < 0 || dim < 1) {
        throw IoError(path + ":1: malformed embeddings header (expected \"count dim\")");
    }
    std::string trailing;
    if (header >> trailing) {
        throw IoError(path + ":1: malformed embeddings header (expected \"count dim\")");
    }

    auto provider = std::make_shared<StaticEmbeddings>(static_cast<int>(dim));
    std::vector<float> values(static_cast<std::size_t>(dim));
    std::size_t line_no = 1;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto space = line.find(' ');
        if (space == std::string::npos || space == 0) {
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed embedding row");
        }
        std::string token = line.substr(0, space);
        const char* cursor = line.c_str() + space;
        for (long long i = 0; i < dim; ++i) {
            char* end = nullptr;
            float v = std::strtof(cursor, &end);
            if (end == cursor) {
                throw IoError(path + ":" + std::to_string(line_no) + ": embedding row has fewer than " +
                              std::to_string(dim) + " values");
            }
            values[static_cast<std::size_t>(i)] = v;
            cursor = end;
        }
        while (*cursor == ' ' || *cursor == '\r' || *cursor == '\t') {
            ++cursor;
        }
        if (*cursor != '\0') {
            throw IoError(path + ":" + std::to_string(line_no) + ": embedding row has more than " +
                          std::to_string(dim) + " values");
        }
        try {
            provider->add(std::move(token), values);
        } catch (const IoError& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        ++rows;
    }
    if (rows != static_cast<std::size_t>(count)) {
        throw IoError(path + ": header declares " + std::to_string(count) + " rows but file has " +
                      std::to_string(rows));
    }
    return provider;
}

PseudoEmbeddings::PseudoEmbeddings(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim < 1) {
        throw ConfigError("pseudo embeddings require dim >= 1");
    }
}

bool PseudoEmbeddings::static_lookup(std::string_view token, std::span<float> out) const {
    std::uint64_t state = fnv1a64(token) ^ (seed_ * kFnvPrime + 0x9e3779b97f4a7c15ULL);
    double norm_sq = 0.0;
    for (int i = 0; i < dim_; ++i) {
        std::uint64_t bits = splitmix64(state);
        // uniform in [-1, 1)
        double u = static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0);
        double v = 2.0 * u - 1.0;
        out[static_cast<std::size_t>(i)] = static_cast<float>(v);
        norm_sq += v * v;
    }
    if (norm_sq < 1e-24) {
        out[0] = 1.0f;
        return true;
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (int i = 0; i < dim_; ++i) {
        out[static_cast<std::size_t>(i)] =
            static_cast<float>(static_cast<double>(out[static_cast<std::size_t>(i)]) * inv);
    }
    return true;
}

ContextualOverlay::ContextualOverlay(std::shared_ptr<const EmbeddingProvider> base)
    : base_(std::move(base)) {
    if (!base_) {
        throw ConfigError("contextual overlay requires a base provider");
    }
}

std::string ContextualOverlay::make_key(std::string_view doc_id, std::uint32_t segment,
                                        std::uint32_t position) {
    std::string key;
    key.reserve(doc_id.size() + 24);
    key.append(doc_id);
    key.push_back('\0');
    key.append(std::to_string(segment));
    key.push_back('\0');
    key.append(std::to_string(position));
    return key;
}

bool ContextualOverlay::contextual_lookup(const TokenContext& ctx, std::string_view token,
                                          std::span<float> out) const {
    auto it = entries_.find(make_key(ctx.doc_id, ctx.segment, ctx.position));
    if (it == entries_.end()) {
        return base_->contextual_lookup(ctx, token, out);
    }
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(it->second),
                static_cast<std::size_t>(dim()), out.begin());
    return true;
}

void ContextualOverlay::add(std::string_view doc_id, std::uint32_t segment, std::uint32_t position,
                            std::span<const float> values) {
    if (values.size() != static_cast<std::size_t>(dim())) {
        throw IoError("contextual entry has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(dim()));
    }
    auto [it, fresh] = entries_.try_emplace(make_key(doc_id, segment, position), data_.size());
    if (!fresh) {
        throw IoError("duplicate contextual entry for document \"" + std::string(doc_id) + "\"");
    }
    data_.insert(data_.end(), values.begin(), values.end());
}

std::shared_ptr<ContextualOverlay> load_contextual(const std::string& path,
                                                   std::shared_ptr<const EmbeddingProvider> base) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open contextual-values file: " + path);
    }
    auto overlay = std::make_shared<ContextualOverlay>(std::move(base));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed contextual line: " +
                          e.what());
        }
        if (!obj.is_object() || !obj.contains("doc_id") || !obj["doc_id"].is_string() ||
            !obj.contains("segment") || !obj.contains("position") || !obj.contains("values") ||
            !obj["values"].is_array()) {
            throw IoError(path + ":" + std::to_string(line_no) +
                          ": contextual line needs doc_id, segment, position, values");
        }
        std::vector<float> values;
        values.reserve(obj["values"].size());
        for (const auto& v : obj["values"]) {
            values.push_back(v.get<float>());
        }
        try {
            overlay->add(obj["doc_id"].get<std::string>(), obj["segment"].get<std::uint32_t>(),
                         obj["position"].get<std::uint32_t>(), values);
        } catch (const IoError& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return overlay;
}

}  // namespace seine
