#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "seine/common.hpp"
#include "seine/index.hpp"
#include "seine/retrieval.hpp"

namespace seine {

struct ConfigKey {
    const char* key;
    const char* def;
    const char* help;
};

/// Flat key = value configuration with a fixed key registry. Precedence:
/// defaults < config file < SEINE_WORKERS < command-line flags.
class Config {
public:
    Config();

    static std::span<const ConfigKey> registry();

    /// "key = value" lines, '#' comments. Unknown keys are rejected.
    void load_file(const std::string& path);

    /// Sets one key. Unknown keys are rejected.
    void set(const std::string& key, std::string value);

    const std::string& get(const std::string& key) const;
    bool is_set(const std::string& key) const;  ///< non-empty value

    // typed accessors; all throw ConfigError on malformed values
    std::int64_t get_int(const std::string& key) const;
    std::uint32_t get_uint(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;

    // assembled option groups
    SegmenterConfig segmenter() const;
    InteractionSchema schema() const;
    ScorerOptions scorer_options() const;
    int workers() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace seine
