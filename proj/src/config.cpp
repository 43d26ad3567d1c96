#include "seine/config.hpp"

#include <array>
#include <cerrno>
#include <cstdlib>
#include <fstream>

namespace seine {

namespace {

constexpr std::array<ConfigKey, 33> kRegistry = {{
    {"corpus", "", "path to the JSON Lines corpus"},
    {"index", "", "path to the .seine index file"},
    {"queries", "", "path to the TSV queries file (query_id<TAB>text)"},
    {"qrels", "", "path to the TREC qrels file"},
    {"run", "", "path of the TREC run file to write or evaluate"},
    {"export", "", "path of the JSON Lines q-d matrix export"},
    {"embeddings", "", "path to a word2vec-style text embeddings file"},
    {"embeddings.pseudo", "false", "use deterministic hash-derived embeddings"},
    {"embeddings.dim", "16", "dimensionality of pseudo embeddings"},
    {"embeddings.seed", "42", "seed of pseudo embeddings"},
    {"contextual", "", "path to a JSON Lines contextual-values overlay"},
    {"params", "", "path to the interaction function params JSON file"},
    {"schema", "tf,iidf", "comma-separated interaction functions to index"},
    {"sigma_index", "0", "drop (term, doc) pairs with document tf <= sigma"},
    {"segment.mode", "tiling", "segmentation mode: tiling, document, or term"},
    {"segment.window", "20", "token window for tiling gap similarities"},
    {"segment.n_b", "20", "standardized segments per document"},
    {"segment.depth_cutoff_stddev", "0.5", "boundary cutoff: mean + x*stddev of depths"},
    {"prune.top", "0.1", "fraction of most frequent terms pruned"},
    {"prune.bottom", "0.1", "fraction of least frequent terms pruned"},
    {"gauss.sigma2", "1", "Gaussian kernel bandwidth divisor"},
    {"maxsp.softplus_only", "false", "use softplus instead of ln(softplus) in maxsp"},
    {"scorer", "bm25", "retrieval function: dot, bm25, bm25-deepct, or kernel"},
    {"topk", "10", "results kept per query"},
    {"bm25.k1", "1.2", "BM25 k1"},
    {"bm25.b", "0.75", "BM25 b"},
    {"kernel.mus", "", "kernel centers (comma-separated; default pool when empty)"},
    {"kernel.sigmas", "", "kernel widths (comma-separated)"},
    {"kernel.weights", "", "kernel weights (comma-separated)"},
    {"workers", "1", "worker threads for index building and scoring"},
    {"bench.repetitions", "3", "benchmark repetitions per arm"},
    {"eval.cutoffs", "5,10", "cutoffs for P@k and nDCG@k"},
    {"run.tag", "seine", "tag column written into run files"},
}};

std::string trim(std::string_view s) {
    auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) {
        return {};
    }
    auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

}  // namespace

Config::Config() {
    for (const auto& entry : kRegistry) {
        values_[entry.key] = entry.def;
    }
}

std::span<const ConfigKey> Config::registry() { return kRegistry; }

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path);
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        auto content = trim(line);
        if (content.empty()) {
            continue;
        }
        auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected \"key = value\"");
        }
        auto key = trim(content.substr(0, eq));
        auto value = trim(content.substr(eq + 1));
        try {
            set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void Config::set(const std::string& key, std::string value) {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("unknown config key \"" + key + "\"");
    }
    it->second = std::move(value);
}

const std::string& Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("unknown config key \"" + key + "\"");
    }
    return it->second;
}

bool Config::is_set(const std::string& key) const { return !get(key).empty(); }

std::int64_t Config::get_int(const std::string& key) const {
    const auto& value = get(key);
    errno = 0;
    char* end = nullptr;
    long long parsed = std::strtoll(value.c_str(), &end, 10);
    if (errno != 0 || end == value.c_str() || *end != '\0') {
        throw ConfigError("config key \"" + key + "\" expects an integer, got \"" + value + "\"");
    }
    return parsed;
}

std::uint32_t Config::get_uint(const std::string& key) const {
    auto parsed = get_int(key);
    if (parsed < 0 || parsed > UINT32_MAX) {
        throw ConfigError("config key \"" + key + "\" expects a non-negative integer");
    }
    return static_cast<std::uint32_t>(parsed);
}

double Config::get_double(const std::string& key) const {
    const auto& value = get(key);
    errno = 0;
    char* end = nullptr;
    double parsed = std::strtod(value.c_str(), &end);
    if (errno != 0 || end == value.c_str() || *end != '\0') {
        throw ConfigError("config key \"" + key + "\" expects a number, got \"" + value + "\"");
    }
    return parsed;
}

bool Config::get_bool(const std::string& key) const {
    const auto& value = get(key);
    if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
    }
    throw ConfigError("config key \"" + key + "\" expects true/false, got \"" + value + "\"");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    const auto& value = get(key);
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        auto comma = value.find(',', start);
        auto end = comma == std::string::npos ? value.size() : comma;
        auto item = trim(std::string_view(value).substr(start, end - start));
        if (!item.empty()) {
            errno = 0;
            char* parse_end = nullptr;
            double parsed = std::strtod(item.c_str(), &parse_end);
            if (errno != 0 || parse_end == item.c_str() || *parse_end != '\0') {
                throw ConfigError("config key \"" + key + "\" has a malformed number \"" + item +
                                  "\"");
            }
            out.push_back(parsed);
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

SegmenterConfig Config::segmenter() const {
    SegmenterConfig segmenter;
    segmenter.mode = segment_mode_from_name(get("segment.mode"));
    segmenter.window = get_uint("segment.window");
    segmenter.n_b = get_uint("segment.n_b");
    segmenter.depth_cutoff_stddev = get_double("segment.depth_cutoff_stddev");
    if (segmenter.window < 1) {
        throw ConfigError("segment.window must be >= 1");
    }
    if (segmenter.n_b < 1) {
        throw ConfigError("segment.n_b must be >= 1");
    }
    return segmenter;
}

InteractionSchema Config::schema() const { return InteractionSchema::parse(get("schema")); }

ScorerOptions Config::scorer_options() const {
    ScorerOptions options;
    options.k1 = get_double("bm25.k1");
    options.b = get_double("bm25.b");
    auto mus = get_double_list("kernel.mus");
    auto sigmas = get_double_list("kernel.sigmas");
    auto weights = get_double_list("kernel.weights");
    if (!mus.empty() || !sigmas.empty() || !weights.empty()) {
        options.kernels.mus = std::move(mus);
        options.kernels.sigmas = std::move(sigmas);
        options.kernels.weights = std::move(weights);
        options.kernels.validate();
    }
    return options;
}

int Config::workers() const {
    auto parsed = get_int("workers");
    if (parsed < 1 || parsed > 1024) {
        throw ConfigError("workers must be between 1 and 1024");
    }
    return static_cast<int>(parsed);
}

}  // namespace seine
