#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seine/bench.hpp"
#include "seine/config.hpp"
#include "seine/corpus.hpp"
#include "seine/index.hpp"
#include "seine/retrieval.hpp"
#include "seine/trec.hpp"

namespace {

using namespace seine;
using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point from, clock_type::time_point to) {
    return std::chrono::duration<double, std::milli>(to - from).count();
}

void require_path(const Config& config, const std::string& key) {
    if (!config.is_set(key)) {
        throw ConfigError("missing required config key \"" + key + "\"");
    }
}

/// Provider from config; returns nullptr (signature "none") when neither an
/// embeddings file nor pseudo embeddings are configured.
std::shared_ptr<const EmbeddingProvider> make_provider(const Config& config,
                                                       std::string& signature) {
    std::shared_ptr<const EmbeddingProvider> provider;
    if (config.is_set("embeddings")) {
        provider = load_static(config.get("embeddings"));
        signature = "file:" + config.get("embeddings");
    } else if (config.get_bool("embeddings.pseudo")) {
        auto dim = static_cast<int>(config.get_uint("embeddings.dim"));
        auto seed = static_cast<std::uint64_t>(config.get_int("embeddings.seed"));
        provider = std::make_shared<PseudoEmbeddings>(dim, seed);
        signature = "pseudo:" + std::to_string(dim) + ":" + std::to_string(seed);
    } else {
        signature = "none";
        return nullptr;
    }
    if (config.is_set("contextual")) {
        provider = load_contextual(config.get("contextual"), provider);
        signature += "+ctx:" + config.get("contextual");
    }
    return provider;
}

FunctionParams make_params(const Config& config,
                           const std::shared_ptr<const EmbeddingProvider>& provider,
                           std::string& signature) {
    int dim = provider ? provider->dim() : 0;
    FunctionParams params;
    if (config.is_set("params")) {
        params = FunctionParams::load(config.get("params"), dim);
        signature = "file:" + config.get("params");
    } else {
        params = FunctionParams::defaults(dim);
        signature = "defaults";
    }
    params.gauss_sigma2 = config.get_double("gauss.sigma2");
    params.maxsp_softplus_only = config.get_bool("maxsp.softplus_only");
    return params;
}

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::size_t start = 0;
    while (start < text.size()) {
        auto newline = text.find('\n', start);
        auto end = newline == std::string::npos ? text.size() : newline;
        auto line = text.substr(start, end - start);
        auto eq = line.find(" = ");
        if (eq != std::string::npos) {
            kv[line.substr(0, eq)] = line.substr(eq + 3);
        }
        start = end + 1;
    }
    return kv;
}

std::vector<int> parse_cutoffs(const Config& config) {
    std::vector<int> cutoffs;
    for (double v : config.get_double_list("eval.cutoffs")) {
        if (v < 1 || v != std::floor(v)) {
            throw ConfigError("eval.cutoffs expects positive integers");
        }
        cutoffs.push_back(static_cast<int>(v));
    }
    if (cutoffs.empty()) {
        throw ConfigError("eval.cutoffs is empty");
    }
    return cutoffs;
}

void cmd_build(const Config& config) {
    require_path(config, "corpus");
    require_path(config, "index");

    auto t0 = clock_type::now();
    auto docs = load_corpus(config.get("corpus"));

    BuildConfig build;
    build.segmenter = config.segmenter();
    build.schema = config.schema();
    build.sigma_index = config.get_uint("sigma_index");
    build.workers = config.workers();
    build.prune_top = config.get_double("prune.top");
    build.prune_bottom = config.get_double("prune.bottom");
    auto provider = make_provider(config, build.embedding_signature);
    std::string params_signature;
    build.params = make_params(config, provider, params_signature);

    auto vocab = build_vocabulary(docs, build.prune_top, build.prune_bottom);
    auto index = build_index(docs, std::move(vocab), build, provider);
    index.save(config.get("index"));
    auto t1 = clock_type::now();

    std::printf("index written to %s\n", config.get("index").c_str());
    std::printf("  vocabulary size: %u\n", index.header.vocab_size);
    std::printf("  documents:       %u\n", index.header.doc_count);
    std::printf("  n_b x n_f:       %u x %u (%s)\n", index.header.n_b, index.header.n_f,
                index.header.schema.to_string().c_str());
    std::printf("  sigma_index:     %u\n", index.header.sigma_index);
    std::printf("  postings:        %zu\n", index.posting_count());
    std::printf("  build time:      %.1f ms\n", elapsed_ms(t0, t1));
}

void cmd_query(const Config& config) {
    require_path(config, "index");
    require_path(config, "queries");
    require_path(config, "run");

    auto index = SegmentIndex::load(config.get("index"));
    auto queries = read_queries(config.get("queries"));
    Scorer scorer(scorer_from_name(config.get("scorer")), index.header, index.vocab,
                  config.scorer_options());
    auto topk = static_cast<std::size_t>(config.get_uint("topk"));
    if (topk < 1) {
        throw ConfigError("topk must be >= 1");
    }

    Rankings rankings;
    std::vector<double> latencies_ms;
    std::uint64_t pairs = 0;
    double total_ms = 0.0;
    for (const auto& [query_id, text] : queries) {
        auto tokens = tokenize(text);
        auto t0 = clock_type::now();
        auto assembly = assemble_qd(index, tokens);
        auto ranked = rank_topk(score_all(scorer, assembly, index), topk);
        auto t1 = clock_type::now();
        if (ranked.empty()) {
            std::cerr << "warning: query \"" << query_id << "\" matched no documents\n";
        }
        pairs += assembly.matrices.size();
        latencies_ms.push_back(elapsed_ms(t0, t1));
        total_ms += latencies_ms.back();
        rankings.emplace_back(query_id, std::move(ranked));
    }
    write_run(rankings, config.get("run.tag"), config.get("run"));

    std::sort(latencies_ms.begin(), latencies_ms.end());
    double mean = latencies_ms.empty() ? 0.0 : total_ms / static_cast<double>(latencies_ms.size());
    double p95 = 0.0;
    if (!latencies_ms.empty()) {
        auto idx = static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(latencies_ms.size())));
        p95 = latencies_ms[std::max<std::size_t>(idx, 1) - 1];
    }
    std::printf("run written to %s (%zu queries, scorer %s)\n", config.get("run").c_str(),
                queries.size(), config.get("scorer").c_str());
    std::printf("  query latency:   mean %.3f ms, p95 %.3f ms\n", mean, p95);
    std::printf("  scored pairs:    %llu (%.2f us per q-d pair)\n",
                static_cast<unsigned long long>(pairs),
                pairs == 0 ? 0.0 : total_ms * 1000.0 / static_cast<double>(pairs));
}

void cmd_bench(const Config& config) {
    require_path(config, "index");
    require_path(config, "corpus");
    require_path(config, "queries");
    auto repetitions = config.get_uint("bench.repetitions");
    if (repetitions < 1) {
        throw ConfigError("bench.repetitions must be >= 1");
    }

    auto index = SegmentIndex::load(config.get("index"));
    auto docs = load_corpus(config.get("corpus"));
    auto query_rows = read_queries(config.get("queries"));
    std::vector<std::vector<std::string>> queries;
    queries.reserve(query_rows.size());
    for (const auto& [query_id, text] : query_rows) {
        queries.push_back(tokenize(text));
    }

    // The on-the-fly arm replays the build settings stored in the index
    // header; the embedding provider is reconstructed from its signature
    // unless the config names one explicitly.
    auto stored = parse_kv_text(index.header.build_config);
    SegmenterConfig segmenter;
    segmenter.mode = segment_mode_from_name(stored.at("segment.mode"));
    segmenter.window = static_cast<std::uint32_t>(std::stoul(stored.at("segment.window")));
    segmenter.n_b = index.header.n_b;
    segmenter.depth_cutoff_stddev = std::stod(stored.at("segment.depth_cutoff_stddev"));

    std::string signature;
    auto provider = make_provider(config, signature);
    if (!provider && index.header.schema.needs_embeddings()) {
        const auto& stored_sig = stored.at("embeddings");
        if (stored_sig.rfind("pseudo:", 0) == 0) {
            auto first = stored_sig.find(':');
            auto second = stored_sig.find(':', first + 1);
            provider = std::make_shared<PseudoEmbeddings>(
                std::stoi(stored_sig.substr(first + 1, second - first - 1)),
                std::stoull(stored_sig.substr(second + 1)));
        } else if (stored_sig.rfind("file:", 0) == 0) {
            provider = load_static(stored_sig.substr(5));
        } else {
            throw ConfigError("index was built with embeddings; pass --embeddings or "
                              "--embeddings.pseudo for the on-the-fly arm");
        }
    }
    std::string params_signature;
    auto params = make_params(config, provider, params_signature);
    params.log_floor = index.header.log_floor;

    OnTheFly onthefly(&index.vocab, segmenter, index.header.schema, provider, params,
                      index.header.sigma_index);
    auto report = run_benchmark(index, docs, queries, onthefly, repetitions);

    std::printf("benchmark over %llu q-d pairs, %u repetitions\n",
                static_cast<unsigned long long>(report.pairs_per_rep), report.repetitions);
    std::printf("  index lookup:    %.3f us per q-d pair\n", report.index_us_per_pair);
    std::printf("  on-the-fly:      %.3f us per q-d pair\n", report.onthefly_us_per_pair);
    std::printf("  speedup:         %.2fx\n", report.speedup);
}

void cmd_export_qd(const Config& config) {
    require_path(config, "index");
    require_path(config, "queries");
    require_path(config, "export");

    auto index = SegmentIndex::load(config.get("index"));
    auto queries = read_queries(config.get("queries"));
    std::ofstream out(config.get("export"));
    if (!out) {
        throw IoError("cannot open export file for writing: " + config.get("export"));
    }

    std::size_t records = 0;
    for (const auto& [query_id, text] : queries) {
        auto tokens = tokenize(text);
        auto assembly = assemble_qd(index, tokens);
        auto block_values = assembly.block_values();
        for (const auto& matrix : assembly.matrices) {
            nlohmann::json record;
            record["query_id"] = query_id;
            record["doc_id"] = index.docs[matrix.doc].id;
            record["terms"] = assembly.query_terms;
            auto rows = nlohmann::json::array();
            for (std::size_t row = 0; row < assembly.query_terms.size(); ++row) {
                auto segments = nlohmann::json::array();
                auto block = matrix.row(row, block_values);
                for (std::uint32_t k = 0; k < assembly.n_b; ++k) {
                    auto values = nlohmann::json::array();
                    for (std::uint32_t f = 0; f < assembly.n_f; ++f) {
                        values.push_back(block[static_cast<std::size_t>(k) * assembly.n_f + f]);
                    }
                    segments.push_back(std::move(values));
                }
                rows.push_back(std::move(segments));
            }
            record["blocks"] = std::move(rows);
            out << record.dump() << '\n';
            ++records;
        }
    }
    if (!out) {
        throw IoError("failed writing export file: " + config.get("export"));
    }
    std::printf("exported %zu q-d records to %s\n", records, config.get("export").c_str());
}

void cmd_eval(const Config& config) {
    require_path(config, "run");
    require_path(config, "qrels");
    auto cutoffs = parse_cutoffs(config);

    auto run = read_run(config.get("run"));
    auto qrels = read_qrels(config.get("qrels"));
    auto result = evaluate(run, qrels, cutoffs);

    std::printf("queries evaluated: %zu (skipped: %zu)\n", result.evaluated,
                result.skipped.size());
    for (int c : cutoffs) {
        std::printf("P@%-5d    %.4f\n", c, result.mean.p_at.at(c));
    }
    for (int c : cutoffs) {
        std::printf("nDCG@%-5d %.4f\n", c, result.mean.ndcg_at.at(c));
    }
    std::printf("MAP        %.4f\n", result.mean.ap);
}

void cmd_inspect(const Config& config, const std::string& term) {
    require_path(config, "index");
    auto index = SegmentIndex::load(config.get("index"));

    std::printf("index:             %s\n", config.get("index").c_str());
    std::printf("vocabulary size:   %u\n", index.header.vocab_size);
    std::printf("documents:         %u\n", index.header.doc_count);
    std::printf("avg doc length:    %.2f\n", index.header.avg_doc_len);
    std::printf("n_b:               %u\n", index.header.n_b);
    std::printf("n_f:               %u\n", index.header.n_f);
    std::printf("schema:            %s\n", index.header.schema.to_string().c_str());
    std::printf("sigma_index:       %u\n", index.header.sigma_index);
    std::printf("postings:          %zu\n", index.posting_count());
    if (index.header.vocab_size > 0) {
        std::printf("postings per term: %.2f\n", static_cast<double>(index.posting_count()) /
                                                     index.header.vocab_size);
    }
    std::printf("config hash:       %016llx\n",
                static_cast<unsigned long long>(index.header.build_config_hash));
    std::printf("build config:\n");
    for (const auto& [key, value] : parse_kv_text(index.header.build_config)) {
        std::printf("  %s = %s\n", key.c_str(), value.c_str());
    }
    if (!term.empty()) {
        auto posting = index.lookup(term);
        std::printf("term \"%s\": %zu postings\n", term.c_str(), posting.size());
        for (const auto& entry : posting) {
            std::printf("  %s\n", index.docs[entry.doc].id.c_str());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"segment-level inverted index for interaction-based retrieval"};
    app.require_subcommand(1);

    struct SubcommandState {
        CLI::App* cmd = nullptr;
        std::string config_path;
        std::map<std::string, std::string> flags;
    };
    std::map<std::string, SubcommandState> subs;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"build", "build a .seine index from a corpus"},
        {"query", "rank documents for a query file and write a TREC run"},
        {"bench", "compare index lookup against on-the-fly matrix construction"},
        {"export-qd", "export q-d interaction matrices as JSON Lines"},
        {"eval", "evaluate a run against qrels (P@k, nDCG@k, MAP)"},
        {"inspect", "print index header, statistics, and posting lists"},
    };
    std::string inspect_term;
    for (const auto& [name, help] : commands) {
        auto& state = subs[name];
        state.cmd = app.add_subcommand(name, help);
        state.cmd->add_option("--config", state.config_path,
                              "configuration file (key = value lines)");
        for (const auto& entry : seine::Config::registry()) {
            state.cmd->add_option("--" + std::string(entry.key), state.flags[entry.key],
                                  entry.help);
        }
    }
    subs["inspect"].cmd->add_option("--term", inspect_term, "print this term's posting list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        for (const auto& [name, state] : subs) {
            if (!state.cmd->parsed()) {
                continue;
            }
            seine::Config config;
            if (!state.config_path.empty()) {
                config.load_file(state.config_path);
            }
            if (const char* env_workers = std::getenv("SEINE_WORKERS")) {
                config.set("workers", env_workers);
            }
            for (const auto& entry : seine::Config::registry()) {
                if (state.cmd->count("--" + std::string(entry.key)) > 0) {
                    config.set(entry.key, state.flags.at(entry.key));
                }
            }
            if (name == "build") {
                cmd_build(config);
            } else if (name == "query") {
                cmd_query(config);
            } else if (name == "bench") {
                cmd_bench(config);
            } else if (name == "export-qd") {
                cmd_export_qd(config);
            } else if (name == "eval") {
                cmd_eval(config);
            } else if (name == "inspect") {
                cmd_inspect(config, inspect_term);
            }
        }
        return 0;
    } catch (const seine::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
