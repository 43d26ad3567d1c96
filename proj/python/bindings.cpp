#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "seine/bench.hpp"
#include "seine/corpus.hpp"
#include "seine/embeddings.hpp"
#include "seine/index.hpp"
#include "seine/interactions.hpp"
#include "seine/retrieval.hpp"
#include "seine/segmenter.hpp"
#include "seine/trec.hpp"

namespace py = pybind11;
using namespace seine;

namespace {

SegmenterConfig make_segmenter(const std::string& mode, std::uint32_t window, std::uint32_t n_b,
                               double depth_cutoff_stddev) {
    SegmenterConfig config;
    config.mode = segment_mode_from_name(mode);
    config.window = window;
    config.n_b = n_b;
    config.depth_cutoff_stddev = depth_cutoff_stddev;
    return config;
}

std::vector<std::vector<float>> block_as_rows(std::span<const float> block, std::uint32_t n_b,
                                              std::uint32_t n_f) {
    std::vector<std::vector<float>> rows(n_b);
    for (std::uint32_t k = 0; k < n_b; ++k) {
        rows[k].assign(block.begin() + static_cast<std::ptrdiff_t>(k) * n_f,
                       block.begin() + static_cast<std::ptrdiff_t>(k + 1) * n_f);
    }
    return rows;
}

}  // namespace

PYBIND11_MODULE(_seine, m) {
    m.doc() = "segment-level inverted index with precomputed query-document interactions";

    py::register_exception<ConfigError>(m, "SeineConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "SeineIoError", PyExc_IOError);

    py::class_<Document>(m, "Document")
        .def(py::init([](std::string id, std::string text) {
                 Document doc;
                 doc.id = std::move(id);
                 doc.text = std::move(text);
                 doc.tokens = tokenize(doc.text);
                 return doc;
             }),
             py::arg("id"), py::arg("text"))
        .def_readonly("id", &Document::id)
        .def_readonly("text", &Document::text)
        .def_readonly("tokens", &Document::tokens)
        .def("__repr__", [](const Document& doc) {
            return "Document(id='" + doc.id + "', tokens=" + std::to_string(doc.tokens.size()) +
                   ")";
        });

    m.def("tokenize", [](const std::string& text) { return tokenize(text); }, py::arg("text"),
          "Lowercased alphanumeric-run tokens, in order of appearance.");

    m.def("load_corpus", [](const std::string& path) { return load_corpus(path); },
          py::arg("path"), "Read a JSON Lines corpus ({\"id\", \"text\"} per line).");

    py::class_<Vocabulary>(m, "Vocabulary")
        .def_property_readonly("terms", [](const Vocabulary& v) { return v.terms; })
        .def_property_readonly("collection_size",
                               [](const Vocabulary& v) { return v.collection_size; })
        .def_property_readonly("avg_doc_len", [](const Vocabulary& v) { return v.avg_doc_len; })
        .def("__len__", &Vocabulary::size)
        .def("__contains__",
             [](const Vocabulary& v, const std::string& term) { return v.contains(term); })
        .def("idf",
             [](const Vocabulary& v, const std::string& term) -> std::optional<double> {
                 auto id = v.id_of(term);
                 if (!id) {
                     return std::nullopt;
                 }
                 return v.idf[*id];
             },
             py::arg("term"))
        .def("df",
             [](const Vocabulary& v, const std::string& term) -> std::optional<std::uint32_t> {
                 auto id = v.id_of(term);
                 if (!id) {
                     return std::nullopt;
                 }
                 return v.df[*id];
             },
             py::arg("term"));

    m.def("build_vocabulary",
          [](const std::vector<Document>& docs, double prune_top, double prune_bottom) {
              return build_vocabulary(docs, prune_top, prune_bottom);
          },
          py::arg("docs"), py::arg("prune_top") = 0.1, py::arg("prune_bottom") = 0.1);

    py::class_<SegmentedDocument>(m, "SegmentedDocument")
        .def_readonly("doc_id", &SegmentedDocument::doc_id)
        .def_readonly("raw_segment_count", &SegmentedDocument::raw_segment_count)
        .def_property_readonly("segments", [](const SegmentedDocument& doc) {
            std::vector<std::vector<std::string>> out;
            out.reserve(doc.segments.size());
            for (const auto& segment : doc.segments) {
                out.push_back(segment.tokens);
            }
            return out;
        });

    m.def("segment_document",
          [](const Document& doc, const std::string& mode, std::uint32_t window, std::uint32_t n_b,
             double depth_cutoff_stddev) {
              return segment_document(doc,
                                      make_segmenter(mode, window, n_b, depth_cutoff_stddev));
          },
          py::arg("doc"), py::arg("mode") = "tiling", py::arg("window") = 20, py::arg("n_b") = 20,
          py::arg("depth_cutoff_stddev") = 0.5);

    py::class_<EmbeddingProvider, std::shared_ptr<EmbeddingProvider>>(m, "EmbeddingProvider")
        .def_property_readonly("dim", &EmbeddingProvider::dim)
        .def("vector",
             [](const EmbeddingProvider& provider, const std::string& token)
                 -> std::optional<std::vector<float>> { return provider.static_vector(token); },
             py::arg("token"));

    m.def("pseudo_embeddings",
          [](int dim, std::uint64_t seed) -> std::shared_ptr<EmbeddingProvider> {
              return std::make_shared<PseudoEmbeddings>(dim, seed);
          },
          py::arg("dim") = 16, py::arg("seed") = 42,
          "Deterministic hash-derived unit-vector embeddings.");

    m.def("load_embeddings",
          [](const std::string& path) -> std::shared_ptr<EmbeddingProvider> {
              return load_static(path);
          },
          py::arg("path"), "Load a word2vec-style text embeddings file.");

    m.def("load_contextual",
          [](const std::string& path, std::shared_ptr<EmbeddingProvider> base)
              -> std::shared_ptr<EmbeddingProvider> { return load_contextual(path, base); },
          py::arg("path"), py::arg("base"),
          "Overlay per-occurrence contextual vectors on a base provider.");

    py::class_<FunctionParams>(m, "FunctionParams")
        .def_static("defaults", &FunctionParams::defaults, py::arg("dim"))
        .def_static("load", &FunctionParams::load, py::arg("path"), py::arg("dim"))
        .def_readwrite("a", &FunctionParams::a)
        .def_readwrite("b", &FunctionParams::b)
        .def_readwrite("mu", &FunctionParams::mu)
        .def_readwrite("log_floor", &FunctionParams::log_floor)
        .def_readwrite("gauss_sigma2", &FunctionParams::gauss_sigma2)
        .def_readwrite("maxsp_softplus_only", &FunctionParams::maxsp_softplus_only);

    py::class_<SegmentIndex>(m, "SegmentIndex")
        .def_property_readonly("vocab_size",
                               [](const SegmentIndex& index) { return index.header.vocab_size; })
        .def_property_readonly("doc_count",
                               [](const SegmentIndex& index) { return index.header.doc_count; })
        .def_property_readonly("n_b", [](const SegmentIndex& index) { return index.header.n_b; })
        .def_property_readonly("n_f", [](const SegmentIndex& index) { return index.header.n_f; })
        .def_property_readonly(
            "schema", [](const SegmentIndex& index) { return index.header.schema.to_string(); })
        .def_property_readonly(
            "sigma_index", [](const SegmentIndex& index) { return index.header.sigma_index; })
        .def_property_readonly("avg_doc_len",
                               [](const SegmentIndex& index) { return index.header.avg_doc_len; })
        .def_property_readonly("posting_count",
                               [](const SegmentIndex& index) { return index.posting_count(); })
        .def_property_readonly("vocabulary",
                               [](const SegmentIndex& index) { return index.vocab; })
        .def_property_readonly("doc_ids",
                               [](const SegmentIndex& index) {
                                   std::vector<std::string> ids;
                                   ids.reserve(index.docs.size());
                                   for (const auto& doc : index.docs) {
                                       ids.push_back(doc.id);
                                   }
                                   return ids;
                               })
        .def("save", &SegmentIndex::save, py::arg("path"))
        .def_static("load", &SegmentIndex::load, py::arg("path"))
        .def("lookup",
             [](const SegmentIndex& index, const std::string& term) {
                 std::vector<std::pair<std::string, std::vector<std::vector<float>>>> out;
                 for (const auto& entry : index.lookup(term)) {
                     out.emplace_back(index.docs[entry.doc].id,
                                      block_as_rows(entry.block, index.header.n_b,
                                                    index.header.n_f));
                 }
                 return out;
             },
             py::arg("term"),
             "Posting list as [(doc_id, n_b x n_f block)], empty for unknown terms.")
        .def("assemble_qd",
             [](const SegmentIndex& index, const std::vector<std::string>& query_tokens) {
                 auto assembly = assemble_qd(index, query_tokens);
                 py::list matrices;
                 auto block_values = assembly.block_values();
                 for (const auto& matrix : assembly.matrices) {
                     py::list rows;
                     for (std::size_t row = 0; row < assembly.query_terms.size(); ++row) {
                         rows.append(block_as_rows(matrix.row(row, block_values), assembly.n_b,
                                                   assembly.n_f));
                     }
                     matrices.append(py::make_tuple(index.docs[matrix.doc].id, rows));
                 }
                 return py::make_tuple(assembly.query_terms, matrices);
             },
             py::arg("query_tokens"),
             "Returns (matched_terms, [(doc_id, rows)]) with one n_b x n_f block per term.")
        .def("search",
             [](const SegmentIndex& index, const std::string& query, const std::string& scorer_name_arg,
                std::size_t k, double k1, double b) {
                 ScorerOptions options;
                 options.k1 = k1;
                 options.b = b;
                 Scorer scorer(scorer_from_name(scorer_name_arg), index.header, index.vocab,
                               options);
                 auto tokens = tokenize(query);
                 auto assembly = assemble_qd(index, tokens);
                 auto ranked = rank_topk(score_all(scorer, assembly, index), k);
                 std::vector<std::pair<std::string, double>> out;
                 out.reserve(ranked.size());
                 for (const auto& scored : ranked) {
                     out.emplace_back(scored.doc_id, scored.score);
                 }
                 return out;
             },
             py::arg("query"), py::arg("scorer") = "bm25", py::arg("k") = 10,
             py::arg("k1") = 1.2, py::arg("b") = 0.75,
             "Tokenize, assemble, score, and rank; returns [(doc_id, score)].");

    m.def("build_index",
          [](const std::vector<Document>& docs, const std::string& schema,
             std::shared_ptr<EmbeddingProvider> provider, std::uint32_t n_b,
             const std::string& mode, std::uint32_t window, double depth_cutoff_stddev,
             std::uint32_t sigma_index, double prune_top, double prune_bottom, int workers,
             std::optional<FunctionParams> params) {
              BuildConfig config;
              config.segmenter = make_segmenter(mode, window, n_b, depth_cutoff_stddev);
              config.schema = InteractionSchema::parse(schema);
              config.sigma_index = sigma_index;
              config.workers = workers;
              config.prune_top = prune_top;
              config.prune_bottom = prune_bottom;
              int dim = provider ? provider->dim() : 0;
              config.params = params ? std::move(*params) : FunctionParams::defaults(dim);
              if (provider) {
                  if (auto pseudo = std::dynamic_pointer_cast<PseudoEmbeddings>(provider)) {
                      config.embedding_signature = "pseudo:" + std::to_string(pseudo->dim()) +
                                                   ":" + std::to_string(pseudo->seed());
                  } else {
                      config.embedding_signature = "python-provider";
                  }
              }
              auto vocab = build_vocabulary(docs, prune_top, prune_bottom);
              return build_index(docs, std::move(vocab), config, std::move(provider));
          },
          py::arg("docs"), py::arg("schema") = "tf,iidf", py::arg("provider") = nullptr,
          py::arg("n_b") = 20, py::arg("mode") = "tiling", py::arg("window") = 20,
          py::arg("depth_cutoff_stddev") = 0.5, py::arg("sigma_index") = 0,
          py::arg("prune_top") = 0.1, py::arg("prune_bottom") = 0.1, py::arg("workers") = 1,
          py::arg("params") = std::nullopt,
          "Segment the corpus and precompute interaction blocks into an index.");

    m.def("evaluate_run",
          [](const std::string& run_path, const std::string& qrels_path,
             const std::vector<int>& cutoffs) {
              auto result = evaluate(read_run(run_path), read_qrels(qrels_path), cutoffs);
              py::dict out;
              out["evaluated"] = result.evaluated;
              out["skipped"] = result.skipped;
              out["map"] = result.mean.ap;
              py::dict p_at;
              py::dict ndcg_at;
              for (int c : cutoffs) {
                  p_at[py::int_(c)] = result.mean.p_at.at(c);
                  ndcg_at[py::int_(c)] = result.mean.ndcg_at.at(c);
              }
              out["p"] = p_at;
              out["ndcg"] = ndcg_at;
              return out;
          },
          py::arg("run_path"), py::arg("qrels_path"),
          py::arg("cutoffs") = std::vector<int>{5, 10},
          "TREC-style evaluation: P@k, nDCG@k, and MAP means.");
}
