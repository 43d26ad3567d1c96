#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "seine/common.hpp"
#include "seine/retrieval.hpp"

namespace seine {

struct RunEntry {
    std::string query_id;
    std::string doc_id;
    std::uint32_t rank = 0;
    double score = 0.0;
    std::string tag;
};

using Run = std::vector<RunEntry>;

/// Ranked results per query, in query order.
using Rankings = std::vector<std::pair<std::string, std::vector<ScoredDoc>>>;

/// (query_id -> doc_id -> graded relevance), ordered by query id.
using Qrels = std::map<std::string, std::map<std::string, int>>;

/// Writes "qid Q0 docid rank score tag" lines; queries in input order, ranks
/// 1..n. Queries with empty rankings produce no lines.
void write_run(const Rankings& rankings, const std::string& tag, const std::string& path);

Run read_run(const std::string& path);

/// TREC qrels: "qid 0 docid grade".
Qrels read_qrels(const std::string& path);

/// Tab-separated "query_id<TAB>query text" lines.
std::vector<std::pair<std::string, std::string>> read_queries(const std::string& path);

struct QueryMetrics {
    std::map<int, double> p_at;
    std::map<int, double> ndcg_at;
    double ap = 0.0;
};

struct EvalResult {
    std::vector<std::pair<std::string, QueryMetrics>> per_query;  ///< run order
    QueryMetrics mean;             ///< over queries with >= 1 relevant document
    std::size_t evaluated = 0;     ///< queries contributing to the mean
    std::vector<std::string> skipped;  ///< run queries missing from the qrels
};

/// P@k (binary, grade > 0), AP over all judged-relevant documents, and
/// exponential-gain nDCG@k. Run queries absent from the qrels are skipped.
EvalResult evaluate(const Run& run, const Qrels& qrels, std::span<const int> cutoffs);

}  // namespace seine
