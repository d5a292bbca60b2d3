// Copyright 2026 the scratch-ir authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "scratchir/inverted_index.hpp"
#include "scratchir/stats.hpp"

namespace scratchir {

/// (query_id, doc_id) -> relevance grade >= 0.
struct Qrels {
    std::map<std::string, std::map<std::string, int>> judgments;

    bool has_query(const std::string& qid) const { return judgments.count(qid) > 0; }
    int grade(const std::string& qid, const std::string& docid) const;  // unjudged -> 0
};

struct MetricReport {
    std::string metric_name;
    int cutoff = 0;
    std::map<std::string, double> per_query;  // ordered by query id
    double aggregate = 0.0;                   // arithmetic mean
    std::vector<std::string> warnings;
};

/// 1/rank of the first doc with grade >= 1 within the top k, else 0.
MetricReport mrr_at_k(const std::vector<RankedList>& run, const Qrels& qrels, int k = 10);

/// DCG with gain 2^grade - 1 and log2(rank + 1) discount, normalized by
/// the ideal DCG; queries with no relevant docs score 0.
MetricReport ndcg_at_k(const std::vector<RankedList>& run, const Qrels& qrels, int k = 10);

/// |relevant in top k| / |relevant|; no relevant -> 0 plus a warning.
MetricReport recall_at_k(const std::vector<RankedList>& run, const Qrels& qrels, int k = 1000);

MetricReport compute_metric(const std::string& name_at_k, const std::vector<RankedList>& run, const Qrels& qrels);

struct SignificanceMatrix {
    std::vector<std::string> system_names;
    std::vector<std::string> letters;                 // a, b, c, ... by position
    std::vector<double> aggregates;
    std::vector<std::vector<double>> raw_p;           // [i][j], i != j
    std::vector<std::vector<double>> corrected_p;     // Bonferroni, min(1, p * comparisons)
    std::vector<std::vector<bool>> better;            // [i][j]: i significantly better than j
    int num_comparisons = 0;
    double alpha = 0.05;

    /// Superscript letters of systems each row is significantly better
    /// than, matching the tables' convention.
    std::string superscripts(size_t system) const;
};

/// Ordered-pair paired t-tests with Bonferroni correction over
/// k*(k-1)/2 comparisons; requires identical query sets.
SignificanceMatrix paired_ttest_bonferroni(const std::vector<MetricReport>& reports, double alpha = 0.05,
                                           const std::vector<std::string>& system_names = {});

// TREC qrels file: `qid 0 docid grade`, whitespace-separated
Qrels load_qrels(const std::string& path);
std::string qrels_to_string(const Qrels& qrels);
void save_qrels(const Qrels& qrels, const std::string& path);

/// Report JSON: per-query values, aggregate, display aggregate
/// (MRR/nDCG shown multiplied by 100).
std::string metric_report_to_json(const std::vector<MetricReport>& reports, double rflops = -1.0);

/// Table-style comparison text with superscript significance letters.
std::string significance_table(const SignificanceMatrix& m, const std::string& metric_name);
std::string significance_to_json(const SignificanceMatrix& m, const std::string& metric_name);

}  // namespace scratchir
