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

#include "scratchir/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "scratchir/io.hpp"

namespace scratchir {

using json = nlohmann::ordered_json;

int Qrels::grade(const std::string& qid, const std::string& docid) const {
    auto qit = judgments.find(qid);
    if (qit == judgments.end()) {
        return 0;
    }
    auto dit = qit->second.find(docid);
    return dit == qit->second.end() ? 0 : dit->second;  // unjudged counts as non-relevant
}

namespace {

bool display_times_100(const std::string& metric) {
    return metric.rfind("mrr", 0) == 0 || metric.rfind("ndcg", 0) == 0;
}

void finalize(MetricReport& report) {
    double total = 0.0;
    for (const auto& [qid, v] : report.per_query) {
        total += v;
    }
    report.aggregate = report.per_query.empty() ? 0.0 : total / static_cast<double>(report.per_query.size());
}

void require_judged(const std::vector<RankedList>& run, const Qrels& qrels) {
    for (const auto& rl : run) {
        if (!qrels.has_query(rl.query_id)) {
            throw_data("QueryMissingJudgments: query " + rl.query_id + " has no qrels entry");
        }
    }
}

}  // namespace

MetricReport mrr_at_k(const std::vector<RankedList>& run, const Qrels& qrels, int k) {
    require_judged(run, qrels);
    MetricReport report;
    report.metric_name = "mrr";
    report.cutoff = k;
    for (const auto& rl : run) {
        double value = 0.0;
        int limit = std::min<int>(k, static_cast<int>(rl.hits.size()));
        for (int rank = 1; rank <= limit; ++rank) {
            if (qrels.grade(rl.query_id, rl.hits[static_cast<size_t>(rank - 1)].doc_id) >= 1) {
                value = 1.0 / static_cast<double>(rank);
                break;
            }
        }
        report.per_query[rl.query_id] = value;
    }
    finalize(report);
    return report;
}

MetricReport ndcg_at_k(const std::vector<RankedList>& run, const Qrels& qrels, int k) {
    require_judged(run, qrels);
    MetricReport report;
    report.metric_name = "ndcg";
    report.cutoff = k;
    for (const auto& rl : run) {
        double dcg = 0.0;
        int limit = std::min<int>(k, static_cast<int>(rl.hits.size()));
        for (int rank = 1; rank <= limit; ++rank) {
            int g = qrels.grade(rl.query_id, rl.hits[static_cast<size_t>(rank - 1)].doc_id);
            if (g > 0) {
                dcg += (std::pow(2.0, g) - 1.0) / std::log2(static_cast<double>(rank) + 1.0);
            }
        }
        std::vector<int> grades;
        for (const auto& [docid, g] : qrels.judgments.at(rl.query_id)) {
            if (g > 0) {
                grades.push_back(g);
            }
        }
        std::sort(grades.rbegin(), grades.rend());
        double idcg = 0.0;
        for (int rank = 1; rank <= std::min<int>(k, static_cast<int>(grades.size())); ++rank) {
            idcg += (std::pow(2.0, grades[static_cast<size_t>(rank - 1)]) - 1.0) /
                    std::log2(static_cast<double>(rank) + 1.0);
        }
        report.per_query[rl.query_id] = idcg > 0.0 ? dcg / idcg : 0.0;
    }
    finalize(report);
    return report;
}

MetricReport recall_at_k(const std::vector<RankedList>& run, const Qrels& qrels, int k) {
    require_judged(run, qrels);
    MetricReport report;
    report.metric_name = "recall";
    report.cutoff = k;
    for (const auto& rl : run) {
        int64_t relevant = 0;
        for (const auto& [docid, g] : qrels.judgments.at(rl.query_id)) {
            relevant += g > 0 ? 1 : 0;
        }
        if (relevant == 0) {
            report.per_query[rl.query_id] = 0.0;
            report.warnings.push_back("QueryWithNoRelevant: query " + rl.query_id + " scored 0");
            continue;
        }
        int64_t found = 0;
        int limit = std::min<int>(k, static_cast<int>(rl.hits.size()));
        for (int rank = 1; rank <= limit; ++rank) {
            if (qrels.grade(rl.query_id, rl.hits[static_cast<size_t>(rank - 1)].doc_id) >= 1) {
                ++found;
            }
        }
        report.per_query[rl.query_id] = static_cast<double>(found) / static_cast<double>(relevant);
    }
    finalize(report);
    return report;
}

MetricReport compute_metric(const std::string& name_at_k, const std::vector<RankedList>& run, const Qrels& qrels) {
    auto at = name_at_k.find('@');
    if (at == std::string::npos) {
        throw_config("metric must look like name@k: " + name_at_k);
    }
    std::string name = name_at_k.substr(0, at);
    int k = std::atoi(name_at_k.c_str() + at + 1);
    if (k < 1) {
        throw_config("bad metric cutoff in: " + name_at_k);
    }
    if (name == "mrr") {
        return mrr_at_k(run, qrels, k);
    }
    if (name == "ndcg") {
        return ndcg_at_k(run, qrels, k);
    }
    if (name == "recall" || name == "r") {
        return recall_at_k(run, qrels, k);
    }
    throw_config("unknown metric: " + name);
}

std::string SignificanceMatrix::superscripts(size_t system) const {
    std::string out;
    for (size_t j = 0; j < system_names.size(); ++j) {
        if (j != system && better[system][j]) {
            out += letters[j];
        }
    }
    return out;
}

SignificanceMatrix paired_ttest_bonferroni(const std::vector<MetricReport>& reports, double alpha,
                                           const std::vector<std::string>& system_names) {
    size_t k = reports.size();
    if (k < 2) {
        throw_data("paired_ttest_bonferroni: need at least 2 systems");
    }
    if (!system_names.empty() && system_names.size() != k) {
        throw_data("paired_ttest_bonferroni: system name count mismatch");
    }
    const auto& base = reports[0].per_query;
    if (base.size() < 2) {
        throw_data("paired_ttest_bonferroni: need at least 2 queries");
    }
    for (const auto& r : reports) {
        if (r.per_query.size() != base.size()) {
            throw_data("MismatchedQuerySets: systems evaluated on different query counts");
        }
        auto it = base.begin();
        for (const auto& [qid, v] : r.per_query) {
            if (qid != it->first) {
                throw_data("MismatchedQuerySets: query " + qid + " not shared by all systems");
            }
            ++it;
        }
    }

    SignificanceMatrix m;
    m.alpha = alpha;
    m.num_comparisons = static_cast<int>(k * (k - 1) / 2);
    std::vector<std::vector<double>> values(k);
    for (size_t i = 0; i < k; ++i) {
        m.system_names.push_back(system_names.empty() ? "system_" + std::to_string(i) : system_names[i]);
        m.letters.push_back(std::string(1, static_cast<char>('a' + i)));
        m.aggregates.push_back(reports[i].aggregate);
        for (const auto& [qid, v] : reports[i].per_query) {
            values[i].push_back(v);
        }
    }
    m.raw_p.assign(k, std::vector<double>(k, 1.0));
    m.corrected_p.assign(k, std::vector<double>(k, 1.0));
    m.better.assign(k, std::vector<bool>(k, false));
    for (size_t i = 0; i < k; ++i) {
        for (size_t j = 0; j < k; ++j) {
            if (i == j) {
                continue;
            }
            PairedTTest tt = paired_ttest(values[i], values[j]);
            m.raw_p[i][j] = tt.p_value;
            m.corrected_p[i][j] = std::min(1.0, tt.p_value * static_cast<double>(m.num_comparisons));
            m.better[i][j] = m.corrected_p[i][j] <= alpha && tt.mean_diff > 0.0;
        }
    }
    return m;
}

Qrels load_qrels(const std::string& path) {
    std::string data = read_file(path);
    Qrels out;
    std::istringstream in(data);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        std::string qid, zero, docid;
        long grade;
        if (!(ls >> qid >> zero >> docid >> grade) || grade < 0) {
            throw_data("MalformedLine: " + path + ":" + std::to_string(line_no));
        }
        auto [it, inserted] = out.judgments[qid].emplace(docid, static_cast<int>(grade));
        if (!inserted) {
            throw_data("DuplicateId: (" + qid + ", " + docid + ") judged twice in " + path);
        }
    }
    return out;
}

std::string qrels_to_string(const Qrels& qrels) {
    std::string out;
    for (const auto& [qid, docs] : qrels.judgments) {
        for (const auto& [docid, grade] : docs) {
            out += qid + " 0 " + docid + " " + std::to_string(grade) + "\n";
        }
    }
    return out;
}

void save_qrels(const Qrels& qrels, const std::string& path) { write_file(path, qrels_to_string(qrels)); }

std::string metric_report_to_json(const std::vector<MetricReport>& reports, double rflops) {
    json out;
    out["format_version"] = 1;
    json metrics = json::array();
    for (const auto& r : reports) {
        json jr;
        std::string name = r.metric_name + "@" + std::to_string(r.cutoff);
        jr["metric"] = name;
        jr["aggregate"] = r.aggregate;
        jr["display_aggregate"] = display_times_100(r.metric_name) ? r.aggregate * 100.0 : r.aggregate;
        json pq = json::object();
        for (const auto& [qid, v] : r.per_query) {
            pq[qid] = v;
        }
        jr["per_query"] = pq;
        if (!r.warnings.empty()) {
            jr["warnings"] = r.warnings;
        }
        metrics.push_back(jr);
    }
    out["metrics"] = metrics;
    if (rflops >= 0.0) {
        out["rflops"] = rflops;
    }
    return out.dump(2) + "\n";
}

std::string significance_table(const SignificanceMatrix& m, const std::string& metric_name) {
    std::ostringstream out;
    bool x100 = display_times_100(metric_name);
    out << "#  system";
    for (size_t pad = 6; pad < 40; ++pad) {
        out << ' ';
    }
    out << metric_name << "\n";
    char buf[64];
    for (size_t i = 0; i < m.system_names.size(); ++i) {
        double shown = x100 ? m.aggregates[i] * 100.0 : m.aggregates[i];
        std::snprintf(buf, sizeof(buf), "%.4g", shown);
        std::string name = m.system_names[i];
        if (name.size() > 38) {
            name.resize(38);
        }
        out << m.letters[i] << "  " << name;
        for (size_t pad = name.size(); pad < 40; ++pad) {
            out << ' ';
        }
        out << buf;
        std::string sup = m.superscripts(i);
        if (!sup.empty()) {
            out << "^{" << sup << "}";
        }
        out << "\n";
    }
    return out.str();
}

std::string significance_to_json(const SignificanceMatrix& m, const std::string& metric_name) {
    json out;
    out["format_version"] = 1;
    out["metric"] = metric_name;
    out["alpha"] = m.alpha;
    out["num_comparisons"] = m.num_comparisons;
    json systems = json::array();
    for (size_t i = 0; i < m.system_names.size(); ++i) {
        json s;
        s["letter"] = m.letters[i];
        s["name"] = m.system_names[i];
        s["aggregate"] = m.aggregates[i];
        s["display_aggregate"] = display_times_100(metric_name) ? m.aggregates[i] * 100.0 : m.aggregates[i];
        s["significantly_better_than"] = m.superscripts(i);
        systems.push_back(s);
    }
    out["systems"] = systems;
    json raw = json::array();
    json corrected = json::array();
    json better = json::array();
    for (size_t i = 0; i < m.system_names.size(); ++i) {
        raw.push_back(m.raw_p[i]);
        corrected.push_back(m.corrected_p[i]);
        json row = json::array();
        for (size_t j = 0; j < m.system_names.size(); ++j) {
            row.push_back(static_cast<bool>(m.better[i][j]));
        }
        better.push_back(row);
    }
    out["raw_p"] = raw;
    out["corrected_p"] = corrected;
    out["better"] = better;
    return out.dump(2) + "\n";
}

}  // namespace scratchir
