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

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "scratchir/io.hpp"

using namespace scratchir;

namespace {

Qrels make_qrels(std::vector<std::tuple<std::string, std::string, int>> rows) {
    Qrels q;
    for (auto& [qid, docid, grade] : rows) {
        q.judgments[qid][docid] = grade;
    }
    return q;
}

RankedList ranked(const std::string& qid, std::vector<std::string> docs) {
    RankedList rl;
    rl.query_id = qid;
    double score = static_cast<double>(docs.size());
    for (auto& d : docs) {
        rl.hits.push_back({d, score});
        score -= 1.0;
    }
    return rl;
}

}  // namespace

TEST_CASE("mrr examples") {
    Qrels qrels = make_qrels({{"q1", "rel", 1}, {"q2", "rel", 1}, {"q3", "rel", 1}});
    SUBCASE("relevant at rank 1") {
        auto r = mrr_at_k({ranked("q1", {"rel", "x", "y"})}, qrels, 10);
        CHECK(r.per_query.at("q1") == 1.0);
    }
    SUBCASE("relevant first at rank 4") {
        auto r = mrr_at_k({ranked("q1", {"a", "b", "c", "rel"})}, qrels, 10);
        CHECK(r.per_query.at("q1") == 0.25);
    }
    SUBCASE("first relevant at rank 11 with k=10 scores 0") {
        std::vector<std::string> docs;
        for (int i = 0; i < 10; ++i) {
            docs.push_back("junk" + std::to_string(i));
        }
        docs.push_back("rel");
        auto r = mrr_at_k({ranked("q1", docs)}, qrels, 10);
        CHECK(r.per_query.at("q1") == 0.0);
    }
    SUBCASE("depends only on the rank of the first relevant document") {
        auto a = mrr_at_k({ranked("q1", {"x", "rel", "y", "z"})}, qrels, 10);
        auto b = mrr_at_k({ranked("q1", {"x", "rel", "z", "y"})}, qrels, 10);
        CHECK(a.per_query.at("q1") == b.per_query.at("q1"));
    }
    SUBCASE("missing judgments raise") {
        CHECK_THROWS_AS(mrr_at_k({ranked("unknown", {"a"})}, qrels, 10), Error);
    }
}

TEST_CASE("ndcg examples") {
    SUBCASE("perfect ranking of all relevant docs scores 1") {
        Qrels qrels = make_qrels({{"q1", "a", 2}, {"q1", "b", 1}, {"q1", "c", 1}});
        auto r = ndcg_at_k({ranked("q1", {"a", "b", "c"})}, qrels, 10);
        CHECK(r.per_query.at("q1") == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("single grade-1 doc at rank 2") {
        Qrels qrels = make_qrels({{"q1", "rel", 1}});
        auto r = ndcg_at_k({ranked("q1", {"x", "rel"})}, qrels, 10);
        CHECK(r.per_query.at("q1") == doctest::Approx(0.6309297535714575).epsilon(1e-9));
    }
    SUBCASE("no relevant docs scores 0") {
        Qrels qrels = make_qrels({{"q1", "something", 0}});
        auto r = ndcg_at_k({ranked("q1", {"x", "y"})}, qrels, 10);
        CHECK(r.per_query.at("q1") == 0.0);
    }
}

TEST_CASE("ndcg matches a brute-force oracle on random instances") {
    Rng rng(2026);
    for (int trial = 0; trial < 100; ++trial) {
        int num_docs = 3 + static_cast<int>(rng.uniform_u64(20));
        int k = 1 + static_cast<int>(rng.uniform_u64(10));
        Qrels qrels;
        std::vector<std::string> docs;
        for (int d = 0; d < num_docs; ++d) {
            std::string id = "d" + std::to_string(d);
            docs.push_back(id);
            int grade = static_cast<int>(rng.uniform_u64(4));  // 0..3 graded
            if (grade > 0 || rng.uniform_real() < 0.5) {
                qrels.judgments["q"][id] = grade;
            }
        }
        if (qrels.judgments["q"].empty()) {
            qrels.judgments["q"]["d0"] = 0;
        }
        rng.shuffle(docs);
        RankedList rl = ranked("q", docs);

        auto report = ndcg_at_k({rl}, qrels, k);

        // independent oracle: walk the ranking, explicit dcg/idcg
        double dcg = 0.0;
        for (int i = 0; i < std::min<int>(k, static_cast<int>(rl.hits.size())); ++i) {
            auto it = qrels.judgments["q"].find(rl.hits[static_cast<size_t>(i)].doc_id);
            int g = it == qrels.judgments["q"].end() ? 0 : it->second;
            dcg += (std::pow(2.0, g) - 1.0) / (std::log(i + 2.0) / std::log(2.0));
        }
        std::vector<int> grades;
        for (auto& [d, g] : qrels.judgments["q"]) {
            grades.push_back(g);
        }
        std::sort(grades.rbegin(), grades.rend());
        double idcg = 0.0;
        for (int i = 0; i < std::min<int>(k, static_cast<int>(grades.size())); ++i) {
            idcg += (std::pow(2.0, grades[static_cast<size_t>(i)]) - 1.0) / (std::log(i + 2.0) / std::log(2.0));
        }
        double expected = idcg > 0.0 ? dcg / idcg : 0.0;
        CHECK(std::fabs(report.per_query.at("q") - expected) < 1e-9);
    }
}

TEST_CASE("recall examples") {
    Qrels qrels = make_qrels({{"q1", "a", 1}, {"q1", "b", 1}, {"q1", "c", 1}, {"q1", "d", 1}});
    SUBCASE("all relevant retrieved") {
        auto r = recall_at_k({ranked("q1", {"a", "b", "c", "d"})}, qrels, 1000);
        CHECK(r.per_query.at("q1") == 1.0);
    }
    SUBCASE("half of 4 relevant retrieved") {
        auto r = recall_at_k({ranked("q1", {"a", "x", "b", "y"})}, qrels, 3);
        CHECK(r.per_query.at("q1") == 0.5);
    }
    SUBCASE("empty run scores 0") {
        RankedList empty;
        empty.query_id = "q1";
        auto r = recall_at_k({empty}, qrels, 1000);
        CHECK(r.per_query.at("q1") == 0.0);
    }
    SUBCASE("query with no relevant docs warns and scores 0") {
        Qrels none = make_qrels({{"q1", "a", 0}});
        auto r = recall_at_k({ranked("q1", {"a"})}, none, 10);
        CHECK(r.per_query.at("q1") == 0.0);
        CHECK(r.warnings.size() == 1);
    }
}

TEST_CASE("metric values stay in [0,1] and the aggregate is the exact mean") {
    Rng rng(3);
    Qrels qrels;
    std::vector<RankedList> run;
    for (int q = 0; q < 12; ++q) {
        std::string qid = "q" + std::to_string(q);
        std::vector<std::string> docs;
        for (int d = 0; d < 15; ++d) {
            std::string id = "d" + std::to_string(d);
            if (rng.uniform_real() < 0.3) {
                qrels.judgments[qid][id] = 1 + static_cast<int>(rng.uniform_u64(3));
            }
            docs.push_back(id);
        }
        if (qrels.judgments[qid].empty()) {
            qrels.judgments[qid]["d0"] = 1;
        }
        rng.shuffle(docs);
        run.push_back(ranked(qid, docs));
    }
    for (const auto& report : {mrr_at_k(run, qrels, 10), ndcg_at_k(run, qrels, 10), recall_at_k(run, qrels, 10)}) {
        double sum = 0.0;
        for (const auto& [qid, v] : report.per_query) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            sum += v;
        }
        CHECK(report.aggregate == sum / static_cast<double>(report.per_query.size()));
    }
}

TEST_CASE("significance matrix behavior") {
    auto make_report = [](std::vector<double> values) {
        MetricReport r;
        r.metric_name = "mrr";
        r.cutoff = 10;
        for (size_t i = 0; i < values.size(); ++i) {
            r.per_query["q" + std::to_string(100 + i)] = values[i];
        }
        double total = 0.0;
        for (double v : values) {
            total += v;
        }
        r.aggregate = total / static_cast<double>(values.size());
        return r;
    };

    SUBCASE("identical systems show no significance either way") {
        auto a = make_report({0.5, 0.6, 0.7, 0.4, 0.55});
        auto m = paired_ttest_bonferroni({a, a}, 0.05);
        CHECK_FALSE(m.better[0][1]);
        CHECK_FALSE(m.better[1][0]);
        CHECK(m.superscripts(0).empty());
    }
    SUBCASE("clear winner is marked, antisymmetrically") {
        std::vector<double> lo, hi;
        for (int i = 0; i < 12; ++i) {
            lo.push_back(0.3 + 0.01 * (i % 3));
            hi.push_back(0.7 + 0.01 * (i % 4));
        }
        auto m = paired_ttest_bonferroni({make_report(hi), make_report(lo)}, 0.05);
        CHECK(m.better[0][1]);
        CHECK_FALSE(m.better[1][0]);
        CHECK(m.superscripts(0) == "b");
        CHECK(m.superscripts(1).empty());
    }
    SUBCASE("bonferroni with one comparison equals the raw p") {
        auto a = make_report({0.5, 0.62, 0.73, 0.44, 0.52, 0.61});
        auto b = make_report({0.45, 0.6, 0.71, 0.48, 0.5, 0.58});
        auto m = paired_ttest_bonferroni({a, b}, 0.05);
        CHECK(m.num_comparisons == 1);
        CHECK(m.corrected_p[0][1] == doctest::Approx(m.raw_p[0][1]).epsilon(1e-15));
    }
    SUBCASE("bonferroni correction is monotone: corrected >= raw") {
        auto a = make_report({0.5, 0.62, 0.73, 0.44, 0.52, 0.61});
        auto b = make_report({0.45, 0.6, 0.71, 0.48, 0.5, 0.58});
        auto c = make_report({0.2, 0.3, 0.4, 0.2, 0.3, 0.25});
        auto m = paired_ttest_bonferroni({a, b, c}, 0.05);
        CHECK(m.num_comparisons == 3);
        for (size_t i = 0; i < 3; ++i) {
            for (size_t j = 0; j < 3; ++j) {
                if (i != j) {
                    CHECK(m.corrected_p[i][j] >= m.raw_p[i][j]);
                    bool both_marked = m.better[i][j] && m.better[j][i];
                    CHECK_FALSE(both_marked);  // antisymmetry of the marks
                }
            }
        }
    }
    SUBCASE("mismatched query sets throw") {
        auto a = make_report({0.5, 0.6, 0.7});
        MetricReport b = a;
        b.per_query.erase(b.per_query.begin());
        b.per_query["zz"] = 0.5;
        CHECK_THROWS_AS(paired_ttest_bonferroni({a, b}, 0.05), Error);
    }
}

TEST_CASE("qrels file round-trip") {
    Qrels q = make_qrels({{"3", "7", 1}, {"3", "9", 0}, {"4", "1", 2}});
    auto path = (std::filesystem::temp_directory_path() / "sir_qrels_test.txt").string();
    save_qrels(q, path);
    std::string text = read_file(path);
    CHECK(text.find("3 0 7 1\n") != std::string::npos);
    Qrels back = load_qrels(path);
    CHECK(back.judgments == q.judgments);
    std::filesystem::remove(path);
}

TEST_CASE("report JSON carries the x100 display convention") {
    MetricReport r;
    r.metric_name = "mrr";
    r.cutoff = 10;
    r.per_query["q1"] = 0.5;
    r.aggregate = 0.5;
    std::string js = metric_report_to_json({r}, 0.75);
    CHECK(js.find("\"display_aggregate\": 50.0") != std::string::npos);
    CHECK(js.find("\"rflops\": 0.75") != std::string::npos);
}
