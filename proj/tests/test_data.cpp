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

#include "scratchir/data.hpp"

#include <filesystem>
#include <set>

#include "doctest.h"
#include "scratchir/io.hpp"

using namespace scratchir;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("collection TSV parsing") {
    auto path = temp_path("sir_coll_test.tsv");
    write_file(path, "7\thello world\n8\tsecond doc\n");
    Collection c = load_collection(path);
    CHECK(c.size() == 2);
    CHECK(c.text_of("7") == "hello world");
    CHECK(c.items[1].first == "8");

    SUBCASE("round-trip is the identity") {
        CHECK(collection_to_tsv(c) == read_file(path));
    }
    SUBCASE("malformed line reports its number") {
        write_file(path, "7\tok\nbroken-line\n");
        try {
            load_collection(path);
            FAIL("expected MalformedLine");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find(":2") != std::string::npos);
        }
    }
    SUBCASE("duplicate ids are rejected") {
        write_file(path, "7\ta\n7\tb\n");
        CHECK_THROWS_AS(load_collection(path), Error);
    }
    std::filesystem::remove(path);
}

TEST_CASE("qrels line parse example") {
    auto path = temp_path("sir_qrels_parse.txt");
    write_file(path, "3 0 7 1\n");
    Qrels q = load_qrels(path);
    CHECK(q.grade("3", "7") == 1);
    std::filesystem::remove(path);
}

TEST_CASE("triplets parsing and referential integrity") {
    auto path = temp_path("sir_trip_test.tsv");
    write_file(path, "q1\td1\td2,d3\nq2\td4\td5\n");
    Triplets t = load_triplets(path);
    REQUIRE(t.size() == 2);
    CHECK(t[0].query_id == "q1");
    CHECK(t[0].positive_id == "d1");
    CHECK(t[0].negative_ids == std::vector<std::string>{"d2", "d3"});

    SUBCASE("round-trip is the identity") {
        CHECK(triplets_to_tsv(t) == read_file(path));
    }
    SUBCASE("positive among negatives is rejected") {
        write_file(path, "q1\td1\td1,d2\n");
        CHECK_THROWS_AS(load_triplets(path), Error);
    }
    SUBCASE("dangling references are caught") {
        Collection coll;
        coll.add("d1", "x");
        coll.add("d2", "y");
        coll.add("d3", "z");
        coll.add("d4", "w");
        Collection queries;
        queries.add("q1", "a");
        queries.add("q2", "b");
        // d5 is missing from the collection
        CHECK_THROWS_AS(check_references(t, coll, queries), Error);
        coll.add("d5", "v");
        CHECK_NOTHROW(check_references(t, coll, queries));
    }
    std::filesystem::remove(path);
}

TEST_CASE("synthetic generator postconditions on the default spec") {
    SyntheticSpec spec;  // 1000 docs, 100 train + 50 test queries, 20 topics
    SyntheticData data = generate_synthetic(spec);

    CHECK(data.collection.size() == 1000);
    CHECK(data.queries_train.size() == 100);
    CHECK(data.queries_test.size() == 50);
    CHECK(data.triplets.size() == 100);

    // every train query has >= 1 relevant doc and enough negatives
    for (const auto& t : data.triplets) {
        CHECK(t.negative_ids.size() >= static_cast<size_t>(spec.negatives_per_query));
        for (const auto& n : t.negative_ids) {
            CHECK(n != t.positive_id);
        }
    }
    for (const auto& [qid, judged] : data.qrels_test.judgments) {
        int relevant = 0;
        for (const auto& [docid, g] : judged) {
            relevant += g > 0 ? 1 : 0;
        }
        CHECK(relevant >= 1);
    }
    check_references(data.triplets, data.collection, data.queries_train);
    check_references(data.qrels_train, data.collection, data.queries_train);
    check_references(data.qrels_test, data.collection, data.queries_test);

    // qrels are consistent with the planted topics
    for (size_t q = 0; q < data.queries_test.items.size(); ++q) {
        const auto& qid = data.queries_test.items[q].first;
        int topic = data.test_query_topic[q];
        for (size_t d = 0; d < data.collection.items.size(); ++d) {
            bool relevant = data.qrels_test.grade(qid, data.collection.items[d].first) > 0;
            CHECK(relevant == (data.doc_topic[d] == topic));
        }
    }
}

TEST_CASE("single-topic degenerate spec: every doc relevant to every query") {
    SyntheticSpec spec;
    spec.num_docs = 30;
    spec.num_queries = 5;
    spec.num_test_queries = 3;
    spec.num_topics = 1;
    spec.vocab_size_words = 60;
    SyntheticData data = generate_synthetic(spec);
    for (const auto& [qid, judged] : data.qrels_train.judgments) {
        CHECK(judged.size() == 30);
    }
}

TEST_CASE("generator determinism: same seed gives byte-identical files") {
    SyntheticSpec spec;
    spec.num_docs = 60;
    spec.num_queries = 10;
    spec.num_test_queries = 5;
    spec.num_topics = 5;
    spec.vocab_size_words = 120;
    SyntheticData a = generate_synthetic(spec);
    SyntheticData b = generate_synthetic(spec);
    CHECK(collection_to_tsv(a.collection) == collection_to_tsv(b.collection));
    CHECK(collection_to_tsv(a.queries_test) == collection_to_tsv(b.queries_test));
    CHECK(triplets_to_tsv(a.triplets) == triplets_to_tsv(b.triplets));
    CHECK(qrels_to_string(a.qrels_train) == qrels_to_string(b.qrels_train));

    spec.seed = 43;
    SyntheticData c = generate_synthetic(spec);
    CHECK(collection_to_tsv(a.collection) != collection_to_tsv(c.collection));
}

TEST_CASE("keyword-overlap oracle retriever reaches MRR@10 >= 0.95") {
    SyntheticSpec spec;  // default: the pipeline's task
    SyntheticData data = generate_synthetic(spec);

    auto words_of = [](const std::string& text) {
        std::set<std::string> out;
        size_t start = 0;
        while (start < text.size()) {
            size_t end = text.find(' ', start);
            if (end == std::string::npos) {
                end = text.size();
            }
            if (end > start) {
                out.insert(text.substr(start, end - start));
            }
            start = end + 1;
        }
        return out;
    };

    std::vector<std::pair<std::string, std::set<std::string>>> doc_words;
    for (const auto& [id, text] : data.collection.items) {
        doc_words.emplace_back(id, words_of(text));
    }

    std::vector<RankedList> run;
    for (const auto& [qid, qtext] : data.queries_test.items) {
        auto qw = words_of(qtext);
        std::vector<std::pair<std::string, double>> scored;
        for (const auto& [docid, dw] : doc_words) {
            int overlap = 0;
            for (const auto& w : qw) {
                overlap += dw.count(w) ? 1 : 0;
            }
            if (overlap > 0) {
                scored.emplace_back(docid, static_cast<double>(overlap));
            }
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) {
                return a.second > b.second;
            }
            return a.first < b.first;
        });
        RankedList rl;
        rl.query_id = qid;
        for (size_t i = 0; i < std::min<size_t>(scored.size(), 10); ++i) {
            rl.hits.push_back({scored[i].first, scored[i].second});
        }
        run.push_back(std::move(rl));
    }
    auto report = mrr_at_k(run, data.qrels_test, 10);
    CHECK(report.aggregate >= 0.95);
}

TEST_CASE("write_synthetic produces loadable, reference-consistent files") {
    SyntheticSpec spec;
    spec.num_docs = 40;
    spec.num_queries = 8;
    spec.num_test_queries = 4;
    spec.num_topics = 4;
    spec.vocab_size_words = 100;
    SyntheticData data = generate_synthetic(spec);
    auto dir = (std::filesystem::temp_directory_path() / "sir_synth_test").string();
    write_synthetic(data, dir);
    Collection coll = load_collection(dir + "/collection.tsv");
    Collection qtrain = load_queries(dir + "/queries.train.tsv");
    Triplets trip = load_triplets(dir + "/triplets.train.tsv");
    Qrels qrels = load_qrels(dir + "/qrels.train.txt");
    CHECK(coll.size() == 40);
    check_references(trip, coll, qtrain);
    check_references(qrels, coll, qtrain);
    std::filesystem::remove_all(dir);
}

TEST_CASE("synthetic spec JSON rejects unknown keys") {
    CHECK_THROWS_AS(synthetic_spec_from_json(R"({"num_docs": 10, "bogus": 1})"), Error);
    SyntheticSpec spec = synthetic_spec_from_json(R"({"num_docs": 50, "num_topics": 5, "num_queries": 10})");
    CHECK(spec.num_docs == 50);
    CHECK(spec.num_topics == 5);
}
