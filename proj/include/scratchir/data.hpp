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

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scratchir/eval.hpp"
#include "scratchir/finetune.hpp"

namespace scratchir {

/// doc_id -> text with insertion order preserved; ids unique, nonempty.
struct Collection {
    std::vector<std::pair<std::string, std::string>> items;
    std::unordered_map<std::string, size_t> index;

    void add(std::string id, std::string text);
    bool contains(const std::string& id) const { return index.count(id) > 0; }
    const std::string& text_of(const std::string& id) const;
    size_t size() const { return items.size(); }
};

// MSMARCO-style TSV: `id \t text`, UTF-8, LF line endings
Collection load_collection(const std::string& path);
Collection load_queries(const std::string& path);  // same format
std::string collection_to_tsv(const Collection& collection);
void save_collection(const Collection& collection, const std::string& path);

// `qid \t pos_docid \t neg1,neg2,...`
Triplets load_triplets(const std::string& path);
std::string triplets_to_tsv(const Triplets& triplets);
void save_triplets(const Triplets& triplets, const std::string& path);

/// Check qrels/triplets ids against a collection and query set.
void check_references(const Triplets& triplets, const Collection& collection, const Collection& queries);
void check_references(const Qrels& qrels, const Collection& collection, const Collection& queries);

struct SyntheticSpec {
    int num_docs = 1000;
    int num_queries = 100;       // training queries
    int num_test_queries = 50;
    int vocab_size_words = 800;
    int keywords_per_topic = 8;
    int num_topics = 20;
    std::pair<int, int> doc_len_range = {30, 60};
    int negatives_per_query = 8;
    uint64_t seed = 42;

    void validate() const;
};

struct SyntheticData {
    Collection collection;
    Collection queries_train;
    Collection queries_test;
    Qrels qrels_train;
    Qrels qrels_test;
    Triplets triplets;
    std::vector<int> doc_topic;    // planted assignment, by collection order
    std::vector<int> train_query_topic;
    std::vector<int> test_query_topic;
};

/// Topic-planted corpus: disjoint keyword sets per topic, Zipf
/// background words; a doc is relevant to a query iff they share the
/// topic; negatives drawn from other topics. Deterministic per seed.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Writes collection.tsv, queries.train.tsv, queries.test.tsv,
/// qrels.train.txt, qrels.test.txt, triplets.train.tsv under dir.
void write_synthetic(const SyntheticData& data, const std::string& dir);

SyntheticSpec synthetic_spec_from_json(const std::string& json_text);

}  // namespace scratchir
