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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "json.hpp"
#include "scratchir/io.hpp"

namespace scratchir {

using json = nlohmann::ordered_json;

void Collection::add(std::string id, std::string text) {
    if (id.empty()) {
        throw_data("Collection: empty id");
    }
    if (!index.emplace(id, items.size()).second) {
        throw_data("DuplicateId: " + id);
    }
    items.emplace_back(std::move(id), std::move(text));
}

const std::string& Collection::text_of(const std::string& id) const {
    auto it = index.find(id);
    if (it == index.end()) {
        throw_data("DanglingReference: unknown id " + id);
    }
    return items[it->second].second;
}

namespace {

Collection load_tsv(const std::string& path) {
    std::string data = read_file(path);
    Collection out;
    size_t start = 0;
    size_t line_no = 0;
    while (start < data.size()) {
        size_t end = data.find('\n', start);
        if (end == std::string::npos) {
            end = data.size();
        }
        ++line_no;
        if (end > start) {
            std::string line(data, start, end - start);
            size_t tab = line.find('\t');
            if (tab == std::string::npos || tab == 0) {
                throw_data("MalformedLine: " + path + ":" + std::to_string(line_no));
            }
            try {
                out.add(line.substr(0, tab), line.substr(tab + 1));
            } catch (const Error& e) {
                throw_data(std::string(e.what()) + " at " + path + ":" + std::to_string(line_no));
            }
        }
        start = end + 1;
    }
    return out;
}

}  // namespace

Collection load_collection(const std::string& path) { return load_tsv(path); }
Collection load_queries(const std::string& path) { return load_tsv(path); }

std::string collection_to_tsv(const Collection& collection) {
    std::string out;
    for (const auto& [id, text] : collection.items) {
        out += id;
        out += '\t';
        out += text;
        out += '\n';
    }
    return out;
}

void save_collection(const Collection& collection, const std::string& path) {
    write_file(path, collection_to_tsv(collection));
}

Triplets load_triplets(const std::string& path) {
    std::string data = read_file(path);
    Triplets out;
    std::istringstream in(data);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos || t1 == 0 || t2 == t1 + 1) {
            throw_data("MalformedLine: " + path + ":" + std::to_string(line_no));
        }
        Triplet t;
        t.query_id = line.substr(0, t1);
        t.positive_id = line.substr(t1 + 1, t2 - t1 - 1);
        std::string negs = line.substr(t2 + 1);
        size_t start = 0;
        while (start <= negs.size()) {
            size_t comma = negs.find(',', start);
            if (comma == std::string::npos) {
                comma = negs.size();
            }
            if (comma > start) {
                t.negative_ids.push_back(negs.substr(start, comma - start));
            }
            start = comma + 1;
        }
        if (t.negative_ids.empty()) {
            throw_data("MalformedLine: no negatives at " + path + ":" + std::to_string(line_no));
        }
        for (const auto& n : t.negative_ids) {
            if (n == t.positive_id) {
                throw_data("MalformedLine: positive listed among negatives at " + path + ":" +
                           std::to_string(line_no));
            }
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::string triplets_to_tsv(const Triplets& triplets) {
    std::string out;
    for (const auto& t : triplets) {
        out += t.query_id;
        out += '\t';
        out += t.positive_id;
        out += '\t';
        for (size_t i = 0; i < t.negative_ids.size(); ++i) {
            if (i > 0) {
                out += ',';
            }
            out += t.negative_ids[i];
        }
        out += '\n';
    }
    return out;
}

void save_triplets(const Triplets& triplets, const std::string& path) { write_file(path, triplets_to_tsv(triplets)); }

void check_references(const Triplets& triplets, const Collection& collection, const Collection& queries) {
    for (const auto& t : triplets) {
        if (!queries.contains(t.query_id)) {
            throw_data("DanglingReference: triplet query " + t.query_id);
        }
        if (!collection.contains(t.positive_id)) {
            throw_data("DanglingReference: triplet positive " + t.positive_id);
        }
        for (const auto& n : t.negative_ids) {
            if (!collection.contains(n)) {
                throw_data("DanglingReference: triplet negative " + n);
            }
        }
    }
}

void check_references(const Qrels& qrels, const Collection& collection, const Collection& queries) {
    for (const auto& [qid, docs] : qrels.judgments) {
        if (!queries.contains(qid)) {
            throw_data("DanglingReference: qrels query " + qid);
        }
        for (const auto& [docid, grade] : docs) {
            if (!collection.contains(docid)) {
                throw_data("DanglingReference: qrels doc " + docid);
            }
        }
    }
}

void SyntheticSpec::validate() const {
    if (num_docs < 1 || num_queries < 1 || num_test_queries < 1 || vocab_size_words < 1 ||
        keywords_per_topic < 1 || num_topics < 1) {
        throw_config("SyntheticSpec: counts must be positive");
    }
    if (negatives_per_query < 1) {
        throw_config("SyntheticSpec: negatives_per_query must be >= 1");
    }
    if (doc_len_range.first < 1 || doc_len_range.second < doc_len_range.first) {
        throw_config("SyntheticSpec: bad doc_len_range");
    }
    if (num_topics * keywords_per_topic > vocab_size_words) {
        throw_config("SyntheticSpec: vocabulary too small for the keyword plan");
    }
    if (num_topics > 1 && num_docs < num_topics) {
        throw_config("SyntheticSpec: need at least one doc per topic");
    }
    if (num_topics == 1 && num_docs < 2) {
        throw_config("SyntheticSpec: single-topic corpora need at least 2 docs for negatives");
    }
}

namespace {

// pronounceable synthetic words, unique by construction index
std::string make_word(size_t index, int syllables) {
    static const char* kCons = "bcdfghjklmnprstvwz";
    static const char* kVow = "aeiou";
    std::string word;
    size_t x = index;
    for (int s = 0; s < syllables; ++s) {
        word.push_back(kCons[x % 18]);
        x /= 18;
        word.push_back(kVow[x % 5]);
        x /= 5;
    }
    return word;
}

std::string padded_id(const char* prefix, int n, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, n);
    return buf;
}

int doc_len(const SyntheticSpec& spec, Rng& rng) {
    auto [lo, hi] = spec.doc_len_range;
    return lo + static_cast<int>(rng.uniform_u64(static_cast<uint64_t>(hi - lo + 1)));
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    // vocabulary: distinct 2-3 syllable words; earlier ranks are shorter
    std::vector<std::string> words;
    {
        std::set<std::string> seen;
        size_t index = 0;
        while (static_cast<int>(words.size()) < spec.vocab_size_words) {
            int syllables = 2 + static_cast<int>(index % 2);
            std::string w = make_word(index / 2 + index * 7919, syllables);
            ++index;
            if (seen.insert(w).second) {
                words.push_back(std::move(w));
            }
        }
    }

    int num_keywords = spec.num_topics * spec.keywords_per_topic;
    auto topic_keyword = [&](int topic, int k) -> const std::string& {
        return words[static_cast<size_t>(topic * spec.keywords_per_topic + k)];
    };
    int num_background = spec.vocab_size_words - num_keywords;
    if (num_background < 1) {
        throw_config("SyntheticSpec: no background words left");
    }

    // Zipf weights over background ranks
    std::vector<double> zipf_cdf(static_cast<size_t>(num_background));
    {
        double total = 0.0;
        for (int r = 0; r < num_background; ++r) {
            total += 1.0 / static_cast<double>(r + 1);
            zipf_cdf[static_cast<size_t>(r)] = total;
        }
        for (auto& v : zipf_cdf) {
            v /= total;
        }
    }
    auto sample_background = [&]() -> const std::string& {
        double u = rng.uniform_real();
        size_t lo = std::lower_bound(zipf_cdf.begin(), zipf_cdf.end(), u) - zipf_cdf.begin();
        if (lo >= zipf_cdf.size()) {
            lo = zipf_cdf.size() - 1;
        }
        return words[static_cast<size_t>(num_keywords) + lo];
    };

    SyntheticData data;
    // keyword-heavy mixture: the topic must dominate each document's
    // token statistics for the task to be learnable at desk scale
    constexpr double kKeywordProb = 0.7;

    // documents: round-robin topics so every topic is populated
    int id_width = static_cast<int>(std::to_string(spec.num_docs).size());
    for (int d = 0; d < spec.num_docs; ++d) {
        int topic = d % spec.num_topics;
        data.doc_topic.push_back(topic);
        int len = doc_len(spec, rng);
        std::string text;
        for (int i = 0; i < len; ++i) {
            if (!text.empty()) {
                text += ' ';
            }
            if (i == 0 || rng.uniform_real() < kKeywordProb) {
                text += topic_keyword(topic, static_cast<int>(rng.uniform_u64(
                                                  static_cast<uint64_t>(spec.keywords_per_topic))));
            } else {
                text += sample_background();
            }
        }
        data.collection.add(padded_id("d", d, id_width), std::move(text));
    }

    // queries: a few topic keywords, no background words
    auto make_query = [&](int topic) {
        int num_terms = std::min(3, spec.keywords_per_topic);
        std::set<int> chosen;
        while (static_cast<int>(chosen.size()) < num_terms) {
            chosen.insert(static_cast<int>(rng.uniform_u64(static_cast<uint64_t>(spec.keywords_per_topic))));
        }
        std::string text;
        for (int k : chosen) {
            if (!text.empty()) {
                text += ' ';
            }
            text += topic_keyword(topic, k);
        }
        return text;
    };

    int q_width = static_cast<int>(std::to_string(spec.num_queries + spec.num_test_queries).size());
    for (int q = 0; q < spec.num_queries; ++q) {
        int topic = q % spec.num_topics;
        data.train_query_topic.push_back(topic);
        data.queries_train.add(padded_id("qtrain", q, q_width), make_query(topic));
    }
    for (int q = 0; q < spec.num_test_queries; ++q) {
        int topic = q % spec.num_topics;
        data.test_query_topic.push_back(topic);
        data.queries_test.add(padded_id("qtest", q, q_width), make_query(topic));
    }

    // qrels: grade 1 iff the doc shares the query's topic
    auto fill_qrels = [&](Qrels& qrels, const Collection& queries, const std::vector<int>& topics) {
        for (size_t q = 0; q < queries.items.size(); ++q) {
            int topic = topics[q];
            auto& judged = qrels.judgments[queries.items[q].first];
            for (int d = 0; d < spec.num_docs; ++d) {
                if (data.doc_topic[static_cast<size_t>(d)] == topic) {
                    judged[data.collection.items[static_cast<size_t>(d)].first] = 1;
                }
            }
        }
    };
    fill_qrels(data.qrels_train, data.queries_train, data.train_query_topic);
    fill_qrels(data.qrels_test, data.queries_test, data.test_query_topic);

    // triplets: positive from the query's topic, negatives from others
    std::vector<std::vector<int>> docs_by_topic(static_cast<size_t>(spec.num_topics));
    for (int d = 0; d < spec.num_docs; ++d) {
        docs_by_topic[static_cast<size_t>(data.doc_topic[static_cast<size_t>(d)])].push_back(d);
    }
    for (size_t q = 0; q < data.queries_train.items.size(); ++q) {
        int topic = data.train_query_topic[q];
        const auto& same = docs_by_topic[static_cast<size_t>(topic)];
        Triplet t;
        t.query_id = data.queries_train.items[q].first;
        t.positive_id = data.collection.items[static_cast<size_t>(same[rng.uniform_index(same.size())])].first;
        if (spec.num_topics == 1) {
            // degenerate: everything is relevant; nearest thing to a
            // negative is another in-topic doc
            while (static_cast<int>(t.negative_ids.size()) < spec.negatives_per_query) {
                int d = same[rng.uniform_index(same.size())];
                const std::string& id = data.collection.items[static_cast<size_t>(d)].first;
                if (id != t.positive_id) {
                    t.negative_ids.push_back(id);
                }
            }
        } else {
            while (static_cast<int>(t.negative_ids.size()) < spec.negatives_per_query) {
                int d = static_cast<int>(rng.uniform_u64(static_cast<uint64_t>(spec.num_docs)));
                if (data.doc_topic[static_cast<size_t>(d)] != topic) {
                    t.negative_ids.push_back(data.collection.items[static_cast<size_t>(d)].first);
                }
            }
        }
        data.triplets.push_back(std::move(t));
    }
    return data;
}

void write_synthetic(const SyntheticData& data, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto in_dir = [&dir](const char* name) { return (std::filesystem::path(dir) / name).string(); };
    save_collection(data.collection, in_dir("collection.tsv"));
    save_collection(data.queries_train, in_dir("queries.train.tsv"));
    save_collection(data.queries_test, in_dir("queries.test.tsv"));
    save_qrels(data.qrels_train, in_dir("qrels.train.txt"));
    save_qrels(data.qrels_test, in_dir("qrels.test.txt"));
    save_triplets(data.triplets, in_dir("triplets.train.tsv"));
}

SyntheticSpec synthetic_spec_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw_config(std::string("bad synthetic spec JSON: ") + e.what());
    }
    SyntheticSpec spec;
    std::set<std::string> known = {"num_docs",       "num_queries",        "num_test_queries",
                                   "vocab_size_words", "keywords_per_topic", "num_topics",
                                   "doc_len_range",  "negatives_per_query", "seed"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) {
            throw_config("unknown synthetic spec key: " + key);
        }
    }
    if (j.contains("num_docs")) spec.num_docs = j["num_docs"].get<int>();
    if (j.contains("num_queries")) spec.num_queries = j["num_queries"].get<int>();
    if (j.contains("num_test_queries")) spec.num_test_queries = j["num_test_queries"].get<int>();
    if (j.contains("vocab_size_words")) spec.vocab_size_words = j["vocab_size_words"].get<int>();
    if (j.contains("keywords_per_topic")) spec.keywords_per_topic = j["keywords_per_topic"].get<int>();
    if (j.contains("num_topics")) spec.num_topics = j["num_topics"].get<int>();
    if (j.contains("doc_len_range")) {
        spec.doc_len_range = {j["doc_len_range"].at(0).get<int>(), j["doc_len_range"].at(1).get<int>()};
    }
    if (j.contains("negatives_per_query")) spec.negatives_per_query = j["negatives_per_query"].get<int>();
    if (j.contains("seed")) spec.seed = j["seed"].get<uint64_t>();
    spec.validate();
    return spec;
}

}  // namespace scratchir
