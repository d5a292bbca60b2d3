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

#include "scratchir/inverted_index.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "scratchir/io.hpp"

namespace scratchir {

using json = nlohmann::ordered_json;

InvertedIndex InvertedIndex::build(const std::vector<std::pair<std::string, SparseVector>>& docs,
                                   int32_t vocab_size) {
    if (docs.empty()) {
        throw_data("EmptyCollection: cannot build an index from zero documents");
    }
    InvertedIndex idx;
    idx.vocab_size_ = vocab_size;

    std::vector<size_t> order(docs.size());
    for (size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(),
              [&docs](size_t a, size_t b) { return docs[a].first < docs[b].first; });
    for (size_t i = 1; i < order.size(); ++i) {
        if (docs[order[i - 1]].first == docs[order[i]].first) {
            throw_data("DuplicateDocId: " + docs[order[i]].first);
        }
    }

    idx.doc_ids_.reserve(docs.size());
    for (size_t rank = 0; rank < order.size(); ++rank) {
        const auto& [doc_id, vec] = docs[order[rank]];
        vec.validate(vocab_size);
        idx.doc_ids_.push_back(doc_id);
        for (const auto& e : vec.entries) {
            idx.postings_[e.term].push_back({static_cast<uint32_t>(rank), e.weight});
        }
    }
    return idx;
}

RankedList InvertedIndex::search(const SparseVector& query, int k, const std::string& query_id) const {
    if (k < 1) {
        throw_data("search: k must be >= 1");
    }
    RankedList out;
    out.query_id = query_id;
    if (query.entries.empty()) {
        return out;
    }
    std::vector<double> scores(doc_ids_.size(), 0.0);
    std::vector<uint8_t> touched(doc_ids_.size(), 0);
    for (const auto& e : query.entries) {
        auto it = postings_.find(e.term);
        if (it == postings_.end()) {
            continue;
        }
        double qw = static_cast<double>(e.weight);
        for (const auto& p : it->second) {
            scores[p.doc] += qw * static_cast<double>(p.weight);
            touched[p.doc] = 1;
        }
    }
    std::vector<uint32_t> hit_docs;
    for (uint32_t d = 0; d < scores.size(); ++d) {
        if (touched[d]) {
            hit_docs.push_back(d);
        }
    }
    // doc index order is doc_id order, so (score desc, index asc) is the
    // required tie-break
    std::sort(hit_docs.begin(), hit_docs.end(), [&scores](uint32_t a, uint32_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return a < b;
    });
    size_t take = std::min(hit_docs.size(), static_cast<size_t>(k));
    out.hits.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        out.hits.push_back({doc_ids_[hit_docs[i]], scores[hit_docs[i]]});
    }
    return out;
}

double InvertedIndex::doc_activation_prob(int32_t term) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) {
        return 0.0;
    }
    return static_cast<double>(it->second.size()) / static_cast<double>(doc_ids_.size());
}

size_t InvertedIndex::total_postings() const {
    size_t total = 0;
    for (const auto& [term, plist] : postings_) {
        total += plist.size();
    }
    return total;
}

std::string InvertedIndex::serialize() const {
    json header;
    header["format_version"] = 1;
    header["endianness"] = "little";
    header["vocab_size"] = vocab_size_;
    header["doc_count"] = doc_ids_.size();
    header["doc_ids"] = doc_ids_;
    header["num_terms"] = postings_.size();
    std::string header_str = header.dump();

    std::string out = "SIRIDX1\n";
    append_u32_le(out, static_cast<uint32_t>(header_str.size()));
    out += header_str;
    for (const auto& [term, plist] : postings_) {
        append_u32_le(out, static_cast<uint32_t>(term));
        append_u64_le(out, plist.size());
        for (const auto& p : plist) {
            append_u32_le(out, p.doc);
            append_f32_le(out, p.weight);
        }
    }
    return out;
}

InvertedIndex InvertedIndex::deserialize(const std::string& data) {
    if (data.size() < 12 || data.compare(0, 8, "SIRIDX1\n") != 0) {
        throw_data("not an index payload");
    }
    size_t pos = 8;
    uint32_t header_len = read_u32_le(data, pos);
    if (pos + header_len > data.size()) {
        throw_data("index header truncated");
    }
    json header = json::parse(data.substr(pos, header_len));
    pos += header_len;
    if (header.at("endianness").get<std::string>() != "little") {
        throw_data("unsupported index endianness");
    }
    InvertedIndex idx;
    idx.vocab_size_ = header.at("vocab_size").get<int32_t>();
    idx.doc_ids_ = header.at("doc_ids").get<std::vector<std::string>>();
    if (idx.doc_ids_.size() != header.at("doc_count").get<size_t>()) {
        throw_data("index doc_count does not match the id table");
    }
    size_t num_terms = header.at("num_terms").get<size_t>();
    for (size_t t = 0; t < num_terms; ++t) {
        int32_t term = static_cast<int32_t>(read_u32_le(data, pos));
        uint64_t count = read_u64_le(data, pos);
        auto& plist = idx.postings_[term];
        plist.reserve(count);
        for (uint64_t i = 0; i < count; ++i) {
            uint32_t doc = read_u32_le(data, pos);
            float w = read_f32_le(data, pos);
            plist.push_back({doc, w});
        }
    }
    return idx;
}

void InvertedIndex::save(const std::string& path) const { write_file(path, serialize()); }

InvertedIndex InvertedIndex::load(const std::string& path) { return deserialize(read_file(path)); }

RankedList search_dense(const std::vector<std::pair<std::string, DenseVector>>& docs, const DenseVector& query, int k,
                        const std::string& query_id) {
    if (k < 1) {
        throw_data("search_dense: k must be >= 1");
    }
    std::vector<size_t> order(docs.size());
    for (size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::vector<double> scores(docs.size(), 0.0);
    for (size_t i = 0; i < docs.size(); ++i) {
        const auto& vec = docs[i].second;
        if (vec.size() != query.size()) {
            throw_data("DimensionMismatch: dense vectors differ in length");
        }
        double acc = 0.0;
        for (size_t j = 0; j < vec.size(); ++j) {
            acc += static_cast<double>(query[j]) * static_cast<double>(vec[j]);
        }
        scores[i] = acc;
    }
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return docs[a].first < docs[b].first;
    });
    RankedList out;
    out.query_id = query_id;
    size_t take = std::min(order.size(), static_cast<size_t>(k));
    for (size_t i = 0; i < take; ++i) {
        out.hits.push_back({docs[order[i]].first, scores[order[i]]});
    }
    return out;
}

double estimate_rflops(const std::vector<SparseVector>& queries, const InvertedIndex& index) {
    if (queries.empty()) {
        throw_data("EmptyQuerySet: estimate_rflops requires at least one query");
    }
    std::unordered_map<int32_t, int64_t> query_support;
    for (const auto& q : queries) {
        for (const auto& e : q.entries) {
            ++query_support[e.term];
        }
    }
    double total = 0.0;
    double inv_q = 1.0 / static_cast<double>(queries.size());
    for (const auto& [term, count] : query_support) {
        total += static_cast<double>(count) * inv_q * index.doc_activation_prob(term);
    }
    return total;
}

void save_dense_matrix(const std::vector<std::pair<std::string, DenseVector>>& docs, const std::string& path) {
    if (docs.empty()) {
        throw_data("EmptyCollection: no dense vectors to save");
    }
    size_t dim = docs[0].second.size();
    json header;
    header["format_version"] = 1;
    header["endianness"] = "little";
    header["dim"] = dim;
    json ids = json::array();
    for (const auto& [id, vec] : docs) {
        if (vec.size() != dim) {
            throw_data("DimensionMismatch: inconsistent dense vector length");
        }
        ids.push_back(id);
    }
    header["doc_ids"] = ids;
    std::string header_str = header.dump();
    std::string out = "SIRDNS1\n";
    append_u32_le(out, static_cast<uint32_t>(header_str.size()));
    out += header_str;
    for (const auto& [id, vec] : docs) {
        for (float v : vec) {
            append_f32_le(out, v);
        }
    }
    write_file(path, out);
}

std::vector<std::pair<std::string, DenseVector>> load_dense_matrix(const std::string& path) {
    std::string data = read_file(path);
    if (data.size() < 12 || data.compare(0, 8, "SIRDNS1\n") != 0) {
        throw_data("not a dense matrix file: " + path);
    }
    size_t pos = 8;
    uint32_t header_len = read_u32_le(data, pos);
    json header = json::parse(data.substr(pos, header_len));
    pos += header_len;
    size_t dim = header.at("dim").get<size_t>();
    auto ids = header.at("doc_ids").get<std::vector<std::string>>();
    std::vector<std::pair<std::string, DenseVector>> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        DenseVector vec(dim);
        for (size_t j = 0; j < dim; ++j) {
            vec[j] = read_f32_le(data, pos);
        }
        out.emplace_back(id, std::move(vec));
    }
    return out;
}

std::string run_to_trec(const std::vector<RankedList>& runs, const std::string& tag) {
    std::string out;
    char buf[256];
    for (const auto& rl : runs) {
        for (size_t i = 0; i < rl.hits.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s Q0 %s %zu %.6f %s\n", rl.query_id.c_str(),
                          rl.hits[i].doc_id.c_str(), i + 1, rl.hits[i].score, tag.c_str());
            out += buf;
        }
    }
    return out;
}

void save_run(const std::vector<RankedList>& runs, const std::string& tag, const std::string& path) {
    write_file(path, run_to_trec(runs, tag));
}

std::vector<RankedList> load_run(const std::string& path) {
    std::string data = read_file(path);
    std::vector<RankedList> runs;
    std::unordered_map<std::string, size_t> by_query;
    std::istringstream in(data);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        std::string qid, q0, docid, rank_s, score_s, tag;
        if (!(ls >> qid >> q0 >> docid >> rank_s >> score_s >> tag)) {
            throw_data("MalformedLine: " + path + ":" + std::to_string(line_no));
        }
        double score;
        try {
            score = std::stod(score_s);
        } catch (const std::exception&) {
            throw_data("MalformedLine: bad score at " + path + ":" + std::to_string(line_no));
        }
        auto [it, inserted] = by_query.emplace(qid, runs.size());
        if (inserted) {
            runs.push_back(RankedList{qid, {}});
        }
        runs[it->second].hits.push_back({docid, score});
    }
    // normalize order: by score desc, doc asc within each query
    for (auto& rl : runs) {
        std::stable_sort(rl.hits.begin(), rl.hits.end(), [](const RankedHit& a, const RankedHit& b) {
            if (a.score != b.score) {
                return a.score > b.score;
            }
            return a.doc_id < b.doc_id;
        });
        std::unordered_set<std::string> seen;
        for (const auto& h : rl.hits) {
            if (!seen.insert(h.doc_id).second) {
                throw_data("DuplicateId: doc " + h.doc_id + " repeated for query " + rl.query_id + " in " + path);
            }
        }
    }
    return runs;
}

}  // namespace scratchir
