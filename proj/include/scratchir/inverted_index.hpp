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

#include "scratchir/sparse.hpp"

namespace scratchir {

struct RankedHit {
    std::string doc_id;
    double score;
};

/// Descending score, ties broken by ascending doc_id; doc_ids unique.
struct RankedList {
    std::string query_id;
    std::vector<RankedHit> hits;
};

/// Term-at-a-time exact retrieval over postings. Docs are stored in
/// ascending doc_id order so the in-posting order and the score
/// tie-break coincide. Immutable once built; concurrent searches are
/// safe.
class InvertedIndex {
  public:
    struct Posting {
        uint32_t doc;  // index into doc_ids()
        float weight;
    };

    static InvertedIndex build(const std::vector<std::pair<std::string, SparseVector>>& docs, int32_t vocab_size);

    RankedList search(const SparseVector& query, int k, const std::string& query_id = std::string()) const;

    /// p_j^(d): fraction of documents with weight > 0 on term j.
    double doc_activation_prob(int32_t term) const;

    int64_t doc_count() const { return static_cast<int64_t>(doc_ids_.size()); }
    int32_t vocab_size() const { return vocab_size_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    size_t total_postings() const;
    const std::map<int32_t, std::vector<Posting>>& postings() const { return postings_; }

    // JSON header (vocab_size, doc_count, doc id table) + little-endian
    // binary postings (term_id u32, count u64, then doc u32 / weight f32)
    std::string serialize() const;
    static InvertedIndex deserialize(const std::string& data);
    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

  private:
    int32_t vocab_size_ = 0;
    std::vector<std::string> doc_ids_;
    std::map<int32_t, std::vector<Posting>> postings_;
};

/// Exact brute-force dense retrieval with the same tie-break.
RankedList search_dense(const std::vector<std::pair<std::string, DenseVector>>& docs, const DenseVector& query, int k,
                        const std::string& query_id = std::string());

/// Expected co-activated term count: sum_j p_j^(q) * p_j^(d), with
/// p^(q) the empirical activation frequency over `queries`.
double estimate_rflops(const std::vector<SparseVector>& queries, const InvertedIndex& index);

// dense document matrix file: JSON header (dim, doc ids) + f32 rows
void save_dense_matrix(const std::vector<std::pair<std::string, DenseVector>>& docs, const std::string& path);
std::vector<std::pair<std::string, DenseVector>> load_dense_matrix(const std::string& path);

// TREC run format: `qid Q0 docid rank score tag`
std::string run_to_trec(const std::vector<RankedList>& runs, const std::string& tag);
void save_run(const std::vector<RankedList>& runs, const std::string& tag, const std::string& path);
std::vector<RankedList> load_run(const std::string& path);

}  // namespace scratchir
