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

#include <cstdint>
#include <vector>

#include "scratchir/common.hpp"
#include "scratchir/tokenizer.hpp"

namespace scratchir {

/// Nonnegative (term_id, weight) pairs, strictly increasing term ids,
/// zero weights omitted, no special-token ids.
struct SparseVector {
    struct Entry {
        int32_t term;
        float weight;
    };
    std::vector<Entry> entries;

    size_t nnz() const { return entries.size(); }

    void validate(int32_t vocab_size) const {
        int32_t prev = -1;
        for (const auto& e : entries) {
            if (e.term <= prev) {
                throw_data("SparseVector: term ids must be strictly increasing");
            }
            if (e.term < kNumSpecialTokens || e.term >= vocab_size) {
                throw_data("SparseVector: term id out of range");
            }
            if (!(e.weight > 0.0f)) {
                throw_data("SparseVector: weights must be > 0");
            }
            prev = e.term;
        }
    }
};

/// Builds a SparseVector from a dense vocab-sized row, dropping zeros
/// and special-token dimensions.
template <typename T>
SparseVector sparse_from_dense(const std::vector<T>& row) {
    SparseVector out;
    for (size_t j = kNumSpecialTokens; j < row.size(); ++j) {
        if (row[j] > T(0)) {
            out.entries.push_back({static_cast<int32_t>(j), static_cast<float>(row[j])});
        }
    }
    return out;
}

inline double sparse_dot(const SparseVector& a, const SparseVector& b) {
    double acc = 0.0;
    size_t i = 0;
    size_t j = 0;
    while (i < a.entries.size() && j < b.entries.size()) {
        int32_t ta = a.entries[i].term;
        int32_t tb = b.entries[j].term;
        if (ta == tb) {
            acc += static_cast<double>(a.entries[i].weight) * static_cast<double>(b.entries[j].weight);
            ++i;
            ++j;
        } else if (ta < tb) {
            ++i;
        } else {
            ++j;
        }
    }
    return acc;
}

using DenseVector = std::vector<float>;

}  // namespace scratchir
