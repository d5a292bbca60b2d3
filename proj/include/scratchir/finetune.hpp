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
#include <vector>

#include "scratchir/encoder.hpp"
#include "scratchir/pretrain.hpp"

namespace scratchir {

struct FinetuneConfig {
    double learning_rate = 2e-5;  // bi-encoders; cross-encoders default to 1e-4
    int num_negatives = 16;
    int epochs = 2;
    double lambda_q = 1e-3;  // L1 on query representations
    double lambda_d = 1e-3;  // FLOPS on document representations
    bool use_in_batch_negatives = true;
    int batch_size = 4;
    int max_len = 256;
    uint64_t seed = 0;

    void validate() const;
};

struct Triplet {
    std::string query_id;
    std::string positive_id;
    std::vector<std::string> negative_ids;
};
using Triplets = std::vector<Triplet>;

/// id -> token-id sequence; built once by the caller from a Vocab.
using TokenizedTexts = std::unordered_map<std::string, std::vector<int32_t>>;

/// Softmax cross-entropy with the positive as target over
/// {pos} + negatives + in-batch candidates; scores are dot products.
double contrastive_loss(const std::vector<double>& query_rep, const std::vector<double>& positive_rep,
                        const std::vector<std::vector<double>>& negative_reps,
                        const std::vector<std::vector<double>>& in_batch_reps);

/// lambda_q * mean_q sum_j w_j(q)  +  lambda_d * flops_loss(docs).
double splade_regularizer(const std::vector<SparseVector>& query_reps, const std::vector<SparseVector>& doc_reps,
                          double lambda_q, double lambda_d, int32_t vocab_size);

// all three train in place, set trained_as, and return per-step losses
std::vector<double> finetune_sparse(EncoderModel<float>& model, const Triplets& triplets,
                                    const TokenizedTexts& collection, const TokenizedTexts& queries,
                                    const FinetuneConfig& config);
std::vector<double> finetune_dense(EncoderModel<float>& model, const Triplets& triplets,
                                   const TokenizedTexts& collection, const TokenizedTexts& queries,
                                   const FinetuneConfig& config);
std::vector<double> finetune_cross(EncoderModel<float>& model, const Triplets& triplets,
                                   const TokenizedTexts& collection, const TokenizedTexts& queries,
                                   const FinetuneConfig& config);

}  // namespace scratchir
