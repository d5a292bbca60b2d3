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
#include <string>
#include <vector>

#include "scratchir/encoder.hpp"
#include "scratchir/tokenizer.hpp"

namespace scratchir {

struct PretrainConfig {
    double mask_prob = 0.15;
    double learning_rate = 1e-4;
    int total_steps = 125000;
    int lr_warmup_steps = 10000;
    int flops_warmup_steps = 5000;   // T in the exponential warmup
    int logits_warmup_steps = 1000;  // linear ramp on the splade-MLM term
    double lambda_flops = 1e-3;
    int batch_size = 8;
    int max_len = 256;
    uint64_t seed = 0;

    void validate() const;
};

enum class PretrainMode { Mlm, MlmFlops };
PretrainMode pretrain_mode_from_name(const std::string& name);  // "mlm" | "mlm-flops"
std::string pretrain_mode_name(PretrainMode mode);

struct MaskedBatch {
    std::vector<std::vector<int32_t>> input_ids;
    std::vector<std::vector<int32_t>> labels;  // original id at masked positions, -1 elsewhere
    std::vector<std::vector<uint8_t>> attention_masks;
};

/// BERT recipe: each non-special, non-padding token is selected with
/// probability mask_prob; of the selected, 80% become [MASK], 10% a
/// uniform random non-special id, 10% stay unchanged. Labels carry the
/// original ids; -1 marks positions with no prediction.
MaskedBatch mask_batch(const std::vector<std::vector<int32_t>>& ids, int32_t vocab_size, double mask_prob, Rng& rng);
MaskedBatch mask_batch(const std::vector<std::vector<int32_t>>& ids, const Vocab& vocab, double mask_prob, Rng& rng);

/// Mean softmax cross-entropy over rows whose label >= 0; 0 when no row
/// is labeled. `logits` is row-major [rows, cols].
double mlm_loss(const std::vector<double>& logits, int rows, int cols, const std::vector<int32_t>& labels);

/// Same, but the softmax runs over log(1 + relu(logits)).
double mlm_splade_loss(const std::vector<double>& logits, int rows, int cols, const std::vector<int32_t>& labels);

/// FLOPS regularizer: sum over vocabulary terms of the squared
/// batch-mean pooled weight.
double flops_loss(const std::vector<SparseVector>& reps, int32_t vocab_size);

/// lambda * (e^{min(step,T)/T} - 1) / (e - 1); 0 at step 0, lambda at T+.
double flops_weight(int step, const PretrainConfig& config);

/// Linear 0->1 ramp over logits_warmup_steps (1 when the warmup is 0).
double logits_warmup(int step, const PretrainConfig& config);

/// Piecewise-linear: 0 -> learning_rate over the warmup, then back to 0
/// at total_steps.
double learning_rate_at(int step, const PretrainConfig& config);

/// Adam with bias correction; moment buffers match the model layout.
template <typename T>
class AdamOptimizer {
  public:
    AdamOptimizer(const std::vector<std::vector<T>>& params, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);
    void step(std::vector<std::vector<T>>& params, const std::vector<std::vector<T>>& grads, double lr);

  private:
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    double beta1_;
    double beta2_;
    double eps_;
    int64_t t_ = 0;
};

struct LossLogRow {
    int step;
    double mlm;
    double mlm_splade;
    double flops;
    double lr;
    double flops_weight;
};

std::string loss_log_to_csv(const std::vector<LossLogRow>& rows);

/// Runs total_steps of MLM or MLM+FLOPS pretraining over the tokenized
/// corpus. All loss components are logged in both modes; only the active
/// mode's terms contribute gradient. Throws on non-finite loss with the
/// failing step number.
std::vector<LossLogRow> pretrain(EncoderModel<float>& model, const std::vector<std::vector<int32_t>>& corpus,
                                 const PretrainConfig& config, PretrainMode mode);

/// Fraction of masked positions whose argmax logit equals the label,
/// over a deterministic masking of the corpus.
double masked_token_accuracy(const EncoderModel<float>& model, const std::vector<std::vector<int32_t>>& corpus,
                             const Vocab& vocab, double mask_prob, uint64_t seed);

/// Mean SPLADE nonzeros per sequence; the sparsification probe.
double mean_splade_nonzeros(const EncoderModel<float>& model, const std::vector<std::vector<int32_t>>& corpus);

}  // namespace scratchir
