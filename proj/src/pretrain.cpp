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

#include "scratchir/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace scratchir {

void PretrainConfig::validate() const {
    if (!(mask_prob > 0.0 && mask_prob < 1.0)) {
        throw_config("PretrainConfig: mask_prob must be in (0, 1)");
    }
    if (lambda_flops < 0.0) {
        throw_config("PretrainConfig: lambda_flops must be >= 0");
    }
    if (total_steps < 1) {
        throw_config("PretrainConfig: total_steps must be >= 1");
    }
    if (lr_warmup_steps > total_steps || flops_warmup_steps > total_steps || logits_warmup_steps > total_steps) {
        throw_config("PretrainConfig: warmup step counts must not exceed total_steps");
    }
    if (lr_warmup_steps < 0 || flops_warmup_steps < 0 || logits_warmup_steps < 0) {
        throw_config("PretrainConfig: warmup step counts must be >= 0");
    }
    if (batch_size < 1) {
        throw_config("PretrainConfig: batch_size must be >= 1");
    }
    if (max_len < 2) {
        throw_config("PretrainConfig: max_len must be >= 2");
    }
}

PretrainMode pretrain_mode_from_name(const std::string& name) {
    if (name == "mlm") {
        return PretrainMode::Mlm;
    }
    if (name == "mlm-flops") {
        return PretrainMode::MlmFlops;
    }
    throw_config("unknown pretrain mode: " + name + " (expected mlm or mlm-flops)");
}

std::string pretrain_mode_name(PretrainMode mode) {
    return mode == PretrainMode::Mlm ? "mlm" : "mlm-flops";
}

MaskedBatch mask_batch(const std::vector<std::vector<int32_t>>& ids, const Vocab& vocab, double mask_prob, Rng& rng) {
    return mask_batch(ids, vocab.size(), mask_prob, rng);
}

MaskedBatch mask_batch(const std::vector<std::vector<int32_t>>& ids, int32_t vocab_size, double mask_prob, Rng& rng) {
    if (vocab_size <= kNumSpecialTokens) {
        throw_data("mask_batch: vocabulary has no maskable tokens");
    }
    MaskedBatch out;
    out.input_ids.reserve(ids.size());
    out.labels.reserve(ids.size());
    out.attention_masks.reserve(ids.size());
    for (const auto& seq : ids) {
        std::vector<int32_t> input = seq;
        std::vector<int32_t> labels(seq.size(), -1);
        std::vector<uint8_t> mask(seq.size(), 1);
        for (size_t i = 0; i < seq.size(); ++i) {
            int32_t tok = seq[i];
            if (tok == kPadId) {
                mask[i] = 0;
            }
            if (tok < kNumSpecialTokens) {
                continue;  // specials and padding are never selected
            }
            if (rng.uniform_real() >= mask_prob) {
                continue;
            }
            labels[i] = tok;
            double r = rng.uniform_real();
            if (r < 0.8) {
                input[i] = kMaskId;
            } else if (r < 0.9) {
                input[i] = kNumSpecialTokens +
                           static_cast<int32_t>(rng.uniform_u64(static_cast<uint64_t>(vocab_size - kNumSpecialTokens)));
            }  // else unchanged
        }
        out.input_ids.push_back(std::move(input));
        out.labels.push_back(std::move(labels));
        out.attention_masks.push_back(std::move(mask));
    }
    return out;
}

namespace {

double cross_entropy_mean(Graph<double>& g, NodeId logits, const std::vector<int32_t>& labels) {
    return g.scalar(g.softmax_cross_entropy_mean(logits, labels));
}

}  // namespace

double mlm_loss(const std::vector<double>& logits, int rows, int cols, const std::vector<int32_t>& labels) {
    if (static_cast<size_t>(rows) * cols != logits.size() || static_cast<size_t>(rows) != labels.size()) {
        throw_numeric("mlm_loss: shape mismatch");
    }
    Graph<double> g;
    return cross_entropy_mean(g, g.input(rows, cols, logits.data()), labels);
}

double mlm_splade_loss(const std::vector<double>& logits, int rows, int cols, const std::vector<int32_t>& labels) {
    if (static_cast<size_t>(rows) * cols != logits.size() || static_cast<size_t>(rows) != labels.size()) {
        throw_numeric("mlm_splade_loss: shape mismatch");
    }
    Graph<double> g;
    return cross_entropy_mean(g, g.log1p_relu(g.input(rows, cols, logits.data())), labels);
}

double flops_loss(const std::vector<SparseVector>& reps, int32_t vocab_size) {
    if (reps.empty()) {
        throw_data("EmptyBatch: flops_loss requires at least one representation");
    }
    std::vector<double> mean(static_cast<size_t>(vocab_size), 0.0);
    for (const auto& rep : reps) {
        for (const auto& e : rep.entries) {
            mean[static_cast<size_t>(e.term)] += static_cast<double>(e.weight);
        }
    }
    double inv = 1.0 / static_cast<double>(reps.size());
    double loss = 0.0;
    for (double m : mean) {
        double v = m * inv;
        loss += v * v;
    }
    return loss;
}

double flops_weight(int step, const PretrainConfig& config) {
    if (step < 0) {
        throw_numeric("flops_weight: step must be >= 0");
    }
    int t_cap = config.flops_warmup_steps;
    if (t_cap <= 0) {
        return config.lambda_flops;
    }
    double frac = static_cast<double>(std::min(step, t_cap)) / static_cast<double>(t_cap);
    return config.lambda_flops * (std::exp(frac) - 1.0) / (std::exp(1.0) - 1.0);
}

double logits_warmup(int step, const PretrainConfig& config) {
    if (config.logits_warmup_steps <= 0) {
        return 1.0;
    }
    return std::min(1.0, static_cast<double>(step) / static_cast<double>(config.logits_warmup_steps));
}

double learning_rate_at(int step, const PretrainConfig& config) {
    if (step <= 0) {
        return 0.0;
    }
    if (step < config.lr_warmup_steps) {
        return config.learning_rate * static_cast<double>(step) / static_cast<double>(config.lr_warmup_steps);
    }
    if (step >= config.total_steps) {
        return 0.0;
    }
    if (config.total_steps == config.lr_warmup_steps) {
        return config.learning_rate;
    }
    return config.learning_rate * static_cast<double>(config.total_steps - step) /
           static_cast<double>(config.total_steps - config.lr_warmup_steps);
}

template <typename T>
AdamOptimizer<T>::AdamOptimizer(const std::vector<std::vector<T>>& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

template <typename T>
void AdamOptimizer<T>::step(std::vector<std::vector<T>>& params, const std::vector<std::vector<T>>& grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw_numeric("AdamOptimizer: parameter layout mismatch");
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        const auto& g = grads[i];
        auto& m = m_[i];
        auto& v = v_[i];
        if (g.empty()) {
            continue;  // gradient never touched this step
        }
        for (size_t j = 0; j < p.size(); ++j) {
            double gj = static_cast<double>(g[j]);
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * gj;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
            double mhat = m[j] / bc1;
            double vhat = v[j] / bc2;
            p[j] = static_cast<T>(static_cast<double>(p[j]) - lr * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

template class AdamOptimizer<float>;
template class AdamOptimizer<double>;

std::string loss_log_to_csv(const std::vector<LossLogRow>& rows) {
    std::string out = "step,mlm,mlm_splade,flops,lr,flops_weight\n";
    char buf[192];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.step, r.mlm, r.mlm_splade, r.flops,
                      r.lr, r.flops_weight);
        out += buf;
    }
    return out;
}

std::vector<LossLogRow> pretrain(EncoderModel<float>& model, const std::vector<std::vector<int32_t>>& corpus,
                                 const PretrainConfig& config, PretrainMode mode) {
    config.validate();
    if (corpus.empty()) {
        throw_data("EmptyCorpus: pretrain requires at least one sequence");
    }
    Rng rng(config.seed);
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    rng.shuffle(order);
    size_t cursor = 0;

    AdamOptimizer<float> opt(model.params);
    std::vector<LossLogRow> log;
    log.reserve(static_cast<size_t>(config.total_steps));

    for (int step = 0; step < config.total_steps; ++step) {
        // next batch in shuffled cyclic order
        std::vector<std::vector<int32_t>> batch_ids;
        batch_ids.reserve(static_cast<size_t>(config.batch_size));
        for (int b = 0; b < config.batch_size; ++b) {
            if (cursor == order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            const auto& seq = corpus[order[cursor++]];
            if (static_cast<int>(seq.size()) > config.max_len) {
                std::vector<int32_t> clipped(seq.begin(), seq.begin() + config.max_len - 1);
                clipped.push_back(kSepId);
                batch_ids.push_back(std::move(clipped));
            } else {
                batch_ids.push_back(seq);
            }
        }
        MaskedBatch masked = mask_batch(batch_ids, model.config.vocab_size, config.mask_prob, rng);

        Graph<float> g;
        GraphEncoder<float> enc(g, model);
        std::vector<NodeId> masked_logit_rows;
        std::vector<int32_t> masked_labels;
        std::vector<NodeId> pooled;
        for (size_t s = 0; s < masked.input_ids.size(); ++s) {
            const auto& mask = masked.attention_masks[s];
            NodeId hidden = enc.forward(masked.input_ids[s], mask);
            NodeId logits = enc.mlm_logits(hidden);
            pooled.push_back(enc.splade_rep(logits, mask));
            std::vector<int32_t> positions;
            for (size_t i = 0; i < masked.labels[s].size(); ++i) {
                if (masked.labels[s][i] >= 0) {
                    positions.push_back(static_cast<int32_t>(i));
                    masked_labels.push_back(masked.labels[s][i]);
                }
            }
            if (!positions.empty()) {
                masked_logit_rows.push_back(g.gather_rows(logits, positions));
            }
        }

        double lr = learning_rate_at(step, config);
        double fw = flops_weight(step, config);
        double ramp = logits_warmup(step, config);

        NodeId mlm_node = -1;
        NodeId splade_node = -1;
        if (!masked_logit_rows.empty()) {
            NodeId rows = masked_logit_rows.size() == 1 ? masked_logit_rows[0] : g.concat_rows(masked_logit_rows);
            mlm_node = g.softmax_cross_entropy_mean(rows, masked_labels);
            splade_node = g.softmax_cross_entropy_mean(g.log1p_relu(rows), masked_labels);
        }
        NodeId reps = pooled.size() == 1 ? pooled[0] : g.concat_rows(pooled);
        NodeId flops_node = g.sum_squares(g.mean_over_rows(reps));

        double mlm_v = mlm_node >= 0 ? g.scalar(mlm_node) : 0.0;
        double splade_v = splade_node >= 0 ? g.scalar(splade_node) : 0.0;
        double flops_v = g.scalar(flops_node);

        NodeId total;
        if (mode == PretrainMode::Mlm) {
            total = mlm_node >= 0 ? mlm_node : g.scale(flops_node, 0.0f);
        } else {
            total = g.scale(flops_node, static_cast<float>(fw));
            if (mlm_node >= 0) {
                total = g.add_same(total, mlm_node);
                total = g.add_same(total, g.scale(splade_node, static_cast<float>(ramp)));
            }
        }
        double total_v = g.scalar(total);
        if (!std::isfinite(total_v)) {
            throw_numeric("NonFiniteLoss at pretrain step " + std::to_string(step));
        }

        g.backward(total);
        std::vector<std::vector<float>> grads(model.params.size());
        for (size_t i = 0; i < model.params.size(); ++i) {
            NodeId pn = enc.param_node(static_cast<int>(i));
            if (g.grad_touched(pn)) {
                grads[i] = g.node(pn).grad;
            }
        }
        opt.step(model.params, grads, lr);
        log.push_back({step, mlm_v, splade_v, flops_v, lr, fw});
    }
    model.check_finite();
    return log;
}

double masked_token_accuracy(const EncoderModel<float>& model, const std::vector<std::vector<int32_t>>& corpus,
                             const Vocab& vocab, double mask_prob, uint64_t seed) {
    Rng rng(seed);
    MaskedBatch masked = mask_batch(corpus, vocab, mask_prob, rng);
    int64_t correct = 0;
    int64_t total = 0;
    for (size_t s = 0; s < masked.input_ids.size(); ++s) {
        bool any = false;
        for (int32_t l : masked.labels[s]) {
            any = any || l >= 0;
        }
        if (!any) {
            continue;
        }
        Graph<float> g;
        GraphEncoder<float> enc(g, model);
        NodeId logits = enc.mlm_logits(enc.forward(masked.input_ids[s], masked.attention_masks[s]));
        const auto& lv = g.value(logits);
        int cols = model.config.vocab_size;
        for (size_t i = 0; i < masked.labels[s].size(); ++i) {
            int32_t label = masked.labels[s][i];
            if (label < 0) {
                continue;
            }
            const float* row = lv.data() + i * static_cast<size_t>(cols);
            int32_t best = 0;
            for (int32_t j = 1; j < cols; ++j) {
                if (row[j] > row[best]) {
                    best = j;
                }
            }
            correct += best == label ? 1 : 0;
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double mean_splade_nonzeros(const EncoderModel<float>& model, const std::vector<std::vector<int32_t>>& corpus) {
    if (corpus.empty()) {
        throw_data("mean_splade_nonzeros: empty corpus");
    }
    double total = 0.0;
    for (const auto& seq : corpus) {
        total += static_cast<double>(encode_sparse(model, seq).nnz());
    }
    return total / static_cast<double>(corpus.size());
}

}  // namespace scratchir
