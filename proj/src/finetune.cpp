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

#include "scratchir/finetune.hpp"

#include <algorithm>
#include <cmath>

namespace scratchir {

void FinetuneConfig::validate() const {
    if (num_negatives < 1) {
        throw_config("FinetuneConfig: num_negatives must be >= 1");
    }
    if (lambda_q < 0.0 || lambda_d < 0.0) {
        throw_config("FinetuneConfig: lambda values must be >= 0");
    }
    if (epochs < 1) {
        throw_config("FinetuneConfig: epochs must be >= 1");
    }
    if (batch_size < 1) {
        throw_config("FinetuneConfig: batch_size must be >= 1");
    }
}

double contrastive_loss(const std::vector<double>& query_rep, const std::vector<double>& positive_rep,
                        const std::vector<std::vector<double>>& negative_reps,
                        const std::vector<std::vector<double>>& in_batch_reps) {
    size_t dim = query_rep.size();
    auto check = [dim](const std::vector<double>& v) {
        if (v.size() != dim) {
            throw_data("DimensionMismatch: contrastive_loss representations differ in size");
        }
    };
    check(positive_rep);
    std::vector<double> scores;
    auto dot = [&](const std::vector<double>& v) {
        double acc = 0.0;
        for (size_t i = 0; i < dim; ++i) {
            acc += query_rep[i] * v[i];
        }
        return acc;
    };
    scores.push_back(dot(positive_rep));
    for (const auto& n : negative_reps) {
        check(n);
        scores.push_back(dot(n));
    }
    for (const auto& n : in_batch_reps) {
        check(n);
        scores.push_back(dot(n));
    }
    Graph<double> g;
    NodeId logits = g.input(1, static_cast<int>(scores.size()), scores.data());
    return g.scalar(g.softmax_cross_entropy_mean(logits, {0}));
}

double splade_regularizer(const std::vector<SparseVector>& query_reps, const std::vector<SparseVector>& doc_reps,
                          double lambda_q, double lambda_d, int32_t vocab_size) {
    double l1 = 0.0;
    if (!query_reps.empty()) {
        for (const auto& q : query_reps) {
            for (const auto& e : q.entries) {
                l1 += static_cast<double>(e.weight);
            }
        }
        l1 /= static_cast<double>(query_reps.size());
    }
    double flops = doc_reps.empty() ? 0.0 : flops_loss(doc_reps, vocab_size);
    return lambda_q * l1 + lambda_d * flops;
}

namespace {

const std::vector<int32_t>& lookup(const TokenizedTexts& texts, const std::string& id, const char* what) {
    auto it = texts.find(id);
    if (it == texts.end()) {
        throw_data(std::string("DanglingReference: unknown ") + what + " id: " + id);
    }
    return it->second;
}

std::vector<uint8_t> ones_mask(size_t n) { return std::vector<uint8_t>(n, 1); }

enum class BiKind { Sparse, Dense };

std::vector<double> finetune_bi(EncoderModel<float>& model, const Triplets& triplets,
                                const TokenizedTexts& collection, const TokenizedTexts& queries,
                                const FinetuneConfig& config, BiKind kind) {
    config.validate();
    if (triplets.empty()) {
        throw_data("finetune: no training triplets");
    }
    for (const auto& t : triplets) {
        lookup(queries, t.query_id, "query");
        lookup(collection, t.positive_id, "document");
        for (const auto& n : t.negative_ids) {
            lookup(collection, n, "document");
        }
    }

    Rng rng(config.seed);
    AdamOptimizer<float> opt(model.params);
    std::vector<double> losses;
    int step = 0;

    std::vector<size_t> order(triplets.size());
    for (size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            size_t bsz = std::min(static_cast<size_t>(config.batch_size), order.size() - start);
            Graph<float> g;
            GraphEncoder<float> enc(g, model);

            auto encode = [&](const std::vector<int32_t>& ids) {
                auto mask = ones_mask(ids.size());
                NodeId hidden = enc.forward(ids, mask);
                if (kind == BiKind::Sparse) {
                    return enc.splade_rep(enc.mlm_logits(hidden), mask);
                }
                return enc.cls_rep(hidden);
            };

            std::vector<NodeId> q_reps(bsz);
            std::vector<NodeId> pos_reps(bsz);
            std::vector<std::vector<NodeId>> neg_reps(bsz);
            for (size_t b = 0; b < bsz; ++b) {
                const Triplet& t = triplets[order[start + b]];
                q_reps[b] = encode(lookup(queries, t.query_id, "query"));
                pos_reps[b] = encode(lookup(collection, t.positive_id, "document"));
                size_t n_take = std::min(t.negative_ids.size(), static_cast<size_t>(config.num_negatives));
                for (size_t n = 0; n < n_take; ++n) {
                    neg_reps[b].push_back(encode(lookup(collection, t.negative_ids[n], "document")));
                }
            }

            std::vector<NodeId> per_query_losses;
            for (size_t b = 0; b < bsz; ++b) {
                std::vector<NodeId> candidates;
                candidates.push_back(pos_reps[b]);
                for (NodeId n : neg_reps[b]) {
                    candidates.push_back(n);
                }
                if (config.use_in_batch_negatives) {
                    for (size_t o = 0; o < bsz; ++o) {
                        if (o != b) {
                            candidates.push_back(pos_reps[o]);
                        }
                    }
                }
                NodeId cand = candidates.size() == 1 ? candidates[0] : g.concat_rows(candidates);
                NodeId scores = g.matmul_nt(q_reps[b], cand);  // [1, C]
                per_query_losses.push_back(g.softmax_cross_entropy_mean(scores, {0}));
            }
            NodeId loss = g.scale(g.sum_all(g.concat_rows(per_query_losses)), 1.0f / static_cast<float>(bsz));

            if (kind == BiKind::Sparse) {
                if (config.lambda_q > 0.0) {
                    NodeId l1 = g.scale(g.sum_all(g.concat_rows(q_reps)),
                                        static_cast<float>(config.lambda_q) / static_cast<float>(bsz));
                    loss = g.add_same(loss, l1);
                }
                if (config.lambda_d > 0.0) {
                    std::vector<NodeId> docs = pos_reps;
                    for (const auto& negs : neg_reps) {
                        for (NodeId n : negs) {
                            docs.push_back(n);
                        }
                    }
                    NodeId flops = g.sum_squares(g.mean_over_rows(g.concat_rows(docs)));
                    loss = g.add_same(loss, g.scale(flops, static_cast<float>(config.lambda_d)));
                }
            }

            double loss_v = g.scalar(loss);
            if (!std::isfinite(loss_v)) {
                throw_numeric("NonFiniteLoss at finetune step " + std::to_string(step));
            }
            g.backward(loss);
            std::vector<std::vector<float>> grads(model.params.size());
            for (size_t i = 0; i < model.params.size(); ++i) {
                NodeId pn = enc.param_node(static_cast<int>(i));
                if (g.grad_touched(pn)) {
                    grads[i] = g.node(pn).grad;
                }
            }
            opt.step(model.params, grads, config.learning_rate);
            losses.push_back(loss_v);
            ++step;
        }
    }
    model.check_finite();
    model.trained_as = kind == BiKind::Sparse ? TrainedAs::Sparse : TrainedAs::Dense;
    return losses;
}

}  // namespace

std::vector<double> finetune_sparse(EncoderModel<float>& model, const Triplets& triplets,
                                    const TokenizedTexts& collection, const TokenizedTexts& queries,
                                    const FinetuneConfig& config) {
    return finetune_bi(model, triplets, collection, queries, config, BiKind::Sparse);
}

std::vector<double> finetune_dense(EncoderModel<float>& model, const Triplets& triplets,
                                   const TokenizedTexts& collection, const TokenizedTexts& queries,
                                   const FinetuneConfig& config) {
    return finetune_bi(model, triplets, collection, queries, config, BiKind::Dense);
}

std::vector<double> finetune_cross(EncoderModel<float>& model, const Triplets& triplets,
                                   const TokenizedTexts& collection, const TokenizedTexts& queries,
                                   const FinetuneConfig& config) {
    config.validate();
    if (triplets.empty()) {
        throw_data("finetune: no training triplets");
    }
    // cross-encoders never see in-batch negatives
    Rng rng(config.seed);
    AdamOptimizer<float> opt(model.params);
    std::vector<double> losses;
    int step = 0;
    int max_len = std::min(config.max_len, model.config.max_positions);

    std::vector<size_t> order(triplets.size());
    for (size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            size_t bsz = std::min(static_cast<size_t>(config.batch_size), order.size() - start);
            Graph<float> g;
            GraphEncoder<float> enc(g, model);

            std::vector<NodeId> per_query_losses;
            for (size_t b = 0; b < bsz; ++b) {
                const Triplet& t = triplets[order[start + b]];
                const auto& q_ids = lookup(queries, t.query_id, "query");
                auto score_of = [&](const std::string& doc_id) {
                    std::vector<int32_t> ids;
                    std::vector<int32_t> segments;
                    build_cross_input(q_ids, lookup(collection, doc_id, "document"), max_len, ids, segments);
                    return enc.cross_score(enc.forward(ids, ones_mask(ids.size()), segments));
                };
                std::vector<NodeId> scores;
                scores.push_back(score_of(t.positive_id));
                size_t n_take = std::min(t.negative_ids.size(), static_cast<size_t>(config.num_negatives));
                for (size_t n = 0; n < n_take; ++n) {
                    scores.push_back(score_of(t.negative_ids[n]));
                }
                NodeId row = g.transpose(g.concat_rows(scores));  // [1, 1+n]
                per_query_losses.push_back(g.softmax_cross_entropy_mean(row, {0}));
            }
            NodeId loss = g.scale(g.sum_all(g.concat_rows(per_query_losses)), 1.0f / static_cast<float>(bsz));

            double loss_v = g.scalar(loss);
            if (!std::isfinite(loss_v)) {
                throw_numeric("NonFiniteLoss at finetune step " + std::to_string(step));
            }
            g.backward(loss);
            std::vector<std::vector<float>> grads(model.params.size());
            for (size_t i = 0; i < model.params.size(); ++i) {
                NodeId pn = enc.param_node(static_cast<int>(i));
                if (g.grad_touched(pn)) {
                    grads[i] = g.node(pn).grad;
                }
            }
            opt.step(model.params, grads, config.learning_rate);
            losses.push_back(loss_v);
            ++step;
        }
    }
    model.check_finite();
    model.trained_as = TrainedAs::Cross;
    return losses;
}

}  // namespace scratchir
