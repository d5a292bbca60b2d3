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

#include <cmath>

#include "doctest.h"

using namespace scratchir;

namespace {

PretrainConfig desk_config() {
    PretrainConfig cfg;
    cfg.total_steps = 500;
    cfg.lr_warmup_steps = 40;
    cfg.flops_warmup_steps = 100;
    cfg.logits_warmup_steps = 20;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 4;
    cfg.max_len = 16;
    cfg.seed = 3;
    return cfg;
}

}  // namespace

TEST_CASE("mask_batch never selects specials or padding") {
    Rng rng(1);
    std::vector<std::vector<int32_t>> ids = {{kClsId, kSepId}, {kClsId, kPadId, kPadId, kSepId}};
    MaskedBatch mb = mask_batch(ids, 50, 0.99, rng);
    for (const auto& labels : mb.labels) {
        for (int32_t l : labels) {
            CHECK(l == -1);
        }
    }
    CHECK(mb.attention_masks[1] == std::vector<uint8_t>{1, 0, 0, 1});
}

TEST_CASE("mask_batch selection count lands in the binomial band") {
    // 10,000 predictable tokens at 0.15; band [1350, 1650]
    Rng rng(7);
    std::vector<std::vector<int32_t>> ids;
    for (int s = 0; s < 100; ++s) {
        std::vector<int32_t> seq = {kClsId};
        for (int i = 0; i < 100; ++i) {
            seq.push_back(10 + (i % 30));
        }
        seq.push_back(kSepId);
        ids.push_back(std::move(seq));
    }
    MaskedBatch mb = mask_batch(ids, 50, 0.15, rng);
    int64_t selected = 0;
    for (const auto& labels : mb.labels) {
        for (int32_t l : labels) {
            selected += l >= 0 ? 1 : 0;
        }
    }
    CHECK(selected >= 1350);
    CHECK(selected <= 1650);
}

TEST_CASE("mask_batch is deterministic per seed and follows 80/10/10") {
    std::vector<std::vector<int32_t>> ids;
    for (int s = 0; s < 50; ++s) {
        std::vector<int32_t> seq = {kClsId};
        for (int i = 0; i < 60; ++i) {
            seq.push_back(5 + ((s + i) % 40));
        }
        seq.push_back(kSepId);
        ids.push_back(std::move(seq));
    }
    Rng r1(42), r2(42);
    MaskedBatch a = mask_batch(ids, 45, 0.3, r1);
    MaskedBatch b = mask_batch(ids, 45, 0.3, r2);
    CHECK(a.input_ids == b.input_ids);
    CHECK(a.labels == b.labels);

    int64_t masked = 0, randomized = 0, kept = 0, total = 0;
    for (size_t s = 0; s < ids.size(); ++s) {
        for (size_t i = 0; i < ids[s].size(); ++i) {
            if (a.labels[s][i] < 0) {
                continue;
            }
            ++total;
            if (a.input_ids[s][i] == kMaskId) {
                ++masked;
            } else if (a.input_ids[s][i] == ids[s][i]) {
                ++kept;
            } else {
                ++randomized;
                CHECK(a.input_ids[s][i] >= kNumSpecialTokens);
            }
        }
    }
    double frac_mask = static_cast<double>(masked) / static_cast<double>(total);
    CHECK(frac_mask > 0.72);
    CHECK(frac_mask < 0.88);
    CHECK(kept > 0);
    CHECK(randomized > 0);
}

TEST_CASE("mlm_loss spec examples") {
    SUBCASE("uniform logits at one masked position give ln(V)") {
        int v = 37;
        std::vector<double> logits(static_cast<size_t>(v), 0.42);
        CHECK(mlm_loss(logits, 1, v, {3}) == doctest::Approx(std::log(v)).epsilon(1e-12));
    }
    SUBCASE("huge true-label logit drives the loss to zero") {
        std::vector<double> logits = {50.0, 0.0, 0.0};
        CHECK(mlm_loss(logits, 1, 3, {0}) < 1e-8);
    }
    SUBCASE("no masked positions gives exactly zero") {
        std::vector<double> logits = {1.0, 2.0, 3.0};
        CHECK(mlm_loss(logits, 1, 3, {-1}) == 0.0);
    }
}

TEST_CASE("mlm_splade_loss spec examples") {
    SUBCASE("all non-positive logits collapse to the uniform loss") {
        int v = 11;
        std::vector<double> logits(static_cast<size_t>(v), -2.0);
        logits[4] = 0.0;
        CHECK(mlm_splade_loss(logits, 1, v, {2}) == doctest::Approx(std::log(v)).epsilon(1e-12));
    }
    SUBCASE("hand-computed case: z = (1, 0, 0), label 0") {
        std::vector<double> logits = {std::exp(1.0) - 1.0, 0.0, -5.0};
        CHECK(mlm_splade_loss(logits, 1, 3, {0}) == doctest::Approx(0.5514447139320511).epsilon(1e-9));
    }
    SUBCASE("deterministic") {
        std::vector<double> logits = {0.3, -0.2, 1.7, 0.0, 2.2, -9.0};
        CHECK(mlm_splade_loss(logits, 2, 3, {1, 2}) == mlm_splade_loss(logits, 2, 3, {1, 2}));
    }
}

TEST_CASE("flops_loss spec examples") {
    auto sv = [](std::vector<std::pair<int32_t, float>> entries) {
        SparseVector v;
        for (auto [t, w] : entries) {
            v.entries.push_back({t, w});
        }
        return v;
    };
    SUBCASE("two identical one-hot reps") {
        std::vector<SparseVector> reps = {sv({{5, 1.0f}}), sv({{5, 1.0f}})};
        CHECK(flops_loss(reps, 7) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("disjoint weight-2 reps: means (1,1), loss 2") {
        std::vector<SparseVector> reps = {sv({{5, 2.0f}}), sv({{6, 2.0f}})};
        CHECK(flops_loss(reps, 7) == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("all-zero batch") {
        std::vector<SparseVector> reps = {sv({}), sv({})};
        CHECK(flops_loss(reps, 7) == 0.0);
    }
    SUBCASE("empty batch is an error") {
        std::vector<SparseVector> reps;
        CHECK_THROWS_AS(flops_loss(reps, 7), Error);
    }
    SUBCASE("invariant to batch permutation") {
        std::vector<SparseVector> reps = {sv({{5, 1.5f}, {8, 0.25f}}), sv({{6, 2.0f}}), sv({{5, 0.5f}, {9, 3.0f}})};
        std::vector<SparseVector> perm = {reps[2], reps[0], reps[1]};
        CHECK(flops_loss(reps, 12) == doctest::Approx(flops_loss(perm, 12)).epsilon(1e-15));
    }
    SUBCASE("positive whenever any dimension has nonzero mean") {
        std::vector<SparseVector> reps = {sv({}), sv({{5, 1e-4f}})};
        CHECK(flops_loss(reps, 7) > 0.0);
    }
}

TEST_CASE("flops_weight schedule") {
    PretrainConfig cfg;
    cfg.lambda_flops = 1e-3;
    cfg.flops_warmup_steps = 5000;
    cfg.total_steps = 125000;

    CHECK(flops_weight(0, cfg) == 0.0);
    CHECK(flops_weight(5000, cfg) == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(flops_weight(90000, cfg) == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(flops_weight(2500, cfg) == doctest::Approx(3.775406687981455e-4).epsilon(1e-12));

    double prev = -1.0;
    for (int step = 0; step <= 6000; step += 50) {
        double w = flops_weight(step, cfg);
        CHECK(w >= prev);
        CHECK(w <= cfg.lambda_flops + 1e-18);
        prev = w;
    }
}

TEST_CASE("learning rate schedule boundary values") {
    PretrainConfig cfg;
    cfg.learning_rate = 1e-4;
    cfg.total_steps = 125000;
    cfg.lr_warmup_steps = 10000;

    CHECK(learning_rate_at(0, cfg) == 0.0);
    CHECK(learning_rate_at(10000, cfg) == doctest::Approx(1e-4).epsilon(1e-15));
    CHECK(learning_rate_at(125000, cfg) == 0.0);
    CHECK(learning_rate_at(5000, cfg) == doctest::Approx(5e-5).epsilon(1e-12));
    CHECK(learning_rate_at(67500, cfg) == doctest::Approx(5e-5).epsilon(1e-12));
}

TEST_CASE("logits warmup ramp") {
    PretrainConfig cfg;
    cfg.logits_warmup_steps = 1000;
    cfg.total_steps = 2000;
    CHECK(logits_warmup(0, cfg) == 0.0);
    CHECK(logits_warmup(500, cfg) == doctest::Approx(0.5));
    CHECK(logits_warmup(1000, cfg) == 1.0);
    CHECK(logits_warmup(1500, cfg) == 1.0);
}

TEST_CASE("config validation") {
    PretrainConfig cfg = desk_config();
    CHECK_NOTHROW(cfg.validate());
    cfg.mask_prob = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = desk_config();
    cfg.lr_warmup_steps = cfg.total_steps + 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = desk_config();
    cfg.lambda_flops = -0.1;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("adam optimizer bias-corrected first step") {
    std::vector<std::vector<float>> params = {{1.0f, 2.0f}};
    std::vector<std::vector<float>> grads = {{0.5f, -0.25f}};
    AdamOptimizer<float> opt(params);
    opt.step(params, grads, 0.1);
    // the first bias-corrected step moves by ~lr in the gradient's direction
    CHECK(params[0][0] == doctest::Approx(1.0 - 0.1).epsilon(1e-3));
    CHECK(params[0][1] == doctest::Approx(2.0 + 0.1).epsilon(1e-3));
}

TEST_CASE("loss log CSV header and shape") {
    std::vector<LossLogRow> rows = {{0, 1.5, 2.5, 0.25, 0.0, 0.0}, {1, 1.25, 2.0, 0.5, 1e-5, 2e-7}};
    std::string csv = loss_log_to_csv(rows);
    CHECK(csv.rfind("step,mlm,mlm_splade,flops,lr,flops_weight\n", 0) == 0);
    CHECK(csv.find("\n0,1.5,2.5,0.25,0,0\n") != std::string::npos);
}
