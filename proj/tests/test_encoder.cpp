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

#include "scratchir/encoder.hpp"

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "scratchir/io.hpp"

using namespace scratchir;

namespace {

EncoderConfig tiny_config(uint64_t seed = 11) {
    EncoderConfig cfg;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.hidden_dim = 8;
    cfg.ffn_dim = 16;
    cfg.vocab_size = 20;
    cfg.max_positions = 16;
    cfg.seed = seed;
    return cfg;
}

std::vector<uint8_t> ones(size_t n) { return std::vector<uint8_t>(n, 1); }

}  // namespace

TEST_CASE("config resolution and validation") {
    EncoderConfig cfg;
    cfg.num_heads = 4;
    cfg.vocab_size = 100;
    cfg.resolve();
    CHECK(cfg.hidden_dim == 256);
    CHECK(cfg.ffn_dim == 1024);

    EncoderConfig bad = tiny_config();
    bad.hidden_dim = 10;
    bad.num_heads = 3;
    CHECK_THROWS_AS(bad.resolve(), Error);
}

TEST_CASE("forward shapes and determinism") {
    auto model = EncoderModel<float>::random_init(tiny_config());
    std::vector<int32_t> ids = {kClsId, 7, 9, kSepId};
    Graph<float> g;
    GraphEncoder<float> enc(g, model);
    NodeId h = enc.forward(ids, ones(4));
    CHECK(g.node(h).rows == 4);
    CHECK(g.node(h).cols == 8);
    for (float v : g.value(h)) {
        CHECK(std::isfinite(v));
    }

    Graph<float> g2;
    GraphEncoder<float> enc2(g2, model);
    NodeId h1 = enc2.forward({kClsId}, ones(1));
    CHECK(g2.node(h1).rows == 1);
    CHECK(g2.node(h1).cols == 8);

    Graph<float> g3;
    GraphEncoder<float> enc3(g3, model);
    CHECK(g3.value(enc3.forward(ids, ones(4))) == g.value(h));
}

TEST_CASE("different seeds give different outputs") {
    auto a = EncoderModel<float>::random_init(tiny_config(1));
    auto b = EncoderModel<float>::random_init(tiny_config(2));
    std::vector<int32_t> ids = {kClsId, 6, kSepId};
    Graph<float> ga, gb;
    GraphEncoder<float> ea(ga, a), eb(gb, b);
    CHECK(ga.value(ea.forward(ids, ones(3))) != gb.value(eb.forward(ids, ones(3))));
}

TEST_CASE("appended masked padding leaves non-pad states unchanged") {
    auto model = EncoderModel<float>::random_init(tiny_config());
    std::vector<int32_t> ids = {kClsId, 7, 9, kSepId};
    std::vector<int32_t> padded = ids;
    padded.insert(padded.end(), {kPadId, kPadId, kPadId});
    std::vector<uint8_t> mask = {1, 1, 1, 1, 0, 0, 0};

    Graph<float> g1, g2;
    GraphEncoder<float> e1(g1, model), e2(g2, model);
    auto base = g1.value(e1.forward(ids, ones(4)));
    auto with_pad = g2.value(e2.forward(padded, mask));
    for (size_t i = 0; i < base.size(); ++i) {
        CHECK(std::fabs(base[i] - with_pad[i]) < 1e-6);
    }
}

TEST_CASE("mlm_logits shape and finiteness") {
    EncoderConfig cfg = tiny_config();
    cfg.vocab_size = 100;
    auto model = EncoderModel<float>::random_init(cfg);
    std::vector<int32_t> ids = {kClsId, 7, 9, 12, 13, 5, kSepId};
    Graph<float> g;
    GraphEncoder<float> enc(g, model);
    NodeId logits = enc.mlm_logits(enc.forward(ids, ones(7)));
    CHECK(g.node(logits).rows == 7);
    CHECK(g.node(logits).cols == 100);
    for (float v : g.value(logits)) {
        CHECK(std::isfinite(v));
    }
}

TEST_CASE("splade pooling spec values") {
    SUBCASE("all non-positive logits give an empty vector") {
        std::vector<double> logits = {-1.0, 0.0, -0.5, -2.0, 0.0, -3.0};
        Graph<double> g;
        NodeId pooled = g.splade_max_pool(g.input(1, 6, logits.data()), {1}, kNumSpecialTokens);
        CHECK(sparse_from_dense(g.value(pooled)).nnz() == 0);
    }
    SUBCASE("logit e-1 pools to weight 1") {
        std::vector<double> logits(7, -1.0);
        logits[6] = std::exp(1.0) - 1.0;
        Graph<double> g;
        NodeId pooled = g.splade_max_pool(g.input(1, 7, logits.data()), {1}, kNumSpecialTokens);
        auto sv = sparse_from_dense(g.value(pooled));
        REQUIRE(sv.nnz() == 1);
        CHECK(sv.entries[0].term == 6);
        CHECK(sv.entries[0].weight == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("max over positions then log1p: 0.5 and 1.5 give log 2.5") {
        std::vector<double> logits = {0.5, 1.5};  // one term, two positions
        Graph<double> g;
        NodeId pooled = g.splade_max_pool(g.input(2, 1, logits.data()), {1, 1}, 0);
        CHECK(g.value(pooled)[0] == doctest::Approx(0.9162907318741551).epsilon(1e-12));
    }
    SUBCASE("increasing a logit weakly increases the pooled weight") {
        Rng rng(17);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> logits(8);
            for (auto& v : logits) {
                v = rng.uniform_range(-2.0, 2.0);
            }
            Graph<double> g;
            NodeId pooled = g.splade_max_pool(g.input(2, 4, logits.data()), {1, 1}, 0);
            auto before = g.value(pooled);
            size_t bump = rng.uniform_index(8);
            logits[bump] += rng.uniform_range(0.0, 1.0);
            Graph<double> g2;
            NodeId pooled2 = g2.splade_max_pool(g2.input(2, 4, logits.data()), {1, 1}, 0);
            auto after = g2.value(pooled2);
            for (size_t j = 0; j < before.size(); ++j) {
                CHECK(after[j] >= before[j] - 1e-15);
            }
        }
    }
}

TEST_CASE("splade_rep output is a valid sparse vector without specials") {
    EncoderConfig cfg = tiny_config();
    cfg.vocab_size = 30;
    auto model = EncoderModel<float>::random_init(cfg);
    std::vector<int32_t> ids = {kClsId, 7, kSepId, kPadId};
    std::vector<uint8_t> mask = {1, 1, 1, 0};
    Graph<float> g;
    GraphEncoder<float> enc(g, model);
    NodeId rep = enc.splade_rep(enc.mlm_logits(enc.forward(ids, mask)), mask);
    auto sv = sparse_from_dense(g.value(rep));
    sv.validate(30);
    for (const auto& e : sv.entries) {
        CHECK(e.term >= kNumSpecialTokens);
        CHECK(e.term < 30);
        CHECK(e.weight > 0.0f);
        CHECK(std::isfinite(e.weight));
    }
}

TEST_CASE("splade_rep and cls_rep are invariant to appended masked padding") {
    EncoderConfig cfg = tiny_config();
    cfg.vocab_size = 30;
    auto model = EncoderModel<float>::random_init(cfg);
    std::vector<int32_t> ids = {kClsId, 7, 11, kSepId};
    std::vector<int32_t> padded = ids;
    padded.insert(padded.end(), {kPadId, kPadId});
    std::vector<uint8_t> mask1 = ones(4);
    std::vector<uint8_t> mask2 = {1, 1, 1, 1, 0, 0};

    Graph<float> g1, g2;
    GraphEncoder<float> e1(g1, model), e2(g2, model);
    auto r1 = g1.value(e1.splade_rep(e1.mlm_logits(e1.forward(ids, mask1)), mask1));
    auto r2 = g2.value(e2.splade_rep(e2.mlm_logits(e2.forward(padded, mask2)), mask2));
    for (size_t j = 0; j < r1.size(); ++j) {
        CHECK(std::fabs(r1[j] - r2[j]) < 1e-6f);
    }

    Graph<float> g3, g4;
    GraphEncoder<float> e3(g3, model), e4(g4, model);
    auto c1 = g3.value(e3.cls_rep(e3.forward(ids, mask1)));
    auto c2 = g4.value(e4.cls_rep(e4.forward(padded, mask2)));
    for (size_t j = 0; j < c1.size(); ++j) {
        CHECK(std::fabs(c1[j] - c2[j]) < 1e-6f);
    }
}

TEST_CASE("cls_pool returns row zero with hidden_dim entries") {
    auto model = EncoderModel<float>::random_init(tiny_config());
    std::vector<int32_t> ids = {kClsId, 9, kSepId};
    Graph<float> g;
    GraphEncoder<float> enc(g, model);
    NodeId h = enc.forward(ids, ones(3));
    NodeId cls = enc.cls_rep(h);
    CHECK(g.node(cls).rows == 1);
    CHECK(g.node(cls).cols == 8);
    auto full = g.value(h);
    auto c = g.value(cls);
    for (int j = 0; j < 8; ++j) {
        CHECK(c[static_cast<size_t>(j)] == full[static_cast<size_t>(j)]);
    }
}

TEST_CASE("sequence longer than max_positions is rejected") {
    auto model = EncoderModel<float>::random_init(tiny_config());
    std::vector<int32_t> ids(17, 7);
    Graph<float> g;
    GraphEncoder<float> enc(g, model);
    CHECK_THROWS_AS(enc.forward(ids, ones(17)), Error);
}

TEST_CASE("cross input construction and truncation policy") {
    std::vector<int32_t> q = {kClsId, 10, 11, kSepId};
    std::vector<int32_t> d = {kClsId, 5, 6, 7, 8, kSepId};
    std::vector<int32_t> ids;
    std::vector<int32_t> segs;

    SUBCASE("no truncation") {
        build_cross_input(q, d, 32, ids, segs);
        CHECK(ids == std::vector<int32_t>{kClsId, 10, 11, kSepId, 5, 6, 7, 8, kSepId});
        CHECK(segs == std::vector<int32_t>{0, 0, 0, 0, 1, 1, 1, 1, 1});
    }
    SUBCASE("doc truncated first") {
        build_cross_input(q, d, 7, ids, segs);
        CHECK(ids == std::vector<int32_t>{kClsId, 10, 11, kSepId, 5, 6, kSepId});
    }
    SUBCASE("query truncated only when doc is exhausted") {
        build_cross_input(q, d, 4, ids, segs);
        CHECK(ids == std::vector<int32_t>{kClsId, 10, kSepId, kSepId});
    }
}

TEST_CASE("cross_score is a finite deterministic scalar") {
    auto model = EncoderModel<float>::random_init(tiny_config());
    std::vector<int32_t> q = {kClsId, 7, kSepId};
    std::vector<int32_t> d = {kClsId, 9, 12, kSepId};
    float s1 = cross_score_pair(model, q, d, 16);
    float s2 = cross_score_pair(model, q, d, 16);
    CHECK(std::isfinite(s1));
    CHECK(s1 == s2);
}

TEST_CASE("parameter count is a pure function of the config") {
    EncoderConfig cfg = tiny_config();
    auto model = EncoderModel<float>::random_init(cfg);
    // independent recount: embeddings + per-layer blocks + mlm head + cross head
    size_t h = 8, f = 16, v = 20, p = 16;
    size_t expected = 0;
    expected += v * h + p * h + 2 * h;  // token/position/segment embeddings
    expected += 2 * h;                  // embedding LN
    expected += 2 * (4 * (h * h + h)    // attn q,k,v,out
                     + 2 * h            // attn LN
                     + (f * h + f) + (h * f + h)  // ffn in/out
                     + 2 * h);          // ffn LN
    expected += h * h + h + 2 * h + v;  // mlm transform + LN + output bias
    expected += h + 1;                  // cross head
    CHECK(model.total_params() == expected);
    CHECK(expected_param_count(cfg) == expected);

    // desk-scale config the acceptance suite uses
    EncoderConfig desk;
    desk.num_layers = 2;
    desk.num_heads = 4;
    desk.hidden_dim = 64;
    desk.ffn_dim = 256;
    desk.vocab_size = 200;
    desk.max_positions = 64;
    desk.resolve();
    auto m2 = EncoderModel<float>::random_init(desk);
    CHECK(m2.total_params() == expected_param_count(desk));
}

TEST_CASE("checkpoint round-trip is bit exact") {
    auto model = EncoderModel<float>::random_init(tiny_config(99));
    model.trained_as = TrainedAs::Sparse;
    auto dir = std::filesystem::temp_directory_path();
    std::string p1 = (dir / "sir_ckpt_a.bin").string();
    std::string p2 = (dir / "sir_ckpt_b.bin").string();
    save_checkpoint(model, p1);
    EncoderModel<float> loaded = load_checkpoint(p1);
    CHECK(loaded.trained_as == TrainedAs::Sparse);
    CHECK(loaded.config.hidden_dim == model.config.hidden_dim);
    CHECK(loaded.param_names == model.param_names);
    CHECK(loaded.params == model.params);
    save_checkpoint(loaded, p2);
    CHECK(read_file(p1) == read_file(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("encoder gradients match finite differences exhaustively (tiny model)") {
    // 2 layers, hidden 8, vocab 20, seq 5, loss = sum of all MLM logits
    auto model = EncoderModel<double>::random_init(tiny_config(31));
    std::vector<int32_t> ids = {kClsId, 7, 9, 12, kSepId};
    auto mask = ones(5);

    auto loss_value = [&](const EncoderModel<double>& m) {
        Graph<double> g;
        GraphEncoder<double> enc(g, m);
        return g.scalar(g.sum_all(enc.mlm_logits(enc.forward(ids, mask))));
    };

    Graph<double> g;
    GraphEncoder<double> enc(g, model);
    NodeId loss = g.sum_all(enc.mlm_logits(enc.forward(ids, mask)));
    g.backward(loss);

    const double step = 1e-4;
    double worst = 0.0;
    for (size_t pi = 0; pi < model.params.size(); ++pi) {
        NodeId pn = enc.param_node(static_cast<int>(pi));
        bool touched = g.grad_touched(pn);
        for (size_t j = 0; j < model.params[pi].size(); ++j) {
            double analytic = touched ? g.node(pn).grad[j] : 0.0;
            EncoderModel<double> probe = model;
            probe.params[pi][j] += step;
            double up = loss_value(probe);
            probe.params[pi][j] -= 2 * step;
            double down = loss_value(probe);
            double fd = (up - down) / (2 * step);
            double rel = std::fabs(analytic - fd) / (std::fabs(fd) + 1e-8);
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst < 1e-4);

    // parameters unused by this loss have exactly zero gradient
    CHECK_FALSE(g.grad_touched(enc.param_node(model.param_index("cross.weight"))));
}
