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
#include <vector>

#include "scratchir/graph.hpp"
#include "scratchir/sparse.hpp"

namespace scratchir {

struct EncoderConfig {
    int num_layers = 2;
    int num_heads = 4;
    int hidden_dim = 0;  // 0 -> 64 * num_heads
    int ffn_dim = 0;     // 0 -> 4 * hidden_dim
    int vocab_size = 0;
    int max_positions = 256;
    uint64_t seed = 0;

    /// Fills derived defaults and checks the invariants (hidden divisible
    /// by heads, num_layers >= 1, vocab_size >= 5).
    void resolve();
};

/// What the checkpoint was last trained as; drives CLI `search` dispatch.
enum class TrainedAs { Pretrained, Sparse, Dense, Cross };

std::string trained_as_name(TrainedAs t);
TrainedAs trained_as_from_name(const std::string& name);

/// BERT-style encoder parameters (post-layer-norm blocks, learned
/// absolute positions, tied MLM output embedding, cross-encoder head).
/// Parameter order is fixed by name and fully determined by the config.
template <typename T>
struct EncoderModel {
    EncoderConfig config;
    TrainedAs trained_as = TrainedAs::Pretrained;
    std::vector<std::string> param_names;
    std::vector<std::pair<int, int>> param_shapes;  // rows, cols
    std::vector<std::vector<T>> params;

    static EncoderModel random_init(EncoderConfig cfg);

    int param_index(const std::string& name) const;
    size_t total_params() const;
    void check_finite() const;

    template <typename U>
    EncoderModel<U> cast() const {
        EncoderModel<U> out;
        out.config = config;
        out.trained_as = trained_as;
        out.param_names = param_names;
        out.param_shapes = param_shapes;
        out.params.reserve(params.size());
        for (const auto& p : params) {
            out.params.emplace_back(p.begin(), p.end());
        }
        return out;
    }
};

/// Expected parameter total for a config; pure function of the shapes.
size_t expected_param_count(const EncoderConfig& cfg);

/// Binds a model's parameters into a graph as leaf nodes and builds
/// forward passes. One instance per graph; all sequences built through
/// the same instance share leaves, so their gradients accumulate.
template <typename T>
class GraphEncoder {
  public:
    GraphEncoder(Graph<T>& graph, const EncoderModel<T>& model);

    /// Hidden states [seq_len, hidden]; masked positions get zero
    /// attention weight from every query.
    NodeId forward(const std::vector<int32_t>& ids, const std::vector<uint8_t>& mask,
                   const std::vector<int32_t>& segments = {});

    NodeId mlm_logits(NodeId hidden);                                          // [seq, vocab]
    NodeId splade_rep(NodeId logits, const std::vector<uint8_t>& mask);        // [1, vocab]
    NodeId cls_rep(NodeId hidden);                                             // [1, hidden]
    NodeId cross_score(NodeId hidden);                                         // [1, 1]

    NodeId param_node(int index) const { return param_nodes_[static_cast<size_t>(index)]; }
    const std::vector<NodeId>& param_nodes() const { return param_nodes_; }
    const EncoderModel<T>& model() const { return model_; }
    Graph<T>& graph() { return graph_; }

  private:
    NodeId linear(NodeId x, const std::string& weight, const std::string& bias);
    NodeId pnode(const std::string& name) const;

    Graph<T>& graph_;
    const EncoderModel<T>& model_;
    std::vector<NodeId> param_nodes_;
};

/// [CLS] q [SEP] d [SEP] with joint truncation (doc first, then query).
/// Inputs are encode() outputs; specials are stripped before joining.
void build_cross_input(const std::vector<int32_t>& query_ids, const std::vector<int32_t>& doc_ids, int max_len,
                       std::vector<int32_t>& out_ids, std::vector<int32_t>& out_segments);

// inference entry points (no gradient state retained)
SparseVector encode_sparse(const EncoderModel<float>& model, const std::vector<int32_t>& ids);
DenseVector encode_dense(const EncoderModel<float>& model, const std::vector<int32_t>& ids);
float cross_score_pair(const EncoderModel<float>& model, const std::vector<int32_t>& query_ids,
                       const std::vector<int32_t>& doc_ids, int max_len);

// checkpoint: "SIR1" magic, u32 LE header length, JSON header (config,
// trained_as, parameter names/shapes/offsets, endianness marker), then
// little-endian f32 arrays; bit-exact round-trip
void save_checkpoint(const EncoderModel<float>& model, const std::string& path);
EncoderModel<float> load_checkpoint(const std::string& path);

}  // namespace scratchir
