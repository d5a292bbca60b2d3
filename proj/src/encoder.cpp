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

#include "json.hpp"
#include "scratchir/io.hpp"

namespace scratchir {

using json = nlohmann::ordered_json;

void EncoderConfig::resolve() {
    if (num_heads < 1) {
        throw_config("EncoderConfig: num_heads must be >= 1");
    }
    if (hidden_dim == 0) {
        hidden_dim = 64 * num_heads;
    }
    if (ffn_dim == 0) {
        ffn_dim = 4 * hidden_dim;
    }
    if (num_layers < 1) {
        throw_config("EncoderConfig: num_layers must be >= 1");
    }
    if (vocab_size < kNumSpecialTokens) {
        throw_config("EncoderConfig: vocab_size must be >= 5");
    }
    if (hidden_dim % num_heads != 0) {
        throw_config("EncoderConfig: hidden_dim must be divisible by num_heads");
    }
    if (max_positions < 1) {
        throw_config("EncoderConfig: max_positions must be >= 1");
    }
}

std::string trained_as_name(TrainedAs t) {
    switch (t) {
        case TrainedAs::Pretrained: return "pretrained";
        case TrainedAs::Sparse: return "sparse";
        case TrainedAs::Dense: return "dense";
        case TrainedAs::Cross: return "cross";
    }
    throw_config("unknown TrainedAs value");
}

TrainedAs trained_as_from_name(const std::string& name) {
    if (name == "pretrained") return TrainedAs::Pretrained;
    if (name == "sparse") return TrainedAs::Sparse;
    if (name == "dense") return TrainedAs::Dense;
    if (name == "cross") return TrainedAs::Cross;
    throw_config("unknown trained_as kind: " + name);
}

namespace {

struct ParamSpec {
    std::string name;
    int rows;
    int cols;
    enum Kind { Weight, Bias, Gain } kind;
};

std::vector<ParamSpec> parameter_specs(const EncoderConfig& cfg) {
    int h = cfg.hidden_dim;
    int f = cfg.ffn_dim;
    std::vector<ParamSpec> specs;
    specs.push_back({"embeddings.token", cfg.vocab_size, h, ParamSpec::Weight});
    specs.push_back({"embeddings.position", cfg.max_positions, h, ParamSpec::Weight});
    specs.push_back({"embeddings.segment", 2, h, ParamSpec::Weight});
    specs.push_back({"embeddings.ln.gain", 1, h, ParamSpec::Gain});
    specs.push_back({"embeddings.ln.bias", 1, h, ParamSpec::Bias});
    for (int l = 0; l < cfg.num_layers; ++l) {
        std::string p = "layer." + std::to_string(l) + ".";
        specs.push_back({p + "attn.query.weight", h, h, ParamSpec::Weight});
        specs.push_back({p + "attn.query.bias", 1, h, ParamSpec::Bias});
        specs.push_back({p + "attn.key.weight", h, h, ParamSpec::Weight});
        specs.push_back({p + "attn.key.bias", 1, h, ParamSpec::Bias});
        specs.push_back({p + "attn.value.weight", h, h, ParamSpec::Weight});
        specs.push_back({p + "attn.value.bias", 1, h, ParamSpec::Bias});
        specs.push_back({p + "attn.output.weight", h, h, ParamSpec::Weight});
        specs.push_back({p + "attn.output.bias", 1, h, ParamSpec::Bias});
        specs.push_back({p + "attn.ln.gain", 1, h, ParamSpec::Gain});
        specs.push_back({p + "attn.ln.bias", 1, h, ParamSpec::Bias});
        specs.push_back({p + "ffn.in.weight", f, h, ParamSpec::Weight});
        specs.push_back({p + "ffn.in.bias", 1, f, ParamSpec::Bias});
        specs.push_back({p + "ffn.out.weight", h, f, ParamSpec::Weight});
        specs.push_back({p + "ffn.out.bias", 1, h, ParamSpec::Bias});
        specs.push_back({p + "ffn.ln.gain", 1, h, ParamSpec::Gain});
        specs.push_back({p + "ffn.ln.bias", 1, h, ParamSpec::Bias});
    }
    specs.push_back({"mlm.transform.weight", h, h, ParamSpec::Weight});
    specs.push_back({"mlm.transform.bias", 1, h, ParamSpec::Bias});
    specs.push_back({"mlm.ln.gain", 1, h, ParamSpec::Gain});
    specs.push_back({"mlm.ln.bias", 1, h, ParamSpec::Bias});
    specs.push_back({"mlm.output.bias", 1, cfg.vocab_size, ParamSpec::Bias});
    specs.push_back({"cross.weight", 1, h, ParamSpec::Weight});
    specs.push_back({"cross.bias", 1, 1, ParamSpec::Bias});
    return specs;
}

}  // namespace

size_t expected_param_count(const EncoderConfig& cfg) {
    size_t total = 0;
    for (const auto& s : parameter_specs(cfg)) {
        total += static_cast<size_t>(s.rows) * static_cast<size_t>(s.cols);
    }
    return total;
}

template <typename T>
EncoderModel<T> EncoderModel<T>::random_init(EncoderConfig cfg) {
    cfg.resolve();
    EncoderModel<T> m;
    m.config = cfg;
    Rng rng(cfg.seed);
    for (const auto& s : parameter_specs(cfg)) {
        m.param_names.push_back(s.name);
        m.param_shapes.emplace_back(s.rows, s.cols);
        std::vector<T> data(static_cast<size_t>(s.rows) * s.cols);
        switch (s.kind) {
            case ParamSpec::Weight:
                for (auto& v : data) {
                    v = static_cast<T>(rng.truncated_normal(0.02));
                }
                break;
            case ParamSpec::Bias:
                break;  // zeros
            case ParamSpec::Gain:
                for (auto& v : data) {
                    v = T(1);
                }
                break;
        }
        m.params.push_back(std::move(data));
    }
    return m;
}

template <typename T>
int EncoderModel<T>::param_index(const std::string& name) const {
    for (size_t i = 0; i < param_names.size(); ++i) {
        if (param_names[i] == name) {
            return static_cast<int>(i);
        }
    }
    throw_config("unknown parameter name: " + name);
}

template <typename T>
size_t EncoderModel<T>::total_params() const {
    size_t total = 0;
    for (const auto& p : params) {
        total += p.size();
    }
    return total;
}

template <typename T>
void EncoderModel<T>::check_finite() const {
    for (size_t i = 0; i < params.size(); ++i) {
        for (T v : params[i]) {
            if (!std::isfinite(static_cast<double>(v))) {
                throw_numeric("non-finite parameter in " + param_names[i]);
            }
        }
    }
}

template struct EncoderModel<float>;
template struct EncoderModel<double>;

template <typename T>
GraphEncoder<T>::GraphEncoder(Graph<T>& graph, const EncoderModel<T>& model) : graph_(graph), model_(model) {
    param_nodes_.reserve(model.params.size());
    for (size_t i = 0; i < model.params.size(); ++i) {
        auto [rows, cols] = model.param_shapes[i];
        param_nodes_.push_back(graph_.input(rows, cols, model.params[i].data()));
    }
}

template <typename T>
NodeId GraphEncoder<T>::pnode(const std::string& name) const {
    return param_nodes_[static_cast<size_t>(model_.param_index(name))];
}

template <typename T>
NodeId GraphEncoder<T>::linear(NodeId x, const std::string& weight, const std::string& bias) {
    return graph_.add_row_broadcast(graph_.matmul_nt(x, pnode(weight)), pnode(bias));
}

template <typename T>
NodeId GraphEncoder<T>::forward(const std::vector<int32_t>& ids, const std::vector<uint8_t>& mask,
                                const std::vector<int32_t>& segments) {
    const EncoderConfig& cfg = model_.config;
    int seq = static_cast<int>(ids.size());
    if (seq == 0) {
        throw_data("forward: empty sequence");
    }
    if (seq > cfg.max_positions) {
        throw_data("SequenceTooLong: " + std::to_string(seq) + " > max_positions " +
                   std::to_string(cfg.max_positions));
    }
    if (static_cast<int>(mask.size()) != seq) {
        throw_data("forward: attention mask length mismatch");
    }
    std::vector<int32_t> segs = segments;
    if (segs.empty()) {
        segs.assign(static_cast<size_t>(seq), 0);
    }
    if (static_cast<int>(segs.size()) != seq) {
        throw_data("forward: segment length mismatch");
    }

    NodeId tok = graph_.gather_rows(pnode("embeddings.token"), ids);
    NodeId pos = graph_.slice_rows(pnode("embeddings.position"), 0, seq);
    NodeId seg = graph_.gather_rows(pnode("embeddings.segment"), segs);
    NodeId h = graph_.add_same(graph_.add_same(tok, pos), seg);
    h = graph_.layer_norm(h, pnode("embeddings.ln.gain"), pnode("embeddings.ln.bias"));

    int head_dim = cfg.hidden_dim / cfg.num_heads;
    T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(head_dim));
    for (int l = 0; l < cfg.num_layers; ++l) {
        std::string p = "layer." + std::to_string(l) + ".";
        NodeId q = linear(h, p + "attn.query.weight", p + "attn.query.bias");
        NodeId k = linear(h, p + "attn.key.weight", p + "attn.key.bias");
        NodeId v = linear(h, p + "attn.value.weight", p + "attn.value.bias");
        std::vector<NodeId> heads;
        heads.reserve(static_cast<size_t>(cfg.num_heads));
        for (int hd = 0; hd < cfg.num_heads; ++hd) {
            int c0 = hd * head_dim;
            NodeId qh = graph_.slice_cols(q, c0, head_dim);
            NodeId kh = graph_.slice_cols(k, c0, head_dim);
            NodeId vh = graph_.slice_cols(v, c0, head_dim);
            NodeId scores = graph_.scale(graph_.matmul_nt(qh, kh), inv_sqrt_d);
            NodeId probs = graph_.masked_softmax_rows(scores, mask);
            heads.push_back(graph_.matmul(probs, vh));
        }
        NodeId ctx = cfg.num_heads == 1 ? heads[0] : graph_.concat_cols(heads);
        NodeId attn_out = linear(ctx, p + "attn.output.weight", p + "attn.output.bias");
        h = graph_.layer_norm(graph_.add_same(h, attn_out), pnode(p + "attn.ln.gain"), pnode(p + "attn.ln.bias"));
        NodeId ffn = linear(graph_.gelu(linear(h, p + "ffn.in.weight", p + "ffn.in.bias")), p + "ffn.out.weight",
                            p + "ffn.out.bias");
        h = graph_.layer_norm(graph_.add_same(h, ffn), pnode(p + "ffn.ln.gain"), pnode(p + "ffn.ln.bias"));
    }
    return h;
}

template <typename T>
NodeId GraphEncoder<T>::mlm_logits(NodeId hidden) {
    NodeId t = linear(hidden, "mlm.transform.weight", "mlm.transform.bias");
    t = graph_.layer_norm(graph_.gelu(t), pnode("mlm.ln.gain"), pnode("mlm.ln.bias"));
    // tied output embedding
    return graph_.add_row_broadcast(graph_.matmul_nt(t, pnode("embeddings.token")), pnode("mlm.output.bias"));
}

template <typename T>
NodeId GraphEncoder<T>::splade_rep(NodeId logits, const std::vector<uint8_t>& mask) {
    return graph_.splade_max_pool(logits, mask, kNumSpecialTokens);
}

template <typename T>
NodeId GraphEncoder<T>::cls_rep(NodeId hidden) {
    return graph_.slice_rows(hidden, 0, 1);
}

template <typename T>
NodeId GraphEncoder<T>::cross_score(NodeId hidden) {
    return linear(cls_rep(hidden), "cross.weight", "cross.bias");
}

template class GraphEncoder<float>;
template class GraphEncoder<double>;

void build_cross_input(const std::vector<int32_t>& query_ids, const std::vector<int32_t>& doc_ids, int max_len,
                       std::vector<int32_t>& out_ids, std::vector<int32_t>& out_segments) {
    if (max_len < 3) {
        throw_data("cross input: max_len must be >= 3");
    }
    auto strip = [](const std::vector<int32_t>& ids) {
        std::vector<int32_t> out;
        out.reserve(ids.size());
        for (int32_t id : ids) {
            if (id != kClsId && id != kSepId && id != kPadId) {
                out.push_back(id);
            }
        }
        return out;
    };
    std::vector<int32_t> q = strip(query_ids);
    std::vector<int32_t> d = strip(doc_ids);
    size_t budget = static_cast<size_t>(max_len - 3);
    // doc shrinks first, query only if the query alone overflows
    if (q.size() > budget) {
        q.resize(budget);
    }
    size_t doc_budget = budget - q.size();
    if (d.size() > doc_budget) {
        d.resize(doc_budget);
    }
    out_ids.clear();
    out_segments.clear();
    out_ids.push_back(kClsId);
    out_ids.insert(out_ids.end(), q.begin(), q.end());
    out_ids.push_back(kSepId);
    out_segments.assign(out_ids.size(), 0);
    out_ids.insert(out_ids.end(), d.begin(), d.end());
    out_ids.push_back(kSepId);
    out_segments.resize(out_ids.size(), 1);
}

namespace {

std::vector<uint8_t> ones_mask(size_t n) { return std::vector<uint8_t>(n, 1); }

}  // namespace

SparseVector encode_sparse(const EncoderModel<float>& model, const std::vector<int32_t>& ids) {
    Graph<float> g;
    GraphEncoder<float> enc(g, model);
    auto mask = ones_mask(ids.size());
    NodeId rep = enc.splade_rep(enc.mlm_logits(enc.forward(ids, mask)), mask);
    return sparse_from_dense(g.value(rep));
}

DenseVector encode_dense(const EncoderModel<float>& model, const std::vector<int32_t>& ids) {
    Graph<float> g;
    GraphEncoder<float> enc(g, model);
    NodeId rep = enc.cls_rep(enc.forward(ids, ones_mask(ids.size())));
    return g.value(rep);
}

float cross_score_pair(const EncoderModel<float>& model, const std::vector<int32_t>& query_ids,
                       const std::vector<int32_t>& doc_ids, int max_len) {
    std::vector<int32_t> ids;
    std::vector<int32_t> segments;
    build_cross_input(query_ids, doc_ids, std::min(max_len, model.config.max_positions), ids, segments);
    Graph<float> g;
    GraphEncoder<float> enc(g, model);
    NodeId score = enc.cross_score(enc.forward(ids, ones_mask(ids.size()), segments));
    return g.scalar(score);
}

void save_checkpoint(const EncoderModel<float>& model, const std::string& path) {
    json header;
    header["format_version"] = 1;
    header["endianness"] = "little";
    header["trained_as"] = trained_as_name(model.trained_as);
    json cfg;
    cfg["num_layers"] = model.config.num_layers;
    cfg["num_heads"] = model.config.num_heads;
    cfg["hidden_dim"] = model.config.hidden_dim;
    cfg["ffn_dim"] = model.config.ffn_dim;
    cfg["vocab_size"] = model.config.vocab_size;
    cfg["max_positions"] = model.config.max_positions;
    cfg["seed"] = model.config.seed;
    header["config"] = cfg;
    json params = json::array();
    uint64_t offset = 0;
    for (size_t i = 0; i < model.params.size(); ++i) {
        json p;
        p["name"] = model.param_names[i];
        p["shape"] = {model.param_shapes[i].first, model.param_shapes[i].second};
        p["offset"] = offset;
        p["count"] = model.params[i].size();
        params.push_back(p);
        offset += model.params[i].size() * 4;
    }
    header["params"] = params;
    std::string header_str = header.dump();

    std::string out = "SIR1";
    append_u32_le(out, static_cast<uint32_t>(header_str.size()));
    out += header_str;
    for (const auto& p : model.params) {
        for (float v : p) {
            append_f32_le(out, v);
        }
    }
    write_file(path, out);
}

EncoderModel<float> load_checkpoint(const std::string& path) {
    std::string buf = read_file(path);
    if (buf.size() < 8 || buf.compare(0, 4, "SIR1") != 0) {
        throw_data("not a checkpoint file: " + path);
    }
    size_t pos = 4;
    uint32_t header_len = read_u32_le(buf, pos);
    if (pos + header_len > buf.size()) {
        throw_data("checkpoint header truncated: " + path);
    }
    json header = json::parse(buf.substr(pos, header_len));
    pos += header_len;
    if (header.at("endianness").get<std::string>() != "little") {
        throw_data("unsupported checkpoint endianness");
    }

    EncoderModel<float> m;
    const json& cfg = header.at("config");
    m.config.num_layers = cfg.at("num_layers").get<int>();
    m.config.num_heads = cfg.at("num_heads").get<int>();
    m.config.hidden_dim = cfg.at("hidden_dim").get<int>();
    m.config.ffn_dim = cfg.at("ffn_dim").get<int>();
    m.config.vocab_size = cfg.at("vocab_size").get<int>();
    m.config.max_positions = cfg.at("max_positions").get<int>();
    m.config.seed = cfg.at("seed").get<uint64_t>();
    m.config.resolve();
    m.trained_as = trained_as_from_name(header.at("trained_as").get<std::string>());

    size_t blob_start = pos;
    for (const auto& p : header.at("params")) {
        m.param_names.push_back(p.at("name").get<std::string>());
        auto shape = p.at("shape");
        m.param_shapes.emplace_back(shape.at(0).get<int>(), shape.at(1).get<int>());
        uint64_t offset = p.at("offset").get<uint64_t>();
        uint64_t count = p.at("count").get<uint64_t>();
        size_t at = blob_start + offset;
        std::vector<float> data;
        data.reserve(count);
        for (uint64_t i = 0; i < count; ++i) {
            data.push_back(read_f32_le(buf, at));
        }
        m.params.push_back(std::move(data));
    }
    m.check_finite();
    return m;
}

}  // namespace scratchir
