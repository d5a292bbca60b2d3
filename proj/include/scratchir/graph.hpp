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

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "scratchir/common.hpp"

namespace scratchir {

using NodeId = int32_t;

// row-major GEMM kernels, accumulate into C
// C[m,n] += A[m,k] * B[k,n]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int n, int k) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<size_t>(i) * k;
        T* crow = c + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            T av = arow[p];
            if (av == T(0)) {
                continue;
            }
            const T* brow = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

// C[m,n] += A[m,k] * B[n,k]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int n, int k) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<size_t>(i) * k;
        T* crow = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const T* brow = b + static_cast<size_t>(j) * k;
            T acc = T(0);
            for (int p = 0; p < k; ++p) {
                acc += arow[p] * brow[p];
            }
            crow[j] += acc;
        }
    }
}

// C[m,n] += A[k,m]^T * B[k,n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int n, int k) {
    for (int p = 0; p < k; ++p) {
        const T* arow = a + static_cast<size_t>(p) * m;
        const T* brow = b + static_cast<size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            T av = arow[i];
            if (av == T(0)) {
                continue;
            }
            T* crow = c + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

/// Reverse-mode tape over row-major matrices. One graph per training
/// step; nodes are created in topological order and backward() walks the
/// tape in reverse. Gradients are allocated lazily so branches that do
/// not reach the loss cost nothing on the backward pass.
template <typename T>
class Graph {
  public:
    struct Node {
        int rows = 0;
        int cols = 0;
        std::vector<T> value;
        std::vector<T> grad;  // empty until touched
        std::function<void()> backward;
    };

    NodeId add(int rows, int cols) {
        nodes_.push_back(Node{rows, cols, std::vector<T>(static_cast<size_t>(rows) * cols, T(0)), {}, nullptr});
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    NodeId input(int rows, int cols, const T* data) {
        NodeId id = add(rows, cols);
        std::copy(data, data + static_cast<size_t>(rows) * cols, nodes_[static_cast<size_t>(id)].value.begin());
        return id;
    }

    Node& node(NodeId id) { return nodes_[static_cast<size_t>(id)]; }
    const Node& node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
    const std::vector<T>& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
    T scalar(NodeId id) const {
        const Node& n = nodes_[static_cast<size_t>(id)];
        if (n.rows != 1 || n.cols != 1) {
            throw_numeric("scalar() on non-scalar node");
        }
        return n.value[0];
    }

    std::vector<T>& grad(NodeId id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (n.grad.empty()) {
            n.grad.assign(n.value.size(), T(0));
        }
        return n.grad;
    }

    bool grad_touched(NodeId id) const { return !nodes_[static_cast<size_t>(id)].grad.empty(); }

    /// Seeds d(loss)/d(loss) = 1 and propagates through the tape.
    void backward(NodeId loss) {
        Node& top = nodes_[static_cast<size_t>(loss)];
        if (top.rows != 1 || top.cols != 1) {
            throw_numeric("backward() expects a scalar loss node");
        }
        grad(loss)[0] = T(1);
        for (NodeId id = loss; id >= 0; --id) {
            Node& n = nodes_[static_cast<size_t>(id)];
            if (!n.grad.empty() && n.backward) {
                n.backward();
            }
        }
    }

    size_t size() const { return nodes_.size(); }

    // ---- ops ----

    NodeId matmul(NodeId a, NodeId b) {
        const Node& na = node(a);
        const Node& nb = node(b);
        if (na.cols != nb.rows) {
            throw_numeric("matmul: inner dimensions disagree");
        }
        NodeId out = add(na.rows, nb.cols);
        Node& no = node(out);
        gemm_nn(na.value.data(), nb.value.data(), no.value.data(), na.rows, nb.cols, na.cols);
        no.backward = [this, a, b, out] {
            const auto& g = node(out).grad;
            const Node& na2 = node(a);
            const Node& nb2 = node(b);
            gemm_nt(g.data(), nb2.value.data(), grad(a).data(), na2.rows, na2.cols, nb2.cols);
            gemm_tn(na2.value.data(), g.data(), grad(b).data(), nb2.rows, nb2.cols, na2.rows);
        };
        return out;
    }

    // A * B^T; B in [n, k] row-major, the natural layout for weights
    NodeId matmul_nt(NodeId a, NodeId b) {
        const Node& na = node(a);
        const Node& nb = node(b);
        if (na.cols != nb.cols) {
            throw_numeric("matmul_nt: inner dimensions disagree");
        }
        NodeId out = add(na.rows, nb.rows);
        Node& no = node(out);
        gemm_nt(na.value.data(), nb.value.data(), no.value.data(), na.rows, nb.rows, na.cols);
        no.backward = [this, a, b, out] {
            const auto& g = node(out).grad;
            const Node& na2 = node(a);
            const Node& nb2 = node(b);
            // dA += g * B ; dB += g^T * A
            gemm_nn(g.data(), nb2.value.data(), grad(a).data(), na2.rows, na2.cols, nb2.rows);
            gemm_tn(g.data(), na2.value.data(), grad(b).data(), nb2.rows, nb2.cols, na2.rows);
        };
        return out;
    }

    NodeId add_same(NodeId a, NodeId b) {
        const Node& na = node(a);
        const Node& nb = node(b);
        if (na.rows != nb.rows || na.cols != nb.cols) {
            throw_numeric("add: shape mismatch");
        }
        NodeId out = add(na.rows, na.cols);
        Node& no = node(out);
        for (size_t i = 0; i < no.value.size(); ++i) {
            no.value[i] = na.value[i] + nb.value[i];
        }
        no.backward = [this, a, b, out] {
            const auto& g = node(out).grad;
            auto& ga = grad(a);
            auto& gb = grad(b);
            for (size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
        };
        return out;
    }

    // [m,n] + broadcast [1,n]
    NodeId add_row_broadcast(NodeId a, NodeId row) {
        const Node& na = node(a);
        const Node& nr = node(row);
        if (nr.rows != 1 || nr.cols != na.cols) {
            throw_numeric("add_row_broadcast: row shape mismatch");
        }
        NodeId out = add(na.rows, na.cols);
        Node& no = node(out);
        for (int i = 0; i < na.rows; ++i) {
            for (int j = 0; j < na.cols; ++j) {
                no.value[static_cast<size_t>(i) * na.cols + j] =
                    na.value[static_cast<size_t>(i) * na.cols + j] + nr.value[static_cast<size_t>(j)];
            }
        }
        no.backward = [this, a, row, out] {
            const Node& no2 = node(out);
            auto& ga = grad(a);
            auto& gr = grad(row);
            for (int i = 0; i < no2.rows; ++i) {
                for (int j = 0; j < no2.cols; ++j) {
                    T g = no2.grad[static_cast<size_t>(i) * no2.cols + j];
                    ga[static_cast<size_t>(i) * no2.cols + j] += g;
                    gr[static_cast<size_t>(j)] += g;
                }
            }
        };
        return out;
    }

    NodeId scale(NodeId a, T factor) {
        const Node& na = node(a);
        NodeId out = add(na.rows, na.cols);
        Node& no = node(out);
        for (size_t i = 0; i < no.value.size(); ++i) {
            no.value[i] = na.value[i] * factor;
        }
        no.backward = [this, a, out, factor] {
            const auto& g = node(out).grad;
            auto& ga = grad(a);
            for (size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * factor;
            }
        };
        return out;
    }

    NodeId gelu(NodeId a) {
        const Node& na = node(a);
        NodeId out = add(na.rows, na.cols);
        Node& no = node(out);
        for (size_t i = 0; i < no.value.size(); ++i) {
            T x = na.value[i];
            no.value[i] = T(0.5) * x * (T(1) + std::erf(x * T(M_SQRT1_2)));
        }
        no.backward = [this, a, out] {
            const auto& g = node(out).grad;
            const auto& x = node(a).value;
            auto& ga = grad(a);
            const T inv_sqrt2pi = T(0.3989422804014326779);
            for (size_t i = 0; i < g.size(); ++i) {
                T cdf = T(0.5) * (T(1) + std::erf(x[i] * T(M_SQRT1_2)));
                T pdf = inv_sqrt2pi * std::exp(T(-0.5) * x[i] * x[i]);
                ga[i] += g[i] * (cdf + x[i] * pdf);
            }
        };
        return out;
    }

    // SPLADE activation log(1 + relu(x)), applied element-wise
    NodeId log1p_relu(NodeId a) {
        const Node& na = node(a);
        NodeId out = add(na.rows, na.cols);
        Node& no = node(out);
        for (size_t i = 0; i < no.value.size(); ++i) {
            T x = na.value[i];
            no.value[i] = x > T(0) ? std::log1p(x) : T(0);
        }
        no.backward = [this, a, out] {
            const auto& g = node(out).grad;
            const auto& x = node(a).value;
            auto& ga = grad(a);
            for (size_t i = 0; i < g.size(); ++i) {
                if (x[i] > T(0)) {
                    ga[i] += g[i] / (T(1) + x[i]);
                }
            }
        };
        return out;
    }

    NodeId layer_norm(NodeId a, NodeId gain, NodeId bias, T eps = T(1e-12)) {
        const Node& na = node(a);
        const Node& ng = node(gain);
        const Node& nb = node(bias);
        if (ng.rows != 1 || ng.cols != na.cols || nb.rows != 1 || nb.cols != na.cols) {
            throw_numeric("layer_norm: gain/bias must be [1, cols]");
        }
        NodeId out = add(na.rows, na.cols);
        Node& no = node(out);
        int n = na.cols;
        std::vector<T> inv_std(static_cast<size_t>(na.rows));
        std::vector<T> xhat(na.value.size());
        for (int i = 0; i < na.rows; ++i) {
            const T* x = na.value.data() + static_cast<size_t>(i) * n;
            T mean = T(0);
            for (int j = 0; j < n; ++j) {
                mean += x[j];
            }
            mean /= T(n);
            T var = T(0);
            for (int j = 0; j < n; ++j) {
                T d = x[j] - mean;
                var += d * d;
            }
            var /= T(n);
            T is = T(1) / std::sqrt(var + eps);
            inv_std[static_cast<size_t>(i)] = is;
            T* xh = xhat.data() + static_cast<size_t>(i) * n;
            T* y = no.value.data() + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                xh[j] = (x[j] - mean) * is;
                y[j] = xh[j] * ng.value[static_cast<size_t>(j)] + nb.value[static_cast<size_t>(j)];
            }
        }
        no.backward = [this, a, gain, bias, out, inv_std = std::move(inv_std), xhat = std::move(xhat)] {
            const Node& no2 = node(out);
            const Node& ng2 = node(gain);
            int rows = no2.rows;
            int n2 = no2.cols;
            auto& ga = grad(a);
            auto& gg = grad(gain);
            auto& gb = grad(bias);
            for (int i = 0; i < rows; ++i) {
                const T* g = no2.grad.data() + static_cast<size_t>(i) * n2;
                const T* xh = xhat.data() + static_cast<size_t>(i) * n2;
                T sum_gxh = T(0);
                T sum_g = T(0);
                for (int j = 0; j < n2; ++j) {
                    T gy = g[j] * ng2.value[static_cast<size_t>(j)];
                    sum_gxh += gy * xh[j];
                    sum_g += gy;
                    gg[static_cast<size_t>(j)] += g[j] * xh[j];
                    gb[static_cast<size_t>(j)] += g[j];
                }
                T* gx = ga.data() + static_cast<size_t>(i) * n2;
                T is = inv_std[static_cast<size_t>(i)];
                for (int j = 0; j < n2; ++j) {
                    T gy = g[j] * ng2.value[static_cast<size_t>(j)];
                    gx[j] += is * (gy - (sum_g + xh[j] * sum_gxh) / T(n2));
                }
            }
        };
        return out;
    }

    /// Row-wise softmax where masked key columns get exactly zero
    /// probability. Every row must keep at least one unmasked column.
    NodeId masked_softmax_rows(NodeId a, std::vector<uint8_t> col_mask) {
        const Node& na = node(a);
        if (static_cast<int>(col_mask.size()) != na.cols) {
            throw_numeric("masked_softmax_rows: mask length mismatch");
        }
        bool any = false;
        for (uint8_t m : col_mask) {
            any = any || m != 0;
        }
        if (!any) {
            throw_numeric("masked_softmax_rows: all columns masked");
        }
        NodeId out = add(na.rows, na.cols);
        Node& no = node(out);
        int n = na.cols;
        for (int i = 0; i < na.rows; ++i) {
            const T* x = na.value.data() + static_cast<size_t>(i) * n;
            T* p = no.value.data() + static_cast<size_t>(i) * n;
            T maxv = -std::numeric_limits<T>::infinity();
            for (int j = 0; j < n; ++j) {
                if (col_mask[static_cast<size_t>(j)] && x[j] > maxv) {
                    maxv = x[j];
                }
            }
            T denom = T(0);
            for (int j = 0; j < n; ++j) {
                if (col_mask[static_cast<size_t>(j)]) {
                    p[j] = std::exp(x[j] - maxv);
                    denom += p[j];
                } else {
                    p[j] = T(0);
                }
            }
            for (int j = 0; j < n; ++j) {
                p[j] /= denom;
            }
        }
        no.backward = [this, a, out] {
            const Node& no2 = node(out);
            int rows = no2.rows;
            int n2 = no2.cols;
            auto& ga = grad(a);
            for (int i = 0; i < rows; ++i) {
                const T* p = no2.value.data() + static_cast<size_t>(i) * n2;
                const T* g = no2.grad.data() + static_cast<size_t>(i) * n2;
                T dot = T(0);
                for (int j = 0; j < n2; ++j) {
                    dot += p[j] * g[j];
                }
                T* gx = ga.data() + static_cast<size_t>(i) * n2;
                for (int j = 0; j < n2; ++j) {
                    gx[j] += p[j] * (g[j] - dot);
                }
            }
        };
        return out;
    }

    // rows of `a` selected by index; backward scatter-adds (embedding
    // lookup when `a` is a parameter, row gather otherwise)
    NodeId gather_rows(NodeId a, std::vector<int32_t> ids) {
        const Node& na = node(a);
        for (int32_t id : ids) {
            if (id < 0 || id >= na.rows) {
                throw_numeric("gather_rows: index out of range");
            }
        }
        NodeId out = add(static_cast<int>(ids.size()), na.cols);
        Node& no = node(out);
        int n = na.cols;
        for (size_t i = 0; i < ids.size(); ++i) {
            const T* src = na.value.data() + static_cast<size_t>(ids[i]) * n;
            std::copy(src, src + n, no.value.data() + i * static_cast<size_t>(n));
        }
        no.backward = [this, a, out, ids = std::move(ids)] {
            const Node& no2 = node(out);
            auto& ga = grad(a);
            int n2 = no2.cols;
            for (size_t i = 0; i < ids.size(); ++i) {
                const T* g = no2.grad.data() + i * static_cast<size_t>(n2);
                T* dst = ga.data() + static_cast<size_t>(ids[i]) * n2;
                for (int j = 0; j < n2; ++j) {
                    dst[j] += g[j];
                }
            }
        };
        return out;
    }

    NodeId slice_rows(NodeId a, int r0, int nrows) {
        const Node& na = node(a);
        if (r0 < 0 || r0 + nrows > na.rows) {
            throw_numeric("slice_rows: out of range");
        }
        NodeId out = add(nrows, na.cols);
        Node& no = node(out);
        std::copy(na.value.begin() + static_cast<size_t>(r0) * na.cols,
                  na.value.begin() + static_cast<size_t>(r0 + nrows) * na.cols, no.value.begin());
        no.backward = [this, a, out, r0] {
            const Node& no2 = node(out);
            auto& ga = grad(a);
            size_t off = static_cast<size_t>(r0) * no2.cols;
            for (size_t i = 0; i < no2.grad.size(); ++i) {
                ga[off + i] += no2.grad[i];
            }
        };
        return out;
    }

    NodeId slice_cols(NodeId a, int c0, int ncols) {
        const Node& na = node(a);
        if (c0 < 0 || c0 + ncols > na.cols) {
            throw_numeric("slice_cols: out of range");
        }
        NodeId out = add(na.rows, ncols);
        Node& no = node(out);
        for (int i = 0; i < na.rows; ++i) {
            const T* src = na.value.data() + static_cast<size_t>(i) * na.cols + c0;
            std::copy(src, src + ncols, no.value.data() + static_cast<size_t>(i) * ncols);
        }
        int acols = na.cols;
        no.backward = [this, a, out, c0, acols] {
            const Node& no2 = node(out);
            auto& ga = grad(a);
            for (int i = 0; i < no2.rows; ++i) {
                const T* g = no2.grad.data() + static_cast<size_t>(i) * no2.cols;
                T* dst = ga.data() + static_cast<size_t>(i) * acols + c0;
                for (int j = 0; j < no2.cols; ++j) {
                    dst[j] += g[j];
                }
            }
        };
        return out;
    }

    NodeId concat_cols(const std::vector<NodeId>& parts) {
        if (parts.empty()) {
            throw_numeric("concat_cols: empty");
        }
        int rows = node(parts[0]).rows;
        int total = 0;
        for (NodeId p : parts) {
            if (node(p).rows != rows) {
                throw_numeric("concat_cols: row mismatch");
            }
            total += node(p).cols;
        }
        NodeId out = add(rows, total);
        Node& no = node(out);
        int off = 0;
        for (NodeId p : parts) {
            const Node& np = node(p);
            for (int i = 0; i < rows; ++i) {
                std::copy(np.value.data() + static_cast<size_t>(i) * np.cols,
                          np.value.data() + static_cast<size_t>(i + 1) * np.cols,
                          no.value.data() + static_cast<size_t>(i) * total + off);
            }
            off += np.cols;
        }
        no.backward = [this, out, parts, total] {
            const Node& no2 = node(out);
            int off2 = 0;
            for (NodeId p : parts) {
                Node& np = node(p);
                auto& gp = grad(p);
                for (int i = 0; i < no2.rows; ++i) {
                    const T* g = no2.grad.data() + static_cast<size_t>(i) * total + off2;
                    T* dst = gp.data() + static_cast<size_t>(i) * np.cols;
                    for (int j = 0; j < np.cols; ++j) {
                        dst[j] += g[j];
                    }
                }
                off2 += np.cols;
            }
        };
        return out;
    }

    NodeId concat_rows(const std::vector<NodeId>& parts) {
        if (parts.empty()) {
            throw_numeric("concat_rows: empty");
        }
        int cols = node(parts[0]).cols;
        int total = 0;
        for (NodeId p : parts) {
            if (node(p).cols != cols) {
                throw_numeric("concat_rows: column mismatch");
            }
            total += node(p).rows;
        }
        NodeId out = add(total, cols);
        Node& no = node(out);
        size_t off = 0;
        for (NodeId p : parts) {
            const Node& np = node(p);
            std::copy(np.value.begin(), np.value.end(), no.value.begin() + off);
            off += np.value.size();
        }
        no.backward = [this, out, parts] {
            const Node& no2 = node(out);
            size_t off2 = 0;
            for (NodeId p : parts) {
                auto& gp = grad(p);
                for (size_t i = 0; i < gp.size(); ++i) {
                    gp[i] += no2.grad[off2 + i];
                }
                off2 += gp.size();
            }
        };
        return out;
    }

    /// Per-column max over unmasked rows of log1p(relu(x)): the SPLADE
    /// pooled representation as one [1, cols] row. Columns < num_zeroed
    /// (special-token ids) are forced to zero and get no gradient.
    NodeId splade_max_pool(NodeId logits, const std::vector<uint8_t>& pos_mask, int num_zeroed) {
        const Node& na = node(logits);
        if (static_cast<int>(pos_mask.size()) != na.rows) {
            throw_numeric("splade_max_pool: mask length mismatch");
        }
        bool any = false;
        for (uint8_t m : pos_mask) {
            any = any || m != 0;
        }
        if (!any) {
            throw_numeric("AllPositionsMasked: splade pooling needs an unmasked position");
        }
        NodeId out = add(1, na.cols);
        Node& no = node(out);
        int n = na.cols;
        std::vector<int32_t> argmax(static_cast<size_t>(n), -1);
        for (int j = num_zeroed; j < n; ++j) {
            T best = -std::numeric_limits<T>::infinity();
            int bi = -1;
            for (int i = 0; i < na.rows; ++i) {
                if (!pos_mask[static_cast<size_t>(i)]) {
                    continue;
                }
                T x = na.value[static_cast<size_t>(i) * n + j];
                if (x > best) {
                    best = x;
                    bi = i;
                }
            }
            argmax[static_cast<size_t>(j)] = bi;
            no.value[static_cast<size_t>(j)] = best > T(0) ? std::log1p(best) : T(0);
        }
        no.backward = [this, logits, out, argmax = std::move(argmax)] {
            const Node& no2 = node(out);
            const Node& nl = node(logits);
            auto& gl = grad(logits);
            int n2 = no2.cols;
            for (int j = 0; j < n2; ++j) {
                int i = argmax[static_cast<size_t>(j)];
                if (i < 0) {
                    continue;
                }
                T x = nl.value[static_cast<size_t>(i) * n2 + j];
                if (x > T(0)) {
                    gl[static_cast<size_t>(i) * n2 + j] += no2.grad[static_cast<size_t>(j)] / (T(1) + x);
                }
            }
        };
        return out;
    }

    // out[1,cols], out[j] = mean over rows of a[:,j]
    NodeId mean_over_rows(NodeId a) {
        const Node& na = node(a);
        NodeId out = add(1, na.cols);
        Node& no = node(out);
        for (int i = 0; i < na.rows; ++i) {
            for (int j = 0; j < na.cols; ++j) {
                no.value[static_cast<size_t>(j)] += na.value[static_cast<size_t>(i) * na.cols + j];
            }
        }
        T inv = T(1) / T(na.rows);
        for (int j = 0; j < na.cols; ++j) {
            no.value[static_cast<size_t>(j)] *= inv;
        }
        no.backward = [this, a, out, inv] {
            const Node& no2 = node(out);
            const Node& na2 = node(a);
            auto& ga = grad(a);
            for (int i = 0; i < na2.rows; ++i) {
                for (int j = 0; j < na2.cols; ++j) {
                    ga[static_cast<size_t>(i) * na2.cols + j] += no2.grad[static_cast<size_t>(j)] * inv;
                }
            }
        };
        return out;
    }

    NodeId sum_all(NodeId a) {
        const Node& na = node(a);
        NodeId out = add(1, 1);
        Node& no = node(out);
        T acc = T(0);
        for (T v : na.value) {
            acc += v;
        }
        no.value[0] = acc;
        no.backward = [this, a, out] {
            T g = node(out).grad[0];
            auto& ga = grad(a);
            for (size_t i = 0; i < ga.size(); ++i) {
                ga[i] += g;
            }
        };
        return out;
    }

    NodeId sum_squares(NodeId a) {
        const Node& na = node(a);
        NodeId out = add(1, 1);
        Node& no = node(out);
        T acc = T(0);
        for (T v : na.value) {
            acc += v * v;
        }
        no.value[0] = acc;
        no.backward = [this, a, out] {
            T g = node(out).grad[0];
            const auto& x = node(a).value;
            auto& ga = grad(a);
            for (size_t i = 0; i < ga.size(); ++i) {
                ga[i] += g * T(2) * x[i];
            }
        };
        return out;
    }

    /// Mean softmax cross-entropy over rows whose target >= 0; rows with
    /// target < 0 are excluded from both the mean and the gradient.
    /// Returns a [1,1] node. Zero selected rows yield exactly 0.
    NodeId softmax_cross_entropy_mean(NodeId logits, std::vector<int32_t> targets) {
        const Node& na = node(logits);
        if (static_cast<int>(targets.size()) != na.rows) {
            throw_numeric("softmax_cross_entropy_mean: target count mismatch");
        }
        int n = na.cols;
        int selected = 0;
        for (int32_t t : targets) {
            if (t >= n) {
                throw_numeric("softmax_cross_entropy_mean: target out of range");
            }
            if (t >= 0) {
                ++selected;
            }
        }
        NodeId out = add(1, 1);
        Node& no = node(out);
        if (selected == 0) {
            no.value[0] = T(0);
            return out;
        }
        // cache softmax probabilities for the backward pass
        auto probs = std::make_shared<std::vector<T>>(na.value.size(), T(0));
        T loss = T(0);
        for (int i = 0; i < na.rows; ++i) {
            if (targets[static_cast<size_t>(i)] < 0) {
                continue;
            }
            const T* x = na.value.data() + static_cast<size_t>(i) * n;
            T* p = probs->data() + static_cast<size_t>(i) * n;
            T maxv = x[0];
            for (int j = 1; j < n; ++j) {
                maxv = std::max(maxv, x[j]);
            }
            T denom = T(0);
            for (int j = 0; j < n; ++j) {
                p[j] = std::exp(x[j] - maxv);
                denom += p[j];
            }
            for (int j = 0; j < n; ++j) {
                p[j] /= denom;
            }
            loss -= std::log(p[targets[static_cast<size_t>(i)]]);
        }
        no.value[0] = loss / T(selected);
        no.backward = [this, logits, out, targets = std::move(targets), probs, selected] {
            T g = node(out).grad[0] / T(selected);
            const Node& nl = node(logits);
            auto& gl = grad(logits);
            int n2 = nl.cols;
            for (int i = 0; i < nl.rows; ++i) {
                int32_t t = targets[static_cast<size_t>(i)];
                if (t < 0) {
                    continue;
                }
                const T* p = probs->data() + static_cast<size_t>(i) * n2;
                T* gx = gl.data() + static_cast<size_t>(i) * n2;
                for (int j = 0; j < n2; ++j) {
                    gx[j] += g * (p[j] - (j == t ? T(1) : T(0)));
                }
            }
        };
        return out;
    }

    NodeId transpose(NodeId a) {
        const Node& na = node(a);
        NodeId out = add(na.cols, na.rows);
        Node& no = node(out);
        for (int i = 0; i < na.rows; ++i) {
            for (int j = 0; j < na.cols; ++j) {
                no.value[static_cast<size_t>(j) * na.rows + i] = na.value[static_cast<size_t>(i) * na.cols + j];
            }
        }
        no.backward = [this, a, out] {
            const Node& no2 = node(out);
            auto& ga = grad(a);
            for (int i = 0; i < no2.rows; ++i) {
                for (int j = 0; j < no2.cols; ++j) {
                    ga[static_cast<size_t>(j) * no2.rows + i] += no2.grad[static_cast<size_t>(i) * no2.cols + j];
                }
            }
        };
        return out;
    }

  private:
    // deque keeps Node references stable while ops append new nodes
    std::deque<Node> nodes_;
};

}  // namespace scratchir
