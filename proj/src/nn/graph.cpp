// Copyright 2026 The feakit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fea/nn/graph.hpp"

#include <memory>

namespace fea::nn {

template <typename T>
Var Graph<T>::push(Tensor<T> value, bool needs_grad) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, needs_grad, {}});
    return Var{nodes_.size() - 1};
}

template <typename T>
Var Graph<T>::input(Tensor<T> value) {
    return push(std::move(value), false);
}

template <typename T>
Var Graph<T>::param(Parameter<T>& p) {
    Var v = push(p.value, p.trainable);
    node(v).param = &p;
    return v;
}

template <typename T>
const Tensor<T>& Graph<T>::grad(Var v) const {
    const Node& n = node(v);
    return n.grad.empty() ? empty_ : n.grad;
}

template <typename T>
Tensor<T>& Graph<T>::grad_buffer(Var v) {
    Node& n = node(v);
    if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
}

template <typename T>
void Graph<T>::accumulate(Var v, const Tensor<T>& g) {
    if (!node(v).needs_grad) return;
    Tensor<T>& buf = grad_buffer(v);
    require(buf.size() == g.size(), ErrorKind::Shape, "gradient shape mismatch during backward");
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

template <typename T>
Var Graph<T>::matmul(Var a, Var b) {
    Var out = push(ops::matmul(value(a), value(b)), requires_grad(a) || requires_grad(b));
    node(out).backward = [this, a, b, out] {
        const Tensor<T>& dy = grad(out);
        if (requires_grad(a)) accumulate(a, ops::matmul_nt(dy, value(b)));
        if (requires_grad(b)) accumulate(b, ops::matmul_tn(value(a), dy));
    };
    return out;
}

template <typename T>
Var Graph<T>::matmul_nt(Var a, Var b) {
    Var out = push(ops::matmul_nt(value(a), value(b)), requires_grad(a) || requires_grad(b));
    node(out).backward = [this, a, b, out] {
        const Tensor<T>& dy = grad(out);
        if (requires_grad(a)) accumulate(a, ops::matmul(dy, value(b)));
        if (requires_grad(b)) accumulate(b, ops::matmul_tn(dy, value(a)));
    };
    return out;
}

template <typename T>
Var Graph<T>::add(Var a, Var b) {
    require(value(a).shape() == value(b).shape(), ErrorKind::Shape,
            "add: " + shape_str(value(a).shape()) + " vs " + shape_str(value(b).shape()));
    Tensor<T> sum = value(a);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += value(b)[i];
    Var out = push(std::move(sum), requires_grad(a) || requires_grad(b));
    node(out).backward = [this, a, b, out] {
        accumulate(a, grad(out));
        accumulate(b, grad(out));
    };
    return out;
}

template <typename T>
Var Graph<T>::add_bias(Var x, Var b) {
    Var out = push(ops::add_row_bias(value(x), value(b)), requires_grad(x) || requires_grad(b));
    node(out).backward = [this, x, b, out] {
        accumulate(x, grad(out));
        if (requires_grad(b)) accumulate(b, ops::sum_rows(grad(out)));
    };
    return out;
}

template <typename T>
Var Graph<T>::scale(Var x, T factor) {
    Tensor<T> y = value(x);
    for (auto& v : y.data()) v *= factor;
    Var out = push(std::move(y), requires_grad(x));
    node(out).backward = [this, x, out, factor] {
        Tensor<T> g = grad(out);
        for (auto& v : g.data()) v *= factor;
        accumulate(x, g);
    };
    return out;
}

template <typename T>
Var Graph<T>::scale_by(Var x, Var factor) {
    require(value(factor).size() == 1, ErrorKind::Shape, "scale_by: factor must hold one element");
    const T f = value(factor)[0];
    Tensor<T> y = value(x);
    for (auto& v : y.data()) v *= f;
    Var out = push(std::move(y), requires_grad(x) || requires_grad(factor));
    node(out).backward = [this, x, factor, out] {
        const Tensor<T>& dy = grad(out);
        if (requires_grad(x)) {
            Tensor<T> g = dy;
            const T f = value(factor)[0];
            for (auto& v : g.data()) v *= f;
            accumulate(x, g);
        }
        if (requires_grad(factor)) {
            T dot = 0;
            for (std::size_t i = 0; i < dy.size(); ++i) dot += dy[i] * value(x)[i];
            Tensor<T> g(value(factor).shape());
            g[0] = dot;
            accumulate(factor, g);
        }
    };
    return out;
}

template <typename T>
Var Graph<T>::gelu(Var x) {
    Var out = push(ops::gelu(value(x)), requires_grad(x));
    node(out).backward = [this, x, out] { accumulate(x, ops::gelu_backward(value(x), grad(out))); };
    return out;
}

template <typename T>
Var Graph<T>::softmax_rows(Var x) {
    Var out = push(ops::softmax_rows(value(x)), requires_grad(x));
    node(out).backward = [this, x, out] { accumulate(x, ops::softmax_rows_backward(value(out), grad(out))); };
    return out;
}

template <typename T>
Var Graph<T>::attention(Var q, Var k, Var v, const ops::AttentionOptions& opts) {
    auto fwd = ops::sdp_attention(value(q), value(k), value(v), opts);
    const bool needs = requires_grad(q) || requires_grad(k) || requires_grad(v);
    Var out = push(std::move(fwd.out), needs);
    auto probs = std::make_shared<std::vector<Tensor<T>>>(std::move(fwd.probs));
    node(out).backward = [this, q, k, v, out, opts, probs] {
        auto g = ops::sdp_attention_backward(value(q), value(k), value(v), *probs, grad(out), opts);
        accumulate(q, g.dq);
        accumulate(k, g.dk);
        accumulate(v, g.dv);
    };
    return out;
}

template <typename T>
Var Graph<T>::conv2d(Var x, Var kernel, Var bias, const ops::ConvGeometry& geo) {
    Var out = push(ops::conv2d(value(x), value(kernel), value(bias), geo),
                   requires_grad(x) || requires_grad(kernel) || requires_grad(bias));
    node(out).backward = [this, x, kernel, bias, out, geo] {
        auto g = ops::conv2d_backward(value(x), value(kernel), grad(out), geo);
        accumulate(x, g.dinput);
        accumulate(kernel, g.dkernel);
        accumulate(bias, g.dbias);
    };
    return out;
}

template <typename T>
Var Graph<T>::avgpool_global(Var x) {
    Var out = push(ops::avgpool_global(value(x)), requires_grad(x));
    node(out).backward = [this, x, out] {
        accumulate(x, ops::avgpool_global_backward(value(x).shape(), grad(out)));
    };
    return out;
}

template <typename T>
Var Graph<T>::rms_norm(Var x, Var gain, T eps) {
    Var out = push(ops::rms_norm(value(x), value(gain), eps), requires_grad(x) || requires_grad(gain));
    node(out).backward = [this, x, gain, out, eps] {
        auto g = ops::rms_norm_backward(value(x), value(gain), eps, grad(out));
        accumulate(x, g.dx);
        accumulate(gain, g.dgain);
    };
    return out;
}

template <typename T>
Var Graph<T>::reshape(Var x, Shape shape) {
    Var out = push(value(x).reshaped(std::move(shape)), requires_grad(x));
    node(out).backward = [this, x, out] { accumulate(x, grad(out).reshaped(value(x).shape())); };
    return out;
}

template <typename T>
Var Graph<T>::concat_rows(std::span<const Var> parts) {
    require(!parts.empty(), ErrorKind::Shape, "concat_rows: no inputs");
    const std::size_t cols = value(parts[0]).cols();
    std::size_t rows = 0;
    bool needs = false;
    for (Var p : parts) {
        require(value(p).rank() == 2 && value(p).cols() == cols, ErrorKind::Shape,
                "concat_rows: width mismatch, expected " + std::to_string(cols) + " got " +
                    shape_str(value(p).shape()));
        rows += value(p).rows();
        needs = needs || requires_grad(p);
    }
    std::vector<T> data;
    data.reserve(rows * cols);
    for (Var p : parts) data.insert(data.end(), value(p).data().begin(), value(p).data().end());
    Var out = push(Tensor<T>({rows, cols}, std::move(data)), needs);
    std::vector<Var> inputs(parts.begin(), parts.end());
    node(out).backward = [this, inputs, out, cols] {
        const Tensor<T>& dy = grad(out);
        std::size_t offset = 0;
        for (Var p : inputs) {
            const std::size_t n = value(p).size();
            if (requires_grad(p)) {
                std::vector<T> slice(dy.data().begin() + offset, dy.data().begin() + offset + n);
                accumulate(p, Tensor<T>({n / cols, cols}, std::move(slice)));
            }
            offset += n;
        }
    };
    return out;
}

template <typename T>
Var Graph<T>::slice_rows(Var x, std::size_t begin, std::size_t end) {
    const Tensor<T>& src = value(x);
    require(begin < end && end <= src.rows(), ErrorKind::Shape, "slice_rows: bad row range");
    const std::size_t cols = src.cols();
    std::vector<T> data(src.data().begin() + begin * cols, src.data().begin() + end * cols);
    Var out = push(Tensor<T>({end - begin, cols}, std::move(data)), requires_grad(x));
    node(out).backward = [this, x, out, begin] {
        if (!requires_grad(x)) return;
        Tensor<T> g(value(x).shape());
        const Tensor<T>& dy = grad(out);
        std::copy(dy.data().begin(), dy.data().end(), g.data().begin() + begin * g.cols());
        accumulate(x, g);
    };
    return out;
}

template <typename T>
Var Graph<T>::gather_rows(Var table, std::vector<std::size_t> rows) {
    const Tensor<T>& src = value(table);
    require(!rows.empty(), ErrorKind::Shape, "gather_rows: empty index list");
    const std::size_t cols = src.cols();
    Tensor<T> y({rows.size(), cols});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] < src.rows(), ErrorKind::Shape, "gather_rows: index out of range");
        std::copy(src.row(rows[i]).begin(), src.row(rows[i]).end(), y.row(i).begin());
    }
    Var out = push(std::move(y), requires_grad(table));
    node(out).backward = [this, table, out, rows = std::move(rows)] {
        if (!requires_grad(table)) return;
        Tensor<T> g(value(table).shape());
        const Tensor<T>& dy = grad(out);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t c = 0; c < g.cols(); ++c) g(rows[i], c) += dy(i, c);
        accumulate(table, g);
    };
    return out;
}

template <typename T>
Var Graph<T>::sum(Var x) {
    T total = 0;
    for (T v : value(x).data()) total += v;
    Var out = push(Tensor<T>({1}, {total}), requires_grad(x));
    node(out).backward = [this, x, out] { accumulate(x, Tensor<T>(value(x).shape(), grad(out)[0])); };
    return out;
}

template <typename T>
Var Graph<T>::masked_cross_entropy(Var logits, std::vector<std::size_t> targets, std::vector<std::uint8_t> mask) {
    const T loss = ops::masked_cross_entropy(value(logits), targets, mask);
    Var out = push(Tensor<T>({1}, {loss}), requires_grad(logits));
    node(out).backward = [this, logits, out, targets = std::move(targets), mask = std::move(mask)] {
        accumulate(logits, ops::masked_cross_entropy_backward(value(logits), targets, mask, grad(out)[0]));
    };
    return out;
}

template <typename T>
void Graph<T>::backward(Var loss) {
    require(value(loss).size() == 1, ErrorKind::Shape, "backward: loss must be a single element");
    for (auto& n : nodes_) n.grad = Tensor<T>();
    if (!node(loss).needs_grad) return;
    grad_buffer(loss)[0] = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.needs_grad || n.grad.empty()) continue;
        if (n.backward) n.backward();
        if (n.param != nullptr && n.param->trainable) {
            Tensor<T>& acc = n.param->grad;
            for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += n.grad[j];
        }
    }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace fea::nn
