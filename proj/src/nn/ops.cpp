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

#include "fea/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fea::nn {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
    os << ')';
    return os.str();
}

}  // namespace fea::nn

namespace fea::nn::ops {

namespace {

void expect_rank(const Shape& s, std::size_t rank, const char* what) {
    if (s.size() != rank)
        fail(ErrorKind::Shape, std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(s));
}

void expect(bool cond, const std::string& msg) { require(cond, ErrorKind::Shape, msg); }

template <typename T>
Tensor<T> column_block(const Tensor<T>& x, std::size_t begin, std::size_t width) {
    Tensor<T> out({x.rows(), width});
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < width; ++c) out(r, c) = x(r, begin + c);
    return out;
}

template <typename T>
void add_column_block(Tensor<T>& dst, const Tensor<T>& src, std::size_t begin) {
    for (std::size_t r = 0; r < src.rows(); ++r)
        for (std::size_t c = 0; c < src.cols(); ++c) dst(r, begin + c) += src(r, c);
}

template <typename T>
T gelu_scalar(T x) {
    return T(0.5) * x * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <typename T>
T gelu_derivative(T x) {
    const T cdf = T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
    const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * T(M_PI));
    return cdf + x * pdf;
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    expect_rank(a.shape(), 2, "matmul lhs");
    expect_rank(b.shape(), 2, "matmul rhs");
    expect(a.cols() == b.rows(), "matmul: inner extents differ " + shape_str(a.shape()) + " · " + shape_str(b.shape()));
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor<T> out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        T* orow = out.data().data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = a(i, p);
            if (av == T{0}) continue;
            const T* brow = b.data().data() + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
    expect_rank(a.shape(), 2, "matmul_nt lhs");
    expect_rank(b.shape(), 2, "matmul_nt rhs");
    expect(a.cols() == b.cols(),
           "matmul_nt: inner extents differ " + shape_str(a.shape()) + " · " + shape_str(b.shape()) + "ᵀ");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Tensor<T> out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            T acc = 0;
            const T* ar = a.data().data() + i * k;
            const T* br = b.data().data() + j * k;
            for (std::size_t p = 0; p < k; ++p) acc += ar[p] * br[p];
            out(i, j) = acc;
        }
    return out;
}

template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
    expect_rank(a.shape(), 2, "matmul_tn lhs");
    expect_rank(b.shape(), 2, "matmul_tn rhs");
    expect(a.rows() == b.rows(),
           "matmul_tn: inner extents differ " + shape_str(a.shape()) + "ᵀ · " + shape_str(b.shape()));
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    Tensor<T> out({m, n});
    for (std::size_t p = 0; p < k; ++p) {
        const T* ar = a.data().data() + p * m;
        const T* br = b.data().data() + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const T av = ar[i];
            if (av == T{0}) continue;
            T* orow = out.data().data() + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * br[j];
        }
    }
    return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
    expect_rank(a.shape(), 2, "transpose");
    Tensor<T> out({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& x, const Tensor<T>& b) {
    expect_rank(x.shape(), 2, "add_row_bias input");
    expect_rank(b.shape(), 1, "add_row_bias bias");
    expect(b.dim(0) == x.cols(), "add_row_bias: bias " + shape_str(b.shape()) + " vs input " + shape_str(x.shape()));
    Tensor<T> out = x;
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) += b[c];
    return out;
}

template <typename T>
Tensor<T> sum_rows(const Tensor<T>& dy) {
    expect_rank(dy.shape(), 2, "sum_rows");
    Tensor<T> out({dy.cols()});
    for (std::size_t r = 0; r < dy.rows(); ++r)
        for (std::size_t c = 0; c < dy.cols(); ++c) out[c] += dy(r, c);
    return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    expect_rank(x.shape(), 2, "linear input");
    expect_rank(w.shape(), 2, "linear weight");
    expect(x.cols() == w.rows(), "linear: input " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()));
    return add_row_bias(matmul(x, w), b);
}

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy) {
    return {matmul_nt(dy, w), matmul_tn(x, dy), sum_rows(dy)};
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
    Tensor<T> out = x;
    for (auto& v : out.data()) v = gelu_scalar(v);
    return out;
}

template <typename T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
    expect(x.shape() == dy.shape(), "gelu_backward shape mismatch");
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = dy[i] * gelu_derivative(x[i]);
    return out;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
    expect_rank(x.shape(), 2, "softmax");
    require_finite(x, "softmax");
    Tensor<T> out(x.shape());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto in = x.row(r);
        auto o = out.row(r);
        const T mx = *std::max_element(in.begin(), in.end());
        T total = 0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            o[c] = std::exp(in[c] - mx);
            total += o[c];
        }
        for (auto& v : o) v /= total;
    }
    return out;
}

template <typename T>
Tensor<T> softmax_rows_backward(const Tensor<T>& y, const Tensor<T>& dy) {
    expect(y.shape() == dy.shape(), "softmax_backward shape mismatch");
    Tensor<T> dx(y.shape());
    for (std::size_t r = 0; r < y.rows(); ++r) {
        T dot = 0;
        for (std::size_t c = 0; c < y.cols(); ++c) dot += y(r, c) * dy(r, c);
        for (std::size_t c = 0; c < y.cols(); ++c) dx(r, c) = y(r, c) * (dy(r, c) - dot);
    }
    return dx;
}

template <typename T>
AttentionForward<T> sdp_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                  const AttentionOptions& opts) {
    expect_rank(q.shape(), 2, "attention Q");
    expect_rank(k.shape(), 2, "attention K");
    expect_rank(v.shape(), 2, "attention V");
    expect(q.cols() == k.cols(),
           "attention: Q " + shape_str(q.shape()) + " and K " + shape_str(k.shape()) + " differ in width");
    expect(k.rows() == v.rows(),
           "attention: K " + shape_str(k.shape()) + " and V " + shape_str(v.shape()) + " differ in rows");
    const std::size_t h = opts.heads;
    expect(h >= 1 && q.cols() % h == 0 && v.cols() % h == 0,
           "attention: widths " + std::to_string(q.cols()) + "/" + std::to_string(v.cols()) +
               " not divisible by head count " + std::to_string(h));
    const std::size_t m = q.rows(), n = k.rows();
    const std::size_t dk = q.cols() / h, dv = v.cols() / h;
    if (opts.causal) expect(n >= m, "causal attention needs at least as many keys as queries");
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    require_finite(q, "attention Q");
    require_finite(k, "attention K");
    require_finite(v, "attention V");

    AttentionForward<T> fwd{Tensor<T>({m, v.cols()}), {}};
    for (std::size_t head = 0; head < h; ++head) {
        const Tensor<T> qh = h == 1 ? q : column_block(q, head * dk, dk);
        const Tensor<T> kh = h == 1 ? k : column_block(k, head * dk, dk);
        const Tensor<T> vh = h == 1 ? v : column_block(v, head * dv, dv);
        Tensor<T> scores = matmul_nt(qh, kh);
        for (auto& s : scores.data()) s *= scale;
        if (opts.causal) {
            const std::size_t offset = n - m;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = i + offset + 1; j < n; ++j) scores(i, j) = -std::numeric_limits<T>::infinity();
        }
        // softmax_rows rejects -inf, so the masked case is normalized here.
        Tensor<T> probs(scores.shape());
        for (std::size_t i = 0; i < m; ++i) {
            auto in = scores.row(i);
            auto o = probs.row(i);
            const T mx = *std::max_element(in.begin(), in.end());
            T total = 0;
            for (std::size_t j = 0; j < n; ++j) {
                o[j] = std::exp(in[j] - mx);
                total += o[j];
            }
            for (auto& p : o) p /= total;
        }
        const Tensor<T> oh = matmul(probs, vh);
        if (h == 1)
            fwd.out = oh;
        else
            add_column_block(fwd.out, oh, head * dv);
        fwd.probs.push_back(std::move(probs));
    }
    return fwd;
}

template <typename T>
AttentionGrads<T> sdp_attention_backward(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                         const std::vector<Tensor<T>>& probs, const Tensor<T>& dy,
                                         const AttentionOptions& opts) {
    const std::size_t h = opts.heads;
    expect(probs.size() == h, "attention backward: head count mismatch");
    expect(dy.rows() == q.rows() && dy.cols() == v.cols(), "attention backward: dy shape mismatch");
    const std::size_t dk = q.cols() / h, dv = v.cols() / h;
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    AttentionGrads<T> g{Tensor<T>(q.shape()), Tensor<T>(k.shape()), Tensor<T>(v.shape())};
    for (std::size_t head = 0; head < h; ++head) {
        const Tensor<T> qh = h == 1 ? q : column_block(q, head * dk, dk);
        const Tensor<T> kh = h == 1 ? k : column_block(k, head * dk, dk);
        const Tensor<T> vh = h == 1 ? v : column_block(v, head * dv, dv);
        const Tensor<T> dyh = h == 1 ? dy : column_block(dy, head * dv, dv);
        const Tensor<T>& p = probs[head];
        const Tensor<T> dp = matmul_nt(dyh, vh);
        const Tensor<T> dvh = matmul_tn(p, dyh);
        Tensor<T> ds = softmax_rows_backward(p, dp);
        for (auto& s : ds.data()) s *= scale;
        const Tensor<T> dqh = matmul(ds, kh);
        const Tensor<T> dkh = matmul_tn(ds, qh);
        add_column_block(g.dq, dqh, head * dk);
        add_column_block(g.dk, dkh, head * dk);
        add_column_block(g.dv, dvh, head * dv);
    }
    return g;
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, const ConvGeometry& geo) {
    require(geo.stride >= 1, ErrorKind::Shape, "conv2d: stride must be >= 1");
    const long long span = static_cast<long long>(in) + 2LL * static_cast<long long>(geo.padding) -
                           static_cast<long long>(kernel);
    if (span < 0) return 0;
    return static_cast<std::size_t>(span) / geo.stride + 1;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, const ConvGeometry& geo) {
    expect_rank(input.shape(), 3, "conv2d input");
    expect_rank(kernel.shape(), 4, "conv2d kernel");
    expect_rank(bias.shape(), 1, "conv2d bias");
    const std::size_t H = input.dim(0), W = input.dim(1), cin = input.dim(2);
    const std::size_t k = kernel.dim(0), cout = kernel.dim(3);
    expect(kernel.dim(1) == k, "conv2d: kernel must be square, got " + shape_str(kernel.shape()));
    expect(kernel.dim(2) == cin, "conv2d: kernel " + shape_str(kernel.shape()) + " vs input channels " +
                                     std::to_string(cin));
    expect(bias.dim(0) == cout, "conv2d: bias " + shape_str(bias.shape()) + " vs output channels " +
                                    std::to_string(cout));
    const std::size_t Ho = conv_output_extent(H, k, geo), Wo = conv_output_extent(W, k, geo);
    expect(Ho >= 1 && Wo >= 1, "conv2d: output extent < 1 for input " + shape_str(input.shape()));

    Tensor<T> out({Ho, Wo, cout});
    const long long pad = static_cast<long long>(geo.padding);
    for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox) {
            T* o = &out(oy, ox, 0);
            for (std::size_t co = 0; co < cout; ++co) o[co] = bias[co];
            for (std::size_t ky = 0; ky < k; ++ky) {
                const long long iy = static_cast<long long>(oy * geo.stride + ky) - pad;
                if (iy < 0 || iy >= static_cast<long long>(H)) continue;
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const long long ix = static_cast<long long>(ox * geo.stride + kx) - pad;
                    if (ix < 0 || ix >= static_cast<long long>(W)) continue;
                    const T* in = &input(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), 0);
                    const T* kw = kernel.data().data() + ((ky * k + kx) * cin) * cout;
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        const T iv = in[ci];
                        const T* kr = kw + ci * cout;
                        for (std::size_t co = 0; co < cout; ++co) o[co] += iv * kr[co];
                    }
                }
            }
        }
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& dy,
                             const ConvGeometry& geo) {
    const std::size_t H = input.dim(0), W = input.dim(1), cin = input.dim(2);
    const std::size_t k = kernel.dim(0), cout = kernel.dim(3);
    const std::size_t Ho = dy.dim(0), Wo = dy.dim(1);
    expect(dy.dim(2) == cout, "conv2d backward: dy channel mismatch");
    ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(kernel.shape()), Tensor<T>({cout})};
    const long long pad = static_cast<long long>(geo.padding);
    for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox) {
            const T* d = &dy(oy, ox, 0);
            for (std::size_t co = 0; co < cout; ++co) g.dbias[co] += d[co];
            for (std::size_t ky = 0; ky < k; ++ky) {
                const long long iy = static_cast<long long>(oy * geo.stride + ky) - pad;
                if (iy < 0 || iy >= static_cast<long long>(H)) continue;
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const long long ix = static_cast<long long>(ox * geo.stride + kx) - pad;
                    if (ix < 0 || ix >= static_cast<long long>(W)) continue;
                    const std::size_t base = (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * cin;
                    const T* in = input.data().data() + base;
                    T* din = g.dinput.data().data() + base;
                    const std::size_t kbase = ((ky * k + kx) * cin) * cout;
                    const T* kw = kernel.data().data() + kbase;
                    T* dkw = g.dkernel.data().data() + kbase;
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        const T iv = in[ci];
                        const T* kr = kw + ci * cout;
                        T* dkr = dkw + ci * cout;
                        T acc = 0;
                        for (std::size_t co = 0; co < cout; ++co) {
                            dkr[co] += iv * d[co];
                            acc += kr[co] * d[co];
                        }
                        din[ci] += acc;
                    }
                }
            }
        }
    return g;
}

template <typename T>
Tensor<T> avgpool_global(const Tensor<T>& input) {
    expect_rank(input.shape(), 3, "avgpool input");
    const std::size_t H = input.dim(0), W = input.dim(1), C = input.dim(2);
    Tensor<T> out({1, C});
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            for (std::size_t c = 0; c < C; ++c) out[c] += input(y, x, c);
    const T count = static_cast<T>(H * W);
    for (auto& v : out.data()) v /= count;
    return out;
}

template <typename T>
Tensor<T> avgpool_global_backward(const Shape& input_shape, const Tensor<T>& dy) {
    expect(input_shape.size() == 3 && dy.size() == input_shape[2], "avgpool backward shape mismatch");
    const std::size_t H = input_shape[0], W = input_shape[1], C = input_shape[2];
    const T inv = T(1) / static_cast<T>(H * W);
    Tensor<T> dx(input_shape);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            for (std::size_t c = 0; c < C; ++c) dx(y, x, c) = dy[c] * inv;
    return dx;
}

template <typename T>
Tensor<T> mlp2(const Tensor<T>& x, const Tensor<T>& w1, const Tensor<T>& b1, const Tensor<T>& w2,
               const Tensor<T>& b2) {
    return linear(gelu(linear(x, w1, b1)), w2, b2);
}

template <typename T>
Tensor<T> rms_norm(const Tensor<T>& x, const Tensor<T>& gain, T eps) {
    expect_rank(x.shape(), 2, "rms_norm");
    expect(gain.size() == x.cols(), "rms_norm: gain width mismatch");
    Tensor<T> out(x.shape());
    const std::size_t d = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) {
        T ms = 0;
        for (std::size_t c = 0; c < d; ++c) ms += x(r, c) * x(r, c);
        const T inv = T(1) / std::sqrt(ms / static_cast<T>(d) + eps);
        for (std::size_t c = 0; c < d; ++c) out(r, c) = x(r, c) * inv * gain[c];
    }
    return out;
}

template <typename T>
RmsNormGrads<T> rms_norm_backward(const Tensor<T>& x, const Tensor<T>& gain, T eps, const Tensor<T>& dy) {
    const std::size_t d = x.cols();
    RmsNormGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(gain.shape())};
    for (std::size_t r = 0; r < x.rows(); ++r) {
        T ms = 0;
        for (std::size_t c = 0; c < d; ++c) ms += x(r, c) * x(r, c);
        const T inv = T(1) / std::sqrt(ms / static_cast<T>(d) + eps);
        T dot = 0;
        for (std::size_t c = 0; c < d; ++c) {
            dot += dy(r, c) * gain[c] * x(r, c);
            g.dgain[c] += dy(r, c) * x(r, c) * inv;
        }
        const T coeff = dot * inv * inv * inv / static_cast<T>(d);
        for (std::size_t c = 0; c < d; ++c) g.dx(r, c) = dy(r, c) * gain[c] * inv - x(r, c) * coeff;
    }
    return g;
}

namespace {

template <typename T>
void check_ce_args(const Tensor<T>& logits, const std::vector<std::size_t>& targets,
                   const std::vector<std::uint8_t>& mask) {
    expect_rank(logits.shape(), 2, "cross-entropy logits");
    expect(targets.size() == logits.rows() && mask.size() == logits.rows(),
           "cross-entropy: targets/mask length must equal logit rows");
    std::size_t count = 0;
    for (std::size_t r = 0; r < mask.size(); ++r) {
        if (!mask[r]) continue;
        ++count;
        expect(targets[r] < logits.cols(), "cross-entropy: target id out of vocabulary");
    }
    require(count > 0, ErrorKind::Validation, "cross-entropy: empty loss mask");
}

}  // namespace

template <typename T>
T masked_cross_entropy(const Tensor<T>& logits, const std::vector<std::size_t>& targets,
                       const std::vector<std::uint8_t>& mask) {
    check_ce_args(logits, targets, mask);
    T total = 0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        if (!mask[r]) continue;
        auto row = logits.row(r);
        const T mx = *std::max_element(row.begin(), row.end());
        T sum = 0;
        for (T v : row) sum += std::exp(v - mx);
        total += (mx + std::log(sum)) - row[targets[r]];
        ++count;
    }
    return total / static_cast<T>(count);
}

template <typename T>
Tensor<T> masked_cross_entropy_backward(const Tensor<T>& logits, const std::vector<std::size_t>& targets,
                                        const std::vector<std::uint8_t>& mask, T dloss) {
    check_ce_args(logits, targets, mask);
    std::size_t count = 0;
    for (auto m : mask) count += m ? 1 : 0;
    const T scale = dloss / static_cast<T>(count);
    Tensor<T> g(logits.shape());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        if (!mask[r]) continue;
        auto row = logits.row(r);
        const T mx = *std::max_element(row.begin(), row.end());
        T sum = 0;
        for (T v : row) sum += std::exp(v - mx);
        for (std::size_t c = 0; c < row.size(); ++c) g(r, c) = std::exp(row[c] - mx) / sum * scale;
        g(r, targets[r]) -= scale;
    }
    return g;
}

#define FEA_INSTANTIATE_OPS(T)                                                                                 \
    template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                            \
    template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                                         \
    template Tensor<T> matmul_tn(const Tensor<T>&, const Tensor<T>&);                                         \
    template Tensor<T> transpose(const Tensor<T>&);                                                           \
    template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                          \
    template LinearGrads<T> linear_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);            \
    template Tensor<T> add_row_bias(const Tensor<T>&, const Tensor<T>&);                                      \
    template Tensor<T> sum_rows(const Tensor<T>&);                                                            \
    template Tensor<T> gelu(const Tensor<T>&);                                                                \
    template Tensor<T> gelu_backward(const Tensor<T>&, const Tensor<T>&);                                     \
    template Tensor<T> softmax_rows(const Tensor<T>&);                                                        \
    template Tensor<T> softmax_rows_backward(const Tensor<T>&, const Tensor<T>&);                             \
    template AttentionForward<T> sdp_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                               const AttentionOptions&);                                      \
    template AttentionGrads<T> sdp_attention_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                                      const std::vector<Tensor<T>>&, const Tensor<T>&,        \
                                                      const AttentionOptions&);                               \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const ConvGeometry&);     \
    template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,               \
                                          const ConvGeometry&);                                               \
    template Tensor<T> avgpool_global(const Tensor<T>&);                                                      \
    template Tensor<T> avgpool_global_backward(const Shape&, const Tensor<T>&);                               \
    template Tensor<T> mlp2(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                            const Tensor<T>&);                                                                \
    template Tensor<T> rms_norm(const Tensor<T>&, const Tensor<T>&, T);                                       \
    template RmsNormGrads<T> rms_norm_backward(const Tensor<T>&, const Tensor<T>&, T, const Tensor<T>&);      \
    template T masked_cross_entropy(const Tensor<T>&, const std::vector<std::size_t>&,                        \
                                    const std::vector<std::uint8_t>&);                                        \
    template Tensor<T> masked_cross_entropy_backward(const Tensor<T>&, const std::vector<std::size_t>&,       \
                                                     const std::vector<std::uint8_t>&, T);

FEA_INSTANTIATE_OPS(float)
FEA_INSTANTIATE_OPS(double)

#undef FEA_INSTANTIATE_OPS

}  // namespace fea::nn::ops
