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

#pragma once

// Pure forward/backward kernels. Every function validates shapes and
// throws fea::Error(ErrorKind::Shape) on mismatch. Backward functions take
// the upstream gradient `dy` and return gradients for each input.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fea/nn/tensor.hpp"

namespace fea::nn::ops {

// ---- dense algebra --------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);  // (m,k)·(k,n)

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);  // (m,k)·(n,k)ᵀ

template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b);  // (k,m)ᵀ·(k,n)

template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

/// x·W + b with W stored (din, dout) and b of shape (dout).
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <typename T>
struct LinearGrads {
    Tensor<T> dx, dw, db;
};

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy);

/// Adds a (cols) bias to every row.
template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& x, const Tensor<T>& b);

/// Column sums of a rank-2 tensor; the bias gradient of add_row_bias.
template <typename T>
Tensor<T> sum_rows(const Tensor<T>& dy);

// ---- activations ----------------------------------------------------------

/// Exact GELU, x·Φ(x).
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

template <typename T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& dy);

/// Row-wise softmax of a rank-2 tensor. Rejects non-finite input.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x);

template <typename T>
Tensor<T> softmax_rows_backward(const Tensor<T>& y, const Tensor<T>& dy);

// ---- attention ------------------------------------------------------------

struct AttentionOptions {
    std::size_t heads = 1;
    /// Query i may only see keys j <= i + (n - m).
    bool causal = false;
};

template <typename T>
struct AttentionForward {
    Tensor<T> out;               // (m, c)
    std::vector<Tensor<T>> probs;  // per head, (m, n)
};

/// softmax(Q·Kᵀ/√d_head)·V, split into `heads` column groups.
/// Q: (m, d), K: (n, d), V: (n, c); d and c must divide by heads.
template <typename T>
AttentionForward<T> sdp_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                  const AttentionOptions& opts = {});

template <typename T>
struct AttentionGrads {
    Tensor<T> dq, dk, dv;
};

template <typename T>
AttentionGrads<T> sdp_attention_backward(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                         const std::vector<Tensor<T>>& probs, const Tensor<T>& dy,
                                         const AttentionOptions& opts = {});

// ---- convolution and pooling ----------------------------------------------

struct ConvGeometry {
    std::size_t stride = 1;
    std::size_t padding = 0;
};

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, const ConvGeometry& geo);

/// Cross-correlation of an (H, W, Cin) map with a (k, k, Cin, Cout) kernel,
/// plus a (Cout) bias. Output (H', W', Cout),
/// H' = floor((H + 2·padding − k)/stride) + 1.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 const ConvGeometry& geo);

template <typename T>
struct ConvGrads {
    Tensor<T> dinput, dkernel, dbias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& dy,
                             const ConvGeometry& geo);

/// Channel-wise mean of an (H, W, C) map, returned as a (1, C) row.
template <typename T>
Tensor<T> avgpool_global(const Tensor<T>& input);

template <typename T>
Tensor<T> avgpool_global_backward(const Shape& input_shape, const Tensor<T>& dy);

// ---- composites -----------------------------------------------------------

/// linear → GELU → linear.
template <typename T>
Tensor<T> mlp2(const Tensor<T>& x, const Tensor<T>& w1, const Tensor<T>& b1, const Tensor<T>& w2,
               const Tensor<T>& b2);

// ---- normalization and losses ---------------------------------------------

/// y = x / sqrt(mean(x²) + eps) ⊙ gain, per row.
template <typename T>
Tensor<T> rms_norm(const Tensor<T>& x, const Tensor<T>& gain, T eps);

template <typename T>
struct RmsNormGrads {
    Tensor<T> dx, dgain;
};

template <typename T>
RmsNormGrads<T> rms_norm_backward(const Tensor<T>& x, const Tensor<T>& gain, T eps, const Tensor<T>& dy);

/// Mean cross-entropy over rows where mask != 0.
template <typename T>
T masked_cross_entropy(const Tensor<T>& logits, const std::vector<std::size_t>& targets,
                       const std::vector<std::uint8_t>& mask);

/// Gradient of masked_cross_entropy w.r.t. logits, scaled by dloss.
template <typename T>
Tensor<T> masked_cross_entropy_backward(const Tensor<T>& logits, const std::vector<std::size_t>& targets,
                                        const std::vector<std::uint8_t>& mask, T dloss);

}  // namespace fea::nn::ops
