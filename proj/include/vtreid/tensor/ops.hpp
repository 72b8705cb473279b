#pragma once

#include <span>
#include <vector>

#include "vtreid/tensor/tensor.hpp"

// Differentiable operations. Image tensors are NCHW; matrices are [rows, cols].
namespace vtreid::tensor {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var abs(const Var& a);
Var square(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);
// Weighted sum of scalars: sum_i w_i * terms_i.
Var weighted_sum(std::span<const Var> terms, std::span<const double> weights);

Var reshape(const Var& a, Shape shape);

// x [N,C,H,W], w [O,C,k,k], b [O] (b may be undefined).
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// x [N,Ci,H,W], w [Ci,O,k,k]; output side (H-1)*stride - 2*pad + k + output_pad.
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad,
                     int output_pad);

// Per-sample, per-channel normalization over spatial sites, no affine.
Var instance_norm(const Var& x, double eps = 1e-5);

Var concat_channels(std::span<const Var> parts);
// x [N,C,H,W] times m [N,1,H,W], m broadcast across channels.
Var mul_channel_broadcast(const Var& x, const Var& m);
// Rows [begin, end) of the leading axis.
Var slice_batch(const Var& x, int begin, int end);
Var concat_batch(std::span<const Var> parts);

// x [N,C,H,W] -> [N,C,C], G[k,l] = sum over sites of x_k * x_l.
Var gram(const Var& x);
// x [N,C,H,W] -> [N,C]
Var global_avg_pool(const Var& x);

// x [N,D], w [O,D], b [O] -> [N,O]
Var linear(const Var& x, const Var& w, const Var& b);
Var softmax_rows(const Var& x);
// [N,D...] pieces joined along axis 1 of the flattened [N, D] view.
Var concat_cols(std::span<const Var> parts);
// Mean softmax cross-entropy; logits [N,K], labels in [0,K).
Var cross_entropy(const Var& logits, std::span<const int> labels);

}  // namespace vtreid::tensor
