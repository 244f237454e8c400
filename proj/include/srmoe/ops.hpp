#pragma once

// Differentiable operations. Each function appends one node to the tape and
// wires a backward closure that adds into the input nodes' gradients.
//
// Batch convention: activations are row-major [batch x features]. Image
// tensors ride in the same container with features laid out channel-major
// as [channel][height][width].

#include <vector>

#include "srmoe/tape.hpp"

namespace srmoe::ops {

// Elementwise sum of two same-shape nodes.
NodeId add(Tape& t, NodeId a, NodeId b);

// y = c * a for a compile-time-known constant c.
NodeId scale(Tape& t, NodeId a, double c);

// y = max(x, 0); the slope at exactly zero is taken as zero.
NodeId relu(Tape& t, NodeId x);

// y = a * b (matrix product).
NodeId matmul(Tape& t, NodeId a, NodeId b);

// y = x * w + b with x [B x in], w [in x out], bias b [1 x out] broadcast
// over rows.
NodeId linear(Tape& t, NodeId x, NodeId w, NodeId b);

// Per-row normalization over features followed by an affine map:
// y = gamma * (x - mean) / sqrt(var + eps) + beta, gamma/beta [1 x n].
// var is the population variance of the row.
NodeId layer_norm(Tape& t, NodeId x, NodeId gamma, NodeId beta, double eps);

// Row-wise softmax.
NodeId softmax_rows(Tape& t, NodeId x);

// Mean cross-entropy of row-wise softmax(logits) against integer labels;
// returns a 1x1 scalar. Numerically stabilized via the row max.
NodeId softmax_cross_entropy(Tape& t, NodeId logits, const std::vector<int>& labels);

// 1x1 scalar holding the mean of 1x1 scalar nodes.
NodeId mean_scalars(Tape& t, const std::vector<NodeId>& xs);

// D[b,k] = Euclidean distance from row b of z [B x d] to row k of
// prototypes [K x d]. Where a distance is exactly zero its gradient
// contribution is dropped (the norm is not differentiable there).
NodeId proto_distances(Tape& t, NodeId z, NodeId prototypes);

// out[b,:] = sum_k weights[b,k] * items[k][b,:]; weights [B x K], each item
// [B x d]. Gradients flow into the weights and into every item.
NodeId weighted_sum(Tape& t, NodeId weights, const std::vector<NodeId>& items);

// Replaces each row of weights with a one-hot at its argmax (ties break to
// the lowest index). No gradient flows through this node.
NodeId hard_top1(Tape& t, NodeId weights);

// Valid 2d convolution over x [B x C*H*W] with kernels w [OC x C*K*K] and
// bias [1 x OC]; output [B x OC*OH*OW] with OH = OW = (H - K) / S + 1.
NodeId conv2d(Tape& t, NodeId x, NodeId w, NodeId bias,
              int B, int C, int H, int W, int OC, int K, int S);

// Disjoint P x P max pooling with stride P; trailing rows/columns that do
// not fill a window are dropped (floor division of the spatial dims).
NodeId maxpool2d(Tape& t, NodeId x, int B, int C, int H, int W, int P);

// Adaptive average pooling to a T x T grid per channel.
NodeId adaptive_avgpool2d(Tape& t, NodeId x, int B, int C, int H, int W, int T);

}  // namespace srmoe::ops
