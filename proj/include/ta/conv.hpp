#pragma once

#include <optional>

#include "ta/tensor.hpp"

namespace ta {

// Spatial operators on (C, H, W) feature maps. All convolutions are
// correlations (no kernel flip) with zero same-padding, and carry no bias
// unless one is passed explicitly.

struct DepthwiseKernel {
  Tensor weights;  // (C, k, k), k odd
  int dilation = 1;
};

struct PointwiseKernel {
  Tensor weights;  // (C_out, C_in)
  std::optional<Tensor> bias;  // (C_out), absent by default
};

struct ChannelAttentionWeights {
  Tensor reduce;  // (C, ceil(C/4))
  Tensor expand;  // (ceil(C/4), C)
};

// Per-channel k x k correlation, zero padding of (k-1)*dilation/2 per side;
// spatial size preserved. Costs C*H*W*k*k multiply-adds.
Tensor depthwise_conv2d(const Tensor& x, const Tensor& weights, int dilation);
Tensor depthwise_conv2d(const Tensor& x, const DepthwiseKernel& kern);
void depthwise_conv2d_backward(const Tensor& dy, const Tensor& x, const Tensor& weights,
                               int dilation, Tensor& dx, Tensor& dweights);

// Per-position linear map across channels.
Tensor pointwise_conv(const Tensor& x, const Tensor& weights);
Tensor pointwise_conv(const Tensor& x, const PointwiseKernel& kern);
void pointwise_conv_backward(const Tensor& dy, const Tensor& x, const Tensor& weights,
                             Tensor& dx, Tensor& dweights);

// Full correlation with weights (C_out, C_in, k, k), zero same-padding,
// output spatial size ceil(H/stride) x ceil(W/stride).
Tensor conv2d(const Tensor& x, const Tensor& weights, int stride = 1);
void conv2d_backward(const Tensor& dy, const Tensor& x, const Tensor& weights, int stride,
                     Tensor& dx, Tensor& dweights);
inline Tensor conv2d_3x3(const Tensor& x, const Tensor& weights) { return conv2d(x, weights, 1); }

// Depth-to-space: (C*s^2, H, W) -> (C, sH, sW), row-major within each cell.
Tensor pixel_shuffle(const Tensor& x, int s);
Tensor pixel_unshuffle(const Tensor& x, int s);

// Normalize the channel vector at each position to zero mean / unit variance
// (epsilon 1e-6 inside the square root), then apply per-channel gain + bias.
Tensor channel_layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);
void channel_layer_norm_backward(const Tensor& dy, const Tensor& x, const Tensor& gain,
                                 Tensor& dx, Tensor& dgain, Tensor& dbias);

// Squeeze-and-excitation gate: global average pool -> reduce -> ReLU ->
// expand -> logistic -> per-channel rescale of x.
Tensor channel_attention(const Tensor& x, const Tensor& reduce, const Tensor& expand);
Tensor channel_attention(const Tensor& x, const ChannelAttentionWeights& w);
void channel_attention_backward(const Tensor& dy, const Tensor& x, const Tensor& reduce,
                                const Tensor& expand, Tensor& dx, Tensor& dreduce,
                                Tensor& dexpand);

// Mirror padding (edge pixel not repeated) on the bottom/right, used to make
// spatial dims divisible before a U-Net pass.
Tensor reflect_pad_br(const Tensor& x, int pad_h, int pad_w);
Tensor reflect_pad_br_backward(const Tensor& dy, int orig_h, int orig_w);

// Top-left crop.
Tensor crop(const Tensor& x, int h, int w);
Tensor crop_backward(const Tensor& dy, int orig_h, int orig_w);

// Channel concat / split for (C, H, W) maps.
Tensor concat_channels(const std::vector<Tensor>& parts);
std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int>& widths);

}  // namespace ta
