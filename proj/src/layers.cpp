#include "ta/layers.hpp"

#include "ta/conv.hpp"
#include "ta/ops.hpp"

namespace ta {

PointwiseLayer::PointwiseLayer(int c_in, int c_out, Rng& rng) {
  w = Param(rng.xavier_tensor({c_out, c_in}, c_in, c_out), "w");
}

Tensor PointwiseLayer::forward(const Tensor& x) {
  x_ = x;
  return pointwise_conv(x, w.value);
}

Tensor PointwiseLayer::backward(const Tensor& dy) {
  Tensor dx(x_.shape());
  pointwise_conv_backward(dy, x_, w.value, dx, w.grad);
  return dx;
}

DepthwiseLayer::DepthwiseLayer(int channels, int kernel, int dil, Rng& rng) : dilation(dil) {
  w = Param(rng.xavier_tensor({channels, kernel, kernel}, kernel * kernel, kernel * kernel), "w");
}

Tensor DepthwiseLayer::forward(const Tensor& x) {
  x_ = x;
  return depthwise_conv2d(x, w.value, dilation);
}

Tensor DepthwiseLayer::backward(const Tensor& dy) {
  Tensor dx(x_.shape());
  depthwise_conv2d_backward(dy, x_, w.value, dilation, dx, w.grad);
  return dx;
}

Conv2dLayer::Conv2dLayer(int c_in, int c_out, int kernel, int str, Rng& rng) : stride(str) {
  w = Param(rng.xavier_tensor({c_out, c_in, kernel, kernel}, c_in * kernel * kernel,
                              c_out * kernel * kernel),
            "w");
}

Tensor Conv2dLayer::forward(const Tensor& x) {
  x_ = x;
  return conv2d(x, w.value, stride);
}

Tensor Conv2dLayer::backward(const Tensor& dy) {
  Tensor dx(x_.shape());
  conv2d_backward(dy, x_, w.value, stride, dx, w.grad);
  return dx;
}

LayerNormLayer::LayerNormLayer(int channels) {
  gain = Param(Tensor::full({channels}, 1.0), "gain");
  bias = Param(Tensor({channels}), "bias");
}

Tensor LayerNormLayer::forward(const Tensor& x) {
  x_ = x;
  return channel_layer_norm(x, gain.value, bias.value);
}

Tensor LayerNormLayer::backward(const Tensor& dy) {
  Tensor dx(x_.shape());
  channel_layer_norm_backward(dy, x_, gain.value, dx, gain.grad, bias.grad);
  return dx;
}

ChannelAttentionLayer::ChannelAttentionLayer(int channels, Rng& rng) {
  const int q = (channels + 3) / 4;
  reduce = Param(rng.xavier_tensor({channels, q}, channels, q), "reduce");
  expand = Param(rng.xavier_tensor({q, channels}, q, channels), "expand");
}

Tensor ChannelAttentionLayer::forward(const Tensor& x) {
  x_ = x;
  return channel_attention(x, reduce.value, expand.value);
}

Tensor ChannelAttentionLayer::backward(const Tensor& dy) {
  Tensor dx(x_.shape());
  channel_attention_backward(dy, x_, reduce.value, expand.value, dx, reduce.grad, expand.grad);
  return dx;
}

GdfnLayer::GdfnLayer(int channels, Rng& rng) : channels_(channels) {
  constexpr int gamma = 2;
  const int wide = gamma * channels;
  expand = Param(rng.xavier_tensor({2 * wide, channels}, channels, 2 * wide), "expand");
  dwc_a = Param(rng.xavier_tensor({wide, 3, 3}, 9, 9), "dwc_a");
  dwc_b = Param(rng.xavier_tensor({wide, 3, 3}, 9, 9), "dwc_b");
  project = Param(rng.xavier_tensor({channels, wide}, wide, channels), "project");
}

Tensor GdfnLayer::forward(const Tensor& x) {
  if (x.dim(0) != channels_) {
    throw ShapeError("gdfn_forward: expected " + std::to_string(channels_) + " channels, got " +
                     x.shape_str());
  }
  const int wide = 2 * channels_;
  cache_.x = x;
  Tensor both = pointwise_conv(x, expand.value);  // 2*wide channels
  std::vector<Tensor> halves = split_channels(both, {wide, wide});
  cache_.a = std::move(halves[0]);
  cache_.b = std::move(halves[1]);
  cache_.ca = depthwise_conv2d(cache_.a, dwc_a.value, 1);
  cache_.cb = depthwise_conv2d(cache_.b, dwc_b.value, 1);
  cache_.ga = gelu(cache_.ca);
  Tensor gated = hadamard(cache_.ga, cache_.cb);
  return pointwise_conv(gated, project.value);
}

Tensor GdfnLayer::backward(const Tensor& dy) {
  Tensor gated = hadamard(cache_.ga, cache_.cb);
  Tensor dgated(gated.shape());
  pointwise_conv_backward(dy, gated, project.value, dgated, project.grad);
  Tensor dga = hadamard(dgated, cache_.cb);
  Tensor dcb = hadamard(dgated, cache_.ga);
  Tensor dca = gelu_backward(dga, cache_.ca);
  Tensor da(cache_.a.shape()), db(cache_.b.shape());
  depthwise_conv2d_backward(dca, cache_.a, dwc_a.value, 1, da, dwc_a.grad);
  depthwise_conv2d_backward(dcb, cache_.b, dwc_b.value, 1, db, dwc_b.grad);
  Tensor dboth = concat_channels({da, db});
  Tensor dx(cache_.x.shape());
  pointwise_conv_backward(dboth, cache_.x, expand.value, dx, expand.grad);
  return dx;
}

void GdfnLayer::visit_params(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + "expand", expand);
  fn(prefix + "dwc_a", dwc_a);
  fn(prefix + "dwc_b", dwc_b);
  fn(prefix + "project", project);
}

std::int64_t GdfnLayer::param_count() const {
  return static_cast<std::int64_t>(expand.size() + dwc_a.size() + dwc_b.size() + project.size());
}

Tensor gdfn_forward(const Tensor& x, GdfnLayer& layer) { return layer.forward(x); }

}  // namespace ta
