#pragma once

#include <string>

#include "ta/param.hpp"
#include "ta/rng.hpp"
#include "ta/tensor.hpp"

namespace ta {

// Thin stateful wrappers over the conv primitives: each owns its Params and
// the activations its backward pass needs. One forward/backward pair per
// instance at a time.

class PointwiseLayer {
 public:
  PointwiseLayer() = default;
  PointwiseLayer(int c_in, int c_out, Rng& rng);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void visit_params(const std::string& prefix, const ParamVisitor& fn) { fn(prefix + "w", w); }
  Param w;

 private:
  Tensor x_;
};

class DepthwiseLayer {
 public:
  DepthwiseLayer() = default;
  DepthwiseLayer(int channels, int kernel, int dilation, Rng& rng);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void visit_params(const std::string& prefix, const ParamVisitor& fn) { fn(prefix + "w", w); }
  Param w;
  int dilation = 1;

 private:
  Tensor x_;
};

class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(int c_in, int c_out, int kernel, int stride, Rng& rng);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void visit_params(const std::string& prefix, const ParamVisitor& fn) { fn(prefix + "w", w); }
  Param w;
  int stride = 1;

 private:
  Tensor x_;
};

class LayerNormLayer {
 public:
  LayerNormLayer() = default;
  explicit LayerNormLayer(int channels);  // gain 1, bias 0
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void visit_params(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + "gain", gain);
    fn(prefix + "bias", bias);
  }
  Param gain, bias;

 private:
  Tensor x_;
};

class ChannelAttentionLayer {
 public:
  ChannelAttentionLayer() = default;
  ChannelAttentionLayer(int channels, Rng& rng);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void visit_params(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + "reduce", reduce);
    fn(prefix + "expand", expand);
  }
  Param reduce, expand;

 private:
  Tensor x_;
};

// Gated feed-forward: expand C -> 2*gamma*C (gamma = 2), split halves,
// GELU(DWC(a)) .* DWC(b), project back to C. No residual here.
class GdfnLayer {
 public:
  GdfnLayer() = default;
  GdfnLayer(int channels, Rng& rng);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void visit_params(const std::string& prefix, const ParamVisitor& fn);
  std::int64_t param_count() const;

  Param expand;   // (2*gamma*C, C)
  Param dwc_a;    // (gamma*C, 3, 3)
  Param dwc_b;    // (gamma*C, 3, 3)
  Param project;  // (C, gamma*C)

 private:
  int channels_ = 0;
  struct Cache {
    Tensor x, a, b, ca, cb, ga;
  } cache_;
};

Tensor gdfn_forward(const Tensor& x, GdfnLayer& layer);

}  // namespace ta
