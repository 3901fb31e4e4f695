#pragma once

#include <array>
#include <string>
#include <vector>

#include "ta/attention.hpp"
#include "ta/layers.hpp"
#include "ta/mlfr.hpp"
#include "ta/param.hpp"
#include "ta/rng.hpp"

namespace ta {

// Residual block: LN -> {local depthwise stack | STEA -> MLFR} -> 1x1 merge
// -> channel attention, plus a gated feed-forward sub-block, each behind its
// own residual connection.
class LsteaBlock {
 public:
  LsteaBlock() = default;
  LsteaBlock(int channels, int taylor_order, MlfrVariant mlfr_variant, Rng& rng,
             double stea_k_init = 256.0);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void visit_params(const std::string& prefix, const ParamVisitor& fn);

  LayerNormLayer norm1;
  DepthwiseLayer local3, local5;
  SteaUnit stea;
  MlfrBlock mlfr;
  PointwiseLayer merge;  // 2C -> C
  ChannelAttentionLayer ca;
  LayerNormLayer norm2;
  GdfnLayer gdfn;

 private:
  int channels_ = 0;
};

struct LabNetConfig {
  int channels = 16;
  int scale = 2;                                // in {2, 3, 4}
  std::array<int, 6> blocks = {1, 1, 1, 1, 1, 1};
  int mlfr_variant = 3;
  int taylor_order = 2;

  void validate() const;
};

// U-shaped stack of six LSTEA modules (three encoder stages with strided
// downsampling between them, then three decoder stages with pixel-shuffle
// upsampling and encoder skips), between a shallow 3x3 feature extractor and
// a pixel-shuffle reconstruction head. Accepts arbitrary sizes >= 4 by
// mirror-padding to a multiple of 4 and cropping the result.
class LabNet {
 public:
  LabNet() = default;
  LabNet(const LabNetConfig& cfg, Rng& rng);

  Tensor forward(const Tensor& lr);            // (3,H,W) -> (3,sH,sW)
  Tensor backward(const Tensor& dy);
  void visit_params(const std::string& prefix, const ParamVisitor& fn);
  const LabNetConfig& config() const { return cfg_; }

 private:
  Tensor run_module(int idx, const Tensor& x);
  Tensor run_module_backward(int idx, const Tensor& dy);

  LabNetConfig cfg_;
  Conv2dLayer shallow_;
  std::array<std::vector<LsteaBlock>, 6> modules_;
  Conv2dLayer down1_, down2_;
  PointwiseLayer up1_, up2_;        // C -> 4C before pixel shuffle x2
  PointwiseLayer skip_fuse1_, skip_fuse2_;  // 2C -> C
  Conv2dLayer recon_;               // C -> 3*s^2
  Conv2dLayer final_;               // 3 -> 3

  struct Cache {
    int h = 0, w = 0, hp = 0, wp = 0;
  } cache_;
};

// Multiplicative mixing knob. Exactly zero scale yields an all +0.0 tensor
// so a zeroed branch is bitwise inert downstream.
Tensor scale_knob(const Tensor& x, double s);

// One side of the cross-branch Adapter: the foreign features pass a 3x3
// conv, are scaled, concatenated behind the scaled own features, fused by a
// 1x1, and gated by channel attention.
class AdapterSide {
 public:
  AdapterSide() = default;
  AdapterSide(int channels, Rng& rng);

  Tensor forward(const Tensor& own, const Tensor& foreign, double own_scale, double foreign_scale);
  // Returns (d_own, d_foreign).
  std::pair<Tensor, Tensor> backward(const Tensor& dy);
  void visit_params(const std::string& prefix, const ParamVisitor& fn);

  Conv2dLayer conv_foreign;
  PointwiseLayer fuse;  // 2C -> C
  ChannelAttentionLayer ca;

 private:
  double own_scale_ = 1.0, foreign_scale_ = 1.0;
  int channels_ = 0;
};

class Adapter {
 public:
  Adapter() = default;
  Adapter(int channels, Rng& rng);

  // (f_den, f_deb) -> (f_den', f_deb') with alpha scaling the denoise
  // features and beta the deblur features on both sides.
  std::pair<Tensor, Tensor> forward(const Tensor& f_den, const Tensor& f_deb, double alpha,
                                    double beta);
  std::pair<Tensor, Tensor> backward(const Tensor& dden, const Tensor& ddeb);
  void visit_params(const std::string& prefix, const ParamVisitor& fn);

  AdapterSide denoise_side;
  AdapterSide deblur_side;
};

// Reconstruction head mixing the two branch outputs: 1x1 fusion of the
// scaled features, conv to 3*s^2 channels, pixel shuffle, 3x3 refinement.
class Fusion {
 public:
  Fusion() = default;
  Fusion(int channels, int scale, Rng& rng);

  Tensor forward(const Tensor& f_den, const Tensor& f_deb, double alpha, double beta);
  std::pair<Tensor, Tensor> backward(const Tensor& dy);
  void visit_params(const std::string& prefix, const ParamVisitor& fn);

  // Upsampled features before the final refinement conv (test tap).
  const Tensor& pre_refinement() const { return prefine_; }

  PointwiseLayer fuse;  // 2C -> C
  Conv2dLayer recon;    // C -> 3*s^2
  Conv2dLayer final_conv;  // 3 -> 3

 private:
  int scale_ = 2;
  double alpha_ = 1.0, beta_ = 1.0;
  Tensor prefine_;
};

struct RealNetConfig {
  int channels = 16;
  int scale = 2;
  std::vector<int> blocks = {1, 1};  // one entry per module per branch
  std::array<double, 4> alpha = {1.0, 1.0, 1.0, 1.0};
  std::array<double, 4> beta = {1.0, 1.0, 1.0, 1.0};
  int mlfr_variant = 3;
  int taylor_order = 2;

  int modules() const { return static_cast<int>(blocks.size()); }
  void validate() const;
};

// Dual-branch restorer: parallel denoise/deblur LSTEA stacks cross-mixed by
// Adapters after each stage but the last, then a Fusion head. Knobs are the
// eight alpha/beta values; adapters use alpha[i]/beta[i] for stage i and the
// fusion always uses alpha[3]/beta[3].
class RealNet {
 public:
  RealNet() = default;
  RealNet(const RealNetConfig& cfg, Rng& rng);

  Tensor forward(const Tensor& lr);
  Tensor backward(const Tensor& dy);
  // Override the configured knobs (used by the sr command).
  void set_knobs(const std::array<double, 4>& alpha, const std::array<double, 4>& beta);
  void visit_params(const std::string& prefix, const ParamVisitor& fn);
  // Deblur-branch weights only (shallow conv, modules, adapter deblur side).
  void visit_deblur_params(const ParamVisitor& fn);
  const RealNetConfig& config() const { return cfg_; }

 private:
  RealNetConfig cfg_;
  Conv2dLayer shallow_den_, shallow_deb_;
  std::vector<std::vector<LsteaBlock>> den_modules_, deb_modules_;
  std::vector<Adapter> adapters_;
  Fusion fusion_;
};

Tensor lstea_block_forward(const Tensor& x, LsteaBlock& block);
Tensor labnet_forward(const Tensor& lr, LabNet& net);
Tensor realnet_forward(const Tensor& lr, RealNet& net);

std::pair<Tensor, Tensor> adapter_forward(const Tensor& f_den, const Tensor& f_deb, double alpha,
                                          double beta, Adapter& adapter);
Tensor fusion_forward(const Tensor& f_den, const Tensor& f_deb, double alpha, double beta,
                      Fusion& fusion);

}  // namespace ta
