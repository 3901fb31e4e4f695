#include "ta/networks.hpp"

#include "ta/conv.hpp"
#include "ta/errors.hpp"
#include "ta/ops.hpp"

namespace ta {

LsteaBlock::LsteaBlock(int channels, int taylor_order, MlfrVariant mlfr_variant, Rng& rng,
                       double stea_k_init)
    : channels_(channels) {
  norm1 = LayerNormLayer(channels);
  local3 = DepthwiseLayer(channels, 3, 1, rng);
  local5 = DepthwiseLayer(channels, 5, 1, rng);
  stea = SteaUnit(channels, taylor_order, true, rng, stea_k_init);
  mlfr = MlfrBlock(channels, mlfr_variant, rng);
  merge = PointwiseLayer(2 * channels, channels, rng);
  ca = ChannelAttentionLayer(channels, rng);
  norm2 = LayerNormLayer(channels);
  gdfn = GdfnLayer(channels, rng);
}

Tensor LsteaBlock::forward(const Tensor& x) {
  Tensor n1 = norm1.forward(x);
  Tensor local = local5.forward(local3.forward(n1));
  Tensor global = mlfr.forward(stea.forward(n1));
  Tensor merged = merge.forward(concat_channels({local, global}));
  Tensor y = add(x, ca.forward(merged));
  Tensor out = add(y, gdfn.forward(norm2.forward(y)));
  return out;
}

Tensor LsteaBlock::backward(const Tensor& dout) {
  Tensor dy = add(dout, norm2.backward(gdfn.backward(dout)));
  Tensor dmerged = ca.backward(dy);
  Tensor dcat = merge.backward(dmerged);
  std::vector<Tensor> halves = split_channels(dcat, {channels_, channels_});
  Tensor dn1 = local3.backward(local5.backward(halves[0]));
  axpy(1.0, stea.backward(mlfr.backward(halves[1])), dn1);
  Tensor dx = add(dy, norm1.backward(dn1));
  return dx;
}

void LsteaBlock::visit_params(const std::string& prefix, const ParamVisitor& fn) {
  norm1.visit_params(prefix + "norm1.", fn);
  local3.visit_params(prefix + "local3.", fn);
  local5.visit_params(prefix + "local5.", fn);
  stea.visit_params(prefix + "stea.", fn);
  mlfr.visit_params(prefix + "mlfr.", fn);
  merge.visit_params(prefix + "merge.", fn);
  ca.visit_params(prefix + "ca.", fn);
  norm2.visit_params(prefix + "norm2.", fn);
  gdfn.visit_params(prefix + "gdfn.", fn);
}

void LabNetConfig::validate() const {
  if (scale < 2 || scale > 4) throw ConfigError("labnet: scale must be 2, 3, or 4");
  if (channels < 2) throw ConfigError("labnet: channels must be >= 2");
  for (int b : blocks)
    if (b < 1) throw ConfigError("labnet: every module needs at least one block");
}

LabNet::LabNet(const LabNetConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg.validate();
  const int c = cfg.channels;
  const MlfrVariant mv(cfg.mlfr_variant);
  shallow_ = Conv2dLayer(3, c, 3, 1, rng);
  // k is initialized to the nominal position count of each stage (a 16x16
  // working resolution, halved twice down the U).
  constexpr double stage_positions[6] = {256.0, 64.0, 16.0, 16.0, 64.0, 256.0};
  for (int m = 0; m < 6; ++m) {
    modules_[m].reserve(static_cast<std::size_t>(cfg.blocks[m]));
    for (int b = 0; b < cfg.blocks[m]; ++b) {
      modules_[m].emplace_back(c, cfg.taylor_order, mv, rng, stage_positions[m]);
    }
  }
  down1_ = Conv2dLayer(c, c, 3, 2, rng);
  down2_ = Conv2dLayer(c, c, 3, 2, rng);
  up1_ = PointwiseLayer(c, 4 * c, rng);
  up2_ = PointwiseLayer(c, 4 * c, rng);
  skip_fuse1_ = PointwiseLayer(2 * c, c, rng);
  skip_fuse2_ = PointwiseLayer(2 * c, c, rng);
  recon_ = Conv2dLayer(c, 3 * cfg.scale * cfg.scale, 3, 1, rng);
  final_ = Conv2dLayer(3, 3, 3, 1, rng);
}

Tensor LabNet::run_module(int idx, const Tensor& x) {
  Tensor cur = x;
  for (LsteaBlock& b : modules_[idx]) cur = b.forward(cur);
  return cur;
}

Tensor LabNet::run_module_backward(int idx, const Tensor& dy) {
  Tensor cur = dy;
  for (auto it = modules_[idx].rbegin(); it != modules_[idx].rend(); ++it) cur = it->backward(cur);
  return cur;
}

Tensor LabNet::forward(const Tensor& lr) {
  if (lr.rank() != 3 || lr.dim(0) != 3) {
    throw ShapeError("labnet_forward: expected (3,H,W) input, got " + lr.shape_str());
  }
  const int h = lr.dim(1), w = lr.dim(2);
  if (h < 4 || w < 4) {
    throw ShapeError("labnet_forward: input must be at least 4x4, got " + lr.shape_str());
  }
  cache_.h = h;
  cache_.w = w;
  cache_.hp = (h + 3) / 4 * 4;
  cache_.wp = (w + 3) / 4 * 4;
  Tensor padded = reflect_pad_br(lr, cache_.hp - h, cache_.wp - w);

  Tensor f0 = shallow_.forward(padded);
  Tensor e1 = run_module(0, f0);
  Tensor e2 = run_module(1, down1_.forward(e1));
  Tensor e3 = run_module(2, down2_.forward(e2));
  Tensor bott = run_module(3, e3);
  Tensor u1 = pixel_shuffle(up1_.forward(bott), 2);
  Tensor d5 = run_module(4, skip_fuse1_.forward(concat_channels({u1, e2})));
  Tensor u2 = pixel_shuffle(up2_.forward(d5), 2);
  Tensor d6 = run_module(5, skip_fuse2_.forward(concat_channels({u2, e1})));
  Tensor up = pixel_shuffle(recon_.forward(d6), cfg_.scale);
  Tensor out = final_.forward(up);
  return crop(out, cfg_.scale * h, cfg_.scale * w);
}

Tensor LabNet::backward(const Tensor& dy) {
  const int c = cfg_.channels;
  Tensor dout = crop_backward(dy, cfg_.scale * cache_.hp, cfg_.scale * cache_.wp);
  Tensor dup = final_.backward(dout);
  Tensor dd6 = recon_.backward(pixel_unshuffle(dup, cfg_.scale));
  Tensor dcat2 = skip_fuse2_.backward(run_module_backward(5, dd6));
  std::vector<Tensor> parts2 = split_channels(dcat2, {c, c});
  Tensor dd5 = up2_.backward(pixel_unshuffle(parts2[0], 2));
  Tensor dcat1 = skip_fuse1_.backward(run_module_backward(4, dd5));
  std::vector<Tensor> parts1 = split_channels(dcat1, {c, c});
  Tensor dbott = up1_.backward(pixel_unshuffle(parts1[0], 2));
  Tensor de3 = run_module_backward(3, dbott);
  Tensor de2 = down2_.backward(run_module_backward(2, de3));
  axpy(1.0, parts1[1], de2);
  Tensor de1 = down1_.backward(run_module_backward(1, de2));
  axpy(1.0, parts2[1], de1);
  Tensor df0 = run_module_backward(0, de1);
  Tensor dpadded = shallow_.backward(df0);
  return reflect_pad_br_backward(dpadded, cache_.h, cache_.w);
}

void LabNet::visit_params(const std::string& prefix, const ParamVisitor& fn) {
  shallow_.visit_params(prefix + "shallow.", fn);
  for (int m = 0; m < 6; ++m) {
    for (std::size_t b = 0; b < modules_[m].size(); ++b) {
      modules_[m][b].visit_params(
          prefix + "m" + std::to_string(m + 1) + ".b" + std::to_string(b) + ".", fn);
    }
  }
  down1_.visit_params(prefix + "down1.", fn);
  down2_.visit_params(prefix + "down2.", fn);
  up1_.visit_params(prefix + "up1.", fn);
  up2_.visit_params(prefix + "up2.", fn);
  skip_fuse1_.visit_params(prefix + "skip_fuse1.", fn);
  skip_fuse2_.visit_params(prefix + "skip_fuse2.", fn);
  recon_.visit_params(prefix + "recon.", fn);
  final_.visit_params(prefix + "final.", fn);
}

Tensor scale_knob(const Tensor& x, double s) {
  if (s == 0.0) return Tensor::zeros(x.shape());
  return scale(x, s);
}

AdapterSide::AdapterSide(int channels, Rng& rng) : channels_(channels) {
  conv_foreign = Conv2dLayer(channels, channels, 3, 1, rng);
  fuse = PointwiseLayer(2 * channels, channels, rng);
  ca = ChannelAttentionLayer(channels, rng);
}

Tensor AdapterSide::forward(const Tensor& own, const Tensor& foreign, double own_scale,
                            double foreign_scale) {
  if (!own.same_shape(foreign)) {
    throw ShapeError("adapter: branch shapes differ, " + own.shape_str() + " vs " +
                     foreign.shape_str());
  }
  own_scale_ = own_scale;
  foreign_scale_ = foreign_scale;
  Tensor mixed = concat_channels(
      {scale_knob(own, own_scale), scale_knob(conv_foreign.forward(foreign), foreign_scale)});
  return ca.forward(fuse.forward(mixed));
}

std::pair<Tensor, Tensor> AdapterSide::backward(const Tensor& dy) {
  Tensor dmixed = fuse.backward(ca.backward(dy));
  std::vector<Tensor> halves = split_channels(dmixed, {channels_, channels_});
  Tensor d_own = scale_knob(halves[0], own_scale_);
  Tensor d_foreign = conv_foreign.backward(scale_knob(halves[1], foreign_scale_));
  return {std::move(d_own), std::move(d_foreign)};
}

void AdapterSide::visit_params(const std::string& prefix, const ParamVisitor& fn) {
  conv_foreign.visit_params(prefix + "conv_foreign.", fn);
  fuse.visit_params(prefix + "fuse.", fn);
  ca.visit_params(prefix + "ca.", fn);
}

Adapter::Adapter(int channels, Rng& rng)
    : denoise_side(channels, rng), deblur_side(channels, rng) {}

std::pair<Tensor, Tensor> Adapter::forward(const Tensor& f_den, const Tensor& f_deb, double alpha,
                                           double beta) {
  Tensor out_den = denoise_side.forward(f_den, f_deb, alpha, beta);
  Tensor out_deb = deblur_side.forward(f_deb, f_den, beta, alpha);
  return {std::move(out_den), std::move(out_deb)};
}

std::pair<Tensor, Tensor> Adapter::backward(const Tensor& dden, const Tensor& ddeb) {
  auto [dden_own, dden_foreign] = denoise_side.backward(dden);
  auto [ddeb_own, ddeb_foreign] = deblur_side.backward(ddeb);
  axpy(1.0, ddeb_foreign, dden_own);  // denoise features also fed the deblur side
  axpy(1.0, dden_foreign, ddeb_own);
  return {std::move(dden_own), std::move(ddeb_own)};
}

void Adapter::visit_params(const std::string& prefix, const ParamVisitor& fn) {
  denoise_side.visit_params(prefix + "den.", fn);
  deblur_side.visit_params(prefix + "deb.", fn);
}

Fusion::Fusion(int channels, int scale, Rng& rng) : scale_(scale) {
  fuse = PointwiseLayer(2 * channels, channels, rng);
  recon = Conv2dLayer(channels, 3 * scale * scale, 3, 1, rng);
  final_conv = Conv2dLayer(3, 3, 3, 1, rng);
}

Tensor Fusion::forward(const Tensor& f_den, const Tensor& f_deb, double alpha, double beta) {
  if (!f_den.same_shape(f_deb)) {
    throw ShapeError("fusion: branch shapes differ, " + f_den.shape_str() + " vs " +
                     f_deb.shape_str());
  }
  alpha_ = alpha;
  beta_ = beta;
  Tensor mixed = concat_channels({scale_knob(f_den, alpha), scale_knob(f_deb, beta)});
  prefine_ = pixel_shuffle(recon.forward(fuse.forward(mixed)), scale_);
  return final_conv.forward(prefine_);
}

std::pair<Tensor, Tensor> Fusion::backward(const Tensor& dy) {
  Tensor dprefine = final_conv.backward(dy);
  Tensor dmixed = fuse.backward(recon.backward(pixel_unshuffle(dprefine, scale_)));
  const int c = dmixed.dim(0) / 2;
  std::vector<Tensor> halves = split_channels(dmixed, {c, c});
  return {scale_knob(halves[0], alpha_), scale_knob(halves[1], beta_)};
}

void Fusion::visit_params(const std::string& prefix, const ParamVisitor& fn) {
  fuse.visit_params(prefix + "fuse.", fn);
  recon.visit_params(prefix + "recon.", fn);
  final_conv.visit_params(prefix + "final.", fn);
}

void RealNetConfig::validate() const {
  if (scale < 2 || scale > 4) throw ConfigError("realnet: scale must be 2, 3, or 4");
  if (channels < 2) throw ConfigError("realnet: channels must be >= 2");
  if (blocks.empty() || blocks.size() > 4) {
    throw ConfigError("realnet: 1..4 modules per branch");
  }
  for (int b : blocks)
    if (b < 1) throw ConfigError("realnet: every module needs at least one block");
}

RealNet::RealNet(const RealNetConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg.validate();
  const int c = cfg.channels;
  const MlfrVariant mv(cfg.mlfr_variant);
  shallow_den_ = Conv2dLayer(3, c, 3, 1, rng);
  shallow_deb_ = Conv2dLayer(3, c, 3, 1, rng);
  const int m = cfg.modules();
  den_modules_.resize(static_cast<std::size_t>(m));
  deb_modules_.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    for (int b = 0; b < cfg.blocks[static_cast<std::size_t>(i)]; ++b) {
      den_modules_[i].emplace_back(c, cfg.taylor_order, mv, rng);
      deb_modules_[i].emplace_back(c, cfg.taylor_order, mv, rng);
    }
  }
  for (int i = 0; i + 1 < m; ++i) adapters_.emplace_back(c, rng);
  fusion_ = Fusion(c, cfg.scale, rng);
}

void RealNet::set_knobs(const std::array<double, 4>& alpha, const std::array<double, 4>& beta) {
  cfg_.alpha = alpha;
  cfg_.beta = beta;
}

Tensor RealNet::forward(const Tensor& lr) {
  if (lr.rank() != 3 || lr.dim(0) != 3) {
    throw ShapeError("realnet_forward: expected (3,H,W) input, got " + lr.shape_str());
  }
  if (lr.dim(1) < 4 || lr.dim(2) < 4) {
    throw ShapeError("realnet_forward: input must be at least 4x4, got " + lr.shape_str());
  }
  Tensor f_den = shallow_den_.forward(lr);
  Tensor f_deb = shallow_deb_.forward(lr);
  const int m = cfg_.modules();
  for (int i = 0; i < m; ++i) {
    for (LsteaBlock& b : den_modules_[i]) f_den = b.forward(f_den);
    for (LsteaBlock& b : deb_modules_[i]) f_deb = b.forward(f_deb);
    if (i + 1 < m) {
      auto [nd, nb] = adapters_[static_cast<std::size_t>(i)].forward(
          f_den, f_deb, cfg_.alpha[static_cast<std::size_t>(i)],
          cfg_.beta[static_cast<std::size_t>(i)]);
      f_den = std::move(nd);
      f_deb = std::move(nb);
    }
  }
  return fusion_.forward(f_den, f_deb, cfg_.alpha[3], cfg_.beta[3]);
}

Tensor RealNet::backward(const Tensor& dy) {
  auto [dden, ddeb] = fusion_.backward(dy);
  const int m = cfg_.modules();
  for (int i = m - 1; i >= 0; --i) {
    if (i + 1 < m) {
      auto [nd, nb] = adapters_[static_cast<std::size_t>(i)].backward(dden, ddeb);
      dden = std::move(nd);
      ddeb = std::move(nb);
    }
    for (auto it = den_modules_[i].rbegin(); it != den_modules_[i].rend(); ++it)
      dden = it->backward(dden);
    for (auto it = deb_modules_[i].rbegin(); it != deb_modules_[i].rend(); ++it)
      ddeb = it->backward(ddeb);
  }
  Tensor dlr = shallow_den_.backward(dden);
  axpy(1.0, shallow_deb_.backward(ddeb), dlr);
  return dlr;
}

void RealNet::visit_params(const std::string& prefix, const ParamVisitor& fn) {
  shallow_den_.visit_params(prefix + "den.shallow.", fn);
  shallow_deb_.visit_params(prefix + "deb.shallow.", fn);
  for (std::size_t i = 0; i < den_modules_.size(); ++i) {
    for (std::size_t b = 0; b < den_modules_[i].size(); ++b) {
      const std::string tag = "m" + std::to_string(i + 1) + ".b" + std::to_string(b) + ".";
      den_modules_[i][b].visit_params(prefix + "den." + tag, fn);
      deb_modules_[i][b].visit_params(prefix + "deb." + tag, fn);
    }
  }
  for (std::size_t i = 0; i < adapters_.size(); ++i) {
    adapters_[i].visit_params(prefix + "adapter" + std::to_string(i + 1) + ".", fn);
  }
  fusion_.visit_params(prefix + "fusion.", fn);
}

void RealNet::visit_deblur_params(const ParamVisitor& fn) {
  shallow_deb_.visit_params("deb.shallow.", fn);
  for (std::size_t i = 0; i < deb_modules_.size(); ++i) {
    for (std::size_t b = 0; b < deb_modules_[i].size(); ++b) {
      deb_modules_[i][b].visit_params(
          "deb.m" + std::to_string(i + 1) + ".b" + std::to_string(b) + ".", fn);
    }
  }
  for (std::size_t i = 0; i < adapters_.size(); ++i) {
    adapters_[i].deblur_side.visit_params("adapter" + std::to_string(i + 1) + ".deb.", fn);
  }
}

Tensor lstea_block_forward(const Tensor& x, LsteaBlock& block) { return block.forward(x); }
Tensor labnet_forward(const Tensor& lr, LabNet& net) { return net.forward(lr); }
Tensor realnet_forward(const Tensor& lr, RealNet& net) { return net.forward(lr); }

std::pair<Tensor, Tensor> adapter_forward(const Tensor& f_den, const Tensor& f_deb, double alpha,
                                          double beta, Adapter& adapter) {
  return adapter.forward(f_den, f_deb, alpha, beta);
}

Tensor fusion_forward(const Tensor& f_den, const Tensor& f_deb, double alpha, double beta,
                      Fusion& fusion) {
  return fusion.forward(f_den, f_deb, alpha, beta);
}

}  // namespace ta
