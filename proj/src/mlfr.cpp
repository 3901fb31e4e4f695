#include "ta/mlfr.hpp"

#include <algorithm>

#include "ta/conv.hpp"
#include "ta/errors.hpp"
#include "ta/ops.hpp"

namespace ta {

MlfrVariant::MlfrVariant(int v) : variant(v) {
  if (v < 1 || v > 3) throw ConfigError("mlfr variant must be 1..3, got " + std::to_string(v));
}

MlfrVariant MlfrVariant::from_string(const std::string& s) {
  if (s == "v1") return MlfrVariant(1);
  if (s == "v2") return MlfrVariant(2);
  if (s == "v3") return MlfrVariant(3);
  throw ConfigError("mlfr.variant must be one of v1, v2, v3; got '" + s + "'");
}

const std::vector<MlfrBranchSpec>& mlfr_branch_specs() {
  static const std::vector<MlfrBranchSpec> specs = {{6, 7}, {4, 5}, {2, 3}};
  return specs;
}

int mlfr_receptive_field(MlfrVariant variant) {
  constexpr int dilated_kernel = 9;
  int span = 1;
  for (int i = 0; i < variant.branch_count(); ++i) {
    const MlfrBranchSpec& spec = mlfr_branch_specs()[static_cast<std::size_t>(i)];
    span = std::max(span, (dilated_kernel - 1) * spec.dilation + 1);
    span = std::max(span, spec.plain_kernel);
  }
  return span;
}

MlfrBlock::MlfrBlock(int channels, MlfrVariant variant, Rng& rng) : channels_(channels) {
  const int c = channels;
  branches_.resize(static_cast<std::size_t>(variant.branch_count()));
  for (int i = 0; i < variant.branch_count(); ++i) {
    const MlfrBranchSpec& spec = mlfr_branch_specs()[static_cast<std::size_t>(i)];
    Branch& b = branches_[static_cast<std::size_t>(i)];
    b.dilated = Param(rng.xavier_tensor({c, 9, 9}, 81, 81));
    b.dilation = spec.dilation;
    b.plain = Param(rng.xavier_tensor({c, spec.plain_kernel, spec.plain_kernel},
                                      spec.plain_kernel * spec.plain_kernel,
                                      spec.plain_kernel * spec.plain_kernel));
    b.fuse = Param(rng.xavier_tensor({c, 2 * c}, 2 * c, c));
  }
  bypass_ = Param(rng.xavier_tensor({c, c}, c, c));
  const int cat_width = (variant.branch_count() + 1) * c;
  final_fuse_ = Param(rng.xavier_tensor({c, cat_width}, cat_width, c));
}

Tensor MlfrBlock::forward(const Tensor& x_chw) {
  if (x_chw.rank() != 3 || x_chw.dim(0) != channels_) {
    throw ShapeError("mlfr_forward: expected (" + std::to_string(channels_) + ",H,W), got " +
                     x_chw.shape_str());
  }
  cache_.x = x_chw;
  cache_.branch_cat.clear();

  std::vector<Tensor> fused;
  for (Branch& b : branches_) {
    Tensor dd = depthwise_conv2d(x_chw, b.dilated.value, b.dilation);
    Tensor pl = depthwise_conv2d(x_chw, b.plain.value, 1);
    // Dilated output first, plain second.
    cache_.branch_cat.push_back(concat_channels({dd, pl}));
    fused.push_back(pointwise_conv(cache_.branch_cat.back(), b.fuse.value));
  }
  fused.push_back(pointwise_conv(x_chw, bypass_.value));
  cache_.final_cat = concat_channels(fused);
  return pointwise_conv(cache_.final_cat, final_fuse_.value);
}

Tensor MlfrBlock::backward(const Tensor& dy_chw) {
  const Tensor& x = cache_.x;
  Tensor dcat(cache_.final_cat.shape());
  pointwise_conv_backward(dy_chw, cache_.final_cat, final_fuse_.value, dcat, final_fuse_.grad);

  std::vector<int> widths(branches_.size() + 1, channels_);
  std::vector<Tensor> dfused = split_channels(dcat, widths);

  Tensor dx(x.shape());
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    Branch& b = branches_[i];
    Tensor dbranch_cat(cache_.branch_cat[i].shape());
    pointwise_conv_backward(dfused[i], cache_.branch_cat[i], b.fuse.value, dbranch_cat, b.fuse.grad);
    std::vector<Tensor> halves = split_channels(dbranch_cat, {channels_, channels_});
    depthwise_conv2d_backward(halves[0], x, b.dilated.value, b.dilation, dx, b.dilated.grad);
    depthwise_conv2d_backward(halves[1], x, b.plain.value, 1, dx, b.plain.grad);
  }
  pointwise_conv_backward(dfused.back(), x, bypass_.value, dx, bypass_.grad);
  return dx;
}

void MlfrBlock::visit_params(const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const std::string bp = prefix + "branch" + std::to_string(i + 1) + ".";
    fn(bp + "dilated", branches_[i].dilated);
    fn(bp + "plain", branches_[i].plain);
    fn(bp + "fuse", branches_[i].fuse);
  }
  fn(prefix + "bypass", bypass_);
  fn(prefix + "final_fuse", final_fuse_);
}

std::int64_t MlfrBlock::param_count() const {
  std::int64_t n = static_cast<std::int64_t>(bypass_.size() + final_fuse_.size());
  for (const Branch& b : branches_) {
    n += static_cast<std::int64_t>(b.dilated.size() + b.plain.size() + b.fuse.size());
  }
  return n;
}

Tensor mlfr_forward(const Tensor& x_chw, MlfrBlock& block) { return block.forward(x_chw); }

}  // namespace ta
