#pragma once

#include <string>
#include <vector>

#include "ta/param.hpp"
#include "ta/rng.hpp"
#include "ta/tensor.hpp"

namespace ta {

// Multi-scale large field reception: up to three branch pairs, each a 9x9
// dilated depthwise convolution next to a plain depthwise convolution whose
// kernel fills the dilation gaps, fused per branch by a 1x1, plus a 1x1
// bypass, all concatenated into a final 1x1 fusion.
//
// Variant v1 keeps the (dilation 6, kernel 7) pair, v2 adds (4, 5), v3 adds
// (2, 3).

struct MlfrVariant {
  int variant;
  explicit MlfrVariant(int v);
  static MlfrVariant from_string(const std::string& s);
  std::string to_string() const { return "v" + std::to_string(variant); }
  int branch_count() const { return variant; }
};

struct MlfrBranchSpec {
  int dilation;
  int plain_kernel;
};

// Branch specs in fixed (dr=6,4,2) order.
const std::vector<MlfrBranchSpec>& mlfr_branch_specs();

// Maximum single-pass reach of the block: max over branches of
// (9-1)*dr + 1 and the plain kernel size.
int mlfr_receptive_field(MlfrVariant variant);

class MlfrBlock {
 public:
  MlfrBlock() = default;
  MlfrBlock(int channels, MlfrVariant variant, Rng& rng);

  Tensor forward(const Tensor& x_chw);
  Tensor backward(const Tensor& dy_chw);
  void visit_params(const std::string& prefix, const ParamVisitor& fn);
  std::int64_t param_count() const;

  int channels() const { return channels_; }
  MlfrVariant variant() const { return MlfrVariant(static_cast<int>(branches_.size())); }

  struct Branch {
    Param dilated;  // (C, 9, 9)
    int dilation = 1;
    Param plain;    // (C, ks, ks)
    Param fuse;     // (C, 2C)
  };

  std::vector<Branch> branches_;
  Param bypass_;      // (C, C)
  Param final_fuse_;  // (C, (branches+1)*C)

 private:
  int channels_ = 0;

  struct Cache {
    Tensor x;
    std::vector<Tensor> branch_cat;  // concat(dilated, plain) per branch
    Tensor final_cat;
  } cache_;
};

Tensor mlfr_forward(const Tensor& x_chw, MlfrBlock& block);

}  // namespace ta
