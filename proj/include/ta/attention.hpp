#pragma once

#include <string>
#include <vector>

#include "ta/param.hpp"
#include "ta/rng.hpp"
#include "ta/tensor.hpp"

namespace ta {

// Attention over the flattened feature map X (N x d), N = H*W positions,
// d channels. nla_forward is the exact quadratic-cost oracle; the Taylor
// forms approximate it, and the linear rearrangements must match their
// quadratic references to near machine precision.

struct QkvWeights {
  Tensor w_q, w_k, w_v;  // (d x d) each

  static QkvWeights random(int d, Rng& rng);
  static QkvWeights identity(int d);
  Tensor w_qk() const;  // W_q * W_k^T, derived on demand
  std::int64_t param_count() const { return static_cast<std::int64_t>(w_q.size() + w_k.size() + w_v.size()); }
};

struct QkvGrads {
  Tensor dx, dw_q, dw_k, dw_v;
};

struct TaylorOrder {
  int order;
  explicit TaylorOrder(int o);
};

// Exact attention: row_softmax((XWq)(XWk)^T) (XWv). Theta(N^2 d) cost.
Tensor nla_forward(const Tensor& x, const QkvWeights& w);
QkvGrads nla_backward(const Tensor& dy, const Tensor& x, const QkvWeights& w);

// (1/k) exp(QK^T) V with elementwise exp and no max subtraction. Any
// |QK^T| entry above 30 raises NumericError (caller must rescale).
Tensor exp_kernel_forward(const Tensor& x, const QkvWeights& w, double k);
// Variant normalizing each row by its own sum of exp(QK^T): identical to
// softmax attention up to roundoff.
Tensor exp_kernel_forward_rowwise(const Tensor& x, const QkvWeights& w);
QkvGrads exp_kernel_backward(const Tensor& dy, const Tensor& x, const QkvWeights& w, double k);

// Quadratic-cost truncation: (1/k) (I + A + A^2/2! + A^3/3!) V with
// A = X Wqk X^T, materialized as an N x N matrix. Factorials are kept in
// every order so the linear form can be checked against it exactly.
Tensor taylor_attention_reference(const Tensor& x, const QkvWeights& w, TaylorOrder order, double k);
QkvGrads taylor_attention_reference_backward(const Tensor& dy, const Tensor& x, const QkvWeights& w,
                                             TaylorOrder order, double k);

// The same truncation rearranged through G = X^T X so no N x N matrix is
// ever formed; Theta(N d^2) cost.
Tensor taylor_attention_linear(const Tensor& x, const QkvWeights& w, TaylorOrder order, double k);
QkvGrads taylor_attention_linear_backward(const Tensor& dy, const Tensor& x, const QkvWeights& w,
                                          TaylorOrder order, double k);

// Order-2 form evaluated through the eigendecomposition G = Z B Z^T,
// following the derivation literally (no 1/2! on the quadratic term).
// Validation-only: not differentiable through the eigensolver.
Tensor diagonalized_form(const Tensor& x, const QkvWeights& w, double k);

// Learnable replacement for one eigenvalue path: mean-pool positions,
// reduce to ceil(d/4) channels, ReLU, restore to d diagonal values.
class EigenExtractor {
 public:
  EigenExtractor() = default;
  EigenExtractor(int d, Rng& rng);

  Tensor forward(const Tensor& x_nd);                    // (N x d) -> (d)
  Tensor backward(const Tensor& db);                     // (d) -> dX (N x d)
  void visit_params(const std::string& prefix, const ParamVisitor& fn);
  std::int64_t param_count() const;

  Param m1;  // (d x q)
  Param m2;  // (q x d)

 private:
  struct Cache {
    Tensor pooled, h, r;
    int n = 0;
  } cache_;
};

Tensor extract_eigens(const Tensor& x_nd, EigenExtractor& e);

// One learnable Taylor-attention unit: value projection with optional
// depthwise 3x3 compensation, factorized W blocks sharing inner width
// ceil(d/4), one eigen extractor per expansion order, and a learnable
// normalizer stored as log k.
class SteaUnit {
 public:
  SteaUnit() = default;
  SteaUnit(int channels, int order, bool use_dwc, Rng& rng, double k_init = 256.0);

  Tensor forward(const Tensor& x_chw);   // (d, H, W) -> (d, H, W)
  Tensor backward(const Tensor& dy_chw);
  void visit_params(const std::string& prefix, const ParamVisitor& fn);
  std::int64_t param_count() const;

  int channels() const { return channels_; }
  int order() const { return order_; }
  bool uses_dwc() const { return use_dwc_; }
  double k() const;

  struct FactorizedBlock {
    Param a;  // (d x q)
    Param b;  // (q x d)
  };

  Param w_v;                             // (d x d)
  std::vector<FactorizedBlock> blocks;   // order+1 blocks: entry, mids, exit
  std::vector<EigenExtractor> extractors;  // one per order
  Param log_k;                           // scalar, k = exp(log_k) > 0
  Param dwc_kernel;                      // (d, 3, 3) when use_dwc

 private:
  int channels_ = 0;
  int order_ = 2;
  bool use_dwc_ = true;

  struct Cache {
    int h = 0, w = 0;
    Tensor x_nd, xv, xv_chw, value_flat, out_chw;
    std::vector<Tensor> b_vec;          // extractor outputs
    std::vector<Tensor> stage_in, stage_u, stage_v, stage_p;  // per order stage
    std::vector<Tensor> term_t;         // P_j * w3.a
  } cache_;
};

Tensor stea_forward(const Tensor& x_chw, SteaUnit& unit);

// Flatten (C,H,W) to positions-by-channels (N x C) and back.
Tensor chw_to_nd(const Tensor& x_chw);
Tensor nd_to_chw(const Tensor& x_nd, int h, int w);

}  // namespace ta
