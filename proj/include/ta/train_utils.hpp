#pragma once

#include <vector>

#include "ta/param.hpp"
#include "ta/tensor.hpp"

namespace ta {

// Mean absolute error; the subgradient at exact ties is 0.
double l1_loss(const Tensor& pred, const Tensor& target);
// d(l1)/d(pred), scaled by `weight`.
Tensor l1_loss_backward(const Tensor& pred, const Tensor& target, double weight = 1.0);

struct AdamConfig {
  double lr = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  int halve_every = 500;  // lr * 2^(-floor((t-1)/halve_every))
};

// Learning rate for 1-based step t under the halving schedule.
double scheduled_lr(const AdamConfig& cfg, int t);

// Standard bias-corrected Adam over a fixed parameter list. State slots are
// bound to the list order, so the list must not change between steps.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Param*> params, AdamConfig cfg);

  // Applies one update from the accumulated gradients; t is 1-based.
  void step(int t);
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Param*> params_;
  std::vector<Tensor> m_, v_;
  AdamConfig cfg_;
};

}  // namespace ta
