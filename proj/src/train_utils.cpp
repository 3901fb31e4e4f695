#include "ta/train_utils.hpp"

#include <cmath>

#include "ta/errors.hpp"

namespace ta {

double l1_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw ShapeError("l1_loss: shape mismatch " + pred.shape_str() + " vs " + target.shape_str());
  }
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

Tensor l1_loss_backward(const Tensor& pred, const Tensor& target, double weight) {
  Tensor d(pred.shape());
  const double w = weight / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred[i] - target[i];
    d[i] = diff > 0.0 ? w : (diff < 0.0 ? -w : 0.0);
  }
  return d;
}

double scheduled_lr(const AdamConfig& cfg, int t) {
  const int halvings = (t - 1) / cfg.halve_every;
  return cfg.lr * std::pow(2.0, -halvings);
}

Adam::Adam(std::vector<Param*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Param* p : params_) {
    m_.emplace_back(Tensor::zeros(p->value.shape()));
    v_.emplace_back(Tensor::zeros(p->value.shape()));
  }
}

void Adam::step(int t) {
  const double lr = scheduled_lr(cfg_, t);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    for (std::size_t c = 0; c < p.size(); ++c) {
      const double g = p.grad[c];
      m_[i][c] = cfg_.beta1 * m_[i][c] + (1.0 - cfg_.beta1) * g;
      v_[i][c] = cfg_.beta2 * v_[i][c] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[i][c] / bc1;
      const double vhat = v_[i][c] / bc2;
      p.value[c] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace ta
