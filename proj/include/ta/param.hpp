#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ta/tensor.hpp"

namespace ta {

// A learnable tensor plus its accumulated gradient. grad always has the
// value's shape and is all-zero right after reset_grad().
struct Param {
  Tensor value;
  Tensor grad;
  std::string name;

  Param() = default;
  explicit Param(Tensor v, std::string n = "")
      : value(std::move(v)), grad(Tensor::zeros(value.shape())), name(std::move(n)) {}

  void reset_grad() { grad.fill(0.0); }
  std::size_t size() const { return value.size(); }
};

// Walk a module's parameters in a fixed order. The visitor receives the
// fully qualified name (prefix + local name) and the parameter itself.
using ParamVisitor = std::function<void(const std::string&, Param&)>;

inline void collect_params(const std::function<void(const ParamVisitor&)>& visit,
                           std::vector<Param*>& out) {
  visit([&out](const std::string&, Param& p) { out.push_back(&p); });
}

template <typename Module>
std::vector<Param*> params_of(Module& m) {
  std::vector<Param*> out;
  m.visit_params("", [&out](const std::string& name, Param& p) {
    p.name = name;
    out.push_back(&p);
  });
  return out;
}

template <typename Module>
std::int64_t count_params(Module& m) {
  std::int64_t n = 0;
  m.visit_params("", [&n](const std::string&, Param& p) {
    n += static_cast<std::int64_t>(p.size());
  });
  return n;
}

template <typename Module>
void reset_grads(Module& m) {
  m.visit_params("", [](const std::string&, Param& p) { p.reset_grad(); });
}

}  // namespace ta
