#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ta/param.hpp"

namespace ta {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_coord = -1;
  std::size_t coords_checked = 0;
};

// Central finite-difference verification of analytic gradients.
//
// f(true) must zero nothing itself: grad_check resets the grads, then the
// call runs forward + backward and returns the scalar loss, leaving the
// analytic gradient accumulated in each param. f(false) runs forward only.
// f must be deterministic; two baseline evaluations that disagree raise
// NumericError.
//
// Relative error per coordinate is |analytic - numeric| / max(1, |numeric|),
// and the maximum over all coordinates is returned.
GradCheckReport grad_check(const std::function<double(bool)>& f,
                           const std::vector<Param*>& params, double epsilon = 1e-6);

}  // namespace ta
