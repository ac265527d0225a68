#pragma once

#include <functional>
#include <string>
#include <vector>

#include "calico/params.hpp"

namespace calico {

struct GradCheckIssue {
  std::string param;
  int64_t index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  bool pass = false;
  double max_rel_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  int64_t checked_elements = 0;
  double rel_tol = 0.0;
  std::vector<GradCheckIssue> failures;  // entries exceeding rel_tol
};

// Central finite differences against reverse-mode gradients, every element of
// every trainable parameter. `objective` must rebuild the graph each call and
// return the scalar loss tensor; it must be deterministic.
GradCheckReport grad_check(const std::function<Tensor(ParamSet&)>& objective,
                           ParamSet& params, double step = 1e-5,
                           double rel_tol = 1e-4);

}  // namespace calico
