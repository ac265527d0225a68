#include "calico/gradcheck.hpp"

#include <cmath>

namespace calico {

GradCheckReport grad_check(const std::function<Tensor(ParamSet&)>& objective,
                           ParamSet& params, double step, double rel_tol) {
  if (!(step > 0.0) || step > 1e-2) {
    throw ConfigError(msg("grad_check: step ", step, " outside (0, 1e-2]"));
  }
  GradCheckReport report;
  report.rel_tol = rel_tol;

  params.zero_grad();
  Tensor loss = objective(params);
  double base = loss.value();
  if (!std::isfinite(base)) throw EvalError("grad_check: non-finite objective");
  loss.backward();

  // Snapshot analytic grads before finite differencing perturbs anything.
  std::vector<std::vector<double>> analytic(params.size());
  for (size_t pi = 0; pi < params.size(); ++pi) {
    const Parameter& p = params.items()[pi];
    if (!p.trainable) continue;
    analytic[pi] = p.tensor.has_grad()
                       ? p.tensor.grad()
                       : std::vector<double>(static_cast<size_t>(p.tensor.numel()), 0.0);
  }

  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = params.items()[pi];
    if (!p.trainable) continue;
    std::vector<double>& values = p.tensor.mutable_data();
    for (size_t i = 0; i < values.size(); ++i) {
      double saved = values[i];
      values[i] = saved + step;
      double f_plus = objective(params).value();
      values[i] = saved - step;
      double f_minus = objective(params).value();
      values[i] = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
        throw EvalError(msg("grad_check: non-finite objective near ", p.name, "[", i, "]"));
      }
      double numeric = (f_plus - f_minus) / (2.0 * step);
      double a = analytic[pi][i];
      double rel = std::fabs(a - numeric) /
                   std::max({std::fabs(a), std::fabs(numeric), 1e-4});
      ++report.checked_elements;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p.name;
        report.worst_index = static_cast<int64_t>(i);
      }
      if (rel > rel_tol) {
        report.failures.push_back(GradCheckIssue{p.name, static_cast<int64_t>(i),
                                                 a, numeric, rel});
      }
    }
  }
  report.pass = report.max_rel_err <= rel_tol;
  return report;
}

}  // namespace calico
