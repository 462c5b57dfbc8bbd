#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>

#include "procflow/params.hpp"

namespace procflow {

// Analytic-vs-numeric gradient comparison. loss_fn must return the scalar
// loss; when compute_grad is true it must also accumulate gradients into the
// store (which the harness zeroes beforehand).
using LossFn = std::function<double(ParamStore&, bool compute_grad)>;

struct GradCheckReport {
  std::map<std::string, double> max_relative_error;  // per parameter block
  double worst = 0.0;
  std::string worst_block;

  bool within(double tolerance) const { return worst <= tolerance; }
};

inline GradCheckReport finite_difference_check(const LossFn& loss_fn, ParamStore& params,
                                               double step_size = 1e-5) {
  params.zero_grad();
  const double base = loss_fn(params, true);
  if (!std::isfinite(base)) throw std::runtime_error("non-finite loss in gradient check");

  // Snapshot analytic gradients before the probing evaluations overwrite them.
  std::map<std::string, Mat> analytic;
  for (const auto& [name, e] : params.entries()) analytic[name] = e.grad;

  GradCheckReport report;
  for (auto& [name, e] : params.entries()) {
    double block_worst = 0.0;
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double saved = e.value.data[i];
      e.value.data[i] = saved + step_size;
      const double up = loss_fn(params, false);
      e.value.data[i] = saved - step_size;
      const double down = loss_fn(params, false);
      e.value.data[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw std::runtime_error("non-finite loss while probing " + name);
      }
      const double numeric = (up - down) / (2.0 * step_size);
      const double a = analytic[name].data[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
      block_worst = std::max(block_worst, rel);
    }
    report.max_relative_error[name] = block_worst;
    if (block_worst >= report.worst) {
      report.worst = block_worst;
      report.worst_block = name;
    }
  }
  return report;
}

}  // namespace procflow
