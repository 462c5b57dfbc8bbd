#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

#include "procflow/params.hpp"

namespace procflow {

struct OptimizerConfig {
  double initial_lr = 5.0e-5;
  double weight_decay = 1.0e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct SchedulerConfig {
  std::size_t warmup_steps = 500;  // S_w
  std::size_t decay_steps = 4500;  // S_d
  double floor_lr = 0.0;

  std::size_t total_steps() const { return warmup_steps + decay_steps; }
};

// Linear warmup to the initial rate over S_w steps, cosine annealing to the
// floor over the next S_d steps, floor afterwards.
inline double lr_at(std::size_t step, const OptimizerConfig& opt, const SchedulerConfig& sched) {
  if (step < sched.warmup_steps) {
    return opt.initial_lr * static_cast<double>(step) / static_cast<double>(sched.warmup_steps);
  }
  const std::size_t into = step - sched.warmup_steps;
  if (into <= sched.decay_steps) {
    const double t = static_cast<double>(into) / static_cast<double>(sched.decay_steps);
    return sched.floor_lr +
           (opt.initial_lr - sched.floor_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  }
  return sched.floor_lr;
}

// AdamW: Adam moments with bias correction, weight decay applied directly to
// the parameters rather than folded into the gradient.
class AdamW {
public:
  explicit AdamW(OptimizerConfig config = {}) : config_(config) {}

  const OptimizerConfig& config() const { return config_; }

  void step(ParamStore& params, double lr) {
    if (!params.grads_finite()) {
      throw std::runtime_error("non-finite gradient; optimization step aborted");
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
    for (auto& [name, e] : params.entries()) {
      Moments& mom = moments_[name];
      if (mom.m.size() != e.value.size()) {
        mom.m = Mat(e.value.rows, e.value.cols);
        mom.v = Mat(e.value.rows, e.value.cols);
      }
      for (std::size_t i = 0; i < e.value.size(); ++i) {
        const double g = e.grad.data[i];
        mom.m.data[i] = config_.beta1 * mom.m.data[i] + (1.0 - config_.beta1) * g;
        mom.v.data[i] = config_.beta2 * mom.v.data[i] + (1.0 - config_.beta2) * g * g;
        const double m_hat = mom.m.data[i] / bc1;
        const double v_hat = mom.v.data[i] / bc2;
        e.value.data[i] -= lr * (m_hat / (std::sqrt(v_hat) + config_.epsilon) +
                                 config_.weight_decay * e.value.data[i]);
      }
    }
  }

  void reset() {
    moments_.clear();
    step_count_ = 0;
  }

private:
  struct Moments {
    Mat m, v;
  };
  OptimizerConfig config_;
  std::map<std::string, Moments> moments_;
  std::size_t step_count_ = 0;
};

}  // namespace procflow
