#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "rf/common.hpp"

namespace rf {

struct AdamState {
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over a flat parameter array.
inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state, double lr, const AdamHyper& hyper = {}) {
  require(params.size() == grads.size() && params.size() == state.m.size(),
          "adam_step: parameter/gradient/state shape mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    double m_hat = state.m[i] / bc1;
    double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

// Linear ramp to base_lr over `warmup` steps, then cosine decay to 0 at
// `total` steps, clamped at 0 afterward.
inline double warmup_cosine_lr(std::int64_t step, double base_lr, std::int64_t warmup,
                               std::int64_t total) {
  if (step < 0) return 0.0;
  if (warmup > 0 && step < warmup) return base_lr * static_cast<double>(step) / warmup;
  if (step >= total) return 0.0;
  double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return base_lr * 0.5 * (1.0 + std::cos(3.141592653589793238462643 * progress));
}

// Adam over several named parameter groups sharing a schedule multiplier but
// each with its own base learning rate.
class Adam {
 public:
  struct Slot {
    std::vector<double>* params;
    const std::vector<double>* grads;
    double base_lr;
    AdamState state;
  };

  void attach(std::vector<double>* params, const std::vector<double>* grads, double base_lr) {
    slots_.push_back({params, grads, base_lr, AdamState(params->size())});
  }

  // lr_scale in [0, 1] multiplies every group's base rate.
  void step(double lr_scale, const AdamHyper& hyper = {}) {
    for (Slot& s : slots_) adam_step(*s.params, *s.grads, s.state, s.base_lr * lr_scale, hyper);
  }

  const std::vector<Slot>& slots() const { return slots_; }
  std::vector<Slot>& slots() { return slots_; }

 private:
  std::vector<Slot> slots_;
};

}  // namespace rf
