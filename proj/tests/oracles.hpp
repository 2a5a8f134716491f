#pragma once

// Test-only reference implementations and gradient-check helpers. These stay
// independent of the library code paths they validate.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Central finite difference of `loss` with respect to *x.
inline double central_diff(const std::function<double()>& loss, double* x, double h = 1e-4) {
  double saved = *x;
  *x = saved + h;
  double up = loss();
  *x = saved - h;
  double down = loss();
  *x = saved;
  return (up - down) / (2.0 * h);
}

// rel_err(a, f) with a conservative denominator so near-zero gradients do not
// blow up the ratio.
inline double rel_err(double analytic, double fd) {
  double denom = std::max(1.0, std::abs(analytic) + std::abs(fd));
  return std::abs(analytic - fd) / denom;
}

// Max relative error between an analytic gradient vector and finite
// differences over every entry of `params`.
inline double max_grad_err(const std::function<double()>& loss, std::vector<double>& params,
                           const std::vector<double>& analytic, double h = 1e-4) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double fd = central_diff(loss, &params[i], h);
    worst = std::max(worst, rel_err(analytic[i], fd));
  }
  return worst;
}

// Direct double-loop implementation of the squared-difference total
// variation with 1/(c n^2) normalization; plane layout (i * n + j) * c + ch.
inline double tv_double_loop(const std::vector<double>& plane, int n, int c) {
  double acc = 0.0;
  auto at = [&](int i, int j, int ch) { return plane[(std::size_t(i) * n + j) * c + ch]; };
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double d = at(i, j, ch) - at(i - 1, j, ch);
        acc += d * d;
      }
    for (int i = 0; i < n; ++i)
      for (int j = 1; j < n; ++j) {
        double d = at(i, j, ch) - at(i, j - 1, ch);
        acc += d * d;
      }
  }
  return acc / (double(c) * n * n);
}

}  // namespace oracle
