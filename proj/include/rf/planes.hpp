#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "rf/common.hpp"
#include "rf/geometry.hpp"
#include "rf/rng.hpp"

namespace rf {

enum class PlaneId : int { xy = 0, xz = 1, yz = 2 };

constexpr std::array<PlaneId, 3> kPlaneIds{PlaneId::xy, PlaneId::xz, PlaneId::yz};

inline const char* plane_name(PlaneId h) {
  switch (h) {
    case PlaneId::xy: return "xy";
    case PlaneId::xz: return "xz";
    case PlaneId::yz: return "yz";
  }
  throw std::invalid_argument("plane id out of range");
}

struct Aabb {
  Vec3 min;
  Vec3 max;
};

// Three axis-aligned feature grids of shape n x n x c, plus the world-space
// box they span. Grid entry (i, j, ch) of plane h lives at
// grids[h][(i * n + j) * c + ch], where (i, j) are the two coordinates kept
// by the projection for h.
struct PlaneSet {
  int n = 0;
  int c = 0;
  Aabb aabb;
  std::array<std::vector<double>, 3> grids;

  PlaneSet() = default;
  PlaneSet(int n_, int c_, const Aabb& box) : n(n_), c(c_), aabb(box) {
    require(n >= 2 && c >= 1, "planes: need n >= 2 and c >= 1");
    require(aabb.min.x < aabb.max.x && aabb.min.y < aabb.max.y && aabb.min.z < aabb.max.z,
            "planes: aabb.min must be strictly below aabb.max");
    for (auto& g : grids) g.assign(static_cast<std::size_t>(n) * n * c, 0.0);
  }

  static PlaneSet gaussian(int n, int c, const Aabb& box, Rng& rng, double scale = 1.0) {
    PlaneSet p(n, c, box);
    for (auto& g : p.grids)
      for (double& v : g) v = scale * rng.normal();
    return p;
  }

  std::size_t grid_size() const { return static_cast<std::size_t>(n) * n * c; }

  const std::vector<double>& grid(PlaneId h) const { return grids[static_cast<int>(h)]; }
  std::vector<double>& grid(PlaneId h) { return grids[static_cast<int>(h)]; }
};

// Gradient accumulator shaped like a PlaneSet.
struct PlaneGradients {
  int n = 0;
  int c = 0;
  std::array<std::vector<double>, 3> grids;

  PlaneGradients() = default;
  explicit PlaneGradients(const PlaneSet& p) : n(p.n), c(p.c) {
    for (auto& g : grids) g.assign(p.grid_size(), 0.0);
  }

  void zero() {
    for (auto& g : grids) std::fill(g.begin(), g.end(), 0.0);
  }

  void add(const PlaneGradients& other) {
    for (int h = 0; h < 3; ++h) {
      const auto& src = other.grids[h];
      auto& dst = grids[h];
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
};

// Affine map sending aabb.min -> 0 and aabb.max -> n-1 per component,
// clamped to [0, n-1] so out-of-box points read border cells.
inline Vec3 normalize_point(const Vec3& q, const Aabb& box, int n) {
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    double s = (q[a] - box.min[a]) / (box.max[a] - box.min[a]);
    out[a] = std::clamp(s * (n - 1), 0.0, static_cast<double>(n - 1));
  }
  return out;
}

struct Point2 {
  double a = 0.0;
  double b = 0.0;
};

// Drops the coordinate absent from plane h.
inline Point2 project(const Vec3& q_grid, PlaneId h) {
  switch (h) {
    case PlaneId::xy: return {q_grid.x, q_grid.y};
    case PlaneId::xz: return {q_grid.x, q_grid.z};
    case PlaneId::yz: return {q_grid.y, q_grid.z};
  }
  throw std::invalid_argument("project: invalid plane id");
}

// Corner cell and blend weights for bilinear interpolation at p = (a, b).
// The base cell is clamped to n-2 so p = n-1 lands on the last node with
// fractional weight 1.
struct BilerpCell {
  int i0 = 0, j0 = 0;
  double fa = 0.0, fb = 0.0;
  double w00 = 0.0, w01 = 0.0, w10 = 0.0, w11 = 0.0;
};

inline BilerpCell bilerp_cell(double a, double b, int n) {
  require(a >= 0.0 && a <= n - 1 && b >= 0.0 && b <= n - 1,
          "bilerp: point outside [0, n-1]^2");
  BilerpCell cell;
  cell.i0 = std::min(static_cast<int>(a), n - 2);
  cell.j0 = std::min(static_cast<int>(b), n - 2);
  cell.fa = a - cell.i0;
  cell.fb = b - cell.j0;
  cell.w00 = (1.0 - cell.fa) * (1.0 - cell.fb);
  cell.w01 = (1.0 - cell.fa) * cell.fb;
  cell.w10 = cell.fa * (1.0 - cell.fb);
  cell.w11 = cell.fa * cell.fb;
  return cell;
}

// out[ch] = bilinear blend of the four enclosing cells, per channel.
inline void bilerp(const std::vector<double>& plane, int n, int c, double a, double b,
                   double* out) {
  BilerpCell cell = bilerp_cell(a, b, n);
  const double* p00 = &plane[(static_cast<std::size_t>(cell.i0) * n + cell.j0) * c];
  const double* p01 = p00 + c;
  const double* p10 = p00 + static_cast<std::size_t>(n) * c;
  const double* p11 = p10 + c;
  for (int ch = 0; ch < c; ++ch)
    out[ch] = cell.w00 * p00[ch] + cell.w01 * p01[ch] + cell.w10 * p10[ch] + cell.w11 * p11[ch];
}

// Distributes `upstream` onto the four corner cells of `grad` and returns the
// analytic spatial gradient (d out . upstream) / d (a, b).
inline Point2 bilerp_backward(const std::vector<double>& plane, int n, int c, double a, double b,
                              const double* upstream, std::vector<double>& grad) {
  BilerpCell cell = bilerp_cell(a, b, n);
  std::size_t base = (static_cast<std::size_t>(cell.i0) * n + cell.j0) * c;
  const std::size_t stride = static_cast<std::size_t>(n) * c;
  const double* p00 = &plane[base];
  double da = 0.0, db = 0.0;
  for (int ch = 0; ch < c; ++ch) {
    double u = upstream[ch];
    grad[base + ch] += cell.w00 * u;
    grad[base + c + ch] += cell.w01 * u;
    grad[base + stride + ch] += cell.w10 * u;
    grad[base + stride + c + ch] += cell.w11 * u;
    double v00 = p00[ch], v01 = p00[c + ch], v10 = p00[stride + ch], v11 = p00[stride + c + ch];
    da += u * ((1.0 - cell.fb) * (v10 - v00) + cell.fb * (v11 - v01));
    db += u * ((1.0 - cell.fa) * (v01 - v00) + cell.fa * (v11 - v10));
  }
  return {da, db};
}

// Hadamard aggregation f = f_xy . f_xz . f_yz (elementwise).
inline void aggregate(const double* f_xy, const double* f_xz, const double* f_yz, int c,
                      double* out) {
  for (int ch = 0; ch < c; ++ch) out[ch] = f_xy[ch] * f_xz[ch] * f_yz[ch];
}

// d out / d f_h = upstream . (product of the other two).
inline void aggregate_backward(const double* f_xy, const double* f_xz, const double* f_yz, int c,
                               const double* upstream, double* d_xy, double* d_xz, double* d_yz) {
  for (int ch = 0; ch < c; ++ch) {
    double u = upstream[ch];
    d_xy[ch] = u * f_xz[ch] * f_yz[ch];
    d_xz[ch] = u * f_xy[ch] * f_yz[ch];
    d_yz[ch] = u * f_xy[ch] * f_xz[ch];
  }
}

// Squared-difference total variation of one plane, normalized by 1/(c n^2).
inline double tv_loss_plane(const std::vector<double>& plane, int n, int c) {
  double acc = 0.0;
  const std::size_t stride = static_cast<std::size_t>(n) * c;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double* cur = &plane[(static_cast<std::size_t>(i) * n + j) * c];
      for (int ch = 0; ch < c; ++ch) {
        if (i >= 1) {
          double d = cur[ch] - cur[ch - stride];
          acc += d * d;
        }
        if (j >= 1) {
          double d = cur[ch] - cur[ch - c];
          acc += d * d;
        }
      }
    }
  }
  return acc / (static_cast<double>(c) * n * n);
}

// Mean of the per-plane TV losses.
inline double tv_loss(const PlaneSet& planes) {
  double acc = 0.0;
  for (const auto& g : planes.grids) acc += tv_loss_plane(g, planes.n, planes.c);
  return acc / 3.0;
}

// Accumulates weight * d tv_loss / d planes into grads.
inline void tv_backward(const PlaneSet& planes, double weight, PlaneGradients& grads) {
  const int n = planes.n, c = planes.c;
  const double scale = 2.0 * weight / (3.0 * static_cast<double>(c) * n * n);
  const std::size_t stride = static_cast<std::size_t>(n) * c;
  for (int h = 0; h < 3; ++h) {
    const auto& plane = planes.grids[h];
    auto& grad = grads.grids[h];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        std::size_t idx = (static_cast<std::size_t>(i) * n + j) * c;
        for (int ch = 0; ch < c; ++ch) {
          if (i >= 1) {
            double d = scale * (plane[idx + ch] - plane[idx + ch - stride]);
            grad[idx + ch] += d;
            grad[idx + ch - stride] -= d;
          }
          if (j >= 1) {
            double d = scale * (plane[idx + ch] - plane[idx + ch - c]);
            grad[idx + ch] += d;
            grad[idx + ch - c] -= d;
          }
        }
      }
    }
  }
}

}  // namespace rf
