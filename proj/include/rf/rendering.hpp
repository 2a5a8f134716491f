#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "rf/common.hpp"
#include "rf/decoder.hpp"
#include "rf/geometry.hpp"
#include "rf/parallel.hpp"
#include "rf/planes.hpp"
#include "rf/rng.hpp"

namespace rf {

struct CompositeResult {
  double color[3] = {0.0, 0.0, 0.0};  // before background compositing
  std::vector<double> transmittance;  // T_i, starts at 1, nonincreasing
  std::vector<double> weight;         // w_i = T_i (1 - exp(-sigma_i delta_i))
  double opacity = 0.0;               // sum of weights
};

// Quadrature compositing: C = sum_i T_i (1 - exp(-sigma_i delta_i)) c_i with
// T_i the running product of exp(-sigma_j delta_j), j < i.
inline CompositeResult composite(const std::vector<double>& sigma, const std::vector<double>& rgb,
                                 const std::vector<double>& delta) {
  const std::size_t n = sigma.size();
  require(n >= 1 && rgb.size() == 3 * n && delta.size() == n,
          "composite: need matching sigma/rgb/delta lengths");
  CompositeResult r;
  r.transmittance.resize(n);
  r.weight.resize(n);
  double transmittance = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    require(sigma[i] >= 0.0, "composite: sigma must be nonnegative");
    require(delta[i] > 0.0, "composite: delta must be positive");
    r.transmittance[i] = transmittance;
    double att = std::exp(-sigma[i] * delta[i]);
    double w = transmittance * (1.0 - att);
    r.weight[i] = w;
    for (int ch = 0; ch < 3; ++ch) r.color[ch] += w * rgb[3 * i + ch];
    r.opacity += w;
    transmittance *= att;
  }
  return r;
}

// Backward of composite. d_color is the upstream gradient on the composed
// color and d_opacity on the opacity (0 when unused); writes gradients for
// every sigma and rgb entry.
inline void composite_backward(const std::vector<double>& sigma, const std::vector<double>& rgb,
                               const std::vector<double>& delta, const CompositeResult& fwd,
                               const double* d_color, double d_opacity, std::vector<double>& d_sigma,
                               std::vector<double>& d_rgb) {
  const std::size_t n = sigma.size();
  d_sigma.assign(n, 0.0);
  d_rgb.assign(3 * n, 0.0);
  // suffix[i] = sum_{j >= i} w_j (u . c_j + d_opacity); built back to front.
  double suffix = 0.0;
  std::vector<double> contrib(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dot = d_opacity;
    for (int ch = 0; ch < 3; ++ch) {
      d_rgb[3 * i + ch] = fwd.weight[i] * d_color[ch];
      dot += d_color[ch] * rgb[3 * i + ch];
    }
    contrib[i] = fwd.weight[i] * dot;
  }
  for (std::size_t i = n; i-- > 0;) {
    double att = std::exp(-sigma[i] * delta[i]);
    double dot = d_opacity;
    for (int ch = 0; ch < 3; ++ch) dot += d_color[ch] * rgb[3 * i + ch];
    // dC/dsigma_i = delta_i (T_i e_i (u.c_i + u_op) - sum_{j>i} contrib_j)
    d_sigma[i] = delta[i] * (fwd.transmittance[i] * att * dot - suffix);
    suffix += contrib[i];
  }
}

struct SamplingConfig {
  double near = 2.0;
  double far = 6.0;
  int count = 64;
  bool stratified = false;
};

struct Rgb {
  double r = 0.0, g = 0.0, b = 0.0;
  double operator[](int i) const { return (&r)[i]; }
  double& operator[](int i) { return (&r)[i]; }
};

// Full decode of one sample position against the plane set.
inline void field_at(const PlaneSet& planes, const FieldDecoder& dec, const Vec3& q,
                     const double* d_enc, const double* e, MlpTape& sigma_tape,
                     MlpTape& color_tape, double* sigma_out, double* rgb_out) {
  const int c = planes.c;
  Vec3 qg = normalize_point(q, planes.aabb, planes.n);
  std::vector<double> feat(std::size_t(4) * c);
  double* f_xy = feat.data();
  double* f_xz = feat.data() + c;
  double* f_yz = feat.data() + 2 * c;
  double* f = feat.data() + 3 * c;
  for (PlaneId h : kPlaneIds) {
    Point2 p = project(qg, h);
    bilerp(planes.grid(h), planes.n, c, p.a, p.b, feat.data() + static_cast<int>(h) * c);
  }
  aggregate(f_xy, f_xz, f_yz, c, f);
  DensityResult dres = decode_density(dec, f, sigma_tape);
  ColorResult cres = decode_color(dec, dres.f_hat, d_enc, e, color_tape);
  *sigma_out = dres.sigma;
  for (int ch = 0; ch < 3; ++ch) rgb_out[ch] = cres.rgb[ch];
}

// Renders one ray from the plane representation: normalize -> project ->
// bilerp x3 -> aggregate -> decode -> composite, then background fill.
inline Rgb render_pixel(const PlaneSet& planes, const FieldDecoder& dec, const Ray& ray,
                        const RaySamples& samples, const double* appearance_embedding,
                        const Rgb& background) {
  const std::size_t n = samples.t.size();
  std::vector<double> sigma(n), rgb(3 * n);
  std::vector<double> d_enc = positional_encoding(ray.direction, dec.cfg.posenc_l);
  MlpTape sigma_tape, color_tape;
  for (std::size_t i = 0; i < n; ++i)
    field_at(planes, dec, samples.q[i], d_enc.data(), appearance_embedding, sigma_tape, color_tape,
             &sigma[i], &rgb[3 * i]);
  CompositeResult comp = composite(sigma, rgb, samples.delta);
  Rgb out;
  for (int ch = 0; ch < 3; ++ch)
    out[ch] = comp.color[ch] + (1.0 - comp.opacity) * background[ch];
  return out;
}

// Density/color field given as callables; used for analytic ground truth and
// quadrature cross-checks.
struct AnalyticField {
  std::function<double(const Vec3&)> sigma;
  std::function<Rgb(const Vec3&)> color;
};

inline Rgb render_pixel_field(const AnalyticField& field, const Ray& ray,
                              const RaySamples& samples, const Rgb& background) {
  const std::size_t n = samples.t.size();
  std::vector<double> sigma(n), rgb(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    sigma[i] = field.sigma(samples.q[i]);
    Rgb c = field.color(samples.q[i]);
    for (int ch = 0; ch < 3; ++ch) rgb[3 * i + ch] = c[ch];
  }
  CompositeResult comp = composite(sigma, rgb, samples.delta);
  Rgb out;
  for (int ch = 0; ch < 3; ++ch)
    out[ch] = comp.color[ch] + (1.0 - comp.opacity) * background[ch];
  return out;
}

struct Image;  // defined in rf/image.hpp

// Renders a full image row-parallel. Stratified jitter draws from a per-pixel
// stream derived from (seed, row, col), so tiling and worker count do not
// affect the output.
template <typename ImageT>
ImageT render_image_t(const PlaneSet& planes, const FieldDecoder& dec, const Camera& cam,
                      const double* appearance_embedding, const Rgb& background,
                      const SamplingConfig& sampling, std::uint64_t seed, int workers) {
  ImageT img(cam.width, cam.height);
  parallel_chunks(static_cast<std::size_t>(cam.height), workers,
                  [&](int, std::size_t row_begin, std::size_t row_end) {
                    for (std::size_t row = row_begin; row < row_end; ++row) {
                      for (int col = 0; col < cam.width; ++col) {
                        Ray ray = ray_through_pixel(cam, static_cast<int>(row), col);
                        Rng pixel_rng(derive_seed(seed, row, static_cast<std::uint64_t>(col)));
                        RaySamples s = sample_along_ray(ray, sampling.near, sampling.far,
                                                        sampling.count, sampling.stratified,
                                                        pixel_rng);
                        Rgb c = render_pixel(planes, dec, ray, s, appearance_embedding, background);
                        for (int ch = 0; ch < 3; ++ch) img.at(static_cast<int>(row), col, ch) = c[ch];
                      }
                    }
                  });
  return img;
}

}  // namespace rf
