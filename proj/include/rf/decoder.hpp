#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "rf/common.hpp"
#include "rf/geometry.hpp"
#include "rf/mlp.hpp"
#include "rf/rng.hpp"

namespace rf {

// Per-image learned appearance vectors, row i for training image i.
struct AppearanceTable {
  int dim = 0;
  int rows = 0;
  std::vector<double> e;  // rows x dim

  AppearanceTable() = default;
  AppearanceTable(int rows_, int dim_) : dim(dim_), rows(rows_), e(std::size_t(rows_) * dim_, 0.0) {}

  const double* row(int i) const { return &e[std::size_t(i) * dim]; }
  double* row(int i) { return &e[std::size_t(i) * dim]; }
};

struct FieldDecoderConfig {
  int channels = 32;       // width of the aggregated plane feature
  int hidden = 64;
  int hidden_layers = 2;
  int m_feat = 15;         // width of the pass-through feature f_hat
  int posenc_l = 4;        // positional-encoding order L
  int appearance_dim = 0;  // 0 disables appearance input
};

// The two small decoding networks: g_sigma maps plane features to density
// plus extra features, g_rgb maps those features (with encoded view
// direction and optional appearance vector) to color.
struct FieldDecoder {
  FieldDecoderConfig cfg;
  Mlp g_sigma;
  Mlp g_rgb;
  std::optional<AppearanceTable> appearance;

  FieldDecoder() = default;
  FieldDecoder(const FieldDecoderConfig& c, Rng& rng) : cfg(c) {
    std::vector<int> sdims{cfg.channels};
    for (int i = 0; i < cfg.hidden_layers; ++i) sdims.push_back(cfg.hidden);
    sdims.push_back(1 + cfg.m_feat);
    g_sigma = Mlp(sdims, rng);

    std::vector<int> cdims{color_in_dim()};
    for (int i = 0; i < cfg.hidden_layers; ++i) cdims.push_back(cfg.hidden);
    cdims.push_back(3);
    g_rgb = Mlp(cdims, rng);
  }

  int color_in_dim() const { return cfg.m_feat + 6 * cfg.posenc_l + cfg.appearance_dim; }

  void enable_appearance(int n_images) {
    require(cfg.appearance_dim > 0, "decoder: appearance_dim must be positive");
    appearance.emplace(n_images, cfg.appearance_dim);
  }
};

struct DecoderGrads {
  MlpGrads g_sigma;
  MlpGrads g_rgb;
  std::vector<double> appearance;  // same layout as AppearanceTable::e

  DecoderGrads() = default;
  explicit DecoderGrads(const FieldDecoder& dec) : g_sigma(dec.g_sigma), g_rgb(dec.g_rgb) {
    if (dec.appearance) appearance.assign(dec.appearance->e.size(), 0.0);
  }

  void zero() {
    g_sigma.zero();
    g_rgb.zero();
    std::fill(appearance.begin(), appearance.end(), 0.0);
  }

  void add(const DecoderGrads& other) {
    g_sigma.add(other.g_sigma);
    g_rgb.add(other.g_rgb);
    for (std::size_t i = 0; i < appearance.size(); ++i) appearance[i] += other.appearance[i];
  }
};

// gamma(p): for each axis, (sin(2^l pi p), cos(2^l pi p)) for l = 0..L-1;
// axis-major, sin before cos. L = 0 yields an empty vector.
inline void positional_encoding(const Vec3& p, int order, double* out) {
  constexpr double kPi = 3.141592653589793238462643383279502884;
  int k = 0;
  for (int axis = 0; axis < 3; ++axis) {
    double base = kPi * p[axis];
    double freq = 1.0;
    for (int l = 0; l < order; ++l) {
      out[k++] = std::sin(freq * base);
      out[k++] = std::cos(freq * base);
      freq *= 2.0;
    }
  }
}

inline std::vector<double> positional_encoding(const Vec3& p, int order) {
  std::vector<double> out(std::size_t(6) * order);
  positional_encoding(p, order, out.data());
  return out;
}

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

struct DensityResult {
  double sigma = 0.0;
  double raw0 = 0.0;                // pre-activation driving sigma
  const double* f_hat = nullptr;    // m_feat extra features (points into tape)
};

// sigma = softplus(raw - 1) keeps densities nonnegative with a near-zero
// default at init; f_hat passes through unsquashed.
inline DensityResult decode_density(const FieldDecoder& dec, const double* f, MlpTape& tape) {
  for (int i = 0; i < dec.cfg.channels; ++i)
    if (!std::isfinite(f[i])) throw NumericError("decode_density: non-finite feature input");
  mlp_forward(dec.g_sigma, f, tape);
  const std::vector<double>& raw = mlp_output(tape);
  DensityResult r;
  r.raw0 = raw[0];
  r.sigma = softplus(raw[0] - 1.0);
  r.f_hat = raw.data() + 1;
  return r;
}

// Backward for decode_density. upstream_fhat may be null when no gradient
// flows through f_hat.
inline void decode_density_backward(const FieldDecoder& dec, const MlpTape& tape, double raw0,
                                    double d_sigma, const double* upstream_fhat,
                                    DecoderGrads& grads, double* d_f) {
  std::vector<double> d_raw(std::size_t(1) + dec.cfg.m_feat, 0.0);
  d_raw[0] = d_sigma * sigmoid(raw0 - 1.0);
  if (upstream_fhat != nullptr)
    for (int i = 0; i < dec.cfg.m_feat; ++i) d_raw[1 + i] = upstream_fhat[i];
  mlp_backward(dec.g_sigma, tape, d_raw.data(), grads.g_sigma, d_f);
}

struct ColorResult {
  double rgb[3] = {0.0, 0.0, 0.0};
  double raw[3] = {0.0, 0.0, 0.0};
};

// Concatenated (f_hat, gamma(d), e) -> sigmoid-squashed RGB. `e` may be null
// when the decoder has no appearance table.
inline ColorResult decode_color(const FieldDecoder& dec, const double* f_hat, const double* d_enc,
                                const double* e, MlpTape& tape) {
  require((e != nullptr) == (dec.cfg.appearance_dim > 0),
          "decode_color: appearance input does not match decoder configuration");
  std::vector<double> input(dec.color_in_dim());
  int k = 0;
  for (int i = 0; i < dec.cfg.m_feat; ++i) input[k++] = f_hat[i];
  for (int i = 0; i < 6 * dec.cfg.posenc_l; ++i) input[k++] = d_enc[i];
  for (int i = 0; i < dec.cfg.appearance_dim; ++i) input[k++] = e[i];
  mlp_forward(dec.g_rgb, input.data(), tape);
  const std::vector<double>& raw = mlp_output(tape);
  ColorResult r;
  for (int i = 0; i < 3; ++i) {
    r.raw[i] = raw[i];
    r.rgb[i] = sigmoid(raw[i]);
  }
  return r;
}

// Backward for decode_color; splits the input gradient back into the f_hat,
// direction-encoding, and appearance slots (any may be null).
inline void decode_color_backward(const FieldDecoder& dec, const MlpTape& tape,
                                  const ColorResult& fwd, const double* d_rgb,
                                  DecoderGrads& grads, double* d_fhat, double* d_denc,
                                  double* d_e) {
  double d_raw[3];
  for (int i = 0; i < 3; ++i) {
    double s = sigmoid(fwd.raw[i]);
    d_raw[i] = d_rgb[i] * s * (1.0 - s);
  }
  std::vector<double> d_input(dec.color_in_dim());
  mlp_backward(dec.g_rgb, tape, d_raw, grads.g_rgb, d_input.data());
  int k = 0;
  for (int i = 0; i < dec.cfg.m_feat; ++i, ++k)
    if (d_fhat) d_fhat[i] = d_input[k];
  for (int i = 0; i < 6 * dec.cfg.posenc_l; ++i, ++k)
    if (d_denc) d_denc[i] = d_input[k];
  for (int i = 0; i < dec.cfg.appearance_dim; ++i, ++k)
    if (d_e) d_e[i] += d_input[k];
}

}  // namespace rf
