#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "rf/common.hpp"
#include "rf/decoder.hpp"
#include "rf/geometry.hpp"
#include "rf/optim.hpp"
#include "rf/parallel.hpp"
#include "rf/planes.hpp"
#include "rf/rendering.hpp"
#include "rf/rng.hpp"

namespace rf {

struct RayBatchEntry {
  Ray ray;
  RaySamples samples;
  Rgb gt;
  int appearance_index = -1;  // -1 when the decoder has no appearance table
};

struct FitConfig {
  int n1_steps = 30000;
  int batch_size = 4096;
  double lr_planes = 0.01;
  double lr_mlp = 0.01;
  double lr_appearance = 0.1;
  double lambda_tv = 1e-4;
  int warmup_steps = 512;
  SamplingConfig sampling{2.0, 6.0, 64, true};
  Rgb background{1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
  int workers = 1;
};

// Scratch buffers reused across rays by one worker.
struct RayWorkspace {
  std::vector<double> d_enc;
  std::vector<double> feat;  // per sample: f_xy | f_xz | f_yz | aggregated f
  std::vector<double> sigma, rgb, raw0;
  std::vector<ColorResult> colors;
  std::vector<MlpTape> sigma_tapes, color_tapes;
  std::vector<double> d_sigma, d_rgb;
  std::vector<double> d_f, d_fxy, d_fxz, d_fyz, d_fhat;
};

// Forward + backward for one training ray. Accumulates parameter gradients
// scaled by loss_scale (the d loss / d color prefactor is 2 * residual *
// loss_scale) and returns the ray's summed squared error over channels.
inline double render_ray_train(const PlaneSet& planes, const FieldDecoder& dec,
                               const RayBatchEntry& entry, const Rgb& background,
                               double loss_scale, PlaneGradients& plane_grads,
                               DecoderGrads& dec_grads, RayWorkspace& ws) {
  const int c = planes.c;
  const std::size_t n = entry.samples.t.size();
  const double* e = entry.appearance_index >= 0 && dec.appearance
                        ? dec.appearance->row(entry.appearance_index)
                        : nullptr;

  ws.d_enc.resize(std::size_t(6) * dec.cfg.posenc_l);
  positional_encoding(entry.ray.direction, dec.cfg.posenc_l, ws.d_enc.data());
  ws.feat.resize(n * 4 * c);
  ws.sigma.resize(n);
  ws.raw0.resize(n);
  ws.rgb.resize(3 * n);
  ws.colors.resize(n);
  ws.sigma_tapes.resize(n);
  ws.color_tapes.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    Vec3 qg = normalize_point(entry.samples.q[i], planes.aabb, planes.n);
    double* f_h = &ws.feat[i * 4 * c];
    for (PlaneId h : kPlaneIds) {
      Point2 p = project(qg, h);
      bilerp(planes.grid(h), planes.n, c, p.a, p.b, f_h + static_cast<int>(h) * c);
    }
    aggregate(f_h, f_h + c, f_h + 2 * c, c, f_h + 3 * c);
    DensityResult dres = decode_density(dec, f_h + 3 * c, ws.sigma_tapes[i]);
    ws.sigma[i] = dres.sigma;
    ws.raw0[i] = dres.raw0;
    ws.colors[i] = decode_color(dec, dres.f_hat, ws.d_enc.data(), e, ws.color_tapes[i]);
    for (int ch = 0; ch < 3; ++ch) ws.rgb[3 * i + ch] = ws.colors[i].rgb[ch];
  }

  CompositeResult comp = composite(ws.sigma, ws.rgb, entry.samples.delta);
  double residual[3], d_final[3];
  double sq_err = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    double final_c = comp.color[ch] + (1.0 - comp.opacity) * background[ch];
    residual[ch] = final_c - entry.gt[ch];
    sq_err += residual[ch] * residual[ch];
    d_final[ch] = 2.0 * residual[ch] * loss_scale;
  }
  double d_opacity = -(d_final[0] * background[0] + d_final[1] * background[1] +
                       d_final[2] * background[2]);

  composite_backward(ws.sigma, ws.rgb, entry.samples.delta, comp, d_final, d_opacity, ws.d_sigma,
                     ws.d_rgb);

  ws.d_f.resize(c);
  ws.d_fxy.resize(c);
  ws.d_fxz.resize(c);
  ws.d_fyz.resize(c);
  ws.d_fhat.resize(dec.cfg.m_feat);
  double* d_e = e != nullptr ? &dec_grads.appearance[std::size_t(entry.appearance_index) *
                                                     dec.cfg.appearance_dim]
                             : nullptr;

  for (std::size_t i = 0; i < n; ++i) {
    decode_color_backward(dec, ws.color_tapes[i], ws.colors[i], &ws.d_rgb[3 * i], dec_grads,
                          ws.d_fhat.data(), nullptr, d_e);
    decode_density_backward(dec, ws.sigma_tapes[i], ws.raw0[i], ws.d_sigma[i], ws.d_fhat.data(),
                            dec_grads, ws.d_f.data());
    const double* f_h = &ws.feat[i * 4 * c];
    aggregate_backward(f_h, f_h + c, f_h + 2 * c, c, ws.d_f.data(), ws.d_fxy.data(),
                       ws.d_fxz.data(), ws.d_fyz.data());
    Vec3 qg = normalize_point(entry.samples.q[i], planes.aabb, planes.n);
    const double* d_fh[3] = {ws.d_fxy.data(), ws.d_fxz.data(), ws.d_fyz.data()};
    for (PlaneId h : kPlaneIds) {
      Point2 p = project(qg, h);
      bilerp_backward(planes.grid(h), planes.n, c, p.a, p.b, d_fh[static_cast<int>(h)],
                      plane_grads.grids[static_cast<int>(h)]);
    }
  }
  return sq_err;
}

struct FitStepResult {
  double loss = 0.0;  // mse + lambda_tv * tv
  double mse = 0.0;   // mean over rays and channels
  double tv = 0.0;
};

// Batch loss of Eq.-style scene fitting: MSE between rendered and ground
// truth colors plus weighted plane total variation; analytic gradients for
// planes, both decoder networks, and the appearance table.
inline FitStepResult fitting_loss(const PlaneSet& planes, const FieldDecoder& dec,
                                  const std::vector<RayBatchEntry>& batch, double lambda_tv,
                                  const Rgb& background, PlaneGradients& plane_grads,
                                  DecoderGrads& dec_grads, int workers = 1) {
  require(!batch.empty(), "fitting_loss: batch must be nonempty");
  const double loss_scale = 1.0 / (3.0 * static_cast<double>(batch.size()));

  std::vector<PlaneGradients> worker_pg;
  std::vector<DecoderGrads> worker_dg;
  std::vector<double> worker_sq;
  int n_workers = std::max(1, workers);
  worker_pg.assign(n_workers, PlaneGradients(planes));
  worker_dg.assign(n_workers, DecoderGrads(dec));
  worker_sq.assign(n_workers, 0.0);

  parallel_chunks(batch.size(), n_workers, [&](int w, std::size_t begin, std::size_t end) {
    RayWorkspace ws;
    for (std::size_t i = begin; i < end; ++i)
      worker_sq[w] += render_ray_train(planes, dec, batch[i], background, loss_scale, worker_pg[w],
                                       worker_dg[w], ws);
  });

  double sq_sum = 0.0;
  for (int w = 0; w < n_workers; ++w) {
    sq_sum += worker_sq[w];
    plane_grads.add(worker_pg[w]);
    dec_grads.add(worker_dg[w]);
  }

  FitStepResult r;
  r.mse = sq_sum * loss_scale;
  r.tv = tv_loss(planes);
  if (lambda_tv != 0.0) tv_backward(planes, lambda_tv, plane_grads);
  r.loss = r.mse + lambda_tv * r.tv;
  return r;
}

struct FitTraceRow {
  std::int64_t step = 0;
  double loss = 0.0;
  double psnr = 0.0;
  double lr = 0.0;
};

// A source of training rays: any posed image collection can provide this.
struct RaySource {
  const std::vector<Image>* images = nullptr;
  const std::vector<Camera>* cameras = nullptr;
  const std::vector<int>* appearance_index = nullptr;  // optional
  std::vector<int> image_ids;                          // subset to draw from
};

inline std::size_t ray_source_pixel_count(const RaySource& src) {
  std::size_t total = 0;
  for (int id : src.image_ids) {
    const Image& img = (*src.images)[id];
    total += std::size_t(img.width) * img.height;
  }
  return total;
}

// Draws one uniform-with-replacement batch of training rays. Stratified
// jitter uses a stream derived from (seed, step, slot) so results do not
// depend on worker scheduling.
inline std::vector<RayBatchEntry> draw_ray_batch(const RaySource& src, const FitConfig& cfg,
                                                 std::int64_t step, Rng& pick_rng) {
  std::vector<RayBatchEntry> batch(cfg.batch_size);
  const std::size_t total_pixels = ray_source_pixel_count(src);
  for (int k = 0; k < cfg.batch_size; ++k) {
    std::size_t flat = pick_rng.below(total_pixels);
    int image_id = -1;
    for (int id : src.image_ids) {
      const Image& img = (*src.images)[id];
      std::size_t count = std::size_t(img.width) * img.height;
      if (flat < count) {
        image_id = id;
        break;
      }
      flat -= count;
    }
    const Image& img = (*src.images)[image_id];
    int row = static_cast<int>(flat / img.width);
    int col = static_cast<int>(flat % img.width);

    RayBatchEntry& e = batch[k];
    e.ray = ray_through_pixel((*src.cameras)[image_id], row, col);
    Rng jitter(derive_seed(cfg.seed ^ 0x5261794a69747465ULL, static_cast<std::uint64_t>(step),
                           static_cast<std::uint64_t>(k)));
    e.samples = sample_along_ray(e.ray, cfg.sampling.near, cfg.sampling.far, cfg.sampling.count,
                                 cfg.sampling.stratified, jitter);
    e.gt = {img.at(row, col, 0), img.at(row, col, 1), img.at(row, col, 2)};
    e.appearance_index =
        src.appearance_index != nullptr ? (*src.appearance_index)[image_id] : -1;
  }
  return batch;
}

// One scene-fitting phase: n1_steps Adam updates with a warmup-cosine
// schedule over planes, decoder MLPs, and appearance embeddings. Optimizer
// moments start fresh each phase.
inline std::vector<FitTraceRow> fit_scene(PlaneSet& planes, FieldDecoder& dec,
                                          const RaySource& source, const FitConfig& cfg) {
  require(!source.image_ids.empty(), "fit_scene: dataset must be nonempty");
  std::vector<FitTraceRow> trace;
  if (cfg.n1_steps <= 0) return trace;
  trace.reserve(cfg.n1_steps);

  PlaneGradients plane_grads(planes);
  DecoderGrads dec_grads(dec);

  Adam opt;
  for (int h = 0; h < 3; ++h) opt.attach(&planes.grids[h], &plane_grads.grids[h], cfg.lr_planes);
  for (std::size_t li = 0; li < dec.g_sigma.layers.size(); ++li) {
    opt.attach(&dec.g_sigma.layers[li].w, &dec_grads.g_sigma.layers[li].w, cfg.lr_mlp);
    opt.attach(&dec.g_sigma.layers[li].b, &dec_grads.g_sigma.layers[li].b, cfg.lr_mlp);
  }
  for (std::size_t li = 0; li < dec.g_rgb.layers.size(); ++li) {
    opt.attach(&dec.g_rgb.layers[li].w, &dec_grads.g_rgb.layers[li].w, cfg.lr_mlp);
    opt.attach(&dec.g_rgb.layers[li].b, &dec_grads.g_rgb.layers[li].b, cfg.lr_mlp);
  }
  if (dec.appearance)
    opt.attach(&dec.appearance->e, &dec_grads.appearance, cfg.lr_appearance);

  Rng pick_rng(derive_seed(cfg.seed, 0x42617463684d6978ULL));
  for (std::int64_t step = 0; step < cfg.n1_steps; ++step) {
    auto batch = draw_ray_batch(source, cfg, step, pick_rng);
    plane_grads.zero();
    dec_grads.zero();
    FitStepResult res = fitting_loss(planes, dec, batch, cfg.lambda_tv, cfg.background,
                                     plane_grads, dec_grads, cfg.workers);
    double scale = warmup_cosine_lr(step, 1.0, cfg.warmup_steps, cfg.n1_steps);
    opt.step(scale);
    FitTraceRow row;
    row.step = step;
    row.loss = res.loss;
    row.psnr = res.mse > 0.0 ? 10.0 * std::log10(1.0 / res.mse)
                             : std::numeric_limits<double>::infinity();
    row.lr = cfg.lr_planes * scale;
    trace.push_back(row);
  }
  return trace;
}

// Optimizes a fresh appearance embedding against a region of one held-out
// image; everything but the embedding stays frozen. `left_half` restricts
// the supervising pixels to columns [0, width/2).
inline std::vector<double> optimize_appearance(const PlaneSet& planes, const FieldDecoder& dec,
                                               const Camera& cam, const Image& gt, int epochs,
                                               int batch_size, double lr,
                                               const SamplingConfig& sampling,
                                               const Rgb& background, std::uint64_t seed,
                                               bool left_half = true) {
  require(dec.cfg.appearance_dim > 0, "optimize_appearance: decoder has no appearance input");
  const int m = dec.cfg.appearance_dim;
  std::vector<double> e(m, 0.0), grad(m, 0.0);
  AdamState state(m);

  const int cols = left_half ? cam.width / 2 : cam.width;
  std::vector<Pixel> pixels;
  pixels.reserve(std::size_t(cam.height) * cols);
  for (int row = 0; row < cam.height; ++row)
    for (int col = 0; col < cols; ++col) pixels.push_back({row, col});

  Rng shuffle_rng(derive_seed(seed, 0x417070536875664cULL));
  DecoderGrads scratch(dec);  // sink for MLP gradients that are not applied
  std::int64_t step = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    // deterministic reshuffle each epoch
    for (std::size_t i = pixels.size(); i > 1; --i)
      std::swap(pixels[i - 1], pixels[shuffle_rng.below(i)]);
    for (std::size_t begin = 0; begin < pixels.size(); begin += batch_size) {
      std::size_t end = std::min(begin + batch_size, pixels.size());
      std::fill(grad.begin(), grad.end(), 0.0);
      double scale = 1.0 / (3.0 * static_cast<double>(end - begin));
      for (std::size_t i = begin; i < end; ++i) {
        const Pixel& px = pixels[i];
        Ray ray = ray_through_pixel(cam, px.row, px.col);
        Rng jitter(derive_seed(seed, static_cast<std::uint64_t>(step),
                               static_cast<std::uint64_t>(i - begin)));
        RaySamples samples = sample_along_ray(ray, sampling.near, sampling.far, sampling.count,
                                              sampling.stratified, jitter);
        const std::size_t n = samples.t.size();
        std::vector<double> sigma(n), rgb(3 * n);
        std::vector<double> d_enc = positional_encoding(ray.direction, dec.cfg.posenc_l);
        std::vector<MlpTape> sigma_tapes(n), color_tapes(n);
        std::vector<ColorResult> colors(n);
        const int c = planes.c;
        std::vector<double> feat(std::size_t(4) * c);
        for (std::size_t s = 0; s < n; ++s) {
          Vec3 qg = normalize_point(samples.q[s], planes.aabb, planes.n);
          for (PlaneId h : kPlaneIds) {
            Point2 p = project(qg, h);
            bilerp(planes.grid(h), planes.n, c, p.a, p.b, feat.data() + static_cast<int>(h) * c);
          }
          aggregate(feat.data(), feat.data() + c, feat.data() + 2 * c, c, feat.data() + 3 * c);
          DensityResult dres = decode_density(dec, feat.data() + 3 * c, sigma_tapes[s]);
          sigma[s] = dres.sigma;
          colors[s] = decode_color(dec, dres.f_hat, d_enc.data(), e.data(), color_tapes[s]);
          for (int ch = 0; ch < 3; ++ch) rgb[3 * s + ch] = colors[s].rgb[ch];
        }
        CompositeResult comp = composite(sigma, rgb, samples.delta);
        double d_final[3];
        for (int ch = 0; ch < 3; ++ch) {
          double final_c = comp.color[ch] + (1.0 - comp.opacity) * background[ch];
          d_final[ch] = 2.0 * (final_c - gt.at(px.row, px.col, ch)) * scale;
        }
        double d_opacity = -(d_final[0] * background[0] + d_final[1] * background[1] +
                             d_final[2] * background[2]);
        std::vector<double> d_sigma, d_rgb;
        composite_backward(sigma, rgb, samples.delta, comp, d_final, d_opacity, d_sigma, d_rgb);
        // gradient flows to the embedding only
        for (std::size_t s = 0; s < n; ++s)
          decode_color_backward(dec, color_tapes[s], colors[s], &d_rgb[3 * s], scratch, nullptr,
                                nullptr, grad.data());
      }
      adam_step(e, grad, state, lr);
      ++step;
    }
  }
  return e;
}

}  // namespace rf
