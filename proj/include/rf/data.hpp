#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rf/checkpoint.hpp"
#include "rf/common.hpp"
#include "rf/decoder.hpp"
#include "rf/geometry.hpp"
#include "rf/image.hpp"
#include "rf/image_io.hpp"
#include "rf/parallel.hpp"
#include "rf/planes.hpp"
#include "rf/rendering.hpp"
#include "rf/rng.hpp"
#include "rf/training_fit.hpp"

namespace rf {

struct PosedImageSet {
  std::vector<Image> images;
  std::vector<Camera> cameras;
  std::vector<int> appearance_index;  // per image
  std::vector<bool> is_test;
  std::vector<Rgb> tint;  // generator ground truth; {1,1,1} when absent
  double camera_angle_x = 0.0;

  std::vector<int> split_ids(bool test) const {
    std::vector<int> ids;
    for (std::size_t i = 0; i < images.size(); ++i)
      if (is_test[i] == test) ids.push_back(static_cast<int>(i));
    return ids;
  }
  std::vector<int> train_ids() const { return split_ids(false); }
  std::vector<int> test_ids() const { return split_ids(true); }

  RaySource ray_source(bool test, bool with_appearance) const {
    RaySource src;
    src.images = &images;
    src.cameras = &cameras;
    src.appearance_index = with_appearance ? &appearance_index : nullptr;
    src.image_ids = split_ids(test);
    return src;
  }

  void validate() const {
    require(images.size() == cameras.size() && images.size() == appearance_index.size() &&
                images.size() == is_test.size(),
            "dataset: per-image arrays must have equal length");
    for (bool test : {false, true}) {
      auto ids = split_ids(test);
      for (std::size_t k = 1; k < ids.size(); ++k)
        require(images[ids[k]].width == images[ids[0]].width &&
                    images[ids[k]].height == images[ids[0]].height,
                "dataset: images within a split must share dimensions");
    }
  }
};

// ---------------------------------------------------------------------------
// Procedural scenes: analytic density/color fields built from smooth-edged
// colored primitives inside a unit box, used as desk-scale ground truth.

struct Primitive {
  enum class Kind { sphere, box };
  Kind kind = Kind::sphere;
  Vec3 center;
  Vec3 half_extent;  // sphere radius in x
  Rgb color;
  double density = 40.0;
  double feather = 0.06;
};

inline double primitive_weight(const Primitive& prim, const Vec3& q) {
  double outside;
  if (prim.kind == Primitive::Kind::sphere) {
    outside = (q - prim.center).norm() - prim.half_extent.x;
  } else {
    Vec3 d = q - prim.center;
    outside = std::max(std::max(std::abs(d.x) - prim.half_extent.x,
                                std::abs(d.y) - prim.half_extent.y),
                       std::abs(d.z) - prim.half_extent.z);
  }
  double w = std::clamp(-outside / prim.feather, 0.0, 1.0);
  return w * w * (3.0 - 2.0 * w);  // smoothstep falloff at the boundary
}

struct ProceduralScene {
  std::vector<Primitive> primitives;
  Aabb aabb{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};

  double sigma(const Vec3& q) const {
    double acc = 0.0;
    for (const Primitive& prim : primitives) acc += prim.density * primitive_weight(prim, q);
    return acc;
  }

  Rgb color(const Vec3& q) const {
    double total = 0.0;
    double mix[3] = {0.0, 0.0, 0.0};
    for (const Primitive& prim : primitives) {
      double w = prim.density * primitive_weight(prim, q);
      total += w;
      for (int ch = 0; ch < 3; ++ch) mix[ch] += w * prim.color[ch];
    }
    if (total <= 1e-12) return {0.5, 0.5, 0.5};
    return {mix[0] / total, mix[1] / total, mix[2] / total};
  }

  AnalyticField field(const Rgb& tint = {1, 1, 1}) const {
    AnalyticField f;
    f.sigma = [this](const Vec3& q) { return sigma(q); };
    f.color = [this, tint](const Vec3& q) {
      Rgb c = color(q);
      return Rgb{c.r * tint.r, c.g * tint.g, c.b * tint.b};
    };
    return f;
  }
};

struct ProceduralConfig {
  std::uint64_t seed = 0;
  int train_images = 16;
  int test_images = 4;
  int resolution = 64;
  double jitter = 0.0;  // appearance tint strength in [0, 1)
  int primitive_count = 5;
  double fov_x = 0.9;          // radians
  double camera_radius = 1.9;  // orbit radius around the origin
  int gt_samples = 384;        // dense quadrature sample count for ground truth
  Rgb background{1, 1, 1};
  double near = 0.9;
  double far = 2.9;
  int workers = 1;
};

// Camera on the orbit sphere looking at the origin, y-up.
inline Mat4 look_at_origin(const Vec3& position) {
  Vec3 z_axis = position.normalized();  // camera looks along -z toward origin
  Vec3 up{0, 1, 0};
  if (std::abs(z_axis.y) > 0.99) up = {1, 0, 0};
  Vec3 x_axis = Vec3{up.y * z_axis.z - up.z * z_axis.y, up.z * z_axis.x - up.x * z_axis.z,
                     up.x * z_axis.y - up.y * z_axis.x}
                    .normalized();
  Vec3 y_axis{z_axis.y * x_axis.z - z_axis.z * x_axis.y, z_axis.z * x_axis.x - z_axis.x * x_axis.z,
              z_axis.x * x_axis.y - z_axis.y * x_axis.x};
  Mat4 pose;
  for (int r = 0; r < 3; ++r) {
    pose.at(r, 0) = x_axis[r];
    pose.at(r, 1) = y_axis[r];
    pose.at(r, 2) = z_axis[r];
    pose.at(r, 3) = position[r];
  }
  return pose;
}

struct ProceduralResult {
  PosedImageSet set;
  ProceduralScene scene;
};

inline ProceduralScene random_procedural_scene(Rng& rng, int primitive_count) {
  ProceduralScene scene;
  for (int i = 0; i < primitive_count; ++i) {
    Primitive prim;
    prim.kind = rng.uniform() < 0.5 ? Primitive::Kind::sphere : Primitive::Kind::box;
    prim.center = {rng.uniform(-0.28, 0.28), rng.uniform(-0.28, 0.28), rng.uniform(-0.28, 0.28)};
    if (prim.kind == Primitive::Kind::sphere) {
      double radius = rng.uniform(0.08, 0.2);
      prim.half_extent = {radius, radius, radius};
    } else {
      prim.half_extent = {rng.uniform(0.06, 0.18), rng.uniform(0.06, 0.18),
                          rng.uniform(0.06, 0.18)};
    }
    prim.color = {rng.uniform(0.1, 0.95), rng.uniform(0.1, 0.95), rng.uniform(0.1, 0.95)};
    prim.density = rng.uniform(25.0, 60.0);
    prim.feather = 0.06;
    scene.primitives.push_back(prim);
  }
  return scene;
}

// Deterministic posed-image set rendered from an analytic scene with dense
// quadrature; optional per-image tint dims the scene colors and is recorded
// as the appearance ground truth.
inline ProceduralResult generate_procedural(const ProceduralConfig& cfg) {
  require(cfg.resolution >= 8, "generate_procedural: resolution must be >= 8");
  Rng rng(cfg.seed);
  ProceduralResult out;
  out.scene = random_procedural_scene(rng.split("primitives"), cfg.primitive_count);

  Rng cam_rng = rng.split("cameras");
  Rng tint_rng = rng.split("tints");
  const int total = cfg.train_images + cfg.test_images;
  for (int i = 0; i < total; ++i) {
    double azimuth = cam_rng.uniform(0.0, 6.283185307179586);
    double elevation = cam_rng.uniform(-0.9, 0.9);
    Vec3 pos{cfg.camera_radius * std::cos(elevation) * std::cos(azimuth),
             cfg.camera_radius * std::sin(elevation),
             cfg.camera_radius * std::cos(elevation) * std::sin(azimuth)};
    Camera cam = Camera::from_fov_x(cfg.resolution, cfg.resolution, cfg.fov_x,
                                    look_at_origin(pos));
    Rgb tint{1, 1, 1};
    if (cfg.jitter > 0.0)
      for (int ch = 0; ch < 3; ++ch) tint[ch] = 1.0 - cfg.jitter * tint_rng.uniform();

    AnalyticField field = out.scene.field(tint);
    Image img(cfg.resolution, cfg.resolution);
    SamplingConfig sampling{cfg.near, cfg.far, cfg.gt_samples, false};
    parallel_chunks(static_cast<std::size_t>(cfg.resolution), cfg.workers,
                    [&](int, std::size_t row_begin, std::size_t row_end) {
                      for (std::size_t row = row_begin; row < row_end; ++row) {
                        for (int col = 0; col < cfg.resolution; ++col) {
                          Ray ray = ray_through_pixel(cam, static_cast<int>(row), col);
                          Rng srng(0);  // midpoint sampling ignores the stream
                          RaySamples s = sample_along_ray(ray, sampling.near, sampling.far,
                                                          sampling.count, false, srng);
                          Rgb c = render_pixel_field(field, ray, s, cfg.background);
                          for (int ch = 0; ch < 3; ++ch)
                            img.at(static_cast<int>(row), col, ch) = c[ch];
                        }
                      }
                    });

    out.set.images.push_back(std::move(img));
    out.set.cameras.push_back(cam);
    out.set.appearance_index.push_back(i);
    out.set.is_test.push_back(i >= cfg.train_images);
    out.set.tint.push_back(tint);
  }
  out.set.camera_angle_x = cfg.fov_x;
  out.set.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic transforms format: per-split JSON manifest with camera_angle_x
// and per-frame transform_matrix, images as PNG files.

inline void save_synthetic(const std::string& dir, const PosedImageSet& set) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (bool test : {false, true}) {
    const std::string split = test ? "test" : "train";
    auto ids = set.split_ids(test);
    if (ids.empty()) continue;
    fs::create_directories(fs::path(dir) / split);
    nlohmann::json manifest;
    manifest["camera_angle_x"] = set.camera_angle_x;
    manifest["frames"] = nlohmann::json::array();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      int id = ids[k];
      std::string rel = "./" + split + "/r_" + std::to_string(k);
      save_png((fs::path(dir) / (rel.substr(2) + ".png")).string(), set.images[id]);
      nlohmann::json frame;
      frame["file_path"] = rel;
      nlohmann::json matrix = nlohmann::json::array();
      for (int r = 0; r < 4; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < 4; ++c) row.push_back(set.cameras[id].pose.at(r, c));
        matrix.push_back(row);
      }
      frame["transform_matrix"] = matrix;
      if (!set.tint.empty() &&
          (set.tint[id].r != 1.0 || set.tint[id].g != 1.0 || set.tint[id].b != 1.0))
        frame["tint"] = {set.tint[id].r, set.tint[id].g, set.tint[id].b};
      manifest["frames"].push_back(frame);
    }
    std::ofstream out(fs::path(dir) / ("transforms_" + split + ".json"));
    out << manifest.dump(2) << "\n";
  }
}

// Loads one split's manifest into `set`. Fails with the offending file and
// frame index on malformed entries.
inline void load_synthetic_split(const std::string& dir, const std::string& split,
                                 PosedImageSet& set) {
  namespace fs = std::filesystem;
  const std::string manifest_path = (fs::path(dir) / ("transforms_" + split + ".json")).string();
  std::ifstream in(manifest_path);
  if (!in) throw DataError("load_synthetic: missing manifest " + manifest_path);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_synthetic: cannot parse " + manifest_path + ": " + e.what());
  }
  if (!manifest.contains("camera_angle_x") || !manifest.contains("frames"))
    throw DataError("load_synthetic: " + manifest_path +
                    " lacks camera_angle_x or frames");
  double angle_x = manifest["camera_angle_x"].get<double>();
  set.camera_angle_x = angle_x;

  int frame_index = 0;
  for (const auto& frame : manifest["frames"]) {
    std::string where = manifest_path + " frame " + std::to_string(frame_index);
    if (!frame.contains("file_path") || !frame.contains("transform_matrix"))
      throw DataError("load_synthetic: " + where + " lacks file_path or transform_matrix");
    Mat4 pose;
    const auto& matrix = frame["transform_matrix"];
    if (!matrix.is_array() || matrix.size() != 4)
      throw DataError("load_synthetic: malformed transform_matrix at " + where);
    for (int r = 0; r < 4; ++r) {
      if (!matrix[r].is_array() || matrix[r].size() != 4)
        throw DataError("load_synthetic: malformed transform_matrix at " + where);
      for (int c = 0; c < 4; ++c) {
        if (!matrix[r][c].is_number())
          throw DataError("load_synthetic: malformed transform_matrix at " + where);
        pose.at(r, c) = matrix[r][c].get<double>();
      }
    }
    std::string rel = frame["file_path"].get<std::string>();
    if (rel.rfind("./", 0) == 0) rel = rel.substr(2);
    std::string img_path = (fs::path(dir) / (rel + ".png")).string();
    Image img = load_png(img_path);

    Camera cam;
    try {
      cam = Camera::from_fov_x(img.width, img.height, angle_x, pose);
    } catch (const std::invalid_argument& e) {
      throw DataError("load_synthetic: invalid camera at " + where + ": " + e.what());
    }
    Rgb tint{1, 1, 1};
    if (frame.contains("tint"))
      for (int ch = 0; ch < 3; ++ch) tint[ch] = frame["tint"][ch].get<double>();

    set.images.push_back(std::move(img));
    set.cameras.push_back(cam);
    set.appearance_index.push_back(static_cast<int>(set.images.size()) - 1);
    set.is_test.push_back(split == "test");
    set.tint.push_back(tint);
    ++frame_index;
  }
}

inline PosedImageSet load_synthetic(const std::string& dir) {
  PosedImageSet set;
  namespace fs = std::filesystem;
  bool any = false;
  for (const std::string split : {"train", "test"}) {
    if (fs::exists(fs::path(dir) / ("transforms_" + split + ".json"))) {
      load_synthetic_split(dir, split, set);
      any = true;
    }
  }
  if (!any) throw DataError("load_synthetic: no transforms manifest under " + dir);
  set.validate();
  return set;
}

// ---------------------------------------------------------------------------
// Model <-> checkpoint blob conversion.

inline void append_plane_blobs(const PlaneSet& planes, std::vector<TensorBlob>& blobs) {
  std::uint64_t n = static_cast<std::uint64_t>(planes.n);
  std::uint64_t c = static_cast<std::uint64_t>(planes.c);
  for (PlaneId h : kPlaneIds)
    blobs.push_back(blob_from_doubles(std::string("planes/") + plane_name(h), {n, n, c},
                                      planes.grid(h)));
  blobs.push_back(blob_from_doubles(
      "planes/aabb", {2, 3},
      {planes.aabb.min.x, planes.aabb.min.y, planes.aabb.min.z, planes.aabb.max.x,
       planes.aabb.max.y, planes.aabb.max.z}));
}

inline PlaneSet planes_from_blobs(const std::vector<TensorBlob>& blobs) {
  const TensorBlob& xy = find_blob(blobs, "planes/xy");
  if (xy.dims.size() != 3 || xy.dims[0] != xy.dims[1])
    throw DataError("checkpoint: malformed planes/xy dims");
  int n = static_cast<int>(xy.dims[0]);
  int c = static_cast<int>(xy.dims[2]);
  const TensorBlob& box = find_blob(blobs, "planes/aabb");
  Aabb aabb{{box.data[0], box.data[1], box.data[2]}, {box.data[3], box.data[4], box.data[5]}};
  PlaneSet planes(n, c, aabb);
  for (PlaneId h : kPlaneIds) {
    const TensorBlob& b = find_blob(blobs, std::string("planes/") + plane_name(h));
    if (b.element_count() != planes.grid_size())
      throw DataError("checkpoint: plane payload size mismatch");
    planes.grid(h) = doubles_from_blob(b);
  }
  return planes;
}

inline void append_mlp_blobs(const Mlp& net, const std::string& prefix,
                             std::vector<TensorBlob>& blobs) {
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const DenseLayer& l = net.layers[li];
    std::string base = prefix + "/l" + std::to_string(li);
    blobs.push_back(blob_from_doubles(base + "/w",
                                      {static_cast<std::uint64_t>(l.out),
                                       static_cast<std::uint64_t>(l.in)},
                                      l.w));
    blobs.push_back(blob_from_doubles(base + "/b", {static_cast<std::uint64_t>(l.out)}, l.b));
  }
}

inline void load_mlp_blobs(Mlp& net, const std::string& prefix,
                           const std::vector<TensorBlob>& blobs) {
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    DenseLayer& l = net.layers[li];
    std::string base = prefix + "/l" + std::to_string(li);
    const TensorBlob& w = find_blob(blobs, base + "/w");
    const TensorBlob& b = find_blob(blobs, base + "/b");
    if (w.element_count() != l.w.size() || b.element_count() != l.b.size())
      throw DataError("checkpoint: MLP layer shape mismatch at " + base);
    l.w = doubles_from_blob(w);
    l.b = doubles_from_blob(b);
  }
}

inline void append_decoder_blobs(const FieldDecoder& dec, std::vector<TensorBlob>& blobs) {
  blobs.push_back(blob_from_doubles(
      "decoder/meta", {6},
      {static_cast<double>(dec.cfg.channels), static_cast<double>(dec.cfg.hidden),
       static_cast<double>(dec.cfg.hidden_layers), static_cast<double>(dec.cfg.m_feat),
       static_cast<double>(dec.cfg.posenc_l), static_cast<double>(dec.cfg.appearance_dim)}));
  append_mlp_blobs(dec.g_sigma, "decoder/gsigma", blobs);
  append_mlp_blobs(dec.g_rgb, "decoder/grgb", blobs);
  if (dec.appearance)
    blobs.push_back(blob_from_doubles("appearance/table",
                                      {static_cast<std::uint64_t>(dec.appearance->rows),
                                       static_cast<std::uint64_t>(dec.appearance->dim)},
                                      dec.appearance->e));
}

inline FieldDecoder decoder_from_blobs(const std::vector<TensorBlob>& blobs) {
  const TensorBlob& meta = find_blob(blobs, "decoder/meta");
  FieldDecoderConfig cfg;
  cfg.channels = static_cast<int>(meta.data[0]);
  cfg.hidden = static_cast<int>(meta.data[1]);
  cfg.hidden_layers = static_cast<int>(meta.data[2]);
  cfg.m_feat = static_cast<int>(meta.data[3]);
  cfg.posenc_l = static_cast<int>(meta.data[4]);
  cfg.appearance_dim = static_cast<int>(meta.data[5]);
  Rng init_rng(0);  // weights are overwritten below
  FieldDecoder dec(cfg, init_rng);
  load_mlp_blobs(dec.g_sigma, "decoder/gsigma", blobs);
  load_mlp_blobs(dec.g_rgb, "decoder/grgb", blobs);
  if (has_blob(blobs, "appearance/table")) {
    const TensorBlob& table = find_blob(blobs, "appearance/table");
    dec.enable_appearance(static_cast<int>(table.dims[0]));
    dec.appearance->e = doubles_from_blob(table);
  }
  return dec;
}

}  // namespace rf
