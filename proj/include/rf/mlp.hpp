#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "rf/common.hpp"
#include "rf/rng.hpp"

namespace rf {

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out

  DenseLayer() = default;
  DenseLayer(int in_, int out_) : in(in_), out(out_), w(std::size_t(in_) * out_, 0.0), b(out_, 0.0) {}
};

// Fully connected network with ReLU between layers and a raw final output.
struct Mlp {
  std::vector<DenseLayer> layers;

  Mlp() = default;
  // dims = {in, hidden..., out}; He-normal weight init, zero bias.
  Mlp(const std::vector<int>& dims, Rng& rng) {
    require(dims.size() >= 2, "mlp: need at least input and output dims");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      DenseLayer layer(dims[i], dims[i + 1]);
      double std_dev = std::sqrt(2.0 / layer.in);
      for (double& v : layer.w) v = std_dev * rng.normal();
      layers.push_back(std::move(layer));
    }
  }

  int in_dim() const { return layers.front().in; }
  int out_dim() const { return layers.back().out; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }
};

struct MlpGrads {
  std::vector<DenseLayer> layers;  // same shapes, used as buffers

  MlpGrads() = default;
  explicit MlpGrads(const Mlp& net) {
    for (const auto& l : net.layers) layers.emplace_back(l.in, l.out);
  }

  void zero() {
    for (auto& l : layers) {
      std::fill(l.w.begin(), l.w.end(), 0.0);
      std::fill(l.b.begin(), l.b.end(), 0.0);
    }
  }

  void add(const MlpGrads& other) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (std::size_t j = 0; j < layers[i].w.size(); ++j) layers[i].w[j] += other.layers[i].w[j];
      for (std::size_t j = 0; j < layers[i].b.size(); ++j) layers[i].b[j] += other.layers[i].b[j];
    }
  }
};

// Activations recorded by a forward pass: acts[0] is the input, acts[i] the
// post-ReLU output of layer i-1 (raw for the final layer).
struct MlpTape {
  std::vector<std::vector<double>> acts;
};

inline void mlp_forward(const Mlp& net, const double* input, MlpTape& tape) {
  const std::size_t n_layers = net.layers.size();
  tape.acts.resize(n_layers + 1);
  tape.acts[0].assign(input, input + net.in_dim());
  for (std::size_t li = 0; li < n_layers; ++li) {
    const DenseLayer& l = net.layers[li];
    const std::vector<double>& x = tape.acts[li];
    std::vector<double>& y = tape.acts[li + 1];
    y.assign(l.out, 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double* wrow = &l.w[std::size_t(o) * l.in];
      double acc = l.b[o];
      for (int i = 0; i < l.in; ++i) acc += wrow[i] * x[i];
      y[o] = acc;
    }
    if (li + 1 < n_layers)
      for (double& v : y) v = v > 0.0 ? v : 0.0;
  }
}

inline const std::vector<double>& mlp_output(const MlpTape& tape) { return tape.acts.back(); }

// Backpropagates d_out through the taped forward pass. Accumulates into
// grads and, when d_input != nullptr, writes the input gradient there.
inline void mlp_backward(const Mlp& net, const MlpTape& tape, const double* d_out,
                         MlpGrads& grads, double* d_input) {
  const std::size_t n_layers = net.layers.size();
  std::vector<double> delta(d_out, d_out + net.out_dim());
  std::vector<double> delta_prev;
  for (std::size_t li = n_layers; li-- > 0;) {
    const DenseLayer& l = net.layers[li];
    DenseLayer& g = grads.layers[li];
    const std::vector<double>& x = tape.acts[li];
    for (int o = 0; o < l.out; ++o) {
      double d = delta[o];
      g.b[o] += d;
      double* grow = &g.w[std::size_t(o) * l.in];
      for (int i = 0; i < l.in; ++i) grow[i] += d * x[i];
    }
    if (li == 0 && d_input == nullptr) break;
    delta_prev.assign(l.in, 0.0);
    for (int o = 0; o < l.out; ++o) {
      double d = delta[o];
      const double* wrow = &l.w[std::size_t(o) * l.in];
      for (int i = 0; i < l.in; ++i) delta_prev[i] += d * wrow[i];
    }
    if (li > 0) {
      // ReLU mask from the recorded post-activation values.
      for (int i = 0; i < l.in; ++i)
        if (x[i] <= 0.0) delta_prev[i] = 0.0;
    }
    delta.swap(delta_prev);
  }
  if (d_input != nullptr)
    for (int i = 0; i < net.in_dim(); ++i) d_input[i] = delta[i];
}

}  // namespace rf
