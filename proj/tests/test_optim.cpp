#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rf/optim.hpp"
#include "rf/rng.hpp"

using namespace rf;

TEST_CASE("adam leaves parameters unchanged for zero gradient") {
  std::vector<double> params{1.0, -2.0, 3.5};
  std::vector<double> grads(3, 0.0);
  AdamState st(3);
  adam_step(params, grads, st, 0.1);
  CHECK(params == std::vector<double>{1.0, -2.0, 3.5});
}

TEST_CASE("first adam step moves against the gradient sign at lr magnitude") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> params{rng.normal()};
    std::vector<double> grads{rng.normal() + (rng.uniform() < 0.5 ? -2.0 : 2.0)};
    double before = params[0];
    AdamState st(1);
    const double lr = 0.01;
    adam_step(params, grads, st, lr);
    double update = params[0] - before;
    // first-step closed form: -lr * g / (|g| + eps') ~= -lr * sign(g)
    CHECK(std::abs(update + lr * (grads[0] > 0 ? 1.0 : -1.0)) < 1e-5);
  }
}

TEST_CASE("adam is deterministic") {
  Rng rng(2);
  std::vector<double> p1{0.5, -0.5}, p2{0.5, -0.5};
  AdamState s1(2), s2(2);
  for (int step = 0; step < 20; ++step) {
    std::vector<double> g{rng.normal(), rng.normal()};
    adam_step(p1, g, s1, 0.05);
    adam_step(p2, g, s2, 0.05);
  }
  CHECK(p1 == p2);
}

TEST_CASE("adam rejects shape mismatches") {
  std::vector<double> params{1.0, 2.0};
  std::vector<double> grads{0.1};
  AdamState st(2);
  CHECK_THROWS_AS(adam_step(params, grads, st, 0.1), std::invalid_argument);
}

TEST_CASE("warmup cosine schedule hits its endpoints") {
  const double base = 0.01;
  const std::int64_t warmup = 512, total = 30000;
  CHECK(warmup_cosine_lr(0, base, warmup, total) == 0.0);
  CHECK(warmup_cosine_lr(warmup, base, warmup, total) == Catch::Approx(base).margin(1e-15));
  CHECK(warmup_cosine_lr(total, base, warmup, total) == 0.0);
  CHECK(warmup_cosine_lr(total + 5000, base, warmup, total) == 0.0);
  std::int64_t mid = warmup + (total - warmup) / 2;
  CHECK(warmup_cosine_lr(mid, base, warmup, total) == Catch::Approx(base / 2).margin(1e-12));
}

TEST_CASE("warmup ramp is linear") {
  const double base = 0.4;
  CHECK(warmup_cosine_lr(128, base, 512, 1000) == Catch::Approx(base * 128.0 / 512.0));
  CHECK(warmup_cosine_lr(256, base, 512, 1000) == Catch::Approx(base / 2));
}

TEST_CASE("grouped adam applies per-group base rates") {
  std::vector<double> pa{0.0}, pb{0.0};
  std::vector<double> ga{1.0}, gb{1.0};
  Adam opt;
  opt.attach(&pa, &ga, 0.1);
  opt.attach(&pb, &gb, 0.01);
  opt.step(1.0);
  CHECK(std::abs(pa[0] + 0.1) < 1e-6);
  CHECK(std::abs(pb[0] + 0.01) < 1e-6);
  // scale multiplies every group
  std::vector<double> pc{0.0};
  std::vector<double> gc{1.0};
  Adam opt2;
  opt2.attach(&pc, &gc, 0.1);
  opt2.step(0.5);
  CHECK(std::abs(pc[0] + 0.05) < 1e-6);
}
