#pragma once

#include <cstddef>
#include <vector>

#include "rf/common.hpp"

namespace rf {

// Row-major RGB image with values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> px;  // height * width * 3

  Image() = default;
  Image(int w, int h) : width(w), height(h), px(std::size_t(w) * h * 3, 0.0) {}

  double& at(int row, int col, int ch) {
    return px[(std::size_t(row) * width + col) * 3 + ch];
  }
  double at(int row, int col, int ch) const {
    return px[(std::size_t(row) * width + col) * 3 + ch];
  }
};

}  // namespace rf
