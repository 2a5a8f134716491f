#pragma once

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rf/common.hpp"
#include "rf/image.hpp"

namespace rf {

// Loads an 8-bit PNG as linear RGB in [0,1]; RGBA input is alpha-composited
// onto white.
inline Image load_png(const std::string& path) {
  cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw DataError("load_png: cannot read " + path);
  if (mat.depth() != CV_8U) throw DataError("load_png: expected 8-bit image: " + path);

  Image img(mat.cols, mat.rows);
  const int channels = mat.channels();
  for (int row = 0; row < mat.rows; ++row) {
    const unsigned char* line = mat.ptr<unsigned char>(row);
    for (int col = 0; col < mat.cols; ++col) {
      double r, g, b, a = 1.0;
      if (channels == 1) {
        r = g = b = line[col] / 255.0;
      } else {
        const unsigned char* px = line + col * channels;
        b = px[0] / 255.0;
        g = px[1] / 255.0;
        r = px[2] / 255.0;
        if (channels == 4) a = px[3] / 255.0;
      }
      img.at(row, col, 0) = a * r + (1.0 - a);
      img.at(row, col, 1) = a * g + (1.0 - a);
      img.at(row, col, 2) = a * b + (1.0 - a);
    }
  }
  return img;
}

inline unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline void save_png(const std::string& path, const Image& img) {
  cv::Mat mat(img.height, img.width, CV_8UC3);
  for (int row = 0; row < img.height; ++row) {
    unsigned char* line = mat.ptr<unsigned char>(row);
    for (int col = 0; col < img.width; ++col) {
      line[col * 3 + 0] = to_byte(img.at(row, col, 2));
      line[col * 3 + 1] = to_byte(img.at(row, col, 1));
      line[col * 3 + 2] = to_byte(img.at(row, col, 0));
    }
  }
  if (!cv::imwrite(path, mat)) throw DataError("save_png: cannot write " + path);
}

// values: height x width grayscale in [0,1], row-major.
inline void save_png_gray(const std::string& path, int width, int height,
                          const std::vector<double>& values) {
  require(values.size() == std::size_t(width) * height, "save_png_gray: size mismatch");
  cv::Mat mat(height, width, CV_8UC1);
  for (int row = 0; row < height; ++row) {
    unsigned char* line = mat.ptr<unsigned char>(row);
    for (int col = 0; col < width; ++col)
      line[col] = to_byte(values[std::size_t(row) * width + col]);
  }
  if (!cv::imwrite(path, mat)) throw DataError("save_png_gray: cannot write " + path);
}

}  // namespace rf
