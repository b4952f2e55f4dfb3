#pragma once

#include <cstddef>
#include <vector>

#include "lsf/common.hpp"

namespace lsf {

/// Dense proposal-feature tensor of shape count x height x width x channels,
/// flat row-major with the channel fastest.
struct FeatureBlock {
  int count = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  static FeatureBlock zeros(int n, int h, int w, int m) {
    FeatureBlock b;
    b.count = n;
    b.height = h;
    b.width = w;
    b.channels = m;
    b.data.assign(static_cast<std::size_t>(n) * h * w * m, 0.0);
    return b;
  }

  std::size_t proposal_size() const {
    return static_cast<std::size_t>(height) * width * channels;
  }

  std::size_t index(int i, int y, int x, int c) const {
    return ((static_cast<std::size_t>(i) * height + y) * width + x) * channels + c;
  }

  double& at(int i, int y, int x, int c) { return data[index(i, y, x, c)]; }
  double at(int i, int y, int x, int c) const { return data[index(i, y, x, c)]; }

  const double* proposal(int i) const { return data.data() + i * proposal_size(); }
  double* proposal(int i) { return data.data() + i * proposal_size(); }

  bool same_shape(const FeatureBlock& o) const {
    return count == o.count && height == o.height && width == o.width && channels == o.channels;
  }
};

/// Minimal dense matrix (row-major) for the graph-alignment algebra.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  static Matrix zeros(int r, int c) {
    Matrix m;
    m.rows = r;
    m.cols = c;
    m.v.assign(static_cast<std::size_t>(r) * c, 0.0);
    return m;
  }

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
};

}  // namespace lsf
