#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pgfdc/rng.hpp"
#include "pgfdc/tensor.hpp"

namespace pgfdc {

namespace detail {

// Orthonormalizes the columns of a [r x c] matrix (r >= c) in place using
// modified Gram-Schmidt with a second projection pass for numerical
// orthogonality. Columns are stored as cols[j][i].
inline void mgs_columns(std::vector<std::vector<double>>& cols, Rng& rng) {
  const std::size_t r = cols.empty() ? 0 : cols[0].size();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    for (int attempt = 0;; ++attempt) {
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < k; ++j) {
          double dot = 0.0;
          for (std::size_t i = 0; i < r; ++i) dot += cols[j][i] * cols[k][i];
          for (std::size_t i = 0; i < r; ++i) cols[k][i] -= dot * cols[j][i];
        }
      }
      double norm = 0.0;
      for (std::size_t i = 0; i < r; ++i) norm += cols[k][i] * cols[k][i];
      norm = std::sqrt(norm);
      if (norm > 1e-10) {
        for (std::size_t i = 0; i < r; ++i) cols[k][i] /= norm;
        break;
      }
      // Degenerate draw (vanishingly rare): redraw this column and retry.
      if (attempt > 8) throw std::runtime_error("orthogonal init failed to converge");
      for (std::size_t i = 0; i < r; ++i) cols[k][i] = rng.normal();
    }
  }
}

}  // namespace detail

// Fills w with a (semi-)orthogonal matrix scaled by gain. Tensors with more
// than 2 dims are treated as [dim0, rest] (the usual convention for conv
// kernels). Rows are orthonormal when rows <= cols, columns otherwise.
inline void orthogonal_init(Tensor& w, Rng& rng, double gain = 1.0) {
  if (w.ndim() < 2)
    throw std::invalid_argument("orthogonal_init needs >= 2 dims, got " + shape_str(w.shape()));
  const int rows = w.dim(0);
  const int cols = w.size() / rows;
  const bool tall = rows >= cols;
  const int r = tall ? rows : cols;  // length of each orthonormal vector
  const int c = tall ? cols : rows;  // number of vectors
  std::vector<std::vector<double>> m(static_cast<std::size_t>(c),
                                     std::vector<double>(static_cast<std::size_t>(r)));
  // Draw in row-major order of the logical [rows, cols] matrix so the stream
  // of rng consumption is independent of orientation.
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double v = rng.normal();
      if (tall)
        m[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = v;
      else
        m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
    }
  detail::mgs_columns(m, rng);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      w.data()[i * cols + j] =
          gain * (tall ? m[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]
                       : m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
}

inline constexpr double relu_gain() { return 1.4142135623730951; }  // sqrt(2)

}  // namespace pgfdc
