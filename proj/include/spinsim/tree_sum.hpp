#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "spinsim/parallel.hpp"

namespace spinsim {

/// Accuracy controls of the single-tree summation.
struct TreeConfig {
  std::size_t leaf_size = 16;
  /// A cell is summarised when its diagonal is below opening_angle times the
  /// distance from the target to the cell centroid. Must lie in (0, 1].
  double opening_angle = 0.5;
};

/// Sites in R^d, d in {1, 2, 3}. Unused coordinates are zero.
struct PointCloud {
  int dims = 1;
  std::vector<std::array<double, 3>> coords;

  std::size_t size() const noexcept { return coords.size(); }
};

/// Isotropic Gaussian weights s_ij = normalization * exp(-precision |z_i - z_j|^2).
struct GaussianWeights {
  double precision = 1.0;
  double normalization = 1.0;

  double operator()(double dist2) const noexcept;
};

/// Barnes-Hut style potentials with monopole (cell-sum at geometric centroid)
/// approximation. Converges to sum_dense_points as opening_angle -> 0. Falls
/// back to the dense sum when every point coincides.
std::vector<double> sum_tree(const PointCloud& points, const GaussianWeights& kernel,
                             std::span<const double> x, const TreeConfig& cfg,
                             Exec exec = Exec::parallel);

/// O(n^2) reference for sum_tree.
std::vector<double> sum_dense_points(const PointCloud& points, const GaussianWeights& kernel,
                                     std::span<const double> x, Exec exec = Exec::parallel);

}  // namespace spinsim
