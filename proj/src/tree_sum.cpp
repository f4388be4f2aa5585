#include "spinsim/tree_sum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spinsim/errors.hpp"

namespace spinsim {

double GaussianWeights::operator()(double dist2) const noexcept {
  return normalization * std::exp(-precision * dist2);
}

namespace {

using Vec3 = std::array<double, 3>;

double dist2(const Vec3& a, const Vec3& b) noexcept {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

struct Node {
  std::size_t begin = 0;
  std::size_t end = 0;
  int left = -1;
  int right = -1;
  Vec3 centroid{};
  double diagonal = 0.0;

  bool leaf() const noexcept { return left < 0; }
};

class Tree {
 public:
  Tree(const PointCloud& points, std::size_t leaf_size) : points_(points), leaf_size_(leaf_size) {
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * points.size() / std::max<std::size_t>(leaf_size, 1) + 2);
    build(0, points.size());
  }

  /// Sum of x over the points of each node, children before parents.
  std::vector<double> cell_sums(std::span<const double> x) const {
    std::vector<double> sums(nodes_.size(), 0.0);
    for (std::size_t k = nodes_.size(); k-- > 0;) {
      const Node& node = nodes_[k];
      if (node.leaf()) {
        double s = 0.0;
        for (std::size_t p = node.begin; p < node.end; ++p) s += x[order_[p]];
        sums[k] = s;
      } else {
        sums[k] = sums[static_cast<std::size_t>(node.left)] +
                  sums[static_cast<std::size_t>(node.right)];
      }
    }
    return sums;
  }

  double evaluate(const Vec3& target, const GaussianWeights& kernel, std::span<const double> x,
                  std::span<const double> sums, double theta) const {
    double acc = 0.0;
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
      const auto index = static_cast<std::size_t>(stack.back());
      stack.pop_back();
      const double d2 = dist2(target, node.centroid);
      if (node.diagonal * node.diagonal < theta * theta * d2) {
        acc += kernel(d2) * sums[index];
      } else if (node.leaf()) {
        for (std::size_t p = node.begin; p < node.end; ++p) {
          const std::size_t j = order_[p];
          acc += kernel(dist2(target, points_.coords[j])) * x[j];
        }
      } else {
        stack.push_back(node.right);
        stack.push_back(node.left);
      }
    }
    return acc;
  }

 private:
  int build(std::size_t begin, std::size_t end) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{begin, end});

    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};
    Vec3 centroid{0.0, 0.0, 0.0};
    for (std::size_t p = begin; p < end; ++p) {
      const Vec3& z = points_.coords[order_[p]];
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], z[a]);
        hi[a] = std::max(hi[a], z[a]);
        centroid[a] += z[a];
      }
    }
    const double count = static_cast<double>(end - begin);
    for (double& c : centroid) c /= count;
    nodes_[static_cast<std::size_t>(index)].centroid = centroid;
    nodes_[static_cast<std::size_t>(index)].diagonal = std::sqrt(dist2(lo, hi));

    if (end - begin <= leaf_size_) return index;
    int axis = 0;
    for (int a = 1; a < 3; ++a) {
      if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
    }
    if (hi[axis] == lo[axis]) return index;  // coincident points stay in one leaf

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<long>(begin),
                     order_.begin() + static_cast<long>(mid),
                     order_.begin() + static_cast<long>(end),
                     [&](std::size_t a, std::size_t b) {
                       return points_.coords[a][axis] < points_.coords[b][axis];
                     });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[static_cast<std::size_t>(index)].left = left;
    nodes_[static_cast<std::size_t>(index)].right = right;
    return index;
  }

  const PointCloud& points_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

void validate(const PointCloud& points, std::span<const double> x) {
  if (points.dims < 1 || points.dims > 3) {
    throw ConfigError("sum_tree: dimension must be 1, 2 or 3, got " +
                      std::to_string(points.dims));
  }
  if (x.size() != points.size()) {
    throw ConfigError("sum_tree: input length " + std::to_string(x.size()) +
                      " does not match point count " + std::to_string(points.size()));
  }
}

bool all_coincident(const PointCloud& points) {
  return std::all_of(points.coords.begin(), points.coords.end(),
                     [&](const Vec3& z) { return z == points.coords.front(); });
}

}  // namespace

std::vector<double> sum_dense_points(const PointCloud& points, const GaussianWeights& kernel,
                                     std::span<const double> x, Exec exec) {
  validate(points, x);
  const auto n = static_cast<long>(points.size());
  std::vector<double> out(points.size(), 0.0);
  auto row = [&](long i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < points.size(); ++j) {
      acc += kernel(dist2(points.coords[static_cast<std::size_t>(i)], points.coords[j])) * x[j];
    }
    out[static_cast<std::size_t>(i)] = acc;
  };
  if (exec == Exec::serial) {
    for (long i = 0; i < n; ++i) row(i);
  } else {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) row(i);
  }
  return out;
}

std::vector<double> sum_tree(const PointCloud& points, const GaussianWeights& kernel,
                             std::span<const double> x, const TreeConfig& cfg, Exec exec) {
  validate(points, x);
  if (cfg.leaf_size < 1) throw ConfigError("sum_tree: leaf_size must be >= 1");
  if (!(cfg.opening_angle > 0.0 && cfg.opening_angle <= 1.0)) {
    throw ConfigError("sum_tree: opening_angle must lie in (0, 1]");
  }
  if (points.size() == 0) return {};
  if (all_coincident(points)) return sum_dense_points(points, kernel, x, exec);

  const Tree tree(points, cfg.leaf_size);
  const std::vector<double> sums = tree.cell_sums(x);
  std::vector<double> out(points.size(), 0.0);
  const auto n = static_cast<long>(points.size());
  const double theta = cfg.opening_angle;
  if (exec == Exec::serial) {
    for (long i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(i);
      out[s] = tree.evaluate(points.coords[s], kernel, x, sums, theta);
    }
  } else {
#pragma omp parallel for schedule(dynamic, 64)
    for (long i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(i);
      out[s] = tree.evaluate(points.coords[s], kernel, x, sums, theta);
    }
  }
  return out;
}

}  // namespace spinsim
