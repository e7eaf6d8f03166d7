#include "freqalloc/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "freqalloc/error.hpp"
#include "freqalloc/rng.hpp"

namespace freqalloc {

namespace {

// Separation checks allow for rounding in lattice coordinates.
constexpr double kSeparationSlack = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void require_spacing(double d) {
  require(std::isfinite(d) && d > 0.0, "spacing must be positive and finite");
}

void validate_path_loss(PathLoss loss) {
  require(std::isfinite(loss.p0) && loss.p0 > 0.0, "p0 must be positive");
  require(std::isfinite(loss.eta) && loss.eta >= 1.0, "eta must be >= 1");
}

}  // namespace

Topology Topology::build(std::vector<Point> positions, int dimension, PathLoss loss, double min_sep,
                         Layout layout, std::size_t rows, std::size_t cols, double spacing,
                         double exact_spacing) {
  require(!positions.empty(), "topology needs at least one cluster");
  require(dimension == 1 || dimension == 2, "dimension must be 1 or 2");
  validate_path_loss(loss);
  for (const auto& p : positions) {
    require(std::isfinite(p.x) && std::isfinite(p.y), "positions must be finite");
  }

  Topology t;
  const std::size_t n = positions.size();
  if (dimension == 1) {
    for (auto& p : positions) p.y = 0.0;
  }
  t.positions_ = std::move(positions);
  t.dist_.assign(n * n, 0.0);
  t.gain_.assign(n * n, 0.0);

  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = exact_spacing > 0.0
                           ? static_cast<double>(j - i) * exact_spacing
                           : std::hypot(t.positions_[i].x - t.positions_[j].x,
                                        t.positions_[i].y - t.positions_[j].y);
      require(d > 0.0, "clusters " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      const double g = loss.p0 / std::pow(d, loss.eta);
      t.dist_[i * n + j] = t.dist_[j * n + i] = d;
      t.gain_[i * n + j] = t.gain_[j * n + i] = g;
      closest = std::min(closest, d);
    }
  }
  if (min_sep <= 0.0) min_sep = closest;
  require(closest >= min_sep * (1.0 - kSeparationSlack),
          "pairwise distance below the minimum separation");

  t.loss_ = loss;
  t.min_sep_ = min_sep;
  t.dimension_ = dimension;
  t.layout_ = layout;
  t.rows_ = rows;
  t.cols_ = cols;
  t.spacing_ = spacing;
  return t;
}

Topology Topology::from_positions(std::vector<Point> positions, int dimension, PathLoss loss) {
  const std::size_t n = positions.size();
  return build(std::move(positions), dimension, loss, 0.0, Layout::Custom, 1, n, 0.0);
}

std::vector<double> Topology::adjacent_gaps() const {
  std::vector<double> xs;
  xs.reserve(size());
  for (const auto& p : positions_) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  std::vector<double> gaps;
  for (std::size_t i = 1; i < xs.size(); ++i) gaps.push_back(xs[i] - xs[i - 1]);
  return gaps;
}

std::vector<double> Topology::nearest_neighbor_distances() const {
  const std::size_t n = size();
  std::vector<double> out(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) out[i] = std::min(out[i], distance(i, j));
    }
  }
  return out;
}

Topology make_uniform_linear_array(std::size_t n, double d, PathLoss loss) {
  require(n >= 2, "uniform linear array needs n >= 2");
  require_spacing(d);
  std::vector<Point> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[i].x = static_cast<double>(i) * d;
  // Distances are |i-j|*d exactly rather than differences of rounded positions.
  return Topology::build(std::move(pos), 1, loss, d, Layout::UniformLinear, 1, n, d, d);
}

Topology make_random_linear_array(std::size_t n, double d, double min_sep, std::uint64_t seed,
                                  PathLoss loss) {
  require(n >= 2, "random linear array needs n >= 2");
  require_spacing(d);
  require(std::isfinite(min_sep) && min_sep > 0.0, "min_sep must be positive");
  // n clusters in a span of (n-1)d need (n-1) gaps of at least min_sep.
  require(static_cast<double>(n) * min_sep <= static_cast<double>(n - 1) * d + min_sep,
          "infeasible packing: min_sep exceeds the mean spacing");

  const double span = static_cast<double>(n - 1) * d;
  const double slack = std::max(0.0, span - static_cast<double>(n - 1) * min_sep);

  // Sorted uniform offsets in [0, slack] plus k*min_sep give a uniform draw
  // over all gap vectors with every gap >= min_sep and endpoints pinned.
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> offsets(n - 2);
  for (auto& u : offsets) u = unit(rng) * slack;
  std::sort(offsets.begin(), offsets.end());

  std::vector<Point> pos(n);
  pos.front().x = 0.0;
  pos.back().x = span;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    pos[k].x = static_cast<double>(k) * min_sep + offsets[k - 1];
  }
  return Topology::build(std::move(pos), 1, loss, min_sep, Layout::RandomLinear, 1, n, d);
}

Topology make_rectangular_lattice(std::size_t rows, std::size_t cols, double d, PathLoss loss) {
  require(rows >= 1 && cols >= 1 && rows * cols >= 2, "lattice needs at least two clusters");
  require_spacing(d);
  std::vector<Point> pos;
  pos.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      pos.push_back({static_cast<double>(i) * d, static_cast<double>(j) * d});
    }
  }
  return Topology::build(std::move(pos), 2, loss, d, Layout::Rectangular, rows, cols, d);
}

Topology make_hexagonal_lattice(std::size_t rows, std::size_t cols, double d, PathLoss loss) {
  require(rows >= 1 && cols >= 1 && rows * cols >= 2, "lattice needs at least two clusters");
  require_spacing(d);
  const double pitch = d * std::sqrt(3.0) / 2.0;
  std::vector<Point> pos;
  pos.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const double shift = (i % 2 == 1) ? d / 2.0 : 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      pos.push_back({static_cast<double>(j) * d + shift, static_cast<double>(i) * pitch});
    }
  }
  return Topology::build(std::move(pos), 2, loss, d, Layout::Hexagonal, rows, cols, d);
}

}  // namespace freqalloc
