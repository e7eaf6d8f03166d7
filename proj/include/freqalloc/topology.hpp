#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace freqalloc {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Path-loss law: received power P0 / d^eta.
struct PathLoss {
  double p0 = 1.0;
  double eta = 2.0;
};

/// How a topology was generated. Lattices index clusters row-major
/// (index = row * cols + col).
enum class Layout { UniformLinear, RandomLinear, Rectangular, Hexagonal, Custom };

/// Immutable cluster placement with a dense pairwise distance matrix and the
/// matching path-loss gains. Safe to share between simulation replicas.
class Topology {
 public:
  /// Builds a topology from explicit coordinates. `dimension` is 1 (y ignored)
  /// or 2. The minimum separation is taken as the smallest pairwise distance.
  static Topology from_positions(std::vector<Point> positions, int dimension, PathLoss loss);

  std::size_t size() const { return positions_.size(); }
  int dimension() const { return dimension_; }
  std::span<const Point> positions() const { return positions_; }

  double distance(std::size_t i, std::size_t j) const { return dist_[i * size() + j]; }
  /// P0 / d_ij^eta for i != j, zero on the diagonal.
  double gain(std::size_t i, std::size_t j) const { return gain_[i * size() + j]; }
  std::span<const double> gain_row(std::size_t i) const {
    return std::span<const double>(gain_).subspan(i * size(), size());
  }

  double p0() const { return loss_.p0; }
  double eta() const { return loss_.eta; }
  PathLoss path_loss() const { return loss_; }
  double min_sep() const { return min_sep_; }

  Layout layout() const { return layout_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  /// Nominal spacing d used by the generator (mean spacing for random arrays).
  double spacing() const { return spacing_; }

  /// Gaps between consecutive clusters sorted by x; only meaningful in 1-D.
  std::vector<double> adjacent_gaps() const;
  /// Distance from each cluster to its nearest neighbour.
  std::vector<double> nearest_neighbor_distances() const;

 private:
  Topology() = default;
  static Topology build(std::vector<Point> positions, int dimension, PathLoss loss, double min_sep,
                        Layout layout, std::size_t rows, std::size_t cols, double spacing,
                        double exact_spacing = 0.0);

  std::vector<Point> positions_;
  std::vector<double> dist_;
  std::vector<double> gain_;
  PathLoss loss_;
  double min_sep_ = 0.0;
  int dimension_ = 1;
  Layout layout_ = Layout::Custom;
  std::size_t rows_ = 1;
  std::size_t cols_ = 0;
  double spacing_ = 0.0;

  friend Topology make_uniform_linear_array(std::size_t, double, PathLoss);
  friend Topology make_random_linear_array(std::size_t, double, double, std::uint64_t, PathLoss);
  friend Topology make_rectangular_lattice(std::size_t, std::size_t, double, PathLoss);
  friend Topology make_hexagonal_lattice(std::size_t, std::size_t, double, PathLoss);
};

/// Clusters at 0, d, ..., (n-1)d.
Topology make_uniform_linear_array(std::size_t n, double d, PathLoss loss = {});

/// n clusters in [0, (n-1)d] with the endpoints pinned and every pair at least
/// `min_sep` apart. Interior gaps are drawn uniformly from the feasible set;
/// the result is a pure function of the arguments.
Topology make_random_linear_array(std::size_t n, double d, double min_sep, std::uint64_t seed,
                                  PathLoss loss = {});

/// rows x cols grid with spacing d.
Topology make_rectangular_lattice(std::size_t rows, std::size_t cols, double d, PathLoss loss = {});

/// Triangular (hexagonal-packing) lattice built from offset rows: odd rows
/// shift by d/2 and the row pitch is d*sqrt(3)/2, so nearest neighbours are
/// exactly d apart.
Topology make_hexagonal_lattice(std::size_t rows, std::size_t cols, double d, PathLoss loss = {});

}  // namespace freqalloc
