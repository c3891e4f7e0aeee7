#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace parorb {

// Uniform tensor-product mesh of interior points in a zero-Dirichlet box.
// Interior point k along an axis with spacing h sits at coordinate (k+1)*h;
// function values outside the box are identically zero. Storage is
// lexicographic with the last axis fastest.
class Grid {
 public:
  Grid(int dimension, std::span<const double> extents,
       std::span<const std::int64_t> points_per_axis);

  int dimension() const { return dim_; }
  double extent(int axis) const { return extents_[axis]; }
  std::int64_t points(int axis) const { return points_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double quadrature_weight() const { return weight_; }
  std::int64_t num_points() const { return total_; }
  double coordinate(int axis, std::int64_t k) const {
    return static_cast<double>(k + 1) * spacing_[axis];
  }

  bool operator==(const Grid& other) const;

 private:
  int dim_;
  std::array<double, 3> extents_{};
  std::array<std::int64_t, 3> points_{};
  std::array<double, 3> spacing_{};
  double weight_ = 0.0;
  std::int64_t total_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr build_grid(int dimension, std::span<const double> extents,
                   std::span<const std::int64_t> points_per_axis);

// One real scalar per interior grid point: an orbital amplitude
// (bohr^{-d/2}) or a potential (hartree), depending on context.
struct Field {
  GridPtr grid;
  std::vector<double> values;
};

Field make_field(GridPtr grid);

// Physical coordinates of the flat-indexed point; fills xyz[0 .. d).
void grid_coordinates(const Grid& g, std::int64_t flat, double* xyz);

bool same_grid(const Field& a, const Field& b);
bool all_finite(const Field& f);

// Second-order central-difference Laplacian with zero-Dirichlet boundary.
Field apply_laplacian(const Grid& grid, const Field& f);
Field apply_laplacian(const Field& f);

// Discrete L2 inner product: quadrature_weight * sum_p f(p) g(p).
double inner_product(const Field& f, const Field& g);
double integral(const Field& f);
double l2_norm(const Field& f);

// Bisect every cell: points per axis become 2n+1, extents unchanged.
GridPtr refine_uniform(const Grid& grid);

// Multilinear interpolation onto the bisected grid. Coincident points copy
// coarse values exactly; edge midpoints use linear extrapolation of the
// coarse line so constants and degree-1 data are reproduced exactly.
Field prolongate(const Field& coarse, const GridPtr& fine_grid);

// y += a * x
void axpy(double a, const Field& x, Field& y);
// a + s * b
Field linear_combination(const Field& a, double s, const Field& b);

}  // namespace parorb
