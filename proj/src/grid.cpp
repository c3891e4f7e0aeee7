#include "parorb/grid.hpp"

#include <cmath>
#include <string>

#include "parorb/errors.hpp"
#include "parorb/numeric.hpp"

namespace parorb {

Grid::Grid(int dimension, std::span<const double> extents,
           std::span<const std::int64_t> points_per_axis)
    : dim_(dimension) {
  if (dimension < 1 || dimension > 3) {
    throw InvalidArgument("grid: dimension must be 1, 2 or 3");
  }
  if (std::ssize(extents) != dimension || std::ssize(points_per_axis) != dimension) {
    throw InvalidArgument("grid: extents and points_per_axis must have one entry per axis");
  }
  total_ = 1;
  for (int a = 0; a < dimension; ++a) {
    if (!(extents[a] > 0.0) || !std::isfinite(extents[a])) {
      throw InvalidArgument("grid: extents must be positive and finite");
    }
    if (points_per_axis[a] < 1) {
      throw InvalidArgument("grid: points_per_axis must be >= 1");
    }
    if (__builtin_mul_overflow(total_, points_per_axis[a], &total_)) {
      throw InvalidArgument("grid: total point count overflows the index type");
    }
    extents_[a] = extents[a];
    points_[a] = points_per_axis[a];
    spacing_[a] = extents[a] / static_cast<double>(points_per_axis[a] + 1);
  }
  // Reject sizes the address space cannot hold even if the multiply fit.
  if (total_ > (std::int64_t{1} << 56)) {
    throw InvalidArgument("grid: total point count overflows the index type");
  }
  weight_ = 1.0;
  for (int a = 0; a < dim_; ++a) weight_ *= spacing_[a];
}

bool Grid::operator==(const Grid& other) const {
  if (dim_ != other.dim_) return false;
  for (int a = 0; a < dim_; ++a) {
    if (extents_[a] != other.extents_[a] || points_[a] != other.points_[a]) return false;
  }
  return true;
}

GridPtr build_grid(int dimension, std::span<const double> extents,
                   std::span<const std::int64_t> points_per_axis) {
  return std::make_shared<const Grid>(dimension, extents, points_per_axis);
}

Field make_field(GridPtr grid) {
  Field f;
  f.values.assign(static_cast<std::size_t>(grid->num_points()), 0.0);
  f.grid = std::move(grid);
  return f;
}

void grid_coordinates(const Grid& g, std::int64_t flat, double* xyz) {
  for (int a = g.dimension() - 1; a >= 0; --a) {
    const std::int64_t n = g.points(a);
    xyz[a] = g.coordinate(a, flat % n);
    flat /= n;
  }
}

bool same_grid(const Field& a, const Field& b) {
  if (!a.grid || !b.grid) return false;
  return a.grid == b.grid || *a.grid == *b.grid;
}

bool all_finite(const Field& f) {
  for (double v : f.values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

void check_field(const Grid& grid, const Field& f, const char* op) {
  if (!f.grid || !(*f.grid == grid) ||
      std::ssize(f.values) != grid.num_points()) {
    throw InvalidArgument(std::string(op) + ": field does not belong to the grid");
  }
}

}  // namespace

Field apply_laplacian(const Grid& grid, const Field& f) {
  check_field(grid, f, "apply_laplacian");
  Field out = make_field(f.grid);
  const double* src = f.values.data();
  double* dst = out.values.data();
  const int d = grid.dimension();

  for (int axis = 0; axis < d; ++axis) {
    const std::int64_t n = grid.points(axis);
    std::int64_t outer = 1;
    for (int k = 0; k < axis; ++k) outer *= grid.points(k);
    std::int64_t inner = 1;
    for (int k = axis + 1; k < d; ++k) inner *= grid.points(k);
    const double inv_h2 = 1.0 / (grid.spacing(axis) * grid.spacing(axis));

    for (std::int64_t o = 0; o < outer; ++o) {
      const std::int64_t base = o * n * inner;
      for (std::int64_t in = 0; in < inner; ++in) {
        for (std::int64_t i = 0; i < n; ++i) {
          const std::int64_t idx = base + i * inner + in;
          const double left = i > 0 ? src[idx - inner] : 0.0;
          const double right = i + 1 < n ? src[idx + inner] : 0.0;
          dst[idx] += (left - 2.0 * src[idx] + right) * inv_h2;
        }
      }
    }
  }
  return out;
}

Field apply_laplacian(const Field& f) { return apply_laplacian(*f.grid, f); }

double inner_product(const Field& f, const Field& g) {
  if (!same_grid(f, g)) throw InvalidArgument("inner_product: grid mismatch");
  return f.grid->quadrature_weight() * stable_dot(f.values, g.values);
}

double integral(const Field& f) {
  return f.grid->quadrature_weight() * stable_sum(f.values);
}

double l2_norm(const Field& f) { return std::sqrt(inner_product(f, f)); }

GridPtr refine_uniform(const Grid& grid) {
  std::array<double, 3> extents{};
  std::array<std::int64_t, 3> points{};
  for (int a = 0; a < grid.dimension(); ++a) {
    extents[a] = grid.extent(a);
    if (__builtin_mul_overflow(grid.points(a), std::int64_t{2}, &points[a]) ||
        __builtin_add_overflow(points[a], std::int64_t{1}, &points[a])) {
      throw InvalidArgument("refine_uniform: refined point count overflows");
    }
  }
  return build_grid(grid.dimension(),
                    std::span<const double>(extents.data(), grid.dimension()),
                    std::span<const std::int64_t>(points.data(), grid.dimension()));
}

Field prolongate(const Field& coarse, const GridPtr& fine_grid) {
  const Grid& cg = *coarse.grid;
  const Grid& fg = *fine_grid;
  if (cg.dimension() != fg.dimension()) {
    throw InvalidArgument("prolongate: grids are not in refinement relation");
  }
  for (int a = 0; a < cg.dimension(); ++a) {
    if (fg.points(a) != 2 * cg.points(a) + 1 || fg.extent(a) != cg.extent(a)) {
      throw InvalidArgument("prolongate: grids are not in refinement relation");
    }
  }

  const int d = cg.dimension();
  std::vector<double> cur = coarse.values;
  std::array<std::int64_t, 3> size{};
  for (int a = 0; a < d; ++a) size[a] = cg.points(a);

  for (int axis = 0; axis < d; ++axis) {
    const std::int64_t n = size[axis];
    const std::int64_t m = 2 * n + 1;
    std::int64_t outer = 1;
    for (int k = 0; k < axis; ++k) outer *= size[k];
    std::int64_t inner = 1;
    for (int k = axis + 1; k < d; ++k) inner *= size[k];

    std::vector<double> next(static_cast<std::size_t>(outer * m * inner));
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t in = 0; in < inner; ++in) {
        const std::int64_t src_base = o * n * inner + in;
        const std::int64_t dst_base = o * m * inner + in;
        // Coarse line with virtual values past its ends, extrapolated
        // linearly so degree-1 data survives interpolation at the edges.
        auto line = [&](std::int64_t i) -> double {
          if (i < 0) {
            return n >= 2 ? 2.0 * cur[src_base] - cur[src_base + inner]
                          : cur[src_base];
          }
          if (i >= n) {
            return n >= 2 ? 2.0 * cur[src_base + (n - 1) * inner] -
                                cur[src_base + (n - 2) * inner]
                          : cur[src_base + (n - 1) * inner];
          }
          return cur[src_base + i * inner];
        };
        for (std::int64_t j = 0; j < m; ++j) {
          const double v = (j % 2 == 1)
                               ? line((j - 1) / 2)
                               : 0.5 * (line(j / 2 - 1) + line(j / 2));
          next[static_cast<std::size_t>(dst_base + j * inner)] = v;
        }
      }
    }
    cur = std::move(next);
    size[axis] = m;
  }

  Field out;
  out.grid = fine_grid;
  out.values = std::move(cur);
  return out;
}

void axpy(double a, const Field& x, Field& y) {
  if (!same_grid(x, y)) throw InvalidArgument("axpy: grid mismatch");
  for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += a * x.values[i];
}

Field linear_combination(const Field& a, double s, const Field& b) {
  if (!same_grid(a, b)) throw InvalidArgument("linear_combination: grid mismatch");
  Field out;
  out.grid = a.grid;
  out.values.resize(a.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    out.values[i] = a.values[i] + s * b.values[i];
  }
  return out;
}

}  // namespace parorb
