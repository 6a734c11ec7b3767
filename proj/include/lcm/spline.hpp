#pragma once

// Natural cubic splines (zero second derivative at both ends) in one and three
// dimensions. Queries outside the knot hull are clamped to the hull.

#include <array>
#include <span>
#include <vector>

namespace lcm {

// Knot interval containing x (after clamping) and the local coordinate.
struct Cell {
  int index = 0;     // left knot
  double t = 0.0;    // (x - x_i) / h in [0,1]
  double h = 1.0;
};

Cell locate(std::span<const double> knots, double x);

// Weights of y_i, y_{i+1}, M_i, M_{i+1} in the cubic on a cell.
struct CellBasis {
  std::array<double, 2> value{};
  std::array<double, 2> curvature{};
};

CellBasis cell_basis(const Cell& c);

// Dense n x n matrix K with M = K y, M the second derivatives of the natural
// spline through (knots, y). Row-major.
std::vector<double> second_derivative_operator(std::span<const double> knots);

// Direct 1-D evaluation (solves for M each call).
double natural_spline(std::span<const double> knots, std::span<const double> values, double x);

// Reference 3-D interpolation by successive 1-D passes: along the last axis,
// then the middle, then the first. values are row-major [n0][n1][n2].
double interpolate_nested(std::span<const double> axis0, std::span<const double> axis1,
                          std::span<const double> axis2, std::span<const double> values,
                          double x0, double x1, double x2);

// Shared per-axis data for TensorSpline3.
struct SplineAxis {
  std::vector<double> knots;
  std::vector<double> curvature_op;  // second_derivative_operator(knots)

  explicit SplineAxis(std::vector<double> k);
  int size() const { return static_cast<int>(knots.size()); }
};

// Tensor-product natural cubic spline on a 3-D grid. Evaluation is the same
// function as interpolate_nested, computed from eight precomputed
// second-derivative tensors so a query costs 64 multiply-adds.
class TensorSpline3 {
 public:
  TensorSpline3() = default;
  TensorSpline3(const SplineAxis* a0, const SplineAxis* a1, const SplineAxis* a2,
                std::span<const double> values);

  double operator()(double x0, double x1, double x2) const;

  // Pre-located first two coordinates, for evaluating many x2 at fixed (x0, x1).
  struct Partial {
    int i0 = 0, i1 = 0;
    CellBasis b0, b1;
  };
  Partial prepare(double x0, double x1) const;
  double evaluate(const Partial& p, double x2) const;

 private:
  const SplineAxis* ax_[3] = {nullptr, nullptr, nullptr};
  int n1_ = 0, n2_ = 0;
  // [i0][i1][i2][8], inner index bit 2 = axis0 curvature, bit 1 = axis1, bit 0 = axis2
  std::vector<double> coef_;
};

}  // namespace lcm
