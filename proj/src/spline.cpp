#include "lcm/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace lcm {

Cell locate(std::span<const double> knots, double x) {
  const int n = static_cast<int>(knots.size());
  Cell c;
  if (n < 2) return c;
  if (x <= knots.front()) {
    c.index = 0;
    c.h = knots[1] - knots[0];
    c.t = 0.0;
    return c;
  }
  if (x >= knots.back()) {
    c.index = n - 2;
    c.h = knots[n - 1] - knots[n - 2];
    c.t = 1.0;
    return c;
  }
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  c.index = static_cast<int>(it - knots.begin()) - 1;
  c.h = knots[c.index + 1] - knots[c.index];
  c.t = (x - knots[c.index]) / c.h;
  return c;
}

CellBasis cell_basis(const Cell& c) {
  const double t = c.t, s = 1.0 - c.t;
  const double k = c.h * c.h / 6.0;
  CellBasis b;
  b.value = {s, t};
  b.curvature = {k * (s * s * s - s), k * (t * t * t - t)};
  return b;
}

std::vector<double> second_derivative_operator(std::span<const double> knots) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(knots.size());
  if (n < 2) throw std::invalid_argument("second_derivative_operator: need >= 2 knots");
  for (std::ptrdiff_t i = 1; i < n; ++i)
    if (!(knots[i] > knots[i - 1])) throw std::invalid_argument("spline knots must be strictly increasing");
  std::vector<double> K(static_cast<std::size_t>(n) * n, 0.0);
  if (n == 2) return K;
  // Interior system A m = B y, A tridiagonal (m = M_1..M_{n-2}); K = A^{-1} B
  // padded with zero rows for the natural end conditions.
  const std::ptrdiff_t m = n - 2;
  std::vector<double> sub(m), diag(m), sup(m);
  std::vector<double> B(static_cast<std::size_t>(m) * n, 0.0);
  for (std::ptrdiff_t r = 0; r < m; ++r) {
    const std::ptrdiff_t i = r + 1;
    const double hl = knots[i] - knots[i - 1], hr = knots[i + 1] - knots[i];
    sub[r] = hl / 6.0;
    diag[r] = (hl + hr) / 3.0;
    sup[r] = hr / 6.0;
    B[r * n + i - 1] = 1.0 / hl;
    B[r * n + i] = -1.0 / hl - 1.0 / hr;
    B[r * n + i + 1] = 1.0 / hr;
  }
  // Thomas algorithm applied to every column of B at once.
  for (std::ptrdiff_t r = 1; r < m; ++r) {
    const double f = sub[r] / diag[r - 1];
    diag[r] -= f * sup[r - 1];
    for (std::ptrdiff_t j = 0; j < n; ++j) B[r * n + j] -= f * B[(r - 1) * n + j];
  }
  for (std::ptrdiff_t j = 0; j < n; ++j) B[(m - 1) * n + j] /= diag[m - 1];
  for (std::ptrdiff_t r = m - 2; r >= 0; --r)
    for (std::ptrdiff_t j = 0; j < n; ++j) B[r * n + j] = (B[r * n + j] - sup[r] * B[(r + 1) * n + j]) / diag[r];
  for (std::ptrdiff_t r = 0; r < m; ++r)
    std::copy(B.begin() + r * n, B.begin() + (r + 1) * n, K.begin() + (r + 1) * n);
  return K;
}

double natural_spline(std::span<const double> knots, std::span<const double> values, double x) {
  const int n = static_cast<int>(knots.size());
  const auto K = second_derivative_operator(knots);
  const Cell c = locate(knots, x);
  const CellBasis b = cell_basis(c);
  double m0 = 0.0, m1 = 0.0;
  for (int j = 0; j < n; ++j) {
    m0 += K[c.index * n + j] * values[j];
    m1 += K[(c.index + 1) * n + j] * values[j];
  }
  return b.value[0] * values[c.index] + b.value[1] * values[c.index + 1] + b.curvature[0] * m0 +
         b.curvature[1] * m1;
}

double interpolate_nested(std::span<const double> axis0, std::span<const double> axis1,
                          std::span<const double> axis2, std::span<const double> values,
                          double x0, double x1, double x2) {
  const std::size_t n0 = axis0.size(), n1 = axis1.size(), n2 = axis2.size();
  std::vector<double> plane(n0 * n1);
  for (std::size_t i = 0; i < n0 * n1; ++i) plane[i] = natural_spline(axis2, values.subspan(i * n2, n2), x2);
  std::vector<double> line(n0);
  for (std::size_t i = 0; i < n0; ++i) line[i] = natural_spline(axis1, std::span(plane).subspan(i * n1, n1), x1);
  return natural_spline(axis0, line, x0);
}

SplineAxis::SplineAxis(std::vector<double> k) : knots(std::move(k)), curvature_op(second_derivative_operator(knots)) {}

namespace {

// out = K applied along `axis` of a row-major [n0][n1][n2] tensor.
void apply_along(const std::vector<double>& K, std::span<const double> in, std::span<double> out,
                 const int dims[3], int axis) {
  const int n = dims[axis];
  const int stride = axis == 0 ? dims[1] * dims[2] : axis == 1 ? dims[2] : 1;
  const int outer = axis == 0 ? 1 : axis == 1 ? dims[0] : dims[0] * dims[1];
  const int inner = stride;
  for (int o = 0; o < outer; ++o) {
    const int base = o * n * stride;
    for (int s = 0; s < inner; ++s) {
      for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += K[r * n + j] * in[base + j * stride + s];
        out[base + r * stride + s] = acc;
      }
    }
  }
}

}  // namespace

TensorSpline3::TensorSpline3(const SplineAxis* a0, const SplineAxis* a1, const SplineAxis* a2,
                             std::span<const double> values)
    : ax_{a0, a1, a2}, n1_(a1->size()), n2_(a2->size()) {
  const int dims[3] = {a0->size(), a1->size(), a2->size()};
  const std::size_t total = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (values.size() != total) throw std::invalid_argument("TensorSpline3: value count mismatch");
  // T[mask] with bit 2 -> K along axis 0, bit 1 -> axis 1, bit 0 -> axis 2
  std::array<std::vector<double>, 8> T;
  T[0].assign(values.begin(), values.end());
  for (int mask = 1; mask < 8; ++mask) {
    T[mask].resize(total);
    // derive from a tensor that differs by one bit
    int bit = mask & 1 ? 0 : mask & 2 ? 1 : 2;
    const int from = mask & ~(1 << bit);
    const int axis = 2 - bit;
    apply_along(ax_[axis]->curvature_op, T[from], T[mask], dims, axis);
  }
  coef_.resize(total * 8);
  for (std::size_t i = 0; i < total; ++i)
    for (int mask = 0; mask < 8; ++mask) coef_[i * 8 + mask] = T[mask][i];
}

TensorSpline3::Partial TensorSpline3::prepare(double x0, double x1) const {
  Partial p;
  const Cell c0 = locate(ax_[0]->knots, x0);
  const Cell c1 = locate(ax_[1]->knots, x1);
  p.i0 = c0.index;
  p.i1 = c1.index;
  p.b0 = cell_basis(c0);
  p.b1 = cell_basis(c1);
  return p;
}

double TensorSpline3::evaluate(const Partial& p, double x2) const {
  const Cell c2 = locate(ax_[2]->knots, x2);
  const CellBasis b2 = cell_basis(c2);
  double acc = 0.0;
  for (int d0 = 0; d0 < 2; ++d0) {
    const double w0[2] = {p.b0.value[d0], p.b0.curvature[d0]};
    for (int d1 = 0; d1 < 2; ++d1) {
      const double w1[2] = {p.b1.value[d1], p.b1.curvature[d1]};
      const std::size_t row = (static_cast<std::size_t>(p.i0 + d0) * n1_ + (p.i1 + d1)) * n2_;
      for (int d2 = 0; d2 < 2; ++d2) {
        const double w2[2] = {b2.value[d2], b2.curvature[d2]};
        const double* c = &coef_[(row + c2.index + d2) * 8];
        for (int mask = 0; mask < 8; ++mask)
          acc += w0[(mask >> 2) & 1] * w1[(mask >> 1) & 1] * w2[mask & 1] * c[mask];
      }
    }
  }
  return acc;
}

double TensorSpline3::operator()(double x0, double x1, double x2) const { return evaluate(prepare(x0, x1), x2); }

}  // namespace lcm
