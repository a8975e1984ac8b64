#pragma once

// Small numerical toolkit shared by the physics modules: interpolation,
// quadrature wrappers, root bracketing and banded solves.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ucp::num {

std::vector<double> linspace(double a, double b, std::size_t n);
std::vector<double> logspace(double a, double b, std::size_t n);  // geometric, a,b > 0

// Piecewise cubic Hermite interpolant on strictly increasing abscissae.
// Slopes are either supplied (exact derivatives) or built with the
// Fritsch-Carlson monotone rule.
class CubicHermite {
 public:
  CubicHermite() = default;
  CubicHermite(std::vector<double> x, std::vector<double> y, std::vector<double> dydx);
  static CubicHermite monotone(std::vector<double> x, std::vector<double> y);

  [[nodiscard]] double operator()(double x) const;
  [[nodiscard]] double derivative(double x) const;
  // Smallest abscissa in [x0, xn] where the (assumed nondecreasing) curve reaches y.
  [[nodiscard]] double inverse(double y) const;

  [[nodiscard]] const std::vector<double>& x() const noexcept { return x_; }
  [[nodiscard]] const std::vector<double>& y() const noexcept { return y_; }
  [[nodiscard]] const std::vector<double>& slopes() const noexcept { return d_; }
  [[nodiscard]] bool empty() const noexcept { return x_.empty(); }
  [[nodiscard]] double front_x() const { return x_.front(); }
  [[nodiscard]] double back_x() const { return x_.back(); }

 private:
  [[nodiscard]] std::size_t interval(double x) const;
  std::vector<double> x_, y_, d_;
};

// Adaptive Gauss-Kronrod (15 point) on [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, unsigned max_depth = 18);

// Cumulative trapezoid integral starting at 0.
std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y);

// Second-order finite-difference slopes on a nonuniform grid. With even_at_origin the
// data are treated as an even function of x, so the slope at x = 0 is zero.
std::vector<double> fd_slopes(std::span<const double> x, std::span<const double> y,
                              bool even_at_origin = false);

// Cumulative integral of H(x) x^power, where H is the cubic Hermite interpolant of
// (x, y, dydx); exact per panel for power <= 4.
std::vector<double> cumulative_moment(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> dydx, int power);

// Cumulative integral of the cubic Hermite interpolant with fd_slopes; fourth order
// for smooth data.
std::vector<double> cumulative_hermite(std::span<const double> x, std::span<const double> y);

// TOMS748 on a sign-changing bracket; throws ConvergenceError otherwise.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double x_tol_rel = 1e-13, unsigned max_iter = 200);

// Thomas algorithm; sub[0] and sup[n-1] are ignored.
std::vector<double> solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                                      std::span<const double> sup, std::span<const double> rhs);

struct LineFit {
  double slope;
  double intercept;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Solves a small dense system in place by partial-pivot elimination.
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b);

}  // namespace ucp::num
