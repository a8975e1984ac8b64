#include "ucp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "ucp/error.hpp"

namespace ucp::num {

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n < 2) throw InvalidInput("linspace needs at least two points");
  std::vector<double> out(n);
  const double h = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + h * static_cast<double>(i);
  out.back() = b;
  return out;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  if (a <= 0.0 || b <= 0.0) throw InvalidInput("logspace endpoints must be positive");
  auto e = linspace(std::log(a), std::log(b), n);
  for (auto& v : e) v = std::exp(v);
  e.front() = a;
  e.back() = b;
  return e;
}

CubicHermite::CubicHermite(std::vector<double> x, std::vector<double> y, std::vector<double> dydx)
    : x_(std::move(x)), y_(std::move(y)), d_(std::move(dydx)) {
  if (x_.size() < 2 || y_.size() != x_.size() || d_.size() != x_.size())
    throw InvalidInput("CubicHermite: inconsistent table sizes");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1])) throw InvalidInput("CubicHermite: abscissae must increase");
}

CubicHermite CubicHermite::monotone(std::vector<double> x, std::vector<double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InvalidInput("monotone interpolant: bad table");
  std::vector<double> h(n - 1), delta(n - 1), d(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    delta[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return {std::move(x), std::move(y), std::move(d)};
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d[i] = 0.0;
    } else {
      // weighted harmonic mean (Fritsch-Butland)
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) s = 0.0;
    else if (d0 * d1 <= 0.0 && std::abs(s) > std::abs(3.0 * d0)) s = 3.0 * d0;
    return s;
  };
  d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return {std::move(x), std::move(y), std::move(d)};
}

std::size_t CubicHermite::interval(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = (it == x_.begin()) ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(i, x_.size() - 2);
}

double CubicHermite::operator()(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

double CubicHermite::derivative(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double g00 = 6 * t2 - 6 * t, g10 = 3 * t2 - 4 * t + 1;
  const double g01 = -6 * t2 + 6 * t, g11 = 3 * t2 - 2 * t;
  return (g00 * y_[i] + g01 * y_[i + 1]) / h + g10 * d_[i] + g11 * d_[i + 1];
}

double CubicHermite::inverse(double y) const {
  if (y <= y_.front()) return x_.front();
  if (y >= y_.back()) return x_.back();
  auto it = std::lower_bound(y_.begin(), y_.end(), y);
  std::size_t i = static_cast<std::size_t>(it - y_.begin());
  i = (i == 0) ? 0 : i - 1;
  double lo = x_[i], hi = x_[i + 1];
  if ((*this)(lo) >= y) return lo;
  // bisection then secant-free refinement; the interval holds one crossing
  for (int k = 0; k < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++k) {
    const double mid = 0.5 * (lo + hi);
    if ((*this)(mid) < y) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 unsigned max_depth) {
  if (a == b) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth,
                                                                       rel_tol, &err);
}

std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y) {
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i)
    out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return out;
}

std::vector<double> fd_slopes(std::span<const double> x, std::span<const double> y,
                              bool even_at_origin) {
  const std::size_t n = x.size();
  if (n < 3 || y.size() != n) throw InvalidInput("fd_slopes needs at least three matching points");
  std::vector<double> d(n);
  auto three_point = [&](std::size_t a, std::size_t b, std::size_t c, double at) {
    // derivative at `at` of the parabola through (a, b, c)
    const double xa = x[a], xb = x[b], xc = x[c];
    return y[a] * ((at - xb) + (at - xc)) / ((xa - xb) * (xa - xc)) +
           y[b] * ((at - xa) + (at - xc)) / ((xb - xa) * (xb - xc)) +
           y[c] * ((at - xa) + (at - xb)) / ((xc - xa) * (xc - xb));
  };
  d[0] = (even_at_origin && x[0] == 0.0) ? 0.0 : three_point(0, 1, 2, x[0]);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = three_point(i - 1, i, i + 1, x[i]);
  d[n - 1] = three_point(n - 3, n - 2, n - 1, x[n - 1]);
  return d;
}

std::vector<double> cumulative_hermite(std::span<const double> x, std::span<const double> y) {
  const auto d = fd_slopes(x, y);
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double h = x[i] - x[i - 1];
    out[i] = out[i - 1] + 0.5 * h * (y[i] + y[i - 1]) + h * h * (d[i - 1] - d[i]) / 12.0;
  }
  return out;
}

std::vector<double> cumulative_moment(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> dydx, int power) {
  if (x.size() != y.size() || x.size() != dydx.size()) throw InvalidInput("cumulative_moment size mismatch");
  if (power < 0 || power > 4) throw InvalidInput("cumulative_moment supports powers 0..4");
  // 4-point Gauss-Legendre on [0, 1], exact to degree 7
  constexpr double gx[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                            0.9305681557970263};
  constexpr double gw[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731,
                            0.1739274225687269};
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double h = x[i] - x[i - 1];
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double t = gx[k], t2 = t * t, t3 = t2 * t;
      const double H = (2 * t3 - 3 * t2 + 1) * y[i - 1] + (t3 - 2 * t2 + t) * h * dydx[i - 1] +
                       (-2 * t3 + 3 * t2) * y[i] + (t3 - t2) * h * dydx[i];
      sum += gw[k] * H * std::pow(x[i - 1] + h * t, power);
    }
    out[i] = out[i - 1] + h * sum;
  }
  return out;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double x_tol_rel,
                 unsigned max_iter) {
  const double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!(flo * fhi < 0.0)) {
    std::ostringstream os;
    os << "f(" << lo << ")=" << flo << ", f(" << hi << ")=" << fhi;
    throw ConvergenceError("root not bracketed", os.str());
  }
  boost::uintmax_t iters = max_iter;
  auto tol = [x_tol_rel](double a, double b) {
    return std::abs(b - a) <= x_tol_rel * std::max(std::abs(a), std::abs(b));
  };
  try {
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (a + b);
  } catch (const std::exception& e) {
    throw ConvergenceError("root search failed", e.what());
  }
}

std::vector<double> solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                                      std::span<const double> sup, std::span<const double> rhs) {
  const std::size_t n = diag.size();
  std::vector<double> c(n), d(n), x(n);
  double beta = diag[0];
  if (beta == 0.0) throw ConvergenceError("singular tridiagonal system");
  c[0] = sup[0] / beta;
  d[0] = rhs[0] / beta;
  for (std::size_t i = 1; i < n; ++i) {
    beta = diag[i] - sub[i] * c[i - 1];
    if (beta == 0.0) throw ConvergenceError("singular tridiagonal system");
    c[i] = (i + 1 < n) ? sup[i] / beta : 0.0;
    d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
  }
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InvalidInput("fit_line: need two or more points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidInput("fit_line: degenerate abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    if (a[p][k] == 0.0) throw ConvergenceError("singular dense system");
    std::swap(a[k], a[p]);
    std::swap(b[k], b[p]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= m * a[k][j];
      b[i] -= m * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace ucp::num
