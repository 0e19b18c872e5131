#pragma once

// Central finite differences used for second derivatives of learned maps and
// by the self-tests of analytic derivatives.

#include <functional>

#include "mmor/types.hpp"

namespace mmor::numdiff {

inline double defaultStep(const Vec& x) { return 1e-5 * (1.0 + x.norm()); }

/// Central-difference Jacobian of f at x.
inline Mat jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x,
                    double h) {
  const long n = x.size();
  Mat jac;
  for (long j = 0; j < n; ++j) {
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Vec col = (f(xp) - f(xm)) / (2.0 * h);
    if (j == 0) jac.resize(col.size(), n);
    jac.col(j) = col;
  }
  return jac;
}

inline Mat jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x) {
  return jacobian(f, x, defaultStep(x));
}

/// Central-difference gradient of a scalar function.
inline Vec gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                    double h) {
  Vec g(x.size());
  for (long j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    g(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline Vec gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  return gradient(f, x, defaultStep(x));
}

/// Bilinear second derivative D^2 f(x)[v, w] from differences of the
/// Jacobian along w, symmetrized in (v, w) so the result is exactly
/// symmetric.
inline Vec secondFromJacobian(const std::function<Mat(const Vec&)>& jac,
                              const Vec& x, const Vec& v, const Vec& w) {
  const double h = defaultStep(x);
  auto directional = [&](const Vec& a, const Vec& b) -> Vec {
    return (jac(x + h * b) * a - jac(x - h * b) * a) / (2.0 * h);
  };
  return 0.5 * (directional(v, w) + directional(w, v));
}

}  // namespace mmor::numdiff
