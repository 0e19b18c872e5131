#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace mmor {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Parameter vector (mu). May be empty for non-parametric problems.
using Params = Eigen::VectorXd;

/// Time-dependent parametric vector field (t, x, mu) -> dx/dt.
using VectorField = std::function<Vec(double, const Vec&, const Params&)>;

/// Initial condition mu -> x0.
using InitialValue = std::function<Vec(const Params&)>;

inline double infNorm(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double relErr(const Vec& a, const Vec& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

}  // namespace mmor
