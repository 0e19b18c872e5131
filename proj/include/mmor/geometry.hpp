#pragma once

// Coordinate representations of (0,2)-tensor fields, the musical
// isomorphisms they induce, and pullbacks along embeddings.

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "mmor/errors.hpp"
#include "mmor/types.hpp"

namespace mmor {

enum class TensorStructure { general, symmetric, skewSymmetric };

inline const char* toString(TensorStructure s) {
  switch (s) {
    case TensorStructure::symmetric: return "symmetric";
    case TensorStructure::skewSymmetric: return "skewSymmetric";
    default: return "general";
  }
}

/// Point-dependent N x N matrix. Closedness of 2-forms is not represented;
/// for non-constant symplectic forms it is an obligation of the caller.
struct TensorField02 {
  int dim = 0;
  std::function<Mat(const Vec&)> eval;
  TensorStructure structure = TensorStructure::general;
  bool constant = false;

  /// Evaluates at m and checks shape plus the declared structure flag.
  Mat at(const Vec& m) const {
    requireDim(m.size(), dim, "TensorField02 point");
    Mat t = eval(m);
    if (t.rows() != dim || t.cols() != dim) {
      throw InvalidDimension("TensorField02 evaluated to a " +
                             std::to_string(t.rows()) + "x" +
                             std::to_string(t.cols()) + " matrix, expected " +
                             std::to_string(dim));
    }
    const double scale = infNorm(t);
    if (structure == TensorStructure::symmetric &&
        infNorm(t - t.transpose()) > 1e-12 * scale) {
      throw StructureViolation("tensor flagged symmetric is not symmetric");
    }
    if (structure == TensorStructure::skewSymmetric &&
        infNorm(t + t.transpose()) > 1e-12 * scale) {
      throw StructureViolation("tensor flagged skew-symmetric is not skew");
    }
    return t;
  }
};

/// Lower-index components of a cotangent vector.
struct Covector {
  Vec components;
  long size() const { return components.size(); }
};

inline TensorField02 constantTensor(Mat value, TensorStructure structure) {
  const int n = static_cast<int>(value.rows());
  if (value.cols() != n) throw InvalidDimension("constant tensor must be square");
  TensorField02 t;
  t.dim = n;
  t.structure = structure;
  t.constant = true;
  t.eval = [v = std::move(value)](const Vec&) { return v; };
  return t;
}

inline TensorField02 identityTensor(int n) {
  return constantTensor(Mat::Identity(n, n), TensorStructure::symmetric);
}

/// J_{2n} = [[0, I], [-I, 0]], the canonical Poisson tensor.
inline Mat canonicalPoisson(int n) {
  if (n < 1) throw InvalidDimension("canonicalPoisson requires n >= 1");
  Mat j = Mat::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n).setIdentity();
  j.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return j;
}

/// The canonical symplectic form J_{2n}^T as a constant skew tensor field.
inline TensorField02 canonicalSymplecticForm(int n) {
  return constantTensor(canonicalPoisson(n).transpose(),
                        TensorStructure::skewSymmetric);
}

struct NondegeneracyCheck {
  bool ok = false;
  double conditionEstimate = std::numeric_limits<double>::infinity();
  explicit operator bool() const { return ok; }
};

inline constexpr double kDefaultConditionTolerance = 1e12;

/// SVD-based condition estimate; failure is reported, not thrown.
inline NondegeneracyCheck checkNondegenerate(
    const Mat& m, double condTol = kDefaultConditionTolerance) {
  if (m.rows() != m.cols()) throw InvalidDimension("checkNondegenerate needs a square matrix");
  NondegeneracyCheck out;
  if (m.size() == 0) return out;
  if (!m.allFinite()) return out;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) return out;
  out.conditionEstimate = smax / smin;
  out.ok = out.conditionEstimate < condTol;
  return out;
}

/// Solves m * x = b after an SVD-based nondegeneracy test; LU with partial
/// pivoting does the actual solve.
inline Vec solveNondegenerate(const Mat& m, const Vec& b, const std::string& what,
                              double condTol = kDefaultConditionTolerance) {
  const auto check = checkNondegenerate(m, condTol);
  if (!check) {
    throw DegenerateTensor(what + " is degenerate (condition estimate " +
                               std::to_string(check.conditionEstimate) + ")",
                           check.conditionEstimate);
  }
  return Eigen::PartialPivLU<Mat>(m).solve(b);
}

/// Index lowering: components tau(m) * v.
inline Covector flat(const TensorField02& tau, const Vec& m, const Vec& v) {
  requireDim(v.size(), tau.dim, "flat: tangent vector");
  return Covector{tau.at(m) * v};
}

/// Index raising: tau(m)^{-1} * lam. Inverse of flat.
inline Vec sharp(const TensorField02& tau, const Vec& m, const Covector& lam,
                 double condTol = kDefaultConditionTolerance) {
  requireDim(lam.size(), tau.dim, "sharp: covector");
  return solveNondegenerate(tau.at(m), lam.components, "sharp: tensor", condTol);
}

/// Symmetric or skew part, matching the structure flag; identity otherwise.
inline Mat enforceStructure(const Mat& m, TensorStructure structure) {
  switch (structure) {
    case TensorStructure::symmetric: return 0.5 * (m + m.transpose());
    case TensorStructure::skewSymmetric: return 0.5 * (m - m.transpose());
    default: return m;
  }
}

/// D^T tau D for a tensor matrix and a Jacobian; keeps the structure flag.
inline Mat pullbackMatrix(const Mat& jacobian, const Mat& tensor,
                          TensorStructure structure) {
  requireDim(tensor.rows(), jacobian.rows(), "pullback: tensor");
  const Mat m = jacobian.transpose() * (tensor * jacobian);
  return enforceStructure(m, structure);
}

}  // namespace mmor
