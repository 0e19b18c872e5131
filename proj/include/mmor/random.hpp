#pragma once

// Seeded sampling helpers. Everything here is deterministic for a given seed
// and standard library; distributions are implemented locally so the streams
// do not depend on the library's distribution algorithms.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/QR>

#include "mmor/geometry.hpp"
#include "mmor/types.hpp"

namespace mmor {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  Vec normalVec(long n) {
    Vec v(n);
    for (long i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Vec uniformVec(long n, double lo, double hi) {
    Vec v(n);
    for (long i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  Mat normalMat(long rows, long cols) {
    Mat m(rows, cols);
    for (long j = 0; j < cols; ++j)
      for (long i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// N x n matrix with orthonormal columns (QR of a Gaussian matrix with the
/// sign of R's diagonal fixed).
inline Mat randomOrthonormal(Rng& rng, long rows, long cols) {
  const Mat g = rng.normalMat(rows, cols);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(rows, cols);
  const Mat r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (long j = 0; j < cols; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

/// Symmetric positive-definite matrix with eigenvalues in [1, maxEig].
inline Mat randomSpd(Rng& rng, long n, double maxEig = 10.0) {
  const Mat q = randomOrthonormal(rng, n, n);
  Vec d(n);
  for (long i = 0; i < n; ++i) d(i) = rng.uniform(1.0, maxEig);
  Mat s = q * d.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

inline Mat randomSymmetric(Rng& rng, long n) {
  const Mat a = rng.normalMat(n, n);
  return 0.5 * (a + a.transpose());
}

/// Random symplectic 2N x 2N matrix built as a product of symplectic shears
/// and a block-diagonal scaling [[M, 0], [0, M^{-T}]].
inline Mat randomSymplecticMatrix(Rng& rng, long n, double scale = 0.3) {
  const long m = 2 * n;
  Mat upper = Mat::Identity(m, m);
  upper.topRightCorner(n, n) = scale * randomSymmetric(rng, n);
  Mat lower = Mat::Identity(m, m);
  lower.bottomLeftCorner(n, n) = scale * randomSymmetric(rng, n);
  Mat scaleBlock = Mat::Zero(m, m);
  const Mat mm = Mat::Identity(n, n) + scale * rng.normalMat(n, n) / std::sqrt(double(n));
  scaleBlock.topLeftCorner(n, n) = mm;
  scaleBlock.bottomRightCorner(n, n) = mm.inverse().transpose();
  return upper * scaleBlock * lower;
}

/// Columns (q_1..q_k, p_1..p_k) of a random symplectic matrix: a 2N x 2k
/// matrix V with V^T J_{2N}^T V = J_{2k}^T.
inline Mat randomSymplecticBasis(Rng& rng, long fullHalf, long reducedHalf,
                                 double scale = 0.3) {
  const Mat s = randomSymplecticMatrix(rng, fullHalf, scale);
  Mat v(2 * fullHalf, 2 * reducedHalf);
  v.leftCols(reducedHalf) = s.leftCols(reducedHalf);
  v.rightCols(reducedHalf) = s.middleCols(fullHalf, reducedHalf);
  return v;
}

/// Cotangent-lift basis blkdiag(Phi, Phi) for Phi with orthonormal columns.
inline Mat cotangentLift(const Mat& phi) {
  const long n = phi.rows(), k = phi.cols();
  Mat v = Mat::Zero(2 * n, 2 * k);
  v.topLeftCorner(n, k) = phi;
  v.bottomRightCorner(n, k) = phi;
  return v;
}

}  // namespace mmor
