#pragma once

// Seeded random instances of the closed-form families and of synthetic
// snapshot sets, shared by the verification suites and the tests.

#include <cmath>

#include <Eigen/QR>

#include "mmor/embeddings.hpp"
#include "mmor/random.hpp"
#include "mmor/training.hpp"
#include "mmor/types.hpp"

namespace mmor::samples {

/// Petrov-Galerkin pair: V Gaussian, W = Z (V^T Z)^{-T} so that W^T V = I.
inline EmbeddingPair randomLinear(Rng& rng, int bigN, int n) {
  const Mat v = rng.normalMat(bigN, n);
  const Mat z = v + 0.3 * rng.normalMat(bigN, n);
  const Mat w = z * (v.transpose() * z).inverse();
  return makeLinear(v, w);
}

/// Projector onto the orthogonal complement of the column span of m.
inline Mat complementProjector(const Mat& m) {
  const long bigN = m.rows();
  if (m.cols() == 0) return Mat::Identity(bigN, bigN);
  Eigen::ColPivHouseholderQR<Mat> qr(m);
  const long r = qr.rank();
  const Mat q = Mat(qr.householderQ()).leftCols(r);
  return Mat::Identity(bigN, bigN) - q * q.transpose();
}

inline EmbeddingPair randomQuadratic(Rng& rng, int bigN, int n, double curvature = 0.2) {
  const Mat a1 = randomOrthonormal(rng, bigN, n);
  Mat a2 = curvature * rng.normalMat(bigN, symKronDim(n));
  a2 -= a1 * (a1.transpose() * a2);
  const Vec a0 = 0.5 * rng.normalVec(bigN);
  return makeQuadratic(a2, a1, a0);
}

/// NCA pair with trigonometric features and, when there is room, an
/// oblique point reduction B = A1 + Y with Y orthogonal to [A1, A2].
inline EmbeddingPair randomNca(Rng& rng, int bigN, int n, double curvature = 0.2) {
  const FeatureMap f = trigFeature(n);
  const Mat a1 = randomOrthonormal(rng, bigN, n);
  Mat a2 = curvature * rng.normalMat(bigN, f.outputDim);
  a2 -= a1 * (a1.transpose() * a2);
  const Vec a0 = 0.5 * rng.normalVec(bigN);
  Mat b = a1;
  if (bigN > n + f.outputDim) {
    Mat span(bigN, n + f.outputDim);
    span << a1, a2;
    b += 0.3 * complementProjector(span) * rng.normalMat(bigN, n);
  }
  return makeNca(a2, a1, a0, b, f);
}

/// Snapshots on a known manifold x = A2 f(xhat) + A1 xhat + A0 that the
/// sequential fit recovers exactly. The xhat samples form a tensor grid that
/// is symmetric in every coordinate separately, so the reduced samples have
/// diagonal second moments with distinct variances and all odd moments
/// vanish; A2 is orthogonal to A1 and annihilates the mean feature vector,
/// which makes the snapshot mean equal A0.
struct SyntheticManifold {
  SnapshotSet snaps;
  Mat A2, A1;
  Vec A0;
  Mat xhat;
};

inline SyntheticManifold synthesizedManifold(Rng& rng, int bigN, int n, int levels,
                                             const FeatureMap& f, double curvature = 0.05) {
  long count = 1;
  for (int i = 0; i < n; ++i) count *= levels;
  Mat xhat(n, count);
  for (long k = 0; k < count; ++k) {
    long idx = k;
    for (int i = 0; i < n; ++i) {
      const double scale = std::pow(0.7, i);
      const int level = int(idx % levels);
      idx /= levels;
      xhat(i, k) = levels == 1 ? 0.0 : scale * (-1.0 + 2.0 * level / double(levels - 1));
    }
  }
  Mat feats(f.outputDim, count);
  for (long k = 0; k < count; ++k) feats.col(k) = f.value(xhat.col(k));
  const Vec mean = feats.rowwise().mean();

  SyntheticManifold m;
  m.xhat = xhat;
  m.A1 = randomOrthonormal(rng, bigN, n);
  m.A2 = curvature * rng.normalMat(bigN, f.outputDim);
  m.A2 -= m.A1 * (m.A1.transpose() * m.A2);
  if (mean.norm() > 0.0) m.A2 -= (m.A2 * mean) * mean.transpose() / mean.squaredNorm();
  m.A0 = rng.normalVec(bigN);
  const Mat x = (m.A2 * feats + m.A1 * xhat).colwise() + m.A0;
  m.snaps = SnapshotSet(x);
  return m;
}

}  // namespace mmor::samples
