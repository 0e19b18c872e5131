#pragma once

// Embeddings phi: R^n -> R^N with first and second derivatives, point
// reductions rho: R^N -> R^n, and the closed-form families that pair them.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mmor/errors.hpp"
#include "mmor/geometry.hpp"
#include "mmor/mlp.hpp"
#include "mmor/numdiff.hpp"
#include "mmor/types.hpp"

namespace mmor {

enum class EmbeddingFamily { linear, quadratic, nca, autoencoder, lifted, identity, custom };

inline const char* toString(EmbeddingFamily f) {
  switch (f) {
    case EmbeddingFamily::linear: return "linear";
    case EmbeddingFamily::quadratic: return "quadratic";
    case EmbeddingFamily::nca: return "nca";
    case EmbeddingFamily::autoencoder: return "autoencoder";
    case EmbeddingFamily::lifted: return "lifted";
    case EmbeddingFamily::identity: return "identity";
    default: return "custom";
  }
}

using SecondDerivativeFn = std::function<Vec(const Vec&, const Vec&, const Vec&)>;

struct Embedding {
  int reducedDim = 0;
  int fullDim = 0;
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
  /// D^2 phi(x)[v, w]; empty if the embedding has no second derivative.
  SecondDerivativeFn secondDerivative;
  EmbeddingFamily family = EmbeddingFamily::custom;

  Vec operator()(const Vec& x) const {
    requireDim(x.size(), reducedDim, "embedding argument");
    return value(x);
  }

  Mat jacobianAt(const Vec& x) const {
    requireDim(x.size(), reducedDim, "embedding argument");
    return jacobian(x);
  }

  bool hasSecondDerivative() const { return static_cast<bool>(secondDerivative); }

  Vec second(const Vec& x, const Vec& v, const Vec& w) const {
    if (!secondDerivative)
      throw CapabilityError(std::string(toString(family)) +
                            " embedding has no second derivative");
    requireDim(x.size(), reducedDim, "embedding argument");
    requireDim(v.size(), reducedDim, "second derivative direction");
    requireDim(w.size(), reducedDim, "second derivative direction");
    return secondDerivative(x, v, w);
  }
};

struct PointReduction {
  int fullDim = 0;
  int reducedDim = 0;
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;

  Vec operator()(const Vec& x) const {
    requireDim(x.size(), fullDim, "point reduction argument");
    return value(x);
  }

  Mat jacobianAt(const Vec& x) const {
    requireDim(x.size(), fullDim, "point reduction argument");
    return jacobian(x);
  }
};

/// Smooth feature map f: R^n -> R^m used by the NCA family.
struct FeatureMap {
  int inputDim = 0;
  int outputDim = 0;
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
  SecondDerivativeFn secondDerivative;  // optional
  std::string name = "custom";
};

// Parameters retained by the closed-form families for serialization.
struct LinearParameters {
  Mat V, W;
};
struct QuadraticParameters {
  Mat A2, A1;
  Vec A0;
};
struct NcaParameters {
  Mat A2, A1;
  Vec A0;
  Mat B;
  std::string feature;
  double featureConstant = 1.0;
};
struct AutoencoderParameters {
  Mlp decoder, encoder;
};

using FamilyParameters = std::variant<std::monostate, LinearParameters,
                                      QuadraticParameters, NcaParameters,
                                      AutoencoderParameters>;

struct EmbeddingPair {
  Embedding phi;
  PointReduction rho;
  FamilyParameters parameters;

  int reducedDim() const { return phi.reducedDim; }
  int fullDim() const { return phi.fullDim; }
};

/// Bilinear action of a Jacobian-returning function, by finite differences.
inline SecondDerivativeFn finiteDifferenceSecond(std::function<Mat(const Vec&)> jac) {
  return [jac = std::move(jac)](const Vec& x, const Vec& v, const Vec& w) {
    return numdiff::secondFromJacobian(jac, x, v, w);
  };
}

/// Copy of phi whose second derivative is replaced by differences of its
/// Jacobian.
inline Embedding withFiniteDifferenceSecond(Embedding phi) {
  phi.secondDerivative = finiteDifferenceSecond(phi.jacobian);
  return phi;
}

//
// Symmetric Kronecker product.
//

inline int symKronDim(int n) { return n * (n + 1) / 2; }

/// Position of the product x_i x_j (i <= j) in the pair ordering
/// (1,1), (1,2), (2,2), (1,3), (2,3), (3,3), ...
inline int symKronIndex(int i, int j) { return j * (j + 1) / 2 + i; }

inline Vec symKron(const Vec& x) {
  const int n = static_cast<int>(x.size());
  if (n < 1) throw InvalidDimension("symKron requires n >= 1");
  Vec s(symKronDim(n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) s(symKronIndex(i, j)) = x(i) * x(j);
  return s;
}

inline Mat symKronJacobian(const Vec& x) {
  const int n = static_cast<int>(x.size());
  if (n < 1) throw InvalidDimension("symKronJacobian requires n >= 1");
  Mat d = Mat::Zero(symKronDim(n), n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      const int k = symKronIndex(i, j);
      d(k, i) += x(j);
      d(k, j) += x(i);
    }
  return d;
}

/// Second derivative of symKron in directions (v, w); constant in x.
inline Vec symKronBilinear(const Vec& v, const Vec& w) {
  const int n = static_cast<int>(v.size());
  Vec s(symKronDim(n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) s(symKronIndex(i, j)) = v(i) * w(j) + v(j) * w(i);
  return s;
}

inline FeatureMap symKronFeature(int n) {
  FeatureMap f;
  f.inputDim = n;
  f.outputDim = symKronDim(n);
  f.value = [](const Vec& x) { return symKron(x); };
  f.jacobian = [](const Vec& x) { return symKronJacobian(x); };
  f.secondDerivative = [](const Vec&, const Vec& v, const Vec& w) {
    return symKronBilinear(v, w);
  };
  f.name = "symKron";
  return f;
}

/// f(x) = c * ones(outDim).
inline FeatureMap constantFeature(int n, int outDim, double c = 1.0) {
  FeatureMap f;
  f.inputDim = n;
  f.outputDim = outDim;
  f.value = [outDim, c](const Vec&) { return Vec::Constant(outDim, c); };
  f.jacobian = [n, outDim](const Vec&) { return Mat::Zero(outDim, n); };
  f.secondDerivative = [outDim](const Vec&, const Vec&, const Vec&) {
    return Vec::Zero(outDim);
  };
  f.name = "constant";
  return f;
}

/// Trigonometric pair features: (1 - cos x_i) for every i, then
/// sin x_i sin x_j for i < j. No analytic second derivative is supplied.
inline FeatureMap trigFeature(int n) {
  FeatureMap f;
  f.inputDim = n;
  f.outputDim = symKronDim(n);
  f.value = [n](const Vec& x) {
    Vec s(symKronDim(n));
    int k = 0;
    for (int i = 0; i < n; ++i) s(k++) = 1.0 - std::cos(x(i));
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < j; ++i) s(k++) = std::sin(x(i)) * std::sin(x(j));
    return s;
  };
  f.jacobian = [n](const Vec& x) {
    Mat d = Mat::Zero(symKronDim(n), n);
    int k = 0;
    for (int i = 0; i < n; ++i) d(k++, i) = std::sin(x(i));
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < j; ++i) {
        d(k, i) = std::cos(x(i)) * std::sin(x(j));
        d(k, j) = std::sin(x(i)) * std::cos(x(j));
        ++k;
      }
    return d;
  };
  f.name = "trig";
  return f;
}

/// Builtin features by name, for deserialization and configs.
inline FeatureMap makeFeature(const std::string& name, int n, int outDim = -1,
                              double c = 1.0) {
  if (name == "symKron") return symKronFeature(n);
  if (name == "trig") return trigFeature(n);
  if (name == "constant") return constantFeature(n, outDim > 0 ? outDim : 1, c);
  throw ConfigError("unknown feature map '" + name + "'");
}

//
// Families.
//

inline EmbeddingPair makeIdentity(int n) {
  EmbeddingPair p;
  p.phi.reducedDim = p.phi.fullDim = n;
  p.phi.value = [](const Vec& x) { return x; };
  p.phi.jacobian = [n](const Vec&) { return Mat(Mat::Identity(n, n)); };
  p.phi.secondDerivative = [n](const Vec&, const Vec&, const Vec&) { return Vec(Vec::Zero(n)); };
  p.phi.family = EmbeddingFamily::identity;
  p.rho.fullDim = p.rho.reducedDim = n;
  p.rho.value = [](const Vec& x) { return x; };
  p.rho.jacobian = [n](const Vec&) { return Mat(Mat::Identity(n, n)); };
  return p;
}

inline constexpr double kConstraintTolerance = 1e-10;

/// phi(x) = V x, rho(x) = W^T x with W^T V = I.
inline EmbeddingPair makeLinear(const Mat& V, const Mat& W) {
  if (V.rows() != W.rows() || V.cols() != W.cols())
    throw InvalidDimension("makeLinear: V and W must have the same shape");
  const int bigN = int(V.rows()), n = int(V.cols());
  const double bio = infNorm(W.transpose() * V - Mat::Identity(n, n));
  if (!(bio < kConstraintTolerance))
    throw BiorthogonalityError("makeLinear: ||W^T V - I|| = " + std::to_string(bio), bio);
  EmbeddingPair p;
  p.phi.reducedDim = n;
  p.phi.fullDim = bigN;
  p.phi.value = [V](const Vec& x) { return Vec(V * x); };
  p.phi.jacobian = [V](const Vec&) { return V; };
  p.phi.secondDerivative = [bigN](const Vec&, const Vec&, const Vec&) { return Vec(Vec::Zero(bigN)); };
  p.phi.family = EmbeddingFamily::linear;
  const Mat Wt = W.transpose();
  p.rho.fullDim = bigN;
  p.rho.reducedDim = n;
  p.rho.value = [Wt](const Vec& x) { return Vec(Wt * x); };
  p.rho.jacobian = [Wt](const Vec&) { return Wt; };
  p.parameters = LinearParameters{V, W};
  return p;
}

/// phi(x) = A2 f(x) + A1 x + A0, rho(x) = B^T (x - A0) with B^T A1 = I and
/// B^T A2 = 0.
inline EmbeddingPair makeNca(const Mat& A2, const Mat& A1, const Vec& A0,
                             const Mat& B, const FeatureMap& f) {
  const int bigN = int(A1.rows()), n = int(A1.cols());
  if (A2.rows() != bigN || A0.size() != bigN || B.rows() != bigN || B.cols() != n)
    throw InvalidDimension("makeNca: inconsistent matrix shapes");
  if (f.inputDim != n || f.outputDim != A2.cols())
    throw InvalidDimension("makeNca: feature map dimensions do not match A1/A2");
  const double r1 = infNorm(B.transpose() * A1 - Mat::Identity(n, n));
  const double r2 = infNorm(B.transpose() * A2);
  if (!(r1 < kConstraintTolerance) || !(r2 < kConstraintTolerance))
    throw ConstraintError("makeNca: ||B^T A1 - I|| = " + std::to_string(r1) +
                              ", ||B^T A2|| = " + std::to_string(r2),
                          std::max(r1, r2));
  EmbeddingPair p;
  p.phi.reducedDim = n;
  p.phi.fullDim = bigN;
  p.phi.value = [A2, A1, A0, fv = f.value](const Vec& x) {
    return Vec(A2 * fv(x) + A1 * x + A0);
  };
  p.phi.jacobian = [A2, A1, fj = f.jacobian](const Vec& x) {
    return Mat(A2 * fj(x) + A1);
  };
  if (f.secondDerivative) {
    p.phi.secondDerivative = [A2, fs = f.secondDerivative](const Vec& x, const Vec& v, const Vec& w) {
      return Vec(A2 * fs(x, v, w));
    };
  } else {
    p.phi.secondDerivative = finiteDifferenceSecond(p.phi.jacobian);
  }
  p.phi.family = EmbeddingFamily::nca;
  const Mat Bt = B.transpose();
  p.rho.fullDim = bigN;
  p.rho.reducedDim = n;
  p.rho.value = [Bt, A0](const Vec& x) { return Vec(Bt * (x - A0)); };
  p.rho.jacobian = [Bt](const Vec&) { return Bt; };
  p.parameters = NcaParameters{A2, A1, A0, B, f.name, 1.0};
  return p;
}

/// Quadratic manifold: phi(x) = A2 symKron(x) + A1 x + A0,
/// rho(x) = A1^T (x - A0), with A1^T A1 = I and A1^T A2 = 0.
inline EmbeddingPair makeQuadratic(const Mat& A2, const Mat& A1, const Vec& A0) {
  const int n = int(A1.cols());
  if (A2.cols() != symKronDim(n))
    throw InvalidDimension("makeQuadratic: A2 must have n(n+1)/2 columns");
  EmbeddingPair p;
  try {
    p = makeNca(A2, A1, A0, A1, symKronFeature(n));
  } catch (const ConstraintError& e) {
    throw ConstraintError(std::string("makeQuadratic: ") + e.what(), e.residual());
  }
  p.phi.family = EmbeddingFamily::quadratic;
  p.parameters = QuadraticParameters{A2, A1, A0};
  return p;
}

/// Autoencoder pair from explicit networks.
inline EmbeddingPair makeAutoencoder(Mlp decoder, Mlp encoder) {
  if (decoder.inputDim() != encoder.outputDim() || decoder.outputDim() != encoder.inputDim())
    throw InvalidArchitecture("decoder and encoder widths do not mirror each other");
  EmbeddingPair p;
  const int n = decoder.inputDim(), bigN = decoder.outputDim();
  p.phi.reducedDim = n;
  p.phi.fullDim = bigN;
  p.phi.value = [decoder](const Vec& x) { return decoder.forward(x); };
  p.phi.jacobian = [decoder](const Vec& x) { return decoder.jacobian(x); };
  p.phi.secondDerivative = finiteDifferenceSecond(p.phi.jacobian);
  p.phi.family = EmbeddingFamily::autoencoder;
  p.rho.fullDim = bigN;
  p.rho.reducedDim = n;
  p.rho.value = [encoder](const Vec& x) { return encoder.forward(x); };
  p.rho.jacobian = [encoder](const Vec& x) { return encoder.jacobian(x); };
  p.parameters = AutoencoderParameters{std::move(decoder), std::move(encoder)};
  return p;
}

/// Untrained autoencoder. decoderWidths runs from n to N; the encoder uses
/// the mirrored widths.
inline EmbeddingPair makeAutoencoder(const std::vector<int>& decoderWidths,
                                     std::uint64_t seed) {
  if (decoderWidths.size() < 2)
    throw InvalidArchitecture("autoencoder needs at least the widths n and N");
  for (int w : decoderWidths)
    if (w < 1) throw InvalidArchitecture("autoencoder widths must be positive");
  std::vector<int> encoderWidths(decoderWidths.rbegin(), decoderWidths.rend());
  Rng rng(seed);
  Mlp decoder = Mlp::initialized(decoderWidths, rng);
  Mlp encoder = Mlp::initialized(encoderWidths, rng);
  return makeAutoencoder(std::move(decoder), std::move(encoder));
}

//
// Tangent-bundle lifts.
//

/// (q, v) -> (phi(q), Dphi(q) v) with block Jacobian
/// [[Dphi, 0], [D(Dphi(.) v), Dphi]].
inline Embedding liftEmbedding(const Embedding& phiQ) {
  if (!phiQ.hasSecondDerivative())
    throw CapabilityError("liftEmbedding requires an embedding with second derivatives");
  const int n = phiQ.reducedDim, bigN = phiQ.fullDim;
  Embedding lifted;
  lifted.reducedDim = 2 * n;
  lifted.fullDim = 2 * bigN;
  lifted.family = EmbeddingFamily::lifted;
  lifted.value = [phiQ, n, bigN](const Vec& x) {
    const Vec q = x.head(n), v = x.tail(n);
    Vec out(2 * bigN);
    out.head(bigN) = phiQ.value(q);
    out.tail(bigN) = phiQ.jacobian(q) * v;
    return out;
  };
  const bool linear = phiQ.family == EmbeddingFamily::linear ||
                      phiQ.family == EmbeddingFamily::identity;
  lifted.jacobian = [phiQ, n, bigN, linear](const Vec& x) {
    const Vec q = x.head(n), v = x.tail(n);
    const Mat a = phiQ.jacobian(q);
    Mat jac = Mat::Zero(2 * bigN, 2 * n);
    jac.topLeftCorner(bigN, n) = a;
    jac.bottomRightCorner(bigN, n) = a;
    if (!linear) {
      for (int j = 0; j < n; ++j)
        jac.block(bigN, j, bigN, 1) = phiQ.secondDerivative(q, Vec::Unit(n, j), v);
    }
    return jac;
  };
  lifted.secondDerivative = finiteDifferenceSecond(lifted.jacobian);
  return lifted;
}

/// (q, v) -> (rho(q), Drho(q) v). The Jacobian's lower-left block
/// D(Drho(.) v) is formed by central differences unless rho is linear.
inline PointReduction liftPointReduction(const PointReduction& rhoQ, bool linear = false) {
  const int n = rhoQ.reducedDim, bigN = rhoQ.fullDim;
  PointReduction lifted;
  lifted.fullDim = 2 * bigN;
  lifted.reducedDim = 2 * n;
  lifted.value = [rhoQ, n, bigN](const Vec& x) {
    const Vec q = x.head(bigN), v = x.tail(bigN);
    Vec out(2 * n);
    out.head(n) = rhoQ.value(q);
    out.tail(n) = rhoQ.jacobian(q) * v;
    return out;
  };
  lifted.jacobian = [rhoQ, n, bigN, linear](const Vec& x) {
    const Vec q = x.head(bigN), v = x.tail(bigN);
    const Mat a = rhoQ.jacobian(q);
    Mat jac = Mat::Zero(2 * n, 2 * bigN);
    jac.topLeftCorner(n, bigN) = a;
    jac.bottomRightCorner(n, bigN) = a;
    if (!linear) {
      const std::function<Vec(const Vec&)> dv = [&](const Vec& qq) {
        return Vec(rhoQ.jacobian(qq) * v);
      };
      jac.bottomLeftCorner(n, bigN) = numdiff::jacobian(dv, q);
    }
    return jac;
  };
  return lifted;
}

/// Lifts a pair; linear-reduction families skip the finite-difference block.
inline EmbeddingPair liftPair(const EmbeddingPair& pair) {
  EmbeddingPair out;
  out.phi = liftEmbedding(pair.phi);
  const bool linearRho = pair.phi.family == EmbeddingFamily::linear ||
                         pair.phi.family == EmbeddingFamily::identity ||
                         pair.phi.family == EmbeddingFamily::quadratic ||
                         pair.phi.family == EmbeddingFamily::nca;
  out.rho = liftPointReduction(pair.rho, linearRho);
  return out;
}

//
// Pullback of (0,2)-tensors along an embedding.
//

/// Dphi(x)^T tau(phi(x)) Dphi(x); inherits tau's symmetry flag.
inline Mat pullback02(const Embedding& phi, const TensorField02& tau, const Vec& xhat) {
  requireDim(tau.dim, phi.fullDim, "pullback02: tensor dimension");
  const Mat jac = phi.jacobianAt(xhat);
  return pullbackMatrix(jac, tau.at(phi.value(xhat)), tau.structure);
}

inline TensorField02 pullbackField(const Embedding& phi, const TensorField02& tau) {
  TensorField02 out;
  out.dim = phi.reducedDim;
  out.structure = tau.structure;
  out.constant = tau.constant && (phi.family == EmbeddingFamily::linear ||
                                  phi.family == EmbeddingFamily::identity);
  out.eval = [phi, tau](const Vec& x) { return pullback02(phi, tau, x); };
  return out;
}

}  // namespace mmor
