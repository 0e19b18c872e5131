#pragma once

// Reduction maps (MPG, GMG, LMG, SMG), ROM assembly, reduced Hamiltonians
// and the reduced Euler-Lagrange equations.

#include <memory>
#include <optional>
#include <string>

#include "mmor/embeddings.hpp"
#include "mmor/errors.hpp"
#include "mmor/geometry.hpp"
#include "mmor/systems.hpp"
#include "mmor/types.hpp"

namespace mmor {

enum class ReductionKind { MPG, GMG, LMG, SMG };

inline const char* toString(ReductionKind k) {
  switch (k) {
    case ReductionKind::MPG: return "MPG";
    case ReductionKind::GMG: return "GMG";
    case ReductionKind::LMG: return "LMG";
    default: return "SMG";
  }
}

/// Tangent reduction at phi(xhat): (xhat, v in T_{phi(xhat)}) -> reduced tangent.
using TangentReduce = std::function<Vec(const Vec&, const Vec&)>;

struct ReductionMap {
  EmbeddingPair pair;
  ReductionKind kind = ReductionKind::MPG;
  std::optional<TensorField02> tensor;
  TangentReduce tangentReduce;

  Vec reduceTangent(const Vec& xhat, const Vec& v) const {
    requireDim(xhat.size(), pair.phi.reducedDim, "reduced point");
    requireDim(v.size(), pair.phi.fullDim, "full tangent vector");
    return tangentReduce(xhat, v);
  }
  Vec reducePoint(const Vec& x) const { return pair.rho(x); }
};

/// Drho(phi(xhat)) v.
inline Vec mpgTangent(const EmbeddingPair& pair, const Vec& xhat, const Vec& v) {
  requireDim(v.size(), pair.phi.fullDim, "mpgTangent: tangent vector");
  return pair.rho.jacobianAt(pair.phi(xhat)) * v;
}

/// Solves (Dphi^T tau Dphi) w = Dphi^T tau v; DegenerateTensor if the
/// reduced tensor fails the nondegeneracy test.
inline Vec gmgTangent(const EmbeddingPair& pair, const TensorField02& tau, const Vec& xhat,
                      const Vec& v, double condTol = kDefaultConditionTolerance) {
  requireDim(tau.dim, pair.phi.fullDim, "gmgTangent: tensor dimension");
  requireDim(v.size(), pair.phi.fullDim, "gmgTangent: tangent vector");
  const Mat jac = pair.phi.jacobianAt(xhat);
  const Mat t = tau.at(pair.phi.value(xhat));
  const Mat reduced = pullbackMatrix(jac, t, tau.structure);
  const Vec rhs = jac.transpose() * (t * v);
  return solveNondegenerate(reduced, rhs, "reduced tensor", condTol);
}

inline Vec smgTangent(const EmbeddingPair& pair, const TensorField02& omega, const Vec& xhat,
                      const Vec& v, double condTol = kDefaultConditionTolerance) {
  if (omega.structure != TensorStructure::skewSymmetric)
    throw NotSkewSymmetric("SMG requires a tensor flagged skew-symmetric");
  return gmgTangent(pair, omega, xhat, v, condTol);
}

/// V^+ = J_{2n} V^T J_{2N}^T for V with V^T J_{2N}^T V = J_{2n}^T.
inline Mat symplecticInverse(const Mat& v) {
  if (v.rows() % 2 != 0 || v.cols() % 2 != 0)
    throw InvalidDimension("symplecticInverse needs even row and column counts");
  const int bigN = int(v.rows() / 2), n = int(v.cols() / 2);
  const Mat jBig = canonicalPoisson(bigN), jSmall = canonicalPoisson(n);
  const double residual = infNorm(v.transpose() * jBig.transpose() * v - jSmall.transpose());
  if (!(residual < 1e-10))
    throw NotSymplectic("matrix is not symplectic, residual " + std::to_string(residual), residual);
  return jSmall * v.transpose() * jBig.transpose();
}

inline ReductionMap makeMpg(EmbeddingPair pair) {
  ReductionMap r;
  r.kind = ReductionKind::MPG;
  r.tangentReduce = [p = pair](const Vec& xhat, const Vec& v) { return mpgTangent(p, xhat, v); };
  r.pair = std::move(pair);
  return r;
}

inline ReductionMap makeGmg(EmbeddingPair pair, TensorField02 tau,
                            double condTol = kDefaultConditionTolerance) {
  requireDim(tau.dim, pair.phi.fullDim, "makeGmg: tensor dimension");
  ReductionMap r;
  r.kind = ReductionKind::GMG;
  r.tangentReduce = [p = pair, tau, condTol](const Vec& xhat, const Vec& v) {
    return gmgTangent(p, tau, xhat, v, condTol);
  };
  r.pair = std::move(pair);
  r.tensor = std::move(tau);
  return r;
}

inline ReductionMap makeSmg(EmbeddingPair pair, TensorField02 omega,
                            double condTol = kDefaultConditionTolerance) {
  if (omega.structure != TensorStructure::skewSymmetric)
    throw NotSkewSymmetric("SMG requires a tensor flagged skew-symmetric");
  ReductionMap r = makeGmg(std::move(pair), std::move(omega), condTol);
  r.kind = ReductionKind::SMG;
  return r;
}

//
// ROM assembly.
//

struct RomSystem {
  int dim = 0;
  VectorField vectorField;
  InitialValue initial;
  std::shared_ptr<const FomSystem> fom;
  std::shared_ptr<const ReductionMap> reduction;

  Vec field(double t, const Vec& x, const Params& mu) const {
    requireDim(x.size(), dim, "ROM state");
    return vectorField(t, x, mu);
  }
};

/// X_hat(t, xhat; mu) = R|_{phi(xhat)}(X(t, phi(xhat); mu)), xhat_0 = rho(x_0).
inline RomSystem buildRom(const FomSystem& fom, const ReductionMap& rmap) {
  requireDim(rmap.pair.phi.fullDim, fom.dim, "buildRom: embedding full dimension");
  auto fomPtr = std::make_shared<const FomSystem>(fom);
  auto mapPtr = std::make_shared<const ReductionMap>(rmap);
  RomSystem rom;
  rom.dim = rmap.pair.phi.reducedDim;
  rom.fom = fomPtr;
  rom.reduction = mapPtr;
  rom.vectorField = [fomPtr, mapPtr](double t, const Vec& xhat, const Params& mu) {
    const Vec x = mapPtr->pair.phi.value(xhat);
    return mapPtr->tangentReduce(xhat, fomPtr->vectorField(t, x, mu));
  };
  rom.initial = [fomPtr, mapPtr](const Params& mu) {
    return mapPtr->pair.rho(fomPtr->initial(mu));
  };
  return rom;
}

//
// Hamiltonian systems.
//

struct ReducedHamiltonian {
  std::function<double(const Vec&, const Params&)> value;
  std::function<Vec(const Vec&, const Params&)> gradient;
};

/// H o phi with gradient Dphi^T grad H(phi).
inline ReducedHamiltonian reducedHamiltonian(const HamiltonianSystem& ham, const Embedding& phi) {
  requireDim(phi.fullDim, ham.base.dim, "reducedHamiltonian: embedding full dimension");
  ReducedHamiltonian r;
  r.value = [h = ham.hamiltonian, phi](const Vec& xhat, const Params& mu) {
    return h(phi(xhat), mu);
  };
  r.gradient = [g = ham.gradient, phi](const Vec& xhat, const Params& mu) {
    return Vec(phi.jacobianAt(xhat).transpose() * g(phi.value(xhat), mu));
  };
  return r;
}

//
// Lagrangian systems.
//

enum class GqChoice { useGv, identity };

inline Mat velocityHessianChecked(const LagrangianSystem& lag, const Vec& q, const Vec& v,
                                  const Params& mu) {
  Mat gv = lag.dvv(q, v, mu);
  const auto check = checkNondegenerate(gv);
  if (!check)
    throw DegenerateTensor("Lagrangian is not regular: D^2_vv L is degenerate (condition " +
                               std::to_string(check.conditionEstimate) + ")",
                           check.conditionEstimate);
  return gv;
}

/// Block tensor [[0, g_v], [g_q, 0]] on stacked (q, v) coordinates.
inline TensorField02 lmgTensorField(const LagrangianSystem& lag, GqChoice gq, Params mu = {}) {
  const int n = lag.configDim;
  TensorField02 t;
  t.dim = 2 * n;
  t.structure = gq == GqChoice::useGv ? TensorStructure::symmetric : TensorStructure::general;
  t.constant = false;
  t.eval = [lag, gq, n, mu = std::move(mu)](const Vec& x) {
    const Vec q = x.head(n), v = x.tail(n);
    const Mat gv = velocityHessianChecked(lag, q, v, mu);
    Mat out = Mat::Zero(2 * n, 2 * n);
    out.topRightCorner(n, n) = gv;
    out.bottomLeftCorner(n, n) = gq == GqChoice::useGv ? gv : Mat(Mat::Identity(n, n));
    return out;
  };
  return t;
}

/// First-order Euler-Lagrange field (q, v) -> (v, g_v^{-1} (D_q L - D^2_vq L v)).
inline FomSystem eulerLagrangeVectorField(const LagrangianSystem& lag) {
  const int n = lag.configDim;
  FomSystem fom;
  fom.dim = 2 * n;
  fom.vectorField = [lag, n](double, const Vec& x, const Params& mu) {
    const Vec q = x.head(n), v = x.tail(n);
    const Mat gv = lag.dvv(q, v, mu);
    const Vec rhs = lag.dq(q, v, mu) - lag.dvq(q, v, mu) * v;
    Vec f(2 * n);
    f.head(n) = v;
    f.tail(n) = solveNondegenerate(gv, rhs, "velocity Hessian D^2_vv L");
    return f;
  };
  fom.initial = [lag, n](const Params& mu) {
    auto [q0, v0] = lag.initial(mu);
    Vec x(2 * n);
    x << q0, v0;
    return x;
  };
  fom.t0 = lag.t0;
  fom.tf = lag.tf;
  fom.parameterBox = lag.parameterBox;
  fom.name = lag.name;
  return fom;
}

/// Acceleration of the reduced Euler-Lagrange equations:
///   M_hat a = Dphi^T (D_q L - D^2_vq L Dphi v - D^2_vv L D^2phi[v, v]),
///   M_hat = Dphi^T D^2_vv L Dphi,
/// with all Lagrangian derivatives evaluated at the lifted point.
inline Vec reducedEulerLagrangeRhs(const LagrangianSystem& lag, const Embedding& phiQ,
                                   const Vec& qhat, const Vec& vhat, double /*t*/,
                                   const Params& mu = {}) {
  requireDim(phiQ.fullDim, lag.configDim, "reducedEulerLagrangeRhs: embedding full dimension");
  requireDim(vhat.size(), phiQ.reducedDim, "reducedEulerLagrangeRhs: reduced velocity");
  const Mat a = phiQ.jacobianAt(qhat);
  const Vec q = phiQ.value(qhat);
  const Vec v = a * vhat;
  const Mat gv = lag.dvv(q, v, mu);
  const Vec bracket = lag.dq(q, v, mu) - lag.dvq(q, v, mu) * v -
                      gv * phiQ.second(qhat, vhat, vhat);
  const Mat mass = a.transpose() * gv * a;
  return solveNondegenerate(0.5 * (mass + mass.transpose()), a.transpose() * bracket,
                            "reduced mass matrix");
}

/// First-order system (qhat, vhat) -> (vhat, reducedEulerLagrangeRhs).
inline RomSystem reducedEulerLagrangeRom(const LagrangianSystem& lag, const EmbeddingPair& pairQ) {
  const int n = pairQ.phi.reducedDim;
  RomSystem rom;
  rom.dim = 2 * n;
  rom.vectorField = [lag, phi = pairQ.phi, n](double t, const Vec& x, const Params& mu) {
    Vec f(2 * n);
    f.head(n) = x.tail(n);
    f.tail(n) = reducedEulerLagrangeRhs(lag, phi, x.head(n), x.tail(n), t, mu);
    return f;
  };
  const EmbeddingPair lifted = liftPair(pairQ);
  rom.initial = [lag, rho = lifted.rho, m = lag.configDim](const Params& mu) {
    auto [q0, v0] = lag.initial(mu);
    Vec x(2 * m);
    x << q0, v0;
    return rho(x);
  };
  return rom;
}

/// GMG on the tangent bundle: lifted pair plus the LMG block tensor.
inline ReductionMap lmgReductionMap(const LagrangianSystem& lag, const EmbeddingPair& pairQ,
                                    GqChoice gq, Params mu = {},
                                    double condTol = kDefaultConditionTolerance) {
  requireDim(pairQ.phi.fullDim, lag.configDim, "lmgReductionMap: embedding full dimension");
  ReductionMap r = makeGmg(liftPair(pairQ), lmgTensorField(lag, gq, std::move(mu)), condTol);
  r.kind = ReductionKind::LMG;
  return r;
}

struct EquivalenceReport {
  double maxRelativeError = 0.0;
  int states = 0;
};

/// Compares the LMG-projected Euler-Lagrange field with the directly
/// assembled reduced Euler-Lagrange field at the given reduced states
/// (columns, stacked (qhat, vhat)).
inline EquivalenceReport lmgEquivalence(const LagrangianSystem& lag, const EmbeddingPair& pairQ,
                                        const Mat& states, GqChoice gq, const Params& mu = {}) {
  const FomSystem fom = eulerLagrangeVectorField(lag);
  const RomSystem lmg = buildRom(fom, lmgReductionMap(lag, pairQ, gq, mu));
  const RomSystem direct = reducedEulerLagrangeRom(lag, pairQ);
  EquivalenceReport rep;
  for (long k = 0; k < states.cols(); ++k) {
    const Vec a = lmg.field(0.0, states.col(k), mu);
    const Vec b = direct.field(0.0, states.col(k), mu);
    rep.maxRelativeError = std::max(rep.maxRelativeError, relErr(a, b));
    ++rep.states;
  }
  return rep;
}

}  // namespace mmor
