#pragma once

// Full-order models: generic parametric ODEs, Hamiltonian and Lagrangian
// systems, and the shipped example problems.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mmor/embeddings.hpp"
#include "mmor/errors.hpp"
#include "mmor/geometry.hpp"
#include "mmor/types.hpp"

namespace mmor {

using ParameterBox = std::vector<std::pair<double, double>>;

struct FomSystem {
  int dim = 0;
  VectorField vectorField;
  InitialValue initial;
  double t0 = 0.0;
  double tf = 1.0;
  ParameterBox parameterBox;
  std::string name = "custom";

  Vec field(double t, const Vec& x, const Params& mu) const {
    requireDim(x.size(), dim, "FOM state");
    return vectorField(t, x, mu);
  }
};

struct HamiltonianSystem {
  FomSystem base;
  TensorField02 omega;
  std::function<double(const Vec&, const Params&)> hamiltonian;
  std::function<Vec(const Vec&, const Params&)> gradient;
};

struct LagrangianSystem {
  int configDim = 0;
  std::function<double(const Vec&, const Vec&, const Params&)> lagrangian;
  std::function<Vec(const Vec&, const Vec&, const Params&)> dq;   // D_q L
  std::function<Vec(const Vec&, const Vec&, const Params&)> dv;   // D_v L
  std::function<Mat(const Vec&, const Vec&, const Params&)> dvv;  // g_v = D^2_vv L
  std::function<Mat(const Vec&, const Vec&, const Params&)> dvq;  // (i,j) = d^2L / dv_i dq_j
  std::function<std::pair<Vec, Vec>(const Params&)> initial;
  double t0 = 0.0;
  double tf = 10.0;
  ParameterBox parameterBox;
  std::string name = "custom";
};

/// Energy v^T D_v L - L, conserved along Euler-Lagrange trajectories.
struct EnergyFunction {
  std::function<double(const Vec&, const Vec&, const Params&)> eval;

  double operator()(const Vec& q, const Vec& v, const Params& mu) const { return eval(q, v, mu); }

  /// Convenience for stacked states (q, v).
  double onState(const Vec& x, const Params& mu) const {
    const long q = x.size() / 2;
    return eval(x.head(q), x.tail(q), mu);
  }
};

inline EnergyFunction energyFunction(const LagrangianSystem& lag) {
  return EnergyFunction{[lag](const Vec& q, const Vec& v, const Params& mu) {
    return v.dot(lag.dv(q, v, mu)) - lag.lagrangian(q, v, mu);
  }};
}

inline double firstParam(const Params& mu, const char* what) {
  if (mu.size() < 1) throw InvalidDimension(std::string(what) + " requires one parameter");
  return mu(0);
}

//
// Linear test FOM.
//

/// dx/dt = A x with a fixed initial value.
inline FomSystem linearFom(Mat a, Vec x0, double t0 = 0.0, double tf = 1.0) {
  requireDim(a.cols(), a.rows(), "linearFom: square system matrix");
  requireDim(x0.size(), a.rows(), "linearFom: initial value");
  FomSystem fom;
  fom.dim = int(a.rows());
  fom.vectorField = [a = std::move(a)](double, const Vec& x, const Params&) { return Vec(a * x); };
  fom.initial = [x0 = std::move(x0)](const Params&) { return x0; };
  fom.t0 = t0;
  fom.tf = tf;
  fom.name = "linear";
  return fom;
}

//
// Periodic linear advection u_t + mu u_xi = 0 on [0, 1).
//

enum class AdvectionScheme { central, upwind };

struct AdvectionSpec {
  int gridSize = 64;
  ParameterBox speedRange{{0.5, 1.0}};
  AdvectionScheme scheme = AdvectionScheme::central;
  double bumpCenter = 0.5;
  double bumpWidth = 0.1;
  double tEnd = 1.0;
};

namespace detail {

/// Periodic difference stencil as (offset, coefficient) pairs: (D u)_i =
/// sum_s c_s u_{i+s}.
inline std::vector<std::pair<int, double>> advectionStencil(const AdvectionSpec& spec) {
  const double h = 1.0 / spec.gridSize;
  if (spec.scheme == AdvectionScheme::central) return {{1, 0.5 / h}, {-1, -0.5 / h}};
  return {{0, 1.0 / h}, {-1, -1.0 / h}};
}

inline Vec gaussianBump(int n, double center, double width) {
  Vec u(n);
  for (int i = 0; i < n; ++i) {
    double d = double(i) / n - center;
    d -= std::round(d);  // periodic distance
    u(i) = std::exp(-(d / width) * (d / width));
  }
  return u;
}

inline std::vector<std::complex<double>> dft(const Vec& x) {
  const int n = int(x.size());
  std::vector<std::complex<double>> out(n);
  for (int k = 0; k < n; ++k) {
    std::complex<double> s = 0.0;
    for (int j = 0; j < n; ++j) {
      const double a = -2.0 * std::numbers::pi * double((long(j) * k) % n) / n;
      s += x(j) * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[k] = s;
  }
  return out;
}

inline Vec idftReal(const std::vector<std::complex<double>>& c) {
  const int n = int(c.size());
  Vec x(n);
  for (int j = 0; j < n; ++j) {
    std::complex<double> s = 0.0;
    for (int k = 0; k < n; ++k) {
      const double a = 2.0 * std::numbers::pi * double((long(j) * k) % n) / n;
      s += c[k] * std::complex<double>(std::cos(a), std::sin(a));
    }
    x(j) = s.real() / n;
  }
  return x;
}

}  // namespace detail

/// Dense circulant difference matrix D, so that the FOM field is -mu D u.
inline Mat advectionMatrix(const AdvectionSpec& spec) {
  const int n = spec.gridSize;
  Mat d = Mat::Zero(n, n);
  for (auto [s, c] : detail::advectionStencil(spec))
    for (int i = 0; i < n; ++i) d(i, ((i + s) % n + n) % n) += c;
  return d;
}

inline Vec advectionInitial(const AdvectionSpec& spec) {
  return detail::gaussianBump(spec.gridSize, spec.bumpCenter, spec.bumpWidth);
}

inline FomSystem advectionFom(const AdvectionSpec& spec) {
  if (spec.gridSize < 4) throw InvalidDimension("advectionFom requires N >= 4");
  FomSystem fom;
  const int n = spec.gridSize;
  fom.dim = n;
  fom.vectorField = [stencil = detail::advectionStencil(spec), n](double, const Vec& u,
                                                                  const Params& mu) {
    const double speed = firstParam(mu, "advection");
    Vec du = Vec::Zero(n);
    for (auto [s, c] : stencil)
      for (int i = 0; i < n; ++i) du(i) -= speed * c * u(((i + s) % n + n) % n);
    return du;
  };
  fom.initial = [u0 = advectionInitial(spec)](const Params&) { return u0; };
  fom.t0 = 0.0;
  fom.tf = spec.tEnd;
  fom.parameterBox = spec.speedRange;
  fom.name = "advection";
  return fom;
}

/// Eigenvalues of the circulant difference matrix for the Fourier modes
/// exp(2 pi i j k / N).
inline std::vector<std::complex<double>> advectionEigenvalues(const AdvectionSpec& spec) {
  const int n = spec.gridSize;
  std::vector<std::complex<double>> lambda(n, 0.0);
  for (int k = 0; k < n; ++k)
    for (auto [s, c] : detail::advectionStencil(spec)) {
      const double a = 2.0 * std::numbers::pi * double(s) * k / n;
      lambda[k] += c * std::complex<double>(std::cos(a), std::sin(a));
    }
  return lambda;
}

/// Exact embedding of the semi-discrete advection solution curve for a fixed
/// speed: phi(t) = exp(-mu t D) u0, with reduced coordinate t. The point
/// reduction recovers t from the phase of the first Fourier mode relative to
/// the solution at the middle of the time interval, so it is a left inverse
/// of phi for |mu Im(lambda_1) (t - t_mid)| < pi.
inline EmbeddingPair advectionSolutionPair(const AdvectionSpec& spec, double mu) {
  if (mu == 0.0) throw InvalidDimension("advectionSolutionPair requires a nonzero speed");
  const int n = spec.gridSize;
  const auto lambda = advectionEigenvalues(spec);
  const auto u0hat = detail::dft(advectionInitial(spec));

  // d^r/dt^r phi(t) = sum_k (-mu lambda_k)^r exp(-mu t lambda_k) u0hat_k e_k.
  auto derivative = [lambda, u0hat, mu, n](double t, int order) {
    std::vector<std::complex<double>> c(n);
    for (int k = 0; k < n; ++k) {
      const std::complex<double> rate = -mu * lambda[k];
      c[k] = std::pow(rate, order) * std::exp(rate * t) * u0hat[k];
    }
    return detail::idftReal(c);
  };

  EmbeddingPair p;
  p.phi.reducedDim = 1;
  p.phi.fullDim = n;
  p.phi.family = EmbeddingFamily::custom;
  p.phi.value = [derivative](const Vec& s) { return derivative(s(0), 0); };
  p.phi.jacobian = [derivative, n](const Vec& s) {
    Mat j(n, 1);
    j.col(0) = derivative(s(0), 1);
    return j;
  };
  p.phi.secondDerivative = [derivative](const Vec& s, const Vec& v, const Vec& w) {
    return Vec(derivative(s(0), 2) * (v(0) * w(0)));
  };

  const double tMid = 0.5 * spec.tEnd;
  const double phaseRate = -mu * lambda[1].imag();
  const std::complex<double> ref = std::conj(std::exp(-mu * lambda[1] * tMid) * u0hat[1]);
  // z(x) = ref * sum_j x_j exp(-2 pi i j / N); t = tMid + arg(z) / phaseRate.
  std::vector<std::complex<double>> weights(n);
  for (int j = 0; j < n; ++j) {
    const double a = -2.0 * std::numbers::pi * j / n;
    weights[j] = ref * std::complex<double>(std::cos(a), std::sin(a));
  }
  auto z = [weights, n](const Vec& x) {
    std::complex<double> s = 0.0;
    for (int j = 0; j < n; ++j) s += x(j) * weights[j];
    return s;
  };
  p.rho.fullDim = n;
  p.rho.reducedDim = 1;
  p.rho.value = [z, tMid, phaseRate](const Vec& x) {
    const auto zz = z(x);
    return Vec::Constant(1, tMid + std::atan2(zz.imag(), zz.real()) / phaseRate);
  };
  p.rho.jacobian = [z, weights, n, phaseRate](const Vec& x) {
    const auto zz = z(x);
    const double r2 = std::norm(zz);
    Mat j(1, n);
    for (int k = 0; k < n; ++k)
      j(0, k) = (zz.real() * weights[k].imag() - zz.imag() * weights[k].real()) / r2 / phaseRate;
    return j;
  };
  return p;
}

//
// Linear wave equation as a canonical Hamiltonian system.
//

struct LinearWaveSpec {
  int gridSize = 64;
  ParameterBox stiffnessRange{{0.5, 1.0}};
  double bumpCenter = 0.5;
  double bumpWidth = 0.1;
  double tEnd = 10.0;
};

/// Periodic 1-D Laplacian stencil K = (2 I - shift - shift^T) / h^2.
inline Mat periodicLaplacian(int n) {
  const double h2 = 1.0 / (double(n) * n);
  Mat k = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = 2.0 / h2;
    k(i, (i + 1) % n) -= 1.0 / h2;
    k(i, (i + n - 1) % n) -= 1.0 / h2;
  }
  return k;
}

/// H(q, p; mu) = p^T p / 2 + mu q^T K q / 2, omega = J^T, field (p, -mu K q).
inline HamiltonianSystem linearWaveHamiltonian(const LinearWaveSpec& spec) {
  const int n = spec.gridSize;
  if (n < 4) throw InvalidDimension("linearWaveHamiltonian requires N >= 4");
  const double invH2 = double(n) * n;
  // Stencil application of K.
  auto applyK = [n, invH2](const Vec& q) {
    Vec r(n);
    for (int i = 0; i < n; ++i)
      r(i) = (2.0 * q(i) - q((i + 1) % n) - q((i + n - 1) % n)) * invH2;
    return r;
  };
  HamiltonianSystem ham;
  ham.base.dim = 2 * n;
  ham.base.vectorField = [applyK, n](double, const Vec& x, const Params& mu) {
    const double stiffness = firstParam(mu, "linear wave");
    Vec f(2 * n);
    f.head(n) = x.tail(n);
    f.tail(n) = -stiffness * applyK(x.head(n));
    return f;
  };
  const Vec q0 = detail::gaussianBump(n, spec.bumpCenter, spec.bumpWidth);
  ham.base.initial = [q0, n](const Params&) {
    Vec x = Vec::Zero(2 * n);
    x.head(n) = q0;
    return x;
  };
  ham.base.t0 = 0.0;
  ham.base.tf = spec.tEnd;
  ham.base.parameterBox = spec.stiffnessRange;
  ham.base.name = "linearWave";
  ham.omega = canonicalSymplecticForm(n);
  ham.hamiltonian = [applyK, n](const Vec& x, const Params& mu) {
    const double stiffness = firstParam(mu, "linear wave");
    const Vec q = x.head(n), p = x.tail(n);
    return 0.5 * p.squaredNorm() + 0.5 * stiffness * q.dot(applyK(q));
  };
  ham.gradient = [applyK, n](const Vec& x, const Params& mu) {
    const double stiffness = firstParam(mu, "linear wave");
    Vec g(2 * n);
    g.head(n) = stiffness * applyK(x.head(n));
    g.tail(n) = x.tail(n);
    return g;
  };
  return ham;
}

/// Canonical quadratic Hamiltonian H(x) = x^T S x / 2 on R^{2n}.
inline HamiltonianSystem quadraticHamiltonian(const Mat& s, const Vec& x0, double tEnd = 10.0) {
  const int dim = int(s.rows());
  if (dim % 2 != 0) throw InvalidDimension("quadraticHamiltonian needs an even dimension");
  const Mat sym = 0.5 * (s + s.transpose());
  const Mat j = canonicalPoisson(dim / 2);
  HamiltonianSystem ham;
  ham.base.dim = dim;
  ham.base.vectorField = [a = Mat(j * sym)](double, const Vec& x, const Params&) { return Vec(a * x); };
  ham.base.initial = [x0](const Params&) { return x0; };
  ham.base.tf = tEnd;
  ham.base.name = "quadraticHamiltonian";
  ham.omega = canonicalSymplecticForm(dim / 2);
  ham.hamiltonian = [sym](const Vec& x, const Params&) { return 0.5 * x.dot(sym * x); };
  ham.gradient = [sym](const Vec& x, const Params&) { return Vec(sym * x); };
  return ham;
}

//
// Lagrangian systems.
//

struct PendulumChainSpec {
  int count = 16;
  ParameterBox couplingRange{{0.5, 1.0}};
  double amplitude = 0.8;
  double tEnd = 10.0;
};

/// L = v^T v / 2 - sum (1 - cos q_i) - mu/2 sum (q_{i+1} - q_i)^2.
inline LagrangianSystem pendulumChainLagrangian(const PendulumChainSpec& spec) {
  const int n = spec.count;
  if (n < 1) throw InvalidDimension("pendulumChainLagrangian requires Q >= 1");
  LagrangianSystem lag;
  lag.configDim = n;
  auto coupling = [](const Params& mu) { return mu.size() > 0 ? mu(0) : 0.0; };
  lag.lagrangian = [n, coupling](const Vec& q, const Vec& v, const Params& mu) {
    double pot = 0.0;
    for (int i = 0; i < n; ++i) pot += 1.0 - std::cos(q(i));
    double spring = 0.0;
    for (int i = 0; i + 1 < n; ++i) spring += (q(i + 1) - q(i)) * (q(i + 1) - q(i));
    return 0.5 * v.squaredNorm() - pot - 0.5 * coupling(mu) * spring;
  };
  lag.dq = [n, coupling](const Vec& q, const Vec&, const Params& mu) {
    const double c = coupling(mu);
    Vec g(n);
    for (int i = 0; i < n; ++i) {
      double lap = 0.0;
      if (i > 0) lap += q(i - 1) - q(i);
      if (i + 1 < n) lap += q(i + 1) - q(i);
      g(i) = -std::sin(q(i)) + c * lap;
    }
    return g;
  };
  lag.dv = [](const Vec&, const Vec& v, const Params&) { return v; };
  lag.dvv = [n](const Vec&, const Vec&, const Params&) { return Mat(Mat::Identity(n, n)); };
  lag.dvq = [n](const Vec&, const Vec&, const Params&) { return Mat(Mat::Zero(n, n)); };
  lag.initial = [n, a = spec.amplitude](const Params&) {
    Vec q(n), v = Vec::Zero(n);
    for (int i = 0; i < n; ++i) q(i) = a * std::sin(std::numbers::pi * (i + 1) / (n + 1));
    return std::make_pair(q, v);
  };
  lag.tf = spec.tEnd;
  lag.parameterBox = spec.couplingRange;
  lag.name = "pendulumChain";
  return lag;
}

/// L = v^T M v / 2 - q^T K q / 2 with constant symmetric M (spd) and K.
inline LagrangianSystem quadraticLagrangian(const Mat& m, const Mat& k, Vec q0, Vec v0) {
  const int n = int(m.rows());
  LagrangianSystem lag;
  lag.configDim = n;
  lag.lagrangian = [m, k](const Vec& q, const Vec& v, const Params&) {
    return 0.5 * v.dot(m * v) - 0.5 * q.dot(k * q);
  };
  lag.dq = [k](const Vec& q, const Vec&, const Params&) { return Vec(-k * q); };
  lag.dv = [m](const Vec&, const Vec& v, const Params&) { return Vec(m * v); };
  lag.dvv = [m](const Vec&, const Vec&, const Params&) { return m; };
  lag.dvq = [n](const Vec&, const Vec&, const Params&) { return Mat(Mat::Zero(n, n)); };
  lag.initial = [q0 = std::move(q0), v0 = std::move(v0)](const Params&) {
    return std::make_pair(q0, v0);
  };
  lag.name = "quadraticLagrangian";
  return lag;
}

}  // namespace mmor
