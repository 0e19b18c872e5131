#include <gtest/gtest.h>

#include <complex>
#include <numbers>

#include "mmor/integrate.hpp"
#include "mmor/numdiff.hpp"
#include "mmor/random.hpp"
#include "mmor/reduction.hpp"
#include "mmor/systems.hpp"

using namespace mmor;
using cd = std::complex<double>;

namespace {

std::vector<cd> dftLoop(const Vec& x) {
  const int n = int(x.size());
  std::vector<cd> out(n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) out[k] += x(j) * std::polar(1.0, -2.0 * std::numbers::pi * j * k / n);
  return out;
}

Vec idftLoop(const std::vector<cd>& c) {
  const int n = int(c.size());
  Vec x(n);
  for (int j = 0; j < n; ++j) {
    cd s = 0.0;
    for (int k = 0; k < n; ++k) s += c[k] * std::polar(1.0, 2.0 * std::numbers::pi * j * k / n);
    x(j) = s.real() / n;
  }
  return x;
}

int signedFrequency(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace

TEST(Advection, ZeroSpeedIsStationary) {
  const FomSystem fom = advectionFom({});
  const Params mu = Vec::Zero(1);
  const Vec u0 = fom.initial(mu);
  EXPECT_EQ(fom.field(0.0, u0, mu), Vec(Vec::Zero(64)));
  const Trajectory t = integrate(fom, mu, IntegratorSpec{}, linspace(0.0, 1.0, 5));
  // Exact at the step nodes; the Hermite samples in between only to rounding.
  for (long k = 0; k < t.size(); ++k) EXPECT_LE((t.states.col(k) - u0).norm(), 1e-15 * u0.norm());
}

TEST(Advection, CirculantColumnsSumToZero) {
  for (AdvectionScheme s : {AdvectionScheme::central, AdvectionScheme::upwind}) {
    AdvectionSpec spec;
    spec.scheme = s;
    const Mat d = advectionMatrix(spec);
    EXPECT_LT(d.colwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    // The matrix and the stencil field agree.
    Rng rng(1);
    const Vec u = rng.normalVec(64);
    const Params mu = Vec::Constant(1, 0.7);
    EXPECT_LT((advectionFom(spec).field(0.0, u, mu) + 0.7 * d * u).norm(), 1e-10);
  }
}

TEST(Advection, UnitShiftMatchesSpectralOracle) {
  AdvectionSpec spec;
  spec.gridSize = 64;
  const int n = spec.gridSize;
  const FomSystem fom = advectionFom(spec);
  const Params mu = Vec::Constant(1, 1.0);
  const Trajectory t = integrate(fom, mu, IntegratorSpec::adaptive(1e-11, 1e-11), {1.0});
  const Vec u0 = fom.initial(mu);
  const auto u0hat = dftLoop(u0);
  // Semi-discrete central scheme: mode k decays by exp(-i mu t N sin(2 pi k / N)).
  std::vector<cd> semi(n), shifted(n);
  for (int k = 0; k < n; ++k) {
    const double w = double(n) * std::sin(2.0 * std::numbers::pi * k / n);
    semi[k] = u0hat[k] * std::exp(cd(0.0, -w));
    shifted[k] = u0hat[k] * std::exp(cd(0.0, -2.0 * std::numbers::pi * signedFrequency(k, n)));
  }
  const Vec uSemi = idftLoop(semi), uShift = idftLoop(shifted);
  EXPECT_LT((t.states.col(0) - uSemi).norm(), 1e-8);
  // The shift by one period returns the initial data; the FOM differs from it
  // exactly by the dispersion of the central stencil.
  EXPECT_LT((uShift - u0).norm(), 1e-12);
  double dispersion = 0.0;
  for (int k = 0; k < n; ++k) dispersion += std::norm(semi[k] - shifted[k]);
  dispersion = std::sqrt(dispersion / n);
  EXPECT_LE((t.states.col(0) - uShift).norm(), dispersion + 1e-8);
  EXPECT_LT(dispersion, 0.5 * u0.norm());
}

TEST(Advection, RejectsTinyGrid) {
  AdvectionSpec spec;
  spec.gridSize = 3;
  EXPECT_THROW(advectionFom(spec), InvalidDimension);
}

TEST(Advection, SolutionEmbeddingIsACurveOfTheFom) {
  const AdvectionSpec spec;
  const FomSystem fom = advectionFom(spec);
  const double mu = 0.8;
  const EmbeddingPair p = advectionSolutionPair(spec, mu);
  EXPECT_LT((p.phi(Vec::Zero(1)) - fom.initial({})).norm(), 1e-12);
  for (double t : {0.0, 0.3, 0.9}) {
    const Vec s = Vec::Constant(1, t);
    EXPECT_LT(relErr(p.phi.jacobianAt(s).col(0), fom.field(t, p.phi(s), Vec::Constant(1, mu))), 1e-10);
    EXPECT_NEAR(p.rho(p.phi(s))(0), t, 1e-10);
  }
  const Vec s = Vec::Constant(1, 0.4);
  const Mat fd = numdiff::jacobian(p.rho.value, p.phi(s));
  EXPECT_LT(infNorm(p.rho.jacobianAt(p.phi(s)) - fd) / infNorm(fd), 1e-6);
}

TEST(LinearWave, GradientAndCanonicalField) {
  const HamiltonianSystem ham = linearWaveHamiltonian({});
  Rng rng(2);
  const Mat j = canonicalPoisson(64);
  for (int k = 0; k < 100; ++k) {
    const Vec x = rng.normalVec(128);
    const Params mu = Vec::Constant(1, rng.uniform(0.5, 1.0));
    EXPECT_LT(relErr(ham.base.field(0.0, x, mu), j * ham.gradient(x, mu)), 1e-10);
    if (k < 3) {
      const Vec fd = numdiff::gradient([&](const Vec& y) { return ham.hamiltonian(y, mu); }, x);
      EXPECT_LT(relErr(ham.gradient(x, mu), fd), 1e-6);
    }
  }
}

TEST(LinearWave, MidpointConservesEnergy) {
  const HamiltonianSystem ham = linearWaveHamiltonian({});
  const Params mu = Vec::Constant(1, 0.75);
  const Trajectory t =
      integrate(ham.base, mu, IntegratorSpec::fixed(Method::implicitMidpoint, 0.01), linspace(0.0, 10.0, 51));
  const double h0 = ham.hamiltonian(t.states.col(0), mu);
  double drift = 0.0;
  for (long k = 0; k < t.size(); ++k) drift = std::max(drift, std::abs(ham.hamiltonian(t.states.col(k), mu) - h0));
  EXPECT_LT(drift, 1e-10 * std::max(1.0, h0));
}

TEST(LinearWave, LaplacianIsSymmetricWithConstantKernel) {
  const Mat k = periodicLaplacian(16);
  EXPECT_EQ(k, Mat(k.transpose()));
  EXPECT_LT((k * Vec::Ones(16)).norm(), 1e-9);
}

TEST(PendulumChain, SinglePendulumAndUnitMass) {
  const LagrangianSystem one = pendulumChainLagrangian(PendulumChainSpec{1});
  const FomSystem f = eulerLagrangeVectorField(one);
  Vec x(2);
  x << 1.1, 0.4;
  for (double mu : {0.0, 3.0}) {
    const Vec got = f.field(0.0, x, Vec::Constant(1, mu));
    EXPECT_DOUBLE_EQ(got(0), 0.4);
    EXPECT_DOUBLE_EQ(got(1), -std::sin(1.1));
  }
  const LagrangianSystem chain = pendulumChainLagrangian({});
  Rng rng(3);
  EXPECT_EQ(chain.dvv(rng.normalVec(16), rng.normalVec(16), Vec::Constant(1, 0.5)), Mat(Mat::Identity(16, 16)));
  EXPECT_THROW(pendulumChainLagrangian(PendulumChainSpec{0}), InvalidDimension);
}

TEST(PendulumChain, ForceMatchesFiniteDifferences) {
  const LagrangianSystem chain = pendulumChainLagrangian({});
  Rng rng(4);
  const Vec q = rng.normalVec(16), v = rng.normalVec(16);
  const Params mu = Vec::Constant(1, 0.9);
  const Vec fd = numdiff::gradient([&](const Vec& y) { return chain.lagrangian(y, v, mu); }, q);
  EXPECT_LT(relErr(chain.dq(q, v, mu), fd), 1e-7);
}

TEST(PendulumChain, EnergyConservedUnderRk45) {
  const LagrangianSystem chain = pendulumChainLagrangian({});
  const Params mu = Vec::Constant(1, 0.6);
  const Trajectory t = integrate(eulerLagrangeVectorField(chain), mu, IntegratorSpec::adaptive(1e-10, 1e-10),
                                 linspace(0.0, 10.0, 101));
  const EnergyFunction e = energyFunction(chain);
  const double e0 = e.onState(t.states.col(0), mu);
  double drift = 0.0;
  for (long k = 0; k < t.size(); ++k) drift = std::max(drift, std::abs(e.onState(t.states.col(k), mu) - e0));
  EXPECT_LT(drift, 1e-6);
}

TEST(Energy, LegendreForms) {
  const LagrangianSystem osc = quadraticLagrangian(Mat::Identity(1, 1), Mat::Identity(1, 1), Vec::Zero(1), Vec::Zero(1));
  const EnergyFunction e = energyFunction(osc);
  EXPECT_NEAR(e(Vec::Constant(1, 0.3), Vec::Constant(1, -2.0), {}), 0.5 * 4.0 + 0.5 * 0.09, 1e-15);

  Rng rng(5);
  const Mat m = randomSpd(rng, 4), k = randomSpd(rng, 4);
  const EnergyFunction eq = energyFunction(quadraticLagrangian(m, k, Vec::Zero(4), Vec::Zero(4)));
  const Vec q = rng.normalVec(4), v = rng.normalVec(4);
  EXPECT_NEAR(eq(q, v, {}), 0.5 * v.dot(m * v) + 0.5 * q.dot(k * q), 1e-12);

  const LagrangianSystem chain = pendulumChainLagrangian({});
  const double c = 0.7;
  const Vec qc = rng.normalVec(16), vc = rng.normalVec(16);
  double hand = 0.5 * vc.squaredNorm();
  for (int i = 0; i < 16; ++i) hand += 1.0 - std::cos(qc(i));
  for (int i = 0; i + 1 < 16; ++i) hand += 0.5 * c * (qc(i + 1) - qc(i)) * (qc(i + 1) - qc(i));
  EXPECT_NEAR(energyFunction(chain)(qc, vc, Vec::Constant(1, c)), hand, 1e-12);
}

TEST(LinearFom, FieldAndInitial) {
  Mat a(2, 2);
  a << 0, 1, -1, 0;
  const FomSystem f = linearFom(a, Vec::Ones(2));
  EXPECT_EQ(f.initial({}), Vec(Vec::Ones(2)));
  EXPECT_EQ(f.field(0.0, Vec::Unit(2, 0), {}), Vec(-Vec::Unit(2, 1)));
  EXPECT_THROW(linearFom(Mat::Zero(2, 3), Vec::Zero(2)), InvalidDimension);
}
