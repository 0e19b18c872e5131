#include <gtest/gtest.h>

#include "mmor/integrate.hpp"
#include "mmor/random.hpp"
#include "mmor/reduction.hpp"
#include "mmor/samples.hpp"
#include "mmor/systems.hpp"

using namespace mmor;

namespace {

const VectorField growth = [](double, const Vec& x, const Params&) { return x; };
const VectorField still = [](double, const Vec& x, const Params&) { return Vec(Vec::Zero(x.size())); };
const VectorField rotation = [](double, const Vec& x, const Params&) {
  Vec f(2);
  f << x(1), -x(0);
  return f;
};

const std::vector<Method> kAllMethods{Method::rk4, Method::rk45, Method::implicitMidpoint};

IntegratorSpec specFor(Method m) {
  if (m == Method::rk45) return IntegratorSpec::adaptive(1e-10, 1e-10);
  return IntegratorSpec::fixed(m, 1e-3);
}

}  // namespace

TEST(Integrate, ZeroFieldIsConstant) {
  const Vec y0 = (Vec(3) << 1.0, -2.0, 0.5).finished();
  for (Method m : kAllMethods) {
    const Trajectory t = integrate(still, y0, 0.0, {}, specFor(m), linspace(0.0, 2.0, 5));
    for (long k = 0; k < t.size(); ++k) EXPECT_EQ(Vec(t.states.col(k)), y0) << toString(m);
  }
}

TEST(Integrate, Rk4ExponentialClosedForm) {
  const Trajectory t = integrate(growth, Vec::Ones(1), 0.0, {}, IntegratorSpec::fixed(Method::rk4, 1e-3), {1.0});
  EXPECT_LT(std::abs(t.states(0, 0) - std::exp(1.0)), 1e-11);
  EXPECT_EQ(t.stats.steps, 1000);
}

TEST(Integrate, Rk4FourthOrder) {
  std::vector<double> errs;
  for (double h : {0.02, 0.01, 0.005}) {
    const Trajectory t = integrate(growth, Vec::Ones(1), 0.0, {}, IntegratorSpec::fixed(Method::rk4, h), {1.0});
    errs.push_back(std::abs(t.states(0, 0) - std::exp(1.0)));
  }
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(errs[i] / errs[i + 1], 16.0, 16.0 * 0.2);
}

TEST(Integrate, MidpointSecondOrderAndQuadraticInvariant) {
  std::vector<double> errs;
  for (double h : {0.02, 0.01}) {
    const Trajectory t = integrate(rotation, Vec::Unit(2, 0), 0.0, {}, IntegratorSpec::fixed(Method::implicitMidpoint, h), {1.0});
    const Vec exact = (Vec(2) << std::cos(1.0), -std::sin(1.0)).finished();
    errs.push_back((t.states.col(0) - exact).norm());
  }
  EXPECT_NEAR(errs[0] / errs[1], 4.0, 0.8);

  const Trajectory t = integrate(rotation, Vec::Unit(2, 0), 0.0, {}, IntegratorSpec::fixed(Method::implicitMidpoint, 0.01),
                                 linspace(0.0, 100.0, 201));
  double drift = 0.0;
  for (long k = 0; k < t.size(); ++k) drift = std::max(drift, std::abs(0.5 * t.states.col(k).squaredNorm() - 0.5));
  EXPECT_LT(drift, 1e-9);
}

TEST(Integrate, Rk45MeetsTolerance) {
  for (double tol : {1e-6, 1e-8, 1e-10}) {
    const Trajectory t = integrate(growth, Vec::Ones(1), 0.0, {}, IntegratorSpec::adaptive(tol, tol), {1.0});
    EXPECT_LE(std::abs(t.states(0, 0) - std::exp(1.0)), 100.0 * tol);
    EXPECT_GT(t.stats.steps, 0);
  }
  const Trajectory r = integrate(rotation, Vec::Unit(2, 0), 0.0, {}, IntegratorSpec::adaptive(1e-9, 1e-9), linspace(0.0, 10.0, 41));
  for (long k = 0; k < r.size(); ++k) {
    const double tt = r.times[std::size_t(k)];
    EXPECT_NEAR(r.states(0, k), std::cos(tt), 1e-6);
    EXPECT_NEAR(r.states(1, k), -std::sin(tt), 1e-6);
  }
}

TEST(Integrate, DenseOutputAtInteriorTimes) {
  // Fixed steps of h with two samples inside each step. For y' = y one rk4
  // step has relative error h^5/120, so the node error at t <= 1 is below
  // e h^4/120; cubic Hermite adds at most h^4/384 times the largest fourth
  // derivative, e.
  const double h = 0.01;
  const Trajectory t = integrate(growth, Vec::Ones(1), 0.0, {}, IntegratorSpec::fixed(Method::rk4, h), linspace(0.0, 1.0, 301));
  const double bound = std::exp(1.0) * std::pow(h, 4) * (1.0 / 120.0 + 1.0 / 384.0);
  for (long k = 0; k < t.size(); ++k) EXPECT_LE(std::abs(t.states(0, k) - std::exp(t.times[std::size_t(k)])), bound);
  const Trajectory a = integrate(growth, Vec::Ones(1), 0.0, {}, IntegratorSpec::adaptive(1e-10, 1e-10), linspace(0.0, 1.0, 301));
  EXPECT_LT(a.stats.steps, 300);
}

TEST(Integrate, SampleAtInitialTime) {
  const Trajectory t = integrate(growth, Vec::Constant(1, 2.0), 0.5, {}, IntegratorSpec{}, {0.5, 1.0});
  EXPECT_EQ(t.states(0, 0), 2.0);
  EXPECT_NEAR(t.states(0, 1), 2.0 * std::exp(0.5), 1e-6);
}

TEST(Integrate, Errors) {
  IntegratorSpec tight = IntegratorSpec::fixed(Method::rk4, 1e-3);
  tight.maxSteps = 10;
  try {
    integrate(growth, Vec::Ones(1), 0.0, {}, tight, {1.0});
    FAIL() << "expected StepLimit";
  } catch (const StepLimit& e) {
    EXPECT_EQ(e.time(), 0.0);
  }
  const VectorField blow = [](double, const Vec& x, const Params&) { return Vec(x.array().square()); };
  EXPECT_THROW(integrate(blow, Vec::Ones(1), 0.0, {}, IntegratorSpec::fixed(Method::rk4, 0.1), {5.0}), Blowup);
  const VectorField bad = [](double t, const Vec& x, const Params&) {
    return t > 0.3 ? Vec(Vec::Constant(x.size(), std::numeric_limits<double>::quiet_NaN())) : x;
  };
  try {
    integrate(bad, Vec::Ones(1), 0.0, {}, IntegratorSpec::fixed(Method::rk4, 0.1), {1.0});
    FAIL() << "expected Blowup";
  } catch (const Blowup& e) {
    EXPECT_GT(e.time(), 0.2);
  }
  IntegratorSpec newton = IntegratorSpec::fixed(Method::implicitMidpoint, 0.5);
  newton.newton.maxIter = 1;
  newton.newton.tol = 1e-300;
  EXPECT_THROW(integrate(blow, Vec::Ones(1), 0.0, {}, newton, {1.0}), NonConvergence);

  EXPECT_THROW(integrate(growth, Vec::Ones(1), 0.0, {}, IntegratorSpec{}, {}), ConfigError);
  EXPECT_THROW(integrate(growth, Vec::Ones(1), 0.0, {}, IntegratorSpec{}, {0.5, 0.5}), ConfigError);
  EXPECT_THROW(integrate(growth, Vec::Ones(1), 1.0, {}, IntegratorSpec{}, {0.5}), ConfigError);
  EXPECT_THROW(integrate(growth, Vec::Ones(1), 0.0, {}, IntegratorSpec::fixed(Method::rk4, 0.0), {1.0}), ConfigError);
  EXPECT_THROW(integrate(growth, Vec::Ones(1), 0.0, {}, IntegratorSpec::adaptive(0.0, 1e-8), {1.0}), ConfigError);
}

TEST(Integrate, DegenerateTensorCarriesTime) {
  Mat e = Mat::Zero(8, 4);
  e.topRows(4).setIdentity();
  const FomSystem fom = linearFom(canonicalPoisson(4), Vec::Ones(8));
  const RomSystem rom = buildRom(fom, makeSmg(makeLinear(e, e), canonicalSymplecticForm(4)));
  try {
    integrate(rom, {}, IntegratorSpec{}, {1.0});
    FAIL() << "expected DegenerateTensor";
  } catch (const DegenerateTensor& ex) {
    ASSERT_TRUE(ex.time().has_value());
    EXPECT_EQ(*ex.time(), 0.0);
  }
}

TEST(Integrate, Deterministic) {
  const HamiltonianSystem ham = linearWaveHamiltonian({});
  const Params mu = Vec::Constant(1, 0.8);
  const auto times = linspace(0.0, 1.0, 11);
  const Trajectory a = integrate(ham.base, mu, IntegratorSpec{}, times), b = integrate(ham.base, mu, IntegratorSpec{}, times);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.stats.steps, b.stats.steps);
}

TEST(Linspace, EndpointsAndCount) {
  const auto v = linspace(0.0, 1.0, 5);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v.front(), 0.0);
  EXPECT_EQ(v.back(), 1.0);
  EXPECT_DOUBLE_EQ(v[1], 0.25);
  EXPECT_EQ(linspace(2.0, 3.0, 1), std::vector<double>{2.0});
}

TEST(Lift, IdentityAndLinear) {
  Rng rng(1);
  Trajectory r;
  r.times = {0.0, 0.5, 1.0};
  r.states = rng.normalMat(3, 3);
  const Trajectory same = liftTrajectory(r, makeIdentity(3).phi);
  EXPECT_EQ(same.states, r.states);
  EXPECT_EQ(same.times, r.times);
  const Mat v = rng.normalMat(7, 3);
  const Trajectory lifted = liftTrajectory(r, makeLinear(v, v * (v.transpose() * v).inverse()).phi);
  const Mat oracle = v * r.states;
  EXPECT_LT(infNorm(lifted.states - oracle), 1e-14 * std::max(1.0, infNorm(oracle)));
}

TEST(Lift, ExactReproductionOfAdvection) {
  const AdvectionSpec spec;
  const FomSystem fom = advectionFom(spec);
  const double mu = 0.7;
  const EmbeddingPair p = advectionSolutionPair(spec, mu);
  const Params prm = Vec::Constant(1, mu);
  const RomSystem rom = buildRom(fom, makeMpg(p));
  const IntegratorSpec is;
  const auto times = linspace(0.0, 1.0, 11);
  const Trajectory f = integrate(fom, prm, is, times);
  const Trajectory r = integrate(rom, prm, is, times);
  // The reduced field is the constant 1, so the ROM integrates t exactly.
  for (long k = 0; k < r.size(); ++k) EXPECT_NEAR(r.states(0, k), times[std::size_t(k)], 1e-14);
  // The remaining gap is the FOM's own integration error, measured in the
  // controller norm (one tolerance unit per integrator).
  const Trajectory lifted = liftTrajectory(r, p.phi);
  double worst = 0.0;
  for (long k = 0; k < f.size(); ++k) {
    const Vec sc = is.absTol + is.relTol * f.states.col(k).cwiseAbs().array();
    worst = std::max(worst, (f.states.col(k) - lifted.states.col(k)).cwiseQuotient(sc).norm() / std::sqrt(64.0));
  }
  EXPECT_LE(worst, 10.0 * 2.0);
}

TEST(TrajectoryError, TrivialCases) {
  Rng rng(2);
  Trajectory a;
  a.times = {0.0, 0.5, 1.0};
  a.states = rng.normalMat(4, 3);
  const TrajectoryError zero = trajectoryError(a, a);
  EXPECT_EQ(zero.lInfInTime, 0.0);
  EXPECT_EQ(zero.l2InTime, 0.0);
  Trajectory b = a;
  const Vec delta = rng.normalVec(4);
  b.states.colwise() += delta;
  const Mat g = randomSpd(rng, 4);
  EXPECT_NEAR(trajectoryError(a, b, g).lInfInTime, std::sqrt(delta.dot(g * delta)), 1e-14);
  EXPECT_NEAR(trajectoryError(a, b).l2InTime, delta.norm(), 1e-14);
}

TEST(TrajectoryError, MatchesLoopOracle) {
  Rng rng(3);
  Trajectory a, b;
  a.times = b.times = {0.0, 0.1, 0.3, 0.7, 1.0};
  a.states = rng.normalMat(6, 5);
  b.states = rng.normalMat(6, 5);
  const Mat g = randomSpd(rng, 6);
  const TrajectoryError e = trajectoryError(a, b, g);
  std::vector<double> per;
  double mx = 0.0;
  for (int k = 0; k < 5; ++k) {
    double s = 0.0;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) s += (a.states(i, k) - b.states(i, k)) * g(i, j) * (a.states(j, k) - b.states(j, k));
    per.push_back(std::sqrt(s));
    mx = std::max(mx, per.back());
  }
  double integral = 0.0;
  for (int k = 1; k < 5; ++k) integral += 0.5 * (a.times[k] - a.times[k - 1]) * (per[k] * per[k] + per[k - 1] * per[k - 1]);
  EXPECT_NEAR(e.lInfInTime, mx, 1e-12);
  EXPECT_NEAR(e.l2InTime, std::sqrt(integral), 1e-12);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(e.perTime[std::size_t(k)], per[std::size_t(k)], 1e-12);
}

TEST(TrajectoryError, GridMismatch) {
  Trajectory a, b;
  a.times = {0.0, 1.0};
  b.times = {0.0, 0.9};
  a.states = b.states = Mat::Zero(2, 2);
  EXPECT_THROW(trajectoryError(a, b), GridMismatch);
  b.times = {0.0};
  b.states = Mat::Zero(2, 1);
  EXPECT_THROW(trajectoryError(a, b), GridMismatch);
}
