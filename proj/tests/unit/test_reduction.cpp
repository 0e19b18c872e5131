#include <gtest/gtest.h>

#include <Eigen/SVD>

#include "mmor/numdiff.hpp"
#include "mmor/random.hpp"
#include "mmor/reduction.hpp"
#include "mmor/samples.hpp"
#include "mmor/systems.hpp"

using namespace mmor;

namespace {

TensorField02 skew(const Mat& m) { return constantTensor(m, TensorStructure::skewSymmetric); }
TensorField02 sym(const Mat& m) { return constantTensor(m, TensorStructure::symmetric); }

}  // namespace

TEST(Mpg, ProjectionPropertyAndIdentity) {
  Rng rng(1);
  for (const EmbeddingPair& p : {samples::randomLinear(rng, 20, 4), samples::randomQuadratic(rng, 20, 4),
                                 samples::randomNca(rng, 20, 3)}) {
    const ReductionMap r = makeMpg(p);
    for (int k = 0; k < 10; ++k) {
      const Vec xh = 0.5 * rng.normalVec(p.reducedDim()), vh = rng.normalVec(p.reducedDim());
      EXPECT_LT(relErr(r.reduceTangent(xh, p.phi.jacobianAt(xh) * vh), vh), 1e-8);
    }
  }
  const Vec v = rng.normalVec(5);
  EXPECT_EQ(makeMpg(makeIdentity(5)).reduceTangent(rng.normalVec(5), v), v);
}

TEST(Gmg, OrthonormalGalerkin) {
  Rng rng(2);
  const Mat v = randomOrthonormal(rng, 12, 3);
  const ReductionMap r = makeGmg(makeLinear(v, v), identityTensor(12));
  const Vec w = rng.normalVec(12);
  EXPECT_LT((r.reduceTangent(Vec::Zero(3), w) - v.transpose() * w).norm(), 1e-13);
}

TEST(Gmg, MatchesWeightedLeastSquares) {
  Rng rng(3);
  const int bigN = 15, n = 3;
  const EmbeddingPair p = samples::randomQuadratic(rng, bigN, n);
  const Mat tau = randomSpd(rng, bigN);
  const ReductionMap r = makeGmg(p, sym(tau));
  Eigen::LLT<Mat> llt(tau);
  const Mat root = Mat(llt.matrixL()).transpose();  // root^T root = tau
  for (int k = 0; k < 10; ++k) {
    const Vec xh = 0.5 * rng.normalVec(n), v = rng.normalVec(bigN);
    const Mat a = root * p.phi.jacobianAt(xh);
    const Vec ls = Eigen::JacobiSVD<Mat>(a, Eigen::ComputeThinU | Eigen::ComputeThinV).solve(root * v);
    EXPECT_LT(relErr(r.reduceTangent(xh, v), ls), 1e-10);
  }
  const Mat id = Mat::Identity(bigN, bigN);
  const ReductionMap plain = makeGmg(p, sym(id));
  const Vec xh = rng.normalVec(n), v = rng.normalVec(bigN);
  const Mat jac = p.phi.jacobianAt(xh);
  const Vec pinv = Eigen::JacobiSVD<Mat>(jac, Eigen::ComputeThinU | Eigen::ComputeThinV).solve(v);
  EXPECT_LT(relErr(plain.reduceTangent(xh, v), pinv), 1e-10);
}

TEST(Gmg, DegenerateExampleThrows) {
  Mat e = Mat::Zero(8, 4);
  e.topRows(4).setIdentity();
  const ReductionMap r = makeGmg(makeLinear(e, e), skew(canonicalPoisson(4).transpose()));
  EXPECT_THROW(r.reduceTangent(Vec::Zero(4), Vec::Ones(8)), DegenerateTensor);
}

TEST(Gmg, DimensionChecks) {
  EXPECT_THROW(makeGmg(makeIdentity(3), identityTensor(4)), InvalidDimension);
  const ReductionMap r = makeMpg(makeIdentity(3));
  EXPECT_THROW(r.reduceTangent(Vec::Zero(3), Vec::Zero(4)), InvalidDimension);
}

TEST(Smg, CotangentLiftEqualsSymplecticInverse) {
  Rng rng(4);
  const Mat v = cotangentLift(randomOrthonormal(rng, 10, 3));
  const Mat vPlus = symplecticInverse(v);
  const ReductionMap r = makeSmg(makeLinear(v, vPlus.transpose()), canonicalSymplecticForm(10));
  for (int k = 0; k < 5; ++k) {
    const Vec w = rng.normalVec(20);
    EXPECT_LT(relErr(r.reduceTangent(Vec::Zero(6), w), vPlus * w), 1e-12);
  }
  const Vec w = rng.normalVec(8);
  EXPECT_LT((makeSmg(makeIdentity(8), canonicalSymplecticForm(4)).reduceTangent(rng.normalVec(8), w) - w).norm(), 1e-14);
}

TEST(Smg, RandomSymplecticBasisMatchesFormula) {
  Rng rng(5);
  const Mat v = randomSymplecticBasis(rng, 6, 2);
  const Mat j12 = canonicalPoisson(6), j4 = canonicalPoisson(2);
  const Mat formula = j4 * v.transpose() * j12.transpose();
  const ReductionMap r = makeSmg(makeLinear(v, formula.transpose()), canonicalSymplecticForm(6));
  for (int k = 0; k < 10; ++k) {
    const Vec x = rng.normalVec(12);
    EXPECT_LT(relErr(r.reduceTangent(Vec::Zero(4), x), formula * x), 1e-10);
  }
}

TEST(Smg, RequiresSkewTensor) {
  EXPECT_THROW(makeSmg(makeIdentity(4), identityTensor(4)), NotSkewSymmetric);
}

TEST(SymplecticInverse, Examples) {
  Mat v = Mat::Zero(4, 2);
  v(0, 0) = 1.0;  // qhat -> q1
  v(2, 1) = 1.0;  // phat -> p1
  EXPECT_EQ(Mat(symplecticInverse(v) * v), Mat(Mat::Identity(2, 2)));
  EXPECT_EQ(symplecticInverse(Mat::Identity(6, 6)), Mat(Mat::Identity(6, 6)));
  Rng rng(6);
  const Mat s = randomSymplecticBasis(rng, 4, 2);
  EXPECT_LT(infNorm(symplecticInverse(s) * s - Mat::Identity(4, 4)), 1e-10);
  EXPECT_THROW(symplecticInverse(rng.normalMat(8, 4)), NotSymplectic);
  EXPECT_THROW(symplecticInverse(rng.normalMat(7, 4)), InvalidDimension);
}

TEST(BuildRom, IdentityPairReproducesFom) {
  Rng rng(7);
  const Mat a = rng.normalMat(6, 6);
  const FomSystem fom = linearFom(a, rng.normalVec(6));
  const RomSystem rom = buildRom(fom, makeMpg(makeIdentity(6)));
  const Vec x = rng.normalVec(6);
  EXPECT_EQ(rom.field(0.0, x, {}), fom.field(0.0, x, {}));
  EXPECT_EQ(rom.initial({}), fom.initial({}));
}

TEST(BuildRom, LinearMpgIsTripleProduct) {
  Rng rng(8);
  const Mat a = rng.normalMat(20, 20);
  const FomSystem fom = linearFom(a, rng.normalVec(20));
  const EmbeddingPair p = samples::randomLinear(rng, 20, 4);
  const auto& prm = std::get<LinearParameters>(p.parameters);
  const RomSystem rom = buildRom(fom, makeMpg(p));
  Mat assembled(4, 4);
  for (int j = 0; j < 4; ++j) assembled.col(j) = rom.field(0.0, Vec::Unit(4, j), {});
  Mat oracle = Mat::Zero(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 20; ++k)
        for (int l = 0; l < 20; ++l) oracle(i, j) += prm.W(k, i) * a(k, l) * prm.V(l, j);
  EXPECT_LT(infNorm(assembled - oracle) / infNorm(oracle), 1e-12);
  EXPECT_LT((rom.initial({}) - prm.W.transpose() * fom.initial({})).norm(), 1e-12);
}

TEST(BuildRom, DimensionMismatchThrows) {
  const FomSystem fom = linearFom(Mat::Identity(4, 4), Vec::Zero(4));
  EXPECT_THROW(buildRom(fom, makeMpg(makeIdentity(3))), InvalidDimension);
}

TEST(ReducedHamiltonian, IdentityAndScaling) {
  const HamiltonianSystem osc = quadraticHamiltonian(Mat::Identity(2, 2), Vec::Unit(2, 0));
  Rng rng(9);
  const Vec x = rng.normalVec(2);
  const ReducedHamiltonian same = reducedHamiltonian(osc, makeIdentity(2).phi);
  EXPECT_DOUBLE_EQ(same.value(x, {}), osc.hamiltonian(x, {}));
  EXPECT_EQ(same.gradient(x, {}), osc.gradient(x, {}));
  const EmbeddingPair twice = makeLinear(2.0 * Mat::Identity(2, 2), 0.5 * Mat::Identity(2, 2));
  const ReducedHamiltonian r = reducedHamiltonian(osc, twice.phi);
  EXPECT_NEAR(r.value(x, {}), 2.0 * x.squaredNorm(), 1e-14);
  EXPECT_LT((r.gradient(x, {}) - 4.0 * x).norm(), 1e-14);
}

TEST(ReducedHamiltonian, GradientMatchesFiniteDifferences) {
  Rng rng(10);
  const HamiltonianSystem ham = linearWaveHamiltonian({});
  const EmbeddingPair p = samples::randomQuadratic(rng, ham.base.dim, 4, 0.05);
  const ReducedHamiltonian r = reducedHamiltonian(ham, p.phi);
  const Params mu = Vec::Constant(1, 0.7);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Vec x = 0.3 * rng.normalVec(4);
    const Vec fd = numdiff::gradient([&](const Vec& y) { return r.value(y, mu); }, x);
    worst = std::max(worst, relErr(r.gradient(x, mu), fd));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(LmgTensor, BlockStructure) {
  const PendulumChainSpec spec{4};
  const LagrangianSystem pend = pendulumChainLagrangian(spec);
  Rng rng(11);
  const Vec x = rng.normalVec(8);
  Mat expected = Mat::Zero(8, 8);
  expected.topRightCorner(4, 4).setIdentity();
  expected.bottomLeftCorner(4, 4).setIdentity();
  EXPECT_EQ(lmgTensorField(pend, GqChoice::useGv, Vec::Constant(1, 0.5)).at(x), expected);

  const Mat m = randomSpd(rng, 3);
  const LagrangianSystem quad = quadraticLagrangian(m, Mat::Zero(3, 3), Vec::Zero(3), Vec::Zero(3));
  for (int k = 0; k < 3; ++k) {
    const Mat t = lmgTensorField(quad, GqChoice::identity).at(rng.normalVec(6));
    EXPECT_EQ(Mat(t.topRightCorner(3, 3)), m);
    EXPECT_EQ(Mat(t.bottomLeftCorner(3, 3)), Mat(Mat::Identity(3, 3)));
  }
}

TEST(LmgTensor, VelocityHessianMatchesFiniteDifferences) {
  const LagrangianSystem pend = pendulumChainLagrangian({});
  Rng rng(12);
  const Vec q = rng.normalVec(16), v = rng.normalVec(16);
  const Params mu = Vec::Constant(1, 0.8);
  const std::function<Vec(const Vec&)> dv = [&](const Vec& vv) {
    return numdiff::gradient([&](const Vec& w) { return pend.lagrangian(q, w, mu); }, vv);
  };
  const Mat fd = numdiff::jacobian(dv, v);
  EXPECT_LT(infNorm(pend.dvv(q, v, mu) - fd) / infNorm(fd), 1e-6);
}

TEST(ReducedEulerLagrange, IdentityMatchesFom) {
  const LagrangianSystem pend = pendulumChainLagrangian({});
  const FomSystem fom = eulerLagrangeVectorField(pend);
  Rng rng(13);
  const Params mu = Vec::Constant(1, 0.6);
  const Vec x = rng.normalVec(32);
  const Vec acc = reducedEulerLagrangeRhs(pend, makeIdentity(16).phi, x.head(16), x.tail(16), 0.0, mu);
  EXPECT_LT((acc - fom.field(0.0, x, mu).tail(16)).norm(), 1e-13);
}

TEST(ReducedEulerLagrange, LinearEmbeddingQuadraticLagrangian) {
  Rng rng(14);
  const int bigQ = 10, n = 3;
  const Mat m = randomSpd(rng, bigQ), k = randomSpd(rng, bigQ);
  const LagrangianSystem lag = quadraticLagrangian(m, k, Vec::Zero(bigQ), Vec::Zero(bigQ));
  const Mat v = randomOrthonormal(rng, bigQ, n);
  const EmbeddingPair p = makeLinear(v, v);
  const Mat reducedStiffness = -(v.transpose() * m * v).inverse() * (v.transpose() * k * v);
  for (int t = 0; t < 5; ++t) {
    const Vec qh = rng.normalVec(n), vh = rng.normalVec(n);
    EXPECT_LT(relErr(reducedEulerLagrangeRhs(lag, p.phi, qh, vh, 0.0), reducedStiffness * qh), 1e-10);
  }
  // The LMG map on the same pair gives the classical block system.
  const RomSystem rom = buildRom(eulerLagrangeVectorField(lag), lmgReductionMap(lag, p, GqChoice::useGv));
  Mat block = Mat::Zero(2 * n, 2 * n);
  block.topRightCorner(n, n).setIdentity();
  block.bottomLeftCorner(n, n) = reducedStiffness;
  const Vec x = rng.normalVec(2 * n);
  EXPECT_LT(relErr(rom.field(0.0, x, {}), block * x), 1e-10);
}

TEST(ReducedEulerLagrange, QuadraticEmbeddingEqualsLmg) {
  Rng rng(15);
  const int bigQ = 12;
  const Mat m = randomSpd(rng, bigQ, 3.0), k = randomSpd(rng, bigQ);
  const LagrangianSystem lag = quadraticLagrangian(m, k, Vec::Zero(bigQ), Vec::Zero(bigQ));
  const EmbeddingPair p = samples::randomQuadratic(rng, bigQ, 3, 0.3);
  Mat states(6, 50);
  for (long c = 0; c < states.cols(); ++c) states.col(c) = 0.5 * rng.normalVec(6);
  EXPECT_LT(lmgEquivalence(lag, p, states, GqChoice::useGv).maxRelativeError, 1e-8);
  EXPECT_LT(lmgEquivalence(lag, p, states, GqChoice::identity).maxRelativeError, 1e-8);
}

TEST(EulerLagrange, ClosedForms) {
  const LagrangianSystem osc = quadraticLagrangian(Mat::Identity(1, 1), Mat::Identity(1, 1), Vec::Zero(1), Vec::Zero(1));
  const FomSystem f = eulerLagrangeVectorField(osc);
  Vec x(2);
  x << 0.3, -0.7;
  Vec expected(2);
  expected << -0.7, -0.3;
  EXPECT_LT((f.field(0.0, x, {}) - expected).norm(), 1e-15);
  const FomSystem pend = eulerLagrangeVectorField(pendulumChainLagrangian(PendulumChainSpec{1}));
  expected << -0.7, -std::sin(0.3);
  EXPECT_LT((pend.field(0.0, x, Vec::Constant(1, 0.9)) - expected).norm(), 1e-15);
}

TEST(LmgMap, IdentityIsIdentity) {
  const LagrangianSystem pend = pendulumChainLagrangian(PendulumChainSpec{5});
  const ReductionMap r = lmgReductionMap(pend, makeIdentity(5), GqChoice::useGv);
  Rng rng(16);
  const Vec v = rng.normalVec(10);
  EXPECT_LT((r.reduceTangent(rng.normalVec(10), v) - v).norm(), 1e-13);
  EXPECT_EQ(r.kind, ReductionKind::LMG);
}

TEST(LmgMap, IrregularLagrangianIsDegenerate) {
  const LagrangianSystem lag = quadraticLagrangian(Mat::Zero(2, 2), Mat::Identity(2, 2), Vec::Zero(2), Vec::Zero(2));
  EXPECT_THROW(lmgTensorField(lag, GqChoice::useGv).at(Vec::Zero(4)), DegenerateTensor);
}
