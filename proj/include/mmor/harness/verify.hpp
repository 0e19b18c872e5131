#pragma once

// Property suites behind `verify`: each check records a measured value, a
// threshold and the guarantee it exercises.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmor/embeddings.hpp"
#include "mmor/geometry.hpp"
#include "mmor/harness/pipeline.hpp"
#include "mmor/integrate.hpp"
#include "mmor/io.hpp"
#include "mmor/numdiff.hpp"
#include "mmor/random.hpp"
#include "mmor/reduction.hpp"
#include "mmor/samples.hpp"
#include "mmor/systems.hpp"
#include "mmor/training.hpp"

namespace mmor::harness {

inline constexpr const char* kVersion = "1.0.0";

enum class CheckStatus { pass, fail, reportOnly };

inline const char* toString(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    default: return "report-only";
  }
}

struct Check {
  std::string name;
  CheckStatus status = CheckStatus::fail;
  double measured = 0.0;
  double threshold = 0.0;
  std::string comparison = "<=";
  std::string anchor;
  std::string note;
};

struct VerificationReport {
  std::vector<Check> checks;
  std::uint64_t seed = 0;
  std::string scope;
  bool allPassed() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const Check& c) { return c.status == CheckStatus::fail; });
  }
};

inline json toJson(const VerificationReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    json j = {{"name", c.name},
              {"status", toString(c.status)},
              {"measured", std::isfinite(c.measured) ? json(c.measured) : json(io::formatDouble(c.measured))},
              {"threshold", c.threshold},
              {"comparison", c.comparison},
              {"anchor", c.anchor}};
    if (!c.note.empty()) j["note"] = c.note;
    checks.push_back(j);
  }
  return {{"scope", r.scope},
          {"passed", r.allPassed()},
          {"checks", checks},
          {"environment", {{"seed", r.seed}, {"version", kVersion}, {"timestamp", nullptr}}}};
}

namespace checks {

inline Check atMost(std::string name, double measured, double threshold, std::string anchor) {
  Check c{std::move(name), CheckStatus::fail, measured, threshold, "<=", std::move(anchor), ""};
  if (measured <= threshold) c.status = CheckStatus::pass;
  return c;
}

inline Check atLeast(std::string name, double measured, double threshold, std::string anchor) {
  Check c{std::move(name), CheckStatus::fail, measured, threshold, ">=", std::move(anchor), ""};
  if (measured >= threshold) c.status = CheckStatus::pass;
  return c;
}

inline Check within(std::string name, double measured, double lo, double hi, std::string anchor) {
  Check c{std::move(name), CheckStatus::fail, measured, hi, "in [" + io::formatDouble(lo) + ", " + io::formatDouble(hi) + "]",
          std::move(anchor), ""};
  if (measured >= lo && measured <= hi) c.status = CheckStatus::pass;
  return c;
}

inline Check reportOnly(std::string name, double measured, std::string anchor, std::string note = "") {
  return Check{std::move(name), CheckStatus::reportOnly, measured, 0.0, "report", std::move(anchor), std::move(note)};
}

/// Runs body; an unexpected exception becomes a failed check.
inline void guarded(std::vector<Check>& out, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    Check c{name, CheckStatus::fail, std::numeric_limits<double>::quiet_NaN(), 0.0, "no exception", "", e.what()};
    out.push_back(c);
  }
}

}  // namespace checks

//
// Shared experiment setups.
//

/// Cotangent-lift POD basis of linear-wave snapshots.
inline Mat linearWaveLiftBasis(const HamiltonianSystem& ham, int halfReduced) {
  const IntegratorSpec spec = IntegratorSpec::fixed(Method::implicitMidpoint, 0.01);
  std::vector<double> times = linspace(0.0, ham.base.tf, 41);
  Mat all(ham.base.dim, 0);
  for (double mu : {0.5, 0.75, 1.0}) {
    const Trajectory tr = integrate(ham.base, Vec::Constant(1, mu), spec, times);
    Mat grown(all.rows(), all.cols() + tr.states.cols());
    grown << all, tr.states;
    all = grown;
  }
  return cotangentLiftPod(all, halfReduced).V;
}

/// Smooth two-parameter family in R^32 for the autoencoder checks.
inline SnapshotSet toyAutoencoderData(int bigN = 32, int perSide = 10) {
  Mat x(bigN, perSide * perSide);
  for (int a = 0; a < perSide; ++a)
    for (int b = 0; b < perSide; ++b) {
      const double s = -1.0 + 2.0 * a / double(perSide - 1);
      const double r = -1.0 + 2.0 * b / double(perSide - 1);
      for (int i = 0; i < bigN; ++i) {
        const double xi = double(i) / double(bigN - 1);
        x(i, a * perSide + b) = 0.6 * s * std::sin(std::numbers::pi * xi) +
                                0.4 * r * std::cos(std::numbers::pi * xi) +
                                0.2 * s * r * std::sin(2.0 * std::numbers::pi * xi);
      }
    }
  return SnapshotSet(x);
}

inline AutoencoderOptions toyAutoencoderOptions(std::uint64_t seed) {
  AutoencoderOptions o;
  o.decoderWidths = {2, 12, 32};
  o.epochs = 3000;
  o.learningRate = 5e-3;
  o.optimizer = Optimizer::adam;
  o.seed = seed;
  return o;
}

//
// Suites.
//

inline std::vector<Check> verifyGeometry(std::uint64_t seed) {
  std::vector<Check> out;
  Rng rng(seed);
  checks::guarded(out, "geometry.sharpFlatRoundtrip", [&] {
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 2 + 2 * (trial % 4);
      const TensorField02 g = constantTensor(randomSpd(rng, n), TensorStructure::symmetric);
      const Mat s = randomSymplecticMatrix(rng, n / 2);
      const TensorField02 w = constantTensor(Mat(s.transpose() * canonicalPoisson(n / 2).transpose() * s),
                                             TensorStructure::skewSymmetric);
      for (const TensorField02* tau : {&g, &w}) {
        const Vec m = rng.normalVec(n), v = rng.normalVec(n);
        worst = std::max(worst, relErr(sharp(*tau, m, flat(*tau, m, v)), v));
      }
    }
    out.push_back(checks::atMost("geometry.sharpFlatRoundtrip", worst, 1e-10, "musical isomorphisms"));
  });
  checks::guarded(out, "geometry.pullbackStructure", [&] {
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Mat jac = rng.normalMat(12, 4);
      const Mat g = randomSpd(rng, 12);
      const Mat w = canonicalPoisson(6).transpose();
      const Mat pg = pullbackMatrix(jac, g, TensorStructure::symmetric);
      const Mat pw = pullbackMatrix(jac, w, TensorStructure::skewSymmetric);
      worst = std::max({worst, infNorm(pg - pg.transpose()), infNorm(pw + pw.transpose()),
                        infNorm(pg - jac.transpose() * g * jac) / infNorm(pg)});
    }
    out.push_back(checks::atMost("geometry.pullbackStructure", worst, 1e-12, "pullback of a tensor field"));
  });
  checks::guarded(out, "geometry.canonicalPoisson", [&] {
    const Mat j = canonicalPoisson(5);
    const double r = std::max(infNorm(j * j + Mat::Identity(10, 10)), infNorm(j + j.transpose()));
    out.push_back(checks::atMost("geometry.canonicalPoisson", r, 0.0, "canonical Poisson tensor"));
  });
  checks::guarded(out, "geometry.degenerateCounterexample", [&] {
    const int bigN = 8, n = 2;
    Mat e = Mat::Zero(2 * bigN, 2 * n);
    e.topRows(2 * n).setIdentity();
    const EmbeddingPair pair = makeLinear(e, e);
    const TensorField02 omega = canonicalSymplecticForm(bigN);
    const Mat reduced = pullback02(pair.phi, omega, Vec::Zero(2 * n));
    out.push_back(checks::atMost("geometry.degenerateCounterexample.reducedFormNorm", infNorm(reduced), 0.0,
                                 "degenerate symplectic counterexample"));
    double raised = 0.0;
    try {
      const ReductionMap r = makeSmg(pair, omega);
      r.reduceTangent(Vec::Zero(2 * n), Vec::Ones(2 * bigN));
    } catch (const DegenerateTensor&) {
      raised = 1.0;
    }
    out.push_back(checks::atLeast("geometry.degenerateCounterexample.raises", raised, 1.0,
                                  "degenerate symplectic counterexample"));
  });
  return out;
}

inline std::vector<Check> verifyEmbeddings(std::uint64_t seed) {
  std::vector<Check> out;
  Rng rng(seed + 1);
  struct Named {
    std::string name;
    EmbeddingPair pair;
  };
  std::vector<Named> pairs;
  pairs.push_back({"linear", samples::randomLinear(rng, 40, 4)});
  pairs.push_back({"quadratic", samples::randomQuadratic(rng, 40, 4)});
  pairs.push_back({"nca", samples::randomNca(rng, 40, 3)});
  pairs.push_back({"autoencoder", makeAutoencoder({3, 10, 20}, seed)});
  for (const auto& [name, pair] : pairs) {
    checks::guarded(out, "embeddings." + name + ".jacobian", [&] {
      double worst = 0.0;
      for (int k = 0; k < 50; ++k) {
        const Vec x = 0.5 * rng.normalVec(pair.reducedDim());
        const Mat fd = numdiff::jacobian(pair.phi.value, x);
        worst = std::max(worst, infNorm(pair.phi.jacobian(x) - fd) / std::max(infNorm(fd), 1e-300));
      }
      out.push_back(checks::atMost("embeddings." + name + ".jacobian", worst, 1e-6, "smooth embedding"));
    });
    checks::guarded(out, "embeddings." + name + ".secondSymmetry", [&] {
      double worst = 0.0;
      for (int k = 0; k < 20; ++k) {
        const int n = pair.reducedDim();
        const Vec x = 0.5 * rng.normalVec(n), v = rng.normalVec(n), w = rng.normalVec(n);
        const Vec a = pair.phi.second(x, v, w), b = pair.phi.second(x, w, v);
        worst = std::max(worst, (a - b).norm() / std::max(a.norm(), 1e-300));
      }
      out.push_back(checks::atMost("embeddings." + name + ".secondSymmetry", worst, 1e-10, "smooth embedding"));
    });
    checks::guarded(out, "embeddings." + name + ".pointProjection", [&] {
      double worst = 0.0;
      for (int k = 0; k < 20; ++k) {
        const Vec x = 0.5 * rng.normalVec(pair.reducedDim());
        worst = std::max(worst, (pair.rho(pair.phi(x)) - x).norm());
      }
      if (name == "autoencoder")
        out.push_back(checks::reportOnly("embeddings.autoencoder.pointProjection", worst, "point projection property",
                                         "approximate for autoencoders"));
      else
        out.push_back(checks::atMost("embeddings." + name + ".pointProjection", worst, 1e-10,
                                     "point projection property"));
    });
  }
  checks::guarded(out, "embeddings.liftedJacobian", [&] {
    const EmbeddingPair q = samples::randomQuadratic(rng, 16, 3);
    const Embedding lifted = liftEmbedding(q.phi);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Vec x = 0.5 * rng.normalVec(6);
      const Mat fd = numdiff::jacobian(lifted.value, x);
      worst = std::max(worst, infNorm(lifted.jacobian(x) - fd) / infNorm(fd));
    }
    out.push_back(checks::atMost("embeddings.liftedJacobian", worst, 1e-6, "lifted embedding"));
  });
  return out;
}

/// Worst relative error of tangentReduce(xhat, Dphi(xhat) vhat) = vhat.
inline double projectionPropertyError(const ReductionMap& r, Rng& rng, int points) {
  double worst = 0.0;
  const int n = r.pair.reducedDim();
  for (int k = 0; k < points; ++k) {
    const Vec x = 0.5 * rng.normalVec(n), v = rng.normalVec(n);
    worst = std::max(worst, relErr(r.reduceTangent(x, r.pair.phi.jacobianAt(x) * v), v));
  }
  return worst;
}

inline std::vector<Check> verifyReduction(std::uint64_t seed) {
  std::vector<Check> out;
  Rng rng(seed + 2);
  const std::vector<std::string> families{"linear", "quadratic", "nca"};
  auto randomPair = [&](const std::string& f, int bigN, int n) {
    if (f == "linear") return samples::randomLinear(rng, bigN, n);
    if (f == "quadratic") return samples::randomQuadratic(rng, bigN, n);
    return samples::randomNca(rng, bigN, n);
  };
  for (const ReductionKind kind : {ReductionKind::MPG, ReductionKind::GMG, ReductionKind::SMG, ReductionKind::LMG}) {
    for (const auto& f : families) {
      const std::string name = std::string("reduction.projectionProperty.") + toString(kind) + "." + f;
      checks::guarded(out, name, [&] {
        double worst = 0.0;
        for (int inst = 0; inst < 20; ++inst) {
          const int n = 2 + 2 * (inst % 3);      // 2, 4, 6
          const int bigN = 16 + 8 * (inst % 4);  // 16 .. 40
          if (kind == ReductionKind::LMG) {
            const int q = bigN / 2, qn = n / 2 + 1;
            const Mat m = randomSpd(rng, q, 4.0);
            const LagrangianSystem lag = quadraticLagrangian(m, randomSpd(rng, q), Vec::Zero(q), Vec::Zero(q));
            const ReductionMap r = lmgReductionMap(lag, randomPair(f, q, qn), GqChoice::useGv);
            worst = std::max(worst, projectionPropertyError(r, rng, 5));
          } else {
            const EmbeddingPair pair = randomPair(f, bigN, n);
            ReductionMap r;
            if (kind == ReductionKind::MPG) r = makeMpg(pair);
            else if (kind == ReductionKind::GMG) r = makeGmg(pair, constantTensor(randomSpd(rng, bigN), TensorStructure::symmetric));
            else r = makeSmg(pair, canonicalSymplecticForm(bigN / 2));
            worst = std::max(worst, projectionPropertyError(r, rng, 5));
          }
        }
        out.push_back(checks::atMost(name, worst, 1e-8, "projection property of a reduction map"));
      });
    }
  }

  checks::guarded(out, "reduction.linearSubspace", [&] {
    const int bigN = 30, n = 5;
    const Mat a = rng.normalMat(bigN, bigN) / std::sqrt(double(bigN));
    const FomSystem fom = linearFom(a, rng.normalVec(bigN));
    const EmbeddingPair pg = samples::randomLinear(rng, bigN, n);
    const auto& lp = std::get<LinearParameters>(pg.parameters);
    const Mat v = randomOrthonormal(rng, bigN, n);
    const EmbeddingPair gal = makeLinear(v, v);
    const RomSystem mpg = buildRom(fom, makeMpg(pg));
    const RomSystem gmg = buildRom(fom, makeGmg(gal, identityTensor(bigN)));
    const Mat wav = lp.W.transpose() * a * lp.V, vav = v.transpose() * a * v;
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Vec x = rng.normalVec(n);
      worst = std::max({worst, relErr(mpg.field(0.0, x, {}), wav * x), relErr(gmg.field(0.0, x, {}), vav * x)});
    }
    out.push_back(checks::atMost("reduction.linearSubspace", worst, 1e-12, "Petrov-Galerkin and Galerkin projection"));
  });

  checks::guarded(out, "reduction.exactReproduction", [&] {
    AdvectionSpec spec;
    const FomSystem fom = advectionFom(spec);
    const double mu = 1.0;
    const EmbeddingPair pair = advectionSolutionPair(spec, mu);
    const Params p = Vec::Constant(1, mu);
    const RomSystem rom = buildRom(fom, makeMpg(pair));
    double fieldErr = 0.0;
    for (double t : linspace(0.0, 1.0, 21)) fieldErr = std::max(fieldErr, std::abs(rom.field(0.0, Vec::Constant(1, t), p)(0) - 1.0));
    out.push_back(checks::atMost("reduction.exactReproduction.reducedField", fieldErr, 1e-12, "exact reproduction"));
    // Error in the step controller's own scaled RMS norm, where one
    // integrator's tolerance is 1 and the combined tolerance of the FOM and
    // ROM runs is 2.
    const IntegratorSpec is;
    const auto times = linspace(0.0, 1.0, 51);
    const Trajectory f = integrate(fom, p, is, times);
    const Trajectory r = liftTrajectory(integrate(rom, p, is, times), pair.phi);
    double err = 0.0;
    for (long k = 0; k < f.size(); ++k) {
      const Vec sc = is.absTol + is.relTol * f.states.col(k).cwiseAbs().array();
      const Vec d = (f.states.col(k) - r.states.col(k)).cwiseQuotient(sc);
      err = std::max(err, d.norm() / std::sqrt(double(d.size())));
    }
    const double combined = 2.0;
    out.push_back(checks::atMost("reduction.exactReproduction.trajectory", err, 10.0 * combined, "exact reproduction"));
  });

  checks::guarded(out, "reduction.lmgEquivalence", [&] {
    const LagrangianSystem lag = pendulumChainLagrangian({});
    const EmbeddingPair pair = samples::randomQuadratic(rng, 16, 3, 0.3);
    Mat states(6, 200);
    for (long k = 0; k < states.cols(); ++k) states.col(k) = 0.5 * rng.normalVec(6);
    const Params mu = Vec::Constant(1, 0.75);
    const auto analytic = lmgEquivalence(lag, pair, states, GqChoice::useGv, mu);
    out.push_back(checks::atMost("reduction.lmgEquivalence.analytic", analytic.maxRelativeError, 1e-8,
                                 "LMG equals reduced Euler-Lagrange"));
    const auto gqI = lmgEquivalence(lag, pair, states, GqChoice::identity, mu);
    out.push_back(checks::atMost("reduction.lmgEquivalence.gqIdentity", gqI.maxRelativeError, 1e-8,
                                 "LMG equals reduced Euler-Lagrange"));
    EmbeddingPair fdPair = pair;
    fdPair.phi = withFiniteDifferenceSecond(pair.phi);
    fdPair.phi.family = EmbeddingFamily::custom;
    const auto fd = lmgEquivalence(lag, fdPair, states, GqChoice::useGv, mu);
    out.push_back(checks::atMost("reduction.lmgEquivalence.finiteDifference", fd.maxRelativeError, 1e-5,
                                 "LMG equals reduced Euler-Lagrange"));
  });

  checks::guarded(out, "reduction.smgStructure", [&] {
    const HamiltonianSystem ham = linearWaveHamiltonian({});
    const Mat v = linearWaveLiftBasis(ham, 4);
    const EmbeddingPair pair = makeLinear(v, symplecticInverse(v).transpose());
    const RomSystem rom = buildRom(ham.base, makeSmg(pair, ham.omega));
    const ReducedHamiltonian rh = reducedHamiltonian(ham, pair.phi);
    const Params mu = Vec::Constant(1, 0.75);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Vec x = rng.normalVec(8);
      const Vec g = rh.gradient(x, mu), f = rom.field(0.0, x, mu);
      worst = std::max(worst, std::abs(g.dot(f)) / std::max(g.norm() * f.norm(), 1e-300));
    }
    out.push_back(checks::atMost("reduction.smgStructure.pointwise", worst, 1e-10, "SMG ROM is Hamiltonian"));
    const auto times = linspace(0.0, 10.0, 101);
    const Trajectory tr = integrate(rom, mu, IntegratorSpec::fixed(Method::implicitMidpoint, 0.01), times);
    std::vector<double> h;
    for (long k = 0; k < tr.size(); ++k) h.push_back(rh.value(tr.states.col(k), mu));
    out.push_back(checks::atMost("reduction.smgStructure.drift", maxDrift(h), 1e-8, "SMG ROM is Hamiltonian"));
  });
  return out;
}

inline std::vector<Check> verifyTraining(std::uint64_t seed) {
  std::vector<Check> out;
  Rng rng(seed + 3);
  checks::guarded(out, "training.podOrthonormality", [&] {
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const Mat g = randomSpd(rng, 20);
      const PodResult p = pod(rng.normalMat(20, 30), 5, g);
      worst = std::max(worst, infNorm(p.V.transpose() * g * p.V - Mat::Identity(5, 5)));
    }
    out.push_back(checks::atMost("training.podOrthonormality", worst, 1e-10, "proper orthogonal decomposition"));
  });
  checks::guarded(out, "training.quadraticRecovery", [&] {
    const auto m = samples::synthesizedManifold(rng, 30, 3, 5, symKronFeature(3));
    const TrainedPair t = fitQuadratic(m.snaps, 3, {1e-10});
    const double rel = mse(t.pair, m.snaps) * m.snaps.count() / m.snaps.states.squaredNorm();
    out.push_back(checks::atMost("training.quadraticRecovery", rel, 1e-14, "quadratic manifold fit"));
  });
  checks::guarded(out, "training.ncaRecovery", [&] {
    const auto m = samples::synthesizedManifold(rng, 30, 3, 5, trigFeature(3));
    const TrainedPair t = fitNca(m.snaps, 3, trigFeature(3), {1e-10});
    const double rel = mse(t.pair, m.snaps) * m.snaps.count() / m.snaps.states.squaredNorm();
    out.push_back(checks::atMost("training.ncaRecovery", rel, 1e-14, "nonlinear compressive approximation"));
  });
  checks::guarded(out, "training.pointwiseMseBound", [&] {
    const SnapshotSet s(rng.normalMat(25, 40));
    double worst = -1e300;
    for (const TrainedPair& t : {fitLinear(s, 4), fitQuadratic(s, 4)}) {
      const double k = s.count();
      worst = std::max(worst, maxSquaredResidual(t.pair, s) - k * mse(t.pair, s));
    }
    out.push_back(checks::atMost("training.pointwiseMseBound", worst, 1e-12, "pointwise MSE bound"));
  });
  checks::guarded(out, "training.quadraticImprovesPod", [&] {
    const SnapshotSet s(rng.normalMat(25, 40));
    const TrainedPair lin = fitLinear(SnapshotSet(Mat(s.states.colwise() - s.states.rowwise().mean())), 4);
    const TrainedPair quad = fitQuadratic(s, 4);
    const double gap = mse(quad.pair, s) - lin.report.finalMse;
    const auto& prm = std::get<QuadraticParameters>(quad.pair.parameters);
    const double ridgeTerm = quad.report.ridge * prm.A2.squaredNorm() / s.count();
    out.push_back(checks::atMost("training.quadraticImprovesPod", gap, 1e-12 + ridgeTerm, "quadratic manifold fit"));
  });
  checks::guarded(out, "training.autoencoderGradient", [&] {
    const SnapshotSet s = toyAutoencoderData(12, 4);
    EmbeddingPair ae = makeAutoencoder({2, 6, 12}, seed + 7);
    const auto& prm = std::get<AutoencoderParameters>(ae.parameters);
    const AutoencoderGradient g = autoencoderGradient(prm.decoder, prm.encoder, s.states);
    Vec grad(prm.decoder.parameterCount() + prm.encoder.parameterCount());
    grad << Mlp::flatten(g.decoder), Mlp::flatten(g.encoder);
    Vec theta(grad.size());
    theta << prm.decoder.parameters(), prm.encoder.parameters();
    auto loss = [&](const Vec& th) {
      Mlp d = prm.decoder, e = prm.encoder;
      d.setParameters(th.head(d.parameterCount()));
      e.setParameters(th.tail(e.parameterCount()));
      return autoencoderGradient(d, e, s.states).loss;
    };
    const Vec dir = rng.normalVec(theta.size());
    const double h = 1e-5;
    const double fd = (loss(theta + h * dir) - loss(theta - h * dir)) / (2 * h);
    const double an = grad.dot(dir);
    out.push_back(checks::atMost("training.autoencoderGradient", std::abs(fd - an) / std::abs(an), 1e-5,
                                 "autoencoder training loss"));
  });
  checks::guarded(out, "training.autoencoderBound", [&] {
    const SnapshotSet s = toyAutoencoderData();
    const TrainedPair t = trainAutoencoder(s, toyAutoencoderOptions(seed));
    Vec lo = Vec::Constant(2, 1e300), hi = Vec::Constant(2, -1e300);
    for (int k = 0; k < s.count(); ++k) {
      const Vec e = t.pair.rho.value(s.states.col(k));
      lo = lo.cwiseMin(e);
      hi = hi.cwiseMax(e);
    }
    std::vector<Vec> probes;
    for (int k = 0; k < 50; ++k) {
      Vec p(2);
      for (int i = 0; i < 2; ++i) p(i) = rng.uniform(lo(i), hi(i));
      probes.push_back(p);
    }
    const auto bound = projectionBound(t.pair, s, probes);
    int holds = 0;
    double worstMargin = 1e300;
    for (const auto& b : bound) {
      holds += b.holds();
      worstMargin = std::min(worstMargin, b.margin());
    }
    out.push_back(checks::reportOnly("training.autoencoderBound.finalMse", t.report.finalMse, "autoencoder training loss"));
    out.push_back(checks::reportOnly("training.autoencoderBound.worstMargin", worstMargin,
                                     "approximate projection bound for autoencoders", "rhs - lhs, negative means violated"));
    out.push_back(checks::atLeast("training.autoencoderBound.fractionHolding", holds / double(bound.size()), 0.95,
                                  "approximate projection bound for autoencoders"));
  });
  return out;
}

inline std::vector<Check> verifyNumerics(std::uint64_t seed) {
  (void)seed;
  std::vector<Check> out;
  const VectorField growth = [](double, const Vec& x, const Params&) { return x; };
  checks::guarded(out, "numerics.rk4Order", [&] {
    std::vector<double> errs;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
      const Trajectory t = integrate(growth, Vec::Ones(1), 0.0, {}, IntegratorSpec::fixed(Method::rk4, h), {1.0});
      errs.push_back(std::abs(t.states(0, 0) - std::exp(1.0)));
    }
    const double r1 = errs[0] / errs[1], r2 = errs[1] / errs[2];
    out.push_back(checks::within("numerics.rk4Order.ratio1", r1, 16 * 0.8, 16 * 1.2, "fourth-order convergence"));
    out.push_back(checks::within("numerics.rk4Order.ratio2", r2, 16 * 0.8, 16 * 1.2, "fourth-order convergence"));
  });
  checks::guarded(out, "numerics.rk45Tolerance", [&] {
    const Trajectory t = integrate(growth, Vec::Ones(1), 0.0, {}, IntegratorSpec::adaptive(1e-8, 1e-8), {1.0});
    out.push_back(checks::atMost("numerics.rk45Tolerance", std::abs(t.states(0, 0) - std::exp(1.0)), 100 * 1e-8,
                                 "adaptive step control"));
  });
  checks::guarded(out, "numerics.midpointEnergy", [&] {
    const HamiltonianSystem osc = quadraticHamiltonian(Mat::Identity(2, 2), Vec::Unit(2, 0), 100.0);
    const Trajectory t = integrate(osc.base, {}, IntegratorSpec::fixed(Method::implicitMidpoint, 0.01), linspace(0.0, 100.0, 101));
    std::vector<double> e;
    for (long k = 0; k < t.size(); ++k) e.push_back(osc.hamiltonian(t.states.col(k), {}));
    out.push_back(checks::atMost("numerics.midpointEnergy", maxDrift(e), 1e-9, "quadratic invariants of the midpoint rule"));
  });
  checks::guarded(out, "numerics.pendulumEnergy", [&] {
    const LagrangianSystem lag = pendulumChainLagrangian({});
    const FomSystem fom = eulerLagrangeVectorField(lag);
    const Params mu = Vec::Constant(1, 0.75);
    const Trajectory t = integrate(fom, mu, IntegratorSpec::adaptive(1e-10, 1e-10), linspace(0.0, 10.0, 201));
    const EnergyFunction energy = energyFunction(lag);
    std::vector<double> e;
    for (long k = 0; k < t.size(); ++k) e.push_back(energy.onState(t.states.col(k), mu));
    out.push_back(checks::atMost("numerics.pendulumEnergy", maxDrift(e), 1e-6, "energy conservation along Euler-Lagrange flow"));
  });
  return out;
}

inline const std::vector<std::string>& verifyScopes() {
  static const std::vector<std::string> s{"geometry", "embeddings", "reduction", "training", "numerics", "all"};
  return s;
}

inline VerificationReport runVerify(const std::string& scope, std::uint64_t seed, int threads = 1) {
  using Suite = std::function<std::vector<Check>(std::uint64_t)>;
  std::vector<std::pair<std::string, Suite>> suites{{"geometry", verifyGeometry},
                                                    {"embeddings", verifyEmbeddings},
                                                    {"reduction", verifyReduction},
                                                    {"training", verifyTraining},
                                                    {"numerics", verifyNumerics}};
  if (std::find(verifyScopes().begin(), verifyScopes().end(), scope) == verifyScopes().end())
    throw ConfigError("unknown verify scope '" + scope + "'");
  std::vector<std::pair<std::string, Suite>> selected;
  for (auto& s : suites)
    if (scope == "all" || scope == s.first) selected.push_back(s);
  std::vector<std::vector<Check>> results(selected.size());
  parallelFor(int(selected.size()), threads,
              [&](int i) { results[std::size_t(i)] = selected[std::size_t(i)].second(seed); });
  VerificationReport r;
  r.seed = seed;
  r.scope = scope;
  for (auto& part : results)
    for (auto& c : part) r.checks.push_back(std::move(c));
  return r;
}

}  // namespace mmor::harness
