#pragma once

// The snapshots -> train -> run -> report pipeline driven by an
// ExperimentConfig.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "mmor/harness/config.hpp"
#include "mmor/integrate.hpp"
#include "mmor/io.hpp"
#include "mmor/reduction.hpp"
#include "mmor/systems.hpp"
#include "mmor/training.hpp"

namespace mmor::harness {

namespace fs = std::filesystem;

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots so that assembly order does not depend on
/// scheduling.
inline void parallelFor(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(threads, count); ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[std::size_t(i)] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Problem {
  FomSystem fom;
  std::optional<HamiltonianSystem> hamiltonian;
  std::optional<LagrangianSystem> lagrangian;
  AdvectionSpec advection;
};

inline Problem makeProblem(const ExperimentConfig& c) {
  const auto& p = c.problem;
  Problem out;
  switch (p.kind) {
    case ProblemKind::advection: {
      AdvectionSpec s;
      s.gridSize = p.size;
      s.speedRange = {p.parameterRange};
      s.scheme = p.scheme;
      s.bumpCenter = p.bumpCenter;
      s.bumpWidth = p.bumpWidth;
      s.tEnd = p.tEnd;
      out.advection = s;
      out.fom = advectionFom(s);
      break;
    }
    case ProblemKind::linearWave: {
      LinearWaveSpec s;
      s.gridSize = p.size;
      s.stiffnessRange = {p.parameterRange};
      s.bumpCenter = p.bumpCenter;
      s.bumpWidth = p.bumpWidth;
      s.tEnd = p.tEnd;
      out.hamiltonian = linearWaveHamiltonian(s);
      out.fom = out.hamiltonian->base;
      break;
    }
    case ProblemKind::pendulumChain: {
      PendulumChainSpec s;
      s.count = p.size;
      s.couplingRange = {p.parameterRange};
      s.amplitude = p.amplitude;
      s.tEnd = p.tEnd;
      out.lagrangian = pendulumChainLagrangian(s);
      out.fom = eulerLagrangeVectorField(*out.lagrangian);
      break;
    }
  }
  return out;
}

inline std::string describeMu(double mu) { return "mu=" + io::formatDouble(mu); }

//
// snapshots
//

inline SnapshotSet generateSnapshots(const ExperimentConfig& c, int threads = 1) {
  const Problem prob = makeProblem(c);
  const int nmu = int(c.trainParameters.size());
  std::vector<Trajectory> trajs(static_cast<std::size_t>(nmu));
  parallelFor(nmu, threads, [&](int i) {
    const Params mu = Vec::Constant(1, c.trainParameters[std::size_t(i)]);
    try {
      trajs[std::size_t(i)] = integrate(prob.fom, mu, c.integrator, c.snapshotTimes);
    } catch (const IntegrationError& e) {
      throw IntegrationError(std::string(e.what()) + " (" + describeMu(mu(0)) + ", t=" +
                                 io::formatDouble(e.time()) + ")",
                             e.time());
    }
  });
  const long nt = long(c.snapshotTimes.size());
  Mat states(prob.fom.dim, nmu * nt);
  std::vector<SnapshotOrigin> prov;
  for (int i = 0; i < nmu; ++i)
    for (long k = 0; k < nt; ++k) {
      states.col(i * nt + k) = trajs[std::size_t(i)].states.col(k);
      prov.push_back({c.snapshotTimes[std::size_t(k)], Vec::Constant(1, c.trainParameters[std::size_t(i)])});
    }
  return SnapshotSet(states, Mat(), prov);
}

inline SnapshotSet runSnapshots(const ExperimentConfig& c, const fs::path& out, int threads = 1) {
  SnapshotSet s = generateSnapshots(c, threads);
  io::writeSnapshots(out / "snapshots", s, io::configHash(c.source));
  return s;
}

//
// train
//

inline json reportToJson(const TrainingReport& r) {
  json j = {{"family", r.family},
            {"finalMse", r.finalMse},
            {"constraintResiduals", r.constraintResiduals},
            {"singularValues", r.singularValues},
            {"ridge", r.ridge}};
  if (r.lipschitzEstimates)
    j["lipschitzEstimates"] = {{"phi", r.lipschitzEstimates->first}, {"rho", r.lipschitzEstimates->second}};
  if (r.projectionBound) j["projectionBound"] = *r.projectionBound;
  if (!r.lossCurve.empty()) j["lossCurve"] = r.lossCurve;
  return j;
}

/// The states the embedding is fitted to: configuration rows for LMG.
inline SnapshotSet trainingView(const ExperimentConfig& c, const SnapshotSet& s) {
  if (c.reduction.kind == ReductionKind::LMG)
    return SnapshotSet(s.states.topRows(c.problem.size), Mat(), s.provenance);
  return s;
}

inline TrainedPair fitEmbedding(const ExperimentConfig& c, const SnapshotSet& all) {
  const SnapshotSet s = trainingView(c, all);
  const auto& e = c.embedding;
  if (s.fullDim() != c.trainingDim())
    throw InvalidDimension("snapshot dimension " + std::to_string(s.fullDim()) +
                           " does not match the configured problem (" + std::to_string(c.trainingDim()) + ")");
  try {
    if (e.family == "identity") {
      TrainedPair t{makeIdentity(e.n), {}};
      t.report.family = "identity";
      t.report.finalMse = mse(t.pair, s);
      return t;
    }
    if (e.family == "linear") return fitLinear(s, e.n);
    if (e.family == "quadratic") return fitQuadratic(s, e.n, {e.ridge});
    if (e.family == "nca") {
      const FeatureMap f = makeFeature(e.feature, e.n, symKronDim(e.n), e.featureConstant);
      TrainedPair t = fitNca(s, e.n, f, {e.ridge});
      std::get<NcaParameters>(t.pair.parameters).featureConstant = e.featureConstant;
      return t;
    }
    if (e.family == "cotangentLift") {
      const PodResult p = cotangentLiftPod(s.states, e.n / 2);
      TrainedPair t{makeLinear(p.V, symplecticInverse(p.V).transpose()), {}};
      t.report.family = "cotangentLift";
      t.report.singularValues = p.singularValues;
      t.report.finalMse = mse(t.pair, s);
      const Mat jb = canonicalPoisson(s.fullDim() / 2), js = canonicalPoisson(e.n / 2);
      t.report.constraintResiduals["V^T J^T V - J^T"] =
          infNorm(p.V.transpose() * jb.transpose() * p.V - js.transpose());
      return t;
    }
    if (e.family == "autoencoder") {
      AutoencoderOptions o;
      o.decoderWidths.push_back(e.n);
      for (int w : e.hiddenWidths) o.decoderWidths.push_back(w);
      o.decoderWidths.push_back(s.fullDim());
      o.epochs = e.epochs;
      o.learningRate = e.learningRate;
      o.batchSize = e.batchSize;
      o.seed = e.seed;
      o.optimizer = e.optimizer == "gd" ? Optimizer::gd : Optimizer::adam;
      TrainedPair t = trainAutoencoder(s, o);
      std::vector<Vec> probes;
      for (int k = 0; k < s.count(); ++k) probes.push_back(t.pair.rho.value(s.states.col(k)));
      std::vector<Vec> full;
      for (int k = 0; k < s.count(); ++k) full.push_back(s.states.col(k));
      t.report.lipschitzEstimates = lipschitzEstimates(t.pair, probes, full);
      const auto bound = projectionBound(t.pair, s, probes, *t.report.lipschitzEstimates);
      double worst = 0.0;
      for (const auto& b : bound) worst = std::max(worst, b.rhs);
      t.report.projectionBound = worst;
      return t;
    }
  } catch (const IllConditionedFit& err) {
    throw IllConditionedFit("training family '" + e.family + "': " + err.what());
  } catch (const InvalidDimension& err) {
    throw InvalidDimension("training family '" + e.family + "': " + err.what());
  } catch (const DivergedTraining& err) {
    throw DivergedTraining("training family '" + e.family + "': " + err.what());
  }
  throw ConfigError("embedding family '" + e.family + "' is not trainable");
}

inline TrainingReport runTrain(const ExperimentConfig& c, const fs::path& out) {
  const std::string hash = io::configHash(c.source);
  json extra = {{"configHash", hash}, {"configFamily", c.embedding.family}};
  if (c.embedding.family == "exactSolution") {
    json manifest = {{"kind", "embedding"}, {"family", "exactSolution"}, {"reducedDim", 1},
                     {"fullDim", c.problem.size}, {"configHash", hash}};
    io::writeJson(out / "embedding.json", manifest);
    TrainingReport r;
    r.family = "exactSolution";
    json rep = reportToJson(r);
    rep["configHash"] = hash;
    io::writeJson(out / "training_report.json", rep);
    return r;
  }
  const SnapshotSet s = io::readSnapshots(out / "snapshots");
  TrainedPair t = fitEmbedding(c, s);
  io::writeEmbedding(out / "embedding", t.pair, extra);
  json rep = reportToJson(t.report);
  rep["configHash"] = hash;
  io::writeJson(out / "training_report.json", rep);
  return t.report;
}

//
// run
//

inline EmbeddingPair loadPair(const ExperimentConfig& c, const Problem& prob, const fs::path& out,
                              double mu) {
  if (c.embedding.family == "exactSolution") return advectionSolutionPair(prob.advection, mu);
  return io::readEmbedding(out / "embedding");
}

inline ReductionMap makeReduction(const ExperimentConfig& c, const Problem& prob,
                                  const EmbeddingPair& pair, const Params& mu) {
  switch (c.reduction.kind) {
    case ReductionKind::MPG: return makeMpg(pair);
    case ReductionKind::GMG: return makeGmg(pair, identityTensor(pair.fullDim()));
    case ReductionKind::SMG: return makeSmg(pair, prob.hamiltonian->omega);
    default: return lmgReductionMap(*prob.lagrangian, pair, c.reduction.gq, mu);
  }
}

inline double maxDrift(const std::vector<double>& values) {
  double d = 0.0;
  for (double v : values) d = std::max(d, std::abs(v - values.front()));
  return d;
}

struct RunResult {
  json metrics;
  std::string errorsCsv;
};

inline RunResult runOne(const ExperimentConfig& c, const Problem& prob, const fs::path& out,
                        int index) {
  const double muValue = c.evalParameters[std::size_t(index)];
  const Params mu = Vec::Constant(1, muValue);
  json m = {{"mu", muValue}, {"index", index}};
  RunResult res;
  const Trajectory fomTraj = integrate(prob.fom, mu, c.integrator, c.evalTimes);
  m["fomStats"] = {{"steps", fomTraj.stats.steps},
                   {"rejectedSteps", fomTraj.stats.rejectedSteps},
                   {"rhsEvals", fomTraj.stats.rhsEvals}};
  const std::string tag = "mu" + std::to_string(index);
  io::writeText(out / "run" / ("fom_" + tag + ".csv"), io::trajectoryCsv(fomTraj));
  try {
    const EmbeddingPair pair = loadPair(c, prob, out, muValue);
    const ReductionMap rmap = makeReduction(c, prob, pair, mu);
    const RomSystem rom = buildRom(prob.fom, rmap);
    const Trajectory romTraj = integrate(rom, mu, c.integrator, c.evalTimes);
    const Trajectory lifted = liftTrajectory(romTraj, rmap.pair.phi);
    const TrajectoryError err = trajectoryError(fomTraj, lifted);
    double scale = 0.0;
    for (long k = 0; k < fomTraj.size(); ++k) scale = std::max(scale, fomTraj.states.col(k).norm());
    m["status"] = "ok";
    m["l2InTime"] = err.l2InTime;
    m["lInfInTime"] = err.lInfInTime;
    m["relativeLInf"] = scale > 0.0 ? err.lInfInTime / scale : err.lInfInTime;
    m["romStats"] = {{"steps", romTraj.stats.steps},
                     {"rejectedSteps", romTraj.stats.rejectedSteps},
                     {"rhsEvals", romTraj.stats.rhsEvals}};
    if (prob.hamiltonian) {
      std::vector<double> hf, hr;
      const ReducedHamiltonian rh = reducedHamiltonian(*prob.hamiltonian, rmap.pair.phi);
      for (long k = 0; k < fomTraj.size(); ++k) {
        hf.push_back(prob.hamiltonian->hamiltonian(fomTraj.states.col(k), mu));
        hr.push_back(rh.value(romTraj.states.col(k), mu));
      }
      m["fomHamiltonianDrift"] = maxDrift(hf);
      m["romReducedHamiltonianDrift"] = maxDrift(hr);
    }
    if (prob.lagrangian) {
      const EnergyFunction energy = energyFunction(*prob.lagrangian);
      std::vector<double> ef, er;
      for (long k = 0; k < fomTraj.size(); ++k) {
        ef.push_back(energy.onState(fomTraj.states.col(k), mu));
        er.push_back(energy.onState(lifted.states.col(k), mu));
      }
      m["fomEnergyDrift"] = maxDrift(ef);
      m["liftedRomEnergyDrift"] = maxDrift(er);
    }
    io::writeText(out / "run" / ("rom_" + tag + ".csv"), io::trajectoryCsv(lifted));
    io::writeText(out / "run" / ("reduced_" + tag + ".csv"), io::trajectoryCsv(romTraj));
    for (std::size_t k = 0; k < err.perTime.size(); ++k)
      res.errorsCsv += io::formatDouble(muValue) + "," + io::formatDouble(c.evalTimes[k]) + "," +
                       io::formatDouble(err.perTime[k]) + "\n";
  } catch (const DegenerateTensor& e) {
    m["status"] = "failed";
    m["error"] = e.what();
    if (e.time()) m["failureTime"] = *e.time();
  } catch (const IntegrationError& e) {
    m["status"] = "failed";
    m["error"] = e.what();
    m["failureTime"] = e.time();
  }
  res.metrics = m;
  return res;
}

inline json runRun(const ExperimentConfig& c, const fs::path& out, int threads = 1) {
  const Problem prob = makeProblem(c);
  const int count = int(c.evalParameters.size());
  std::vector<RunResult> results(static_cast<std::size_t>(count));
  parallelFor(count, threads, [&](int i) { results[std::size_t(i)] = runOne(c, prob, out, i); });
  json runs = json::array();
  std::string csv = "mu,t,error\n";
  bool ok = true;
  for (const auto& r : results) {
    runs.push_back(r.metrics);
    csv += r.errorsCsv;
    ok = ok && r.metrics.at("status") == "ok";
  }
  json metrics = {{"configHash", io::configHash(c.source)},
                  {"name", c.name},
                  {"problem", toString(c.problem.kind)},
                  {"family", c.embedding.family},
                  {"reduction", toString(c.reduction.kind)},
                  {"integrator", toString(c.integrator.method)},
                  {"status", ok ? "ok" : "failed"},
                  {"runs", runs}};
  io::writeText(out / "errors.csv", csv);
  io::writeJson(out / "metrics.json", metrics);
  return metrics;
}

//
// report
//

/// Markdown summary of whatever outputs exist in the directory.
inline std::string runReport(const fs::path& out) {
  std::string md = "# Experiment report\n\n";
  bool any = false;
  auto num = [](const json& j, const char* key) {
    return j.contains(key) ? io::formatDouble(j.at(key).get<double>()) : std::string("-");
  };
  if (fs::exists(out / "training_report.json")) {
    any = true;
    const json t = io::readJson(out / "training_report.json");
    md += "## Training\n\n- family: " + t.value("family", std::string("?")) + "\n- final MSE: " +
          num(t, "finalMse") + "\n";
    if (t.contains("constraintResiduals"))
      for (const auto& [k, v] : t.at("constraintResiduals").items())
        md += "- residual `" + k + "`: " + io::formatDouble(v.get<double>()) + "\n";
    md += "\n";
  }
  if (fs::exists(out / "metrics.json")) {
    any = true;
    const json m = io::readJson(out / "metrics.json");
    md += "## Runs (" + m.value("reduction", std::string("?")) + ", " + m.value("family", std::string("?")) +
          ")\n\n| mu | status | L2 error | max error | relative max |\n|---|---|---|---|---|\n";
    for (const auto& r : m.at("runs"))
      md += "| " + num(r, "mu") + " | " + r.value("status", std::string("?")) + " | " + num(r, "l2InTime") +
            " | " + num(r, "lInfInTime") + " | " + num(r, "relativeLInf") + " |\n";
    md += "\n";
  }
  if (fs::exists(out / "verification_report.json")) {
    any = true;
    const json v = io::readJson(out / "verification_report.json");
    int pass = 0, fail = 0, info = 0;
    for (const auto& c : v.at("checks")) {
      const std::string s = c.at("status");
      (s == "pass" ? pass : s == "fail" ? fail : info)++;
    }
    md += "## Verification\n\n- pass: " + std::to_string(pass) + "\n- fail: " + std::to_string(fail) +
          "\n- report-only: " + std::to_string(info) + "\n\n";
    for (const auto& c : v.at("checks"))
      if (c.at("status") == "fail") md += "- FAILED `" + c.at("name").get<std::string>() + "`\n";
  }
  if (!any) throw IoError("no outputs found in '" + out.string() + "'");
  io::writeText(out / "report.md", md);
  return md;
}

}  // namespace mmor::harness
