#pragma once

// Experiment configuration: JSON schema, defaults and up-front validation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmor/errors.hpp"
#include "mmor/integrate.hpp"
#include "mmor/reduction.hpp"
#include "mmor/systems.hpp"

namespace mmor::harness {

using json = nlohmann::json;

enum class ProblemKind { advection, linearWave, pendulumChain };

inline const char* toString(ProblemKind p) {
  switch (p) {
    case ProblemKind::advection: return "advection";
    case ProblemKind::linearWave: return "linearWave";
    default: return "pendulumChain";
  }
}

struct ProblemConfig {
  ProblemKind kind = ProblemKind::advection;
  int size = 64;  // grid points, or pendulum count
  std::pair<double, double> parameterRange{0.5, 1.0};
  AdvectionScheme scheme = AdvectionScheme::central;
  double bumpCenter = 0.5;
  double bumpWidth = 0.1;
  double amplitude = 0.8;
  double tEnd = 1.0;
};

struct EmbeddingConfig {
  // linear, quadratic, nca, autoencoder, identity, cotangentLift, exactSolution
  std::string family = "linear";
  int n = 4;
  std::optional<double> ridge;
  std::string feature = "symKron";
  double featureConstant = 1.0;
  std::vector<int> hiddenWidths{16};
  int epochs = 1000;
  double learningRate = 1e-3;
  int batchSize = 0;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
};

struct ReductionConfig {
  ReductionKind kind = ReductionKind::MPG;
  GqChoice gq = GqChoice::useGv;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemConfig problem;
  std::vector<double> trainParameters;
  std::vector<double> snapshotTimes;
  std::vector<double> evalParameters;
  std::vector<double> evalTimes;
  EmbeddingConfig embedding;
  ReductionConfig reduction;
  IntegratorSpec integrator;
  std::string output = "out";
  json source;  // the parsed document, for hashing

  /// Dimension of the states the embedding is trained on.
  int trainingDim() const {
    switch (problem.kind) {
      case ProblemKind::advection: return problem.size;
      case ProblemKind::linearWave: return 2 * problem.size;
      default: return reduction.kind == ReductionKind::LMG ? problem.size : 2 * problem.size;
    }
  }
  int snapshotCount() const { return int(trainParameters.size() * snapshotTimes.size()); }
};

namespace detail {

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

/// Either an explicit array or {"start", "stop", "count"}.
inline std::vector<double> grid(const json& j, const char* what, double start, double stop) {
  if (j.is_array()) return j.get<std::vector<double>>();
  if (j.is_object()) {
    const int count = get<int>(j, "count", 0);
    if (count < 1) throw ConfigError(std::string(what) + ": count must be positive");
    return linspace(get<double>(j, "start", start), get<double>(j, "stop", stop), count);
  }
  throw ConfigError(std::string(what) + " must be an array or {start, stop, count}");
}

inline std::vector<double> midpoints(const std::vector<double>& v) {
  if (v.size() < 2) return v;
  std::vector<double> m;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) m.push_back(0.5 * (v[i] + v[i + 1]));
  return m;
}

}  // namespace detail

inline ProblemKind parseProblemKind(const std::string& s) {
  if (s == "advection") return ProblemKind::advection;
  if (s == "linearWave") return ProblemKind::linearWave;
  if (s == "pendulumChain") return ProblemKind::pendulumChain;
  throw ConfigError("unknown problem '" + s + "' (expected advection, linearWave or pendulumChain)");
}

inline ReductionKind parseReductionKind(const std::string& s) {
  if (s == "MPG") return ReductionKind::MPG;
  if (s == "GMG") return ReductionKind::GMG;
  if (s == "LMG") return ReductionKind::LMG;
  if (s == "SMG") return ReductionKind::SMG;
  throw ConfigError("unknown reduction '" + s + "' (expected MPG, GMG, LMG or SMG)");
}

inline Method parseMethod(const std::string& s) {
  if (s == "rk4") return Method::rk4;
  if (s == "rk45") return Method::rk45;
  if (s == "implicitMidpoint") return Method::implicitMidpoint;
  throw ConfigError("unknown integrator '" + s + "' (expected rk4, rk45 or implicitMidpoint)");
}

/// Checks everything that can be known before compute.
inline void validate(const ExperimentConfig& c) {
  const auto& p = c.problem;
  if (p.kind == ProblemKind::pendulumChain ? p.size < 1 : p.size < 4)
    throw InvalidDimension("problem size " + std::to_string(p.size) + " is too small");
  if (!(p.tEnd > 0.0)) throw ConfigError("problem tEnd must be positive");
  if (!(p.bumpWidth > 0.0)) throw ConfigError("bumpWidth must be positive");
  if (c.trainParameters.empty()) throw ConfigError("snapshotPlan.parameters is empty");
  if (c.snapshotTimes.empty()) throw ConfigError("snapshotPlan.times is empty");
  if (c.evalParameters.empty()) throw ConfigError("evaluation.parameters is empty");
  if (c.evalTimes.empty()) throw ConfigError("evaluation.times is empty");
  for (const auto* ts : {&c.snapshotTimes, &c.evalTimes})
    for (std::size_t i = 0; i < ts->size(); ++i) {
      if ((*ts)[i] < 0.0 || (*ts)[i] > p.tEnd + 1e-12)
        throw ConfigError("sample time " + std::to_string((*ts)[i]) + " outside [0, tEnd]");
      if (i > 0 && !((*ts)[i] > (*ts)[i - 1])) throw ConfigError("sample times must be strictly increasing");
    }
  c.integrator.validate();

  const auto& e = c.embedding;
  const auto kind = c.reduction.kind;
  if (kind == ReductionKind::SMG && p.kind != ProblemKind::linearWave)
    throw ConfigError("SMG needs a Hamiltonian problem with a skew-symmetric nondegenerate form "
                      "(linearWave); got " + std::string(toString(p.kind)));
  if (kind == ReductionKind::LMG && p.kind != ProblemKind::pendulumChain)
    throw ConfigError("LMG needs a regular Lagrangian problem (pendulumChain); got " +
                      std::string(toString(p.kind)));
  if (e.n < 1) throw InvalidDimension("embedding.n must be at least 1");

  const int bigN = c.trainingDim();
  const int k = c.snapshotCount();
  const std::string& f = e.family;
  if (f == "identity") {
    if (e.n != bigN)
      throw InvalidDimension("identity embedding needs n = " + std::to_string(bigN));
  } else if (f == "exactSolution") {
    if (p.kind != ProblemKind::advection) throw ConfigError("exactSolution embedding exists only for advection");
    if (e.n != 1) throw InvalidDimension("exactSolution embedding has n = 1");
    if (kind != ReductionKind::MPG && kind != ReductionKind::GMG)
      throw ConfigError("exactSolution embedding supports MPG and GMG");
  } else if (f == "cotangentLift") {
    if (p.kind != ProblemKind::linearWave) throw ConfigError("cotangentLift embedding needs linearWave");
    if (e.n % 2 != 0) throw InvalidDimension("cotangentLift needs an even n");
    if (e.n / 2 > std::min(p.size, 2 * k))
      throw InvalidDimension("cotangentLift: n/2 exceeds min(N, 2K)");
  } else if (f == "linear" || f == "quadratic" || f == "nca" || f == "autoencoder") {
    if (e.n > std::min(bigN, k))
      throw InvalidDimension("embedding.n = " + std::to_string(e.n) + " exceeds min(N, K) = " +
                             std::to_string(std::min(bigN, k)));
    if (f == "nca" && e.feature != "symKron" && e.feature != "trig" && e.feature != "constant")
      throw ConfigError("unknown NCA feature '" + e.feature + "'");
    if (f == "autoencoder") {
      for (int w : e.hiddenWidths)
        if (w < 1) throw InvalidArchitecture("hidden widths must be positive");
      if (e.epochs < 0 || e.batchSize < 0 || !(e.learningRate > 0.0))
        throw ConfigError("invalid autoencoder training settings");
      if (e.optimizer != "gd" && e.optimizer != "adam")
        throw ConfigError("optimizer must be gd or adam");
    }
    if (e.ridge && !(*e.ridge >= 0.0)) throw ConfigError("ridge must be non-negative");
  } else {
    throw ConfigError("unknown embedding family '" + f + "'");
  }
  if (kind == ReductionKind::SMG && f != "cotangentLift" && f != "identity")
    throw ConfigError("SMG needs a symplectic embedding (cotangentLift or identity)");
  if (kind == ReductionKind::LMG && f == "autoencoder")
    throw ConfigError("LMG needs second derivatives; use linear, quadratic or nca");
}

inline ExperimentConfig parseConfig(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.source = j;
  c.name = detail::get<std::string>(j, "name", c.name);
  c.output = detail::get<std::string>(j, "output", c.output);

  const json pj = j.value("problem", json::object());
  auto& p = c.problem;
  p.kind = parseProblemKind(detail::get<std::string>(pj, "type", "advection"));
  p.size = detail::get<int>(pj, "size", p.kind == ProblemKind::pendulumChain ? 16 : 64);
  p.tEnd = detail::get<double>(pj, "tEnd", p.kind == ProblemKind::advection ? 1.0 : 10.0);
  p.bumpCenter = detail::get<double>(pj, "bumpCenter", p.bumpCenter);
  p.bumpWidth = detail::get<double>(pj, "bumpWidth", p.bumpWidth);
  p.amplitude = detail::get<double>(pj, "amplitude", p.amplitude);
  const auto range = detail::get<std::vector<double>>(pj, "parameterRange", {0.5, 1.0});
  if (range.size() != 2 || !(range[0] <= range[1])) throw ConfigError("parameterRange must be [lo, hi]");
  p.parameterRange = {range[0], range[1]};
  const std::string scheme = detail::get<std::string>(pj, "scheme", "central");
  if (scheme == "central") p.scheme = AdvectionScheme::central;
  else if (scheme == "upwind") p.scheme = AdvectionScheme::upwind;
  else throw ConfigError("unknown advection scheme '" + scheme + "'");

  const json plan = j.value("snapshotPlan", json::object());
  c.trainParameters = plan.contains("parameters")
                          ? detail::grid(plan.at("parameters"), "snapshotPlan.parameters",
                                         p.parameterRange.first, p.parameterRange.second)
                          : linspace(p.parameterRange.first, p.parameterRange.second, 3);
  c.snapshotTimes = plan.contains("times")
                        ? detail::grid(plan.at("times"), "snapshotPlan.times", 0.0, p.tEnd)
                        : linspace(0.0, p.tEnd, 21);

  const json ev = j.value("evaluation", json::object());
  c.evalParameters = ev.contains("parameters")
                         ? detail::grid(ev.at("parameters"), "evaluation.parameters",
                                        p.parameterRange.first, p.parameterRange.second)
                         : detail::midpoints(c.trainParameters);
  c.evalTimes = ev.contains("times") ? detail::grid(ev.at("times"), "evaluation.times", 0.0, p.tEnd)
                                     : linspace(0.0, p.tEnd, 101);

  const json ej = j.value("embedding", json::object());
  auto& e = c.embedding;
  e.family = detail::get<std::string>(ej, "family", e.family);
  e.n = detail::get<int>(ej, "n", e.n);
  if (ej.contains("ridge")) e.ridge = detail::get<double>(ej, "ridge", 0.0);
  e.feature = detail::get<std::string>(ej, "feature", e.feature);
  e.featureConstant = detail::get<double>(ej, "featureConstant", e.featureConstant);
  e.hiddenWidths = detail::get<std::vector<int>>(ej, "hiddenWidths", e.hiddenWidths);
  e.epochs = detail::get<int>(ej, "epochs", e.epochs);
  e.learningRate = detail::get<double>(ej, "learningRate", e.learningRate);
  e.batchSize = detail::get<int>(ej, "batchSize", e.batchSize);
  e.optimizer = detail::get<std::string>(ej, "optimizer", e.optimizer);
  e.seed = detail::get<std::uint64_t>(ej, "seed", e.seed);

  const json rj = j.value("reduction", json::object());
  c.reduction.kind = parseReductionKind(detail::get<std::string>(rj, "kind", "MPG"));
  const std::string gq = detail::get<std::string>(rj, "gq", "gv");
  if (gq == "gv") c.reduction.gq = GqChoice::useGv;
  else if (gq == "identity") c.reduction.gq = GqChoice::identity;
  else throw ConfigError("reduction.gq must be gv or identity");

  const json ij = j.value("integrator", json::object());
  auto& s = c.integrator;
  s.method = parseMethod(detail::get<std::string>(ij, "method", "rk45"));
  s.step = detail::get<double>(ij, "step", s.step);
  s.absTol = detail::get<double>(ij, "absTol", s.absTol);
  s.relTol = detail::get<double>(ij, "relTol", s.relTol);
  s.maxSteps = detail::get<long>(ij, "maxSteps", s.maxSteps);
  const json nj = ij.value("newton", json::object());
  s.newton.tol = detail::get<double>(nj, "tol", s.newton.tol);
  s.newton.maxIter = detail::get<int>(nj, "maxIter", s.newton.maxIter);

  validate(c);
  return c;
}

}  // namespace mmor::harness
