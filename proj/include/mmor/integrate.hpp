#pragma once

// Time integration with dense output: classical RK4, Dormand-Prince 5(4)
// with PI step control, and the implicit midpoint rule.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "mmor/embeddings.hpp"
#include "mmor/errors.hpp"
#include "mmor/reduction.hpp"
#include "mmor/systems.hpp"
#include "mmor/types.hpp"

namespace mmor {

struct IntegratorStats {
  long steps = 0;
  long rejectedSteps = 0;
  long rhsEvals = 0;
};

struct Trajectory {
  std::vector<double> times;
  Mat states;  // dim x times.size()
  IntegratorStats stats;

  long size() const { return long(times.size()); }
  int dim() const { return int(states.rows()); }
};

enum class Method { rk4, rk45, implicitMidpoint };

inline const char* toString(Method m) {
  switch (m) {
    case Method::rk4: return "rk4";
    case Method::rk45: return "rk45";
    default: return "implicitMidpoint";
  }
}

struct NewtonOptions {
  double tol = 1e-12;
  int maxIter = 50;
};

struct IntegratorSpec {
  Method method = Method::rk45;
  double step = 1e-2;  // rk4, implicitMidpoint; initial-step hint for rk45 when > 0
  double absTol = 1e-8;
  double relTol = 1e-8;
  long maxSteps = 1000000;
  NewtonOptions newton;
  bool initialStepFromHint = false;

  static IntegratorSpec fixed(Method m, double h) {
    IntegratorSpec s;
    s.method = m;
    s.step = h;
    return s;
  }
  static IntegratorSpec adaptive(double absTol, double relTol) {
    IntegratorSpec s;
    s.method = Method::rk45;
    s.absTol = absTol;
    s.relTol = relTol;
    return s;
  }

  void validate() const {
    if (method != Method::rk45 && !(step > 0.0)) throw ConfigError("integrator step must be positive");
    if (method == Method::rk45 && (!(absTol > 0.0) || !(relTol >= 0.0)))
      throw ConfigError("integrator tolerances must be positive");
    if (maxSteps < 1) throw ConfigError("maxSteps must be positive");
    if (!(newton.tol > 0.0) || newton.maxIter < 1) throw ConfigError("invalid Newton options");
  }
};

namespace detail {

/// Emits cubic Hermite samples for all requested times in (t0, t1].
class DenseSampler {
 public:
  DenseSampler(const std::vector<double>& sampleTimes, Trajectory& out)
      : times_(sampleTimes), out_(out) {}

  void atStart(double t0, const Vec& y0) {
    while (next_ < times_.size() && times_[next_] <= t0) emit(y0);
  }

  void onStep(double t0, const Vec& y0, const Vec& f0, double t1, const Vec& y1, const Vec& f1) {
    const double h = t1 - t0;
    while (next_ < times_.size() && times_[next_] <= t1) {
      const double th = (times_[next_] - t0) / h;
      if (th >= 1.0) {
        emit(y1);
        continue;
      }
      const double th2 = th * th, th3 = th2 * th;
      const double h00 = 2 * th3 - 3 * th2 + 1, h10 = th3 - 2 * th2 + th;
      const double h01 = -2 * th3 + 3 * th2, h11 = th3 - th2;
      emit(h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1);
    }
  }

  bool done() const { return next_ >= times_.size(); }

 private:
  void emit(const Vec& y) { out_.states.col(long(next_++)) = y; }

  const std::vector<double>& times_;
  Trajectory& out_;
  std::size_t next_ = 0;
};

inline void checkFinite(const Vec& y, double t) {
  if (!y.allFinite()) throw Blowup("non-finite state", t);
}

inline double errorNorm(const Vec& err, const Vec& y0, const Vec& y1, double atol, double rtol) {
  double s = 0.0;
  for (long i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    s += (err(i) / sc) * (err(i) / sc);
  }
  return std::sqrt(s / double(std::max<long>(err.size(), 1)));
}

}  // namespace detail

/// Integrates dy/dt = f(t, y; mu) from t0 and samples at the given
/// nondecreasing times (all >= t0). Degeneracy of a reduced tensor during
/// integration is rethrown with the failure time attached.
inline Trajectory integrate(const VectorField& f, const Vec& y0, double t0, const Params& mu,
                            const IntegratorSpec& spec, const std::vector<double>& sampleTimes) {
  spec.validate();
  if (sampleTimes.empty()) throw ConfigError("no sample times requested");
  for (std::size_t i = 0; i < sampleTimes.size(); ++i) {
    if (sampleTimes[i] < t0) throw ConfigError("sample time before initial time");
    if (i > 0 && !(sampleTimes[i] > sampleTimes[i - 1]))
      throw ConfigError("sample times must be strictly increasing");
  }
  const long dim = y0.size();
  Trajectory out;
  out.times = sampleTimes;
  out.states.resize(dim, long(sampleTimes.size()));
  detail::DenseSampler sampler(sampleTimes, out);
  const double tEnd = sampleTimes.back();

  double t = t0;
  Vec y = y0;
  auto rhs = [&](double tt, const Vec& yy) -> Vec {
    ++out.stats.rhsEvals;
    try {
      Vec r = f(tt, yy, mu);
      if (r.size() != dim) throw InvalidDimension("vector field returned wrong dimension");
      return r;
    } catch (const DegenerateTensor& e) {
      throw DegenerateTensor(std::string(e.what()) + " at t=" + std::to_string(tt), e.condition(), tt);
    }
  };

  detail::checkFinite(y, t);
  sampler.atStart(t, y);
  if (sampler.done()) return out;

  Vec fy = rhs(t, y);
  const double span = tEnd - t0;
  const double tiny = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(tEnd));

  if (spec.method == Method::rk4) {
    const long nSteps = std::max<long>(1, long(std::ceil(span / spec.step - 1e-9)));
    if (nSteps > spec.maxSteps) throw StepLimit("rk4 step limit exceeded", t);
    for (long s = 0; s < nSteps; ++s) {
      const double tn = t0 + double(s) * spec.step;
      const double tn1 = (s + 1 == nSteps) ? tEnd : t0 + double(s + 1) * spec.step;
      const double h = tn1 - tn;
      const Vec k1 = fy;
      const Vec k2 = rhs(tn + 0.5 * h, y + 0.5 * h * k1);
      const Vec k3 = rhs(tn + 0.5 * h, y + 0.5 * h * k2);
      const Vec k4 = rhs(tn + h, y + h * k3);
      Vec y1 = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      detail::checkFinite(y1, tn1);
      Vec f1 = rhs(tn1, y1);
      sampler.onStep(tn, y, fy, tn1, y1, f1);
      y = std::move(y1);
      fy = std::move(f1);
      ++out.stats.steps;
    }
    return out;
  }

  if (spec.method == Method::implicitMidpoint) {
    const long nSteps = std::max<long>(1, long(std::ceil(span / spec.step - 1e-9)));
    if (nSteps > spec.maxSteps) throw StepLimit("implicit midpoint step limit exceeded", t);
    const double sqrtEps = std::sqrt(std::numeric_limits<double>::epsilon());
    for (long s = 0; s < nSteps; ++s) {
      const double tn = t0 + double(s) * spec.step;
      const double tn1 = (s + 1 == nSteps) ? tEnd : t0 + double(s + 1) * spec.step;
      const double h = tn1 - tn;
      const double tm = tn + 0.5 * h;
      // Forward-difference Jacobian at the step start, reused for all
      // iterations of this step.
      Mat jac(dim, dim);
      for (long j = 0; j < dim; ++j) {
        Vec yp = y;
        const double dj = sqrtEps * (1.0 + std::abs(y(j)));
        yp(j) += dj;
        jac.col(j) = (rhs(tm, yp) - fy) / dj;
      }
      const Eigen::PartialPivLU<Mat> lu(Mat::Identity(dim, dim) - 0.5 * h * jac);
      Vec y1 = y + h * fy;
      bool converged = false;
      for (int it = 0; it < spec.newton.maxIter; ++it) {
        const Vec residual = y1 - y - h * rhs(tm, 0.5 * (y + y1));
        const Vec delta = lu.solve(-residual);
        y1 += delta;
        if (!y1.allFinite()) throw Blowup("non-finite Newton iterate", tn);
        const double scale = 1.0 + y1.cwiseAbs().maxCoeff();
        if (delta.cwiseAbs().maxCoeff() <= spec.newton.tol * scale) {
          converged = true;
          break;
        }
      }
      if (!converged) throw NonConvergence("implicit midpoint Newton iteration failed", tn);
      Vec f1 = rhs(tn1, y1);
      sampler.onStep(tn, y, fy, tn1, y1, f1);
      y = std::move(y1);
      fy = std::move(f1);
      ++out.stats.steps;
    }
    return out;
  }

  // Dormand-Prince 5(4).
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double atol = spec.absTol, rtol = spec.relTol;
  double h;
  if (spec.initialStepFromHint && spec.step > 0.0) {
    h = spec.step;
  } else {
    // Initial step heuristic (Hairer, Norsett, Wanner).
    const Vec sc = (atol + rtol * y.cwiseAbs().array()).matrix();
    const double d0 = std::sqrt((y.array() / sc.array()).square().mean());
    const double d1 = std::sqrt((fy.array() / sc.array()).square().mean());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    const Vec f1 = rhs(t + h0, y + h0 * fy);
    const double d2 = std::sqrt((((f1 - fy).array() / sc.array())).square().mean()) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min(h, span);

  const double beta = 0.04, alpha = 0.2 - 0.75 * beta;
  double errOld = 1e-4;
  bool rejectedLast = false;
  while (t < tEnd - tiny) {
    if (out.stats.steps + out.stats.rejectedSteps >= spec.maxSteps)
      throw StepLimit("rk45 step limit exceeded", t);
    if (t + h > tEnd) h = tEnd - t;
    if (h <= tiny) throw StepLimit("rk45 step size underflow", t);
    const Vec& k1 = fy;
    const Vec k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    const Vec k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = rhs(t + h, y1);
    const Vec errVec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = detail::errorNorm(errVec, y, y1, atol, rtol);
    if (!std::isfinite(err)) {
      h *= 0.2;
      ++out.stats.rejectedSteps;
      rejectedLast = true;
      continue;
    }
    if (err <= 1.0) {
      const double tNew = (tEnd - (t + h) <= tiny) ? tEnd : t + h;
      detail::checkFinite(y1, tNew);
      sampler.onStep(t, y, fy, tNew, y1, k7);
      t = tNew;
      y = y1;
      fy = k7;
      ++out.stats.steps;
      double fac = err == 0.0 ? 10.0 : 0.9 * std::pow(err, -alpha) * std::pow(errOld, beta);
      fac = std::clamp(fac, 0.2, 10.0);
      if (rejectedLast) fac = std::min(fac, 1.0);
      h *= fac;
      errOld = std::max(err, 1e-4);
      rejectedLast = false;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -alpha));
      ++out.stats.rejectedSteps;
      rejectedLast = true;
    }
  }
  return out;
}

inline Trajectory integrate(const FomSystem& sys, const Params& mu, const IntegratorSpec& spec,
                            const std::vector<double>& sampleTimes) {
  return integrate(sys.vectorField, sys.initial(mu), sys.t0, mu, spec, sampleTimes);
}

inline Trajectory integrate(const RomSystem& sys, const Params& mu, const IntegratorSpec& spec,
                            const std::vector<double>& sampleTimes, double t0 = 0.0) {
  const double start = sys.fom ? sys.fom->t0 : t0;
  return integrate(sys.vectorField, sys.initial(mu), start, mu, spec, sampleTimes);
}

/// Evenly spaced times t0, t0 + dt, ..., tEnd (count >= 2 points).
inline std::vector<double> linspace(double t0, double t1, int count) {
  std::vector<double> t(std::max(count, 1));
  if (count <= 1) {
    t[0] = t0;
    return t;
  }
  for (int i = 0; i < count; ++i) t[i] = t0 + (t1 - t0) * double(i) / double(count - 1);
  t.back() = t1;
  return t;
}

/// Pointwise phi at every sample time.
inline Trajectory liftTrajectory(const Trajectory& reduced, const Embedding& phi) {
  requireDim(reduced.dim(), phi.reducedDim, "liftTrajectory: reduced state dimension");
  Trajectory out;
  out.times = reduced.times;
  out.stats = reduced.stats;
  out.states.resize(phi.fullDim, reduced.size());
  for (long k = 0; k < reduced.size(); ++k) out.states.col(k) = phi.value(reduced.states.col(k));
  return out;
}

struct TrajectoryError {
  double l2InTime = 0.0;
  double lInfInTime = 0.0;
  std::vector<double> perTime;
};

/// Per-time g-norm errors, trapezoidal L2-in-time and max-in-time.
inline TrajectoryError trajectoryError(const Trajectory& fom, const Trajectory& lifted,
                                       const Mat& metric) {
  if (fom.times.size() != lifted.times.size())
    throw GridMismatch("trajectories have different numbers of samples");
  for (std::size_t i = 0; i < fom.times.size(); ++i)
    if (fom.times[i] != lifted.times[i]) throw GridMismatch("trajectory sample times differ");
  requireDim(lifted.dim(), fom.dim(), "trajectoryError: state dimension");
  const bool identityMetric = metric.size() == 0;
  if (!identityMetric) requireDim(metric.rows(), fom.dim(), "trajectoryError: metric");
  TrajectoryError e;
  for (long k = 0; k < fom.size(); ++k) {
    const Vec d = fom.states.col(k) - lifted.states.col(k);
    const double nrm = std::sqrt(std::max(0.0, identityMetric ? d.squaredNorm() : d.dot(metric * d)));
    e.perTime.push_back(nrm);
    e.lInfInTime = std::max(e.lInfInTime, nrm);
  }
  double integral = 0.0;
  for (std::size_t k = 1; k < e.perTime.size(); ++k)
    integral += 0.5 * (fom.times[k] - fom.times[k - 1]) *
                (e.perTime[k] * e.perTime[k] + e.perTime[k - 1] * e.perTime[k - 1]);
  e.l2InTime = std::sqrt(integral);
  return e;
}

inline TrajectoryError trajectoryError(const Trajectory& fom, const Trajectory& lifted) {
  return trajectoryError(fom, lifted, Mat());
}

}  // namespace mmor
