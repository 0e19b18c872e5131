#pragma once

// Snapshot-based construction of embedding/reduction pairs: MSE, POD,
// quadratic and NCA fits, autoencoder training and the approximate
// projection bound for autoencoders.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "mmor/embeddings.hpp"
#include "mmor/errors.hpp"
#include "mmor/mlp.hpp"
#include "mmor/random.hpp"
#include "mmor/types.hpp"

namespace mmor {

struct SnapshotOrigin {
  double t = 0.0;
  Params mu;
};

struct SnapshotSet {
  Mat states;  // N x K
  Mat metric;  // N x N spd; empty means identity
  std::vector<SnapshotOrigin> provenance;

  SnapshotSet() = default;
  explicit SnapshotSet(Mat x, Mat g = Mat(), std::vector<SnapshotOrigin> prov = {})
      : states(std::move(x)), metric(std::move(g)), provenance(std::move(prov)) {
    validate();
  }

  int fullDim() const { return int(states.rows()); }
  int count() const { return int(states.cols()); }
  bool identityMetric() const { return metric.size() == 0; }
  Mat metricMatrix() const {
    return identityMetric() ? Mat(Mat::Identity(fullDim(), fullDim())) : metric;
  }

  void validate() const {
    if (states.cols() < 1) throw InvalidDimension("snapshot set needs at least one snapshot");
    if (!states.allFinite()) throw InvalidDimension("snapshot set contains non-finite entries");
    if (!identityMetric()) {
      requireDim(metric.rows(), states.rows(), "snapshot metric rows");
      requireDim(metric.cols(), states.rows(), "snapshot metric cols");
      if (infNorm(metric - metric.transpose()) > 1e-12 * std::max(1.0, infNorm(metric)))
        throw StructureViolation("snapshot metric is not symmetric");
      Eigen::LLT<Mat> llt(metric);
      if (llt.info() != Eigen::Success)
        throw StructureViolation("snapshot metric is not positive definite");
    }
    if (!provenance.empty() && long(provenance.size()) != states.cols())
      throw InvalidDimension("provenance length does not match snapshot count");
  }
};

struct TrainingReport {
  std::string family;
  double finalMse = 0.0;
  std::map<std::string, double> constraintResiduals;
  std::vector<double> singularValues;
  std::optional<std::pair<double, double>> lipschitzEstimates;  // (C_phi, C_rho)
  std::optional<double> projectionBound;
  std::vector<double> lossCurve;  // per epoch, autoencoders only
  double ridge = 0.0;
};

struct TrainedPair {
  EmbeddingPair pair;
  TrainingReport report;
};

namespace detail {

/// Cholesky factor L with g = L L^T (identity if g is empty).
inline Mat metricFactor(const Mat& g, int n) {
  if (g.size() == 0) return Mat::Identity(n, n);
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) throw StructureViolation("metric is not positive definite");
  return llt.matrixL();
}

inline double gNormSquared(const Mat& g, const Vec& d) {
  return g.size() == 0 ? d.squaredNorm() : d.dot(g * d);
}

/// Flips each column so that its entry of largest magnitude is positive.
inline void fixSigns(Mat& v) {
  for (long j = 0; j < v.cols(); ++j) {
    Eigen::Index i;
    v.col(j).cwiseAbs().maxCoeff(&i);
    if (v(i, j) < 0) v.col(j) *= -1.0;
  }
}

}  // namespace detail

/// (1/K) sum_k ||x_k - phi(rho(x_k))||_g^2.
inline double mse(const EmbeddingPair& pair, const SnapshotSet& snaps) {
  requireDim(pair.fullDim(), snaps.fullDim(), "mse: pair full dimension");
  double s = 0.0;
  for (int k = 0; k < snaps.count(); ++k) {
    const Vec x = snaps.states.col(k);
    s += detail::gNormSquared(snaps.metric, x - pair.phi.value(pair.rho.value(x)));
  }
  return s / double(snaps.count());
}

/// max_k ||x_k - phi(rho(x_k))||_g^2.
inline double maxSquaredResidual(const EmbeddingPair& pair, const SnapshotSet& snaps) {
  double m = 0.0;
  for (int k = 0; k < snaps.count(); ++k) {
    const Vec x = snaps.states.col(k);
    m = std::max(m, detail::gNormSquared(snaps.metric, x - pair.phi.value(pair.rho.value(x))));
  }
  return m;
}

struct PodResult {
  Mat V;  // N x n, V^T g V = I
  std::vector<double> singularValues;
};

/// g-orthonormal POD basis: SVD of L^T X with g = L L^T, V = L^{-T} U_n.
inline PodResult pod(const Mat& x, int n, const Mat& g = Mat()) {
  const long bigN = x.rows(), k = x.cols();
  if (n < 1 || n > std::min(bigN, k))
    throw InvalidDimension("pod: n = " + std::to_string(n) + " must lie in [1, min(N, K)] = [1, " +
                           std::to_string(std::min(bigN, k)) + "]");
  const Mat l = detail::metricFactor(g, int(bigN));
  const Mat y = l.transpose() * x;
  Eigen::BDCSVD<Mat> svd(y, Eigen::ComputeThinU);
  Mat u = svd.matrixU().leftCols(n);
  detail::fixSigns(u);
  PodResult r;
  r.V = g.size() == 0 ? u : Mat(l.transpose().triangularView<Eigen::Upper>().solve(u));
  const Vec& s = svd.singularValues();
  r.singularValues.assign(s.data(), s.data() + s.size());
  return r;
}

inline PodResult pod(const SnapshotSet& snaps, int n) { return pod(snaps.states, n, snaps.metric); }

/// Linear pair from POD: V = W = POD basis, g-orthogonal projection uses
/// W = g V so that W^T V = I.
inline TrainedPair fitLinear(const SnapshotSet& snaps, int n) {
  const PodResult p = pod(snaps, n);
  const Mat w = snaps.identityMetric() ? p.V : Mat(snaps.metric * p.V);
  TrainedPair out{makeLinear(p.V, w), {}};
  out.report.family = "linear";
  out.report.singularValues = p.singularValues;
  out.report.finalMse = mse(out.pair, snaps);
  out.report.constraintResiduals["W^T V - I"] =
      infNorm(w.transpose() * p.V - Mat::Identity(n, n));
  return out;
}

/// Cotangent-lift POD for states ordered (q, p): Phi from POD of [Q, P],
/// basis blkdiag(Phi, Phi) of size 2N x 2n.
inline PodResult cotangentLiftPod(const Mat& x, int n) {
  if (x.rows() % 2 != 0) throw InvalidDimension("cotangentLiftPod: state dimension must be even");
  const long half = x.rows() / 2;
  Mat stacked(half, 2 * x.cols());
  stacked << x.topRows(half), x.bottomRows(half);
  PodResult p = pod(stacked, n);
  p.V = cotangentLift(p.V);
  return p;
}

struct FitOptions {
  /// Ridge weight; defaults to 1e-8 * ||F||_F^2 / K for feature matrix F.
  std::optional<double> ridge;
};

/// Shared pipeline for quadratic and NCA fits: A0 = mean, A1 = POD of
/// centered data, A2 by ridge least squares on the linear residual, then
/// A2 <- (I - A1 A1^T) A2.
inline TrainedPair fitNca(const SnapshotSet& snaps, int n, const FeatureMap& f,
                          const FitOptions& opts = {}) {
  const int bigN = snaps.fullDim(), k = snaps.count();
  if (n < 1 || n > std::min(bigN, k))
    throw InvalidDimension("fit: n = " + std::to_string(n) + " must lie in [1, min(N, K)]");
  if (f.inputDim != n) throw InvalidDimension("fit: feature map input dimension must equal n");
  if (opts.ridge && !(*opts.ridge >= 0.0)) throw ConfigError("ridge must be non-negative");

  const Vec a0 = snaps.states.rowwise().mean();
  const Mat centered = snaps.states.colwise() - a0;
  const PodResult p = pod(centered, n);
  const Mat a1 = p.V;
  const Mat xhat = a1.transpose() * centered;
  const Mat residual = centered - a1 * xhat;

  const int m = f.outputDim;
  Mat feats(m, k);
  for (int j = 0; j < k; ++j) feats.col(j) = f.value(xhat.col(j));
  const double ridge = opts.ridge ? *opts.ridge : 1e-8 * feats.squaredNorm() / double(k);

  // min ||residual - A2 F||^2 + ridge ||A2||^2 as an augmented least-squares
  // problem in A2^T.
  Mat lhs = Mat::Zero(k + m, m);
  lhs.topRows(k) = feats.transpose();
  Mat rhs = Mat::Zero(k + m, bigN);
  rhs.topRows(k) = residual.transpose();
  if (ridge > 0.0) lhs.bottomRows(m) = std::sqrt(ridge) * Mat::Identity(m, m);
  Eigen::ColPivHouseholderQR<Mat> qr(lhs);
  if (ridge == 0.0) {
    qr.setThreshold(1e-12);
    if (qr.rank() < m)
      throw IllConditionedFit("fit: feature matrix has rank " + std::to_string(qr.rank()) +
                              " < " + std::to_string(m) + " with ridge = 0; use a positive ridge");
  }
  Mat a2 = qr.solve(rhs).transpose();
  a2 -= a1 * (a1.transpose() * a2);

  TrainedPair out{makeNca(a2, a1, a0, a1, f), {}};
  std::get<NcaParameters>(out.pair.parameters).feature = f.name;
  out.report.family = "nca";
  out.report.ridge = ridge;
  out.report.singularValues = p.singularValues;
  out.report.constraintResiduals["A1^T A1 - I"] = infNorm(a1.transpose() * a1 - Mat::Identity(n, n));
  out.report.constraintResiduals["A1^T A2"] = infNorm(a1.transpose() * a2);
  out.report.finalMse = mse(out.pair, snaps);
  return out;
}

inline TrainedPair fitQuadratic(const SnapshotSet& snaps, int n, const FitOptions& opts = {}) {
  if (n < 1 || n > std::min(snaps.fullDim(), snaps.count()))
    throw InvalidDimension("fitQuadratic: n = " + std::to_string(n) + " must lie in [1, min(N, K)]");
  TrainedPair fit = fitNca(snaps, n, symKronFeature(n), opts);
  const auto& prm = std::get<NcaParameters>(fit.pair.parameters);
  TrainedPair out{makeQuadratic(prm.A2, prm.A1, prm.A0), fit.report};
  out.report.family = "quadratic";
  return out;
}

//
// Autoencoders.
//

enum class Optimizer { gd, adam };

struct AutoencoderOptions {
  std::vector<int> decoderWidths;  // n, ..., N; encoder mirrored
  int epochs = 1000;
  double learningRate = 1e-3;
  int batchSize = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;
};

/// Loss (1/B) sum ||x - dec(enc(x))||_g^2 over columns of x and its
/// gradient with respect to (decoder, encoder) parameters.
struct AutoencoderGradient {
  double loss = 0.0;
  std::vector<DenseLayer> decoder, encoder;
};

inline AutoencoderGradient autoencoderGradient(const Mlp& decoder, const Mlp& encoder,
                                               const Mat& x, const Mat& g = Mat()) {
  Mlp::Tape encTape, decTape;
  const Mat latent = encoder.forwardBatch(x, encTape);
  const Mat recon = decoder.forwardBatch(latent, decTape);
  const Mat diff = x - recon;
  const Mat gdiff = g.size() == 0 ? diff : Mat(g * diff);
  const double b = double(x.cols());
  AutoencoderGradient out;
  out.loss = (diff.array() * gdiff.array()).sum() / b;
  out.decoder = decoder.zeroLike();
  out.encoder = encoder.zeroLike();
  const Mat gradRecon = (-2.0 / b) * gdiff;
  const Mat gradLatent = decoder.backwardBatch(decTape, gradRecon, out.decoder);
  encoder.backwardBatch(encTape, gradLatent, out.encoder);
  return out;
}

/// Max over the cloud of ||L^T Dphi(xhat)||_2 (C_phi) and of
/// ||Drho(x) L^{-T}||_2 (C_rho), with g = L L^T. These are estimates of
/// global Lipschitz constants from finitely many points.
inline std::pair<double, double> lipschitzEstimates(const EmbeddingPair& pair,
                                                    const std::vector<Vec>& reducedCloud,
                                                    const std::vector<Vec>& fullCloud,
                                                    const Mat& g = Mat()) {
  const Mat l = detail::metricFactor(g, pair.fullDim());
  const Mat lInvT = l.transpose().triangularView<Eigen::Upper>().solve(
      Mat(Mat::Identity(pair.fullDim(), pair.fullDim())));
  double cPhi = 0.0, cRho = 0.0;
  for (const Vec& xh : reducedCloud) {
    Eigen::JacobiSVD<Mat> s(l.transpose() * pair.phi.jacobian(xh));
    cPhi = std::max(cPhi, s.singularValues()(0));
  }
  for (const Vec& x : fullCloud) {
    Eigen::JacobiSVD<Mat> s(pair.rho.jacobian(x) * lInvT);
    cRho = std::max(cRho, s.singularValues()(0));
  }
  return {cPhi, cRho};
}

struct BoundProbe {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs; }
  double margin() const { return rhs - lhs; }
};

/// For each probe xhat: lhs = ||rho(phi(xhat)) - xhat|| and
/// rhs = C_rho sqrt(K L_mse) + (C_rho C_phi + 1) min_k ||xhat - rho(x_k)||.
inline std::vector<BoundProbe> projectionBound(const EmbeddingPair& pair, const SnapshotSet& snaps,
                                               const std::vector<Vec>& probes,
                                               std::pair<double, double> lipschitz) {
  const double loss = mse(pair, snaps);
  std::vector<Vec> encoded;
  for (int k = 0; k < snaps.count(); ++k) encoded.push_back(pair.rho.value(snaps.states.col(k)));
  const auto [cPhi, cRho] = lipschitz;
  std::vector<BoundProbe> out;
  for (const Vec& xh : probes) {
    requireDim(xh.size(), pair.reducedDim(), "projectionBound: probe dimension");
    double dmin = std::numeric_limits<double>::infinity();
    for (const Vec& e : encoded) dmin = std::min(dmin, (xh - e).norm());
    BoundProbe b;
    b.lhs = (pair.rho.value(pair.phi.value(xh)) - xh).norm();
    b.rhs = cRho * std::sqrt(double(snaps.count()) * loss) + (cRho * cPhi + 1.0) * dmin;
    out.push_back(b);
  }
  return out;
}

/// Lipschitz estimates over the encoded snapshots and probes, then the bound.
inline std::vector<BoundProbe> projectionBound(const EmbeddingPair& pair, const SnapshotSet& snaps,
                                               const std::vector<Vec>& probes) {
  std::vector<Vec> reduced = probes, full;
  for (int k = 0; k < snaps.count(); ++k) {
    const Vec x = snaps.states.col(k);
    full.push_back(x);
    reduced.push_back(pair.rho.value(x));
  }
  for (const Vec& p : probes) full.push_back(pair.phi.value(p));
  return projectionBound(pair, snaps, probes, lipschitzEstimates(pair, reduced, full, snaps.metric));
}

inline TrainedPair trainAutoencoder(const SnapshotSet& snaps, const AutoencoderOptions& opts) {
  const auto& w = opts.decoderWidths;
  if (w.size() < 2) throw InvalidArchitecture("autoencoder needs at least the widths n and N");
  if (w.back() != snaps.fullDim())
    throw InvalidArchitecture("decoder output width " + std::to_string(w.back()) +
                              " does not match snapshot dimension " + std::to_string(snaps.fullDim()));
  if (opts.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (!(opts.learningRate > 0.0)) throw ConfigError("learning rate must be positive");
  if (opts.batchSize < 0) throw ConfigError("batch size must be non-negative");

  EmbeddingPair init = makeAutoencoder(w, opts.seed);
  auto& prm = std::get<AutoencoderParameters>(init.parameters);
  Mlp decoder = prm.decoder, encoder = prm.encoder;
  const int k = snaps.count();
  const int batch = (opts.batchSize == 0 || opts.batchSize > k) ? k : opts.batchSize;

  Vec theta(decoder.parameterCount() + encoder.parameterCount());
  theta << decoder.parameters(), encoder.parameters();
  Vec m1 = Vec::Zero(theta.size()), m2 = Vec::Zero(theta.size());
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  Rng shuffleRng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;

  TrainingReport report;
  report.family = "autoencoder";
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    if (batch < k)
      for (int i = k - 1; i > 0; --i) std::swap(order[i], order[shuffleRng.next() % std::uint64_t(i + 1)]);
    for (int start = 0; start < k; start += batch) {
      const int b = std::min(batch, k - start);
      Mat xb(snaps.fullDim(), b);
      for (int j = 0; j < b; ++j) xb.col(j) = snaps.states.col(order[start + j]);
      const AutoencoderGradient gr = autoencoderGradient(decoder, encoder, xb, snaps.metric);
      if (!std::isfinite(gr.loss))
        throw DivergedTraining("autoencoder loss became non-finite at epoch " + std::to_string(epoch) +
                               "; try a smaller learning rate");
      Vec grad(theta.size());
      grad << Mlp::flatten(gr.decoder), Mlp::flatten(gr.encoder);
      ++step;
      if (opts.optimizer == Optimizer::gd) {
        theta -= opts.learningRate * grad;
      } else {
        m1 = beta1 * m1 + (1 - beta1) * grad;
        m2 = beta2 * m2 + (1 - beta2) * grad.cwiseAbs2();
        const double c1 = 1 - std::pow(beta1, double(step)), c2 = 1 - std::pow(beta2, double(step));
        theta.array() -= opts.learningRate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
      }
      decoder.setParameters(theta.head(decoder.parameterCount()));
      encoder.setParameters(theta.tail(encoder.parameterCount()));
    }
    Mlp::Tape t1, t2;
    const Mat recon = decoder.forwardBatch(encoder.forwardBatch(snaps.states, t1), t2);
    const Mat d = snaps.states - recon;
    const double loss = (snaps.identityMetric() ? d.squaredNorm() : (d.array() * (snaps.metric * d).array()).sum()) /
                        double(k);
    if (!std::isfinite(loss))
      throw DivergedTraining("autoencoder loss became non-finite at epoch " + std::to_string(epoch) +
                             "; try a smaller learning rate");
    report.lossCurve.push_back(loss);
  }

  TrainedPair out{makeAutoencoder(std::move(decoder), std::move(encoder)), std::move(report)};
  out.report.finalMse = mse(out.pair, snaps);
  double pp = 0.0;
  for (int j = 0; j < k; ++j) {
    const Vec xh = out.pair.rho.value(snaps.states.col(j));
    pp = std::max(pp, (out.pair.rho.value(out.pair.phi.value(xh)) - xh).norm());
  }
  out.report.constraintResiduals["max ||rho(phi(xhat)) - xhat||"] = pp;
  return out;
}

}  // namespace mmor
