#pragma once

// Fully connected tanh networks used as autoencoder decoder/encoder.
// Hidden layers use tanh, the output layer is affine.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mmor/errors.hpp"
#include "mmor/random.hpp"
#include "mmor/types.hpp"

namespace mmor {

struct DenseLayer {
  Mat weight;  // out x in
  Vec bias;    // out
};

class Mlp {
 public:
  Mlp() = default;

  explicit Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    validate();
  }

  /// Weights and biases uniform on (-1/sqrt(fanIn), 1/sqrt(fanIn)).
  static Mlp initialized(const std::vector<int>& widths, Rng& rng) {
    if (widths.size() < 2) throw InvalidArchitecture("network needs at least two widths");
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const int in = widths[l], out = widths[l + 1];
      if (in < 1 || out < 1) throw InvalidArchitecture("layer widths must be positive");
      const double bound = 1.0 / std::sqrt(double(in));
      DenseLayer layer{Mat(out, in), Vec(out)};
      for (int j = 0; j < in; ++j)
        for (int i = 0; i < out; ++i) layer.weight(i, j) = rng.uniform(-bound, bound);
      for (int i = 0; i < out; ++i) layer.bias(i) = rng.uniform(-bound, bound);
      layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
  }

  int inputDim() const { return layers_.empty() ? 0 : int(layers_.front().weight.cols()); }
  int outputDim() const { return layers_.empty() ? 0 : int(layers_.back().weight.rows()); }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::vector<int> widths() const {
    std::vector<int> w;
    if (layers_.empty()) return w;
    w.push_back(inputDim());
    for (const auto& l : layers_) w.push_back(int(l.weight.rows()));
    return w;
  }

  Vec forward(const Vec& x) const {
    requireDim(x.size(), inputDim(), "Mlp input");
    Vec a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Vec z = layers_[l].weight * a + layers_[l].bias;
      a = isHidden(l) ? Vec(z.array().tanh()) : z;
    }
    return a;
  }

  /// Analytic chain-rule Jacobian, outputDim x inputDim.
  Mat jacobian(const Vec& x) const {
    requireDim(x.size(), inputDim(), "Mlp input");
    Vec a = x;
    Mat jac = Mat::Identity(inputDim(), inputDim());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Vec z = layers_[l].weight * a + layers_[l].bias;
      jac = layers_[l].weight * jac;
      if (isHidden(l)) {
        const Vec t = z.array().tanh();
        const Vec d = 1.0 - t.array().square();
        jac = d.asDiagonal() * jac;
        a = t;
      } else {
        a = z;
      }
    }
    return jac;
  }

  /// Layer outputs for a batch (columns are samples); used by backprop.
  struct Tape {
    std::vector<Mat> activations;  // activations[0] = input
  };

  Mat forwardBatch(const Mat& x, Tape& tape) const {
    tape.activations.clear();
    tape.activations.push_back(x);
    Mat a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Mat z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      a = isHidden(l) ? Mat(z.array().tanh()) : z;
      tape.activations.push_back(a);
    }
    return a;
  }

  /// Given dLoss/dOutput per sample, accumulates parameter gradients into
  /// grads (same layout as layers()) and returns dLoss/dInput.
  Mat backwardBatch(const Tape& tape, const Mat& gradOut,
                    std::vector<DenseLayer>& grads) const {
    if (grads.size() != layers_.size()) grads = zeroLike();
    Mat delta = gradOut;
    for (std::size_t li = layers_.size(); li-- > 0;) {
      if (isHidden(li)) {
        const Mat& t = tape.activations[li + 1];
        delta = (delta.array() * (1.0 - t.array().square())).matrix();
      }
      grads[li].weight += delta * tape.activations[li].transpose();
      grads[li].bias += delta.rowwise().sum();
      delta = layers_[li].weight.transpose() * delta;
    }
    return delta;
  }

  std::vector<DenseLayer> zeroLike() const {
    std::vector<DenseLayer> z;
    for (const auto& l : layers_)
      z.push_back({Mat::Zero(l.weight.rows(), l.weight.cols()), Vec::Zero(l.bias.size())});
    return z;
  }

  long parameterCount() const {
    long c = 0;
    for (const auto& l : layers_) c += l.weight.size() + l.bias.size();
    return c;
  }

  /// Flattened parameters: per layer, weight (column-major) then bias.
  static Vec flatten(const std::vector<DenseLayer>& layers) {
    long c = 0;
    for (const auto& l : layers) c += l.weight.size() + l.bias.size();
    Vec p(c);
    long k = 0;
    for (const auto& l : layers) {
      p.segment(k, l.weight.size()) = Eigen::Map<const Vec>(l.weight.data(), l.weight.size());
      k += l.weight.size();
      p.segment(k, l.bias.size()) = l.bias;
      k += l.bias.size();
    }
    return p;
  }

  Vec parameters() const { return flatten(layers_); }

  void setParameters(const Vec& p) {
    requireDim(p.size(), parameterCount(), "Mlp parameters");
    long k = 0;
    for (auto& l : layers_) {
      Eigen::Map<Vec>(l.weight.data(), l.weight.size()) = p.segment(k, l.weight.size());
      k += l.weight.size();
      l.bias = p.segment(k, l.bias.size());
      k += l.bias.size();
    }
  }

 private:
  bool isHidden(std::size_t l) const { return l + 1 < layers_.size(); }

  void validate() const {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (layers_[l].bias.size() != layers_[l].weight.rows())
        throw InvalidArchitecture("bias size does not match layer output width");
      if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows())
        throw InvalidArchitecture("layer " + std::to_string(l) +
                                  " input width does not match previous output width");
    }
  }

  std::vector<DenseLayer> layers_;
};

}  // namespace mmor
