#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cfnn/activation.hpp"

namespace cfnn {

// One fully connected layer. Column j of `weights` is the incoming weight
// vector of neuron j, so the layer maps y to weights^T y + thresholds.
template <typename Scalar>
struct BasicLayer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weights;     // fan_in x fan_out
  Vector thresholds;  // fan_out

  Eigen::Index fan_in() const { return weights.rows(); }
  Eigen::Index fan_out() const { return weights.cols(); }
};

// Feedforward network with structure {J_1, ..., J_M}: M-2 hidden layers
// sigma(W^T y + b) followed by a linear readout W^T y plus a scalar offset.
// The readout layer carries no threshold; its threshold vector is kept for
// uniform layer storage and must be zero.
template <typename Scalar>
class BasicNetwork {
 public:
  using Layer = BasicLayer<Scalar>;
  using Matrix = typename Layer::Matrix;
  using Vector = typename Layer::Vector;

  BasicNetwork(Activation activation, std::vector<Layer> layers, Scalar offset = Scalar(0))
      : activation_(activation), layers_(std::move(layers)), offset_(offset) {
    validate();
  }

  Activation activation() const { return activation_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t k) const { return layers_.at(k); }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t hidden_layer_count() const { return layers_.size() - 1; }
  bool single_hidden() const { return layers_.size() == 2; }
  Scalar offset() const { return offset_; }
  Eigen::Index input_dim() const { return layers_.front().fan_in(); }

  // Layer widths {J_1, ..., J_M}, input and output included.
  std::vector<Eigen::Index> structure() const {
    std::vector<Eigen::Index> widths{input_dim()};
    for (const auto& l : layers_) widths.push_back(l.fan_out());
    return widths;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      n += std::size_t(layers_[k].weights.size());
      if (k + 1 < layers_.size()) n += std::size_t(layers_[k].thresholds.size());
    }
    return n;
  }

 private:
  void validate() const {
    if (layers_.size() < 2) throw Error("network needs at least one hidden layer and a readout layer");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& l = layers_[k];
      const std::string where = "layer " + std::to_string(k);
      if (l.fan_in() < 1 || l.fan_out() < 1) throw Error(where + ": empty weight matrix");
      if (l.thresholds.size() != l.fan_out())
        throw Error(where + ": threshold count does not match layer width");
      if (!l.weights.allFinite() || !l.thresholds.allFinite())
        throw Error(where + ": non-finite parameter");
      if (k > 0 && layers_[k - 1].fan_out() != l.fan_in())
        throw Error(where + ": fan_in does not match previous layer width");
    }
    const auto& out = layers_.back();
    if (out.fan_out() != 1) throw Error("readout layer must have a single output");
    if (!out.thresholds.isZero(0)) throw Error("readout layer carries no threshold; it must be zero");
    using std::isfinite;
    if (!isfinite(offset_)) throw Error("network offset is not finite");
  }

  Activation activation_;
  std::vector<Layer> layers_;
  Scalar offset_;
};

using Layer = BasicLayer<double>;
using Network = BasicNetwork<double>;

template <typename Scalar, typename Derived>
Scalar eval_network(const BasicNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != net.input_dim())
    throw Error("input has dimension " + std::to_string(x.size()) + ", network expects " +
                std::to_string(net.input_dim()));
  if (!x.allFinite()) throw Error("input is not finite");
  using Vector = typename BasicNetwork<Scalar>::Vector;
  const auto& layers = net.layers();
  Vector y = x.template cast<Scalar>();
  const auto kind = net.activation();
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    Vector z = layers[k].weights.transpose() * y + layers[k].thresholds;
    y = z.unaryExpr([kind](Scalar v) { return activate(kind, v); });
  }
  return layers.back().weights.col(0).dot(y) + net.offset();
}

// One point per row of `xs`.
template <typename Scalar, typename Derived>
typename BasicNetwork<Scalar>::Vector eval_batch(const BasicNetwork<Scalar>& net,
                                                 const Eigen::MatrixBase<Derived>& xs) {
  typename BasicNetwork<Scalar>::Vector out(xs.rows());
  if (xs.rows() > 0 && xs.cols() != net.input_dim())
    throw Error("batch has dimension " + std::to_string(xs.cols()) + ", network expects " +
                std::to_string(net.input_dim()));
  for (Eigen::Index i = 0; i < xs.rows(); ++i) out(i) = eval_network(net, xs.row(i).transpose());
  return out;
}

// A hidden neuron of a single-hidden-layer network: c * sigma(w . x + b).
template <typename Scalar>
struct BasicNeuron {
  Scalar out_weight;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
  Scalar threshold;
};

using Neuron = BasicNeuron<double>;

template <typename Scalar>
std::vector<BasicNeuron<Scalar>> hidden_neurons(const BasicNetwork<Scalar>& net) {
  if (!net.single_hidden()) throw Error("operation requires a single hidden layer");
  const auto& hidden = net.layer(0);
  const auto& out = net.layer(1);
  std::vector<BasicNeuron<Scalar>> neurons;
  neurons.reserve(std::size_t(hidden.fan_out()));
  for (Eigen::Index j = 0; j < hidden.fan_out(); ++j)
    neurons.push_back({out.weights(j, 0), hidden.weights.col(j), hidden.thresholds(j)});
  return neurons;
}

// Builds sum_j c_j sigma(w_j . x + b_j) + offset. An empty neuron list yields
// a single neuron with zero output weight so the hidden layer is never empty.
template <typename Scalar>
BasicNetwork<Scalar> from_neurons(Activation kind, Eigen::Index input_dim,
                                  const std::vector<BasicNeuron<Scalar>>& neurons,
                                  Scalar offset = Scalar(0)) {
  using Layer = BasicLayer<Scalar>;
  const auto width = std::max<Eigen::Index>(1, Eigen::Index(neurons.size()));
  Layer hidden{Layer::Matrix::Zero(input_dim, width), Layer::Vector::Zero(width)};
  Layer out{Layer::Matrix::Zero(width, 1), Layer::Vector::Zero(1)};
  if (neurons.empty()) hidden.weights(0, 0) = Scalar(1);
  for (std::size_t j = 0; j < neurons.size(); ++j) {
    const auto& n = neurons[j];
    if (n.weights.size() != input_dim) throw Error("neuron weight vector has wrong dimension");
    hidden.weights.col(Eigen::Index(j)) = n.weights;
    hidden.thresholds(Eigen::Index(j)) = n.threshold;
    out.weights(Eigen::Index(j), 0) = n.out_weight;
  }
  return BasicNetwork<Scalar>(kind, {std::move(hidden), std::move(out)}, offset);
}

}  // namespace cfnn
