#pragma once

#include <cmath>
#include <vector>

#include "cfnn/network.hpp"

namespace cfnn {

// Two binary neurons whose outputs sum to c everywhere, from
// sigma(t) + sigma(-t) == 1 (exact at t == 0 because sigma(0) = 1/2).
template <typename Scalar, typename Derived>
std::vector<BasicNeuron<Scalar>> binary_constant_gadget(Scalar c,
                                                        const Eigen::MatrixBase<Derived>& unit) {
  using std::isfinite;
  if (!isfinite(c)) throw Error("gadget constant is not finite");
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w = unit.template cast<Scalar>();
  return {{c, w, Scalar(0)}, {c, -w, Scalar(0)}};
}

// Four ReLU neurons realizing (c/alpha) * L(w.x; alpha) == c everywhere, where
// L(t; alpha) = s(t + a/2) - s(t - a/2) + s(-t + a/2) - s(-t - a/2) == alpha.
// Thresholds are +-alpha/2, so alpha <= X_B keeps them inside [-X_B, X_B].
template <typename Scalar, typename Derived>
std::vector<BasicNeuron<Scalar>> relu_constant_gadget(Scalar c, Scalar alpha,
                                                      const Eigen::MatrixBase<Derived>& unit) {
  using std::isfinite;
  if (!isfinite(c)) throw Error("gadget constant is not finite");
  if (!(alpha > Scalar(0)) || !isfinite(alpha)) throw Error("gadget alpha must be positive and finite");
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w = unit.template cast<Scalar>();
  const Scalar s = c / alpha;
  const Scalar h = alpha / Scalar(2);
  return {{s, w, h}, {-s, w, -h}, {s, -w, h}, {-s, -w, -h}};
}

// The identity L(t; alpha) itself, evaluated with the ReLU.
template <typename Scalar>
Scalar relu_plateau(Scalar t, Scalar alpha) {
  const auto s = [](Scalar v) { return activate(Activation::ReLU, v); };
  const Scalar h = alpha / Scalar(2);
  return s(t + h) - s(t - h) + s(-t + h) - s(-t - h);
}

// Evaluates sum_j c_j sigma(w_j . x + b_j) for a loose neuron list.
template <typename Scalar, typename Derived>
Scalar eval_neurons(Activation kind, const std::vector<BasicNeuron<Scalar>>& neurons,
                    const Eigen::MatrixBase<Derived>& x) {
  Scalar sum(0);
  for (const auto& n : neurons) sum += n.out_weight * activate(kind, n.weights.dot(x) + n.threshold);
  return sum;
}

}  // namespace cfnn
