#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cfnn/domain.hpp"
#include "cfnn/gadgets.hpp"
#include "cfnn/network.hpp"

namespace cfnn {

template <typename Scalar>
struct BasicInterval {
  Scalar lo;
  Scalar hi;

  Scalar clamp(Scalar v) const { return v < lo ? lo : (v > hi ? hi : v); }
  bool contains(Scalar v, Scalar tol = Scalar(0)) const { return v >= lo - tol && v <= hi + tol; }
  Scalar excess(Scalar v) const {
    return v < lo ? lo - v : (v > hi ? v - hi : Scalar(0));
  }
};

using Interval = BasicInterval<double>;

template <typename Scalar>
Scalar compute_xb(const BasicDomain<Scalar>& domain) {
  return domain.x_bound();
}

// Threshold box for hidden layer m (layers numbered 1..M, input is m = 1).
// ReLU outputs can grow by |b| per layer, so the box doubles with depth:
// X_B * [-2^(m-2), 2^(m-2)]. Binary outputs stay in [0, 1], so only the first
// hidden layer scales with X_B.
template <typename Scalar>
BasicInterval<Scalar> threshold_box(int m, Scalar x_b, Activation kind) {
  using std::isfinite;
  if (m < 2) throw Error("threshold box is defined for hidden layers m >= 2");
  if (!(x_b >= Scalar(0)) || !isfinite(x_b)) throw Error("X_B must be finite and >= 0");
  if (kind == Activation::ReLU) {
    const Scalar r = x_b * std::ldexp(Scalar(1), m - 2);
    return {-r, r};
  }
  if (m == 2) return {-x_b, x_b};
  return {Scalar(-1), Scalar(1)};
}

// Tighter first-layer box for a 1D single-hidden-layer net on [0, 1] with
// weights in {-1, +1}.
template <typename Scalar = double>
BasicInterval<Scalar> tight_1d_box(int w_sign) {
  if (w_sign == 1) return {Scalar(-1), Scalar(0)};
  if (w_sign == -1) return {Scalar(0), Scalar(1)};
  throw Error("tight 1D box needs a weight sign of +1 or -1");
}

// Feasible set used by constrained training: unit-norm hidden weight vectors
// and one threshold interval per hidden layer.
template <typename Scalar>
struct BasicConstraintSpec {
  Scalar weight_norm = Scalar(1);
  std::vector<BasicInterval<Scalar>> threshold_boxes;  // one per hidden layer
  // Weights of a 1D first hidden layer restricted to {-1, +1} with the
  // sign-dependent boxes of tight_1d_box.
  bool tight_1d = false;
};

using ConstraintSpec = BasicConstraintSpec<double>;

template <typename Scalar>
BasicConstraintSpec<Scalar> make_constraint_spec(const std::vector<Eigen::Index>& structure,
                                                 Scalar x_b, Activation kind,
                                                 bool tight_1d = false) {
  if (structure.size() < 3) throw Error("structure needs at least one hidden layer");
  if (tight_1d && (structure.front() != 1 || structure.size() != 3))
    throw Error("tight 1D constraints need a {1, N, 1} structure");
  BasicConstraintSpec<Scalar> spec;
  spec.tight_1d = tight_1d;
  for (int m = 2; m <= int(structure.size()) - 1; ++m)
    spec.threshold_boxes.push_back(threshold_box(m, x_b, kind));
  return spec;
}

struct CanonReport {
  int removed_dead = 0;
  int absorbed_saturated = 0;
  int gadget_neurons_added = 0;
  double max_pointwise_deviation = 0.0;

  bool modified() const { return removed_dead + absorbed_saturated + gadget_neurons_added > 0; }
};

enum class ConstantAbsorption { Gadgets, Offset };

struct CanonOptions {
  ConstantAbsorption absorption = ConstantAbsorption::Gadgets;
  // Plateau width for ReLU constant gadgets; canonicalize uses X_B / 2.
  std::optional<double> gadget_alpha;
  int probe_points = 1000;
  std::uint64_t probe_seed = 0x5eedc0deULL;
};

namespace detail {

// Hidden weight vectors within this distance of unit norm are left untouched,
// which keeps normalization idempotent bit for bit.
inline constexpr double kUnitSlack = 1e-14;

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> basis_vector(Eigen::Index dim) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(dim);
  e(0) = Scalar(1);
  return e;
}

template <typename Scalar>
double probe_deviation(const BasicNetwork<Scalar>& a, const BasicNetwork<Scalar>& b,
                       const BasicDomain<Scalar>& domain, const CanonOptions& opts) {
  Rng rng(opts.probe_seed);
  const auto points = domain.sample(opts.probe_points, rng);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto x = points.row(i).transpose();
    worst = std::max(worst, double(std::abs(eval_network(a, x) - eval_network(b, x))));
  }
  return worst;
}

template <typename Scalar>
std::vector<BasicNeuron<Scalar>> constant_gadget(Activation kind, Scalar c, Scalar alpha,
                                                 Eigen::Index dim) {
  const auto e = basis_vector<Scalar>(dim);
  return kind == Activation::Binary ? binary_constant_gadget(c, e) : relu_constant_gadget(c, alpha, e);
}

template <typename Scalar>
void drop_neurons(std::vector<BasicLayer<Scalar>>& layers, std::size_t k,
                  const std::vector<Eigen::Index>& keep) {
  auto& cur = layers[k];
  auto& next = layers[k + 1];
  const auto n = Eigen::Index(keep.size());
  typename BasicLayer<Scalar>::Matrix w(cur.fan_in(), n), next_w(n, next.fan_out());
  typename BasicLayer<Scalar>::Vector b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w.col(i) = cur.weights.col(keep[std::size_t(i)]);
    b(i) = cur.thresholds(keep[std::size_t(i)]);
    next_w.row(i) = next.weights.row(keep[std::size_t(i)]);
  }
  cur.weights = std::move(w);
  cur.thresholds = std::move(b);
  next.weights = std::move(next_w);
}

}  // namespace detail

// Rescales every hidden neuron to a unit incoming weight vector without
// changing the network function. For ReLU the norm moves into the neuron's
// outgoing weights (sigma(n t) = n sigma(t)); for the binary step it is simply
// dropped. Layers are processed from the input side so each rescaling lands on
// weights that are normalized afterwards.
//
// A neuron with a zero weight vector outputs the constant sigma(b). It is
// removed; a nonzero constant is folded into the next layer's thresholds, or
// at the readout into the offset or a constant gadget.
template <typename Scalar>
std::pair<BasicNetwork<Scalar>, CanonReport> normalize_weights(
    const BasicNetwork<Scalar>& net, const CanonOptions& opts = {},
    const std::optional<BasicDomain<Scalar>>& probe_domain = std::nullopt) {
  using Vector = typename BasicLayer<Scalar>::Vector;
  const auto kind = net.activation();
  auto layers = net.layers();
  Scalar offset = net.offset();
  Scalar readout_constant(0);
  CanonReport report;

  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    auto& cur = layers[k];
    auto& next = layers[k + 1];
    const bool next_is_readout = k + 2 == layers.size();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < cur.fan_out(); ++j) {
      const Scalar norm = cur.weights.col(j).norm();
      if (norm > Scalar(0)) {
        if (std::abs(double(norm) - 1.0) > detail::kUnitSlack) {
          cur.weights.col(j) /= norm;
          cur.thresholds(j) /= norm;
          if (kind == Activation::ReLU) next.weights.row(j) *= norm;
        }
        keep.push_back(j);
        continue;
      }
      const Scalar value = activate(kind, cur.thresholds(j));
      if (value == Scalar(0)) {
        ++report.removed_dead;
        continue;
      }
      ++report.absorbed_saturated;
      const Vector contribution = value * next.weights.row(j).transpose();
      if (next_is_readout)
        readout_constant += contribution(0);
      else
        next.thresholds += contribution;
    }
    if (Eigen::Index(keep.size()) != cur.fan_out()) {
      if (keep.empty()) {
        // Keep one silent neuron so the layer stays well formed.
        keep.push_back(0);
        cur.weights.col(0) = detail::basis_vector<Scalar>(cur.fan_in());
        cur.thresholds(0) = Scalar(0);
        next.weights.row(0).setZero();
      }
      detail::drop_neurons(layers, k, keep);
    }
  }

  if (readout_constant != Scalar(0)) {
    if (opts.absorption == ConstantAbsorption::Offset) {
      offset += readout_constant;
    } else {
      const Scalar alpha = Scalar(opts.gadget_alpha.value_or(1.0));
      auto& last = layers[layers.size() - 2];
      auto& out = layers.back();
      const auto gadget = detail::constant_gadget(kind, readout_constant, alpha, last.fan_in());
      const auto old = last.fan_out();
      const auto added = Eigen::Index(gadget.size());
      last.weights.conservativeResize(Eigen::NoChange, old + added);
      last.thresholds.conservativeResize(old + added);
      out.weights.conservativeResize(old + added, Eigen::NoChange);
      for (Eigen::Index i = 0; i < added; ++i) {
        const auto& g = gadget[std::size_t(i)];
        last.weights.col(old + i) = g.weights;
        last.thresholds(old + i) = g.threshold;
        out.weights(old + i, 0) = g.out_weight;
      }
      report.gadget_neurons_added += int(added);
    }
  }

  BasicNetwork<Scalar> result(kind, std::move(layers), offset);
  const auto domain = probe_domain.value_or(
      BasicDomain<Scalar>::box(Vector::Constant(net.input_dim(), Scalar(-1)),
                               Vector::Constant(net.input_dim(), Scalar(1))));
  report.max_pointwise_deviation = detail::probe_deviation(net, result, domain, opts);
  return {std::move(result), report};
}

// Moves every threshold of a unit-weight single-hidden-layer network into
// [-X_B, X_B]. Below the box a neuron is never active on D and is deleted.
// Above it a neuron is always active on D: binary neurons contribute their
// output weight as a constant, ReLU neurons contribute c (w.x + b). All such
// neurons are summed into one affine term w*.x + b*; the linear part becomes
// |w*| (sigma(u.x) - sigma(-u.x)) with u = w*/|w*|, and constants become a
// gadget (or the offset).
template <typename Scalar>
std::pair<BasicNetwork<Scalar>, CanonReport> bound_thresholds(const BasicNetwork<Scalar>& net,
                                                              const BasicDomain<Scalar>& domain,
                                                              const CanonOptions& opts = {}) {
  using Vector = typename BasicLayer<Scalar>::Vector;
  if (!net.single_hidden())
    throw Error("threshold bounding is only defined for a single hidden layer");
  if (domain.dimension() != net.input_dim()) throw Error("domain dimension does not match network input");
  const Scalar x_b = domain.x_bound();
  if (!(x_b > Scalar(0))) throw Error("threshold bounding needs X_B > 0");

  const auto kind = net.activation();
  const auto d = net.input_dim();
  CanonReport report;
  std::vector<BasicNeuron<Scalar>> kept;
  Vector linear = Vector::Zero(d);
  Scalar constant(0);

  for (const auto& n : hidden_neurons(net)) {
    if (std::abs(double(n.weights.norm()) - 1.0) > 1e-12)
      throw Error("threshold bounding needs unit hidden weights; normalize first");
    if (n.threshold < -x_b) {
      ++report.removed_dead;
    } else if (n.threshold > x_b) {
      ++report.absorbed_saturated;
      if (kind == Activation::ReLU) {
        linear += n.out_weight * n.weights;
        constant += n.out_weight * n.threshold;
      } else {
        constant += n.out_weight;
      }
    } else {
      kept.push_back(n);
    }
  }

  const auto before = kept.size();
  const Scalar slope = linear.norm();
  if (slope > Scalar(0)) {
    const Vector u = linear / slope;
    kept.push_back({slope, u, Scalar(0)});
    kept.push_back({-slope, -u, Scalar(0)});
  }
  Scalar offset = net.offset();
  if (constant != Scalar(0)) {
    if (opts.absorption == ConstantAbsorption::Offset) {
      offset += constant;
    } else {
      const Scalar alpha = Scalar(opts.gadget_alpha.value_or(double(x_b) / 2.0));
      if (alpha > x_b) throw Error("gadget alpha must not exceed X_B");
      for (auto& g : detail::constant_gadget(kind, constant, alpha, d)) kept.push_back(std::move(g));
    }
  }
  report.gadget_neurons_added = int(kept.size() - before);

  if (!report.modified()) {
    report.max_pointwise_deviation = 0.0;
    return {net, report};
  }
  auto result = from_neurons(kind, d, kept, offset);
  report.max_pointwise_deviation = detail::probe_deviation(net, result, domain, opts);
  return {std::move(result), report};
}

// Weight normalization followed, for a single hidden layer, by threshold
// bounding. Deeper networks only get their weights normalized; their
// threshold boxes are enforced during training instead.
template <typename Scalar>
std::pair<BasicNetwork<Scalar>, CanonReport> canonicalize(const BasicNetwork<Scalar>& net,
                                                          const BasicDomain<Scalar>& domain,
                                                          CanonOptions opts = {}) {
  if (domain.dimension() != net.input_dim()) throw Error("domain dimension does not match network input");
  const Scalar x_b = domain.x_bound();
  if (!opts.gadget_alpha && x_b > Scalar(0)) opts.gadget_alpha = double(x_b) / 2.0;

  auto [normalized, first] = normalize_weights(net, opts, std::optional{domain});
  if (!net.single_hidden()) return {std::move(normalized), first};

  auto [bounded, second] = bound_thresholds(normalized, domain, opts);
  CanonReport report;
  report.removed_dead = first.removed_dead + second.removed_dead;
  report.absorbed_saturated = first.absorbed_saturated + second.absorbed_saturated;
  report.gadget_neurons_added = first.gadget_neurons_added + second.gadget_neurons_added;
  report.max_pointwise_deviation = detail::probe_deviation(net, bounded, domain, opts);
  return {std::move(bounded), report};
}

}  // namespace cfnn
