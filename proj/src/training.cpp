#include "cfnn/training.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "cfnn/random.hpp"

namespace cfnn {

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y) : inputs(std::move(x)), targets(std::move(y)) {
  if (targets.size() < 1) throw Error("dataset must contain at least one sample");
  if (inputs.rows() != targets.size()) throw Error("dataset inputs and targets differ in length");
  if (inputs.cols() < 1) throw Error("dataset inputs have no columns");
  if (!inputs.allFinite() || !targets.allFinite()) throw Error("dataset contains non-finite values");
}

std::string_view to_string(Optimizer opt) {
  switch (opt) {
    case Optimizer::GradientDescent: return "gd";
    case Optimizer::Adam: return "adam";
    case Optimizer::LBFGS: return "lbfgs";
  }
  return "?";
}

Optimizer optimizer_from_string(std::string_view name) {
  if (name == "gd" || name == "sgd" || name == "gradient-descent") return Optimizer::GradientDescent;
  if (name == "adam") return Optimizer::Adam;
  if (name == "lbfgs" || name == "l-bfgs") return Optimizer::LBFGS;
  throw Error("unknown optimizer '" + std::string(name) + "'");
}

namespace {

void check_data(const Network& net, const Dataset& data) {
  if (data.size() < 1) throw Error("dataset is empty");
  if (data.dimension() != net.input_dim())
    throw Error("dataset has dimension " + std::to_string(data.dimension()) + ", network expects " +
                std::to_string(net.input_dim()));
}

struct Forward {
  std::vector<Eigen::MatrixXd> activations;  // activations[k] feeds layer k; [0] is the input
  std::vector<Eigen::MatrixXd> preactivations;
  Eigen::VectorXd output;
};

Forward forward(const Network& net, const Eigen::MatrixXd& x) {
  Forward f;
  const auto& layers = net.layers();
  const auto kind = net.activation();
  f.activations.push_back(x);
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    Eigen::MatrixXd z = f.activations.back() * layers[k].weights;
    z.rowwise() += layers[k].thresholds.transpose();
    f.activations.push_back(z.unaryExpr([kind](double v) { return activate(kind, v); }));
    f.preactivations.push_back(std::move(z));
  }
  f.output = f.activations.back() * layers.back().weights.col(0);
  f.output.array() += net.offset();
  return f;
}

double mean_square(const Eigen::VectorXd& residual) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < residual.size(); ++i) sum += residual(i) * residual(i);
  return sum / double(residual.size());
}

}  // namespace

double mse(const Network& net, const Dataset& data) {
  check_data(net, data);
  return mean_square(forward(net, data.inputs).output - data.targets);
}

Gradient grad_mse(const Network& net, const Dataset& data) {
  if (net.activation() != Activation::ReLU)
    throw Error("non-differentiable activation: only ReLU networks have gradients");
  check_data(net, data);
  const auto& layers = net.layers();
  const auto f = forward(net, data.inputs);
  const Eigen::VectorXd dout = (2.0 / double(data.size())) * (f.output - data.targets);

  Gradient g;
  g.layers.resize(layers.size());
  const std::size_t last = layers.size() - 1;
  g.layers[last].weights = f.activations[last].transpose() * dout;
  g.layers[last].thresholds = Eigen::VectorXd::Zero(1);

  // delta = dE/dz for the current hidden layer; the ReLU derivative at a kink is 0.
  Eigen::MatrixXd delta = dout * layers[last].weights.col(0).transpose();
  for (std::size_t k = last; k-- > 0;) {
    delta.array() *= (f.preactivations[k].array() > 0.0).cast<double>();
    g.layers[k].weights = f.activations[k].transpose() * delta;
    g.layers[k].thresholds = delta.colwise().sum().transpose();
    if (k > 0) delta = delta * layers[k].weights.transpose();
  }
  return g;
}

Eigen::VectorXd pack_parameters(const Network& net) {
  Eigen::VectorXd p(Eigen::Index(net.parameter_count()));
  Eigen::Index at = 0;
  const auto& layers = net.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& w = layers[k].weights;
    p.segment(at, w.size()) = w.reshaped();
    at += w.size();
    if (k + 1 < layers.size()) {
      p.segment(at, layers[k].thresholds.size()) = layers[k].thresholds;
      at += layers[k].thresholds.size();
    }
  }
  return p;
}

Eigen::VectorXd pack_gradient(const Network& net, const Gradient& grad) {
  if (grad.layers.size() != net.layer_count()) throw Error("gradient does not match network shape");
  Eigen::VectorXd p(Eigen::Index(net.parameter_count()));
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < grad.layers.size(); ++k) {
    const auto& w = grad.layers[k].weights;
    p.segment(at, w.size()) = w.reshaped();
    at += w.size();
    if (k + 1 < grad.layers.size()) {
      p.segment(at, grad.layers[k].thresholds.size()) = grad.layers[k].thresholds;
      at += grad.layers[k].thresholds.size();
    }
  }
  return p;
}

Network unpack_parameters(const Network& shape, const Eigen::Ref<const Eigen::VectorXd>& params) {
  if (params.size() != Eigen::Index(shape.parameter_count()))
    throw Error("parameter vector does not match network shape");
  auto layers = shape.layers();
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto& w = layers[k].weights;
    w.reshaped() = params.segment(at, w.size());
    at += w.size();
    if (k + 1 < layers.size()) {
      layers[k].thresholds = params.segment(at, layers[k].thresholds.size());
      at += layers[k].thresholds.size();
    }
  }
  return Network(shape.activation(), std::move(layers), shape.offset());
}

Network init_random(const std::vector<Eigen::Index>& structure, Activation kind, std::uint64_t seed) {
  if (structure.size() < 3) throw Error("structure needs input, at least one hidden, and output widths");
  for (auto w : structure)
    if (w < 1) throw Error("layer widths must be >= 1");
  if (structure.back() != 1) throw Error("output width must be 1");

  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t k = 0; k + 1 < structure.size(); ++k) {
    const bool readout = k + 2 == structure.size();
    Layer l{Eigen::MatrixXd(structure[k], structure[k + 1]), Eigen::VectorXd::Zero(structure[k + 1])};
    for (Eigen::Index j = 0; j < l.weights.cols(); ++j)
      for (Eigen::Index i = 0; i < l.weights.rows(); ++i) l.weights(i, j) = rng.uniform(-1.0, 1.0);
    if (!readout)
      for (Eigen::Index j = 0; j < l.thresholds.size(); ++j) l.thresholds(j) = rng.uniform(-1.0, 1.0);
    layers.push_back(std::move(l));
  }
  return Network(kind, std::move(layers));
}

namespace {

void check_spec(const Network& net, const ConstraintSpec& spec) {
  if (spec.threshold_boxes.size() != net.hidden_layer_count())
    throw Error("constraint spec has " + std::to_string(spec.threshold_boxes.size()) +
                " threshold boxes for " + std::to_string(net.hidden_layer_count()) + " hidden layers");
  if (spec.tight_1d && (net.input_dim() != 1 || !net.single_hidden()))
    throw Error("tight 1D constraints need a {1, N, 1} network");
}

}  // namespace

Network project(const Network& net, const ConstraintSpec& spec) {
  check_spec(net, spec);
  auto layers = net.layers();
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    auto& l = layers[k];
    for (Eigen::Index j = 0; j < l.fan_out(); ++j) {
      auto w = l.weights.col(j);
      Interval box = spec.threshold_boxes[k];
      if (spec.tight_1d && k == 0) {
        w(0) = w(0) >= 0.0 ? 1.0 : -1.0;
        box = tight_1d_box(int(w(0)));
      } else {
        const double norm = w.norm();
        if (norm < 1e-12) {
          w.setZero();
          w(0) = 1.0;
        } else if (std::abs(norm - 1.0) > detail::kUnitSlack) {
          w /= norm;
        }
      }
      l.thresholds(j) = box.clamp(l.thresholds(j));
    }
  }
  return Network(net.activation(), std::move(layers), net.offset());
}

double constraint_violation(const Network& net, const ConstraintSpec& spec) {
  check_spec(net, spec);
  double worst = 0.0;
  const auto& layers = net.layers();
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    const auto& l = layers[k];
    for (Eigen::Index j = 0; j < l.fan_out(); ++j) {
      Interval box = spec.threshold_boxes[k];
      if (spec.tight_1d && k == 0) box = tight_1d_box(l.weights(0, j) >= 0.0 ? 1 : -1);
      worst = std::max(worst, std::abs(l.weights.col(j).norm() - 1.0));
      worst = std::max(worst, box.excess(l.thresholds(j)));
    }
  }
  return worst;
}

namespace {

// Optimizer state over the flat parameter vector. `step` updates params in
// place given the gradient at params; `loss` evaluates the objective at an
// arbitrary point (only L-BFGS line search uses it).
class Stepper {
 public:
  Stepper(const TrainConfig& config, Eigen::Index n) : config_(config) {
    if (config.optimizer == Optimizer::Adam) {
      m_ = Eigen::VectorXd::Zero(n);
      v_ = Eigen::VectorXd::Zero(n);
    }
  }

  template <typename Loss, typename Project>
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double loss_now, Loss&& loss,
            Project&& project) {
    switch (config_.optimizer) {
      case Optimizer::GradientDescent:
        params -= config_.step_size * grad;
        params = project(params);
        return;
      case Optimizer::Adam: adam(params, grad, project); return;
      case Optimizer::LBFGS: lbfgs(params, grad, loss_now, loss, project); return;
    }
  }

 private:
  template <typename Project>
  void adam(Eigen::VectorXd& params, const Eigen::VectorXd& grad, Project&& project) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++t_;
    m_ = beta1 * m_ + (1.0 - beta1) * grad;
    v_ = beta2 * v_ + (1.0 - beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, double(t_));
    const double c2 = 1.0 - std::pow(beta2, double(t_));
    params.array() -= config_.step_size * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
    params = project(params);
  }

  template <typename Loss, typename Project>
  void lbfgs(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double loss_now, Loss&& loss,
             Project&& project) {
    if (have_prev_) {
      const Eigen::VectorXd s = params - prev_x_;
      const Eigen::VectorXd y = grad - prev_g_;
      if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
        s_.push_back(s);
        y_.push_back(y);
        if (s_.size() > kMemory) {
          s_.pop_front();
          y_.pop_front();
        }
      }
    }
    prev_x_ = params;
    prev_g_ = grad;
    have_prev_ = true;

    // Two-loop recursion for the quasi-Newton direction.
    Eigen::VectorXd q = grad;
    std::vector<double> a(s_.size());
    for (std::size_t i = s_.size(); i-- > 0;) {
      a[i] = s_[i].dot(q) / y_[i].dot(s_[i]);
      q -= a[i] * y_[i];
    }
    double gamma = config_.step_size;
    if (!s_.empty()) gamma = s_.back().dot(y_.back()) / y_.back().squaredNorm();
    q *= gamma;
    for (std::size_t i = 0; i < s_.size(); ++i) {
      const double b = y_[i].dot(q) / y_[i].dot(s_[i]);
      q += (a[i] - b) * s_[i];
    }
    Eigen::VectorXd dir = -q;
    if (dir.dot(grad) >= 0.0) {
      s_.clear();
      y_.clear();
      dir = -config_.step_size * grad;
    }

    // Armijo backtracking on the projected trial point.
    double t = 1.0;
    for (int tries = 0; tries < 30; ++tries, t *= 0.5) {
      Eigen::VectorXd trial = project(Eigen::VectorXd(params + t * dir));
      const double f = loss(trial);
      if (std::isfinite(f) && f <= loss_now + 1e-4 * grad.dot(trial - params)) {
        params = std::move(trial);
        return;
      }
    }
    s_.clear();
    y_.clear();
    params = project(Eigen::VectorXd(params - config_.step_size * grad));
  }

  static constexpr std::size_t kMemory = 10;

  const TrainConfig& config_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
  std::deque<Eigen::VectorXd> s_, y_;
  Eigen::VectorXd prev_x_, prev_g_;
  bool have_prev_ = false;
};

}  // namespace

TrainResult train(const Network& net0, const Dataset& data, const Dataset& validation,
                  const TrainConfig& config, const std::optional<ConstraintSpec>& spec) {
  if (net0.activation() != Activation::ReLU)
    throw Error("non-differentiable activation: only ReLU networks can be trained");
  if (config.max_iters < 1) throw Error("max_iters must be >= 1");
  if (!(config.step_size >= 0.0) || !(config.tolerance > 0.0))
    throw Error("step size must be >= 0 and tolerance > 0");
  check_data(net0, data);
  check_data(net0, validation);

  std::optional<ConstraintSpec> active;
  if (config.constrained || config.tight_1d) {
    if (!spec) throw Error("constrained training needs a constraint spec");
    active = *spec;
    active->tight_1d = active->tight_1d || config.tight_1d;
    check_spec(net0, *active);
  }

  TrainReport report;
  report.initial_mse = mse(net0, data);
  Network net = active ? project(net0, *active) : net0;

  const auto project_params = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    if (!active || !p.allFinite()) return p;
    return pack_parameters(project(unpack_parameters(net, p), *active));
  };
  const auto loss_at = [&](const Eigen::VectorXd& p) {
    return p.allFinite() ? mse(unpack_parameters(net, p), data) : std::nan("");
  };

  double current = mse(net, data);
  if (!std::isfinite(current)) throw Error("non-finite loss at iteration 0");
  report.mse_history.push_back(current);

  Eigen::VectorXd params = pack_parameters(net);
  Stepper stepper(config, params.size());
  for (int it = 1; it <= config.max_iters; ++it) {
    const Eigen::VectorXd g = pack_gradient(net, grad_mse(net, data));
    if (g.norm() < config.tolerance) break;
    stepper.step(params, g, current, loss_at, project_params);
    if (!params.allFinite()) throw Error("non-finite loss at iteration " + std::to_string(it));
    net = unpack_parameters(net, params);
    const double next = mse(net, data);
    if (!std::isfinite(next)) throw Error("non-finite loss at iteration " + std::to_string(it));
    if (next > current) ++report.history_increases;
    current = next;
    report.mse_history.push_back(current);
    report.iters_used = it;
  }

  report.final_train_mse = current;
  report.final_validation_mse = mse(net, validation);
  report.constraint_violation = active ? constraint_violation(net, *active) : 0.0;
  return {std::move(net), std::move(report)};
}

}  // namespace cfnn
