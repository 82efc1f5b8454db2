#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "cfnn/canonicalize.hpp"
#include "cfnn/network.hpp"

namespace cfnn {

// Paired samples; one input per row of `inputs`.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;

  Dataset() = default;
  Dataset(Eigen::MatrixXd x, Eigen::VectorXd y);

  Eigen::Index size() const { return targets.size(); }
  Eigen::Index dimension() const { return inputs.cols(); }
};

enum class Optimizer { GradientDescent, Adam, LBFGS };

std::string_view to_string(Optimizer opt);
Optimizer optimizer_from_string(std::string_view name);

struct TrainConfig {
  int max_iters = 5000;
  double step_size = 1e-2;
  double tolerance = 1e-8;  // stop once the gradient norm falls below this
  Optimizer optimizer = Optimizer::Adam;
  std::uint64_t seed = 0;
  bool constrained = false;
  bool tight_1d = false;
};

struct TrainReport {
  double initial_mse = 0.0;  // before any projection
  double final_train_mse = 0.0;
  double final_validation_mse = 0.0;
  std::vector<double> mse_history;  // entry 0 is the (projected) starting point
  int iters_used = 0;
  double constraint_violation = 0.0;
  int history_increases = 0;  // steps where the training MSE went up
};

// Same shape as the network: one weight matrix and threshold vector per layer.
// The readout threshold entry is always zero.
struct Gradient {
  std::vector<Layer> layers;
};

double mse(const Network& net, const Dataset& data);
Gradient grad_mse(const Network& net, const Dataset& data);

// Flat parameter vector: per layer the weights (column major), then the
// thresholds of hidden layers. The readout threshold is not a parameter.
Eigen::VectorXd pack_parameters(const Network& net);
Eigen::VectorXd pack_gradient(const Network& net, const Gradient& grad);
Network unpack_parameters(const Network& shape, const Eigen::Ref<const Eigen::VectorXd>& params);

// Weights and thresholds i.i.d. uniform on [-1, 1], drawn layer by layer
// (weights column major, then thresholds) from Rng(seed).
Network init_random(const std::vector<Eigen::Index>& structure, Activation kind, std::uint64_t seed);

// Nearest feasible point: hidden weight vectors scaled to unit norm (a zero
// vector becomes e_1), thresholds clipped into their layer box. With tight_1d
// the 1D first-layer weights are snapped to sign(w) in {-1, +1}, sign(0) = +1.
Network project(const Network& net, const ConstraintSpec& spec);

// Largest |‖w‖ - 1| or box excess over all hidden neurons.
double constraint_violation(const Network& net, const ConstraintSpec& spec);

struct TrainResult {
  Network network;
  TrainReport report;
};

TrainResult train(const Network& net0, const Dataset& data, const Dataset& validation,
                  const TrainConfig& config, const std::optional<ConstraintSpec>& spec = std::nullopt);

}  // namespace cfnn
