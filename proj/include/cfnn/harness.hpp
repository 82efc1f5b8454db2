#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "cfnn/domain.hpp"
#include "cfnn/network.hpp"
#include "cfnn/training.hpp"

namespace cfnn {

enum class Target { Sine1D, Franke2D };
enum class Mode { Unconstrained, General, Tight1D };

std::string_view to_string(Target t);
std::string_view to_string(Mode m);
Target target_from_string(std::string_view name);
Mode mode_from_string(std::string_view name);

// sin(4 pi x)
double target_sine(double x);

// Franke's test function on [0,1]^2; the second Gaussian is linear in y.
double target_franke(double x, double y);

Eigen::Index target_dimension(Target t);
double evaluate_target(Target t, const Eigen::Ref<const Eigen::VectorXd>& x);

// n i.i.d. uniform points in the domain, labelled by the target function.
Dataset gen_dataset(Target t, const Domain& domain, Eigen::Index n, std::uint64_t seed);

// True if any input row of `a` appears verbatim in `b`.
bool shares_points(const Dataset& a, const Dataset& b);

// Values on a resolution x resolution uniform grid over [0,1]^2. Row i holds
// y = i / (resolution - 1), column j holds x = j / (resolution - 1).
struct Grid {
  Eigen::VectorXd axis;
  Eigen::MatrixXd values;
  std::vector<double> contour_levels;  // 0.0, 0.1, ..., 1.0
};

using Field2D = std::function<double(double, double)>;

Grid eval_grid(const Field2D& f, int resolution);
Grid eval_grid(const Network& net, int resolution);

// (x, f(x, 0.2 x)) for n uniform x in [0, 1].
using Cut = std::vector<std::pair<double, double>>;
Cut eval_cut(const Field2D& f, int n_points);
Cut eval_cut(const Network& net, int n_points);

struct ExperimentSpec {
  Target target = Target::Sine1D;
  std::vector<Eigen::Index> structure{1, 20, 1};
  Eigen::Index n_train = 200;
  Eigen::Index n_val = 1000;
  std::vector<std::uint64_t> seeds{1};
  std::vector<Mode> modes{Mode::Unconstrained, Mode::General};
  TrainConfig train_config;
  std::uint64_t data_seed = 2024;  // training data; validation uses data_seed + 1
  int grid_resolution = 101;
  int cut_points = 101;
};

void validate(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(std::string_view text, const std::string& source = "<spec>");

struct RunRecord {
  std::uint64_t seed = 0;
  Mode mode = Mode::Unconstrained;
  Network network;
  TrainReport report;
  Grid grid;  // 2D targets only
  Cut cut;    // 2D targets: the y = 0.2 x cut; 1D targets: the fitted curve on [0, 1]
};

struct ModeSummary {
  Mode mode = Mode::Unconstrained;
  double median_validation_mse = 0.0;
  double min_validation_mse = 0.0;
  double max_validation_mse = 0.0;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<RunRecord> runs;  // ordered by (seed, mode) as listed in the spec
  std::vector<ModeSummary> summary;

  const RunRecord& run(std::uint64_t seed, Mode mode) const;
};

// One init_random draw per seed, shared by every mode. Runs are independent
// and spread over `jobs` threads; the report order does not depend on jobs.
ExperimentReport run_experiment(const ExperimentSpec& spec, int jobs = 1);

// Per-run model.json, history.csv, grid.csv and cut.csv (curve.csv in 1D)
// under out_dir/seed<seed>_<mode>/, plus summary.json.
void write_experiment(const ExperimentReport& report, const std::filesystem::path& out_dir);

std::string summary_to_json(const ExperimentReport& report);

}  // namespace cfnn
