#include "cfnn/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <thread>

#include "cfnn/canonicalize.hpp"
#include "cfnn/io.hpp"

namespace cfnn {

using nlohmann::json;

std::string_view to_string(Target t) {
  return t == Target::Sine1D ? "sine1d" : "franke2d";
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Unconstrained: return "unconstrained";
    case Mode::General: return "general";
    case Mode::Tight1D: return "tight1d";
  }
  return "?";
}

Target target_from_string(std::string_view name) {
  if (name == "sine1d" || name == "sine") return Target::Sine1D;
  if (name == "franke2d" || name == "franke") return Target::Franke2D;
  throw Error("unknown target '" + std::string(name) + "'");
}

Mode mode_from_string(std::string_view name) {
  if (name == "unconstrained") return Mode::Unconstrained;
  if (name == "general") return Mode::General;
  if (name == "tight1d" || name == "tight") return Mode::Tight1D;
  throw Error("unknown mode '" + std::string(name) + "'");
}

double target_sine(double x) {
  return std::sin(4.0 * std::numbers::pi * x);
}

double target_franke(double x, double y) {
  const double a = 9.0 * x, b = 9.0 * y;
  return 0.75 * std::exp(-(a - 2) * (a - 2) / 4.0 - (b - 2) * (b - 2) / 4.0) +
         0.75 * std::exp(-(a + 1) * (a + 1) / 49.0 - (b + 1) / 10.0) +
         0.5 * std::exp(-(a - 7) * (a - 7) / 4.0 - (b - 3) * (b - 3) / 4.0) -
         0.2 * std::exp(-(a - 4) * (a - 4) - (b - 7) * (b - 7));
}

Eigen::Index target_dimension(Target t) {
  return t == Target::Sine1D ? 1 : 2;
}

double evaluate_target(Target t, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != target_dimension(t)) throw Error("point dimension does not match target");
  return t == Target::Sine1D ? target_sine(x(0)) : target_franke(x(0), x(1));
}

Dataset gen_dataset(Target t, const Domain& domain, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw Error("dataset size must be >= 1");
  if (domain.dimension() != target_dimension(t)) throw Error("domain dimension does not match target");
  Rng rng(seed);
  Eigen::MatrixXd x = domain.sample(n, rng);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = evaluate_target(t, x.row(i).transpose());
  return Dataset(std::move(x), std::move(y));
}

bool shares_points(const Dataset& a, const Dataset& b) {
  std::set<std::vector<double>> seen;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const Eigen::VectorXd row = a.inputs.row(i).transpose();
    seen.emplace(row.data(), row.data() + row.size());
  }
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const Eigen::VectorXd row = b.inputs.row(i).transpose();
    if (seen.count(std::vector<double>(row.data(), row.data() + row.size()))) return true;
  }
  return false;
}

namespace {

double axis_point(int k, int n) {
  return n == 1 ? 0.0 : double(k) / double(n - 1);
}

Field2D as_field(const Network& net) {
  if (net.input_dim() != 2) throw Error("grid and cut evaluation need a 2D network");
  return [&net](double x, double y) { return eval_network(net, Eigen::Vector2d(x, y)); };
}

}  // namespace

Grid eval_grid(const Field2D& f, int resolution) {
  if (resolution < 2) throw Error("grid resolution must be >= 2");
  Grid g;
  g.axis.resize(resolution);
  for (int k = 0; k < resolution; ++k) g.axis(k) = axis_point(k, resolution);
  g.values.resize(resolution, resolution);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) g.values(i, j) = f(g.axis(j), g.axis(i));
  for (int k = 0; k <= 10; ++k) g.contour_levels.push_back(double(k) / 10.0);
  return g;
}

Grid eval_grid(const Network& net, int resolution) {
  return eval_grid(as_field(net), resolution);
}

Cut eval_cut(const Field2D& f, int n_points) {
  if (n_points < 1) throw Error("cut needs at least one point");
  Cut cut;
  for (int k = 0; k < n_points; ++k) {
    const double x = axis_point(k, n_points);
    cut.emplace_back(x, f(x, 0.2 * x));
  }
  return cut;
}

Cut eval_cut(const Network& net, int n_points) {
  return eval_cut(as_field(net), n_points);
}

void validate(const ExperimentSpec& spec) {
  const auto d = target_dimension(spec.target);
  if (spec.structure.size() < 3 || spec.structure.front() != d || spec.structure.back() != 1)
    throw Error("structure must read {" + std::to_string(d) + ", ..., 1}");
  if (spec.n_train < 1 || spec.n_val < 1) throw Error("n_train and n_val must be >= 1");
  if (spec.seeds.empty()) throw Error("experiment needs at least one seed");
  if (spec.modes.empty()) throw Error("experiment needs at least one mode");
  for (auto m : spec.modes)
    if (m == Mode::Tight1D && (d != 1 || spec.structure.size() != 3))
      throw Error("tight1d mode needs a single-hidden-layer 1D network");
  if (spec.train_config.max_iters < 1) throw Error("max_iters must be >= 1");
  if (spec.grid_resolution < 2 || spec.cut_points < 1) throw Error("bad grid resolution or cut size");
}

ExperimentSpec experiment_spec_from_json(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(source + ": malformed JSON: " + e.what());
  }
  ExperimentSpec spec;
  std::string field;
  try {
    field = "target";
    spec.target = target_from_string(doc.at("target").get<std::string>());
    field = "structure";
    if (doc.contains("structure")) spec.structure = doc["structure"].get<std::vector<Eigen::Index>>();
    else spec.structure = spec.target == Target::Sine1D ? std::vector<Eigen::Index>{1, 20, 1}
                                                        : std::vector<Eigen::Index>{2, 40, 1};
    field = "n_train";
    if (doc.contains("n_train")) spec.n_train = doc["n_train"].get<Eigen::Index>();
    field = "n_val";
    if (doc.contains("n_val")) spec.n_val = doc["n_val"].get<Eigen::Index>();
    field = "seeds";
    if (doc.contains("seeds")) spec.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    field = "modes";
    if (doc.contains("modes")) {
      spec.modes.clear();
      for (const auto& m : doc["modes"]) spec.modes.push_back(mode_from_string(m.get<std::string>()));
    }
    field = "data_seed";
    if (doc.contains("data_seed")) spec.data_seed = doc["data_seed"].get<std::uint64_t>();
    field = "grid_resolution";
    if (doc.contains("grid_resolution")) spec.grid_resolution = doc["grid_resolution"].get<int>();
    field = "cut_points";
    if (doc.contains("cut_points")) spec.cut_points = doc["cut_points"].get<int>();
    if (doc.contains("train")) {
      const auto& t = doc["train"];
      auto& c = spec.train_config;
      field = "train.optimizer";
      if (t.contains("optimizer")) c.optimizer = optimizer_from_string(t["optimizer"].get<std::string>());
      field = "train.max_iters";
      if (t.contains("max_iters")) c.max_iters = t["max_iters"].get<int>();
      field = "train.step_size";
      if (t.contains("step_size")) c.step_size = t["step_size"].get<double>();
      field = "train.tolerance";
      if (t.contains("tolerance")) c.tolerance = t["tolerance"].get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(source + ": field '" + field + "': " + e.what());
  } catch (const Error& e) {
    throw Error(source + ": field '" + field + "': " + e.what());
  }
  try {
    validate(spec);
  } catch (const Error& e) {
    throw Error(source + ": " + e.what());
  }
  return spec;
}

const RunRecord& ExperimentReport::run(std::uint64_t seed, Mode mode) const {
  for (const auto& r : runs)
    if (r.seed == seed && r.mode == mode) return r;
  throw Error("no run for seed " + std::to_string(seed) + " and mode " + std::string(to_string(mode)));
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec, int jobs) {
  validate(spec);
  const auto d = target_dimension(spec.target);
  const Domain domain = Domain::unit_box(d);
  const double x_b = domain.x_bound();
  const Dataset train_data = gen_dataset(spec.target, domain, spec.n_train, spec.data_seed);
  const Dataset val_data = gen_dataset(spec.target, domain, spec.n_val, spec.data_seed + 1);
  if (shares_points(train_data, val_data)) throw Error("training and validation sets share points");

  std::vector<Network> initial;
  for (auto seed : spec.seeds) initial.push_back(init_random(spec.structure, Activation::ReLU, seed));

  const std::size_t n_modes = spec.modes.size();
  const std::size_t total = spec.seeds.size() * n_modes;
  std::vector<std::optional<RunRecord>> results(total);
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(total);

  const auto worker = [&] {
    for (std::size_t idx = next++; idx < total; idx = next++) {
      try {
        const std::size_t s = idx / n_modes;
        const Mode mode = spec.modes[idx % n_modes];
        TrainConfig config = spec.train_config;
        config.seed = spec.seeds[s];
        config.constrained = mode != Mode::Unconstrained;
        config.tight_1d = mode == Mode::Tight1D;
        std::optional<ConstraintSpec> constraints;
        if (config.constrained)
          constraints = make_constraint_spec(spec.structure, x_b, Activation::ReLU, config.tight_1d);
        auto result = train(initial[s], train_data, val_data, config, constraints);
        RunRecord rec{spec.seeds[s], mode, std::move(result.network), std::move(result.report), {}, {}};
        if (d == 2) {
          rec.grid = eval_grid(rec.network, spec.grid_resolution);
          rec.cut = eval_cut(rec.network, spec.cut_points);
        } else {
          for (int k = 0; k < spec.cut_points; ++k) {
            const double x = spec.cut_points == 1 ? 0.0 : double(k) / double(spec.cut_points - 1);
            rec.cut.emplace_back(x, eval_network(rec.network, Eigen::VectorXd::Constant(1, x)));
          }
        }
        results[idx].emplace(std::move(rec));
      } catch (const std::exception& e) {
        errors[idx] = e.what();
      }
    }
  };

  const int threads = std::max(1, std::min<int>(jobs, int(total)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t idx = 0; idx < total; ++idx)
    if (!errors[idx].empty())
      throw Error("run seed=" + std::to_string(spec.seeds[idx / n_modes]) + " mode=" +
                  std::string(to_string(spec.modes[idx % n_modes])) + ": " + errors[idx]);

  ExperimentReport report{spec, {}, {}};
  for (auto& r : results) report.runs.push_back(std::move(*r));
  for (auto mode : spec.modes) {
    std::vector<double> v;
    for (const auto& r : report.runs)
      if (r.mode == mode) v.push_back(r.report.final_validation_mse);
    report.summary.push_back({mode, median(v), *std::min_element(v.begin(), v.end()),
                              *std::max_element(v.begin(), v.end())});
  }
  return report;
}

std::string summary_to_json(const ExperimentReport& report) {
  json j;
  const auto& spec = report.spec;
  j["target"] = std::string(to_string(spec.target));
  j["structure"] = spec.structure;
  j["n_train"] = spec.n_train;
  j["n_val"] = spec.n_val;
  j["data_seed"] = spec.data_seed;
  j["optimizer"] = std::string(to_string(spec.train_config.optimizer));
  j["max_iters"] = spec.train_config.max_iters;
  j["step_size"] = spec.train_config.step_size;
  json modes = json::object();
  for (const auto& s : report.summary)
    modes[std::string(to_string(s.mode))] = {{"median_validation_mse", s.median_validation_mse},
                                             {"min_validation_mse", s.min_validation_mse},
                                             {"max_validation_mse", s.max_validation_mse}};
  j["modes"] = modes;
  json runs = json::array();
  for (const auto& r : report.runs)
    runs.push_back({{"seed", r.seed},
                    {"mode", std::string(to_string(r.mode))},
                    {"initial_mse", r.report.initial_mse},
                    {"start_mse", r.report.mse_history.front()},
                    {"final_train_mse", r.report.final_train_mse},
                    {"final_validation_mse", r.report.final_validation_mse},
                    {"iters_used", r.report.iters_used},
                    {"constraint_violation", r.report.constraint_violation},
                    {"history_increases", r.report.history_increases}});
  j["runs"] = runs;
  return j.dump(2) + "\n";
}

namespace {

std::string history_csv(const TrainReport& r) {
  std::string out = "iter,train_mse\n";
  for (std::size_t i = 0; i < r.mse_history.size(); ++i)
    out += std::to_string(i) + "," + format_double(r.mse_history[i]) + "\n";
  return out;
}

std::string grid_csv(const Grid& g) {
  std::string out = "x,y,value\n";
  for (Eigen::Index i = 0; i < g.values.rows(); ++i)
    for (Eigen::Index j = 0; j < g.values.cols(); ++j)
      out += format_double(g.axis(j)) + "," + format_double(g.axis(i)) + "," + format_double(g.values(i, j)) + "\n";
  return out;
}

std::string cut_csv(const Cut& c) {
  std::string out = "x,value\n";
  for (const auto& [x, v] : c) out += format_double(x) + "," + format_double(v) + "\n";
  return out;
}

}  // namespace

void write_experiment(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const bool two_d = target_dimension(report.spec.target) == 2;
  for (const auto& r : report.runs) {
    const fs::path dir = out_dir / ("seed" + std::to_string(r.seed) + "_" + std::string(to_string(r.mode)));
    fs::create_directories(dir);
    save_model(dir / "model.json", r.network);
    write_file_atomic(dir / "history.csv", history_csv(r.report));
    if (two_d) {
      write_file_atomic(dir / "grid.csv", grid_csv(r.grid));
      write_file_atomic(dir / "cut.csv", cut_csv(r.cut));
    } else {
      write_file_atomic(dir / "curve.csv", cut_csv(r.cut));
    }
  }
  if (two_d) {
    write_file_atomic(out_dir / "target_grid.csv", grid_csv(eval_grid(target_franke, report.spec.grid_resolution)));
    write_file_atomic(out_dir / "target_cut.csv", cut_csv(eval_cut(target_franke, report.spec.cut_points)));
  }
  write_file_atomic(out_dir / "summary.json", summary_to_json(report));
}

}  // namespace cfnn
