#include "cfnn/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <sstream>

#include "cfnn/canonicalize.hpp"
#include "cfnn/harness.hpp"
#include "cfnn/io.hpp"
#include "cfnn/training.hpp"

namespace cfnn {

namespace {

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size() || !std::isfinite(x))
      throw Error("point '" + text + "': bad coordinate '" + cell + "'");
    v.push_back(x);
  }
  if (v.empty()) throw Error("point '" + text + "' is empty");
  return v;
}

std::vector<Eigen::Index> parse_structure(const std::string& text) {
  std::vector<Eigen::Index> widths;
  for (double w : parse_point(text)) {
    if (w < 1 || w != std::floor(w)) throw Error("structure '" + text + "': widths must be positive integers");
    widths.push_back(Eigen::Index(w));
  }
  return widths;
}

Domain domain_or_unit_box(const std::string& flag, Eigen::Index dim) {
  if (flag.empty()) return Domain::unit_box(dim);
  auto d = parse_domain(flag, dim);
  if (d.dimension() != dim)
    throw Error("domain '" + flag + "' has dimension " + std::to_string(d.dimension()) + ", expected " +
                std::to_string(dim));
  return d;
}

struct CanonArgs {
  std::string model, domain, out, report, absorb = "gadgets";
};

int run_canonicalize(const CanonArgs& a, std::ostream& out) {
  const Network net = load_model(a.model);
  const Domain domain = domain_or_unit_box(a.domain, net.input_dim());
  CanonOptions opts;
  if (a.absorb == "offset") opts.absorption = ConstantAbsorption::Offset;
  else if (a.absorb != "gadgets") throw Error("--absorb must be 'gadgets' or 'offset'");
  const auto [result, report] = canonicalize(net, domain, opts);
  save_model(a.out, result);
  if (!a.report.empty()) write_file_atomic(a.report, report_to_json(report));
  out << "removed_dead=" << report.removed_dead << " absorbed_saturated=" << report.absorbed_saturated
      << " gadget_neurons_added=" << report.gadget_neurons_added
      << " max_pointwise_deviation=" << format_double(report.max_pointwise_deviation) << "\n";
  return 0;
}

struct TrainArgs {
  std::string model, structure, data, val, domain, optimizer = "adam", out, history, report;
  bool constrained = false, tight_1d = false;
  int iters = 5000;
  double step = 1e-2, tol = 1e-8;
  std::uint64_t seed = 0;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  const Dataset data = load_dataset(a.data);
  const Dataset val = load_dataset(a.val);
  std::optional<Network> net0;
  if (!a.model.empty() && !a.structure.empty()) throw Error("give either --model or --structure, not both");
  if (!a.model.empty()) net0.emplace(load_model(a.model));
  else if (!a.structure.empty()) net0.emplace(init_random(parse_structure(a.structure), Activation::ReLU, a.seed));
  else throw Error("train needs --model or --structure");

  TrainConfig config;
  config.max_iters = a.iters;
  config.step_size = a.step;
  config.tolerance = a.tol;
  config.optimizer = optimizer_from_string(a.optimizer);
  config.seed = a.seed;
  config.constrained = a.constrained || a.tight_1d;
  config.tight_1d = a.tight_1d;

  std::optional<ConstraintSpec> spec;
  if (config.constrained) {
    const Domain domain = domain_or_unit_box(a.domain, net0->input_dim());
    spec = make_constraint_spec(net0->structure(), domain.x_bound(), net0->activation(), a.tight_1d);
  }
  const auto result = train(*net0, data, val, config, spec);
  save_model(a.out, result.network);
  if (!a.history.empty()) {
    std::string csv = "iter,train_mse\n";
    for (std::size_t i = 0; i < result.report.mse_history.size(); ++i)
      csv += std::to_string(i) + "," + format_double(result.report.mse_history[i]) + "\n";
    write_file_atomic(a.history, csv);
  }
  const auto& r = result.report;
  if (!a.report.empty()) {
    nlohmann::json j{{"initial_mse", r.initial_mse},
                     {"final_train_mse", r.final_train_mse},
                     {"final_validation_mse", r.final_validation_mse},
                     {"iters_used", r.iters_used},
                     {"constraint_violation", r.constraint_violation},
                     {"history_increases", r.history_increases}};
    write_file_atomic(a.report, j.dump(2) + "\n");
  }
  out << "iters=" << r.iters_used << " train_mse=" << format_double(r.final_train_mse)
      << " validation_mse=" << format_double(r.final_validation_mse)
      << " constraint_violation=" << format_double(r.constraint_violation) << "\n";
  return 0;
}

int run_experiment_cmd(const std::string& spec_path, const std::string& out_dir, int jobs, std::ostream& out) {
  const auto spec = experiment_spec_from_json(read_file(spec_path), spec_path);
  const auto report = run_experiment(spec, jobs);
  write_experiment(report, out_dir);
  for (const auto& s : report.summary)
    out << to_string(s.mode) << ": median=" << format_double(s.median_validation_mse)
        << " min=" << format_double(s.min_validation_mse) << " max=" << format_double(s.max_validation_mse)
        << "\n";
  return 0;
}

int run_eval(const std::string& model, const std::vector<std::string>& points, const std::string& points_csv,
             std::ostream& out) {
  const Network net = load_model(model);
  if (points.empty() && points_csv.empty()) throw Error("eval needs --point or --points");
  for (const auto& p : points) {
    const auto v = parse_point(p);
    out << format_double(eval_network(net, Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()))))
        << "\n";
  }
  if (!points_csv.empty()) {
    // Same layout as training data; the target column is ignored.
    const Dataset d = load_dataset(points_csv);
    const auto values = eval_batch(net, d.inputs);
    for (Eigen::Index i = 0; i < values.size(); ++i) out << format_double(values(i)) << "\n";
  }
  return 0;
}

int run_gen_data(const std::string& target, Eigen::Index n, std::uint64_t seed, const std::string& domain_flag,
                 const std::string& path, std::ostream& out) {
  const Target t = target_from_string(target);
  const Domain domain = domain_or_unit_box(domain_flag, target_dimension(t));
  save_dataset(path, gen_dataset(t, domain, n, seed));
  out << "wrote " << n << " samples to " << path << "\n";
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constrained feedforward ReLU/binary networks: canonicalization, training, experiments", "cfnn"};
  app.require_subcommand(1);

  CanonArgs canon;
  auto* c = app.add_subcommand("canonicalize", "Rewrite a model into unit-weight, bounded-threshold form");
  c->add_option("--model", canon.model, "Input model JSON")->required();
  c->add_option("--domain", canon.domain, "box:lo,hi[;lo,hi...] or ball:r (default [0,1]^d)");
  c->add_option("--out", canon.out, "Output model JSON")->required();
  c->add_option("--report", canon.report, "Write the canonicalization report as JSON");
  c->add_option("--absorb", canon.absorb, "Constant terms as 'gadgets' (default) or network 'offset'");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a ReLU network on CSV data by full-batch MSE minimization");
  t->add_option("--model", tr.model, "Initial model JSON");
  t->add_option("--structure", tr.structure, "Random initial model with these widths, e.g. 1,20,1");
  t->add_option("--data", tr.data, "Training CSV")->required();
  t->add_option("--val", tr.val, "Validation CSV")->required();
  t->add_flag("--constrained", tr.constrained, "Project onto unit weights and threshold boxes after each step");
  t->add_flag("--tight-1d", tr.tight_1d, "1D weights in {-1,1} with sign-dependent threshold boxes");
  t->add_option("--domain", tr.domain, "Input domain for the threshold boxes (default [0,1]^d)");
  t->add_option("--optimizer", tr.optimizer, "adam, gd or lbfgs");
  t->add_option("--iters", tr.iters, "Maximum iterations");
  t->add_option("--step", tr.step, "Step size / learning rate");
  t->add_option("--tol", tr.tol, "Stop when the gradient norm falls below this");
  t->add_option("--seed", tr.seed, "Seed for --structure initialization");
  t->add_option("--out", tr.out, "Output model JSON")->required();
  t->add_option("--history", tr.history, "Write iter,train_mse CSV");
  t->add_option("--report", tr.report, "Write the training report as JSON");

  std::string spec_path, out_dir;
  int jobs = 1;
  auto* e = app.add_subcommand("experiment", "Run paired constrained/unconstrained training over seeds");
  e->add_option("--spec", spec_path, "Experiment spec JSON")->required();
  e->add_option("--out-dir", out_dir, "Output directory")->required();
  e->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string eval_model, eval_csv;
  std::vector<std::string> eval_points;
  auto* v = app.add_subcommand("eval", "Evaluate a model at points");
  v->add_option("--model", eval_model, "Model JSON")->required();
  v->add_option("--point", eval_points, "Comma-separated coordinates; repeatable")->take_all();
  v->add_option("--points", eval_csv, "CSV of points (x1,...,xd,y header)");

  std::string target, gen_out, gen_domain;
  Eigen::Index n = 0;
  std::uint64_t seed = 0;
  auto* g = app.add_subcommand("gen-data", "Sample a test function into CSV");
  g->add_option("--target", target, "sine1d or franke2d")->required();
  g->add_option("--n", n, "Sample count")->required()->check(CLI::PositiveNumber);
  g->add_option("--seed", seed, "Sampling seed");
  g->add_option("--domain", gen_domain, "Sampling domain (default [0,1]^d)");
  g->add_option("--out", gen_out, "Output CSV")->required();

  std::vector<std::string> argv_rest(args.rbegin(), args.rend());
  try {
    app.parse(argv_rest);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err);
  }

  try {
    if (*c) return run_canonicalize(canon, out);
    if (*t) return run_train(tr, out);
    if (*e) return run_experiment_cmd(spec_path, out_dir, jobs, out);
    if (*v) return run_eval(eval_model, eval_points, eval_csv, out);
    if (*g) return run_gen_data(target, n, seed, gen_domain, gen_out, out);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace cfnn
