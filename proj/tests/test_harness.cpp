#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "cfnn/harness.hpp"
#include "cfnn/io.hpp"

using namespace cfnn;

TEST_CASE("sine target") {
  CHECK(target_sine(0.0) == 0.0);
  CHECK(std::abs(target_sine(0.25)) <= 1e-15);
  CHECK(target_sine(0.125) == 1.0);
}

TEST_CASE("franke target") {
  // Reference values from 30-digit evaluation of the four-term formula.
  CHECK(target_franke(4.0 / 9, 7.0 / 9) == doctest::Approx(0.00382160537393456813958233793552).epsilon(1e-13));
  CHECK(target_franke(2.0 / 9, 2.0 / 9) == doctest::Approx(1.21313757952096425470665679387).epsilon(1e-14));
  CHECK(target_franke(0.0, 0.0) == doctest::Approx(0.766420591284923132160950661068).epsilon(1e-14));
  CHECK(target_franke(0.5, 0.1) == doctest::Approx(0.48550173586512881612442874066).epsilon(1e-14));
  // At (2/9, 2/9) the first Gaussian is exactly 3/4.
  CHECK(target_franke(2.0 / 9, 2.0 / 9) - 0.75 > 0.0);
  CHECK(std::abs(target_franke(60.0, 0.5)) < 1e-12);
  CHECK(std::abs(target_franke(-60.0, 0.5)) < 1e-12);
}

TEST_CASE("gen_dataset") {
  const auto box = Domain::unit_box(1);
  const auto a = gen_dataset(Target::Sine1D, box, 1, 17);
  const auto b = gen_dataset(Target::Sine1D, box, 1, 17);
  CHECK(a.inputs == b.inputs);
  CHECK(a.targets == b.targets);

  const auto c = gen_dataset(Target::Sine1D, box, 200, 1);
  const auto d = gen_dataset(Target::Sine1D, box, 200, 2);
  CHECK(c.inputs != d.inputs);
  CHECK_FALSE(shares_points(c, d));
  CHECK(c.inputs.minCoeff() >= 0.0);
  CHECK(c.inputs.maxCoeff() <= 1.0);
  for (Eigen::Index i = 0; i < c.size(); ++i) CHECK(c.targets(i) == target_sine(c.inputs(i, 0)));
  CHECK(shares_points(c, c));

  const auto f = gen_dataset(Target::Franke2D, Domain::unit_box(2), 10, 3);
  CHECK(f.dimension() == 2);
  CHECK(f.targets(4) == target_franke(f.inputs(4, 0), f.inputs(4, 1)));
  CHECK_THROWS_AS(gen_dataset(Target::Franke2D, box, 10, 3), Error);
  CHECK_THROWS_AS(gen_dataset(Target::Sine1D, box, 0, 3), Error);
}

TEST_CASE("eval_grid") {
  const auto zero = from_neurons<double>(Activation::ReLU, 2, {{0.0, Eigen::Vector2d(1, 0), 0.0}});
  const auto g0 = eval_grid(zero, 5);
  CHECK(g0.values.isZero(0));
  CHECK(g0.contour_levels.size() == 11);
  CHECK(g0.contour_levels.back() == 1.0);

  const auto net = init_random({2, 6, 1}, Activation::ReLU, 9);
  const auto g = eval_grid(net, 2);
  CHECK(g.values(0, 0) == eval_network(net, Eigen::Vector2d(0, 0)));
  CHECK(g.values(0, 1) == eval_network(net, Eigen::Vector2d(1, 0)));
  CHECK(g.values(1, 0) == eval_network(net, Eigen::Vector2d(0, 1)));
  CHECK(g.values(1, 1) == eval_network(net, Eigen::Vector2d(1, 1)));

  const auto g11 = eval_grid(net, 11);
  CHECK(g11.values(3, 7) == eval_network(net, Eigen::Vector2d(0.7, 0.3)));

  const auto f = eval_grid(target_franke, 21);
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 21; ++j) CHECK(f.values(i, j) == target_franke(j / 20.0, i / 20.0));

  CHECK_THROWS_AS(eval_grid(init_random({1, 3, 1}, Activation::ReLU, 1), 5), Error);
  CHECK_THROWS_AS(eval_grid(net, 1), Error);
}

TEST_CASE("eval_cut") {
  const Network constant(Activation::ReLU,
                         {Layer{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)},
                          Layer{Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Zero(1)}},
                         1.75);
  for (const auto& [x, v] : eval_cut(constant, 13)) CHECK(v == 1.75);

  const auto net = init_random({2, 6, 1}, Activation::ReLU, 3);
  const auto cut = eval_cut(net, 11);
  CHECK(cut.front().first == 0.0);
  CHECK(cut.front().second == eval_network(net, Eigen::Vector2d(0, 0)));
  CHECK(cut[5].second == eval_network(net, Eigen::Vector2d(0.5, 0.1)));

  for (const auto& [x, v] : eval_cut(target_franke, 31)) CHECK(v == target_franke(x, 0.2 * x));
  CHECK_THROWS_AS(eval_cut(init_random({1, 3, 1}, Activation::ReLU, 1), 5), Error);
}

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.target = Target::Sine1D;
  s.structure = {1, 6, 1};
  s.n_train = 40;
  s.n_val = 60;
  s.train_config.max_iters = 40;
  s.cut_points = 11;
  return s;
}

}  // namespace

TEST_CASE("run_experiment") {
  SUBCASE("single seed and mode") {
    auto s = small_spec();
    s.seeds = {7};
    s.modes = {Mode::Unconstrained};
    const auto r = run_experiment(s);
    CHECK(r.runs.size() == 1);
    CHECK(r.summary.size() == 1);
    CHECK(r.summary[0].median_validation_mse == r.runs[0].report.final_validation_mse);
    CHECK(r.runs[0].cut.size() == 11);
  }
  SUBCASE("modes share the initial network per seed") {
    auto s = small_spec();
    s.seeds = {1, 2};
    s.modes = {Mode::Unconstrained, Mode::General, Mode::Tight1D};
    const auto r = run_experiment(s);
    REQUIRE(r.runs.size() == 6);
    for (auto seed : s.seeds) {
      const double ref = r.run(seed, Mode::Unconstrained).report.initial_mse;
      CHECK(r.run(seed, Mode::General).report.initial_mse == ref);
      CHECK(r.run(seed, Mode::Tight1D).report.initial_mse == ref);
      CHECK(r.run(seed, Mode::Unconstrained).report.mse_history[0] == ref);
      CHECK(r.run(seed, Mode::General).report.constraint_violation <= 1e-10);
    }
    CHECK(r.run(1, Mode::General).report.initial_mse != r.run(2, Mode::General).report.initial_mse);

    const auto parallel = run_experiment(s, 3);
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
      CHECK(parallel.runs[i].seed == r.runs[i].seed);
      CHECK(parallel.runs[i].mode == r.runs[i].mode);
      CHECK(parallel.runs[i].report.mse_history == r.runs[i].report.mse_history);
    }
  }
  SUBCASE("2D runs produce grids and cuts") {
    ExperimentSpec s;
    s.target = Target::Franke2D;
    s.structure = {2, 5, 3, 1};
    s.n_train = 30;
    s.n_val = 30;
    s.seeds = {4};
    s.grid_resolution = 6;
    s.cut_points = 7;
    s.train_config.max_iters = 20;
    const auto r = run_experiment(s);
    CHECK(r.runs[0].grid.values.rows() == 6);
    CHECK(r.runs[0].cut.size() == 7);
    CHECK(r.runs[0].grid.values(5, 5) == eval_network(r.runs[0].network, Eigen::Vector2d(1, 1)));
  }
  SUBCASE("invalid specs") {
    auto s = small_spec();
    s.target = Target::Franke2D;
    CHECK_THROWS_AS(run_experiment(s), Error);  // structure starts with 1
    s.structure = {2, 4, 1};
    s.modes = {Mode::Tight1D};
    CHECK_THROWS_AS(run_experiment(s), Error);
    s = small_spec();
    s.structure = {1, 4, 4, 1};
    s.modes = {Mode::Tight1D};
    CHECK_THROWS_AS(validate(s), Error);
    s = small_spec();
    s.seeds.clear();
    CHECK_THROWS_AS(validate(s), Error);
  }
}

TEST_CASE("experiment spec JSON") {
  const auto s = experiment_spec_from_json(R"({
    "target": "franke2d", "structure": [2, 10, 10, 1], "n_train": 500, "n_val": 1000,
    "seeds": [3, 5], "modes": ["unconstrained", "general"], "data_seed": 9,
    "grid_resolution": 41, "cut_points": 17,
    "train": {"optimizer": "lbfgs", "max_iters": 77, "step_size": 0.5, "tolerance": 1e-6}})");
  CHECK(s.target == Target::Franke2D);
  CHECK(s.structure == std::vector<Eigen::Index>{2, 10, 10, 1});
  CHECK(s.seeds == std::vector<std::uint64_t>{3, 5});
  CHECK(s.modes.size() == 2);
  CHECK(s.data_seed == 9);
  CHECK(s.train_config.optimizer == Optimizer::LBFGS);
  CHECK(s.train_config.max_iters == 77);
  CHECK(s.train_config.step_size == 0.5);

  const auto d = experiment_spec_from_json(R"({"target": "franke2d"})");
  CHECK(d.structure == std::vector<Eigen::Index>{2, 40, 1});

  CHECK_THROWS_WITH_AS(experiment_spec_from_json(R"({"target": "sine1d", "modes": ["sideways"]})", "s.json"),
                       doctest::Contains("modes"), Error);
  CHECK_THROWS_WITH_AS(experiment_spec_from_json(R"({"structure": [1, 2, 1]})", "s.json"),
                       doctest::Contains("target"), Error);
  CHECK_THROWS_AS(experiment_spec_from_json("{", "s.json"), Error);
}

TEST_CASE("write_experiment") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cfnn_write_experiment";
  fs::remove_all(dir);
  ExperimentSpec s;
  s.target = Target::Franke2D;
  s.structure = {2, 4, 1};
  s.n_train = 20;
  s.n_val = 20;
  s.seeds = {1};
  s.modes = {Mode::Unconstrained, Mode::General};
  s.grid_resolution = 4;
  s.cut_points = 5;
  s.train_config.max_iters = 5;
  const auto r = run_experiment(s);
  write_experiment(r, dir);
  for (const char* run : {"seed1_unconstrained", "seed1_general"}) {
    CHECK(fs::exists(dir / run / "model.json"));
    CHECK(fs::exists(dir / run / "history.csv"));
    CHECK(fs::exists(dir / run / "grid.csv"));
    CHECK(fs::exists(dir / run / "cut.csv"));
  }
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "target_grid.csv"));
  const auto model = load_model(dir / "seed1_general" / "model.json");
  CHECK(model_to_json(model) == model_to_json(r.run(1, Mode::General).network));
  const auto history = read_file(dir / "seed1_general" / "history.csv");
  CHECK(history.rfind("iter,train_mse\n0,", 0) == 0);
  fs::remove_all(dir);
}
