#include <doctest.h>

#include <cmath>
#include <limits>

#include "cfnn/domain.hpp"
#include "cfnn/gadgets.hpp"
#include "cfnn/network.hpp"
#include "cfnn/random.hpp"
#include "oracles.hpp"

using namespace cfnn;

namespace {

Network single_neuron(Activation kind, double c, std::initializer_list<double> w, double b) {
  return from_neurons<double>(kind, Eigen::Index(w.size()),
                              {{c, Eigen::Map<const Eigen::VectorXd>(w.begin(), Eigen::Index(w.size())), b}});
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.begin(), Eigen::Index(v.size()));
}

}  // namespace

TEST_CASE("activation values") {
  CHECK(activation_apply(Activation::ReLU, -2.0) == 0.0);
  CHECK(activation_apply(Activation::ReLU, 3.5) == 3.5);
  CHECK(activation_apply(Activation::ReLU, 0.0) == 0.0);
  CHECK(activation_apply(Activation::Binary, 0.0) == 0.5);
  CHECK(activation_apply(Activation::Binary, 1e-300) == 1.0);
  CHECK(activation_apply(Activation::Binary, -1e-300) == 0.0);
  CHECK_THROWS_AS(activation_apply(Activation::ReLU, std::nan("")), Error);
  CHECK_THROWS_AS(activation_apply(Activation::Binary, INFINITY), Error);
}

TEST_CASE("scaling property") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double z = rng.uniform(-10, 10);
    const double a = rng.uniform(0, 10);
    CHECK(activation_apply(Activation::ReLU, a * z) ==
          doctest::Approx(a * activation_apply(Activation::ReLU, z)).epsilon(1e-15));
    if (a > 0) CHECK(activation_apply(Activation::Binary, a * z) == activation_apply(Activation::Binary, z));
  }
  CHECK(activation_apply(Activation::ReLU, 0.0 * -3.0) == 0.0);
}

TEST_CASE("step identity sigma(x) + sigma(-x) == 1 exactly") {
  Rng rng(12);
  CHECK(activation_apply(Activation::Binary, 0.0) + activation_apply(Activation::Binary, -0.0) == 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-5, 5);
    CHECK(activation_apply(Activation::Binary, x) + activation_apply(Activation::Binary, -x) == 1.0);
  }
}

TEST_CASE("relu plateau L(x; alpha) == alpha") {
  Rng rng(13);
  for (int i = 0; i < 5000; ++i) {
    const double x = rng.uniform(-10, 10);
    const double a = rng.uniform(1e-6, 5);
    CHECK(std::abs(relu_plateau(x, a) - a) <= 1e-12);
  }
}

TEST_CASE("eval_network examples") {
  CHECK(eval_network(single_neuron(Activation::ReLU, 1, {1}, 0), vec({0.5})) == 0.5);
  CHECK(eval_network(single_neuron(Activation::Binary, 3, {1}, -1), vec({0.5})) == 0.0);

  // sigma(x) - sigma(-x) = x
  Layer hidden{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(2)};
  hidden.weights << 1, -1;
  Layer out{Eigen::MatrixXd(2, 1), Eigen::VectorXd::Zero(1)};
  out.weights << 1, -1;
  const Network net(Activation::ReLU, {hidden, out});
  CHECK(eval_network(net, vec({0.7})) == 0.7);
  CHECK(eval_network(net, vec({-0.3})) == -0.3);
}

TEST_CASE("eval_network rejects wrong dimension and non-finite input") {
  const auto net = single_neuron(Activation::ReLU, 1, {1, 2}, 0);
  CHECK_THROWS_AS(eval_network(net, vec({1.0})), Error);
  CHECK_THROWS_AS(eval_network(net, vec({1.0, std::nan("")})), Error);
}

TEST_CASE("network construction invariants") {
  Layer hidden{Eigen::MatrixXd::Ones(2, 3), Eigen::VectorXd::Zero(3)};
  Layer out{Eigen::MatrixXd::Ones(3, 1), Eigen::VectorXd::Zero(1)};
  CHECK_NOTHROW(Network(Activation::ReLU, {hidden, out}));
  CHECK(Network(Activation::ReLU, {hidden, out}).structure() == std::vector<Eigen::Index>{2, 3, 1});

  Layer bad_out{Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Zero(1)};
  CHECK_THROWS_AS(Network(Activation::ReLU, {hidden, bad_out}), Error);  // shapes do not chain

  Layer biased_out = out;
  biased_out.thresholds(0) = 0.1;
  CHECK_THROWS_AS(Network(Activation::ReLU, {hidden, biased_out}), Error);

  Layer nan_hidden = hidden;
  nan_hidden.weights(0, 0) = std::nan("");
  CHECK_THROWS_AS(Network(Activation::ReLU, {nan_hidden, out}), Error);

  CHECK_THROWS_AS(Network(Activation::ReLU, {out}), Error);
}

TEST_CASE("eval_network matches the explicit single-layer sum") {
  Rng rng(21);
  for (auto kind : {Activation::ReLU, Activation::Binary}) {
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Index d = 1 + Eigen::Index(rng.next() % 4);
      const Eigen::Index width = 1 + Eigen::Index(rng.next() % 30);
      Layer h{Eigen::MatrixXd(d, width), Eigen::VectorXd(width)};
      Layer o{Eigen::MatrixXd(width, 1), Eigen::VectorXd::Zero(1)};
      for (Eigen::Index i = 0; i < h.weights.size(); ++i) h.weights(i) = rng.uniform(-3, 3);
      for (Eigen::Index i = 0; i < width; ++i) h.thresholds(i) = rng.uniform(-3, 3);
      for (Eigen::Index i = 0; i < width; ++i) o.weights(i) = rng.uniform(-3, 3);
      const Network net(kind, {h, o});
      for (int p = 0; p < 20; ++p) {
        std::vector<double> x(static_cast<std::size_t>(d));
        for (auto& v : x) v = rng.uniform(-2, 2);
        const double got = eval_network(net, Eigen::Map<Eigen::VectorXd>(x.data(), d));
        const double want = double(oracle::explicit_sum(net, x));
        CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
      }
    }
  }
}

TEST_CASE("multi-layer evaluation matches the loop reference") {
  Rng rng(22);
  std::vector<Layer> layers;
  const std::vector<Eigen::Index> widths{2, 6, 5, 4, 1};
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    Layer l{Eigen::MatrixXd(widths[k], widths[k + 1]), Eigen::VectorXd::Zero(widths[k + 1])};
    for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights(i) = rng.uniform(-1, 1);
    if (k + 2 < widths.size())
      for (Eigen::Index i = 0; i < l.thresholds.size(); ++i) l.thresholds(i) = rng.uniform(-1, 1);
    layers.push_back(l);
  }
  const Network net(Activation::ReLU, layers, 0.25);
  for (int p = 0; p < 100; ++p) {
    std::vector<double> x{rng.uniform(0, 1), rng.uniform(0, 1)};
    CHECK(eval_network(net, Eigen::Vector2d(x[0], x[1])) ==
          doctest::Approx(double(oracle::evaluate(net, x))).epsilon(1e-13));
  }
}

TEST_CASE("eval_batch") {
  const auto net = single_neuron(Activation::ReLU, 2, {1, -1}, 0.1);
  CHECK(eval_batch(net, Eigen::MatrixXd(0, 2)).size() == 0);
  Eigen::MatrixXd one(1, 2);
  one << 0.3, 0.1;
  CHECK(eval_batch(net, one)(0) == eval_network(net, Eigen::Vector2d(0.3, 0.1)));
  Eigen::MatrixXd two(2, 2);
  two << 0.3, 0.1, -0.5, 0.9;
  const auto out = eval_batch(net, two);
  CHECK(out(0) == eval_network(net, Eigen::Vector2d(0.3, 0.1)));
  CHECK(out(1) == eval_network(net, Eigen::Vector2d(-0.5, 0.9)));
  CHECK_THROWS_AS(eval_batch(net, Eigen::MatrixXd::Zero(2, 3)), Error);
}

TEST_CASE("binary constant gadget") {
  const Eigen::VectorXd e1 = vec({1.0});
  const auto zero = binary_constant_gadget(0.0, e1);
  REQUIRE(zero.size() == 2);
  CHECK(zero[0].out_weight == 0.0);
  CHECK(zero[1].out_weight == 0.0);

  const auto one = binary_constant_gadget(1.0, e1);
  CHECK(one[0].out_weight == 1.0);
  CHECK(one[0].weights(0) == 1.0);
  CHECK(one[0].threshold == 0.0);
  CHECK(one[1].out_weight == 1.0);
  CHECK(one[1].weights(0) == -1.0);
  CHECK(one[1].threshold == 0.0);
  for (double x : {-5.0, 0.0, 5.0}) CHECK(eval_neurons(Activation::Binary, one, vec({x})) == 1.0);

  Rng rng(31);
  const Eigen::Vector3d u = Eigen::Vector3d(1, 2, -2) / 3.0;
  const auto g = binary_constant_gadget(-2.0, u);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d x(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4));
    CHECK(eval_neurons(Activation::Binary, g, x) == -2.0);
  }
  CHECK_THROWS_AS(binary_constant_gadget(INFINITY, e1), Error);
}

TEST_CASE("relu constant gadget") {
  const Eigen::VectorXd e1 = vec({1.0});
  const auto zero = relu_constant_gadget(0.0, 1.0, e1);
  REQUIRE(zero.size() == 4);
  for (const auto& n : zero) CHECK(n.out_weight == 0.0);

  const auto one = relu_constant_gadget(1.0, 1.0, e1);
  for (const auto& n : one) {
    CHECK(std::abs(n.threshold) == 0.5);
    CHECK(std::abs(n.out_weight) == 1.0);
    CHECK(n.weights.norm() == 1.0);
  }
  for (double x : {-3.0, -0.25, 0.0, 0.25, 3.0})
    CHECK(eval_neurons(Activation::ReLU, one, vec({x})) == doctest::Approx(1.0).epsilon(1e-15));

  Rng rng(32);
  const Eigen::Vector2d u(0.6, -0.8);
  const auto g = relu_constant_gadget(2.5, 0.7, u);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d x(rng.uniform(-3, 3), rng.uniform(-3, 3));
    CHECK(std::abs(eval_neurons(Activation::ReLU, g, x) - 2.5) <= 1e-12);
  }
  CHECK_THROWS_AS(relu_constant_gadget(1.0, 0.0, e1), Error);
  CHECK_THROWS_AS(relu_constant_gadget(1.0, -0.5, e1), Error);
}

TEST_CASE("domain x_bound") {
  CHECK(Domain::unit_box(1).x_bound() == 1.0);
  CHECK(Domain::unit_box(2).x_bound() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-16));
  CHECK(Domain::ball(4, 3.0).x_bound() == 3.0);
  CHECK_THROWS_AS(Domain::box(vec({1.0}), vec({0.0})), Error);
  CHECK_THROWS_AS(Domain::ball(2, -1.0), Error);

  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.next() % 6;
    std::vector<double> lo(d), hi(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5);
      lo[k] = std::min(a, b);
      hi[k] = std::max(a, b);
    }
    const auto box = Domain::box(Eigen::Map<Eigen::VectorXd>(lo.data(), Eigen::Index(d)),
                                 Eigen::Map<Eigen::VectorXd>(hi.data(), Eigen::Index(d)));
    CHECK(box.x_bound() == doctest::Approx(oracle::corner_xbound(lo, hi)).epsilon(1e-15));
  }
}

TEST_CASE("domain sampling stays inside") {
  Rng rng(42);
  const auto box = Domain::box(vec({-1.0, 2.0}), vec({0.5, 3.0}));
  const auto pts = box.sample(500, rng);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) CHECK(box.contains(pts.row(i).transpose()));
  const auto ball = Domain::ball(3, 2.0);
  const auto bp = ball.sample(500, rng);
  for (Eigen::Index i = 0; i < bp.rows(); ++i) CHECK(bp.row(i).norm() <= 2.0 + 1e-12);
}
