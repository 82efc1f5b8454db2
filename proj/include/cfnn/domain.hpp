#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "cfnn/activation.hpp"
#include "cfnn/random.hpp"

namespace cfnn {

// Bounded input region: an axis-aligned box or a centered ball.
template <typename Scalar>
class BasicDomain {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  enum class Kind { Box, Ball };

  static BasicDomain box(Vector lower, Vector upper) {
    if (lower.size() == 0 || lower.size() != upper.size())
      throw Error("box domain bounds must be non-empty and of equal length");
    if (!lower.allFinite() || !upper.allFinite())
      throw Error("box domain bounds must be finite");
    if ((lower.array() > upper.array()).any())
      throw Error("box domain requires lower <= upper componentwise");
    BasicDomain d;
    d.kind_ = Kind::Box;
    d.lower_ = std::move(lower);
    d.upper_ = std::move(upper);
    return d;
  }

  // [0,1]^dim
  static BasicDomain unit_box(Eigen::Index dim) {
    return box(Vector::Zero(dim), Vector::Ones(dim));
  }

  static BasicDomain ball(Eigen::Index dim, Scalar radius) {
    using std::isfinite;
    if (dim < 1) throw Error("ball domain dimension must be >= 1");
    if (!isfinite(radius) || radius < Scalar(0)) throw Error("ball radius must be finite and >= 0");
    BasicDomain d;
    d.kind_ = Kind::Ball;
    d.lower_ = Vector::Constant(dim, -radius);
    d.upper_ = Vector::Constant(dim, radius);
    d.radius_ = radius;
    return d;
  }

  Kind kind() const { return kind_; }
  Eigen::Index dimension() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Scalar radius() const { return radius_; }

  // sup of the Euclidean norm over the domain. For a box the farthest corner
  // takes the larger magnitude bound in every coordinate independently.
  Scalar x_bound() const {
    if (kind_ == Kind::Ball) return radius_;
    return lower_.cwiseAbs().cwiseMax(upper_.cwiseAbs()).norm();
  }

  bool contains(const Eigen::Ref<const Vector>& x, Scalar tol = Scalar(0)) const {
    if (x.size() != dimension()) return false;
    if (kind_ == Kind::Ball) return x.norm() <= radius_ + tol;
    return ((x.array() >= lower_.array() - tol) && (x.array() <= upper_.array() + tol)).all();
  }

  // n points drawn uniformly from the domain, one per row.
  Matrix sample(Eigen::Index n, Rng& rng) const {
    const Eigen::Index d = dimension();
    Matrix points(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (kind_ == Kind::Box) {
        for (Eigen::Index k = 0; k < d; ++k)
          points(i, k) = Scalar(rng.uniform(double(lower_(k)), double(upper_(k))));
      } else {
        Vector dir(d);
        do {
          for (Eigen::Index k = 0; k < d; ++k) dir(k) = Scalar(rng.normal());
        } while (dir.norm() == Scalar(0));
        const Scalar r = radius_ * Scalar(std::pow(rng.uniform01(), 1.0 / double(d)));
        points.row(i) = (r / dir.norm()) * dir.transpose();
      }
    }
    return points;
  }

 private:
  BasicDomain() = default;

  Kind kind_ = Kind::Box;
  Vector lower_;
  Vector upper_;
  Scalar radius_ = Scalar(0);
};

using Domain = BasicDomain<double>;

}  // namespace cfnn
