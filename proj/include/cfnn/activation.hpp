#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cfnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Activation { ReLU, Binary };

inline std::string_view to_string(Activation kind) {
  return kind == Activation::ReLU ? "relu" : "binary";
}

inline Activation activation_from_string(std::string_view name) {
  if (name == "relu" || name == "ReLU") return Activation::ReLU;
  if (name == "binary" || name == "Binary" || name == "step") return Activation::Binary;
  throw Error("unknown activation '" + std::string(name) + "'");
}

// Unchecked evaluation; the binary step takes the value 1/2 at the origin.
template <typename Scalar>
inline Scalar activate(Activation kind, Scalar z) {
  if (kind == Activation::ReLU) return z > Scalar(0) ? z : Scalar(0);
  if (z > Scalar(0)) return Scalar(1);
  if (z < Scalar(0)) return Scalar(0);
  return Scalar(0.5);
}

template <typename Scalar>
inline Scalar activation_apply(Activation kind, Scalar z) {
  using std::isfinite;
  if (!isfinite(z)) throw Error("activation argument is not finite");
  return activate(kind, z);
}

// Factor gamma in sigma(alpha * y) = gamma(alpha) * sigma(y), alpha >= 0.
template <typename Scalar>
inline Scalar scale_factor(Activation kind, Scalar alpha) {
  return kind == Activation::ReLU ? alpha : Scalar(1);
}

}  // namespace cfnn
