#include "dagnas/activation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dagnas {

// The piecewise and rational kinds are written with exactly the same
// operation sequence as the vector kernels so both paths round identically.
double activation_eval(Activation kind, double x) {
  switch (kind) {
    case Activation::Identity:
      return x;
    case Activation::Relu:
      return x < 0.0 ? 0.0 : x;
    case Activation::Sigmoid:
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      else {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case Activation::Sign:
      return x < 0.0 ? -1.0 : 1.0;
    case Activation::Arctan:
      return 2.0 * std::atan(x) / std::numbers::pi;
    case Activation::Softsign:
      return x / (1.0 + std::fabs(x));
    case Activation::SquareRatio:
      // Past kRationalCutoff x*x overflows; the true value rounds to +-1 there.
      if (std::fabs(x) > kRationalCutoff) return std::copysign(1.0, x);
      return (x * std::fabs(x)) / (1.0 + x * x);
    case Activation::Tanh:
      return std::tanh(x);
    case Activation::HardClip:
      return x > 1.0 ? 1.0 : (x < -1.0 ? -1.0 : x);
    case Activation::Ramp: {
      const double ax = std::fabs(x);
      const double r = ax <= 1.0 ? ax * 0.5 : (ax < 3.0 ? (ax + 1.0) * 0.25 : 1.0);
      return std::copysign(r, x);
    }
  }
  throw std::invalid_argument("unknown activation");
}

double activation_deriv(Activation kind, double x) {
  switch (kind) {
    case Activation::Identity:
      return 1.0;
    case Activation::Relu:
      return x >= 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: {
      const double s = activation_eval(Activation::Sigmoid, x);
      return s * (1.0 - s);
    }
    case Activation::Sign:
      return 0.0;
    case Activation::Arctan:
      return 2.0 / (std::numbers::pi * (1.0 + x * x));
    case Activation::Softsign: {
      const double d = 1.0 + std::fabs(x);
      return 1.0 / (d * d);
    }
    case Activation::SquareRatio: {
      if (std::fabs(x) > kRationalCutoff) return 0.0;
      const double t = 1.0 + x * x;
      return (2.0 * std::fabs(x)) / (t * t);
    }
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::HardClip:
      return (x >= -1.0 && x < 1.0) ? 1.0 : 0.0;
    case Activation::Ramp:
      // Half-open intervals give the right-hand slope at every kink.
      if (x >= -1.0 && x < 1.0) return 0.5;
      if (x >= -3.0 && x < 3.0) return 0.25;
      return 0.0;
  }
  throw std::invalid_argument("unknown activation");
}

bool is_odd(Activation kind) {
  return static_cast<int>(kind) >= static_cast<int>(Activation::Sign);
}

std::string to_string(Activation kind) {
  return "f" + std::to_string(static_cast<int>(kind));
}

Activation parse_activation(std::string_view name) {
  if (name.size() == 2 && name[0] == 'f' && name[1] >= '0' && name[1] <= '9')
    return static_cast<Activation>(name[1] - '0');
  static constexpr std::pair<std::string_view, Activation> aliases[] = {
      {"identity", Activation::Identity}, {"linear", Activation::Identity},
      {"relu", Activation::Relu},         {"sigmoid", Activation::Sigmoid},
      {"sign", Activation::Sign},         {"arctan", Activation::Arctan},
      {"softsign", Activation::Softsign}, {"square-ratio", Activation::SquareRatio},
      {"tanh", Activation::Tanh},         {"hard-clip", Activation::HardClip},
      {"ramp", Activation::Ramp},
  };
  for (const auto& [alias, kind] : aliases)
    if (alias == name) return kind;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

}  // namespace dagnas
