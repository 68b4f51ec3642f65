#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace dagnas {

// The ten activation functions f0..f9. The numeric value of each enumerator
// is its index in that family.
enum class Activation : std::uint8_t {
  Identity = 0,     // f0: x
  Relu = 1,         // f1: max(0, x)
  Sigmoid = 2,      // f2: 1 / (1 + e^-x)
  Sign = 3,         // f3: -1 for x < 0, +1 otherwise
  Arctan = 4,       // f4: 2 atan(x) / pi
  Softsign = 5,     // f5: x / (1 + |x|)
  SquareRatio = 6,  // f6: sign(x) x^2 / (1 + x^2)
  Tanh = 7,         // f7: tanh(x)
  HardClip = 8,     // f8: x clipped to [-1, 1]
  Ramp = 9,         // f9: odd piecewise-linear ramp saturating at 1 for |x| >= 3
};

/// Beyond this magnitude the rational kinds are evaluated as saturated.
inline constexpr double kRationalCutoff = 1e150;

inline constexpr std::array<Activation, 10> kAllActivations = {
    Activation::Identity, Activation::Relu,     Activation::Sigmoid, Activation::Sign,
    Activation::Arctan,   Activation::Softsign, Activation::SquareRatio,
    Activation::Tanh,     Activation::HardClip, Activation::Ramp};

double activation_eval(Activation kind, double x);

/// Derivative of the activation. Where the function has a kink the
/// derivative from the right is returned; f3 has derivative 0 everywhere.
double activation_deriv(Activation kind, double x);

/// True for f3..f9.
bool is_odd(Activation kind);

/// Canonical short name, "f0".."f9".
std::string to_string(Activation kind);

/// Accepts "f0".."f9" and the descriptive aliases ("identity", "relu",
/// "sigmoid", "sign", "arctan", "softsign", "square-ratio", "tanh",
/// "hard-clip", "ramp"). Throws std::invalid_argument otherwise.
Activation parse_activation(std::string_view name);

}  // namespace dagnas
