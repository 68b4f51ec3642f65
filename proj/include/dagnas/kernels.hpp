#pragma once

// Row-parallel arithmetic used by batched forward and backward passes.
//
// Every kernel exists as a portable scalar reference and, on x86-64, as an
// AVX2 variant. The variant is picked once at startup from the CPU's
// feature flags; setting DAGNAS_KERNELS=scalar forces the reference path.
//
// Element-wise kernels (fill, axpy, activate, activate_grad, residual's
// output vector) produce bit-identical results on both paths. Reductions
// (dot, sum, the return value of residual) use a different summation order
// in the vector path and agree only to rounding.

#include <span>

#include "dagnas/activation.hpp"

namespace dagnas::kernels {

struct Table {
  const char* name;
  // y[i] = value
  void (*fill)(std::span<double> y, double value);
  // y[i] += a * x[i]
  void (*axpy)(std::span<double> y, double a, std::span<const double> x);
  double (*dot)(std::span<const double> x, std::span<const double> y);
  double (*sum)(std::span<const double> x);
  // r[i] = out[i] - target[i]; returns sum of r[i]^2
  double (*residual)(std::span<double> r, std::span<const double> out,
                     std::span<const double> target);
  // a[i] = g(z[i])
  void (*activate)(Activation kind, std::span<const double> z, std::span<double> a);
  // gz[i] = ga[i] * g'(z[i])
  void (*activate_grad)(Activation kind, std::span<const double> z,
                        std::span<const double> ga, std::span<double> gz);
};

const Table& scalar();

/// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const Table* avx2();

/// The table chosen for this process.
const Table& active();

}  // namespace dagnas::kernels
