#include <cassert>

#include "dagnas/kernels.hpp"

namespace dagnas::kernels {
namespace {

void fill(std::span<double> y, double value) {
  for (double& v : y) v = value;
}

void axpy(std::span<double> y, double a, std::span<const double> x) {
  assert(y.size() == x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] + a * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double sum(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

double residual(std::span<double> r, std::span<const double> out,
                std::span<const double> target) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = out[i] - target[i];
    s += r[i] * r[i];
  }
  return s;
}

void activate(Activation kind, std::span<const double> z, std::span<double> a) {
  for (std::size_t i = 0; i < z.size(); ++i) a[i] = activation_eval(kind, z[i]);
}

void activate_grad(Activation kind, std::span<const double> z,
                   std::span<const double> ga, std::span<double> gz) {
  if (kind == Activation::Identity) {
    for (std::size_t i = 0; i < z.size(); ++i) gz[i] = ga[i];
    return;
  }
  for (std::size_t i = 0; i < z.size(); ++i) gz[i] = ga[i] * activation_deriv(kind, z[i]);
}

}  // namespace

const Table& scalar() {
  static const Table table{"scalar", fill, axpy, dot, sum, residual, activate, activate_grad};
  return table;
}

}  // namespace dagnas::kernels
