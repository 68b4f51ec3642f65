#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "dagnas/kernels.hpp"
#include "dagnas/network.hpp"
#include "dagnas/training.hpp"

using namespace dagnas;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// Lengths that exercise the vector body, the tail and both together.
constexpr std::size_t kLengths[] = {0, 1, 3, 4, 5, 7, 8, 9, 16, 31, 257, 1000};

}  // namespace

TEST_CASE("active table is one of the known variants") {
  const auto& t = kernels::active();
  const bool known = &t == &kernels::scalar() || &t == kernels::avx2();
  CHECK(known);
  MESSAGE("active kernels: " << std::string(t.name));
}

TEST_CASE("vector kernels match the scalar reference") {
  const kernels::Table* simd = kernels::avx2();
  if (simd == nullptr) {
    MESSAGE("no SIMD variant on this machine; skipping");
    return;
  }
  const kernels::Table& ref = kernels::scalar();
  std::mt19937_64 rng(42);

  for (std::size_t n : kLengths) {
    CAPTURE(n);
    const auto x = random_vector(rng, n, 3.0);
    const auto y0 = random_vector(rng, n, 3.0);

    std::vector<double> a(n), b(n);
    ref.fill(a, 0.75);
    simd->fill(b, 0.75);
    CHECK(a == b);

    a = y0;
    b = y0;
    ref.axpy(a, -1.3, x);
    simd->axpy(b, -1.3, x);
    CHECK(a == b);

    const double dr = ref.dot(x, y0);
    const double ds = simd->dot(x, y0);
    CHECK(std::fabs(dr - ds) <= 1e-13 * (1.0 + std::fabs(dr)) * static_cast<double>(n + 1));

    CHECK(ref.sum(x) == doctest::Approx(simd->sum(x)).epsilon(1e-12));

    std::vector<double> ra(n), rb(n);
    const double sa = ref.residual(ra, x, y0);
    const double sb = simd->residual(rb, x, y0);
    CHECK(ra == rb);
    CHECK(sa == doctest::Approx(sb).epsilon(1e-12));
  }
}

TEST_CASE("vector activations are bit-identical to the scalar reference") {
  const kernels::Table* simd = kernels::avx2();
  if (simd == nullptr) return;
  const kernels::Table& ref = kernels::scalar();
  std::mt19937_64 rng(7);
  // Include the kinks and signed zeros explicitly.
  std::vector<double> z = random_vector(rng, 203, 5.0);
  for (double k : {0.0, -0.0, 1.0, -1.0, 3.0, -3.0, 1e-300, -1e-300, 1e300, -1e300, 1e150, -1e150, 1.0000001e150}) z.push_back(k);
  const auto ga = random_vector(rng, z.size(), 2.0);

  for (Activation kind : kAllActivations) {
    CAPTURE(to_string(kind));
    std::vector<double> a(z.size()), b(z.size());
    ref.activate(kind, z, a);
    simd->activate(kind, z, b);
    for (std::size_t i = 0; i < z.size(); ++i) {
      CAPTURE(z[i]);
      CHECK(std::memcmp(&a[i], &b[i], sizeof(double)) == 0);
    }
    ref.activate_grad(kind, z, ga, a);
    simd->activate_grad(kind, z, ga, b);
    for (std::size_t i = 0; i < z.size(); ++i) {
      CAPTURE(z[i]);
      CHECK(a[i] == b[i]);
    }
  }
}

TEST_CASE("batched network evaluation agrees across kernel variants") {
  const kernels::Table* simd = kernels::avx2();
  if (simd == nullptr) return;
  DagNetwork net = standard_net(MaxFullyConnectedSpec{3, 7}, Activation::SquareRatio, 11);
  TrainingMatrix data(3);
  std::mt19937_64 rng(5);
  for (int r = 0; r < 301; ++r) {
    const auto x = random_vector(rng, 3, 1.0);
    data.add_row(x[0] * x[1] - x[2], x);
  }
  const Batch batch = Batch::from(data);
  BatchModel ref(net, kernels::scalar());
  BatchModel vec(net, *simd);
  std::vector<double> gr(ref.params().size()), gv(vec.params().size());
  const double lr = ref.forward_backward(batch, gr);
  const double lv = vec.forward_backward(batch, gv);
  CHECK(lr == doctest::Approx(lv).epsilon(1e-12));
  for (std::size_t i = 0; i < gr.size(); ++i) CHECK(gr[i] == doctest::Approx(gv[i]).epsilon(1e-10));
  // Forward values depend only on element-wise kernels.
  for (std::size_t node = 0; node < net.node_count(); ++node) {
    const auto a = ref.node_values(NeuronId(node));
    const auto b = vec.node_values(NeuronId(node));
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}
