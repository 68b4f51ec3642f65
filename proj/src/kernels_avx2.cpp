// AVX2 variants of the row kernels. Compiled with -mavx2 only; callers must
// check the CPU flag before using this table (see kernels.cpp).

#include <immintrin.h>

#include <cassert>

#include "dagnas/kernels.hpp"

namespace dagnas::kernels {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256d abs_pd(__m256d x) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x); }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void fill(std::span<double> y, double value) {
  const __m256d v = _mm256_set1_pd(value);
  std::size_t i = 0;
  for (; i + kLanes <= y.size(); i += kLanes) _mm256_storeu_pd(y.data() + i, v);
  for (; i < y.size(); ++i) y[i] = value;
}

void axpy(std::span<double> y, double a, std::span<const double> x) {
  assert(y.size() == x.size());
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + kLanes <= y.size(); i += kLanes) {
    const __m256d vy = _mm256_loadu_pd(y.data() + i);
    const __m256d vx = _mm256_loadu_pd(x.data() + i);
    _mm256_storeu_pd(y.data() + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < y.size(); ++i) y[i] = y[i] + a * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kLanes <= x.size(); i += 2 * kLanes) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x.data() + i),
                                             _mm256_loadu_pd(y.data() + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(x.data() + i + kLanes),
                                             _mm256_loadu_pd(y.data() + i + kLanes)));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double sum(std::span<const double> x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= x.size(); i += kLanes) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
  double s = hsum(acc);
  for (; i < x.size(); ++i) s += x[i];
  return s;
}

double residual(std::span<double> r, std::span<const double> out,
                std::span<const double> target) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= r.size(); i += kLanes) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(out.data() + i), _mm256_loadu_pd(target.data() + i));
    _mm256_storeu_pd(r.data() + i, d);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = hsum(acc);
  for (; i < r.size(); ++i) {
    r[i] = out[i] - target[i];
    s += r[i] * r[i];
  }
  return s;
}

// Vector form of g for the kinds that need no transcendental functions.
// Returns false for the rest so the caller falls back to the scalar loop.
template <class Op>
bool map_rows(Activation kind, std::size_t n, Op&& op) {
  switch (kind) {
    case Activation::Sigmoid:
    case Activation::Arctan:
    case Activation::Tanh:
      return false;
    default:
      break;
  }
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) op(i);
  return true;
}

__m256d eval4(Activation kind, __m256d x) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d minus_one = _mm256_set1_pd(-1.0);
  switch (kind) {
    case Activation::Identity:
      return x;
    case Activation::Relu:
      return _mm256_blendv_pd(x, zero, _mm256_cmp_pd(x, zero, _CMP_LT_OQ));
    case Activation::Sign:
      return _mm256_blendv_pd(one, minus_one, _mm256_cmp_pd(x, zero, _CMP_LT_OQ));
    case Activation::Softsign:
      return _mm256_div_pd(x, _mm256_add_pd(one, abs_pd(x)));
    case Activation::SquareRatio: {
      const __m256d r = _mm256_div_pd(_mm256_mul_pd(x, abs_pd(x)), _mm256_add_pd(one, _mm256_mul_pd(x, x)));
      const __m256d big = _mm256_cmp_pd(abs_pd(x), _mm256_set1_pd(kRationalCutoff), _CMP_GT_OQ);
      const __m256d sat = _mm256_or_pd(one, _mm256_and_pd(x, _mm256_set1_pd(-0.0)));
      return _mm256_blendv_pd(r, sat, big);
    }
    case Activation::HardClip: {
      __m256d t = _mm256_blendv_pd(x, one, _mm256_cmp_pd(x, one, _CMP_GT_OQ));
      return _mm256_blendv_pd(t, minus_one, _mm256_cmp_pd(x, minus_one, _CMP_LT_OQ));
    }
    case Activation::Ramp: {
      const __m256d ax = abs_pd(x);
      const __m256d inner = _mm256_mul_pd(ax, _mm256_set1_pd(0.5));
      const __m256d middle = _mm256_mul_pd(_mm256_add_pd(ax, one), _mm256_set1_pd(0.25));
      __m256d r = _mm256_blendv_pd(one, middle, _mm256_cmp_pd(ax, _mm256_set1_pd(3.0), _CMP_LT_OQ));
      r = _mm256_blendv_pd(r, inner, _mm256_cmp_pd(ax, one, _CMP_LE_OQ));
      return _mm256_or_pd(r, _mm256_and_pd(x, _mm256_set1_pd(-0.0)));
    }
    default:
      return x;  // unreachable, filtered by map_rows
  }
}

__m256d deriv4(Activation kind, __m256d x) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  switch (kind) {
    case Activation::Identity:
      return one;
    case Activation::Relu:
      return _mm256_and_pd(_mm256_cmp_pd(x, zero, _CMP_GE_OQ), one);
    case Activation::Sign:
      return zero;
    case Activation::Softsign: {
      const __m256d d = _mm256_add_pd(one, abs_pd(x));
      return _mm256_div_pd(one, _mm256_mul_pd(d, d));
    }
    case Activation::SquareRatio: {
      const __m256d t = _mm256_add_pd(one, _mm256_mul_pd(x, x));
      const __m256d d = _mm256_div_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), abs_pd(x)), _mm256_mul_pd(t, t));
      const __m256d big = _mm256_cmp_pd(abs_pd(x), _mm256_set1_pd(kRationalCutoff), _CMP_GT_OQ);
      return _mm256_blendv_pd(d, zero, big);
    }
    case Activation::HardClip: {
      const __m256d in = _mm256_and_pd(_mm256_cmp_pd(x, _mm256_set1_pd(-1.0), _CMP_GE_OQ),
                                       _mm256_cmp_pd(x, one, _CMP_LT_OQ));
      return _mm256_and_pd(in, one);
    }
    case Activation::Ramp: {
      const __m256d inner = _mm256_and_pd(_mm256_cmp_pd(x, _mm256_set1_pd(-1.0), _CMP_GE_OQ),
                                          _mm256_cmp_pd(x, one, _CMP_LT_OQ));
      const __m256d middle = _mm256_and_pd(_mm256_cmp_pd(x, _mm256_set1_pd(-3.0), _CMP_GE_OQ),
                                           _mm256_cmp_pd(x, _mm256_set1_pd(3.0), _CMP_LT_OQ));
      const __m256d r = _mm256_and_pd(middle, _mm256_set1_pd(0.25));
      return _mm256_blendv_pd(r, _mm256_set1_pd(0.5), inner);
    }
    default:
      return one;
  }
}

void activate(Activation kind, std::span<const double> z, std::span<double> a) {
  const std::size_t n = z.size();
  std::size_t done = 0;
  const bool vectorized = map_rows(kind, n, [&](std::size_t i) {
    _mm256_storeu_pd(a.data() + i, eval4(kind, _mm256_loadu_pd(z.data() + i)));
    done = i + kLanes;
  });
  for (std::size_t i = vectorized ? done : 0; i < n; ++i) a[i] = activation_eval(kind, z[i]);
}

void activate_grad(Activation kind, std::span<const double> z, std::span<const double> ga,
                   std::span<double> gz) {
  const std::size_t n = z.size();
  if (kind == Activation::Identity) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) _mm256_storeu_pd(gz.data() + i, _mm256_loadu_pd(ga.data() + i));
    for (; i < n; ++i) gz[i] = ga[i];
    return;
  }
  std::size_t done = 0;
  const bool vectorized = map_rows(kind, n, [&](std::size_t i) {
    const __m256d d = deriv4(kind, _mm256_loadu_pd(z.data() + i));
    _mm256_storeu_pd(gz.data() + i, _mm256_mul_pd(_mm256_loadu_pd(ga.data() + i), d));
    done = i + kLanes;
  });
  for (std::size_t i = vectorized ? done : 0; i < n; ++i)
    gz[i] = ga[i] * activation_deriv(kind, z[i]);
}

}  // namespace

const Table& avx2_table() {
  static const Table table{"avx2", fill, axpy, dot, sum, residual, activate, activate_grad};
  return table;
}

}  // namespace dagnas::kernels
