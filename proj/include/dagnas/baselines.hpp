#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dagnas/network.hpp"
#include "dagnas/training.hpp"

namespace dagnas {

/// Number of monomials of total degree <= d in n variables, C(n+d, d).
std::size_t poly_feature_count(std::size_t n, std::size_t d);

using Exponents = std::vector<unsigned>;

/// All exponent vectors of total degree <= d, graded lexicographic: by total
/// degree, then lexicographically descending (x0^2 before x0 x1 before x1^2).
std::vector<Exponents> monomials(std::size_t n, std::size_t d);

struct PolyModel {
  std::size_t n_inputs = 0;
  std::size_t degree = 0;
  std::vector<Exponents> exponents;
  std::vector<double> coefficients;

  double evaluate(std::span<const double> x) const;
  std::size_t complexity() const { return coefficients.size(); }
};

struct PolyFit {
  PolyModel model;
  /// Mean squared residual, same convention as loss().
  double error = 0.0;
  std::size_t rank = 0;
  /// The design matrix was rank deficient; the minimum-norm solution is returned.
  bool rank_deficient = false;
};

/// Least-squares fit of every monomial of degree <= d. The design matrix is
/// reduced block by block with Householder QR, so memory stays
/// O(features^2) regardless of the row count. Throws std::invalid_argument
/// if there are fewer rows than features.
PolyFit poly_fit(const TrainingMatrix& data, std::size_t d);

/// Error in the original brightness units: 100 * sqrt(mean squared error).
double original_units_error(double mean_squared_error);

struct SweepOptions {
  std::size_t repeats = 10;
  TrainConfig train;
  std::size_t budget_multiplier = 5;
  Activation hidden_activation = Activation::SquareRatio;
  std::size_t jobs = 1;
};

struct SweepRow {
  ArchSpec spec;
  std::size_t complexity = 0;
  double error = 0.0;
};

/// Trains `repeats` fresh initializations of each architecture and keeps the
/// lowest error. Repeat r of spec i always uses the same seeds, whatever
/// `repeats` and `jobs` are.
std::vector<SweepRow> sweep_standard(const TrainingMatrix& data, const std::vector<ArchSpec>& specs,
                                     const SweepOptions& options);

struct EnvelopePoint {
  std::size_t complexity = 0;
  double error = 0.0;
  friend bool operator==(const EnvelopePoint&, const EnvelopePoint&) = default;
};

/// Non-dominated (complexity, error) points, complexity ascending, error
/// strictly descending.
struct EnvelopeCurve {
  std::vector<EnvelopePoint> points;
};

/// Throws std::invalid_argument on an empty input. NaN errors are ignored.
EnvelopeCurve envelope(std::span<const EnvelopePoint> points);

/// Complexity at which the piecewise-linear envelope first reaches
/// `target_error`. Targets above the largest error clamp to the cheapest
/// point; targets below the smallest error return +infinity.
double envelope_best_complexity(const EnvelopeCurve& curve, double target_error);

struct ComparisonRow {
  double error = 0.0;
  double standard_best_complexity = 0.0;  // +infinity when unreachable
  std::size_t optimized_complexity = 0;
};

std::vector<ComparisonRow> compare_to_envelope(const EnvelopeCurve& standard,
                                               std::span<const EnvelopePoint> optimized);

/// CSV writers and readers for the baseline files.
std::string sweep_csv(const std::vector<SweepRow>& rows);          // spec,complexity,error
std::string envelope_csv(const EnvelopeCurve& curve);              // complexity,error
std::string comparison_csv(const std::vector<ComparisonRow>& rows);  // error,standard_best_complexity,optimized_complexity
std::string poly_csv(const std::vector<PolyFit>& fits);            // degree,complexity,error,original_units_error,rank_deficient

/// Reads (complexity, error) pairs from a CSV whose header names both
/// columns; extra columns (spec, snapshot) are ignored.
std::vector<EnvelopePoint> read_points_csv(const std::string& text);

}  // namespace dagnas
