#include "dagnas/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "dagnas/csv.hpp"
#include "dagnas/parallel.hpp"
#include "dagnas/seed.hpp"

namespace dagnas {

std::size_t poly_feature_count(std::size_t n, std::size_t d) {
  // C(n+d, d) built incrementally; each partial product is itself a binomial.
  std::size_t c = 1;
  for (std::size_t i = 1; i <= d; ++i) {
    if (c > std::numeric_limits<std::size_t>::max() / (n + i)) throw std::overflow_error("feature count overflow");
    c = c * (n + i) / i;
  }
  return c;
}

namespace {

void degree_block(std::size_t n, unsigned remaining, std::size_t var, Exponents& cur, std::vector<Exponents>& out) {
  if (var + 1 == n) {
    cur[var] = remaining;
    out.push_back(cur);
    cur[var] = 0;
    return;
  }
  for (unsigned e = remaining + 1; e-- > 0;) {
    cur[var] = e;
    degree_block(n, remaining - e, var + 1, cur, out);
  }
  cur[var] = 0;
}

void features(const std::vector<Exponents>& exps, std::span<const double> x, double* out) {
  for (std::size_t k = 0; k < exps.size(); ++k) {
    double v = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j)
      for (unsigned p = 0; p < exps[k][j]; ++p) v *= x[j];
    out[k] = v;
  }
}

}  // namespace

std::vector<Exponents> monomials(std::size_t n, std::size_t d) {
  if (n == 0) throw std::invalid_argument("need at least one variable");
  std::vector<Exponents> out;
  out.reserve(poly_feature_count(n, d));
  Exponents cur(n, 0);
  for (unsigned t = 0; t <= d; ++t) degree_block(n, t, 0, cur, out);
  return out;
}

double PolyModel::evaluate(std::span<const double> x) const {
  if (x.size() != n_inputs) throw std::invalid_argument("polynomial arity mismatch");
  std::vector<double> f(exponents.size());
  features(exponents, x, f.data());
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += coefficients[k] * f[k];
  return s;
}

PolyFit poly_fit(const TrainingMatrix& data, std::size_t d) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  PolyFit fit;
  fit.model.n_inputs = data.n_inputs();
  fit.model.degree = d;
  fit.model.exponents = monomials(data.n_inputs(), d);
  const std::size_t f = fit.model.exponents.size();
  if (data.rows() < f)
    throw std::invalid_argument("polynomial of degree " + std::to_string(d) + " needs at least " +
                                std::to_string(f) + " rows, dataset has " + std::to_string(data.rows()));

  // Running triangular factor: after each block, R and Q^T y summarize every
  // row seen so far.
  const auto fi = static_cast<Eigen::Index>(f);
  MatrixXd r = MatrixXd::Zero(fi, fi);
  VectorXd qty = VectorXd::Zero(fi);
  const std::size_t block = std::max<std::size_t>(4 * f, 2048);
  std::vector<double> row(f);
  for (std::size_t start = 0; start < data.rows(); start += block) {
    const std::size_t count = std::min(block, data.rows() - start);
    const auto ci = static_cast<Eigen::Index>(count);
    MatrixXd stacked(fi + ci, fi);
    VectorXd rhs(fi + ci);
    stacked.topRows(fi) = r;
    rhs.head(fi) = qty;
    for (std::size_t i = 0; i < count; ++i) {
      features(fit.model.exponents, data.x(start + i), row.data());
      for (std::size_t k = 0; k < f; ++k) stacked(fi + static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
      rhs(fi + static_cast<Eigen::Index>(i)) = data.y(start + i);
    }
    Eigen::HouseholderQR<MatrixXd> qr(stacked);
    const VectorXd projected = qr.householderQ().adjoint() * rhs;
    r = qr.matrixQR().topRows(fi).triangularView<Eigen::Upper>();
    qty = projected.head(fi);
  }

  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(r);
  const VectorXd coef = cod.solve(qty);
  fit.rank = static_cast<std::size_t>(cod.rank());
  fit.rank_deficient = fit.rank < f;
  fit.model.coefficients.assign(coef.data(), coef.data() + coef.size());

  double ss = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double res = fit.model.evaluate(data.x(i)) - data.y(i);
    ss += res * res;
  }
  fit.error = ss / static_cast<double>(data.rows());
  return fit;
}

double original_units_error(double mean_squared_error) { return 100.0 * std::sqrt(mean_squared_error); }

std::vector<SweepRow> sweep_standard(const TrainingMatrix& data, const std::vector<ArchSpec>& specs,
                                     const SweepOptions& options) {
  if (options.repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  options.train.validate();
  const std::size_t tasks = specs.size() * options.repeats;
  std::vector<double> errors(tasks);
  std::vector<std::size_t> complexities(specs.size());
  parallel_for(options.jobs, tasks, [&](std::size_t t) {
    const std::size_t i = t / options.repeats;
    const std::size_t r = t % options.repeats;
    const DagNetwork net = standard_net(specs[i], options.hidden_activation, derive_seed(options.train.seed, {i, r, 0}));
    TrainConfig tc = options.train;
    tc.seed = derive_seed(options.train.seed, {i, r, 1});
    errors[t] = train(net, data, tc, options.budget_multiplier).report.final_loss;
    if (r == 0) complexities[i] = complexity(net);
  });
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < options.repeats; ++r) {
      const double e = errors[i * options.repeats + r];
      if (e < best) best = e;
    }
    rows.push_back(SweepRow{specs[i], complexities[i], best});
  }
  return rows;
}

EnvelopeCurve envelope(std::span<const EnvelopePoint> points) {
  if (points.empty()) throw std::invalid_argument("envelope of an empty point set");
  std::vector<EnvelopePoint> sorted;
  for (const EnvelopePoint& p : points)
    if (!std::isnan(p.error)) sorted.push_back(p);
  std::sort(sorted.begin(), sorted.end(), [](const EnvelopePoint& a, const EnvelopePoint& b) {
    return a.complexity != b.complexity ? a.complexity < b.complexity : a.error < b.error;
  });
  EnvelopeCurve curve;
  for (const EnvelopePoint& p : sorted)
    if (curve.points.empty() || p.error < curve.points.back().error) curve.points.push_back(p);
  if (curve.points.empty()) throw std::invalid_argument("envelope of an empty point set");
  return curve;
}

double envelope_best_complexity(const EnvelopeCurve& curve, double target_error) {
  const auto& pts = curve.points;
  if (pts.empty()) throw std::invalid_argument("empty envelope");
  if (target_error >= pts.front().error) return static_cast<double>(pts.front().complexity);
  if (target_error < pts.back().error) return std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const EnvelopePoint& a = pts[i];
    const EnvelopePoint& b = pts[i + 1];
    if (target_error == b.error) return static_cast<double>(b.complexity);
    if (target_error > b.error) {
      const double t = (a.error - target_error) / (a.error - b.error);
      return static_cast<double>(a.complexity) +
             t * (static_cast<double>(b.complexity) - static_cast<double>(a.complexity));
    }
  }
  return static_cast<double>(pts.back().complexity);
}

std::vector<ComparisonRow> compare_to_envelope(const EnvelopeCurve& standard, std::span<const EnvelopePoint> optimized) {
  if (optimized.empty()) throw std::invalid_argument("no optimized points to compare");
  std::vector<ComparisonRow> rows;
  for (const EnvelopePoint& p : optimized)
    rows.push_back(ComparisonRow{p.error, envelope_best_complexity(standard, p.error), p.complexity});
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "spec,complexity,error\n";
  for (const SweepRow& r : rows) {
    // The spec text contains commas; separate its sizes with 'x' in the file.
    std::string spec = to_string(r.spec);
    std::replace(spec.begin(), spec.end(), ',', 'x');
    out << spec << ',' << r.complexity << ',' << csv::format_double(r.error) << '\n';
  }
  return out.str();
}

std::string envelope_csv(const EnvelopeCurve& curve) {
  std::ostringstream out;
  out << "complexity,error\n";
  for (const EnvelopePoint& p : curve.points) out << p.complexity << ',' << csv::format_double(p.error) << '\n';
  return out.str();
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "error,standard_best_complexity,optimized_complexity\n";
  for (const ComparisonRow& r : rows)
    out << csv::format_double(r.error) << ',' << csv::format_double(r.standard_best_complexity) << ','
        << r.optimized_complexity << '\n';
  return out.str();
}

std::string poly_csv(const std::vector<PolyFit>& fits) {
  std::ostringstream out;
  out << "degree,complexity,error,original_units_error,rank_deficient\n";
  for (const PolyFit& f : fits)
    out << f.model.degree << ',' << f.model.complexity() << ',' << csv::format_double(f.error) << ','
        << csv::format_double(original_units_error(f.error)) << ',' << (f.rank_deficient ? 1 : 0) << '\n';
  return out.str();
}

std::vector<EnvelopePoint> read_points_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
  const auto header = csv::split_line(line);
  std::optional<std::size_t> ci, ei;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "complexity") ci = i;
    if (header[i] == "error") ei = i;
  }
  if (!ci || !ei) throw std::invalid_argument("CSV needs 'complexity' and 'error' columns");
  std::vector<EnvelopePoint> pts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != header.size())
      throw std::invalid_argument("line " + std::to_string(line_no) + ": wrong number of fields");
    const long long c = csv::parse_int(fields[*ci]);
    if (c < 0) throw std::invalid_argument("line " + std::to_string(line_no) + ": negative complexity");
    pts.push_back(EnvelopePoint{static_cast<std::size_t>(c), csv::parse_double(fields[*ei])});
  }
  return pts;
}

}  // namespace dagnas
