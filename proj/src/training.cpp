#include "dagnas/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dagnas/csv.hpp"
#include "dagnas/errors.hpp"

namespace dagnas {

TrainingMatrix::TrainingMatrix(std::size_t n_inputs) : n_inputs_(n_inputs) {
  if (n_inputs == 0) throw std::invalid_argument("training matrix needs at least one input column");
}

void TrainingMatrix::add_row(double y, std::span<const double> x) {
  if (x.size() != n_inputs_)
    throw std::invalid_argument("row has " + std::to_string(x.size()) + " inputs, expected " +
                                std::to_string(n_inputs_));
  if (!std::isfinite(y) || !std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); }))
    throw std::invalid_argument("training rows must be finite");
  y_.push_back(y);
  x_.insert(x_.end(), x.begin(), x.end());
}

void write_training_csv(std::ostream& out, const TrainingMatrix& data) {
  out << 'y';
  for (std::size_t j = 0; j < data.n_inputs(); ++j) out << ",x" << j;
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    out << csv::format_double(data.y(r));
    for (double v : data.x(r)) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

void write_training_csv(const std::filesystem::path& path, const TrainingMatrix& data) {
  std::ostringstream ss;
  write_training_csv(ss, data);
  write_file_atomically(path, ss.str());
}

TrainingMatrix read_training_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("training CSV is empty");
  const auto header = csv::split_line(line);
  if (header.size() < 2 || header[0] != "y") throw std::invalid_argument("training CSV header must be y,x0,...");
  for (std::size_t j = 1; j < header.size(); ++j)
    if (header[j] != "x" + std::to_string(j - 1))
      throw std::invalid_argument("unexpected column '" + header[j] + "' in training CSV header");
  TrainingMatrix data(header.size() - 1);
  std::vector<double> x(data.n_inputs());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != header.size())
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields");
    try {
      for (std::size_t j = 0; j < x.size(); ++j) x[j] = csv::parse_double(fields[j + 1]);
      data.add_row(csv::parse_double(fields[0]), x);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

TrainingMatrix read_training_csv(const std::filesystem::path& path) {
  std::istringstream ss(read_file(path));
  return read_training_csv(ss);
}

std::string to_string(Optimizer opt) { return opt == Optimizer::Adam ? "adam" : "sgd_momentum"; }

Optimizer parse_optimizer(const std::string& name) {
  if (name == "adam") return Optimizer::Adam;
  if (name == "sgd_momentum" || name == "sgd-momentum" || name == "sgd") return Optimizer::SgdMomentum;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning_rate must be positive");
  if (budget_unit < 1) throw std::invalid_argument("budget_unit must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_epsilon > 0.0))
    throw std::invalid_argument("bad Adam constants");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
}

std::size_t TrainConfig::effective_batch(std::size_t rows) const {
  std::size_t b = batch_size;
  if (b == kAutoBatch) b = rows < kAutoThreshold ? kFullBatch : kAutoMiniBatch;
  return std::min(b, rows);
}

Batch Batch::from(const TrainingMatrix& data) {
  std::vector<std::size_t> all(data.rows());
  std::iota(all.begin(), all.end(), 0);
  return gather(data, all);
}

Batch Batch::gather(const TrainingMatrix& data, std::span<const std::size_t> row_ids) {
  Batch b;
  b.rows = row_ids.size();
  b.n_inputs = data.n_inputs();
  b.inputs.resize(b.rows * b.n_inputs);
  b.targets.resize(b.rows);
  for (std::size_t i = 0; i < b.rows; ++i) {
    const auto x = data.x(row_ids[i]);
    for (std::size_t j = 0; j < b.n_inputs; ++j) b.inputs[j * b.rows + i] = x[j];
    b.targets[i] = data.y(row_ids[i]);
  }
  return b;
}

BatchModel::BatchModel(const DagNetwork& net, const kernels::Table& table)
    : k_(&table), inputs_(net.input_count()), params_(net.parameters()) {
  if (net.neuron_count() == 0) throw std::invalid_argument("network has no neurons");
  std::size_t p = 0;
  for (const Neuron& nr : net.neurons()) {
    units_.push_back(Unit{p++, edge_source_.size(), nr.incoming.size(), nr.activation});
    for (const Edge& e : nr.incoming) {
      edge_source_.push_back(e.source.index());
      edge_param_.push_back(p++);
    }
  }
}

void BatchModel::resize(std::size_t rows) {
  if (rows == rows_) return;
  rows_ = rows;
  const std::size_t nodes = inputs_ + units_.size();
  values_.assign(nodes * rows, 0.0);
  pre_.assign(nodes * rows, 0.0);
  grad_values_.assign(nodes * rows, 0.0);
  residual_.assign(rows, 0.0);
  dz_.assign(rows, 0.0);
}

double BatchModel::forward(const Batch& batch) {
  if (batch.n_inputs != inputs_) throw std::invalid_argument("batch arity does not match network");
  if (batch.rows == 0) throw std::invalid_argument("empty batch");
  resize(batch.rows);
  std::copy(batch.inputs.begin(), batch.inputs.end(), values_.begin());
  for (std::size_t u = 0; u < units_.size(); ++u) {
    const Unit& unit = units_[u];
    const std::size_t node = inputs_ + u;
    auto z = column(pre_, node);
    k_->fill(z, params_[unit.bias_param]);
    for (std::size_t e = unit.first_edge; e < unit.first_edge + unit.edge_count; ++e)
      k_->axpy(z, params_[edge_param_[e]], column(values_, edge_source_[e]));
    k_->activate(unit.activation, z, column(values_, node));
  }
  const std::size_t out = inputs_ + units_.size() - 1;
  const double ss = k_->residual(residual_, column(values_, out), batch.targets);
  return ss / static_cast<double>(rows_);
}

double BatchModel::forward_backward(const Batch& batch, std::span<double> grad) {
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer has wrong length");
  const double mean = forward(batch);
  const std::size_t nodes = inputs_ + units_.size();
  for (std::size_t node = inputs_; node + 1 < nodes; ++node) k_->fill(column(grad_values_, node), 0.0);
  auto g_out = column(grad_values_, nodes - 1);
  k_->fill(g_out, 0.0);
  k_->axpy(g_out, 2.0 / static_cast<double>(rows_), residual_);

  for (std::size_t u = units_.size(); u-- > 0;) {
    const Unit& unit = units_[u];
    const std::size_t node = inputs_ + u;
    k_->activate_grad(unit.activation, column(pre_, node), column(grad_values_, node), dz_);
    grad[unit.bias_param] = k_->sum(dz_);
    for (std::size_t e = unit.first_edge; e < unit.first_edge + unit.edge_count; ++e) {
      const std::size_t src = edge_source_[e];
      grad[edge_param_[e]] = k_->dot(dz_, column(values_, src));
      if (src >= inputs_) k_->axpy(column(grad_values_, src), params_[edge_param_[e]], dz_);
    }
  }
  return mean;
}

std::span<const double> BatchModel::node_values(NeuronId id) const {
  if (id.index() >= inputs_ + units_.size()) throw std::out_of_range("node id out of range");
  return {values_.data() + id.index() * rows_, rows_};
}

namespace {

void check_arity(const DagNetwork& net, const TrainingMatrix& data) {
  if (net.input_count() != data.n_inputs())
    throw std::invalid_argument("dataset has " + std::to_string(data.n_inputs()) +
                                " inputs, network expects " + std::to_string(net.input_count()));
  if (data.rows() == 0) throw std::invalid_argument("dataset has no rows");
}

class OptimizerState {
 public:
  OptimizerState(const TrainConfig& cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    if (cfg_.optimizer == Optimizer::Adam) {
      const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        params[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.adam_epsilon);
      }
    } else {
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.momentum * m_[i] - cfg_.learning_rate * grad[i];
        params[i] += m_[i];
      }
    }
  }

 private:
  const TrainConfig& cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace

double loss(const DagNetwork& net, const TrainingMatrix& data) {
  check_arity(net, data);
  BatchModel model(net);
  return model.forward(Batch::from(data));
}

std::vector<double> gradient(const DagNetwork& net, const TrainingMatrix& data) {
  check_arity(net, data);
  BatchModel model(net);
  std::vector<double> g(model.params().size());
  model.forward_backward(Batch::from(data), g);
  return g;
}

std::vector<double> node_values(const DagNetwork& net, const TrainingMatrix& data, NeuronId id) {
  check_arity(net, data);
  BatchModel model(net);
  model.forward(Batch::from(data));
  const auto v = model.node_values(id);
  return {v.begin(), v.end()};
}

TrainResult train(const DagNetwork& net, const TrainingMatrix& data, const TrainConfig& cfg,
                  std::size_t budget_multiplier) {
  cfg.validate();
  check_arity(net, data);
  if (budget_multiplier < 1) throw std::invalid_argument("budget multiplier must be at least 1");

  BatchModel model(net);
  const Batch full = Batch::from(data);
  const std::size_t total_steps = budget_multiplier * cfg.budget_unit;
  const std::size_t batch = cfg.effective_batch(data.rows());
  const bool full_batch = batch >= data.rows();

  std::vector<double> grad(model.params().size());
  std::vector<double> best(model.params().begin(), model.params().end());
  OptimizerState opt(cfg, grad.size());
  TrainReport report;

  auto record = [&](double l) {
    if (l < report.best_loss_seen) {
      report.best_loss_seen = l;
      best.assign(model.params().begin(), model.params().end());
    }
  };

  report.initial_loss = model.forward(full);
  report.best_loss_seen = report.initial_loss;
  if (!std::isfinite(report.initial_loss)) {
    report.aborted_non_finite = true;
    report.final_loss = report.initial_loss;
    return {net, report};
  }

  if (full_batch) {
    for (std::size_t s = 0; s < total_steps; ++s) {
      const double l = model.forward_backward(full, grad);
      if (!std::isfinite(l)) {
        report.aborted_non_finite = true;
        break;
      }
      record(l);
      opt.step(model.params(), grad);
      ++report.steps_run;
    }
    if (!report.aborted_non_finite) {
      const double l = model.forward(full);
      if (std::isfinite(l)) record(l);
      else report.aborted_non_finite = true;
    }
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();
    while (report.steps_run < total_steps && !report.aborted_non_finite) {
      if (cursor >= order.size()) {
        if (report.steps_run > 0) {
          const double l = model.forward(full);
          if (!std::isfinite(l)) {
            report.aborted_non_finite = true;
            break;
          }
          record(l);
        }
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const std::size_t n = std::min(batch, order.size() - cursor);
      const Batch mb = Batch::gather(data, std::span(order).subspan(cursor, n));
      cursor += n;
      const double l = model.forward_backward(mb, grad);
      if (!std::isfinite(l)) {
        report.aborted_non_finite = true;
        break;
      }
      opt.step(model.params(), grad);
      ++report.steps_run;
    }
    if (!report.aborted_non_finite) {
      const double l = model.forward(full);
      if (std::isfinite(l)) record(l);
      else report.aborted_non_finite = true;
    }
  }

  std::copy(best.begin(), best.end(), model.params().begin());
  DagNetwork result = net;
  model.write_back(result);
  report.final_loss = report.best_loss_seen;
  return {std::move(result), report};
}

}  // namespace dagnas
