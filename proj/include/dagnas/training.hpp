#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dagnas/kernels.hpp"
#include "dagnas/network.hpp"

namespace dagnas {

/// Rows of (y, x0..x{n-1}). Values are kept finite.
class TrainingMatrix {
 public:
  explicit TrainingMatrix(std::size_t n_inputs);

  std::size_t n_inputs() const { return n_inputs_; }
  std::size_t rows() const { return y_.size(); }

  /// Throws std::invalid_argument on the wrong arity or a non-finite value.
  void add_row(double y, std::span<const double> x);

  double y(std::size_t row) const { return y_[row]; }
  std::span<const double> x(std::size_t row) const {
    return {x_.data() + row * n_inputs_, n_inputs_};
  }
  std::span<const double> targets() const { return y_; }

  friend bool operator==(const TrainingMatrix&, const TrainingMatrix&) = default;

 private:
  std::size_t n_inputs_;
  std::vector<double> y_;
  std::vector<double> x_;
};

/// CSV with header `y,x0,x1,...`, one row per line.
void write_training_csv(std::ostream& out, const TrainingMatrix& data);
void write_training_csv(const std::filesystem::path& path, const TrainingMatrix& data);
TrainingMatrix read_training_csv(std::istream& in);
/// Throws IoError when the file cannot be opened, std::invalid_argument on bad content.
TrainingMatrix read_training_csv(const std::filesystem::path& path);

enum class Optimizer { Adam, SgdMomentum };

std::string to_string(Optimizer opt);
Optimizer parse_optimizer(const std::string& name);

struct TrainConfig {
  static constexpr std::size_t kAutoBatch = 0;
  static constexpr std::size_t kFullBatch = SIZE_MAX;
  // Auto batching: full batch below kAutoThreshold rows, else kAutoMiniBatch.
  static constexpr std::size_t kAutoThreshold = 4096;
  static constexpr std::size_t kAutoMiniBatch = 1024;

  Optimizer optimizer = Optimizer::Adam;
  double learning_rate = 1e-3;
  std::size_t batch_size = kAutoBatch;
  std::uint64_t seed = 0;
  /// Optimizer steps in one unit of training budget.
  std::size_t budget_unit = 2000;

  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double momentum = 0.9;

  /// Throws std::invalid_argument.
  void validate() const;
  std::size_t effective_batch(std::size_t rows) const;
};

struct TrainReport {
  double initial_loss = 0.0;
  /// Loss of the returned parameters; equal to best_loss_seen.
  double final_loss = 0.0;
  double best_loss_seen = 0.0;
  std::size_t steps_run = 0;
  /// A non-finite loss stopped training early; the best snapshot was restored.
  bool aborted_non_finite = false;
};

struct TrainResult {
  DagNetwork network;
  TrainReport report;
};

/// Column-major copy of (a subset of) a training matrix.
struct Batch {
  std::size_t rows = 0;
  std::size_t n_inputs = 0;
  std::vector<double> inputs;   // input j occupies [j*rows, (j+1)*rows)
  std::vector<double> targets;

  static Batch from(const TrainingMatrix& data);
  static Batch gather(const TrainingMatrix& data, std::span<const std::size_t> row_ids);
};

/// Flat parameter vector plus compiled topology, evaluated over many rows at
/// once with the row kernels. Parameters follow DagNetwork::parameters().
class BatchModel {
 public:
  explicit BatchModel(const DagNetwork& net, const kernels::Table& table = kernels::active());

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  /// Mean squared residual over the batch. Node values stay available.
  double forward(const Batch& batch);
  /// Mean squared residual and its gradient with respect to params().
  double forward_backward(const Batch& batch, std::span<double> grad);
  /// Values of a node over the rows of the last forward pass.
  std::span<const double> node_values(NeuronId id) const;

  void write_back(DagNetwork& net) const { net.set_parameters(params_); }

 private:
  struct Unit {
    std::size_t bias_param;
    std::size_t first_edge;
    std::size_t edge_count;
    Activation activation;
  };

  void resize(std::size_t rows);
  std::span<double> column(std::vector<double>& store, std::size_t node) {
    return {store.data() + node * rows_, rows_};
  }

  const kernels::Table* k_;
  std::size_t inputs_;
  std::vector<Unit> units_;
  std::vector<std::size_t> edge_source_;
  std::vector<std::size_t> edge_param_;
  std::vector<double> params_;

  std::size_t rows_ = 0;
  std::vector<double> values_;      // node_count columns
  std::vector<double> pre_;         // pre-activation, node_count columns (inputs unused)
  std::vector<double> grad_values_; // d loss / d node value
  std::vector<double> residual_;
  std::vector<double> dz_;
};

/// Mean over rows of (f(x) - y)^2. Throws std::invalid_argument on arity mismatch.
double loss(const DagNetwork& net, const TrainingMatrix& data);

/// Gradient of loss() in DagNetwork::parameters() order.
std::vector<double> gradient(const DagNetwork& net, const TrainingMatrix& data);

/// Values of one node over every row of `data`.
std::vector<double> node_values(const DagNetwork& net, const TrainingMatrix& data, NeuronId id);

/// Runs budget_multiplier * cfg.budget_unit optimizer steps from fresh
/// optimizer state and returns the parameters with the lowest full-data loss
/// seen along the way.
TrainResult train(const DagNetwork& net, const TrainingMatrix& data, const TrainConfig& cfg,
                  std::size_t budget_multiplier);

}  // namespace dagnas
