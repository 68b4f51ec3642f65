#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dagnas/network.hpp"
#include "dagnas/training.hpp"

namespace dagnas {

enum class TrajectoryEvent { Initial, PruneAccepted, PruneRejected, Linearized, NeuronAdded, Swept };

std::string to_string(TrajectoryEvent e);
TrajectoryEvent parse_trajectory_event(const std::string& name);

struct TrajectoryPoint {
  std::size_t step = 0;
  TrajectoryEvent event = TrajectoryEvent::Initial;
  std::size_t complexity = 0;
  double error = 0.0;
  /// Computing neurons in the logged network; not part of the CSV.
  std::size_t neurons = 0;
};

/// Training budgets in units of TrainConfig::budget_unit.
struct BudgetRatios {
  std::size_t candidate = 1;
  std::size_t winner = 3;
  std::size_t after_add = 5;
};

struct SearchConfig {
  double epsilon = 0.006;
  std::size_t candidates_k = 3;
  TrainConfig train;
  BudgetRatios budget;
  /// Growth stops once a pruned network has at least this many parameters.
  std::size_t complexity_limit = 600;
  std::size_t max_neurons_added = 1000;
  std::optional<double> target_error;
  double init_noise_sigma = 1e-4;
  std::size_t quadrature_nodes = 257;
  /// Worker threads for candidate training. Results do not depend on it.
  std::size_t jobs = 1;
  /// Called for every logged trajectory point.
  std::function<void(const TrajectoryPoint&)> progress;

  /// Throws std::invalid_argument.
  void validate() const;
};

/// Append-only log of the search. Initial, PruneAccepted and NeuronAdded
/// points describe a network the search kept; the others annotate.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::function<void(const TrajectoryPoint&)> listener) : listener_(std::move(listener)) {}

  void log(TrajectoryEvent event, const DagNetwork& net, double error);
  void log(TrajectoryEvent event, std::size_t complexity, std::size_t neurons, double error);
  const std::vector<TrajectoryPoint>& points() const { return points_; }

 private:
  std::vector<TrajectoryPoint> points_;
  std::function<void(const TrajectoryPoint&)> listener_;
};

bool is_state_event(TrajectoryEvent e);

struct EdgeRef {
  NeuronId target;
  NeuronId source;
  friend bool operator==(const EdgeRef&, const EdgeRef&) = default;
};

/// The min(k, edge_count) edges of smallest |weight|, ties by (target,
/// source) ascending. Biases are not candidates. Throws std::invalid_argument
/// on an edgeless network.
std::vector<EdgeRef> least_weight_edges(const DagNetwork& net, std::size_t k);

struct AffineFit {
  double v0 = 0.0;
  double v1 = 0.0;
};

/// Least-squares affine approximation v0 + v1 t of g(w0 + w1 t) on [t0, t1],
/// with the moments integrated by composite Simpson on `nodes` points.
AffineFit fit_affine(Activation g, double w0, double w1, double t0, double t1, std::size_t nodes);

/// Replaces a non-output neuron that has exactly one incoming edge by its
/// affine approximation over the range its source takes on `data`, folded
/// into the consumers' weights and biases. The neuron is deleted and ids are
/// renumbered. Throws std::invalid_argument if the indegree is not 1 or
/// `id` is the output.
DagNetwork linearize_single_input_neuron(const DagNetwork& net, NeuronId id,
                                         const TrainingMatrix& data, std::size_t quadrature_nodes);

/// Network with one edge removed plus the follow-up simplifications.
struct Candidate {
  DagNetwork network;
  EdgeRef removed;
  std::size_t linearized = 0;
  std::size_t swept = 0;
};

/// Removes the edge, linearizes any neuron the removal left with a single
/// input (and constant-folds one left with none), repeats for consumers
/// whose indegree drops in turn, then sweeps dead neurons.
Candidate build_candidate(const DagNetwork& net, EdgeRef edge, const TrainingMatrix& data,
                          std::size_t quadrature_nodes);

struct PruneOutcome {
  DagNetwork network;
  double error = 0.0;
  std::size_t linearized = 0;
  std::size_t swept = 0;
};

/// One connection-removal step: k candidates trained for the candidate
/// budget, the lowest-error one retrained for the winner budget. `phase`
/// keys the candidates' seeds.
PruneOutcome prune_step(const DagNetwork& net, const TrainingMatrix& data, const SearchConfig& cfg,
                        std::uint64_t phase = 0);

struct RemovalResult {
  DagNetwork network;
  double error = 0.0;
  std::size_t accepted = 0;
};

using AcceptCallback = std::function<void(const DagNetwork&, double)>;

/// Repeats prune_step while the winner's error stays within (1 + epsilon)
/// of the input network's error. `phase` is advanced once per step;
/// `on_accept` sees every accepted network.
RemovalResult removal_loop(const DagNetwork& net, const TrainingMatrix& data, const SearchConfig& cfg,
                           Trajectory& log, std::uint64_t& phase, const AcceptCallback& on_accept = {});

/// Inserts a neuron ahead of all others, reading every input and read by
/// every existing neuron. Outgoing weights and the bias are zero; incoming
/// weights are uniform noise in [-sigma, sigma] drawn from `seed`.
DagNetwork add_neuron(const DagNetwork& net, double sigma, std::uint64_t seed);

struct ParetoPoint {
  std::size_t complexity = 0;
  double error = 0.0;
  std::size_t snapshot = 0;  // index into GrowResult::snapshots
};

struct GrowResult {
  DagNetwork best_network;
  std::vector<TrajectoryPoint> trajectory;
  /// Non-dominated kept states, ascending complexity.
  std::vector<ParetoPoint> pareto;
  /// One network per kept state, in trajectory order.
  std::vector<DagNetwork> snapshots;
};

/// Alternates removal loops with neuron insertion until a stop condition.
GrowResult grow(const DagNetwork& net, const TrainingMatrix& data, const SearchConfig& cfg);

/// Every kept PruneAccepted point within (1 + epsilon) of the segment's
/// opening Initial/NeuronAdded point.
bool guard_holds(const std::vector<TrajectoryPoint>& trajectory, double epsilon);

/// Kept complexity strictly falls within each removal segment and rises at
/// each NeuronAdded by 1 + n_inputs + neurons before the insertion; no two
/// NeuronAdded points are adjacent.
bool sawtooth_holds(const std::vector<TrajectoryPoint>& trajectory, std::size_t n_inputs);

/// CSV `step,event,complexity,error`.
std::string trajectory_csv(const std::vector<TrajectoryPoint>& trajectory);
/// CSV `complexity,error,snapshot`; snapshot names come from `snapshot_name`.
std::string frontier_csv(const std::vector<ParetoPoint>& pareto,
                         const std::vector<std::string>& snapshot_names);

}  // namespace dagnas
