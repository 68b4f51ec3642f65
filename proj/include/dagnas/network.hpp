#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dagnas/activation.hpp"

namespace dagnas {

/// Node index inside one network snapshot. Ids 0..input_count-1 are the
/// inputs; computing neurons follow in topological order. Structural edits
/// renumber densely, so an id is only meaningful for the snapshot it came from.
struct NeuronId {
  std::uint32_t value = 0;

  constexpr NeuronId() = default;
  constexpr explicit NeuronId(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}
  constexpr std::size_t index() const { return value; }
  friend constexpr auto operator<=>(NeuronId, NeuronId) = default;
};

struct Edge {
  NeuronId source;
  double weight = 0.0;
};

struct Neuron {
  NeuronId id;
  double bias = 0.0;
  Activation activation = Activation::Identity;
  std::vector<Edge> incoming;

  std::size_t indegree() const { return incoming.size(); }
};

/// A feedforward network on an arbitrary DAG. Every edge points from an
/// input or an earlier neuron to a later neuron, so the neuron list is its
/// own topological order. The last neuron is the output.
class DagNetwork {
 public:
  DagNetwork(std::size_t input_count, Activation default_activation);

  std::size_t input_count() const { return input_count_; }
  std::size_t neuron_count() const { return neurons_.size(); }
  std::size_t node_count() const { return input_count_ + neurons_.size(); }
  std::size_t edge_count() const;
  Activation default_activation() const { return default_activation_; }

  bool is_input(NeuronId id) const { return id.index() < input_count_; }
  bool is_output(NeuronId id) const;
  /// Throws std::logic_error for a network without neurons.
  NeuronId output() const;

  std::span<const Neuron> neurons() const { return neurons_; }
  const Neuron& neuron(NeuronId id) const;

  /// Appends a neuron after every existing one and returns its id.
  /// Throws std::invalid_argument on a forward or duplicate source.
  NeuronId append_neuron(double bias, Activation activation, std::vector<Edge> incoming);

  std::optional<double> weight(NeuronId target, NeuronId source) const;
  void set_weight(NeuronId target, NeuronId source, double weight);
  void set_bias(NeuronId target, double bias);
  /// Adds `delta` to the edge, creating it after the existing edges if absent.
  void accumulate_weight(NeuronId target, NeuronId source, double delta);
  /// Throws std::invalid_argument if the edge does not exist.
  void erase_edge(NeuronId target, NeuronId source);

  /// Computing neurons that read from `id`, ascending.
  std::vector<NeuronId> consumers(NeuronId id) const;

  /// Biases and edge weights in canonical order: neurons in topological
  /// order, each contributing its bias followed by its incoming weights.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);

  /// Throws std::logic_error if any structural invariant is violated.
  void validate() const;

  friend bool operator==(const DagNetwork&, const DagNetwork&);

 private:
  Neuron& mutable_neuron(NeuronId id);

  std::size_t input_count_;
  Activation default_activation_;
  std::vector<Neuron> neurons_;
};

bool operator==(const Neuron& a, const Neuron& b);

struct ForwardResult {
  double output = 0.0;
  /// Value of every node, inputs included, indexed by id.
  std::vector<double> values;
};

/// Single-sample evaluation. Throws std::invalid_argument on an input of the
/// wrong length.
ForwardResult forward(const DagNetwork& net, std::span<const double> input);

/// Number of learnable parameters: one bias plus one weight per incoming
/// edge, summed over computing neurons.
std::size_t complexity(const DagNetwork& net);

/// Copy of `net` without the edge. Throws std::invalid_argument if absent.
DagNetwork remove_edge(const DagNetwork& net, NeuronId target, NeuronId source);

/// Copy of `net` with the flagged computing neurons deleted together with
/// every edge that touches them, ids renumbered densely.
DagNetwork erase_neurons(const DagNetwork& net, const std::vector<bool>& erase);

/// Deletes, until fixpoint, every computing neuron other than the output
/// whose value is read by nobody. The network function is unchanged.
DagNetwork dead_neuron_sweep(const DagNetwork& net);

/// Fully connected inputs -> hidden1 -> hidden2 -> one output.
struct ThreeLayerSpec {
  std::size_t inputs = 0;
  std::size_t hidden1 = 0;
  std::size_t hidden2 = 0;
  friend bool operator==(const ThreeLayerSpec&, const ThreeLayerSpec&) = default;
};

/// `neurons` neurons, each reading every input and every earlier neuron.
/// The last one is the output.
struct MaxFullyConnectedSpec {
  std::size_t inputs = 0;
  std::size_t neurons = 0;
  friend bool operator==(const MaxFullyConnectedSpec&, const MaxFullyConnectedSpec&) = default;
};

using ArchSpec = std::variant<ThreeLayerSpec, MaxFullyConnectedSpec>;

/// Parses "three-layer:n,N1,N2" or "max-fc:n,m" (sizes may also be separated by 'x').
ArchSpec parse_arch_spec(const std::string& text);
std::string to_string(const ArchSpec& spec);

/// Builds the architecture with hidden neurons using `hidden_activation`, an
/// identity output neuron, and weights from `initialize_weights(seed)`.
/// Throws std::invalid_argument on zero sizes.
DagNetwork standard_net(const ArchSpec& spec, Activation hidden_activation, std::uint64_t seed);

/// Biases to 0, every incoming weight uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
void initialize_weights(DagNetwork& net, std::uint64_t seed);

}  // namespace dagnas
