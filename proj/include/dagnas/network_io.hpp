#pragma once

#include <filesystem>
#include <string>

#include "dagnas/network.hpp"

namespace dagnas {

/// JSON document with `input_count`, `default_activation` and the neurons in
/// topological order, each as {id, bias, activation, incoming:[{src, weight}]}.
/// Doubles are written in shortest round-trip form, so save/load is exact.
/// Throws std::invalid_argument on non-finite parameters.
std::string network_to_json(const DagNetwork& net, int indent = 1);

/// Throws std::invalid_argument on malformed documents or broken topology.
DagNetwork network_from_json(const std::string& text);

void save_network(const DagNetwork& net, const std::filesystem::path& path);
DagNetwork load_network(const std::filesystem::path& path);

struct DotOptions {
  bool hide_inputs = false;
  int precision = 3;
};

/// Graphviz digraph. Inputs are boxes named x0..; neurons are circles
/// labelled by id, the output a double circle; edges carry their weights.
std::string network_to_dot(const DagNetwork& net, const DotOptions& options = {});

}  // namespace dagnas
