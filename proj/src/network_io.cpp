#include "dagnas/network_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "dagnas/errors.hpp"

namespace dagnas {

using nlohmann::json;

std::string network_to_json(const DagNetwork& net, int indent) {
  json doc;
  doc["input_count"] = net.input_count();
  doc["default_activation"] = to_string(net.default_activation());
  json neurons = json::array();
  for (const Neuron& nr : net.neurons()) {
    if (!std::isfinite(nr.bias)) throw std::invalid_argument("non-finite bias");
    json in = json::array();
    for (const Edge& e : nr.incoming) {
      if (!std::isfinite(e.weight)) throw std::invalid_argument("non-finite weight");
      in.push_back({{"src", e.source.value}, {"weight", e.weight}});
    }
    neurons.push_back({{"id", nr.id.value},
                       {"bias", nr.bias},
                       {"activation", to_string(nr.activation)},
                       {"incoming", std::move(in)}});
  }
  doc["neurons"] = std::move(neurons);
  return doc.dump(indent) + "\n";
}

DagNetwork network_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    DagNetwork net(doc.at("input_count").get<std::size_t>(),
                   parse_activation(doc.at("default_activation").get<std::string>()));
    for (const json& jn : doc.at("neurons")) {
      std::vector<Edge> in;
      for (const json& je : jn.at("incoming"))
        in.push_back(Edge{NeuronId(je.at("src").get<std::size_t>()), je.at("weight").get<double>()});
      const NeuronId id = net.append_neuron(jn.at("bias").get<double>(),
                                            parse_activation(jn.at("activation").get<std::string>()),
                                            std::move(in));
      if (jn.at("id").get<std::size_t>() != id.index())
        throw std::invalid_argument("neuron ids must be dense and in topological order");
    }
    return net;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed network document: ") + e.what());
  }
}

void save_network(const DagNetwork& net, const std::filesystem::path& path) {
  write_file_atomically(path, network_to_json(net));
}

DagNetwork load_network(const std::filesystem::path& path) {
  return network_from_json(read_file(path));
}

std::string network_to_dot(const DagNetwork& net, const DotOptions& options) {
  std::ostringstream out;
  out << "digraph network {\n  rankdir=LR;\n";
  if (!options.hide_inputs)
    for (std::size_t i = 0; i < net.input_count(); ++i)
      out << "  n" << i << " [shape=box, label=\"x" << i << "\"];\n";
  for (const Neuron& nr : net.neurons())
    out << "  n" << nr.id.value << " [shape=" << (net.is_output(nr.id) ? "doublecircle" : "circle")
        << ", label=\"" << nr.id.value << "\"];\n";
  out << std::setprecision(options.precision);
  for (const Neuron& nr : net.neurons())
    for (const Edge& e : nr.incoming) {
      if (options.hide_inputs && net.is_input(e.source)) continue;
      out << "  n" << e.source.value << " -> n" << nr.id.value << " [label=\"" << e.weight << "\"];\n";
    }
  out << "}\n";
  return out.str();
}

}  // namespace dagnas
