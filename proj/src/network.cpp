#include "dagnas/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dagnas {

DagNetwork::DagNetwork(std::size_t input_count, Activation default_activation)
    : input_count_(input_count), default_activation_(default_activation) {
  if (input_count == 0) throw std::invalid_argument("network needs at least one input");
}

std::size_t DagNetwork::edge_count() const {
  std::size_t n = 0;
  for (const Neuron& nr : neurons_) n += nr.incoming.size();
  return n;
}

bool DagNetwork::is_output(NeuronId id) const {
  return !neurons_.empty() && id.index() == node_count() - 1;
}

NeuronId DagNetwork::output() const {
  if (neurons_.empty()) throw std::logic_error("network has no neurons");
  return NeuronId(node_count() - 1);
}

const Neuron& DagNetwork::neuron(NeuronId id) const {
  if (id.index() < input_count_ || id.index() >= node_count())
    throw std::out_of_range("no computing neuron with id " + std::to_string(id.value));
  return neurons_[id.index() - input_count_];
}

Neuron& DagNetwork::mutable_neuron(NeuronId id) {
  return const_cast<Neuron&>(static_cast<const DagNetwork&>(*this).neuron(id));
}

NeuronId DagNetwork::append_neuron(double bias, Activation activation, std::vector<Edge> incoming) {
  const NeuronId id(node_count());
  for (std::size_t i = 0; i < incoming.size(); ++i) {
    if (incoming[i].source >= id)
      throw std::invalid_argument("edge source " + std::to_string(incoming[i].source.value) +
                                  " does not precede neuron " + std::to_string(id.value));
    for (std::size_t j = 0; j < i; ++j)
      if (incoming[j].source == incoming[i].source)
        throw std::invalid_argument("duplicate edge source " +
                                    std::to_string(incoming[i].source.value));
  }
  neurons_.push_back(Neuron{id, bias, activation, std::move(incoming)});
  return id;
}

std::optional<double> DagNetwork::weight(NeuronId target, NeuronId source) const {
  for (const Edge& e : neuron(target).incoming)
    if (e.source == source) return e.weight;
  return std::nullopt;
}

void DagNetwork::set_weight(NeuronId target, NeuronId source, double weight) {
  for (Edge& e : mutable_neuron(target).incoming)
    if (e.source == source) {
      e.weight = weight;
      return;
    }
  throw std::invalid_argument("no edge " + std::to_string(source.value) + " -> " +
                              std::to_string(target.value));
}

void DagNetwork::set_bias(NeuronId target, double bias) { mutable_neuron(target).bias = bias; }

void DagNetwork::accumulate_weight(NeuronId target, NeuronId source, double delta) {
  Neuron& nr = mutable_neuron(target);
  if (source >= target) throw std::invalid_argument("edge would point forward");
  for (Edge& e : nr.incoming)
    if (e.source == source) {
      e.weight += delta;
      return;
    }
  nr.incoming.push_back(Edge{source, delta});
}

void DagNetwork::erase_edge(NeuronId target, NeuronId source) {
  auto& in = mutable_neuron(target).incoming;
  const auto it = std::find_if(in.begin(), in.end(), [&](const Edge& e) { return e.source == source; });
  if (it == in.end())
    throw std::invalid_argument("no edge " + std::to_string(source.value) + " -> " +
                                std::to_string(target.value));
  in.erase(it);
}

std::vector<NeuronId> DagNetwork::consumers(NeuronId id) const {
  std::vector<NeuronId> out;
  for (const Neuron& nr : neurons_)
    for (const Edge& e : nr.incoming)
      if (e.source == id) {
        out.push_back(nr.id);
        break;
      }
  return out;
}

std::vector<double> DagNetwork::parameters() const {
  std::vector<double> p;
  p.reserve(neurons_.size() + edge_count());
  for (const Neuron& nr : neurons_) {
    p.push_back(nr.bias);
    for (const Edge& e : nr.incoming) p.push_back(e.weight);
  }
  return p;
}

void DagNetwork::set_parameters(std::span<const double> values) {
  if (values.size() != neurons_.size() + edge_count())
    throw std::invalid_argument("parameter vector has wrong length");
  std::size_t k = 0;
  for (Neuron& nr : neurons_) {
    nr.bias = values[k++];
    for (Edge& e : nr.incoming) e.weight = values[k++];
  }
}

void DagNetwork::validate() const {
  for (std::size_t i = 0; i < neurons_.size(); ++i) {
    const Neuron& nr = neurons_[i];
    if (nr.id.index() != input_count_ + i) throw std::logic_error("neuron ids are not dense");
    for (std::size_t a = 0; a < nr.incoming.size(); ++a) {
      if (nr.incoming[a].source >= nr.id) throw std::logic_error("edge points forward");
      for (std::size_t b = 0; b < a; ++b)
        if (nr.incoming[a].source == nr.incoming[b].source)
          throw std::logic_error("duplicate edge");
    }
  }
}

bool operator==(const Neuron& a, const Neuron& b) {
  if (a.id != b.id || a.bias != b.bias || a.activation != b.activation ||
      a.incoming.size() != b.incoming.size())
    return false;
  for (std::size_t i = 0; i < a.incoming.size(); ++i)
    if (a.incoming[i].source != b.incoming[i].source || a.incoming[i].weight != b.incoming[i].weight)
      return false;
  return true;
}

bool operator==(const DagNetwork& a, const DagNetwork& b) {
  return a.input_count_ == b.input_count_ && a.default_activation_ == b.default_activation_ &&
         a.neurons_ == b.neurons_;
}

ForwardResult forward(const DagNetwork& net, std::span<const double> input) {
  if (input.size() != net.input_count())
    throw std::invalid_argument("input has " + std::to_string(input.size()) + " values, network expects " +
                                std::to_string(net.input_count()));
  ForwardResult r;
  r.values.assign(input.begin(), input.end());
  r.values.resize(net.node_count());
  for (const Neuron& nr : net.neurons()) {
    double z = nr.bias;
    for (const Edge& e : nr.incoming) z += e.weight * r.values[e.source.index()];
    r.values[nr.id.index()] = activation_eval(nr.activation, z);
  }
  r.output = net.neuron_count() == 0 ? 0.0 : r.values[net.output().index()];
  return r;
}

std::size_t complexity(const DagNetwork& net) { return net.neuron_count() + net.edge_count(); }

DagNetwork remove_edge(const DagNetwork& net, NeuronId target, NeuronId source) {
  DagNetwork copy = net;
  copy.erase_edge(target, source);
  return copy;
}

DagNetwork erase_neurons(const DagNetwork& net, const std::vector<bool>& erase) {
  const std::size_t n = net.input_count();
  if (erase.size() != net.node_count()) throw std::invalid_argument("erase mask has wrong length");
  std::vector<std::size_t> remap(net.node_count());
  std::size_t next = 0;
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    if (i < n && erase[i]) throw std::invalid_argument("inputs cannot be erased");
    remap[i] = erase[i] ? SIZE_MAX : next++;
  }
  DagNetwork out(n, net.default_activation());
  for (const Neuron& nr : net.neurons()) {
    if (erase[nr.id.index()]) continue;
    std::vector<Edge> in;
    in.reserve(nr.incoming.size());
    for (const Edge& e : nr.incoming)
      if (!erase[e.source.index()]) in.push_back(Edge{NeuronId(remap[e.source.index()]), e.weight});
    out.append_neuron(nr.bias, nr.activation, std::move(in));
  }
  return out;
}

DagNetwork dead_neuron_sweep(const DagNetwork& net) {
  if (net.neuron_count() == 0) return net;
  const std::size_t total = net.node_count();
  // Walk backwards from the output; a neuron is live iff a live neuron reads it.
  std::vector<bool> live(total, false);
  live[total - 1] = true;
  const auto ns = net.neurons();
  for (std::size_t k = ns.size(); k-- > 0;) {
    if (!live[ns[k].id.index()]) continue;
    for (const Edge& e : ns[k].incoming) live[e.source.index()] = true;
  }
  std::vector<bool> erase(total, false);
  bool any = false;
  for (std::size_t i = net.input_count(); i < total; ++i) {
    erase[i] = !live[i];
    any = any || erase[i];
  }
  return any ? erase_neurons(net, erase) : net;
}

ArchSpec parse_arch_spec(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("architecture spec needs 'kind:sizes': " + text);
  const std::string kind = text.substr(0, colon);
  std::vector<std::size_t> sizes;
  // Sizes are separated by ',' or 'x' ("three-layer:4x8x8" survives CSV).
  std::string body = text.substr(colon + 1);
  std::replace(body.begin(), body.end(), 'x', ',');
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad size '" + item + "' in " + text);
    }
    if (pos != item.size() || v <= 0) throw std::invalid_argument("bad size '" + item + "' in " + text);
    sizes.push_back(static_cast<std::size_t>(v));
  }
  if (kind == "three-layer" && sizes.size() == 3) return ThreeLayerSpec{sizes[0], sizes[1], sizes[2]};
  if ((kind == "max-fc" || kind == "max-fully-connected") && sizes.size() == 2)
    return MaxFullyConnectedSpec{sizes[0], sizes[1]};
  throw std::invalid_argument("unknown architecture spec: " + text);
}

std::string to_string(const ArchSpec& spec) {
  if (const auto* t = std::get_if<ThreeLayerSpec>(&spec))
    return "three-layer:" + std::to_string(t->inputs) + "," + std::to_string(t->hidden1) + "," +
           std::to_string(t->hidden2);
  const auto& m = std::get<MaxFullyConnectedSpec>(spec);
  return "max-fc:" + std::to_string(m.inputs) + "," + std::to_string(m.neurons);
}

DagNetwork standard_net(const ArchSpec& spec, Activation hidden_activation, std::uint64_t seed) {
  std::optional<DagNetwork> built;
  if (const auto* t = std::get_if<ThreeLayerSpec>(&spec)) {
    if (t->inputs == 0 || t->hidden1 == 0 || t->hidden2 == 0)
      throw std::invalid_argument("three-layer sizes must be positive");
    DagNetwork net(t->inputs, hidden_activation);
    auto layer = [&](std::size_t first, std::size_t count, std::size_t width, Activation act) {
      for (std::size_t k = 0; k < width; ++k) {
        std::vector<Edge> in;
        for (std::size_t s = first; s < first + count; ++s) in.push_back(Edge{NeuronId(s), 0.0});
        net.append_neuron(0.0, act, std::move(in));
      }
    };
    layer(0, t->inputs, t->hidden1, hidden_activation);
    layer(t->inputs, t->hidden1, t->hidden2, hidden_activation);
    layer(t->inputs + t->hidden1, t->hidden2, 1, Activation::Identity);
    built = std::move(net);
  } else {
    const auto& m = std::get<MaxFullyConnectedSpec>(spec);
    if (m.inputs == 0 || m.neurons == 0) throw std::invalid_argument("max-fc sizes must be positive");
    DagNetwork net(m.inputs, hidden_activation);
    for (std::size_t k = 0; k < m.neurons; ++k) {
      std::vector<Edge> in;
      for (std::size_t s = 0; s < m.inputs + k; ++s) in.push_back(Edge{NeuronId(s), 0.0});
      net.append_neuron(0.0, k + 1 == m.neurons ? Activation::Identity : hidden_activation, std::move(in));
    }
    built = std::move(net);
  }
  initialize_weights(*built, seed);
  return std::move(*built);
}

void initialize_weights(DagNetwork& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> p;
  p.reserve(complexity(net));
  for (const Neuron& nr : net.neurons()) {
    p.push_back(0.0);
    const double bound = nr.incoming.empty() ? 0.0 : 1.0 / std::sqrt(static_cast<double>(nr.incoming.size()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t k = 0; k < nr.incoming.size(); ++k) p.push_back(dist(rng));
  }
  net.set_parameters(p);
}

}  // namespace dagnas
