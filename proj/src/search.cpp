#include "dagnas/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dagnas/csv.hpp"
#include "dagnas/parallel.hpp"
#include "dagnas/seed.hpp"

namespace dagnas {

void SearchConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (candidates_k < 1) throw std::invalid_argument("candidates_k must be at least 1");
  if (budget.candidate < 1 || budget.winner < 1 || budget.after_add < 1)
    throw std::invalid_argument("budget ratios must be positive");
  if (!(init_noise_sigma >= 0.0) || !std::isfinite(init_noise_sigma))
    throw std::invalid_argument("init_noise_sigma must be finite and non-negative");
  if (quadrature_nodes < 3 || quadrature_nodes % 2 == 0)
    throw std::invalid_argument("quadrature_nodes must be odd and at least 3");
  if (target_error && !(*target_error >= 0.0)) throw std::invalid_argument("target_error must be non-negative");
  train.validate();
}

namespace {

constexpr const char* kEventNames[] = {"initial", "prune_accepted", "prune_rejected",
                                       "linearized", "neuron_added", "swept"};

}  // namespace

std::string to_string(TrajectoryEvent e) { return kEventNames[static_cast<int>(e)]; }

TrajectoryEvent parse_trajectory_event(const std::string& name) {
  for (int i = 0; i < 6; ++i)
    if (name == kEventNames[i]) return static_cast<TrajectoryEvent>(i);
  throw std::invalid_argument("unknown trajectory event '" + name + "'");
}

bool is_state_event(TrajectoryEvent e) {
  return e == TrajectoryEvent::Initial || e == TrajectoryEvent::PruneAccepted ||
         e == TrajectoryEvent::NeuronAdded;
}

void Trajectory::log(TrajectoryEvent event, const DagNetwork& net, double error) {
  log(event, complexity(net), net.neuron_count(), error);
}

void Trajectory::log(TrajectoryEvent event, std::size_t complexity, std::size_t neurons, double error) {
  points_.push_back(TrajectoryPoint{points_.size(), event, complexity, error, neurons});
  if (listener_) listener_(points_.back());
}

std::vector<EdgeRef> least_weight_edges(const DagNetwork& net, std::size_t k) {
  struct Ranked {
    double magnitude;
    EdgeRef edge;
  };
  std::vector<Ranked> all;
  for (const Neuron& nr : net.neurons())
    for (const Edge& e : nr.incoming) all.push_back({std::fabs(e.weight), {nr.id, e.source}});
  if (all.empty()) throw std::invalid_argument("network has no connections to remove");
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    [](const Ranked& a, const Ranked& b) {
                      if (a.magnitude != b.magnitude) return a.magnitude < b.magnitude;
                      if (a.edge.target != b.edge.target) return a.edge.target < b.edge.target;
                      return a.edge.source < b.edge.source;
                    });
  std::vector<EdgeRef> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(all[i].edge);
  return out;
}

AffineFit fit_affine(Activation g, double w0, double w1, double t0, double t1, std::size_t nodes) {
  if (nodes < 3 || nodes % 2 == 0) throw std::invalid_argument("quadrature nodes must be odd and at least 3");
  if (t1 < t0) std::swap(t0, t1);
  if (g == Activation::Identity) return {w0, w1};
  if (t0 == t1) return {activation_eval(g, w0 + w1 * t0), 0.0};

  // Moments are taken in u = t - c so the normal equations stay well
  // conditioned for intervals far from the origin.
  const double c = 0.5 * (t0 + t1);
  const double h = (t1 - t0) / static_cast<double>(nodes - 1);
  double m_u = 0.0, m_uu = 0.0, m_f = 0.0, m_uf = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double t = i + 1 == nodes ? t1 : t0 + h * static_cast<double>(i);
    const double u = t - c;
    const double f = activation_eval(g, w0 + w1 * t);
    const double wgt = (i == 0 || i + 1 == nodes) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    m_u += wgt * u;
    m_uu += wgt * u * u;
    m_f += wgt * f;
    m_uf += wgt * u * f;
  }
  const double norm = 3.0 * static_cast<double>(nodes - 1);
  m_u /= norm;
  m_uu /= norm;
  m_f /= norm;
  m_uf /= norm;
  const double var = m_uu - m_u * m_u;
  const double v1 = var > 0.0 ? (m_uf - m_u * m_f) / var : 0.0;
  // G(t) = m_f + v1 (u - m_u) = (m_f - v1 (m_u + c)) + v1 t
  return {m_f - v1 * (m_u + c), v1};
}

namespace {

/// Deletes neuron `id`, adding u*v1 to (source -> c) and u*v0 to c's bias for
/// every consumer c that read it with weight u. Without a source only the
/// constant part is folded.
DagNetwork fold_into_consumers(const DagNetwork& net, NeuronId id, std::optional<NeuronId> source,
                               AffineFit fit) {
  DagNetwork out = net;
  for (NeuronId c : net.consumers(id)) {
    const double u = *net.weight(c, id);
    out.erase_edge(c, id);
    if (source) out.accumulate_weight(c, *source, u * fit.v1);
    out.set_bias(c, out.neuron(c).bias + u * fit.v0);
  }
  std::vector<bool> erase(out.node_count(), false);
  erase[id.index()] = true;
  return erase_neurons(out, erase);
}

void check_foldable(const DagNetwork& net, NeuronId id) {
  if (net.is_input(id)) throw std::invalid_argument("inputs cannot be linearized");
  if (net.is_output(id)) throw std::invalid_argument("the output neuron cannot be linearized");
}

}  // namespace

DagNetwork linearize_single_input_neuron(const DagNetwork& net, NeuronId id, const TrainingMatrix& data,
                                         std::size_t quadrature_nodes) {
  check_foldable(net, id);
  const Neuron& nr = net.neuron(id);
  if (nr.indegree() != 1)
    throw std::invalid_argument("neuron " + std::to_string(id.value) + " has indegree " +
                                std::to_string(nr.indegree()) + ", expected 1");
  const NeuronId src = nr.incoming[0].source;
  const std::vector<double> values = node_values(net, data, src);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const AffineFit fit = fit_affine(nr.activation, nr.bias, nr.incoming[0].weight, *lo, *hi, quadrature_nodes);
  return fold_into_consumers(net, id, src, fit);
}

Candidate build_candidate(const DagNetwork& net, EdgeRef edge, const TrainingMatrix& data,
                          std::size_t quadrature_nodes) {
  Candidate cand{remove_edge(net, edge.target, edge.source), edge, 0, 0};
  std::vector<NeuronId> work{edge.target};
  while (!work.empty()) {
    const NeuronId id = work.front();
    work.erase(work.begin());
    DagNetwork& cur = cand.network;
    if (cur.is_output(id)) continue;
    const std::size_t deg = cur.neuron(id).indegree();
    if (deg > 1) continue;

    const std::vector<NeuronId> consumers = cur.consumers(id);
    std::vector<std::size_t> before;
    for (NeuronId c : consumers) before.push_back(cur.neuron(c).indegree());

    if (deg == 1) {
      cand.network = linearize_single_input_neuron(cur, id, data, quadrature_nodes);
    } else {
      const Neuron& nr = cur.neuron(id);
      cand.network = fold_into_consumers(cur, id, std::nullopt, {activation_eval(nr.activation, nr.bias), 0.0});
    }
    ++cand.linearized;

    for (NeuronId& w : work)
      if (w > id) w = NeuronId(w.index() - 1);
    for (std::size_t i = 0; i < consumers.size(); ++i) {
      const NeuronId moved(consumers[i].index() - 1);
      const std::size_t now = cand.network.neuron(moved).indegree();
      if (now < before[i] && now <= 1 && std::find(work.begin(), work.end(), moved) == work.end())
        work.push_back(moved);
    }
  }
  const std::size_t count = cand.network.neuron_count();
  cand.network = dead_neuron_sweep(cand.network);
  cand.swept = count - cand.network.neuron_count();
  return cand;
}

PruneOutcome prune_step(const DagNetwork& net, const TrainingMatrix& data, const SearchConfig& cfg,
                        std::uint64_t phase) {
  const std::vector<EdgeRef> edges = least_weight_edges(net, cfg.candidates_k);
  std::vector<std::optional<Candidate>> cands(edges.size());
  std::vector<std::optional<TrainResult>> trained(edges.size());
  parallel_for(cfg.jobs, edges.size(), [&](std::size_t i) {
    cands[i] = build_candidate(net, edges[i], data, cfg.quadrature_nodes);
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.train.seed, {phase, i});
    trained[i] = train(cands[i]->network, data, tc, cfg.budget.candidate);
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < trained.size(); ++i) {
    const double e = trained[i]->report.final_loss;
    const double b = trained[best]->report.final_loss;
    if (e < b || (std::isnan(b) && !std::isnan(e))) best = i;
  }
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.train.seed, {phase, edges.size()});
  TrainResult winner = train(trained[best]->network, data, tc, cfg.budget.winner);
  return {std::move(winner.network), winner.report.final_loss, cands[best]->linearized, cands[best]->swept};
}

RemovalResult removal_loop(const DagNetwork& net, const TrainingMatrix& data, const SearchConfig& cfg,
                           Trajectory& log, std::uint64_t& phase, const AcceptCallback& on_accept) {
  const double reference = loss(net, data);
  const double bound = (1.0 + cfg.epsilon) * reference;
  RemovalResult result{net, reference, 0};
  while (result.network.edge_count() > 0) {
    PruneOutcome step = prune_step(result.network, data, cfg, phase++);
    if (!(step.error <= bound)) {
      log.log(TrajectoryEvent::PruneRejected, step.network, step.error);
      break;
    }
    log.log(TrajectoryEvent::PruneAccepted, step.network, step.error);
    if (step.linearized > 0) log.log(TrajectoryEvent::Linearized, step.network, step.error);
    if (step.swept > 0) log.log(TrajectoryEvent::Swept, step.network, step.error);
    if (on_accept) on_accept(step.network, step.error);
    result.network = std::move(step.network);
    result.error = step.error;
    ++result.accepted;
  }
  return result;
}

DagNetwork add_neuron(const DagNetwork& net, double sigma, std::uint64_t seed) {
  const std::size_t n = net.input_count();
  DagNetwork out(n, net.default_activation());
  std::vector<Edge> in;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-sigma, sigma);
  for (std::size_t j = 0; j < n; ++j) in.push_back(Edge{NeuronId(j), sigma > 0.0 ? noise(rng) : 0.0});
  const NeuronId head = out.append_neuron(0.0, net.default_activation(), std::move(in));
  for (const Neuron& nr : net.neurons()) {
    std::vector<Edge> edges;
    edges.reserve(nr.incoming.size() + 1);
    for (const Edge& e : nr.incoming)
      edges.push_back(Edge{net.is_input(e.source) ? e.source : NeuronId(e.source.index() + 1), e.weight});
    edges.push_back(Edge{head, 0.0});
    out.append_neuron(nr.bias, nr.activation, std::move(edges));
  }
  return out;
}

namespace {

std::vector<ParetoPoint> non_dominated(const std::vector<ParetoPoint>& states) {
  std::vector<ParetoPoint> sorted = states;
  std::stable_sort(sorted.begin(), sorted.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.complexity != b.complexity) return a.complexity < b.complexity;
    return a.error < b.error;
  });
  std::vector<ParetoPoint> front;
  for (const ParetoPoint& p : sorted)
    if (front.empty() || p.error < front.back().error) front.push_back(p);
  return front;
}

}  // namespace

GrowResult grow(const DagNetwork& net, const TrainingMatrix& data, const SearchConfig& cfg) {
  cfg.validate();
  std::uint64_t phase = 0;
  Trajectory log(cfg.progress);
  std::vector<DagNetwork> snapshots;
  std::vector<ParetoPoint> states;
  auto keep = [&](const DagNetwork& n, double error) {
    states.push_back({complexity(n), error, snapshots.size()});
    snapshots.push_back(n);
  };

  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.train.seed, {phase++});
  TrainResult initial = train(net, data, tc, cfg.budget.after_add);
  DagNetwork current = std::move(initial.network);
  log.log(TrajectoryEvent::Initial, current, initial.report.final_loss);
  keep(current, initial.report.final_loss);

  std::size_t added = 0;
  while (true) {
    RemovalResult removed = removal_loop(current, data, cfg, log, phase, keep);
    current = std::move(removed.network);
    if (added >= cfg.max_neurons_added) break;
    if (cfg.target_error && removed.error <= *cfg.target_error) break;
    if (complexity(current) >= cfg.complexity_limit) break;

    const DagNetwork grown =
        add_neuron(current, cfg.init_noise_sigma, derive_seed(cfg.train.seed, {phase, 0xadd}));
    tc.seed = derive_seed(cfg.train.seed, {phase++});
    TrainResult retrained = train(grown, data, tc, cfg.budget.after_add);
    current = std::move(retrained.network);
    log.log(TrajectoryEvent::NeuronAdded, current, retrained.report.final_loss);
    keep(current, retrained.report.final_loss);
    ++added;
  }

  // Best: cheapest state meeting the target if one is set and met, else lowest error.
  std::size_t best = 0;
  bool target_met = false;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const ParetoPoint& s = states[i];
    if (cfg.target_error && s.error <= *cfg.target_error) {
      const ParetoPoint& b = states[best];
      if (!target_met || s.complexity < b.complexity || (s.complexity == b.complexity && s.error < b.error))
        best = i;
      target_met = true;
    } else if (!target_met) {
      const ParetoPoint& b = states[best];
      if (s.error < b.error || (s.error == b.error && s.complexity < b.complexity)) best = i;
    }
  }
  GrowResult result{snapshots[best], log.points(), non_dominated(states), std::move(snapshots)};
  return result;
}

bool guard_holds(const std::vector<TrajectoryPoint>& trajectory, double epsilon) {
  double reference = std::numeric_limits<double>::quiet_NaN();
  for (const TrajectoryPoint& p : trajectory) {
    if (p.event == TrajectoryEvent::Initial || p.event == TrajectoryEvent::NeuronAdded) reference = p.error;
    else if (p.event == TrajectoryEvent::PruneAccepted && !(p.error <= (1.0 + epsilon) * reference))
      return false;
  }
  return true;
}

bool sawtooth_holds(const std::vector<TrajectoryPoint>& trajectory, std::size_t n_inputs) {
  const TrajectoryPoint* prev_kept = nullptr;
  const TrajectoryPoint* prev = nullptr;
  for (const TrajectoryPoint& p : trajectory) {
    if (p.event == TrajectoryEvent::NeuronAdded && prev && prev->event == TrajectoryEvent::NeuronAdded)
      return false;
    if (is_state_event(p.event)) {
      if (p.event == TrajectoryEvent::Initial) {
        if (prev_kept) return false;
      } else if (!prev_kept) {
        return false;
      } else if (p.event == TrajectoryEvent::PruneAccepted) {
        if (!(p.complexity < prev_kept->complexity)) return false;
      } else if (p.complexity != prev_kept->complexity + 1 + n_inputs + prev_kept->neurons) {
        return false;
      }
      prev_kept = &p;
    }
    prev = &p;
  }
  return true;
}

std::string trajectory_csv(const std::vector<TrajectoryPoint>& trajectory) {
  std::ostringstream out;
  out << "step,event,complexity,error\n";
  for (const TrajectoryPoint& p : trajectory)
    out << p.step << ',' << to_string(p.event) << ',' << p.complexity << ',' << csv::format_double(p.error)
        << '\n';
  return out.str();
}

std::string frontier_csv(const std::vector<ParetoPoint>& pareto, const std::vector<std::string>& snapshot_names) {
  std::ostringstream out;
  out << "complexity,error,snapshot\n";
  for (const ParetoPoint& p : pareto)
    out << p.complexity << ',' << csv::format_double(p.error) << ',' << snapshot_names.at(p.snapshot) << '\n';
  return out.str();
}

}  // namespace dagnas
