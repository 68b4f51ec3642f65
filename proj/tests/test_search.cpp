#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "dagnas/search.hpp"
#include "dagnas/seed.hpp"
#include "oracles.hpp"
#include "random_nets.hpp"

using namespace dagnas;
using dagnas::testing::random_dag;
using dagnas::testing::random_data;

namespace {

TrainingMatrix linear_data(std::mt19937_64& rng, std::size_t rows, std::vector<double> coef, double bias,
                           double noise_sd) {
  TrainingMatrix m(coef.size());
  std::uniform_real_distribution<double> u(-1, 1);
  std::normal_distribution<double> noise(0.0, noise_sd);
  std::vector<double> x(coef.size());
  for (std::size_t r = 0; r < rows; ++r) {
    double y = bias;
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = u(rng);
      y += coef[j] * x[j];
    }
    m.add_row(y + (noise_sd > 0 ? noise(rng) : 0.0), x);
  }
  return m;
}

DagNetwork linear_net(std::vector<double> w, double bias) {
  DagNetwork net(w.size(), Activation::Identity);
  std::vector<Edge> in;
  for (std::size_t j = 0; j < w.size(); ++j) in.push_back(Edge{NeuronId(j), w[j]});
  net.append_neuron(bias, Activation::Identity, std::move(in));
  return net;
}

SearchConfig small_config(std::size_t unit) {
  SearchConfig cfg;
  cfg.train.budget_unit = unit;
  cfg.train.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("least_weight_edges") {
  DagNetwork net(4, Activation::Identity);
  net.append_neuron(9.0, Activation::Identity,
                    {{NeuronId(0), 0.5}, {NeuronId(1), -0.1}, {NeuronId(2), 0.3}, {NeuronId(3), 2.0}});
  const NeuronId out(4);
  CHECK(least_weight_edges(net, 3) ==
        std::vector<EdgeRef>{{out, NeuronId(1)}, {out, NeuronId(2)}, {out, NeuronId(0)}});
  CHECK(least_weight_edges(net, 10).size() == 4);

  DagNetwork tie(2, Activation::Tanh);
  const NeuronId a = tie.append_neuron(0, Activation::Tanh, {{NeuronId(1), -0.2}, {NeuronId(0), 0.2}});
  tie.append_neuron(0, Activation::Identity, {{a, 0.2}, {NeuronId(0), 0.7}});
  CHECK(least_weight_edges(tie, 3) ==
        std::vector<EdgeRef>{{a, NeuronId(0)}, {a, NeuronId(1)}, {NeuronId(3), a}});

  DagNetwork empty(1, Activation::Identity);
  empty.append_neuron(0, Activation::Identity, {});
  CHECK_THROWS_AS(least_weight_edges(empty, 3), std::invalid_argument);
}

TEST_CASE("affine fit special cases") {
  const AffineFit id = fit_affine(Activation::Identity, 0.3, -1.7, -2.0, 5.0, 257);
  CHECK(id.v0 == 0.3);
  CHECK(id.v1 == -1.7);
  const AffineFit flat = fit_affine(Activation::SquareRatio, 0.0, 1.0, 2.0, 2.0, 257);
  CHECK(flat.v0 == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(flat.v1 == 0.0);
  CHECK_THROWS_AS(fit_affine(Activation::Tanh, 0, 1, 0, 1, 256), std::invalid_argument);
  // An affine piece of an activation is reproduced.
  const AffineFit ramp = fit_affine(Activation::Ramp, 0.0, 1.0, -0.5, 0.9, 257);
  CHECK(ramp.v0 == doctest::Approx(0.0).scale(1));
  CHECK(ramp.v1 == doctest::Approx(0.5));
}

TEST_CASE("affine fit matches a dense least-squares oracle") {
  const oracle::Samples s = oracle::sample(Activation::SquareRatio, 0.0, 1.0, -1.0, 1.0, 10000);
  const auto [o0, o1] = oracle::least_squares_line(s);
  const AffineFit fit = fit_affine(Activation::SquareRatio, 0.0, 1.0, -1.0, 1.0, 257);
  CHECK(std::fabs(fit.v0 - o0) <= 1e-6);
  CHECK(std::fabs(fit.v1 - o1) <= 1e-6);
  CHECK(oracle::beats_grid(s, fit.v0, fit.v1, 1e-3));

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2, 2);
  for (Activation g : {Activation::Sigmoid, Activation::Tanh, Activation::Arctan, Activation::Softsign,
                       Activation::Relu}) {
    for (int trial = 0; trial < 5; ++trial) {
      const double w0 = u(rng), w1 = u(rng), a = u(rng), b = a + 0.1 + std::fabs(u(rng));
      const oracle::Samples d = oracle::sample(g, w0, w1, a, b, 10000);
      const auto [p0, p1] = oracle::least_squares_line(d);
      const AffineFit f = fit_affine(g, w0, w1, a, b, 257);
      INFO(to_string(g), " trial ", trial);
      CHECK(std::fabs(f.v0 - p0) <= 1e-6);
      CHECK(std::fabs(f.v1 - p1) <= 1e-6);
    }
  }
}

TEST_CASE("linearization folds a single-input neuron into its consumers") {
  // x0 -> a (f6) -> out, x0 -> out.
  DagNetwork net(1, Activation::SquareRatio);
  const NeuronId a = net.append_neuron(0.0, Activation::SquareRatio, {{NeuronId(0), 1.0}});
  net.append_neuron(0.5, Activation::Identity, {{a, 2.0}, {NeuronId(0), 0.25}});
  TrainingMatrix data(1);
  for (double x : {-1.0, -0.3, 0.4, 1.0}) {
    const double in[] = {x};
    data.add_row(0.0, in);
  }
  const DagNetwork lin = linearize_single_input_neuron(net, a, data, 257);
  const AffineFit fit = fit_affine(Activation::SquareRatio, 0.0, 1.0, -1.0, 1.0, 257);
  REQUIRE(lin.neuron_count() == 1);
  CHECK(lin.neuron(NeuronId(1)).bias == doctest::Approx(0.5 + 2.0 * fit.v0));
  CHECK(lin.weight(NeuronId(1), NeuronId(0)) == doctest::Approx(0.25 + 2.0 * fit.v1));
  CHECK(complexity(lin) == 2);

  CHECK_THROWS_AS(linearize_single_input_neuron(net, NeuronId(2), data, 257), std::invalid_argument);
  DagNetwork two(2, Activation::Tanh);
  const NeuronId b = two.append_neuron(0, Activation::Tanh, {{NeuronId(0), 1.0}, {NeuronId(1), 1.0}});
  two.append_neuron(0, Activation::Identity, {{b, 1.0}});
  TrainingMatrix d2(2);
  CHECK_THROWS_AS(linearize_single_input_neuron(two, b, d2, 257), std::invalid_argument);
}

TEST_CASE("linearizing an identity neuron keeps the network function") {
  std::mt19937_64 rng(8);
  DagNetwork net(2, Activation::Tanh);
  const NeuronId a = net.append_neuron(0.3, Activation::Identity, {{NeuronId(1), -0.8}});
  const NeuronId b = net.append_neuron(0.1, Activation::Tanh, {{a, 0.6}, {NeuronId(0), 0.2}});
  net.append_neuron(0.0, Activation::Identity, {{a, 1.5}, {b, 0.9}});
  const TrainingMatrix data = random_data(rng, 2, 30);
  const DagNetwork lin = linearize_single_input_neuron(net, a, data, 257);
  CHECK(lin.neuron_count() == 2);
  for (std::size_t r = 0; r < data.rows(); ++r)
    CHECK(forward(lin, data.x(r)).output == doctest::Approx(forward(net, data.x(r)).output).epsilon(1e-12));
}

TEST_CASE("candidate construction cascades") {
  // x0 -> a -> b -> out; cutting x0 -> a leaves a constant, which folds into b,
  // leaving b with no inputs, which folds into out.
  DagNetwork net(2, Activation::Tanh);
  const NeuronId a = net.append_neuron(0.4, Activation::Tanh, {{NeuronId(0), 1.0}});
  const NeuronId b = net.append_neuron(-0.2, Activation::Tanh, {{a, 0.7}});
  net.append_neuron(0.1, Activation::Identity, {{b, 1.3}, {NeuronId(1), 0.5}});
  std::mt19937_64 rng(2);
  const TrainingMatrix data = random_data(rng, 2, 20);

  const Candidate c = build_candidate(net, {a, NeuronId(0)}, data, 257);
  CHECK(c.linearized == 2);
  REQUIRE(c.network.neuron_count() == 1);
  const double expect = 0.1 + 1.3 * std::tanh(-0.2 + 0.7 * std::tanh(0.4));
  CHECK(c.network.neuron(NeuronId(2)).bias == doctest::Approx(expect).epsilon(1e-14));
  CHECK(c.network.weight(NeuronId(2), NeuronId(1)) == 0.5);

  // Cutting x1 -> out only drops the edge.
  const Candidate d = build_candidate(net, {NeuronId(4), NeuronId(1)}, data, 257);
  CHECK(d.linearized == 0);
  CHECK(complexity(d.network) == complexity(net) - 1);

  // A neuron whose only consumer edge is cut is swept.
  const Candidate e = build_candidate(net, {NeuronId(4), b}, data, 257);
  CHECK(e.swept == 2);
  CHECK(e.network.neuron_count() == 1);
}

TEST_CASE("candidates are simpler and leave no single-input or dead neurons") {
  std::mt19937_64 rng(41);
  int checked = 0;
  while (checked < 30) {
    const DagNetwork net = random_dag(rng, 3, 8, {Activation::SquareRatio, Activation::Tanh}, 0.5);
    bool eligible = true;
    for (const Neuron& n : net.neurons())
      eligible = eligible && (net.is_output(n.id) || (n.indegree() >= 2 && !net.consumers(n.id).empty()));
    if (!eligible) continue;
    ++checked;
    const TrainingMatrix data = random_data(rng, 3, 15);
    for (const EdgeRef& e : least_weight_edges(net, 3)) {
      const Candidate c = build_candidate(net, e, data, 65);
      c.network.validate();
      CHECK(complexity(c.network) < complexity(net));
      for (const Neuron& n : c.network.neurons())
        if (!c.network.is_output(n.id)) {
          CHECK(n.indegree() >= 2);
          CHECK_FALSE(c.network.consumers(n.id).empty());
        }
    }
  }
}

TEST_CASE("prune_step picks the candidate that can fit") {
  // y = 0.5 x1 + 0.7 x2; the irrelevant x0 edge has the largest weight, so
  // only the third-ranked candidate can reach zero error.
  std::mt19937_64 rng(5);
  TrainingMatrix data(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int r = 0; r < 40; ++r) {
    const double x[] = {u(rng), u(rng), u(rng)};
    data.add_row(0.5 * x[1] + 0.7 * x[2], x);
  }
  const DagNetwork net = linear_net({0.9, 0.5, 0.7}, 0.0);
  SearchConfig cfg = small_config(50);
  const PruneOutcome out = prune_step(net, data, cfg);
  CHECK(out.error <= 1e-20);
  CHECK_FALSE(out.network.weight(NeuronId(3), NeuronId(0)).has_value());
  CHECK(out.network.edge_count() == 2);
}

TEST_CASE("prune_step with one candidate is remove-then-train") {
  std::mt19937_64 rng(6);
  const DagNetwork net = random_dag(rng, 3, 6, {Activation::SquareRatio});
  const TrainingMatrix data = random_data(rng, 3, 20);
  SearchConfig cfg = small_config(40);
  cfg.candidates_k = 1;
  const PruneOutcome out = prune_step(net, data, cfg, 9);

  const Candidate c = build_candidate(net, least_weight_edges(net, 1)[0], data, cfg.quadrature_nodes);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.train.seed, {9, 0});
  const TrainResult first = train(c.network, data, tc, 1);
  tc.seed = derive_seed(cfg.train.seed, {9, 1});
  const TrainResult second = train(first.network, data, tc, 3);
  CHECK(out.network == second.network);
  CHECK(out.error == second.report.final_loss);
}

TEST_CASE("prune_step is reproducible and independent of the worker count") {
  std::mt19937_64 rng(7);
  const DagNetwork net = random_dag(rng, 3, 6, {Activation::SquareRatio, Activation::Tanh});
  const TrainingMatrix data = random_data(rng, 3, 20);
  SearchConfig cfg = small_config(60);
  const PruneOutcome a = prune_step(net, data, cfg, 3);
  const PruneOutcome b = prune_step(net, data, cfg, 3);
  cfg.jobs = 4;
  const PruneOutcome c = prune_step(net, data, cfg, 3);
  CHECK(a.network == b.network);
  CHECK(a.network == c.network);
  CHECK(a.error == c.error);
}

TEST_CASE("removal_loop stops at once when every removal is fatal") {
  std::mt19937_64 rng(9);
  const TrainingMatrix data = linear_data(rng, 60, {1.0, -1.0}, 0.0, 0.0);
  const DagNetwork net = linear_net({1.0, -1.0}, 0.0);
  SearchConfig cfg = small_config(30);
  Trajectory log;
  std::uint64_t phase = 0;
  const RemovalResult r = removal_loop(net, data, cfg, log, phase);
  CHECK(r.accepted == 0);
  CHECK(r.network == net);
  CHECK(r.error == loss(net, data));
  REQUIRE(log.points().size() == 1);
  CHECK(log.points()[0].event == TrajectoryEvent::PruneRejected);
  CHECK(phase == 1);
}

TEST_CASE("removal_loop prunes a sparse linear model within the guard") {
  std::mt19937_64 rng(10);
  const TrainingMatrix data = linear_data(rng, 2000, {2.0, 0.0, -1.0, 0.0}, 0.5, 0.1);
  TrainConfig tc;
  tc.learning_rate = 1e-2;
  tc.budget_unit = 3000;
  const DagNetwork start = train(linear_net({0.1, 0.2, 0.3, 0.4}, 0.0), data, tc, 1).network;

  SearchConfig cfg = small_config(300);
  cfg.train.learning_rate = 1e-2;
  Trajectory log;
  std::uint64_t phase = 0;
  const RemovalResult r = removal_loop(start, data, cfg, log, phase);
  const double reference = loss(start, data);
  CHECK(r.accepted == 2);
  CHECK(complexity(r.network) == 3);
  CHECK(r.network.weight(NeuronId(4), NeuronId(0)).has_value());
  CHECK(r.network.weight(NeuronId(4), NeuronId(2)).has_value());
  for (const TrajectoryPoint& p : log.points())
    if (p.event == TrajectoryEvent::PruneAccepted) CHECK(p.error <= 1.006 * reference);
  CHECK(log.points().back().event == TrajectoryEvent::PruneRejected);
}

TEST_CASE("removal_loop without a guard removes every edge") {
  std::mt19937_64 rng(12);
  const DagNetwork net = standard_net(MaxFullyConnectedSpec{2, 3}, Activation::SquareRatio, 4);
  const TrainingMatrix data = random_data(rng, 2, 20);
  SearchConfig cfg = small_config(10);
  cfg.epsilon = std::numeric_limits<double>::infinity();
  Trajectory log;
  std::uint64_t phase = 0;
  const RemovalResult r = removal_loop(net, data, cfg, log, phase);
  CHECK(r.network.edge_count() == 0);
  CHECK(r.network.neuron_count() == 1);
  for (const TrajectoryPoint& p : log.points()) CHECK(p.event != TrajectoryEvent::PruneRejected);
}

TEST_CASE("add_neuron") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const DagNetwork net = random_dag(rng, 3, 5, {Activation::SquareRatio, Activation::Tanh});
    const TrainingMatrix data = random_data(rng, 3, 100);
    const DagNetwork zero = add_neuron(net, 0.0, 1);
    const DagNetwork noisy = add_neuron(net, 1e-4, rng());
    zero.validate();
    CHECK(complexity(zero) == complexity(net) + 1 + 3 + net.neuron_count());
    CHECK(complexity(noisy) == complexity(zero));
    CHECK(zero.neuron(NeuronId(3)).bias == 0.0);
    for (const Edge& e : zero.neuron(NeuronId(3)).incoming) CHECK(e.weight == 0.0);
    for (const Edge& e : noisy.neuron(NeuronId(3)).incoming) {
      CHECK(std::fabs(e.weight) <= 1e-4);
      CHECK(e.weight != 0.0);
    }
    for (std::size_t r = 0; r < data.rows(); ++r) {
      const double before = forward(net, data.x(r)).output;
      CHECK(forward(zero, data.x(r)).output == before);
      CHECK(forward(noisy, data.x(r)).output == before);
    }
    CHECK(std::fabs(loss(zero, data) - loss(net, data)) <= 1e-12);
    CHECK(add_neuron(net, 1e-4, 5) == add_neuron(net, 1e-4, 5));
  }
}

TEST_CASE("grow without insertions is one training and one removal loop") {
  std::mt19937_64 rng(14);
  const TrainingMatrix data = random_data(rng, 2, 30);
  const DagNetwork net = standard_net(ThreeLayerSpec{2, 2, 2}, Activation::SquareRatio, 3);
  SearchConfig cfg = small_config(20);
  cfg.max_neurons_added = 0;
  const GrowResult g = grow(net, data, cfg);

  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.train.seed, {0});
  const TrainResult initial = train(net, data, tc, 5);
  Trajectory log;
  std::uint64_t phase = 1;
  const RemovalResult r = removal_loop(initial.network, data, cfg, log, phase);

  REQUIRE(g.trajectory.size() == log.points().size() + 1);
  CHECK(g.trajectory[0].event == TrajectoryEvent::Initial);
  CHECK(g.trajectory[0].error == initial.report.final_loss);
  for (std::size_t i = 0; i < log.points().size(); ++i) {
    CHECK(g.trajectory[i + 1].event == log.points()[i].event);
    CHECK(g.trajectory[i + 1].error == log.points()[i].error);
  }
  CHECK(g.snapshots.back() == r.network);
  for (const TrajectoryPoint& p : g.trajectory) CHECK(p.event != TrajectoryEvent::NeuronAdded);
}

TEST_CASE("grow trajectory invariants") {
  std::mt19937_64 rng(15);
  const TrainingMatrix data = random_data(rng, 2, 40);
  const DagNetwork net = standard_net(ThreeLayerSpec{2, 3, 2}, Activation::SquareRatio, 5);
  SearchConfig cfg = small_config(40);
  cfg.max_neurons_added = 3;
  cfg.epsilon = 0.05;
  const GrowResult g = grow(net, data, cfg);

  CHECK(guard_holds(g.trajectory, cfg.epsilon));
  CHECK(sawtooth_holds(g.trajectory, 2));
  std::size_t added = 0;
  for (const TrajectoryPoint& p : g.trajectory) added += p.event == TrajectoryEvent::NeuronAdded;
  CHECK(added == 3);

  // Pareto soundness and ordering.
  REQUIRE_FALSE(g.pareto.empty());
  for (std::size_t i = 1; i < g.pareto.size(); ++i) {
    CHECK(g.pareto[i - 1].complexity < g.pareto[i].complexity);
    CHECK(g.pareto[i - 1].error > g.pareto[i].error);
  }
  for (const ParetoPoint& p : g.pareto) {
    CHECK(complexity(g.snapshots[p.snapshot]) == p.complexity);
    CHECK(loss(g.snapshots[p.snapshot], data) == doctest::Approx(p.error).epsilon(1e-12));
    for (const TrajectoryPoint& t : g.trajectory) {
      if (!is_state_event(t.event)) continue;
      const bool dominates = t.complexity <= p.complexity && t.error <= p.error &&
                             (t.complexity < p.complexity || t.error < p.error);
      CHECK_FALSE(dominates);
    }
  }
  double lowest = std::numeric_limits<double>::infinity();
  for (const TrajectoryPoint& t : g.trajectory)
    if (is_state_event(t.event)) lowest = std::min(lowest, t.error);
  CHECK(loss(g.best_network, data) == doctest::Approx(lowest).epsilon(1e-12));

  cfg.jobs = 3;
  const GrowResult h = grow(net, data, cfg);
  CHECK(trajectory_csv(h.trajectory) == trajectory_csv(g.trajectory));
}

TEST_CASE("grow honours a target error and the complexity limit") {
  std::mt19937_64 rng(16);
  const TrainingMatrix data = random_data(rng, 2, 30);
  const DagNetwork net = standard_net(ThreeLayerSpec{2, 2, 2}, Activation::SquareRatio, 6);
  SearchConfig cfg = small_config(20);
  cfg.target_error = 1e9;
  const GrowResult g = grow(net, data, cfg);
  for (const TrajectoryPoint& p : g.trajectory) CHECK(p.event != TrajectoryEvent::NeuronAdded);
  // Every state meets the target, so the cheapest one is returned.
  std::size_t cheapest = SIZE_MAX;
  for (const TrajectoryPoint& p : g.trajectory)
    if (is_state_event(p.event)) cheapest = std::min(cheapest, p.complexity);
  CHECK(complexity(g.best_network) == cheapest);

  cfg.target_error.reset();
  cfg.complexity_limit = 1;
  const GrowResult h = grow(net, data, cfg);
  for (const TrajectoryPoint& p : h.trajectory) CHECK(p.event != TrajectoryEvent::NeuronAdded);
}

TEST_CASE("trajectory checks reject malformed logs") {
  using E = TrajectoryEvent;
  auto pt = [](std::size_t step, E e, std::size_t c, double err, std::size_t neurons) {
    return TrajectoryPoint{step, e, c, err, neurons};
  };
  const std::vector<TrajectoryPoint> good = {
      pt(0, E::Initial, 20, 1.0, 3), pt(1, E::PruneAccepted, 19, 1.004, 3), pt(2, E::PruneRejected, 18, 2.0, 3),
      pt(3, E::NeuronAdded, 19 + 1 + 2 + 3, 0.5, 4), pt(4, E::PruneAccepted, 24, 0.502, 4)};
  CHECK(guard_holds(good, 0.006));
  CHECK(sawtooth_holds(good, 2));
  auto bad_guard = good;
  bad_guard[1].error = 1.007;
  CHECK_FALSE(guard_holds(bad_guard, 0.006));
  auto bad_jump = good;
  bad_jump[3].complexity += 1;
  CHECK_FALSE(sawtooth_holds(bad_jump, 2));
  auto flat = good;
  flat[4].complexity = 25;
  CHECK_FALSE(sawtooth_holds(flat, 2));

  CHECK(trajectory_csv({good[0]}) == "step,event,complexity,error\n0,initial,20,1\n");
  CHECK(parse_trajectory_event("neuron_added") == E::NeuronAdded);
  CHECK_THROWS_AS(parse_trajectory_event("bogus"), std::invalid_argument);
}
