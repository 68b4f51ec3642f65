#include "dagnas/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "dagnas/baselines.hpp"
#include "dagnas/csv.hpp"
#include "dagnas/errors.hpp"
#include "dagnas/image.hpp"
#include "dagnas/network_io.hpp"
#include "dagnas/search.hpp"
#include "dagnas/seed.hpp"

namespace dagnas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::size_t> parse_int_set(const std::string& text) {
  std::vector<std::size_t> out;
  for (const std::string& item : csv::split_line(text)) {
    if (item.empty()) throw std::invalid_argument("empty item in '" + text + "'");
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      const long long v = csv::parse_int(item);
      if (v < 0) throw std::invalid_argument("negative value in '" + text + "'");
      out.push_back(static_cast<std::size_t>(v));
      continue;
    }
    std::string hi_text = item.substr(dots + 2);
    long long step = 1;
    if (const auto colon = hi_text.find(':'); colon != std::string::npos) {
      step = csv::parse_int(hi_text.substr(colon + 1));
      hi_text = hi_text.substr(0, colon);
    }
    const long long lo = csv::parse_int(item.substr(0, dots));
    const long long hi = csv::parse_int(hi_text);
    if (lo < 0 || hi < lo || step < 1) throw std::invalid_argument("bad range '" + item + "'");
    for (long long v = lo; v <= hi; v += step) out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw std::invalid_argument("empty set '" + text + "'");
  return out;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

/// Everything needed to rerun a command. `args` holds the fully resolved
/// flags, without --out.
struct Manifest {
  std::string command;
  std::vector<std::string> args;
  json config = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started = utc_now();

  void write(const fs::path& path) const {
    json doc;
    doc["command"] = command;
    doc["args"] = args;
    doc["config"] = config;
    doc["inputs"] = inputs;
    doc["outputs"] = outputs;
    doc["version"] = DAGNAS_VERSION;
    doc["started"] = started;
    doc["finished"] = utc_now();
    write_file_atomically(path, doc.dump(2) + "\n");
  }
};

fs::path sibling(const fs::path& file, const std::string& suffix) {
  fs::path p = file;
  p.replace_extension();
  p += suffix;
  return p;
}

template <class F>
auto load_or_io_error(const fs::path& path, F&& loader) {
  try {
    return loader(path);
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void ensure_parent(const fs::path& file) {
  std::error_code ec;
  if (file.has_parent_path()) fs::create_directories(file.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + file.parent_path().string());
}

std::size_t parse_batch(const std::string& s) {
  if (s == "auto") return TrainConfig::kAutoBatch;
  if (s == "full") return TrainConfig::kFullBatch;
  const long long v = csv::parse_int(s);
  if (v < 1) throw std::invalid_argument("batch size must be positive, 'auto' or 'full'");
  return static_cast<std::size_t>(v);
}

/// Training flags shared by grow and baseline.
struct TrainFlags {
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  std::string batch = "auto";
  std::size_t delta_steps = 2000;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string activation = "f6";

  void add_to(CLI::App& app) {
    app.add_option("--optimizer", optimizer, "adam or sgd_momentum")->capture_default_str();
    app.add_option("--learning-rate", learning_rate, "Optimizer step size")->capture_default_str();
    app.add_option("--batch-size", batch, "Rows per step: auto, full or a number")->capture_default_str();
    app.add_option("--delta-steps,--budget-unit", delta_steps, "Optimizer steps in one training budget unit")
        ->capture_default_str();
    app.add_option("--seed", seed, "Master seed")->envname("DAGNAS_SEED")->capture_default_str();
    app.add_option("--jobs", jobs, "Worker threads (results do not depend on it)")->capture_default_str();
    app.add_option("--activation", activation, "Hidden activation f0..f9")->capture_default_str();
  }

  TrainConfig config() const {
    TrainConfig tc;
    tc.optimizer = parse_optimizer(optimizer);
    tc.learning_rate = learning_rate;
    tc.batch_size = parse_batch(batch);
    tc.budget_unit = delta_steps;
    tc.seed = seed;
    tc.validate();
    return tc;
  }

  // jobs is left out: outputs do not depend on it.
  void append_args(std::vector<std::string>& a) const {
    a.insert(a.end(), {"--optimizer", optimizer, "--learning-rate", csv::format_double(learning_rate),
                       "--batch-size", batch, "--delta-steps", std::to_string(delta_steps), "--seed",
                       std::to_string(seed), "--activation", activation});
  }

  void append_config(json& c) const {
    c["optimizer"] = optimizer;
    c["learning_rate"] = learning_rate;
    c["batch_size"] = batch;
    c["budget_unit"] = delta_steps;
    c["seed"] = seed;
    c["activation"] = activation;
  }
};

// ---------------------------------------------------------------- make-dataset

struct MakeDatasetOptions {
  std::string image;
  std::size_t points = 0;
  bool xy = false;
  std::string out;
};

int make_dataset(const MakeDatasetOptions& o, std::ostream& out) {
  if ((o.points == 0) == !o.xy) throw std::invalid_argument("give exactly one of --brightness P or --xy");
  Manifest m;
  m.command = "make-dataset";
  m.args = {"--image", o.image};
  if (o.xy) m.args.push_back("--xy");
  else m.args.insert(m.args.end(), {"--brightness", std::to_string(o.points)});
  m.config = {{"mode", o.xy ? "xy" : "brightness"}, {"points", o.points}};
  m.inputs = {o.image};

  const GrayImage img = load_or_io_error(o.image, [](const fs::path& p) { return load_pgm(p); });
  const TrainingMatrix data = o.xy ? xy_dataset(img) : brightness_dataset(img, o.points);
  ensure_parent(o.out);
  write_training_csv(fs::path(o.out), data);
  m.outputs = {o.out};
  m.write(sibling(o.out, ".manifest.json"));
  out << "rows=" << data.rows() << " columns=" << data.n_inputs() + 1 << "\n";
  return kOk;
}

// ---------------------------------------------------------------- grow

struct GrowOptions {
  std::string data;
  std::string init;
  TrainFlags train;
  double epsilon = 0.006;
  std::size_t candidates_k = 3;
  std::size_t budget_candidate = 1;
  std::size_t budget_winner = 3;
  std::size_t budget_after_add = 5;
  std::size_t complexity_limit = 600;
  std::size_t max_neurons_added = 1000;
  std::optional<double> target_error;
  double init_noise_sigma = 1e-4;
  std::size_t quadrature_nodes = 257;
  bool quiet = false;
  std::string out;

  std::vector<std::string> args() const {
    std::vector<std::string> a = {"--data", data, "--init", init};
    train.append_args(a);
    a.insert(a.end(), {"--epsilon", csv::format_double(epsilon), "--candidates-k", std::to_string(candidates_k),
                       "--budget-candidate", std::to_string(budget_candidate), "--budget-winner",
                       std::to_string(budget_winner), "--budget-after-add", std::to_string(budget_after_add),
                       "--limit-complexity", std::to_string(complexity_limit), "--max-neurons-added",
                       std::to_string(max_neurons_added), "--init-noise-sigma", csv::format_double(init_noise_sigma),
                       "--quadrature-nodes", std::to_string(quadrature_nodes)});
    if (target_error) a.insert(a.end(), {"--target-error", csv::format_double(*target_error)});
    return a;
  }

  json config() const {
    json c;
    train.append_config(c);
    c["init"] = init;
    c["epsilon"] = epsilon;
    c["candidates_k"] = candidates_k;
    c["budget_ratios"] = {{"candidate", budget_candidate}, {"winner", budget_winner}, {"after_add", budget_after_add}};
    c["complexity_limit"] = complexity_limit;
    c["max_neurons_added"] = max_neurons_added;
    c["target_error"] = target_error ? json(*target_error) : json(nullptr);
    c["init_noise_sigma"] = init_noise_sigma;
    c["quadrature_nodes"] = quadrature_nodes;
    return c;
  }
};

std::size_t arch_inputs(const ArchSpec& spec) {
  return std::visit([](const auto& s) { return s.inputs; }, spec);
}

int grow_command(const GrowOptions& o, std::ostream& out, std::ostream& err) {
  SearchConfig cfg;
  cfg.epsilon = o.epsilon;
  cfg.candidates_k = o.candidates_k;
  cfg.train = o.train.config();
  cfg.budget = {o.budget_candidate, o.budget_winner, o.budget_after_add};
  cfg.complexity_limit = o.complexity_limit;
  cfg.max_neurons_added = o.max_neurons_added;
  cfg.target_error = o.target_error;
  cfg.init_noise_sigma = o.init_noise_sigma;
  cfg.quadrature_nodes = o.quadrature_nodes;
  cfg.jobs = std::max<std::size_t>(1, o.train.jobs);
  cfg.validate();
  const ArchSpec spec = parse_arch_spec(o.init);
  const Activation act = parse_activation(o.train.activation);

  Manifest m;
  m.command = "grow";
  m.args = o.args();
  m.config = o.config();
  m.inputs = {o.data};

  const TrainingMatrix data =
      load_or_io_error(o.data, [](const fs::path& p) { return read_training_csv(p); });
  if (arch_inputs(spec) != data.n_inputs())
    throw std::invalid_argument("--init has " + std::to_string(arch_inputs(spec)) + " inputs but the dataset has " +
                                std::to_string(data.n_inputs()));
  const DagNetwork initial = standard_net(spec, act, derive_seed(cfg.train.seed, {0x1417}));
  if (!o.quiet)
    cfg.progress = [&err](const TrajectoryPoint& p) {
      err << std::setw(5) << p.step << ' ' << std::left << std::setw(15) << to_string(p.event) << std::right
          << " complexity=" << p.complexity << " error=" << csv::format_double(p.error) << '\n';
    };

  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir / "networks", ec);
  if (ec) throw IoError("cannot create " + (dir / "networks").string());

  const GrowResult result = grow(initial, data, cfg);
  if (!std::isfinite(result.trajectory.front().error))
    throw NumericError("initial training produced a non-finite error");

  std::vector<std::string> names(result.snapshots.size());
  for (const ParetoPoint& p : result.pareto) {
    std::ostringstream name;
    name << "networks/state_" << std::setw(4) << std::setfill('0') << p.snapshot << ".json";
    names[p.snapshot] = name.str();
    save_network(result.snapshots[p.snapshot], dir / names[p.snapshot]);
    m.outputs.push_back((dir / names[p.snapshot]).string());
  }
  write_file_atomically(dir / "trajectory.csv", trajectory_csv(result.trajectory));
  write_file_atomically(dir / "frontier.csv", frontier_csv(result.pareto, names));
  save_network(result.best_network, dir / "best.json");
  m.outputs.insert(m.outputs.end(),
                   {(dir / "trajectory.csv").string(), (dir / "frontier.csv").string(), (dir / "best.json").string()});
  m.write(dir / "manifest.json");

  out << "initial complexity=" << result.trajectory.front().complexity
      << " error=" << csv::format_double(result.trajectory.front().error) << "\n"
      << "best complexity=" << complexity(result.best_network)
      << " frontier points=" << result.pareto.size() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- baseline

struct BaselineOptions {
  std::string data;
  std::string poly;
  std::string sweep;
  std::size_t repeats = 10;
  std::size_t budget = 5;
  TrainFlags train;
  std::string out;
};

std::vector<ArchSpec> expand_sweep(const std::string& text, std::size_t inputs) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("sweep needs 'kind:sizes', got " + text);
  const std::string kind = text.substr(0, colon);
  const std::vector<std::size_t> sizes = parse_int_set(text.substr(colon + 1));
  std::vector<ArchSpec> specs;
  if (kind == "three-layer") {
    for (std::size_t a : sizes)
      for (std::size_t b : sizes) specs.push_back(ThreeLayerSpec{inputs, a, b});
  } else if (kind == "max-fc") {
    for (std::size_t m : sizes) specs.push_back(MaxFullyConnectedSpec{inputs, m});
  } else {
    throw std::invalid_argument("unknown sweep kind '" + kind + "'");
  }
  return specs;
}

int baseline_command(const BaselineOptions& o, std::ostream& out) {
  if (o.poly.empty() == o.sweep.empty()) throw std::invalid_argument("give exactly one of --poly or --sweep");
  Manifest m;
  m.command = "baseline";
  m.inputs = {o.data};
  m.args = {"--data", o.data};
  const TrainingMatrix data =
      load_or_io_error(o.data, [](const fs::path& p) { return read_training_csv(p); });
  ensure_parent(o.out);

  if (!o.poly.empty()) {
    const std::vector<std::size_t> degrees = parse_int_set(o.poly);
    m.args.insert(m.args.end(), {"--poly", o.poly});
    m.config = {{"poly_degrees", degrees}};
    std::vector<PolyFit> fits;
    for (std::size_t d : degrees) {
      fits.push_back(poly_fit(data, d));
      if (!std::isfinite(fits.back().error)) throw NumericError("polynomial fit produced a non-finite error");
      out << "degree=" << d << " complexity=" << fits.back().model.complexity()
          << " error=" << csv::format_double(fits.back().error)
          << (fits.back().rank_deficient ? " (rank deficient)" : "") << "\n";
    }
    write_file_atomically(o.out, poly_csv(fits));
    m.outputs = {o.out};
  } else {
    const std::vector<ArchSpec> specs = expand_sweep(o.sweep, data.n_inputs());
    SweepOptions so;
    so.repeats = o.repeats;
    so.train = o.train.config();
    so.budget_multiplier = o.budget;
    so.hidden_activation = parse_activation(o.train.activation);
    so.jobs = std::max<std::size_t>(1, o.train.jobs);
    if (so.budget_multiplier < 1) throw std::invalid_argument("--budget must be at least 1");
    m.args.insert(m.args.end(), {"--sweep", o.sweep, "--repeats", std::to_string(o.repeats), "--budget",
                                 std::to_string(o.budget)});
    o.train.append_args(m.args);
    m.config = {{"sweep", o.sweep}, {"repeats", o.repeats}, {"budget_multiplier", o.budget}};
    o.train.append_config(m.config);

    const std::vector<SweepRow> rows = sweep_standard(data, specs, so);
    std::vector<EnvelopePoint> pts;
    for (const SweepRow& r : rows) {
      pts.push_back({r.complexity, r.error});
      out << to_string(r.spec) << " complexity=" << r.complexity << " error=" << csv::format_double(r.error) << "\n";
    }
    write_file_atomically(o.out, sweep_csv(rows));
    const fs::path env = sibling(o.out, ".envelope.csv");
    write_file_atomically(env, envelope_csv(envelope(pts)));
    m.outputs = {o.out, env.string()};
  }
  m.write(sibling(o.out, ".manifest.json"));
  return kOk;
}

// ---------------------------------------------------------------- compare

struct CompareOptions {
  std::string standard;
  std::string optimized;
  std::string out;
};

int compare_command(const CompareOptions& o, std::ostream& out) {
  auto load_points = [](const fs::path& p) { return read_points_csv(read_file(p)); };
  const auto standard = load_or_io_error(o.standard, load_points);
  const auto optimized = load_or_io_error(o.optimized, load_points);
  if (standard.empty()) throw std::invalid_argument("standard results are empty");
  if (optimized.empty()) throw std::invalid_argument("optimized frontier is empty");
  const std::vector<ComparisonRow> rows = compare_to_envelope(envelope(standard), optimized);
  ensure_parent(o.out);
  write_file_atomically(o.out, comparison_csv(rows));
  Manifest m;
  m.command = "compare";
  m.args = {"--standard", o.standard, "--optimized", o.optimized};
  m.inputs = {o.standard, o.optimized};
  m.outputs = {o.out};
  m.write(sibling(o.out, ".manifest.json"));
  std::size_t below = 0, unreachable = 0;
  for (const ComparisonRow& r : rows) {
    if (std::isinf(r.standard_best_complexity)) ++unreachable;
    else if (static_cast<double>(r.optimized_complexity) < r.standard_best_complexity) ++below;
  }
  out << rows.size() << " rows, " << below << " below the standard envelope, " << unreachable
      << " beyond its lowest error\n";
  return kOk;
}

// ---------------------------------------------------------------- export-dot

struct ExportDotOptions {
  std::string network;
  bool hide_inputs = false;
  int precision = 3;
  std::string out;
};

int export_dot_command(const ExportDotOptions& o, std::ostream& out) {
  const DagNetwork net = load_or_io_error(o.network, [](const fs::path& p) { return load_network(p); });
  const std::string dot = network_to_dot(net, DotOptions{o.hide_inputs, o.precision});
  if (o.out.empty()) {
    out << dot;
  } else {
    ensure_parent(o.out);
    write_file_atomically(o.out, dot);
  }
  return kOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------- replay

int replay_command(const std::string& manifest_path, const std::string& out_override, std::ostream& out,
                   std::ostream& err) {
  json doc;
  try {
    doc = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw IoError(manifest_path + ": " + e.what());
  }
  std::vector<std::string> args = {"dagnas", doc.at("command").get<std::string>()};
  for (const auto& a : doc.at("args")) args.push_back(a.get<std::string>());
  std::string target = out_override;
  if (target.empty()) {
    const auto outputs = doc.at("outputs");
    if (outputs.empty()) throw std::invalid_argument("manifest lists no outputs; pass --out");
    target = args[1] == "grow" ? fs::path(manifest_path).parent_path().string() : outputs.front().get<std::string>();
  }
  args.insert(args.end(), {"--out", target});
  return dispatch(args, out, err);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Growing-architecture search for DAG feedforward networks", "dagnas"};
  app.set_config("--config", "", "TOML/INI file with option values; flags take precedence");
  app.require_subcommand(1);

  MakeDatasetOptions md;
  auto* make = app.add_subcommand("make-dataset", "Build a training matrix CSV from a PGM image");
  make->add_option("--image", md.image, "PGM image (P2 or P5, maxval 255)")->required();
  auto* bright = make->add_option("--brightness", md.points, "Predict from this many previous points (2..18)");
  auto* xy = make->add_flag("--xy", md.xy, "One row per pixel: (x, y) -> brightness");
  bright->excludes(xy);
  make->add_option("--out", md.out, "Output CSV")->required();

  GrowOptions go;
  auto* growc = app.add_subcommand("grow", "Run the pruning/growing architecture search");
  growc->add_option("--data", go.data, "Training matrix CSV")->required();
  growc->add_option("--init", go.init, "Initial architecture, e.g. three-layer:4,8,8 or max-fc:4,10")->required();
  go.train.add_to(*growc);
  growc->add_option("--epsilon", go.epsilon, "Allowed relative error growth while pruning")->capture_default_str();
  growc->add_option("--candidates-k", go.candidates_k, "Edges tried per pruning step")->capture_default_str();
  growc->add_option("--budget-candidate", go.budget_candidate, "Budget units per pruning candidate")->capture_default_str();
  growc->add_option("--budget-winner", go.budget_winner, "Budget units for the chosen candidate")->capture_default_str();
  growc->add_option("--budget-after-add", go.budget_after_add, "Budget units after inserting a neuron")->capture_default_str();
  growc->add_option("--limit-complexity,--complexity-limit", go.complexity_limit, "Stop once a pruned network is this large")
      ->capture_default_str();
  growc->add_option("--max-neurons-added", go.max_neurons_added, "Stop after this many insertions")->capture_default_str();
  growc->add_option("--target-error", go.target_error, "Stop once a pruned network reaches this error");
  growc->add_option("--init-noise-sigma", go.init_noise_sigma, "Noise on an inserted neuron's input weights")
      ->capture_default_str();
  growc->add_option("--quadrature-nodes", go.quadrature_nodes, "Simpson nodes for linearization (odd)")->capture_default_str();
  growc->add_flag("--quiet", go.quiet, "Do not print progress");
  growc->add_option("--out", go.out, "Output directory")->required();

  BaselineOptions bo;
  auto* base = app.add_subcommand("baseline", "Polynomial regression or standard-architecture sweep");
  base->add_option("--data", bo.data, "Training matrix CSV")->required();
  auto* poly = base->add_option("--poly", bo.poly, "Polynomial degrees, e.g. 1..3");
  auto* sweep = base->add_option("--sweep", bo.sweep, "three-layer:<sizes> or max-fc:<sizes>, sizes like 6..20:2");
  poly->excludes(sweep);
  base->add_option("--repeats", bo.repeats, "Initializations per architecture; best is kept")->capture_default_str();
  base->add_option("--budget", bo.budget, "Training budget units per run")->capture_default_str();
  bo.train.add_to(*base);
  base->add_option("--out", bo.out, "Output CSV")->required();

  CompareOptions co;
  auto* comp = app.add_subcommand("compare", "Compare an optimized frontier with the standard envelope");
  comp->add_option("--standard", co.standard, "Sweep or envelope CSV (complexity,error columns)")->required();
  comp->add_option("--optimized", co.optimized, "Frontier CSV from grow")->required();
  comp->add_option("--out", co.out, "Report CSV")->required();

  ExportDotOptions eo;
  auto* dot = app.add_subcommand("export-dot", "Write a network as Graphviz DOT");
  dot->add_option("--network", eo.network, "Network JSON")->required();
  dot->add_flag("--hide-inputs", eo.hide_inputs, "Omit input nodes and their edges");
  dot->add_option("--precision", eo.precision, "Significant digits of edge labels")->capture_default_str();
  dot->add_option("--out", eo.out, "Output file (default: stdout)");

  std::string manifest_path, replay_out;
  auto* replay = app.add_subcommand("replay", "Rerun the command recorded in a manifest");
  replay->add_option("--manifest", manifest_path, "manifest.json written by a previous run")->required();
  replay->add_option("--out", replay_out, "Output location (default: the recorded one)");

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  if (*make) return make_dataset(md, out);
  if (*growc) return grow_command(go, out, err);
  if (*base) return baseline_command(bo, out);
  if (*comp) return compare_command(co, out);
  if (*dot) return export_dot_command(eo, out);
  if (*replay) return replay_command(manifest_path, replay_out, out, err);
  return kConfigError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) return kConfigError;
  try {
    return dispatch(args, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}

int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace dagnas::cli
