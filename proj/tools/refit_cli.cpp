// refit command line: sampling, training and the experiment commands.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refit/calibration.hpp"
#include "refit/data.hpp"
#include "refit/errors.hpp"
#include "refit/experiment.hpp"
#include "refit/metrics.hpp"
#include "refit/paramnet.hpp"
#include "refit/sampling.hpp"
#include "refit/serialize.hpp"
#include "refit/solver.hpp"
#include "refit/synthetic.hpp"
#include "refit/theory.hpp"
#include "refit/valuation.hpp"

namespace {

using namespace refit;
using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Wall-clock numbers never go into the main outputs; they land next to
// them so reruns stay byte-identical.
void write_timing(const std::string& out, const std::string& command, json extra) {
  extra["command"] = command;
  write_json_file(out + ".timing.json", extra);
}

std::optional<double> read_timing_seconds(const std::string& artifact) {
  const std::string path = artifact + ".timing.json";
  if (!std::filesystem::exists(path)) return std::nullopt;
  const json j = read_json_file(path);
  if (!j.contains("seconds")) return std::nullopt;
  return j.at("seconds").get<double>();
}

struct DataArgs {
  std::string path;
  std::string label = "label";
  std::size_t reserve = 0;

  DataPool load() const {
    if (path.empty()) throw InvalidArgument("--data is required");
    return load_pool(path, {label, reserve});
  }
};

void add_data(CLI::App* sub, DataArgs& a) {
  sub->add_option("--data", a.path, "CSV with a header row")->required();
  sub->add_option("--label", a.label, "label column name")->capture_default_str();
  sub->add_option("--reserve", a.reserve,
                  "trailing rows held out for addition and evaluation")
      ->capture_default_str();
}

struct ModelArgs {
  std::string kind = "binary-logistic";
  double lambda = 1.0;

  ModelSpec spec(const DataPool& pool) const {
    return spec_for(pool, parse_model_kind(kind), lambda);
  }
};

void add_model(CLI::App* sub, ModelArgs& a) {
  sub->add_option("--model", a.kind,
                  "binary-logistic | multinomial-logistic | svm-squared-hinge | ridge | "
                  "mean-quadratic")
      ->capture_default_str();
  sub->add_option("--lambda", a.lambda, "L2 coefficient")->capture_default_str();
}

struct SolverArgs {
  std::string method = "newton";
  double tol = 1e-8;
  int max_iter = 10000;

  SolveConfig config() const {
    SolveConfig cfg;
    cfg.method = parse_solve_method(method);
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.validate();
    return cfg;
  }
};

void add_solver(CLI::App* sub, SolverArgs& a) {
  sub->add_option("--solver", a.method, "newton | gd")->capture_default_str();
  sub->add_option("--tol", a.tol, "gradient-norm tolerance")->capture_default_str();
  sub->add_option("--max-iter", a.max_iter)->capture_default_str();
}

void check_pool(const DataPool& pool, const std::string& hash, const std::string& what) {
  if (!hash.empty() && hash != pool.hash()) {
    throw InvalidArgument(what + " was produced from a different data pool");
  }
}

std::vector<std::size_t> all_train(const DataPool& pool) {
  std::vector<std::size_t> u(pool.n_train());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = i;
  return u;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  SyntheticConfig cfg;
  std::string out;
};

void run_synth(const SynthArgs& a) {
  const DataPool pool = gaussian_pool(a.cfg);
  std::ofstream f(a.out);
  if (!f) throw IngestError("cannot write " + a.out);
  write_pool_csv(f, pool);
}

// --------------------------------------------------------------- sample

struct SampleArgs {
  DataArgs data;
  ModelArgs model;
  SolverArgs solver;
  std::string source = "permutation";
  std::size_t perms = 10;
  std::size_t count = 1000;
  double ratio = 0.6;
  bool include_reserve = false;
  std::string with_utility;
  std::uint64_t seed = 0;
  std::string out;
};

void run_sample(const SampleArgs& a) {
  const DataPool pool = a.data.load();
  const ModelSpec spec = a.model.spec(pool);
  const SolveConfig cfg = a.solver.config();
  const auto t0 = Clock::now();
  Phi phi;
  if (a.source == "permutation") {
    phi = sample_phi(pool, spec, cfg, {a.perms, a.seed, a.include_reserve});
  } else {
    std::vector<std::size_t> universe = all_train(pool);
    if (a.include_reserve) {
      for (std::size_t i = pool.n_train(); i < pool.size(); ++i) universe.push_back(i);
    }
    SubsetSource src;
    if (a.source == "uniform-size") {
      src = uniform_size_source(universe);
    } else if (a.source == "uniform-subset") {
      src = uniform_subset_source(universe);
    } else if (a.source == "bootstrap") {
      src = bootstrap_source(universe, a.ratio);
    } else {
      throw InvalidArgument("unknown subset source '" + a.source + "'");
    }
    phi = sample_phi_custom(pool, spec, cfg, src, a.count, a.seed);
  }
  if (!a.with_utility.empty()) {
    if (pool.n_reserve() == 0) throw InvalidArgument("utilities are measured on the reserve rows");
    attach_utilities(phi, pool, {pool.reserve_subset(), parse_utility_measure(a.with_utility)});
  }
  const double seconds = since(t0);
  save_phi(a.out, phi);
  write_timing(a.out, "sample", {{"seconds", seconds}, {"samples", phi.samples.size()}});
  std::cout << "wrote " << phi.samples.size() << " samples to " << a.out << '\n';
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  DataArgs data;
  std::string phi;
  std::string head = "params";
  std::vector<std::size_t> hidden;
  std::string activation = "relu";
  std::string optimizer = "adaptive-moment";
  std::string utility;
  std::string report;
  TrainConfig cfg;
  std::string out;
};

void run_train(const TrainArgs& a) {
  const DataPool pool = a.data.load();
  Phi phi = load_phi(a.phi);
  check_pool(pool, phi.header.pool_hash, a.phi);
  const Head head = parse_head(a.head);
  if (!a.utility.empty()) {
    attach_utilities(phi, pool, {pool.reserve_subset(), parse_utility_measure(a.utility)});
  }
  NetArch arch = default_arch(pool, phi.header.spec, head);
  if (!a.hidden.empty()) arch.hidden = a.hidden;
  arch.activation = parse_activation(a.activation);
  TrainConfig cfg = a.cfg;
  cfg.optimizer = parse_optimizer(a.optimizer);

  TrainReport report;
  const auto t0 = Clock::now();
  ParamNet net = head == Head::kParams
                     ? train(pool, phi.header.spec, phi.samples, arch, cfg, &report)
                     : train_deeputility(pool, phi.samples, arch, cfg, &report);
  const double seconds = since(t0);
  if (head == Head::kUtility) net.model = phi.header.spec;
  save_net(a.out, net);

  if (!a.report.empty()) {
    json epochs = json::array();
    for (const auto& e : report.epochs) {
      epochs.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_loss", e.val_loss},
                        {"val_param_error", e.val_param_error},
                        {"val_kkt", e.val_kkt}});
    }
    write_json_file(a.report, {{"best_epoch", report.best_epoch},
                               {"train_count", report.train_count},
                               {"validation_count", report.validation_count},
                               {"epochs", epochs}});
  }
  // Offline cost for the bench command: sampling plus training.
  const double sampling = read_timing_seconds(a.phi).value_or(0.0);
  write_timing(a.out, "train", {{"seconds", seconds + sampling}, {"train_seconds", seconds},
                                {"sampling_seconds", sampling}});
  std::cout << "best epoch " << report.best_epoch << ", wrote " << a.out << '\n';
}

// ------------------------------------------------------------- estimate

struct EstimateArgs {
  DataArgs data;
  std::string net;
  std::string subset;
  std::string out;
};

void run_estimate(const EstimateArgs& a) {
  const DataPool pool = a.data.load();
  const ParamNet net = load_net(a.net);
  const Subset subset = load_subset(a.subset);
  const auto t0 = Clock::now();
  json out;
  if (net.arch().head == Head::kParams) {
    out = estimate(net, pool, subset);
  } else {
    out = {{"utility", estimate_utility(net, pool, subset)}};
  }
  const double seconds = since(t0);
  write_json_file(a.out, out);
  write_timing(a.out, "estimate", {{"seconds", seconds}});
}

// ------------------------------------------------------ deletion/addition

struct SweepArgs {
  DataArgs data;
  ModelArgs model;
  SolverArgs solver;
  std::string net;
  std::vector<std::size_t> sizes;
  std::size_t repeats = 10;
  std::size_t base_size = 0;
  std::string utility = "avg-loss";
  std::string influence = "dense";
  std::uint64_t seed = 0;
  std::string csv;
  std::string out;
};

void run_sweep_command(Scenario scenario, const SweepArgs& a) {
  const DataPool pool = a.data.load();
  std::optional<ParamNet> net;
  ModelSpec spec = a.model.spec(pool);
  if (!a.net.empty()) {
    net = load_net(a.net);
    check_pool(pool, net->pool_hash, a.net);
    if (net->arch().head != Head::kParams) throw InvalidArgument("sweeps need a params-head network");
    spec = net->model;
  }
  SweepConfig cfg;
  cfg.sizes = a.sizes;
  if (cfg.sizes.empty()) {
    // Steps of 5% of the train segment up to half of it.
    const std::size_t n = pool.n_train();
    const std::size_t step = std::max<std::size_t>(1, n / 20);
    const std::size_t limit =
        scenario == Scenario::kDeletion ? n / 2 : std::min(n / 2, pool.n_reserve());
    for (std::size_t s = step; s <= limit; s += step) cfg.sizes.push_back(s);
  }
  cfg.repeats = a.repeats;
  cfg.base_size = a.base_size;
  cfg.seed = a.seed;
  cfg.measure = parse_utility_measure(a.utility);
  if (a.influence == "dense") {
    cfg.influence_mode = InfluenceSolveMode::kDense;
  } else if (a.influence == "cg") {
    cfg.influence_mode = InfluenceSolveMode::kCg;
  } else {
    throw InvalidArgument("unknown influence mode '" + a.influence + "'");
  }
  cfg.solver = a.solver.config();

  const SweepResult r = run_sweep(scenario, pool, spec, net ? &*net : nullptr, cfg);
  write_json_file(a.out, sweep_json(r));
  if (!a.csv.empty()) {
    std::ofstream f(a.csv);
    if (!f) throw IngestError("cannot write " + a.csv);
    write_sweep_csv(f, r);
  }
  write_timing(a.out, std::string(to_string(scenario)), sweep_timing_json(r));
}

// -------------------------------------------------------------- shapley

struct ShapleyArgs {
  DataArgs data;
  ModelArgs model;
  SolverArgs solver;
  std::string backend = "solver";
  std::string net;
  std::size_t perms = 100;
  std::string utility = "neg-loss";
  bool exact = false;
  std::string reference;
  std::uint64_t seed = 0;
  std::string out;
};

void run_shapley(const ShapleyArgs& a) {
  const DataPool pool = a.data.load();
  if (pool.n_reserve() == 0) throw InvalidArgument("Shapley utilities are measured on the reserve rows");
  const UtilitySpec uspec{pool.reserve_subset(), parse_utility_measure(a.utility)};
  const BackendKind kind = parse_backend(a.backend);
  std::optional<ParamNet> net;
  if (kind != BackendKind::kSolver) {
    if (a.net.empty()) throw InvalidArgument("--net is required for the " + a.backend + " backend");
    net = load_net(a.net);
    check_pool(pool, net->pool_hash, a.net);
  }
  const ModelSpec spec = net ? net->model : a.model.spec(pool);
  const UtilityBackend backend = kind == BackendKind::kSolver
                                     ? UtilityBackend::solver(spec, a.solver.config())
                                 : kind == BackendKind::kParamNet
                                     ? UtilityBackend::paramnet(*net)
                                     : UtilityBackend::deeputility(*net, spec);
  json out;
  json timing;
  if (a.exact) {
    const auto t0 = Clock::now();
    const Eigen::VectorXd sv = shapley_exact(pool, uspec, backend);
    timing["seconds"] = since(t0);
    out = {{"backend", to_string(kind)}, {"exact", true}, {"values", vector_to_json(sv)}};
  } else {
    const ShapleyEstimate est = shapley_permutation(pool, uspec, backend, a.perms, a.seed);
    out = est;
    timing["seconds"] = est.wall_time;
  }
  out["utility"] = to_string(uspec.measure);
  if (!a.reference.empty()) {
    const json ref = read_json_file(a.reference);
    const SvComparison cmp = compare_sv(vector_from_json(out.at("values")),
                                        vector_from_json(ref.at("values")));
    out["comparison"] = {{"nrmse", cmp.nrmse}, {"spearman", cmp.spearman}};
  }
  write_json_file(a.out, out);
  write_timing(a.out, "shapley", timing);
}

// ------------------------------------------------------------ calibrate

struct CalibrateArgs {
  DataArgs data;
  std::string net;
  std::string phi;
  std::size_t members = 500;
  double ratio = 0.6;
  int bins = 10;
  std::uint64_t seed = 0;
  std::string out;
};

void run_calibrate(const CalibrateArgs& a) {
  const DataPool pool = a.data.load();
  if (pool.n_reserve() == 0) throw InvalidArgument("calibration is measured on the reserve rows");
  const ParamNet net = load_net(a.net);
  check_pool(pool, net.pool_hash, a.net);
  const Phi phi = load_phi(a.phi);
  check_pool(pool, phi.header.pool_hash, a.phi);
  const Subset eval = pool.reserve_subset();
  const std::vector<int> labels = labels_of(pool, eval);

  const auto t0 = Clock::now();
  const ProbabilityAggregator regular = regular_ensemble(phi, pool, eval);
  const ProbabilityAggregator bagged =
      bagging_ensemble(net, pool, eval, a.ratio, a.members, a.seed);
  ProbabilityAggregator combined = regular;
  combined.merge(bagged);
  const double seconds = since(t0);

  const json out = {{"bins", a.bins},
                    {"ratio", a.ratio},
                    {"regular_members", regular.members()},
                    {"bagging_members", bagged.members()},
                    {"regular", ece(regular.mean(), labels, a.bins)},
                    {"bagging", ece(bagged.mean(), labels, a.bins)},
                    {"combined", ece(combined.mean(), labels, a.bins)}};
  write_json_file(a.out, out);
  write_timing(a.out, "calibrate", {{"seconds", seconds}});
}

// -------------------------------------------------------- verify-theory

struct TheoryArgs {
  DataArgs data;
  ModelArgs model;
  int theorem = 1;
  std::size_t probes = 0;
  double eps = 1e-5;
  std::size_t grid = 200;
  std::string subset;
  int k = -1;
  std::vector<double> eta_fractions{0.5, 0.9};
  std::vector<int> steps{0, 1, 2, 5, 10, 20, 50};
  std::string mode;
  std::uint64_t seed = 0;
  std::string out;
};

// Returns false when an assert-mode check failed.
bool run_theory(const TheoryArgs& a) {
  const DataPool pool = a.data.load();
  const ModelSpec spec = a.model.spec(pool);
  const Subset subset = a.subset.empty() ? pool.train_subset() : load_subset(a.subset);
  const auto t0 = Clock::now();
  const TheoryConstants consts = estimate_constants(spec, pool, subset, a.grid, a.seed);
  std::vector<Eigen::Index> ks;
  if (a.k >= 0) {
    ks.push_back(a.k);
  } else {
    for (Eigen::Index k = 0; k < spec.param_dim(); ++k) ks.push_back(k);
  }
  const ProbeOptions probes{a.probes, a.eps, a.seed};
  json checks = json::array();
  bool ok = true;
  if (a.theorem == 1) {
    if (!a.mode.empty() && parse_check_mode(a.mode) != CheckMode::kAssert) {
      throw InvalidArgument("theorem 1 is always checked in assert mode");
    }
    for (const auto k : ks) {
      const BoundCheck c = check_theorem1(spec, pool, subset, consts, k, probes);
      ok = ok && c.satisfied;
      checks.push_back(c);
    }
  } else if (a.theorem == 2) {
    const CheckMode mode = a.mode.empty() ? CheckMode::kReport : parse_check_mode(a.mode);
    const double scale = 1.0 / (spec.lambda + static_cast<double>(spec.param_dim()) * consts.beta);
    for (const double frac : a.eta_fractions) {
      for (const int t : a.steps) {
        for (const auto k : ks) {
          const BoundCheck c =
              check_theorem2(spec, pool, subset, consts, k, t, frac * scale, probes, mode);
          if (mode == CheckMode::kAssert) ok = ok && c.satisfied;
          checks.push_back(c);
        }
      }
    }
  } else {
    throw InvalidArgument("--theorem must be 1 or 2");
  }
  const double seconds = since(t0);
  write_json_file(a.out, {{"theorem", a.theorem},
                          {"model", spec},
                          {"subset_size", subset.size()},
                          {"constants", consts},
                          {"all_satisfied", ok},
                          {"checks", checks}});
  write_timing(a.out, "verify-theory", {{"seconds", seconds}});
  return ok;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  DataArgs data;
  SolverArgs solver;
  std::string net;
  std::string phi;
  std::vector<std::size_t> counts{0, 10, 100, 1000};
  double offline = -1.0;
  std::uint64_t seed = 0;
  std::string json_out;
  std::string out;
};

void run_bench_command(const BenchArgs& a) {
  const DataPool pool = a.data.load();
  const ParamNet net = load_net(a.net);
  check_pool(pool, net.pool_hash, a.net);
  BenchConfig cfg;
  cfg.counts = a.counts;
  cfg.seed = a.seed;
  cfg.solver = a.solver.config();
  cfg.offline_seconds = a.offline >= 0.0 ? a.offline : read_timing_seconds(a.net).value_or(0.0);
  const BenchResult r = run_bench(pool, net, cfg);
  std::ofstream f(a.out);
  if (!f) throw IngestError("cannot write " + a.out);
  write_bench_csv(f, r);
  if (!a.json_out.empty()) write_json_file(a.json_out, bench_json(r));
  std::cout << "median solver " << r.median_solver << " s, median optlearn " << r.median_net
            << " s, crossover ";
  if (r.crossover) {
    std::cout << std::ceil(*r.crossover) << " subsets\n";
  } else {
    std::cout << "none\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"refit: learned re-fitting of convex models on data subsets"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI file; [section] names match subcommands");
  app.config_formatter(std::make_shared<CLI::ConfigINI>());

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "write a Gaussian-class CSV");
  s_synth->add_option("--n-train", synth.cfg.n_train)->capture_default_str();
  s_synth->add_option("--n-reserve", synth.cfg.n_reserve)->capture_default_str();
  s_synth->add_option("--dim", synth.cfg.dim)->capture_default_str();
  s_synth->add_option("--classes", synth.cfg.num_classes)->capture_default_str();
  s_synth->add_option("--separation", synth.cfg.separation)->capture_default_str();
  s_synth->add_option("--seed", synth.cfg.seed)->capture_default_str();
  s_synth->add_option("--out", synth.out)->required();

  SampleArgs sample;
  auto* s_sample = app.add_subcommand("sample", "solve subsets and write phi.jsonl");
  add_data(s_sample, sample.data);
  add_model(s_sample, sample.model);
  add_solver(s_sample, sample.solver);
  s_sample->add_option("--source", sample.source,
                       "permutation | uniform-size | uniform-subset | bootstrap")
      ->capture_default_str();
  s_sample->add_option("--perms", sample.perms, "permutations")->capture_default_str();
  s_sample->add_option("--count", sample.count, "draws for the other sources")
      ->capture_default_str();
  s_sample->add_option("--ratio", sample.ratio, "bootstrap ratio")->capture_default_str();
  s_sample->add_flag("--include-reserve", sample.include_reserve,
                     "let subsets contain reserve rows");
  s_sample->add_option("--with-utility", sample.with_utility,
                       "attach reserve-set utilities (avg-loss | neg-loss | accuracy)");
  s_sample->add_option("--seed", sample.seed)->capture_default_str();
  s_sample->add_option("--out", sample.out)->required();

  TrainArgs train_a;
  auto* s_train = app.add_subcommand("train", "train a network on phi");
  add_data(s_train, train_a.data);
  s_train->add_option("--phi", train_a.phi)->required();
  s_train->add_option("--head", train_a.head, "params | utility")->capture_default_str();
  s_train->add_option("--hidden", train_a.hidden, "hidden widths, e.g. 128,128")
      ->delimiter(',');
  s_train->add_option("--activation", train_a.activation)->capture_default_str();
  s_train->add_option("--kkt-weight", train_a.cfg.kkt_weight)->capture_default_str();
  s_train->add_option("--util-weight", train_a.cfg.util_weight)->capture_default_str();
  s_train->add_option("--epochs", train_a.cfg.epochs)->capture_default_str();
  s_train->add_option("--batch", train_a.cfg.batch_size)->capture_default_str();
  s_train->add_option("--lr", train_a.cfg.step_size)->capture_default_str();
  s_train->add_option("--optimizer", train_a.optimizer, "adaptive-moment | sgd")
      ->capture_default_str();
  s_train->add_option("--val-fraction", train_a.cfg.validation_fraction)->capture_default_str();
  s_train->add_flag("--anneal", train_a.cfg.anneal, "cosine step-size decay");
  s_train->add_option("--utility", train_a.utility,
                      "utility-head targets measured on the reserve rows");
  s_train->add_option("--seed", train_a.cfg.seed)->capture_default_str();
  s_train->add_option("--report", train_a.report, "per-epoch statistics JSON");
  s_train->add_option("--out", train_a.out)->required();

  EstimateArgs est;
  auto* s_est = app.add_subcommand("estimate", "predict parameters for a subset");
  add_data(s_est, est.data);
  s_est->add_option("--net", est.net)->required();
  s_est->add_option("--subset", est.subset, "JSON array of indices")->required();
  s_est->add_option("--out", est.out)->required();

  SweepArgs del;
  SweepArgs add;
  auto setup_sweep = [](CLI::App* sub, SweepArgs& a) {
    add_data(sub, a.data);
    add_model(sub, a.model);
    add_solver(sub, a.solver);
    sub->add_option("--net", a.net, "params-head network (optional)");
    sub->add_option("--sizes", a.sizes, "group sizes")->delimiter(',');
    sub->add_option("--repeats", a.repeats)->capture_default_str();
    sub->add_option("--base-size", a.base_size, "0: whole train segment")->capture_default_str();
    sub->add_option("--utility", a.utility)->capture_default_str();
    sub->add_option("--influence", a.influence, "dense | cg")->capture_default_str();
    sub->add_option("--seed", a.seed)->capture_default_str();
    sub->add_option("--csv", a.csv, "per-size CSV");
    sub->add_option("--out", a.out)->required();
  };
  auto* s_del = app.add_subcommand("deletion", "deletion sweep");
  setup_sweep(s_del, del);
  auto* s_add = app.add_subcommand("addition", "addition sweep");
  setup_sweep(s_add, add);

  ShapleyArgs sv;
  auto* s_sv = app.add_subcommand("shapley", "Shapley values of the train rows");
  add_data(s_sv, sv.data);
  add_model(s_sv, sv.model);
  add_solver(s_sv, sv.solver);
  s_sv->add_option("--backend", sv.backend, "solver | paramnet | deeputility")
      ->capture_default_str();
  s_sv->add_option("--net", sv.net);
  s_sv->add_option("--perms", sv.perms)->capture_default_str();
  s_sv->add_option("--utility", sv.utility, "neg-loss | avg-loss | accuracy")
      ->capture_default_str();
  s_sv->add_flag("--exact", sv.exact, "enumerate every subset (n_train <= 12)");
  s_sv->add_option("--reference", sv.reference, "values JSON to compare against");
  s_sv->add_option("--seed", sv.seed)->capture_default_str();
  s_sv->add_option("--out", sv.out)->required();

  CalibrateArgs cal;
  auto* s_cal = app.add_subcommand("calibrate", "ECE of solver and network ensembles");
  add_data(s_cal, cal.data);
  s_cal->add_option("--net", cal.net)->required();
  s_cal->add_option("--phi", cal.phi)->required();
  s_cal->add_option("--members", cal.members)->capture_default_str();
  s_cal->add_option("--ratio", cal.ratio)->capture_default_str();
  s_cal->add_option("--bins", cal.bins)->capture_default_str();
  s_cal->add_option("--seed", cal.seed)->capture_default_str();
  s_cal->add_option("--out", cal.out)->required();

  TheoryArgs th;
  auto* s_th = app.add_subcommand("verify-theory", "finite-difference sensitivity checks");
  add_data(s_th, th.data);
  add_model(s_th, th.model);
  s_th->add_option("--theorem", th.theorem, "1 | 2")->capture_default_str();
  s_th->add_option("--probes", th.probes, "0: every data coordinate")->capture_default_str();
  s_th->add_option("--eps", th.eps)->capture_default_str();
  s_th->add_option("--grid", th.grid, "random points for the constants")->capture_default_str();
  s_th->add_option("--subset", th.subset, "JSON subset (default: train rows)");
  s_th->add_option("--k", th.k, "parameter index, -1 for all")->capture_default_str();
  s_th->add_option("--eta-fractions", th.eta_fractions,
                   "step sizes as fractions of 1/(lambda + d_param beta)")
      ->delimiter(',');
  s_th->add_option("--steps", th.steps, "GD step counts")->delimiter(',');
  s_th->add_option("--mode", th.mode, "report | assert");
  s_th->add_option("--seed", th.seed)->capture_default_str();
  s_th->add_option("--out", th.out)->required();

  BenchArgs bench;
  auto* s_bench = app.add_subcommand("bench", "cumulative solver vs network time");
  add_data(s_bench, bench.data);
  add_solver(s_bench, bench.solver);
  s_bench->add_option("--net", bench.net)->required();
  s_bench->add_option("--counts", bench.counts)->delimiter(',');
  s_bench->add_option("--offline-seconds", bench.offline,
                      "offline cost (default: from the network's timing log)");
  s_bench->add_option("--seed", bench.seed)->capture_default_str();
  s_bench->add_option("--json", bench.json_out);
  s_bench->add_option("--out", bench.out, "crossover CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (s_synth->parsed()) run_synth(synth);
    if (s_sample->parsed()) run_sample(sample);
    if (s_train->parsed()) run_train(train_a);
    if (s_est->parsed()) run_estimate(est);
    if (s_del->parsed()) run_sweep_command(Scenario::kDeletion, del);
    if (s_add->parsed()) run_sweep_command(Scenario::kAddition, add);
    if (s_sv->parsed()) run_shapley(sv);
    if (s_cal->parsed()) run_calibrate(cal);
    if (s_th->parsed() && !run_theory(th)) {
      std::cerr << "refit: sensitivity bound violated, see " << th.out << '\n';
      return kExitNumeric;
    }
    if (s_bench->parsed()) run_bench_command(bench);
  } catch (const NumericError& e) {
    std::cerr << "refit: numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "refit: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "refit: malformed JSON input: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
