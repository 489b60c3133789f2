#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace blmol::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

void expect_keys(const json& obj, const std::string& path, const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

template <typename T>
T get_or(const json& obj, const std::string& path, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(path.empty() ? key : path + "." + std::string(key), "wrong type");
  }
}

int lattice_resolution_for(int m, int rm) {
  for (int h = 1; h <= 200; ++h) {
    long long count = 1;
    for (int i = 1; i < m; ++i) count = count * (h + i) / i;
    if (count == rm) return h;
    if (count > rm) break;
  }
  std::string valid;
  for (int h = 1, shown = 0; shown < 6 && h <= 200; ++h) {
    long long count = 1;
    for (int i = 1; i < m; ++i) count = count * (h + i) / i;
    if (count >= rm / 2) {
      valid += (shown ? ", " : "") + std::to_string(count);
      ++shown;
    }
  }
  throw ConfigError("config: rm: " + std::to_string(rm) +
                    " is not a simplex-lattice size for " + std::to_string(m) +
                    " objectives (nearby valid sizes: " + valid + ")");
}

TrainConfig default_ll(ProblemKind problem) {
  TrainConfig ll;
  if (problem == ProblemKind::kTestbed) {
    ll.solver = Solver::kEpo;
    ll.optimizer = Optimizer::kPlain;
    ll.lr = 0.1;
    ll.epochs = 400;
    ll.batches_per_epoch = 1;
    ll.eps_track = 1e-9;
    ll.line_search = true;
  } else {
    ll.solver = Solver::kEpo;
    ll.optimizer = Optimizer::kAdam;
    ll.lr = 0.001;
    ll.epochs = 20;
    ll.batches_per_epoch = 1;
    ll.eps_track = 1e-4;
    ll.line_search = false;
  }
  return ll;
}

Solver solver_from_name(const std::string& name) {
  if (name == "ls") return Solver::kLs;
  if (name == "epo") return Solver::kEpo;
  if (name == "ws") return Solver::kWs;
  throw ConfigError("config: ll.solver: unknown solver '" + name + "'");
}

const char* solver_name(Solver s) {
  switch (s) {
    case Solver::kLs: return "ls";
    case Solver::kEpo: return "epo";
    case Solver::kWs: return "ws";
  }
  return "?";
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid json: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");

  expect_keys(doc, "",
              {"problem", "seed", "variant", "out", "jobs", "rm", "n_samples", "population",
               "generations", "pc", "pm", "eta_c", "eta_m", "cv_folds", "baseline_budget", "ll",
               "testbed", "supernet", "dataset", "realize"});

  RunConfig cfg;
  const std::string problem = get_or<std::string>(doc, "", "problem", "testbed");
  if (problem == "testbed") {
    cfg.problem = ProblemKind::kTestbed;
  } else if (problem == "supernet-synth") {
    cfg.problem = ProblemKind::kSupernetSynth;
  } else if (problem == "supernet-tud") {
    cfg.problem = ProblemKind::kSupernetTud;
  } else {
    fail("problem", "must be testbed, supernet-synth or supernet-tud");
  }

  if (doc.contains("seed")) {
    cfg.seed = get_or<std::uint64_t>(doc, "", "seed", 0);
    cfg.seed_set = true;
  }
  cfg.variant = variant_from_name(get_or<std::string>(doc, "", "variant", "blmol"));
  cfg.out = get_or<std::string>(doc, "", "out", "");
  cfg.jobs = get_or<int>(doc, "", "jobs", 1);
  cfg.rm = get_or<int>(doc, "", "rm", 20);
  cfg.n_samples = get_or<int>(doc, "", "n_samples", 50);
  cfg.population = get_or<int>(doc, "", "population", 100);
  cfg.generations = get_or<int>(doc, "", "generations", 500);
  cfg.pc = get_or<double>(doc, "", "pc", 1.0);
  cfg.pm = get_or<double>(doc, "", "pm", -1.0);
  cfg.eta_c = get_or<double>(doc, "", "eta_c", 20.0);
  cfg.eta_m = get_or<double>(doc, "", "eta_m", 20.0);
  cfg.cv_folds = get_or<int>(doc, "", "cv_folds", 5);
  cfg.baseline_budget = get_or<int>(doc, "", "baseline_budget", 100);

  if (cfg.rm < 2) fail("rm", "must be at least 2");
  if (cfg.n_samples < 2) fail("n_samples", "must be at least 2");
  if (cfg.population < 4 || cfg.population % 2) fail("population", "must be even and >= 4");
  if (cfg.generations < 0) fail("generations", "must be non-negative");
  if (cfg.pc < 0.0 || cfg.pc > 1.0) fail("pc", "must be in [0, 1]");
  if (cfg.pm > 1.0) fail("pm", "must be <= 1 (negative selects 1/D)");
  if (cfg.cv_folds < 2) fail("cv_folds", "must be at least 2");
  if (cfg.baseline_budget < 1) fail("baseline_budget", "must be positive");

  cfg.ll = default_ll(cfg.problem);
  if (doc.contains("ll")) {
    const json& ll = doc.at("ll");
    if (!ll.is_object()) fail("ll", "must be an object");
    expect_keys(ll, "ll",
                {"solver", "optimizer", "lr", "epochs", "batches_per_epoch", "eps_track",
                 "line_search", "batch_size"});
    if (ll.contains("solver")) cfg.ll.solver = solver_from_name(ll.at("solver").get<std::string>());
    if (ll.contains("optimizer")) {
      const std::string opt = ll.at("optimizer").get<std::string>();
      if (opt == "plain") {
        cfg.ll.optimizer = Optimizer::kPlain;
      } else if (opt == "adam") {
        cfg.ll.optimizer = Optimizer::kAdam;
      } else {
        fail("ll.optimizer", "must be plain or adam");
      }
    }
    cfg.ll.lr = get_or<double>(ll, "ll", "lr", cfg.ll.lr);
    cfg.ll.epochs = get_or<int>(ll, "ll", "epochs", cfg.ll.epochs);
    cfg.ll.batches_per_epoch = get_or<int>(ll, "ll", "batches_per_epoch", cfg.ll.batches_per_epoch);
    cfg.ll.eps_track = get_or<double>(ll, "ll", "eps_track", cfg.ll.eps_track);
    cfg.ll.line_search = get_or<bool>(ll, "ll", "line_search", cfg.ll.line_search);
    cfg.batch_size = get_or<int>(ll, "ll", "batch_size", 0);
    if (cfg.ll.lr <= 0.0) fail("ll.lr", "must be positive");
    if (cfg.ll.epochs < 1) fail("ll.epochs", "must be >= 1");
    if (cfg.ll.batches_per_epoch < 1) fail("ll.batches_per_epoch", "must be >= 1");
  }

  if (doc.contains("testbed")) {
    if (cfg.problem != ProblemKind::kTestbed) fail("testbed", "only valid for problem=testbed");
    const json& tb = doc.at("testbed");
    expect_keys(tb, "testbed", {"binary_genes", "problem_seed"});
    cfg.testbed_genes = get_or<int>(tb, "testbed", "binary_genes", 8);
    cfg.testbed_seed = get_or<std::uint64_t>(tb, "testbed", "problem_seed", 1);
    if (cfg.testbed_genes < 1) fail("testbed.binary_genes", "must be >= 1");
  }

  cfg.supernet.pref_count = cfg.rm;
  if (doc.contains("supernet")) {
    if (cfg.problem == ProblemKind::kTestbed) fail("supernet", "only valid for supernet problems");
    const json& sn = doc.at("supernet");
    expect_keys(sn, "supernet", {"backbone_depth", "hidden", "tasks"});
    cfg.supernet.backbone_depth = get_or<int>(sn, "supernet", "backbone_depth", 3);
    cfg.supernet.hidden = get_or<int>(sn, "supernet", "hidden", 16);
    if (sn.contains("tasks")) {
      cfg.supernet.tasks.clear();
      for (const auto& t : sn.at("tasks")) {
        cfg.supernet.tasks.push_back(task_from_name(t.get<std::string>()));
      }
    }
    if (cfg.supernet.backbone_depth < 1) fail("supernet.backbone_depth", "must be >= 1");
    if (cfg.supernet.hidden < 1) fail("supernet.hidden", "must be >= 1");
  }
  if (cfg.supernet.tasks.empty()) {
    cfg.supernet.tasks = {Task::kGc, Task::kNc, Task::kLp};
  }
  std::sort(cfg.supernet.tasks.begin(), cfg.supernet.tasks.end());
  if (std::unique(cfg.supernet.tasks.begin(), cfg.supernet.tasks.end()) !=
      cfg.supernet.tasks.end()) {
    fail("supernet.tasks", "duplicate task");
  }

  if (doc.contains("dataset")) {
    if (cfg.problem == ProblemKind::kTestbed) fail("dataset", "only valid for supernet problems");
    const json& ds = doc.at("dataset");
    if (cfg.problem == ProblemKind::kSupernetTud) {
      expect_keys(ds, "dataset", {"path"});
      cfg.dataset_path = get_or<std::string>(ds, "dataset", "path", "");
    } else {
      expect_keys(ds, "dataset",
                  {"graphs", "nodes", "communities", "intra_p", "inter_p", "noise",
                   "lp_per_graph"});
      cfg.synth.graphs = get_or<int>(ds, "dataset", "graphs", cfg.synth.graphs);
      cfg.synth.nodes = get_or<int>(ds, "dataset", "nodes", cfg.synth.nodes);
      cfg.synth.communities = get_or<int>(ds, "dataset", "communities", cfg.synth.communities);
      cfg.synth.intra_p = get_or<double>(ds, "dataset", "intra_p", cfg.synth.intra_p);
      cfg.synth.inter_p = get_or<double>(ds, "dataset", "inter_p", cfg.synth.inter_p);
      cfg.synth.noise = get_or<double>(ds, "dataset", "noise", cfg.synth.noise);
      cfg.synth.lp_per_graph = get_or<int>(ds, "dataset", "lp_per_graph", cfg.synth.lp_per_graph);
      if (cfg.synth.graphs < 5) fail("dataset.graphs", "must be >= 5");
      if (cfg.synth.nodes < 2) fail("dataset.nodes", "must be >= 2");
      if (cfg.synth.communities < 2) fail("dataset.communities", "must be >= 2");
    }
  }

  if (doc.contains("realize")) {
    const json& rz = doc.at("realize");
    expect_keys(rz, "realize", {"targets", "top_k", "repeats"});
    if (rz.contains("targets")) {
      for (const auto& t : rz.at("targets")) {
        std::vector<double> target;
        for (const auto& v : t) target.push_back(v.get<double>());
        if (target.empty()) fail("realize.targets", "empty target");
        for (double v : target) {
          if (!(v > 0.0)) fail("realize.targets", "entries must be positive");
        }
        cfg.realize.targets.push_back(std::move(target));
      }
    }
    cfg.realize.top_k = get_or<int>(rz, "realize", "top_k", 0);
    cfg.realize.repeats = get_or<int>(rz, "realize", "repeats", 1);
    if (cfg.realize.repeats < 1) fail("realize.repeats", "must be >= 1");
    if (cfg.realize.targets.empty() && cfg.realize.top_k < 1) {
      fail("realize", "needs targets or top_k >= 1");
    }
  } else {
    cfg.realize.top_k = 5;
  }

  // Validate the lattice size early: rm must be an exact lattice count for
  // the lower-level objective count.
  const int m_ll = cfg.problem == ProblemKind::kTestbed
                       ? 2
                       : static_cast<int>(cfg.supernet.tasks.size());
  (void)lattice_resolution_for(m_ll, cfg.rm);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

json ll_json(const RunConfig& cfg) {
  json ll;
  ll["solver"] = solver_name(cfg.ll.solver);
  ll["optimizer"] = cfg.ll.optimizer == Optimizer::kPlain ? "plain" : "adam";
  ll["lr"] = cfg.ll.lr;
  ll["epochs"] = cfg.ll.epochs;
  ll["batches_per_epoch"] = cfg.ll.batches_per_epoch;
  ll["eps_track"] = cfg.ll.eps_track;
  ll["line_search"] = cfg.ll.line_search;
  ll["batch_size"] = cfg.batch_size;
  return ll;
}

json problem_json(const RunConfig& cfg) {
  json p;
  switch (cfg.problem) {
    case ProblemKind::kTestbed:
      p["problem"] = "testbed";
      p["testbed"] = {{"binary_genes", cfg.testbed_genes}, {"problem_seed", cfg.testbed_seed}};
      break;
    case ProblemKind::kSupernetSynth:
    case ProblemKind::kSupernetTud: {
      p["problem"] = cfg.problem == ProblemKind::kSupernetSynth ? "supernet-synth" : "supernet-tud";
      json sn;
      sn["backbone_depth"] = cfg.supernet.backbone_depth;
      sn["hidden"] = cfg.supernet.hidden;
      json tasks = json::array();
      for (Task t : cfg.supernet.tasks) tasks.push_back(task_name(t));
      sn["tasks"] = std::move(tasks);
      p["supernet"] = std::move(sn);
      if (cfg.problem == ProblemKind::kSupernetSynth) {
        p["dataset"] = {{"graphs", cfg.synth.graphs},       {"nodes", cfg.synth.nodes},
                        {"communities", cfg.synth.communities}, {"intra_p", cfg.synth.intra_p},
                        {"inter_p", cfg.synth.inter_p},     {"noise", cfg.synth.noise},
                        {"lp_per_graph", cfg.synth.lp_per_graph}};
      } else {
        p["dataset"] = {{"path", cfg.dataset_path}};
      }
      break;
    }
  }
  p["rm"] = cfg.rm;
  p["ll"] = ll_json(cfg);
  return p;
}

json full_json(const RunConfig& cfg) {
  json doc = problem_json(cfg);
  doc["seed"] = cfg.seed;
  doc["variant"] = variant_name(cfg.variant);
  doc["n_samples"] = cfg.n_samples;
  doc["population"] = cfg.population;
  doc["generations"] = cfg.generations;
  doc["pc"] = cfg.pc;
  doc["pm"] = cfg.pm;
  doc["eta_c"] = cfg.eta_c;
  doc["eta_m"] = cfg.eta_m;
  doc["cv_folds"] = cfg.cv_folds;
  doc["baseline_budget"] = cfg.baseline_budget;
  json rz;
  rz["targets"] = cfg.realize.targets;
  rz["top_k"] = cfg.realize.top_k;
  rz["repeats"] = cfg.realize.repeats;
  doc["realize"] = std::move(rz);
  return doc;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string problem_hash(const RunConfig& config) {
  return fnv1a_hex(problem_json(config).dump());
}

std::string config_hash(const RunConfig& config) {
  return fnv1a_hex(full_json(config).dump());
}

std::string config_echo(const RunConfig& config) { return full_json(config).dump(2); }

BuiltProblem build_problem(const RunConfig& config, const std::string& run_dir) {
  BuiltProblem built;
  built.evolve.population = config.population;
  built.evolve.generations = config.generations;
  built.evolve.pc = config.pc;
  built.evolve.pm = config.pm;
  built.evolve.eta_c = config.eta_c;
  built.evolve.eta_m = config.eta_m;
  built.evolve.jobs = config.jobs;

  if (config.problem == ProblemKind::kTestbed) {
    SyntheticBLConfig tb;
    tb.binary_genes = config.testbed_genes;
    tb.pref_count = config.rm;
    tb.seed = config.testbed_seed;
    built.testbed = synthetic_bl(tb);
    built.problem = built.testbed->problem;
    built.problem.ll = config.ll;
    built.testbed->problem.ll = config.ll;
    apply_variant(built.problem, built.evolve, config.variant);
    return built;
  }

  // Supernet problems: resolve the dataset first.
  std::shared_ptr<const MultiTaskDataset> dataset;
  if (config.problem == ProblemKind::kSupernetSynth) {
    const std::string path = run_dir + "/dataset.json";
    if (!std::filesystem::exists(path)) {
      throw MissingStageError("missing stage: gen-data (expected " + path + ")");
    }
    dataset = std::make_shared<const MultiTaskDataset>(load_dataset_json(path));
  } else {
    std::string path = config.dataset_path;
    if (path.empty()) throw ConfigError("config: dataset.path: required for supernet-tud");
    if (!std::filesystem::exists(path)) {
      // Fallback root for bare dataset names.
      if (const char* root = std::getenv("BLMOL_DATA_DIR")) {
        const std::string candidate = std::string(root) + "/" + path;
        if (std::filesystem::exists(candidate)) path = candidate;
      }
    }
    if (!std::filesystem::exists(path)) {
      throw ConfigError("config: dataset.path: not found: " + config.dataset_path);
    }
    auto parsed = parse_tudataset(path);
    parsed.tasks = config.supernet.tasks;
    assign_splits(parsed, derive_stream(config.seed, "tud/split"));
    build_lp_samples(parsed, config.synth.lp_per_graph, derive_stream(config.seed, "tud/lp"));
    dataset = std::make_shared<const MultiTaskDataset>(std::move(parsed));
  }

  SupernetDims dims = config.supernet;
  dims.feature_dim = dataset->feature_dim;
  dims.node_classes = dataset->node_classes;
  dims.graph_classes = dataset->graph_classes;
  dims.pref_count = config.rm;
  built.dims = dims;
  built.dataset = dataset;

  BLProblem& problem = built.problem;
  problem.genes = supernet_gene_spec(dims);
  problem.pref_gene = static_cast<int>(problem.genes.size()) - 1;
  const int m_ll = static_cast<int>(dims.tasks.size());
  int h = 1;
  for (;; ++h) {  // validated during config parsing
    long long count = 1;
    for (int i = 1; i < m_ll; ++i) count = count * (h + i) / i;
    if (count == config.rm) break;
  }
  problem.prefs = simplex_lattice(m_ll, h);
  problem.encoding = make_feature_layout(problem.genes, m_ll);
  for (Task t : dims.tasks) {
    problem.objective_names.push_back(std::string(task_name(t)) +
                                      (t == Task::kLp ? "_auc" : "_acc"));
    problem.maximize_display.push_back(true);
  }
  problem.ll = config.ll;

  const BatchConfig batch{config.batch_size};
  problem.oracle_factory = [dims, dataset, batch](const Genotype& g, RandomStream rng) {
    return make_oracle(decode(g, dims), dataset, batch, std::move(rng));
  };
  problem.ul_evaluate = [dims, dataset](const Genotype& g, const std::vector<double>& w) {
    const auto plan = decode(g, dims);
    const auto m = metrics(plan, w, *dataset, Split::kVal);
    std::vector<double> out;
    for (Task t : dims.tasks) out.push_back(m.at(t));
    return out;
  };

  apply_variant(problem, built.evolve, config.variant);
  return built;
}

}  // namespace blmol::cli
