#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "blmol/errors.hpp"
#include "config.hpp"
#include "stages.hpp"
#include "blmol/graph.hpp"
#include "blmol/pareto.hpp"
#include "blmol/rng.hpp"
#include <cstdlib>
#include <sys/wait.h>

using namespace blmol;
using namespace blmol::cli;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string testbed_config_text(int seed = 7) {
  return R"({
    "problem": "testbed",
    "seed": )" + std::to_string(seed) + R"(,
    "rm": 20,
    "n_samples": 12,
    "population": 12,
    "generations": 8,
    "cv_folds": 4,
    "testbed": {"binary_genes": 6, "problem_seed": 2},
    "ll": {"solver": "epo", "optimizer": "plain", "lr": 0.1, "epochs": 150},
    "realize": {"targets": [[0.5, 0.5]], "repeats": 1}
  })";
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("config parses with defaults") {
  const auto cfg = parse_config_text(R"({"problem": "testbed", "seed": 1})");
  CHECK(cfg.n_samples == 50);
  CHECK(cfg.population == 100);
  CHECK(cfg.generations == 500);
  CHECK(cfg.pc == 1.0);
  CHECK(cfg.pm == -1.0);
  CHECK(cfg.eta_c == 20.0);
  CHECK(cfg.rm == 20);
  CHECK(cfg.seed_set);
  CHECK(cfg.ll.solver == Solver::kEpo);
  CHECK(cfg.ll.optimizer == Optimizer::kPlain);  // testbed default
}

TEST_CASE("supernet defaults use adam at the published rate") {
  const auto cfg = parse_config_text(
      R"({"problem": "supernet-synth", "seed": 1, "rm": 15})");
  CHECK(cfg.ll.optimizer == Optimizer::kAdam);
  CHECK(cfg.ll.lr == 0.001);
  CHECK(cfg.supernet.tasks.size() == 3);
}

TEST_CASE("unknown keys are rejected with their path") {
  try {
    (void)parse_config_text(R"({"problem": "testbed", "seed": 1, "bogus": 3})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  try {
    (void)parse_config_text(R"({"problem": "testbed", "seed": 1, "ll": {"solvr": "epo"}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("ll.solvr") != std::string::npos);
  }
}

TEST_CASE("schema violations are caught before any work") {
  CHECK_THROWS_AS((void)parse_config_text(R"({"problem": "nope", "seed": 1})"), ConfigError);
  CHECK_THROWS_AS((void)parse_config_text(R"({"problem": "testbed", "population": 7, "seed": 1})"),
                  ConfigError);
  CHECK_THROWS_AS((void)parse_config_text(R"({"problem": "testbed", "pc": 1.5, "seed": 1})"),
                  ConfigError);
  // rm must be a lattice size for the LL objective count (3 tasks here).
  CHECK_THROWS_AS(
      (void)parse_config_text(R"({"problem": "supernet-synth", "seed": 1, "rm": 20})"),
      ConfigError);
  CHECK_NOTHROW(
      (void)parse_config_text(R"({"problem": "supernet-synth", "seed": 1, "rm": 15})"));
}

TEST_CASE("hashes separate problems from run settings") {
  const auto a = parse_config_text(testbed_config_text(7));
  const auto b = parse_config_text(testbed_config_text(8));  // only the seed differs
  CHECK(problem_hash(a) == problem_hash(b));
  CHECK(config_hash(a) != config_hash(b));

  auto c = a;
  c.variant = Variant::kBlmolWs;
  CHECK(problem_hash(a) == problem_hash(c));
  CHECK(config_hash(a) != config_hash(c));

  auto d = a;
  d.testbed_seed = 99;
  CHECK(problem_hash(a) != problem_hash(d));

  // jobs and out never affect artifact bytes, so they stay out of the hash.
  auto e = a;
  e.jobs = 8;
  e.out = "elsewhere";
  CHECK(config_hash(a) == config_hash(e));
}

TEST_CASE("stage gating names the missing stage") {
  TempDir dir("blmol_cli_gating");
  const auto cfg = parse_config_text(testbed_config_text());

  try {
    stage_search(cfg, dir.path.string(), false);
    FAIL("expected MissingStageError");
  } catch (const MissingStageError& e) {
    CHECK(std::string(e.what()).find("missing stage: sample") != std::string::npos);
  }
  try {
    stage_realize(cfg, dir.path.string(), false);
    FAIL("expected MissingStageError");
  } catch (const MissingStageError& e) {
    CHECK(std::string(e.what()).find("missing stage: search") != std::string::npos);
  }

  stage_sample(cfg, dir.path.string(), false);
  try {
    stage_search(cfg, dir.path.string(), false);
    FAIL("expected MissingStageError");
  } catch (const MissingStageError& e) {
    CHECK(std::string(e.what()).find("missing stage: fit") != std::string::npos);
  }
}

TEST_CASE("gen-data is refused outside supernet-synth") {
  TempDir dir("blmol_cli_gendata");
  const auto cfg = parse_config_text(testbed_config_text());
  CHECK_THROWS_AS(stage_gen_data(cfg, dir.path.string(), false), ConfigError);
}

TEST_CASE("stale artifacts from another config are refused") {
  TempDir dir("blmol_cli_stale");
  const auto cfg = parse_config_text(testbed_config_text(7));
  stage_sample(cfg, dir.path.string(), false);
  const auto other = parse_config_text(testbed_config_text(8));
  CHECK_THROWS_AS(stage_fit(other, dir.path.string(), false), ConfigError);
}

TEST_CASE("full pipeline twice gives identical artifact bytes") {
  TempDir d1("blmol_cli_repro1");
  TempDir d2("blmol_cli_repro2");
  const auto cfg = parse_config_text(testbed_config_text());

  auto run_all = [&](const std::string& dir, int jobs) {
    auto c = cfg;
    c.jobs = jobs;
    stage_sample(c, dir, false);
    stage_fit(c, dir, false);
    stage_search(c, dir, false);
    stage_realize(c, dir, false);
  };
  run_all(d1.path.string(), 1);
  run_all(d2.path.string(), 8);

  for (const char* name : {"samples.csv", "fit_report.csv", "archive.csv", "realized.csv",
                           "surrogates.json"}) {
    CAPTURE(name);
    CHECK(slurp((d1.path / name).string()) == slurp((d2.path / name).string()));
  }

  // Re-running a stage over existing outputs rewrites the same bytes.
  const std::string before = slurp((d1.path / "archive.csv").string());
  stage_search(cfg, d1.path.string(), false);
  CHECK(slurp((d1.path / "archive.csv").string()) == before);
}

TEST_CASE("resume skips stages whose outputs match") {
  TempDir dir("blmol_cli_resume");
  const auto cfg = parse_config_text(testbed_config_text());
  stage_sample(cfg, dir.path.string(), false);
  const auto t1 = std::filesystem::last_write_time(dir.path / "samples.csv");
  stage_sample(cfg, dir.path.string(), true);  // no-op
  CHECK(std::filesystem::last_write_time(dir.path / "samples.csv") == t1);
}

TEST_CASE("gen-data reproduces byte-identical datasets and a consistent manifest") {
  TempDir d1("blmol_cli_gen1");
  TempDir d2("blmol_cli_gen2");
  const auto cfg = parse_config_text(
      R"({"problem": "supernet-synth", "seed": 5, "rm": 15,
          "dataset": {"graphs": 10, "nodes": 8, "communities": 2, "lp_per_graph": 3}})");
  stage_gen_data(cfg, d1.path.string(), false);
  stage_gen_data(cfg, d2.path.string(), false);
  CHECK(slurp((d1.path / "dataset.json").string()) == slurp((d2.path / "dataset.json").string()));

  const std::string manifest = slurp((d1.path / "dataset_manifest.json").string());
  CHECK(manifest.find("\"graphs\": 10") != std::string::npos);
  const auto ds = load_dataset_json((d1.path / "dataset.json").string());
  CHECK(ds.graphs.size() == 10);
  CHECK(ds.feature_dim == 2);
}

TEST_CASE("report aggregates runs and refuses mismatched problems") {
  TempDir run1("blmol_cli_rep_run1");
  TempDir run2("blmol_cli_rep_run2");
  TempDir out("blmol_cli_rep_out");

  auto cfg = parse_config_text(testbed_config_text(7));
  stage_sample(cfg, run1.path.string(), false);
  stage_fit(cfg, run1.path.string(), false);
  stage_search(cfg, run1.path.string(), false);
  stage_realize(cfg, run1.path.string(), false);

  auto rs = cfg;
  rs.variant = Variant::kRandomSearch;
  rs.baseline_budget = 13;
  stage_baseline(rs, run2.path.string(), false);

  stage_report({run1.path.string(), run2.path.string()}, {6.0, 6.0}, out.path.string());
  const std::string hv = slurp((out.path / "hv_table.csv").string());
  CHECK(hv.find("blmol,median") != std::string::npos);
  CHECK(hv.find("random_search,median") != std::string::npos);
  const std::string report = slurp((out.path / "report.csv").string());
  CHECK(report.find("val_loss_1") != std::string::npos);

  // A run of a different problem must be refused.
  TempDir run3("blmol_cli_rep_run3");
  auto other = parse_config_text(testbed_config_text(7));
  other.testbed_seed = 42;
  stage_sample(other, run3.path.string(), false);
  stage_fit(other, run3.path.string(), false);
  stage_search(other, run3.path.string(), false);
  stage_realize(other, run3.path.string(), false);
  CHECK_THROWS_AS(
      stage_report({run1.path.string(), run3.path.string()}, {6.0, 6.0}, out.path.string()),
      ConfigError);
}

TEST_CASE("selftest passes") { CHECK(run_selftest() == 0); }

#ifdef BLMOL_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BLMOL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("binary exit codes follow the contract") {
  TempDir dir("blmol_cli_exitcodes");
  const std::string config = (dir.path / "config.json").string();
  std::ofstream(config) << testbed_config_text();

  const std::string bad = (dir.path / "bad.json").string();
  std::ofstream(bad) << R"({"problem": "testbed", "seed": 1, "unknown_key": true})";

  const std::string no_seed = (dir.path / "no_seed.json").string();
  std::ofstream(no_seed) << R"({"problem": "testbed"})";

  const std::string out = (dir.path / "run").string();
  CHECK(run_cli("sample --config " + bad + " --out " + out) == 2);
  CHECK(run_cli("sample --config " + no_seed + " --out " + out) == 2);
  CHECK(run_cli("search --config " + config + " --out " + out) == 3);  // missing stage: sample
  CHECK(run_cli("sample --config " + config + " --out " + out) == 0);
  CHECK(run_cli("search --config " + config + " --out " + out) == 3);  // missing stage: fit
  CHECK(run_cli("fit --config " + config + " --out " + out) == 0);
  CHECK(run_cli("search --config " + config + " --out " + out) == 0);
  CHECK(run_cli("realize --config " + config + " --out " + out) == 0);
  CHECK(run_cli("selftest") == 0);
}
#endif

TEST_CASE("supernet-tud pipeline runs on a generated dataset directory") {
  TempDir data_dir("blmol_cli_tud_data");
  TempDir run_dir("blmol_cli_tud_run");

  // Emit a synthetic dataset in the TUDataset text format.
  const auto ds = synth_dataset(
      []() {
        SynthConfig c;
        c.n_graphs = 12;
        c.nodes_per_graph = 7;
        c.communities = 2;
        c.lp_samples_per_graph = 3;
        return c;
      }(),
      derive_stream(33, "tud-gen"));
  const std::string name = data_dir.path.filename().string();
  std::ofstream a(data_dir.path / (name + "_A.txt"));
  std::ofstream gi(data_dir.path / (name + "_graph_indicator.txt"));
  std::ofstream gl(data_dir.path / (name + "_graph_labels.txt"));
  std::ofstream nl(data_dir.path / (name + "_node_labels.txt"));
  std::ofstream na(data_dir.path / (name + "_node_attributes.txt"));
  int base = 1;
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const auto& graph = ds.graphs[g];
    gl << graph.graph_label << "\n";
    for (int i = 0; i < graph.nodes; ++i) {
      gi << (g + 1) << "\n";
      nl << graph.node_labels[static_cast<std::size_t>(i)] << "\n";
      na << graph.features.at(i, 0) << ", " << graph.features.at(i, 1) << "\n";
    }
    for (const auto& [u, v] : graph.edges) {
      a << (base + u) << ", " << (base + v) << "\n";
      a << (base + v) << ", " << (base + u) << "\n";
    }
    base += graph.nodes;
  }
  a.close(); gi.close(); gl.close(); nl.close(); na.close();

  const std::string config_text = R"({
    "problem": "supernet-tud",
    "seed": 4,
    "rm": 10,
    "n_samples": 4,
    "population": 8,
    "generations": 4,
    "cv_folds": 2,
    "supernet": {"backbone_depth": 2, "hidden": 4, "tasks": ["gc", "nc", "lp"]},
    "dataset": {"path": ")" + data_dir.path.string() + R"("},
    "ll": {"solver": "epo", "optimizer": "adam", "lr": 0.01, "epochs": 2},
    "realize": {"top_k": 1, "repeats": 1}
  })";
  const auto cfg = parse_config_text(config_text);
  stage_sample(cfg, run_dir.path.string(), false);
  stage_fit(cfg, run_dir.path.string(), false);
  stage_search(cfg, run_dir.path.string(), false);
  stage_realize(cfg, run_dir.path.string(), false);
  CHECK(std::filesystem::exists(run_dir.path / "realized.csv"));

  const std::string realized = slurp((run_dir.path / "realized.csv").string());
  CHECK(realized.find("target,repeat") != std::string::npos);
}

TEST_CASE("reported hypervolume matches a recomputation from the emitted front") {
  TempDir run("blmol_cli_hv_run");
  TempDir out("blmol_cli_hv_out");
  const auto cfg = parse_config_text(testbed_config_text(21));
  stage_sample(cfg, run.path.string(), false);
  stage_fit(cfg, run.path.string(), false);
  stage_search(cfg, run.path.string(), false);
  stage_realize(cfg, run.path.string(), false);
  stage_report({run.path.string()}, {6.0, 6.0}, out.path.string());

  // Recompute from realized.csv (testbed objectives are minimized as-is).
  std::istringstream in(slurp((run.path / "realized.csv").string()));
  std::string line;
  int skip_lines = 2;  // hash comment + header
  std::vector<ObjectiveVector> front;
  while (std::getline(in, line)) {
    if (skip_lines > 0) {
      --skip_lines;
      continue;
    }
    const auto last = line.rfind(',');
    const auto prev = line.rfind(',', last - 1);
    front.push_back(ObjectiveVector({std::stod(line.substr(prev + 1, last - prev - 1)),
                                     std::stod(line.substr(last + 1))}));
  }
  const double expect = hypervolume(front, ObjectiveVector({6.0, 6.0}));

  const std::string hv_table = slurp((out.path / "hv_table.csv").string());
  std::istringstream ht(hv_table);
  std::getline(ht, line);  // header
  std::getline(ht, line);  // the single run row
  const double got = std::stod(line.substr(line.rfind(',') + 1));
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));

  // A single run collapses the aggregate spread to zero.
  CHECK(hv_table.find("blmol,std,,0\n") != std::string::npos);
}
