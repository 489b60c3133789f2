#include "stages.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "blmol/errors.hpp"
#include "blmol/pareto.hpp"
#include "blmol/rank_stats.hpp"

namespace blmol::cli {

using nlohmann::json;

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hash_line(const RunConfig& config) {
  return "# problem=" + problem_hash(config) + " config=" + config_hash(config) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool artifact_current(const std::string& path, const RunConfig& config) {
  if (!std::filesystem::exists(path)) return false;
  std::ifstream in(path, std::ios::binary);
  std::string first;
  if (!std::getline(in, first)) return false;
  return first + "\n" == hash_line(config);
}

void require_file(const std::string& path, const std::string& missing_stage) {
  if (!std::filesystem::exists(path)) {
    throw MissingStageError("missing stage: " + missing_stage + " (expected " + path + ")");
  }
}

void require_stage_input(const std::string& path, const RunConfig& config,
                         const std::string& missing_stage) {
  require_file(path, missing_stage);
  std::ifstream in(path, std::ios::binary);
  std::string first;
  std::getline(in, first);
  if (first + "\n" != hash_line(config)) {
    throw ConfigError(path + ": artifact hashes do not match this config; re-run stage '" +
                      missing_stage + "'");
  }
}

class StageTimer {
 public:
  StageTimer(const RunConfig& config, std::string run_dir, std::string stage)
      : config_(config),
        run_dir_(std::move(run_dir)),
        stage_(std::move(stage)),
        start_(std::chrono::steady_clock::now()) {}

  // Merge this stage's record into meta.json.
  void commit() {
    const StagePaths paths{run_dir_};
    json meta;
    if (std::filesystem::exists(paths.meta_json())) {
      try {
        meta = json::parse(read_file(paths.meta_json()));
      } catch (const json::exception&) {
        meta = json::object();
      }
    }
    meta["tool_version"] = kToolVersion;
    meta["config"] = json::parse(config_echo(config_));
    meta["config_hash"] = config_hash(config_);
    meta["problem_hash"] = problem_hash(config_);
    json objectives = json::array();
    if (config_.problem == ProblemKind::kTestbed) {
      objectives.push_back({{"name", "val_loss_1"}, {"maximize", false}});
      objectives.push_back({{"name", "val_loss_2"}, {"maximize", false}});
    } else {
      for (Task t : config_.supernet.tasks) {
        objectives.push_back(
            {{"name", std::string(task_name(t)) + (t == Task::kLp ? "_auc" : "_acc")},
             {"maximize", true}});
      }
    }
    meta["objectives"] = std::move(objectives);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    meta["stages"][stage_] = {{"seed", config_.seed},
                              {"jobs", config_.jobs},
                              {"wall_clock_sec", secs}};
    write_file(StagePaths{run_dir_}.meta_json(), meta.dump(2) + "\n");
  }

 private:
  const RunConfig& config_;
  std::string run_dir_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

std::string genes_header(std::size_t d) {
  std::string h;
  for (std::size_t i = 0; i < d; ++i) {
    if (i) h += ',';
    h += "g" + std::to_string(i);
  }
  return h;
}

std::string archive_to_csv(const RunConfig& config, const BLProblem& problem,
                           const ParetoArchive<Genotype>& archive) {
  std::string out = hash_line(config);
  const std::size_t d = problem.genes.size();
  out += genes_header(d);
  for (std::size_t j = 0; j < problem.objective_count(); ++j) {
    out += ",y" + std::to_string(j);
  }
  out += '\n';
  for (const auto& member : archive.members()) {
    for (std::size_t i = 0; i < d; ++i) {
      if (i) out += ',';
      out += std::to_string(member.payload.genes[i]);
    }
    for (double v : problem.to_display(member.objectives)) {
      out += ',';
      out += g17(v);
    }
    out += '\n';
  }
  return out;
}

ParetoArchive<Genotype> archive_from_csv(const std::string& text, const BLProblem& problem) {
  ParetoArchive<Genotype> archive;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  const std::size_t d = problem.genes.size();
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::stringstream ls(line);
    std::string tok;
    std::vector<double> row;
    while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
    if (row.size() != d + problem.objective_count())
      throw ParseError("archive.csv: wrong column count");
    Genotype g;
    for (std::size_t i = 0; i < d; ++i) g.genes.push_back(static_cast<int>(row[i]));
    std::vector<double> display(row.begin() + static_cast<std::ptrdiff_t>(d), row.end());
    archive.insert(std::move(g), problem.to_minimization(display));
  }
  return archive;
}

std::string realized_to_csv(const RunConfig& config, const BLProblem& problem,
                            const std::vector<RealizedSolution>& realized) {
  std::string out = hash_line(config);
  const std::size_t d = problem.genes.size();
  out += genes_header(d) + ",target,repeat";
  for (std::size_t j = 0; j < problem.objective_count(); ++j) {
    out += ",y" + std::to_string(j);
  }
  out += '\n';
  for (const auto& sol : realized) {
    for (std::size_t i = 0; i < d; ++i) {
      if (i) out += ',';
      out += std::to_string(sol.genome.genes[i]);
    }
    out += ',' + std::to_string(sol.target) + ',' + std::to_string(sol.repeat);
    for (double v : sol.display) {
      out += ',';
      out += g17(v);
    }
    out += '\n';
  }
  return out;
}

json surrogate_to_json(const FittedSurrogate& model) {
  json j;
  j["kind"] = surrogate_kind_name(model.kind);
  j["objective"] = model.objective;
  j["feature_width"] = model.feature_width;
  switch (model.kind) {
    case SurrogateKind::kForest: {
      json trees = json::array();
      for (const auto& tree : model.forest.trees) {
        json nodes = json::array();
        for (const auto& n : tree) {
          nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
        }
        trees.push_back(std::move(nodes));
      }
      j["trees"] = std::move(trees);
      break;
    }
    case SurrogateKind::kGpRbf:
      j["inputs"] = model.gp.inputs;
      j["alpha"] = model.gp.alpha;
      j["length_scale"] = model.gp.length_scale;
      j["signal_var"] = model.gp.signal_var;
      j["mean"] = model.gp.mean;
      break;
    case SurrogateKind::kKnn:
      j["inputs"] = model.knn.inputs;
      j["targets"] = model.knn.targets;
      j["k"] = model.knn.k;
      break;
  }
  return j;
}

FittedSurrogate surrogate_from_json(const json& j) {
  FittedSurrogate model;
  model.kind = surrogate_kind_from_name(j.at("kind").get<std::string>());
  model.objective = j.at("objective").get<int>();
  model.feature_width = j.at("feature_width").get<int>();
  switch (model.kind) {
    case SurrogateKind::kForest:
      for (const auto& tree : j.at("trees")) {
        std::vector<TreeNode> nodes;
        for (const auto& n : tree) {
          nodes.push_back(TreeNode{n[0].get<int>(), n[1].get<double>(), n[2].get<int>(),
                                   n[3].get<int>(), n[4].get<double>()});
        }
        model.forest.trees.push_back(std::move(nodes));
      }
      break;
    case SurrogateKind::kGpRbf:
      model.gp.inputs = j.at("inputs").get<std::vector<std::vector<double>>>();
      model.gp.alpha = j.at("alpha").get<std::vector<double>>();
      model.gp.length_scale = j.at("length_scale").get<double>();
      model.gp.signal_var = j.at("signal_var").get<double>();
      model.gp.mean = j.at("mean").get<double>();
      break;
    case SurrogateKind::kKnn:
      model.knn.inputs = j.at("inputs").get<std::vector<std::vector<double>>>();
      model.knn.targets = j.at("targets").get<std::vector<double>>();
      model.knn.k = j.at("k").get<int>();
      break;
  }
  return model;
}

std::vector<PreferenceVector> realize_targets(const RunConfig& config, std::size_t m) {
  std::vector<PreferenceVector> targets;
  for (const auto& t : config.realize.targets) {
    if (t.size() != m) {
      throw ConfigError("config: realize.targets: length " + std::to_string(t.size()) +
                        " does not match objective count " + std::to_string(m));
    }
    targets.emplace_back(t);
  }
  return targets;
}

RunArtifacts run_realize(const RunConfig& config, const BLProblem& problem,
                         const ParetoArchive<Genotype>& archive) {
  const auto targets = realize_targets(config, problem.objective_count());
  RandomStream rng = derive_stream(config.seed, "stage/realize");
  if (!targets.empty()) {
    return realize(problem, archive, targets, config.realize.repeats, config.jobs, rng);
  }
  return realize_topk(problem, archive, config.realize.top_k, config.realize.repeats,
                      config.jobs, rng);
}

std::string fit_report_csv_text(const RunConfig& config, const BLProblem& problem,
                                const SelectionReport& report) {
  std::string out = hash_line(config);
  out += "objective,model,ktau,mse,selected\n";
  for (std::size_t obj = 0; obj < report.scores.size(); ++obj) {
    for (const auto& s : report.scores[obj]) {
      out += problem.objective_names[obj];
      out += ',';
      out += surrogate_kind_name(s.kind);
      out += ',' + g17(s.ktau) + ',' + g17(s.mse) + ',' + (s.selected ? "1" : "0") + '\n';
    }
  }
  return out;
}

void print_fit_report(const BLProblem& problem, const SelectionReport& report) {
  std::printf("%-10s", "model");
  for (const auto& name : problem.objective_names) {
    std::printf(" | %-14s KTau   MSE", name.c_str());
  }
  std::printf("\n");
  const std::size_t kinds = report.scores.empty() ? 0 : report.scores[0].size();
  for (std::size_t k = 0; k < kinds; ++k) {
    std::printf("%-10s", surrogate_kind_name(report.scores[0][k].kind));
    for (const auto& obj_scores : report.scores) {
      std::printf(" | %s %7.4f %7.5f", obj_scores[k].selected ? "*" : " ", obj_scores[k].ktau,
                  obj_scores[k].mse);
    }
    std::printf("\n");
  }
}

}  // namespace

void stage_gen_data(const RunConfig& config, const std::string& run_dir, bool resume) {
  if (config.problem != ProblemKind::kSupernetSynth) {
    throw ConfigError("gen-data: only meaningful for problem=supernet-synth");
  }
  const StagePaths paths{run_dir};
  if (resume && artifact_current(paths.dataset_manifest(), config) &&
      std::filesystem::exists(paths.dataset_json())) {
    std::printf("resume: gen-data up to date\n");
    return;
  }
  StageTimer timer(config, run_dir, "gen-data");

  SynthConfig synth;
  synth.n_graphs = config.synth.graphs;
  synth.nodes_per_graph = config.synth.nodes;
  synth.communities = config.synth.communities;
  synth.intra_p = config.synth.intra_p;
  synth.inter_p = config.synth.inter_p;
  synth.feature_noise = config.synth.noise;
  synth.lp_samples_per_graph = config.synth.lp_per_graph;
  const MultiTaskDataset ds = synth_dataset(synth, derive_stream(config.seed, "gen-data"));
  write_file(paths.dataset_json(), dataset_to_json(ds));

  json manifest;
  manifest["graphs"] = static_cast<int>(ds.graphs.size());
  manifest["feature_dim"] = ds.feature_dim;
  manifest["node_classes"] = ds.node_classes;
  manifest["graph_classes"] = ds.graph_classes;
  manifest["nodes_per_graph"] = config.synth.nodes;
  manifest["seed"] = config.seed;
  manifest["split_sizes"] = {static_cast<int>(ds.graphs_in(Split::kTrain).size()),
                             static_cast<int>(ds.graphs_in(Split::kVal).size()),
                             static_cast<int>(ds.graphs_in(Split::kTest).size())};
  write_file(paths.dataset_manifest(), hash_line(config) + manifest.dump(2) + "\n");
  timer.commit();
  std::printf("gen-data: %zu graphs -> %s\n", ds.graphs.size(), paths.dataset_json().c_str());
}

void stage_sample(const RunConfig& config, const std::string& run_dir, bool resume) {
  const StagePaths paths{run_dir};
  if (resume && artifact_current(paths.samples_csv(), config)) {
    std::printf("resume: sample up to date\n");
    return;
  }
  StageTimer timer(config, run_dir, "sample");
  BuiltProblem built = build_problem(config, run_dir);
  const PSMResult psm = build_psm(built.problem, config.n_samples, config.cv_folds, config.jobs,
                                  derive_stream(config.seed, "stage/psm"));
  write_file(paths.samples_csv(), hash_line(config) + table_to_csv(psm.table));
  timer.commit();
  std::printf("sample: %zu rows (%ld trainings) -> %s\n", psm.table.rows(),
              built.problem.budget->load(), paths.samples_csv().c_str());
}

void stage_fit(const RunConfig& config, const std::string& run_dir, bool resume) {
  const StagePaths paths{run_dir};
  require_stage_input(paths.samples_csv(), config, "sample");
  if (resume && artifact_current(paths.surrogates_json(), config)) {
    std::printf("resume: fit up to date\n");
    return;
  }
  StageTimer timer(config, run_dir, "fit");
  BuiltProblem built = build_problem(config, run_dir);
  SampleTable table = table_from_csv(read_file(paths.samples_csv()));
  table.layout = built.problem.encoding;
  if (table.feature_width() != built.problem.encoding.width) {
    throw ConfigError("samples.csv feature width does not match the problem encoding");
  }

  const std::vector<SurrogateKind> kinds{SurrogateKind::kForest, SurrogateKind::kGpRbf,
                                         SurrogateKind::kKnn};
  const SelectionReport report = select_best(table, kinds, config.cv_folds, FitHyper{},
                                             derive_stream(config.seed, "stage/psm").derive("select"));

  json doc;
  doc["problem_hash"] = problem_hash(config);
  doc["config_hash"] = config_hash(config);
  json models = json::array();
  for (const auto& model : report.selected) models.push_back(surrogate_to_json(model));
  doc["surrogates"] = std::move(models);
  write_file(paths.surrogates_json(), doc.dump() + "\n");
  write_file(paths.fit_report_csv(), fit_report_csv_text(config, built.problem, report));
  print_fit_report(built.problem, report);
  timer.commit();
}

void stage_search(const RunConfig& config, const std::string& run_dir, bool resume) {
  const StagePaths paths{run_dir};
  require_stage_input(paths.samples_csv(), config, "sample");
  require_file(paths.surrogates_json(), "fit");
  if (resume && artifact_current(paths.archive_csv(), config)) {
    std::printf("resume: search up to date\n");
    return;
  }
  StageTimer timer(config, run_dir, "search");
  BuiltProblem built = build_problem(config, run_dir);

  json doc = json::parse(read_file(paths.surrogates_json()));
  if (doc.at("config_hash").get<std::string>() != config_hash(config)) {
    throw ConfigError("surrogates.json: hashes do not match this config; re-run stage 'fit'");
  }
  std::vector<FittedSurrogate> surrogates;
  for (const auto& j : doc.at("surrogates")) surrogates.push_back(surrogate_from_json(j));

  const long before = built.problem.budget->load();
  const auto archive = surrogate_search(built.problem, surrogates, built.evolve,
                                        derive_stream(config.seed, "stage/search"));
  if (built.problem.budget->load() != before) {
    throw NumericError("search consumed true evaluations; surrogate path is broken");
  }
  write_file(paths.archive_csv(), archive_to_csv(config, built.problem, archive));
  timer.commit();
  std::printf("search: archive size %zu -> %s\n", archive.size(), paths.archive_csv().c_str());
}

void stage_realize(const RunConfig& config, const std::string& run_dir, bool resume) {
  const StagePaths paths{run_dir};
  require_stage_input(paths.archive_csv(), config, "search");
  if (resume && artifact_current(paths.realized_csv(), config)) {
    std::printf("resume: realize up to date\n");
    return;
  }
  StageTimer timer(config, run_dir, "realize");
  BuiltProblem built = build_problem(config, run_dir);
  const auto archive = archive_from_csv(read_file(paths.archive_csv()), built.problem);
  const RunArtifacts artifacts = run_realize(config, built.problem, archive);
  write_file(paths.realized_csv(), realized_to_csv(config, built.problem, artifacts.realized));
  timer.commit();
  std::printf("realize: %zu solutions (%ld trainings) -> %s\n", artifacts.realized.size(),
              artifacts.true_evaluations, paths.realized_csv().c_str());
}

void stage_baseline(const RunConfig& config, const std::string& run_dir, bool resume) {
  if (config.variant == Variant::kRandomSearch) {
    const StagePaths paths{run_dir};
    if (resume && artifact_current(paths.realized_csv(), config)) {
      std::printf("resume: baseline up to date\n");
      return;
    }
    StageTimer timer(config, run_dir, "baseline");
    BuiltProblem built = build_problem(config, run_dir);
    const RunArtifacts artifacts = random_search(
        built.problem, config.baseline_budget, config.jobs, derive_stream(config.seed, "stage/rs"));
    write_file(paths.archive_csv(), archive_to_csv(config, built.problem,
                                                   artifacts.predicted_archive));
    write_file(paths.realized_csv(), realized_to_csv(config, built.problem, artifacts.realized));
    timer.commit();
    std::printf("baseline: %ld true evaluations -> %s\n", artifacts.true_evaluations,
                paths.realized_csv().c_str());
    return;
  }
  // blmol / blmol_i / blmol_ws run the full staged pipeline.
  if (config.problem == ProblemKind::kSupernetSynth) stage_gen_data(config, run_dir, true);
  stage_sample(config, run_dir, resume);
  stage_fit(config, run_dir, resume);
  stage_search(config, run_dir, resume);
  stage_realize(config, run_dir, resume);
}

void stage_report(const std::vector<std::string>& run_dirs, const std::vector<double>& ref_point,
                  const std::string& out_dir) {
  if (run_dirs.empty()) throw ConfigError("report: no run directories given");
  if (ref_point.empty()) throw ConfigError("report: --ref is required (display orientation)");

  struct Run {
    std::string dir;
    std::string variant;
    std::uint64_t seed = 0;
    std::string problem;
    std::vector<bool> maximize;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;  // genes..., target, repeat, metrics...
    std::size_t gene_count = 0;
    double hv = 0.0;
  };
  std::vector<Run> runs;
  std::string shared_problem_hash;

  for (const std::string& dir : run_dirs) {
    const StagePaths paths{dir};
    if (!std::filesystem::exists(paths.realized_csv())) {
      throw MissingStageError("missing stage: realize (expected " + paths.realized_csv() + ")");
    }
    if (!std::filesystem::exists(paths.meta_json())) {
      throw MissingStageError("missing stage: realize (expected " + paths.meta_json() + ")");
    }
    const json meta = json::parse(read_file(paths.meta_json()));
    Run run;
    run.dir = dir;
    run.problem = meta.at("problem_hash").get<std::string>();
    run.variant = meta.at("config").at("variant").get<std::string>();
    run.seed = meta.at("config").at("seed").get<std::uint64_t>();
    for (const auto& obj : meta.at("objectives")) {
      run.maximize.push_back(obj.at("maximize").get<bool>());
      run.names.push_back(obj.at("name").get<std::string>());
    }
    if (shared_problem_hash.empty()) {
      shared_problem_hash = run.problem;
    } else if (shared_problem_hash != run.problem) {
      throw ConfigError("report: problem hashes differ between " + run_dirs.front() + " and " +
                        dir + "; refusing to aggregate");
    }
    if (run.maximize.size() != ref_point.size()) {
      throw ConfigError("report: --ref length does not match the objective count");
    }

    std::istringstream in(read_file(paths.realized_csv()));
    std::string line;
    bool header_seen = false;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (!header_seen) {
        header_seen = true;
        columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
        run.gene_count = columns - 2 - run.maximize.size();
        continue;
      }
      std::stringstream ls(line);
      std::string tok;
      std::vector<double> row;
      while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
      if (row.size() != columns) throw ParseError(paths.realized_csv() + ": ragged row");
      run.rows.push_back(std::move(row));
    }
    if (run.rows.empty()) throw ParseError(paths.realized_csv() + ": no realized solutions");

    // Hypervolume of the run's true-objective front, minimization orientation.
    std::vector<ObjectiveVector> front;
    for (const auto& row : run.rows) {
      std::vector<double> v(run.maximize.size());
      for (std::size_t j = 0; j < v.size(); ++j) {
        const double display = row[run.gene_count + 2 + j];
        v[j] = run.maximize[j] ? -display : display;
      }
      front.push_back(ObjectiveVector(std::move(v)));
    }
    std::vector<double> ref(ref_point);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (run.maximize[j]) ref[j] = -ref[j];
    }
    run.hv = hypervolume(front, ObjectiveVector(ref));
    runs.push_back(std::move(run));
  }

  // report.csv: one row per realized solution.
  std::string report = "run,variant,seed," + genes_header(runs[0].gene_count) + ",target,repeat";
  for (const auto& name : runs[0].names) report += "," + name;
  report += ",hv\n";
  for (const auto& run : runs) {
    for (const auto& row : run.rows) {
      report += run.dir + "," + run.variant + "," + std::to_string(run.seed);
      for (std::size_t i = 0; i < run.gene_count + 2; ++i) {
        report += ',' + std::to_string(static_cast<long long>(row[i]));
      }
      for (std::size_t j = 0; j < run.names.size(); ++j) {
        report += ',' + g17(row[run.gene_count + 2 + j]);
      }
      report += ',' + g17(run.hv) + '\n';
    }
  }
  // Aggregate rows: per-variant mean and std of each metric across runs.
  std::map<std::string, std::vector<const Run*>> by_variant;
  for (const auto& run : runs) by_variant[run.variant].push_back(&run);

  std::string hv_table = "variant,seed,run,hv\n";
  for (const auto& run : runs) {
    hv_table += run.variant + ',' + std::to_string(run.seed) + ',' + run.dir + ',' + g17(run.hv) +
                '\n';
  }
  for (const auto& [variant, group] : by_variant) {
    std::vector<double> hvs;
    for (const Run* r : group) hvs.push_back(r->hv);
    std::sort(hvs.begin(), hvs.end());
    double mean = 0.0;
    for (double v : hvs) mean += v;
    mean /= static_cast<double>(hvs.size());
    double var = 0.0;
    for (double v : hvs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(hvs.size());
    const double median = hvs.size() % 2 ? hvs[hvs.size() / 2]
                                         : 0.5 * (hvs[hvs.size() / 2 - 1] + hvs[hvs.size() / 2]);
    hv_table += variant + ",median,," + g17(median) + '\n';
    hv_table += variant + ",mean,," + g17(mean) + '\n';
    hv_table += variant + ",std,," + g17(std::sqrt(var)) + '\n';
  }

  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/report.csv", report);
  write_file(out_dir + "/hv_table.csv", hv_table);
  std::printf("report: %zu runs -> %s/report.csv, %s/hv_table.csv\n", runs.size(),
              out_dir.c_str(), out_dir.c_str());
}

int run_selftest() {
  int failures = 0;
  const auto check = [&](const char* name, bool ok) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok) ++failures;
  };

  check("simplex lattice rm=20", simplex_lattice(2, 19).size() == 20);
  check("hypervolume 2d exact",
        std::fabs(hypervolume({ObjectiveVector({1, 2}), ObjectiveVector({2, 1})},
                              ObjectiveVector({3, 3})) -
                  3.0) < 1e-12);
  {
    QuadraticMOProblem p;
    p.centers = {{0.0}, {2.0}};
    auto oracle = quad_oracle(p);
    TrainConfig ll;
    ll.solver = Solver::kEpo;
    ll.optimizer = Optimizer::kPlain;
    ll.lr = 0.05;
    ll.epochs = 500;
    ll.eps_track = 1e-9;
    const auto trace =
        train_preference(*oracle, PreferenceVector({0.5, 0.5}), ll, derive_stream(1, "selftest"));
    check("epo reaches the balanced quadratic optimum",
          std::fabs(trace.final_weights[0] - 1.0) < 1e-3);
  }
  {
    SupernetDims dims;
    dims.backbone_depth = 3;
    dims.hidden = 4;
    dims.feature_dim = 3;
    dims.node_classes = 3;
    dims.graph_classes = 2;
    dims.tasks = {Task::kGc, Task::kNc, Task::kLp};
    check("supernet genome length", dims.genome_length() == 15);
    check("search space counts", search_space_counts(3).first == 2320ull);
  }
  return failures;
}

}  // namespace blmol::cli
