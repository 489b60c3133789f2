#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blmol/errors.hpp"
#include "config.hpp"
#include "stages.hpp"

namespace {

using namespace blmol;
using namespace blmol::cli;

struct CommonArgs {
  std::string config_path;
  std::int64_t seed = -1;
  int jobs = 0;
  std::string out;
  bool resume = false;
};

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig config = load_config(args.config_path);
  if (args.seed >= 0) {
    config.seed = static_cast<std::uint64_t>(args.seed);
    config.seed_set = true;
  }
  if (!config.seed_set) {
    throw ConfigError("config: seed: required (set it in the config or pass --seed)");
  }
  if (args.jobs > 0) config.jobs = args.jobs;
  if (!args.out.empty()) config.out = args.out;
  if (config.out.empty()) {
    throw ConfigError("config: out: required (set it in the config or pass --out)");
  }
  return config;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Run configuration (JSON)")->required();
  cmd->add_option("--seed", args.seed, "Random seed (overrides the config)");
  cmd->add_option("--jobs", args.jobs, "Worker threads (does not change results)");
  cmd->add_option("--out", args.out, "Run directory (overrides the config)");
  cmd->add_flag("--resume", args.resume, "Skip stages whose outputs match the config hashes");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-level multi-objective learning toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  const std::vector<std::pair<std::string, std::string>> stage_commands = {
      {"gen-data", "Generate the synthetic multi-task graph dataset"},
      {"sample", "Train the sampled (genotype, preference) pairs and write samples.csv"},
      {"fit", "Cross-validate and select one surrogate per objective"},
      {"search", "Surrogate-driven evolutionary search over the mixed genotype"},
      {"realize", "Retrain the archive members closest to the preference targets"},
      {"baseline", "Run the configured variant end to end"},
  };
  for (const auto& [name, help] : stage_commands) {
    add_common(app.add_subcommand(name, help), args);
  }

  std::vector<std::string> report_dirs;
  std::string report_ref;
  std::string report_out = "report";
  CLI::App* report = app.add_subcommand("report", "Aggregate realized runs into report tables");
  report->add_option("dirs", report_dirs, "Run directories")->required()->expected(-1);
  report->add_option("--ref", report_ref,
                     "Hypervolume reference point, comma-separated display-orientation values")
      ->required();
  report->add_option("--out", report_out, "Output directory for report.csv / hv_table.csv");

  app.add_subcommand("selftest", "Quick internal checks");

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [name, help] : stage_commands) {
      (void)help;
      if (!app.get_subcommand(name)->parsed()) continue;
      const RunConfig config = resolve_config(args);
      if (name == "gen-data") {
        stage_gen_data(config, config.out, args.resume);
      } else if (name == "sample") {
        stage_sample(config, config.out, args.resume);
      } else if (name == "fit") {
        stage_fit(config, config.out, args.resume);
      } else if (name == "search") {
        stage_search(config, config.out, args.resume);
      } else if (name == "realize") {
        stage_realize(config, config.out, args.resume);
      } else if (name == "baseline") {
        stage_baseline(config, config.out, args.resume);
      }
      return 0;
    }
    if (report->parsed()) {
      std::vector<double> ref;
      std::stringstream ss(report_ref);
      std::string tok;
      while (std::getline(ss, tok, ',')) ref.push_back(std::stod(tok));
      stage_report(report_dirs, ref, report_out);
      return 0;
    }
    if (app.get_subcommand("selftest")->parsed()) {
      return run_selftest() == 0 ? 0 : 4;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const MissingStageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
