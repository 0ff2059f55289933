// ne3: command-line front end.
//
//   ne3 run --config cfg.json [--out DIR] [--threads N] [--seed-offset N] [--maze-ascii]
//   ne3 aggregate a.csv b.csv [--out summary.csv]
//   ne3 plot-data --input neural_e3=a.csv --input ue2=b.csv [--out plot.csv]
//   ne3 misfit-lab [--states 4 --actions 2 --horizon 3 --models 12 --seed 0]
//   ne3 dreem [--horizon 3 --perturbations 30 --epsilon 0.5 --seed 0] [--empirical] [--doubling]
//
// Exit codes: 0 success, 2 bad config or input, 3 agent failure, 1 anything else.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ne3/dreem.hpp"
#include "ne3/env/combolock.hpp"
#include "ne3/harness.hpp"
#include "ne3/lab.hpp"

using namespace ne3;

namespace {

constexpr int kExitSchema = 2;
constexpr int kExitAgent = 3;

// Writes to `path`, or stdout when it is empty.
template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  write(out);
}

nlohmann::json dreem_report(const dreem::DreemResult& r, const ModelClass& cls) {
  const auto& actions = std::get<Policy::OpenLoop>(r.exploit_policy.rule()).actions;
  const auto& s = r.version_space.surviving;
  return {{"exploit_policy", actions},
          {"exploit_index", r.exploit_index},
          {"chosen_model", r.chosen_model},
          {"rounds", r.rounds},
          {"trajectories_used", r.trajectories_used},
          {"episodes_used", r.episodes_used},
          {"final_versionspace_size", r.final_versionspace_size},
          {"truth_survived", std::find(s.begin(), s.end(), *cls.truth_index) != s.end()},
          {"value_gap", r.value_gap ? nlohmann::json(*r.value_gap) : nlohmann::json()},
          {"anomaly", r.anomaly}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disagreement-driven explore-exploit experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int threads = 0;
  std::uint64_t seed_offset = 0;
  bool maze_ascii = false;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("--config", config_path, "Experiment JSON")->required();
  run->add_option("--out", out_dir, "Output directory (overrides config and NE3_OUT_DIR)");
  run->add_option("--threads", threads, "Seed workers (overrides config and NE3_THREADS)")->check(CLI::PositiveNumber);
  run->add_option("--seed-offset", seed_offset, "Added to every seed");
  run->add_flag("--maze-ascii", maze_ascii, "Print every generated maze to stderr");

  std::vector<std::string> csvs;
  std::string out_file;
  auto* agg = app.add_subcommand("aggregate", "Per-episode median, min and max across seeds");
  agg->add_option("csv", csvs, "Run CSVs")->required();
  agg->add_option("--out", out_file, "Summary CSV (default stdout)");

  std::vector<std::string> inputs;
  auto* plot = app.add_subcommand("plot-data", "Plot-ready long CSV for several methods");
  plot->add_option("--input", inputs, "label=path, repeatable")->required();
  plot->add_option("--out", out_file, "Output CSV (default stdout)");

  lab::LabConfig lab_cfg;
  auto* lab_cmd = app.add_subcommand("misfit-lab", "Misfit-matrix ranks and property checks as JSON");
  lab_cmd->add_option("--states", lab_cfg.num_states)->check(CLI::Range(2, 8));
  lab_cmd->add_option("--actions", lab_cfg.num_actions)->check(CLI::Range(1, 4));
  lab_cmd->add_option("--horizon", lab_cfg.horizon)->check(CLI::Range(1, 5));
  lab_cmd->add_option("--models", lab_cfg.models)->check(CLI::Range(1, 200));
  lab_cmd->add_option("--disagreement-instances", lab_cfg.disagreement_instances)->check(CLI::NonNegativeNumber);
  lab_cmd->add_option("--slab-trials", lab_cfg.slab_trials)->check(CLI::NonNegativeNumber);
  lab_cmd->add_option("--seed", lab_cfg.seed);
  lab_cmd->add_option("--out", out_file, "Report path (default stdout)");

  int horizon = 3, perturbations = 30;
  std::uint64_t seed = 0;
  dreem::DreemConfig dc;
  bool empirical = false, doubling = false;
  auto* dreem_cmd = app.add_subcommand("dreem", "Version-space elimination on the combination lock's latent model");
  dreem_cmd->add_option("--horizon", horizon)->check(CLI::Range(2, 5));
  dreem_cmd->add_option("--perturbations", perturbations)->check(CLI::NonNegativeNumber);
  dreem_cmd->add_option("--epsilon", dc.epsilon);
  dreem_cmd->add_option("--phi", dc.phi);
  dreem_cmd->add_option("--n", dc.n);
  dreem_cmd->add_option("--delta", dc.delta);
  dreem_cmd->add_option("--seed", seed);
  dreem_cmd->add_flag("--empirical", empirical, "Estimate misfits from simulated episodes");
  dreem_cmd->add_flag("--doubling", doubling, "Guess the rank with the doubling schedule");
  dreem_cmd->add_option("--out", out_file, "Report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitSchema;
  }

  try {
    if (*run) {
      const auto config = harness::load_config(config_path);
      harness::RunOptions opt;
      if (!out_dir.empty()) opt.out_dir = out_dir;
      if (threads > 0) opt.threads = threads;
      opt.seed_offset = seed_offset;
      if (maze_ascii) opt.maze_ascii = &std::cerr;
      opt = harness::with_environment_overrides(opt);
      const auto result = harness::run_experiment(config, opt);
      std::cout << result.csv.string() << '\n' << result.manifest.string() << '\n';
    } else if (*agg) {
      std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
      const auto rows = harness::aggregate(paths);
      emit(out_file, [&](std::ostream& o) { harness::write_summary(o, rows); });
    } else if (*plot) {
      std::vector<harness::LabeledInput> labeled;
      for (const auto& in : inputs) {
        const auto eq = in.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--input expects label=path, got '" + in + "'");
        labeled.push_back({in.substr(0, eq), in.substr(eq + 1)});
      }
      emit(out_file, [&](std::ostream& o) { harness::write_plot_data(o, labeled); });
    } else if (*lab_cmd) {
      const auto report = lab::misfit_lab_report(lab_cfg);
      emit(out_file, [&](std::ostream& o) { o << report.dump(2) << '\n'; });
    } else if (*dreem_cmd) {
      dc.oracle_misfit = !empirical;
      dc.validate();
      Rng rng(seed);
      env::CombolockConfig lc;
      lc.horizon = horizon;
      lc.env_seed = seed;
      const auto truth = env::true_tabular_model(lc);
      const auto cls = dreem::perturbed_class(truth, static_cast<std::size_t>(perturbations), rng);
      const auto policies = all_open_loop_policies(truth.num_actions(), truth.horizon());
      nlohmann::json report;
      if (doubling) {
        const double beta = dreem::estimate_beta(policies, cls, truth);
        const auto d = dreem::doubling_run(cls, policies, truth, dc.epsilon, dc.delta, beta, dc, rng);
        report = dreem_report(d.result, cls);
        report["outer_iterations"] = d.outer_iterations;
        report["beta"] = beta;
      } else {
        report = dreem_report(dreem::dreem_run(cls, policies, truth, dc, rng), cls);
      }
      report["effective_rank"] = dreem::effective_rank(policies, cls, truth);
      report["class_size"] = cls.size();
      emit(out_file, [&](std::ostream& o) { o << report.dump(2) << '\n'; });
    }
  } catch (const harness::AgentFailureError& e) {
    std::cerr << "agent failure: " << e.what() << '\n';
    return kExitAgent;
  } catch (const EliminationFailureError& e) {
    std::cerr << "agent failure: " << e.what() << '\n';
    return kExitAgent;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const AlignmentError& e) {
    std::cerr << "alignment error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
