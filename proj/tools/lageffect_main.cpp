#include <CLI11.hpp>
#include <cstdint>
#include <iostream>

#include "lageffect/config.hpp"
#include "lageffect/panel.hpp"
#include "lageffect/simulate.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Doubly robust lag-effect estimation for sequential service systems"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads,
                 "worker threads (default: LAGEFFECT_THREADS env var, else 1)");

  std::string analyze_config;
  auto* analyze = app.add_subcommand("analyze", "estimate lag effects from a panel CSV");
  analyze->add_option("--config", analyze_config, "analysis config file")->required();

  std::string study_config;
  auto* study = app.add_subcommand("study", "run a simulation study against a scenario");
  study->add_option("--config", study_config, "study config file")->required();

  std::string sim_scenario, sim_out;
  int sim_panels = 100;
  std::uint64_t sim_seed = 1;
  auto* simulate = app.add_subcommand("simulate", "export synthetic panels to CSV");
  simulate->add_option("--scenario", sim_scenario, "scenario file")->required();
  simulate->add_option("--panels", sim_panels, "number of panels")->required();
  simulate->add_option("--seed", sim_seed, "RNG seed")->required();
  simulate->add_option("--out", sim_out, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) {
      lageffect::AnalysisConfig config = lageffect::AnalysisConfig::from_file(analyze_config);
      if (threads > 0) config.threads = threads;
      for (const auto& path : lageffect::run_analysis(config)) {
        std::cout << "wrote " << path << '\n';
      }
    } else if (*study) {
      lageffect::StudyConfig config = lageffect::StudyConfig::from_file(study_config);
      if (threads > 0) config.threads = threads;
      for (const auto& path : lageffect::run_study(config)) {
        std::cout << "wrote " << path << '\n';
      }
    } else if (*simulate) {
      const auto scenario = lageffect::ScenarioSpec::from_file(sim_scenario);
      const auto panels = lageffect::simulate_panels(scenario, sim_panels, sim_seed);
      lageffect::write_panels_file(panels, sim_out);
      std::cout << "wrote " << sim_out << '\n';
    }
  } catch (const lageffect::Error& e) {
    std::cerr << "error: category=" << e.category() << " message=" << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: category=internal message=" << e.what() << '\n';
    return 2;
  }
  return 0;
}
