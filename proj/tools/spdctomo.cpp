#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spdctomo/cli.hpp"

namespace cli = spdctomo::cli;

int main(int argc, char** argv) {
  CLI::App app{"Sideband-resolved SPDC polarization tomography toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cli::kToolVersion));

  cli::CommonOptions common;
  std::string config, out = "out", preset, target;
  std::uint64_t seed = 0;
  std::vector<std::string> matrices;
  std::string likelihood = "poisson";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--preset", preset, "crystal preset name");
  };

  auto* phase_map = app.add_subcommand("phase-map", "phase/amplitude map over (omega, theta)");
  add_common(phase_map);
  auto* scan = app.add_subcommand("scan", "angular or frequency interference scan");
  add_common(scan);
  auto* simulate = app.add_subcommand("simulate", "synthesize a J16 tomography dataset");
  add_common(simulate);
  simulate->add_option("--seed", seed, "RNG seed for Poisson counts");

  auto* reconstruct = app.add_subcommand("reconstruct", "linear inversion + maximum likelihood");
  std::string dataset;
  reconstruct->add_option("dataset", dataset, "dataset CSV")->required()->check(CLI::ExistingFile);
  reconstruct->add_option("--target", target, "target density matrix JSON")
      ->check(CLI::ExistingFile);
  reconstruct->add_option("--out", out, "output directory");
  reconstruct->add_option("--likelihood", likelihood, "poisson | gaussian")
      ->check(CLI::IsMember({"poisson", "gaussian"}));

  auto* metrics = app.add_subcommand("metrics", "purity and pairwise fidelity of matrices");
  metrics->add_option("matrices", matrices, "density matrix JSON files")
      ->required()
      ->check(CLI::ExistingFile);
  auto* metrics_out = metrics->add_option("--out", out, "also write metrics.json here");

  auto* j16 = app.add_subcommand("j16-table", "print the J16 waveplate table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (!config.empty()) common.config = config;
  if (!preset.empty()) common.preset = preset;
  common.out = out;
  if (simulate->count("--seed") > 0) common.seed = seed;

  try {
    if (*phase_map) {
      const auto g = cli::cmd_phase_map(common);
      std::cout << "wrote " << (common.out / "phase_map.csv").string() << " ("
                << g.theta_axis.size() * g.omega_axis.size() << " points)\n";
    } else if (*scan) {
      const auto r = cli::cmd_scan(common);
      std::cout << "wrote " << (common.out / "scan.csv").string() << " (" << r.points.size()
                << " points)\n";
    } else if (*simulate) {
      cli::cmd_simulate(common);
      std::cout << "wrote " << (common.out / "dataset.csv").string() << "\n";
    } else if (*reconstruct) {
      cli::ReconstructOptions ro;
      ro.dataset = dataset;
      if (!target.empty()) ro.target = target;
      ro.out = out;
      ro.model = likelihood == "gaussian" ? spdctomo::LikelihoodModel::gaussian
                                          : spdctomo::LikelihoodModel::poisson;
      const auto r = cli::cmd_reconstruct(ro);
      std::cout << cli::result_json(r).dump(2) << "\n";
      if (!r.converged) {
        std::cerr << "warning: maximum-likelihood search did not converge\n";
        return 3;
      }
    } else if (*j16) {
      std::cout << spdctomo::j16_csv();
    } else if (*metrics) {
      std::vector<spdctomo::fs::path> paths(matrices.begin(), matrices.end());
      std::optional<spdctomo::fs::path> dest;
      if (metrics_out->count() > 0) dest = out;
      std::cout << cli::cmd_metrics(paths, dest).dump(2) << "\n";
    }
  } catch (const spdctomo::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
