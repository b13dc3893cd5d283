#pragma once

// Batch commands behind the `spdctomo` executable. Each command reads an
// INI config, writes its outputs plus manifest.json into an output
// directory, and throws on any error.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spdctomo/io.hpp"

namespace spdctomo::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string subcommand;
  std::vector<std::string> inputs;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::string tool_version = kToolVersion;
  std::string timestamp;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

inline void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                           std::vector<std::string> inputs, std::optional<std::uint64_t> seed) {
  RunManifest m;
  m.subcommand = subcommand;
  m.inputs = std::move(inputs);
  m.output_dir = out_dir.string();
  m.seed = seed;
  m.timestamp = utc_timestamp();
  nlohmann::json j;
  j["subcommand"] = m.subcommand;
  j["inputs"] = m.inputs;
  j["output_dir"] = m.output_dir;
  j["seed"] = m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr);
  j["tool_version"] = m.tool_version;
  j["timestamp"] = m.timestamp;
  write_text(out_dir / "manifest.json", j.dump(2) + "\n");
}

struct CommonOptions {
  std::optional<fs::path> config;
  fs::path out = "out";
  std::optional<std::string> preset;  // crystal preset name
  std::optional<std::uint64_t> seed;
};

inline ConfigTree load_tree(const CommonOptions& o) {
  return o.config ? read_config(*o.config) : ConfigTree{};
}

inline std::vector<std::string> input_list(const CommonOptions& o) {
  std::vector<std::string> v;
  if (o.config) v.push_back(o.config->string());
  if (o.preset) v.push_back("preset:" + *o.preset);
  return v;
}

inline CrystalParams crystal_from(const ConfigTree& tree, const CommonOptions& o) {
  ConfigTree section = tree.get_child("crystal", ConfigTree{});
  if (o.preset && !section.get_optional<std::string>("preset")) section.put("preset", *o.preset);
  if (section.empty()) throw ConfigError("crystal", "missing [crystal] section or --preset");
  return crystal_from_config(section);
}

inline std::optional<CompensatorParams> compensator_from(const ConfigTree& tree,
                                                         const ConfigTree& cmd_section,
                                                         const CrystalParams& crystal) {
  if (!get_bool(cmd_section, "compensate").value_or(false)) return std::nullopt;
  auto sec = tree.get_child_optional("compensator");
  if (!sec) throw ConfigError("compensator", "compensate = true but no [compensator] section");
  return compensator_from_config(*sec, crystal.degenerate_wavelength_nm());
}

// Omega axis from either omega_min/omega_max (rad/s) or signal wavelength
// bounds (nm).
inline AxisRange omega_axis_from(const ConfigTree& s, const CrystalParams& crystal,
                                 const std::string& prefix, const std::string& points_key) {
  AxisRange r;
  r.points = static_cast<int>(get_number(s, points_key).value_or(2));
  if (get_number(s, "omega_min") || get_number(s, "omega_max")) {
    r.min = require_number(s, "omega_min");
    r.max = require_number(s, "omega_max");
    return r;
  }
  const double lmin = require_number(s, "signal_wavelength_min");
  const double lmax = require_number(s, "signal_wavelength_max");
  if (!(lmin > 0.0)) throw ConfigError(prefix + "signal_wavelength_min", "must be > 0");
  if (!(lmax >= lmin)) throw ConfigError(prefix + "signal_wavelength_max", "must be >= min");
  r.min = SidebandMode::from_signal_wavelength(lmax, 0.0, crystal.pump_wavelength_nm).omega;
  r.max = SidebandMode::from_signal_wavelength(lmin, 0.0, crystal.pump_wavelength_nm).omega;
  if (lmin == lmax) r.max = r.min;
  return r;
}

inline void check_axis(const AxisRange& r, const std::string& key) {
  try {
    (void)r.values();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

// ---------------------------------------------------------------------------

inline PhaseMapGrid cmd_phase_map(const CommonOptions& o) {
  const ConfigTree tree = load_tree(o);
  const CrystalParams crystal = crystal_from(tree, o);
  const ConfigTree grid = tree.get_child("grid", ConfigTree{});
  const AxisRange w = omega_axis_from(grid, crystal, "grid.", "omega_points");
  check_axis(w, "grid.omega_points");
  AxisRange t;
  t.min = deg_to_rad(get_number(grid, "theta_min").value_or(0.0));
  t.max = deg_to_rad(get_number(grid, "theta_max").value_or(0.0));
  t.points = static_cast<int>(get_number(grid, "theta_points").value_or(1));
  check_axis(t, "grid.theta_points");
  const auto comp = compensator_from(tree, grid, crystal);

  const PhaseMapGrid g = phase_amplitude_grid(crystal, w, t, comp);
  write_text(o.out / "phase_map.csv", phase_map_csv(g, crystal.pump_wavelength_nm));
  write_manifest(o.out, "phase-map", input_list(o), std::nullopt);
  return g;
}

inline ScanResult cmd_scan(const CommonOptions& o) {
  const ConfigTree tree = load_tree(o);
  const CrystalParams crystal = crystal_from(tree, o);
  const auto sec_opt = tree.get_child_optional("scan");
  if (!sec_opt) throw ConfigError("scan", "missing [scan] section");
  const ConfigTree& s = *sec_opt;

  ScanConfig cfg;
  const std::string axis = get_string(s, "axis").value_or("angular");
  if (axis == "angular") {
    cfg.axis = ScanAxis::angular;
  } else if (axis == "frequency") {
    cfg.axis = ScanAxis::frequency;
  } else {
    throw ConfigError("scan.axis", "expected 'angular' or 'frequency', got '" + axis + "'");
  }
  const std::string basis = get_string(s, "basis").value_or("diagonal");
  if (basis == "natural") {
    cfg.basis = ScanBasis::natural;
  } else if (basis == "diagonal") {
    cfg.basis = ScanBasis::diagonal;
  } else {
    throw ConfigError("scan.basis", "expected 'natural' or 'diagonal', got '" + basis + "'");
  }
  cfg.n0 = get_number(s, "n0").value_or(1.0) * get_number(s, "scale").value_or(1.0);
  if (!(cfg.n0 > 0.0)) throw ConfigError("scan.n0", "must be > 0");

  const double smear = get_number(s, "smearing").value_or(0.0);
  if (!(smear >= 0.0)) throw ConfigError("scan.smearing", "must be >= 0");
  if (cfg.axis == ScanAxis::angular) {
    const double lam = get_number(s, "fixed_signal_wavelength")
                           .value_or(crystal.degenerate_wavelength_nm());
    cfg.fixed = SidebandMode::from_signal_wavelength(lam, 0.0, crystal.pump_wavelength_nm).omega;
    cfg.range.min = deg_to_rad(require_number(s, "theta_min"));
    cfg.range.max = deg_to_rad(require_number(s, "theta_max"));
    cfg.range.points = static_cast<int>(get_number(s, "points").value_or(101));
    cfg.smearing_width = deg_to_rad(smear);
  } else {
    cfg.fixed = deg_to_rad(get_number(s, "fixed_theta").value_or(0.0));
    cfg.range = omega_axis_from(s, crystal, "scan.", "points");
    if (!get_number(s, "points")) cfg.range.points = 101;
    // Smearing width given in nm of signal wavelength at degeneracy.
    const double lam0 = crystal.degenerate_wavelength_nm();
    cfg.smearing_width = kTwoPi * kSpeedOfLight * smear * 1e-9 / std::pow(lam0 * 1e-9, 2);
  }
  if (cfg.range.points < 2) throw ConfigError("scan.points", "must be >= 2");
  if (!(cfg.range.max > cfg.range.min)) {
    throw ConfigError(cfg.axis == ScanAxis::angular ? "scan.theta_max" : "scan.signal_wavelength_max",
                      "empty scan range");
  }
  cfg.compensator = compensator_from(tree, s, crystal);

  const ScanResult r = run_scan(cfg, crystal);
  write_text(o.out / "scan.csv", scan_csv(r));

  nlohmann::json side;
  side["axis"] = axis;
  side["axis_units"] = cfg.axis == ScanAxis::angular ? "rad" : "rad/s";
  side["basis"] = basis;
  side["fixed"] = cfg.fixed;
  side["range"] = {cfg.range.min, cfg.range.max};
  side["points"] = cfg.range.points;
  side["n0"] = cfg.n0;
  side["smearing_width"] = cfg.smearing_width;
  side["crystal"] = {{"length_L_mm", crystal.length_mm},
                     {"cut_angle_deg", rad_to_deg(crystal.cut_angle)},
                     {"pump_wavelength_nm", crystal.pump_wavelength_nm},
                     {"D", crystal.D},
                     {"B", crystal.B}};
  if (cfg.compensator) {
    side["compensator"] = {{"length_mm", cfg.compensator->length_mm},
                           {"axis_angle_deg", rad_to_deg(cfg.compensator->axis_angle)},
                           {"D_c", cfg.compensator->D_c},
                           {"B_c", cfg.compensator->B_c},
                           {"phase_offset", cfg.compensator->phase_offset}};
  } else {
    side["compensator"] = nullptr;
  }
  write_text(o.out / "scan.json", side.dump(2) + "\n");
  write_manifest(o.out, "scan", input_list(o), std::nullopt);
  return r;
}

inline TomographyDataset cmd_simulate(const CommonOptions& o) {
  const ConfigTree tree = load_tree(o);
  const auto sec_opt = tree.get_child_optional("simulate");
  if (!sec_opt) throw ConfigError("simulate", "missing [simulate] section");
  const ConfigTree& s = *sec_opt;

  const double n0 = require_number(s, "n0");
  if (!(n0 > 0.0)) throw ConfigError("simulate.n0", "must be > 0");
  const double time = require_number(s, "acquisition_time");
  if (!(time > 0.0)) throw ConfigError("simulate.acquisition_time", "must be > 0");
  const double bg = get_number(s, "background").value_or(0.0);
  if (!(bg >= 0.0)) throw ConfigError("simulate.background", "must be >= 0");
  const bool noiseless = get_bool(s, "noiseless").value_or(false);

  std::vector<std::string> inputs = input_list(o);
  std::optional<DensityMatrix> rho;
  if (auto state = get_string(s, "state")) {
    fs::path p(*state);
    if (p.is_relative() && o.config) p = o.config->parent_path() / p;
    try {
      rho = DensityMatrix::physical(read_density_matrix(p));
    } catch (const std::exception& e) {
      throw ConfigError("simulate.state", e.what());
    }
    inputs.push_back(p.string());
  } else {
    const CrystalParams crystal = crystal_from(tree, o);
    const double lam = require_number(s, "signal_wavelength");
    if (!(lam > 0.0)) throw ConfigError("simulate.signal_wavelength", "must be > 0");
    const SidebandMode mode = SidebandMode::from_signal_wavelength(
        lam, deg_to_rad(get_number(s, "theta").value_or(0.0)), crystal.pump_wavelength_nm);
    BandFilter filter;
    filter.freq_fwhm_nm = get_number(s, "freq_fwhm").value_or(0.0);
    filter.angular_width = deg_to_rad(get_number(s, "angular_width").value_or(0.0));
    if (!(filter.freq_fwhm_nm >= 0.0)) throw ConfigError("simulate.freq_fwhm", "must be >= 0");
    if (!(filter.angular_width >= 0.0)) {
      throw ConfigError("simulate.angular_width", "must be >= 0");
    }
    const int q = static_cast<int>(
        get_number(s, "quadrature_points").value_or(kDefaultQuadraturePoints));
    if (q < 1) throw ConfigError("simulate.quadrature_points", "must be >= 1");
    const auto comp = compensator_from(tree, s, crystal);
    rho = band_averaged_state(crystal, mode, filter, comp, q);
  }

  TomographyDataset d;
  if (noiseless) {
    d = expected_dataset(*rho, n0, time, bg);
  } else {
    if (!o.seed) throw ConfigError("seed", "simulate needs --seed unless noiseless = true");
    d = simulate_counts(*rho, n0, time, *o.seed, bg);
  }
  write_text(o.out / "dataset.csv", dataset_csv(d));
  write_density_matrix(o.out / "true_state.json", rho->matrix());
  write_manifest(o.out, "simulate", inputs, o.seed);
  return d;
}

inline nlohmann::json result_json(const ReconstructionResult& r) {
  nlohmann::json j;
  j["log_likelihood"] = r.log_likelihood;
  j["intensity"] = r.intensity;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["purity"] = r.metrics.purity;
  j["fidelity"] = r.metrics.fidelity ? nlohmann::json(*r.metrics.fidelity) : nlohmann::json(nullptr);
  j["raw_min_eigenvalue"] = r.rho_raw.min_eigenvalue();
  j["raw_physical"] = r.rho_raw.min_eigenvalue() >= -DensityMatrix::kEigenFloor;
  return j;
}

struct ReconstructOptions {
  fs::path dataset;
  std::optional<fs::path> target;
  fs::path out = "out";
  LikelihoodModel model = LikelihoodModel::poisson;
};

inline ReconstructionResult cmd_reconstruct(const ReconstructOptions& o) {
  const TomographyDataset d = read_dataset(o.dataset);
  std::optional<DensityMatrix> target;
  std::vector<std::string> inputs{o.dataset.string()};
  if (o.target) {
    target = DensityMatrix::physical(read_density_matrix(*o.target));
    inputs.push_back(o.target->string());
  }
  MleOptions mo;
  mo.model = o.model;
  const ReconstructionResult r = mle_reconstruct(d, mo, target);
  write_density_matrix(o.out / "rho_raw.json", r.rho_raw.matrix());
  write_density_matrix(o.out / "rho_mle.json", r.rho_mle.matrix());
  write_text(o.out / "reconstruction.json", result_json(r).dump(2) + "\n");
  write_manifest(o.out, "reconstruct", inputs, std::nullopt);
  return r;
}

// Purity of each matrix and pairwise fidelities.
inline nlohmann::json cmd_metrics(const std::vector<fs::path>& paths,
                                  const std::optional<fs::path>& out = std::nullopt) {
  if (paths.empty()) throw std::invalid_argument("metrics: no matrix files given");
  std::vector<DensityMatrix> mats;
  nlohmann::json j;
  j["matrices"] = nlohmann::json::array();
  for (const auto& p : paths) {
    mats.push_back(DensityMatrix::raw(read_density_matrix(p)));
    const auto& m = mats.back();
    j["matrices"].push_back({{"path", p.string()},
                             {"purity", purity(m)},
                             {"min_eigenvalue", m.min_eigenvalue()}});
  }
  j["fidelity"] = nlohmann::json::array();
  for (std::size_t a = 0; a < mats.size(); ++a) {
    for (std::size_t b = a; b < mats.size(); ++b) {
      if (a == b && mats.size() > 1) continue;
      j["fidelity"].push_back(
          {{"a", paths[a].string()}, {"b", paths[b].string()}, {"value", fidelity(mats[a], mats[b])}});
    }
  }
  if (out) {
    write_text(*out / "metrics.json", j.dump(2) + "\n");
    std::vector<std::string> inputs;
    for (const auto& p : paths) inputs.push_back(p.string());
    write_manifest(*out, "metrics", inputs, std::nullopt);
  }
  return j;
}

}  // namespace spdctomo::cli
