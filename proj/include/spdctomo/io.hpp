#pragma once

// File formats: INI-style configs and presets, Sellmeier data, CSV tables,
// and JSON density matrices.

#include <array>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "spdctomo/polarization_optics.hpp"
#include "spdctomo/scans.hpp"
#include "spdctomo/sellmeier.hpp"
#include "spdctomo/spdc_model.hpp"
#include "spdctomo/states.hpp"
#include "spdctomo/tomography.hpp"

#ifndef SPDCTOMO_DEFAULT_DATA_DIR
#define SPDCTOMO_DEFAULT_DATA_DIR ""
#endif

namespace spdctomo {

namespace fs = std::filesystem;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// Shortest decimal form that round-trips.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------------------
// Config tree

using ConfigTree = boost::property_tree::ptree;

inline ConfigTree read_config(const fs::path& path) {
  ConfigTree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(path.string(), e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  return tree;
}

inline std::optional<std::string> get_string(const ConfigTree& t, const std::string& key) {
  if (auto v = t.get_optional<std::string>(key)) {
    std::string s = *v;
    // Strip trailing inline comments.
    if (auto pos = s.find_first_of(";#"); pos != std::string::npos) s.erase(pos);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
  }
  return std::nullopt;
}

inline std::optional<double> get_number(const ConfigTree& t, const std::string& key) {
  auto s = get_string(t, key);
  if (!s) return std::nullopt;
  auto v = parse_double(*s);
  if (!v || !std::isfinite(*v)) throw ConfigError(key, "expected a number, got '" + *s + "'");
  return v;
}

inline double require_number(const ConfigTree& t, const std::string& key) {
  auto v = get_number(t, key);
  if (!v) throw ConfigError(key, "missing required value");
  return *v;
}

inline std::optional<bool> get_bool(const ConfigTree& t, const std::string& key) {
  auto s = get_string(t, key);
  if (!s) return std::nullopt;
  if (*s == "true" || *s == "1" || *s == "yes") return true;
  if (*s == "false" || *s == "0" || *s == "no") return false;
  throw ConfigError(key, "expected true/false, got '" + *s + "'");
}

// ---------------------------------------------------------------------------
// Preset search path: $SPDCTOMO_PRESET_PATH (':'-separated), then the
// installed data directory.

inline std::vector<fs::path> preset_search_path() {
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("SPDCTOMO_PRESET_PATH")) {
    std::stringstream ss(env);
    std::string item;
    while (std::getline(ss, item, ':')) {
      if (!item.empty()) dirs.emplace_back(item);
    }
  }
  if (std::string(SPDCTOMO_DEFAULT_DATA_DIR).size() > 0) {
    dirs.emplace_back(fs::path(SPDCTOMO_DEFAULT_DATA_DIR) / "presets");
  }
  return dirs;
}

inline fs::path find_data_file(const std::string& filename) {
  for (const auto& d : preset_search_path()) {
    const fs::path p = d / filename;
    if (fs::exists(p)) return p;
  }
  throw ConfigError(filename, "not found in preset search path (set SPDCTOMO_PRESET_PATH)");
}

// ---------------------------------------------------------------------------
// Sellmeier data: one section per set.
//
//   [bbo_kato1986_o]
//   constant = 2.7359
//   poles = 0.01878:0.01822          ; p:q pairs, comma separated
//   resonances = 1.07044083:1.00585997e-2
//   lambda2 = -0.01354

inline std::vector<SellmeierTerm> parse_terms(const std::string& key, const std::string& s) {
  std::vector<SellmeierTerm> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError(key, "expected strength:pole pairs");
    auto a = parse_double(item.substr(0, colon));
    auto b = parse_double(item.substr(colon + 1));
    if (!a || !b) throw ConfigError(key, "malformed term '" + item + "'");
    out.push_back({*a, *b});
  }
  return out;
}

inline SellmeierSet load_sellmeier_set(const std::string& name,
                                       const std::optional<fs::path>& file = std::nullopt) {
  const fs::path path = file ? *file : find_data_file("sellmeier.ini");
  const ConfigTree tree = read_config(path);
  const auto sec = tree.get_child_optional(name);
  if (!sec) throw ConfigError(name, "no such Sellmeier set in " + path.string());
  SellmeierSet s;
  s.name = name;
  s.constant = require_number(*sec, "constant");
  if (auto v = get_string(*sec, "poles"); v && !v->empty()) {
    s.poles = parse_terms(name + ".poles", *v);
  }
  if (auto v = get_string(*sec, "resonances"); v && !v->empty()) {
    s.resonances = parse_terms(name + ".resonances", *v);
  }
  s.lambda2 = get_number(*sec, "lambda2").value_or(0.0);
  return s;
}

// ---------------------------------------------------------------------------
// Crystal / compensator sections. Lengths in mm, angles in degrees,
// wavelengths in nm, D in s/m, B in rad/m per rad.

inline ConfigTree merged_with_preset(const ConfigTree& section, const std::string& prefix,
                                     const std::string& section_name) {
  auto preset = get_string(section, "preset");
  if (!preset) return section;
  const fs::path p = find_data_file(*preset + ".ini");
  const ConfigTree ptree = read_config(p);
  auto base = ptree.get_child_optional(section_name);
  if (!base) throw ConfigError(prefix + "preset", "preset has no [" + section_name + "] section");
  ConfigTree merged = *base;
  for (const auto& [k, v] : section) {
    if (k != "preset") merged.put_child(k, v);
  }
  return merged;
}

inline CrystalParams crystal_from_config(const ConfigTree& raw_section) {
  const ConfigTree s = merged_with_preset(raw_section, "crystal.", "crystal");
  CrystalParams c;
  c.length_mm = require_number(s, "length_L");
  c.cut_angle = deg_to_rad(require_number(s, "cut_angle"));
  c.pump_wavelength_nm = require_number(s, "pump_wavelength");
  if (!(c.length_mm > 0.0)) throw ConfigError("crystal.length_L", "must be > 0");
  if (!(c.pump_wavelength_nm > 0.0)) throw ConfigError("crystal.pump_wavelength", "must be > 0");
  if (!(c.cut_angle > 0.0 && c.cut_angle < kPi / 2)) {
    throw ConfigError("crystal.cut_angle", "must lie in (0, 90) degrees");
  }
  auto so = get_string(s, "sellmeier_o");
  auto se = get_string(s, "sellmeier_e");
  if (so.has_value() != se.has_value()) {
    throw ConfigError(so ? "crystal.sellmeier_e" : "crystal.sellmeier_o",
                      "both Sellmeier sets must be given together");
  }
  if (so) {
    c.material = UniaxialMaterial{load_sellmeier_set(*so), load_sellmeier_set(*se)};
  }
  auto d = get_number(s, "D");
  auto b = get_number(s, "B");
  if (d.has_value() != b.has_value()) {
    throw ConfigError(d ? "crystal.B" : "crystal.D", "D and B must be given together");
  }
  if (d) {
    c.D = *d;
    c.B = *b;
  } else if (c.material) {
    const auto coeff = crystal_dispersion(*c.material, c.cut_angle, c.degenerate_wavelength_nm());
    c.D = coeff.D;
    c.B = coeff.B;
  } else {
    throw ConfigError("crystal.D", "missing: give D and B or Sellmeier sets");
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("crystal.D", e.what());
  }
  return c;
}

inline CompensatorParams compensator_from_config(const ConfigTree& raw_section,
                                                 double center_wavelength_nm) {
  const ConfigTree s = merged_with_preset(raw_section, "compensator.", "compensator");
  const double length = require_number(s, "length");
  if (!(length >= 0.0)) throw ConfigError("compensator.length", "must be >= 0");
  const double axis = deg_to_rad(get_number(s, "axis_angle").value_or(0.0));
  CompensatorParams c;
  auto dc = get_number(s, "D_c");
  auto bc = get_number(s, "B_c");
  if (dc.has_value() != bc.has_value()) {
    throw ConfigError(dc ? "compensator.B_c" : "compensator.D_c", "D_c and B_c go together");
  }
  if (dc) {
    c.length_mm = length;
    c.axis_angle = axis;
    c.D_c = *dc;
    c.B_c = *bc;
  } else {
    auto so = get_string(s, "sellmeier_o");
    auto se = get_string(s, "sellmeier_e");
    if (!so || !se) {
      throw ConfigError("compensator.D_c", "missing: give D_c and B_c or Sellmeier sets");
    }
    const UniaxialMaterial m{load_sellmeier_set(*so), load_sellmeier_set(*se)};
    c = CompensatorParams::from_material(m, length, axis, center_wavelength_nm);
  }
  if (auto off = get_number(s, "phase_offset")) c.phase_offset = deg_to_rad(*off);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string phase_map_csv(const PhaseMapGrid& g, double pump_wavelength_nm) {
  std::string out = "theta_rad,omega_rads,wavelength_signal_nm,phase_rad,amplitude\n";
  for (std::size_t r = 0; r < g.theta_axis.size(); ++r) {
    for (std::size_t c = 0; c < g.omega_axis.size(); ++c) {
      const SidebandMode m{g.omega_axis[c], g.theta_axis[r]};
      out += format_double(g.theta_axis[r]) + "," + format_double(g.omega_axis[c]) + "," +
             format_double(m.signal_wavelength_nm(pump_wavelength_nm)) + "," +
             format_double(g.phase(r, c)) + "," + format_double(g.amplitude(r, c)) + "\n";
    }
  }
  return out;
}

inline std::string j16_csv() {
  std::string out = "index,qwp1_deg,hwp1_deg,qwp2_deg,hwp2_deg,label\n";
  const auto table = j16_settings();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& e = table[i];
    out += std::to_string(i) + "," + format_double(rad_to_deg(e.angular.qwp_angle())) + "," +
           format_double(rad_to_deg(e.angular.hwp_angle())) + "," +
           format_double(rad_to_deg(e.frequency.qwp_angle())) + "," +
           format_double(rad_to_deg(e.frequency.hwp_angle())) + "," + e.label + "\n";
  }
  return out;
}

inline std::string scan_csv(const ScanResult& r) {
  std::string out = "axis_value,copolar,crosspolar,envelope,phase_rad\n";
  for (const auto& p : r.points) {
    out += format_double(p.axis_value) + "," + format_double(p.copolar) + "," +
           format_double(p.crosspolar) + "," + format_double(p.envelope) + "," +
           format_double(p.phase) + "\n";
  }
  return out;
}

// Dataset CSV. A non-zero background rate is carried in a leading
// "# background_rate=<counts/s>" comment line.
inline std::string dataset_csv(const TomographyDataset& d) {
  std::string out;
  if (d.background_rate != 0.0) {
    out += "# background_rate=" + format_double(d.background_rate) + "\n";
  }
  out += "index,qwp1_deg,hwp1_deg,qwp2_deg,hwp2_deg,counts,time_s\n";
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    out += std::to_string(i) + "," + format_double(rad_to_deg(r.angular.qwp_angle())) + "," +
           format_double(rad_to_deg(r.angular.hwp_angle())) + "," +
           format_double(rad_to_deg(r.frequency.qwp_angle())) + "," +
           format_double(rad_to_deg(r.frequency.hwp_angle())) + "," +
           format_double(r.counts) + "," + format_double(r.time_s) + "\n";
  }
  return out;
}

inline TomographyDataset parse_dataset_csv(const std::string& text,
                                           const std::string& name = "<dataset>") {
  TomographyDataset d;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(ss, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      const std::string tag = "# background_rate=";
      if (line.rfind(tag, 0) == 0) {
        auto v = parse_double(line.substr(tag.size()));
        if (!v || *v < 0.0) throw FormatError(name, lineno, "bad background rate");
        d.background_rate = *v;
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("index", 0) == 0) continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) {
      throw FormatError(name, lineno,
                        "expected 7 columns, found " + std::to_string(cells.size()));
    }
    std::array<double, 7> v{};
    for (int k = 0; k < 7; ++k) {
      auto x = parse_double(cells[k]);
      if (!x) throw FormatError(name, lineno, "column " + std::to_string(k + 1) +
                                                  " is not a number: '" + cells[k] + "'");
      v[k] = *x;
    }
    if (v[5] < 0.0) throw FormatError(name, lineno, "negative counts");
    if (!(v[6] > 0.0)) throw FormatError(name, lineno, "acquisition time must be > 0");
    if (static_cast<std::size_t>(v[0]) != d.records.size()) {
      throw FormatError(name, lineno, "index out of order");
    }
    d.records.push_back({AnalyzerSetting(deg_to_rad(v[1]), deg_to_rad(v[2]), Arm::angular),
                         AnalyzerSetting(deg_to_rad(v[3]), deg_to_rad(v[4]), Arm::frequency),
                         v[5], v[6]});
  }
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(name, lineno, e.what());
  }
  return d;
}

inline TomographyDataset read_dataset(const fs::path& path) {
  return parse_dataset_csv(read_text(path), path.string());
}

// ---------------------------------------------------------------------------
// Density matrix JSON: {"basis": [...], "re": [[...]], "im": [[...]]}

inline nlohmann::json density_matrix_json(const Matrix4c& m) {
  nlohmann::json j;
  j["basis"] = {"HH", "HV", "VH", "VV"};
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    nlohmann::json rr = nlohmann::json::array(), ii = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) {
      rr.push_back(m(r, c).real());
      ii.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  j["re"] = re;
  j["im"] = im;
  return j;
}

inline Matrix4c parse_density_matrix_json(const nlohmann::json& j, const std::string& name) {
  auto fail = [&](const std::string& what) {
    return std::runtime_error(name + ": " + what);
  };
  if (!j.is_object() || !j.contains("re") || !j.contains("im")) {
    throw fail("expected an object with 're' and 'im'");
  }
  if (j.contains("basis")) {
    const nlohmann::json expected = {"HH", "HV", "VH", "VV"};
    if (j["basis"] != expected) throw fail("basis must be [\"HH\",\"HV\",\"VH\",\"VV\"]");
  }
  Matrix4c m;
  for (const char* part : {"re", "im"}) {
    const auto& a = j[part];
    if (!a.is_array() || a.size() != 4) throw fail(std::string(part) + " must be 4x4");
    for (int r = 0; r < 4; ++r) {
      if (!a[r].is_array() || a[r].size() != 4) throw fail(std::string(part) + " must be 4x4");
      for (int c = 0; c < 4; ++c) {
        if (!a[r][c].is_number()) throw fail(std::string(part) + " entries must be numbers");
      }
    }
  }
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      m(r, c) = cplx(j["re"][r][c].get<double>(), j["im"][r][c].get<double>());
    }
  }
  return m;
}

inline Matrix4c read_density_matrix(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return parse_density_matrix_json(j, path.string());
}

inline void write_density_matrix(const fs::path& path, const Matrix4c& m) {
  write_text(path, density_matrix_json(m).dump(2) + "\n");
}

}  // namespace spdctomo
