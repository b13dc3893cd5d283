#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "spdctomo/io.hpp"
#include "test_support.hpp"

using namespace spdctomo;
namespace st = spdctomo::testing;

namespace {

ConfigTree parse_ini(const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("spdctomo_io_" + std::to_string(::getpid()) + ".ini");
  write_text(p, text);
  ConfigTree t = read_config(p);
  fs::remove(p);
  return t;
}

std::string error_key(auto&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(Numbers, RoundTrip) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 20 - 10);
    EXPECT_EQ(parse_double(format_double(v)).value(), v);
  }
  EXPECT_EQ(parse_double(" +2.5 ").value(), 2.5);
  EXPECT_FALSE(parse_double("2.5x").has_value());
  EXPECT_FALSE(parse_double("").has_value());
}

TEST(Config, InlineCommentsAndTypes) {
  const auto t = parse_ini("[a]\nx = 1.5 ; mm\ny = true\nz = abc\n");
  EXPECT_EQ(get_number(t.get_child("a"), "x").value(), 1.5);
  EXPECT_TRUE(get_bool(t.get_child("a"), "y").value());
  EXPECT_EQ(error_key([&] { get_number(t.get_child("a"), "z"); }), "z");
  EXPECT_EQ(error_key([&] { require_number(t.get_child("a"), "missing"); }), "missing");
}

TEST(Presets, SellmeierSetsMatchInlineCopies) {
  const auto bbo = st::kato_bbo();
  const auto o = load_sellmeier_set("bbo_kato1986_o");
  const auto e = load_sellmeier_set("bbo_kato1986_e");
  const auto qo = load_sellmeier_set("quartz_ghosh1999_o");
  for (double l : {0.406, 0.812, 1.0}) {
    EXPECT_EQ(o.index(l), bbo.ordinary.index(l));
    EXPECT_EQ(e.index(l), bbo.extraordinary.index(l));
    EXPECT_EQ(qo.index(l), st::ghosh_quartz().ordinary.index(l));
  }
  EXPECT_EQ(error_key([] { load_sellmeier_set("no_such_set"); }), "no_such_set");
}

TEST(Presets, CrystalPresetDerivesCoefficients) {
  const auto t = parse_ini("[crystal]\npreset = bbo_type2_406nm\n");
  const auto c = crystal_from_config(t.get_child("crystal"));
  EXPECT_EQ(c.length_mm, 1.0);
  EXPECT_NEAR(c.cut_angle, deg_to_rad(47.6), 1e-15);
  EXPECT_EQ(c.pump_wavelength_nm, 406.0);
  EXPECT_NEAR(c.D, -2.301290632264e-10, 1e-16);
  EXPECT_TRUE(c.material.has_value());
}

TEST(Presets, OverridesAndErrors) {
  auto t = parse_ini("[crystal]\npreset = bbo_type2_406nm\nlength_L = 2\n");
  EXPECT_EQ(crystal_from_config(t.get_child("crystal")).length_mm, 2.0);

  t = parse_ini("[crystal]\nlength_L = 1\ncut_angle = 47.6\npump_wavelength = 406\nD = 1e-10\n");
  EXPECT_EQ(error_key([&] { crystal_from_config(t.get_child("crystal")); }), "crystal.B");

  t = parse_ini("[crystal]\nlength_L = -1\ncut_angle = 47.6\npump_wavelength = 406\n");
  EXPECT_EQ(error_key([&] { crystal_from_config(t.get_child("crystal")); }), "crystal.length_L");

  t = parse_ini("[crystal]\nlength_L = 1\ncut_angle = 95\npump_wavelength = 406\nD=1\nB=1\n");
  EXPECT_EQ(error_key([&] { crystal_from_config(t.get_child("crystal")); }), "crystal.cut_angle");

  t = parse_ini("[crystal]\npreset = bbo_type2_406nm\nD = -2.2e-10\nB = 8.8e5\n");
  EXPECT_EQ(error_key([&] { crystal_from_config(t.get_child("crystal")); }), "crystal.D");

  t = parse_ini("[crystal]\npreset = nope\n");
  EXPECT_EQ(error_key([&] { crystal_from_config(t.get_child("crystal")); }), "nope.ini");
}

TEST(Presets, Compensator) {
  auto t = parse_ini("[compensator]\npreset = quartz_comp_6p5mm\n");
  const auto q = compensator_from_config(t.get_child("compensator"), 812.0);
  EXPECT_EQ(q.length_mm, 6.5);
  EXPECT_NEAR(q.D_c, 3.644279619213e-11, 1e-17);
  t = parse_ini("[compensator]\nlength = 2\nD_c = 1e-11\nB_c = -1e5\nphase_offset = 90\n");
  const auto d = compensator_from_config(t.get_child("compensator"), 812.0);
  EXPECT_NEAR(d.phase_offset, kPi / 2, 1e-15);
  t = parse_ini("[compensator]\nlength = 2\nD_c = 1e-11\n");
  EXPECT_EQ(error_key([&] { compensator_from_config(t.get_child("compensator"), 812.0); }),
            "compensator.B_c");
}

TEST(Presets, SearchPathEnvironmentOverride) {
  const fs::path dir = fs::temp_directory_path() / ("spdctomo_presets_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  write_text(dir / "custom.ini", "[crystal]\nlength_L = 3\ncut_angle = 40\npump_wavelength = 400\nD = -1e-10\nB = 1e5\n");
  ::setenv("SPDCTOMO_PRESET_PATH", dir.c_str(), 1);
  const auto t = parse_ini("[crystal]\npreset = custom\n");
  const auto c = crystal_from_config(t.get_child("crystal"));
  ::unsetenv("SPDCTOMO_PRESET_PATH");
  fs::remove_all(dir);
  EXPECT_EQ(c.length_mm, 3.0);
  EXPECT_EQ(c.D, -1e-10);
}

TEST(Csv, PhaseMapHeaderAndRows) {
  PhaseMapGrid g;
  g.omega_axis = {0.0, 1e12};
  g.theta_axis = {0.0};
  g.phase = Eigen::MatrixXd::Zero(1, 2);
  g.amplitude = Eigen::MatrixXd::Ones(1, 2);
  const auto csv = phase_map_csv(g, 406.0);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "theta_rad,omega_rads,wavelength_signal_nm,phase_rad,amplitude");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Csv, J16Table) {
  const auto csv = j16_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,qwp1_deg,hwp1_deg,qwp2_deg,hwp2_deg,label");
  EXPECT_NE(csv.find("\n0,0,0,0,0,HH\n"), std::string::npos);
  EXPECT_NE(csv.find("\n9,45,22.5,45,22.5,DD\n"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
}

TEST(Csv, DatasetRoundTrip) {
  auto d = expected_dataset(DensityMatrix::physical(st::reference_rho_row2()), 123.4, 10.0, 0.5);
  const auto back = parse_dataset_csv(dataset_csv(d));
  ASSERT_EQ(back.records.size(), 16u);
  EXPECT_EQ(back.background_rate, 0.5);
  for (int i = 0; i < 16; ++i) {
    EXPECT_EQ(back.records[i].counts, d.records[i].counts);
    EXPECT_EQ(back.records[i].time_s, d.records[i].time_s);
  }
  EXPECT_EQ(dataset_csv(back), dataset_csv(d));
}

TEST(Csv, DatasetErrorsNameTheLine) {
  const auto good = dataset_csv(expected_dataset(DensityMatrix::from_pure(psi_plus()), 1.0, 1.0));
  auto line_of = [](const std::string& text) {
    try {
      parse_dataset_csv(text, "d.csv");
    } catch (const FormatError& e) {
      return e.line();
    }
    return -1;
  };
  std::string bad = good;
  bad.replace(bad.find("\n3,"), 3, "\n3;");
  EXPECT_EQ(line_of(bad), 5);
  bad = good;
  const auto pos = bad.find("\n5,");
  bad.insert(bad.find(',', pos + 3) + 1, "x");
  EXPECT_EQ(line_of(bad), 7);
  bad = good.substr(0, good.rfind("15,"));
  EXPECT_GT(line_of(bad), 0);
}

TEST(Json, DensityMatrixRoundTrip) {
  const Matrix4c m = st::reference_rho_row1();
  const auto back = parse_density_matrix_json(density_matrix_json(m), "x");
  EXPECT_EQ(back, m);
  auto j = density_matrix_json(m);
  j["re"][2].erase(1);
  EXPECT_THROW(parse_density_matrix_json(j, "x"), std::runtime_error);
  j = density_matrix_json(m);
  j["basis"] = {"HH", "VH", "HV", "VV"};
  EXPECT_THROW(parse_density_matrix_json(j, "x"), std::runtime_error);
}
