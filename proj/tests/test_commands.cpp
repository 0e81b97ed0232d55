#include "ifgsim/app/commands.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ifgsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ifgsim_cmd_" + name);
  fs::remove_all(dir);
  return dir;
}

io::RunConfig small_config(const fs::path& out) {
  unsetenv(io::output_dir_env);
  auto cfg = io::parse_config_text(R"(
[line]
gamma_mhz = 34
delta0_mhz = 5
a0 = 0.1
[sweep]
detuning_mhz = -30, -13, 0, 9, 25
defocus_um = 0, 1.7, 3.3
[grid]
n = 64
field_um = 3.4
[noise]
seed = 3
)");
  cfg.output_dir = out;
  return cfg;
}

std::vector<unsigned char> bytes_of(const fs::path& p) { return io::read_bytes(p); }

} // namespace

TEST(Simulate, WritesOneImagePerPairAndManifest) {
  std::ostringstream log;
  const auto cfg = small_config(scratch("sim"));
  const auto result = app::cmd_simulate(cfg, log);
  ASSERT_EQ(result.files.size(), 15u);
  const auto m = io::read_manifest(result.manifest);
  ASSERT_EQ(m.entries.size(), 15u);
  for (const auto& e : m.entries) EXPECT_EQ(io::sha256_hex(bytes_of(cfg.output_dir / e.file)), e.sha256);
  const auto images = io::load_images({result.manifest});
  EXPECT_EQ(images[4].detuning, -13e6);
  EXPECT_DOUBLE_EQ(images[4].defocus_object, 1.7e-6);
  EXPECT_NEAR(result.system.rho0, calibrate_rho0(ImagingSystem{}, 370e-9).rho0, 1e-15);
}

TEST(Simulate, DeterministicAcrossRunsAndThreads) {
  auto cfg = small_config(scratch("det_a"));
  cfg.noise_sigma_relative = 0.2;
  std::ostringstream log;
  parallel::set_thread_count(1);
  const auto a = app::cmd_simulate(cfg, log);
  parallel::set_thread_count(4);
  cfg.output_dir = scratch("det_b");
  const auto b = app::cmd_simulate(cfg, log);
  parallel::set_thread_count(0);
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) EXPECT_EQ(bytes_of(a.files[i]), bytes_of(b.files[i]));
  EXPECT_EQ(bytes_of(a.manifest), bytes_of(b.manifest));
}

TEST(Simulate, SeedChangesNoise) {
  auto cfg = small_config(scratch("seed_a"));
  cfg.noise_sigma = 1e-3;
  std::ostringstream log;
  const auto a = app::cmd_simulate(cfg, log);
  cfg.seed = 4;
  cfg.output_dir = scratch("seed_b");
  const auto b = app::cmd_simulate(cfg, log);
  EXPECT_NE(bytes_of(a.files[0]), bytes_of(b.files[0]));
}

TEST(Simulate, WarnsNearSaturation) {
  auto cfg = small_config(scratch("sat"));
  cfg.detunings = {0.0};
  cfg.defocus = {0.0};
  cfg.illumination_power = 1e-3;
  std::ostringstream log;
  app::cmd_simulate(cfg, log);
  EXPECT_NE(log.str().find("warning"), std::string::npos);
}

TEST(Simulate, UnwritableOutput) {
  auto cfg = small_config("/proc/ifgsim_cannot_write");
  std::ostringstream log;
  EXPECT_THROW(app::cmd_simulate(cfg, log), IoError);
}

TEST(Calibrate, PinnedAberration) {
  const auto dir = scratch("cal_pin");
  auto cfg = small_config(dir);
  std::ostringstream log;
  const auto r = app::cmd_calibrate(cfg, {}, {true, false}, dir / "calibration.txt", log);
  EXPECT_EQ(r.aberration_status, "pinned");
  const auto back = app::read_calibration(dir / "calibration.txt");
  EXPECT_EQ(back.aberration_status, "pinned");
  EXPECT_DOUBLE_EQ(back.rho0, r.rho0);
  EXPECT_NEAR(back.achieved_resolution, 370e-9, 1e-12);
}

TEST(Calibrate, NeedsImagesUnlessPinned) {
  const auto dir = scratch("cal_none");
  std::ostringstream log;
  EXPECT_THROW(app::cmd_calibrate(small_config(dir), {}, {}, dir / "c.txt", log), ConfigError);
}

TEST(Calibrate, UnreachableTargetReportsRange) {
  const auto dir = scratch("cal_range");
  auto cfg = small_config(dir);
  cfg.target_resolution = 289e-9;
  std::ostringstream log;
  try {
    app::cmd_calibrate(cfg, {}, {true, false}, dir / "c.txt", log);
    FAIL();
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("achievable range"), std::string::npos);
    EXPECT_EQ(e.exit_code(), 4);
  }
}

TEST(Calibrate, FitsAberrationFromSeries) {
  const auto dir = scratch("cal_fit");
  auto cfg = small_config(dir);
  cfg.system.aberration = 0.05e12;
  cfg.detunings = {-13e6};
  std::ostringstream log;
  const auto sim = app::cmd_simulate(cfg, log);
  cfg.system.aberration = 0.0;
  const auto r = app::cmd_calibrate(cfg, io::load_images({sim.manifest}), {}, dir / "calibration.txt", log);
  EXPECT_EQ(r.aberration_status, "fitted");
  EXPECT_NEAR(r.aberration / 0.05e12, 1.0, 1e-4);
  EXPECT_DOUBLE_EQ(*r.calibration_detuning, -13e6);
}

TEST(Fit, MissingCalibrationIsActionable) {
  const auto dir = scratch("fit_missing");
  std::ostringstream log;
  try {
    app::cmd_fit(small_config(dir), dir / "calibration.txt", {}, log);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("ifgsim calibrate"), std::string::npos);
  }
}

TEST(Fit, MixedGridsAreRejected) {
  Interferogram a, b;
  a.grid = Grid(16, 1e-8);
  b.grid = Grid(16, 2e-8);
  a.signal.assign(256, 0.0);
  b.signal.assign(256, 0.0);
  b.defocus_object = 1e-6;
  EXPECT_THROW(app::group_series({a, b}), InputError);
}

TEST(Fit, NoiselessEndToEnd) {
  const auto dir = scratch("fit_clean");
  const auto cfg = small_config(dir);
  std::ostringstream log;
  const auto sim = app::cmd_simulate(cfg, log);
  app::cmd_calibrate(cfg, {}, {true, false}, dir / "calibration.txt", log);
  const auto r = app::cmd_fit(cfg, dir / "calibration.txt", io::load_images({sim.manifest}), log);
  EXPECT_NEAR(r.curve.gamma / 34e6, 1.0, 0.01);
  EXPECT_NEAR(r.curve.delta0, 5e6, 0.2e6);
  ASSERT_EQ(r.series.size(), 5u);
  for (const auto& row : r.series)
    EXPECT_NEAR(row.fit.phase, scatter_phase(row.detuning, cfg.line), 1e-3);
  EXPECT_TRUE(fs::exists(r.report));
  std::ifstream table(r.table);
  std::string header;
  std::getline(table, header);
  EXPECT_EQ(header.rfind("detuning_mhz,phase_rad,phase_sigma_rad,amplitude", 0), 0u);
  EXPECT_TRUE(fs::exists(r.curve_data));
}

TEST(Fit, NoisyLinewidthWithinQuotedError) {
  int covered = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto dir = scratch("fit_noisy");
    auto cfg = small_config(dir);
    cfg.detunings = {-30e6, -20e6, -13e6, -5e6, 0.0, 5e6, 9e6, 15e6, 25e6};
    cfg.noise_sigma_relative = 0.2;
    cfg.seed = seed;
    std::ostringstream log;
    const auto sim = app::cmd_simulate(cfg, log);
    app::cmd_calibrate(cfg, {}, {true, false}, dir / "calibration.txt", log);
    const auto r = app::cmd_fit(cfg, dir / "calibration.txt", io::load_images({sim.manifest}), log);
    covered += std::abs(r.curve.gamma - 34e6) <= r.curve.gamma_sigma;
  }
  EXPECT_GE(covered, 2);
}

TEST(Render, BoundsSidecarAndSmoothing) {
  const auto dir = scratch("render");
  auto cfg = small_config(dir);
  cfg.detunings = {9e6};
  cfg.defocus = {1.7e-6};
  std::ostringstream log;
  const auto sim = app::cmd_simulate(cfg, log);
  const auto raw_bytes = bytes_of(sim.files[0]);
  const auto raw = app::cmd_render(sim.files, io::Colormap::diverging, 0.0, dir / "raw");
  const auto smooth = app::cmd_render(sim.files, io::Colormap::diverging, 40e-9, dir / "smooth");
  EXPECT_NE(bytes_of(raw[0].ppm), bytes_of(smooth[0].ppm));
  EXPECT_EQ(bytes_of(sim.files[0]), raw_bytes);

  const Interferogram img = io::read_ifg1(sim.files[0]);
  const auto [lo, hi] = std::minmax_element(img.signal.begin(), img.signal.end());
  boost::property_tree::ptree t;
  boost::property_tree::ini_parser::read_ini(raw[0].bounds.string(), t);
  EXPECT_EQ(std::stod(t.get<std::string>("min")), *lo);
  EXPECT_EQ(std::stod(t.get<std::string>("max")), *hi);
  EXPECT_TRUE(fs::exists(raw[0].png));
}

TEST(Export, DelimitedText) {
  const auto dir = scratch("export");
  auto cfg = small_config(dir);
  cfg.detunings = {0.0};
  cfg.defocus = {0.0};
  std::ostringstream log, out;
  const auto sim = app::cmd_simulate(cfg, log);
  app::cmd_export(sim.files[0], out);
  std::istringstream in(out.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2u + 64u * 64u);
}

TEST(OracleCheck, ReportsSmallErrors) {
  std::ostringstream log;
  const auto s = app::cmd_oracle_check(log, 1, 2);
  EXPECT_LT(s.dft_error, 1e-12);
  EXPECT_LT(s.propagator_error, 1e-6);
  EXPECT_LT(s.image_error, 1e-8);
  EXPECT_NE(log.str().find("max rel error"), std::string::npos);
}

TEST(ExitCodes, StableMapping) {
  EXPECT_EQ(Error("x").exit_code(), 1);
  EXPECT_EQ(ConfigError("x").exit_code(), 2);
  EXPECT_EQ(InputError("x").exit_code(), 2);
  EXPECT_EQ(IoError("x").exit_code(), 3);
  EXPECT_EQ(SamplingError("x").exit_code(), 4);
  EXPECT_EQ(RangeError("x").exit_code(), 4);
  EXPECT_EQ(ResourceError("x").exit_code(), 4);
  EXPECT_EQ(ConvergenceError("x", 0.0).exit_code(), 5);
  EXPECT_EQ(SingularityError("x", {}).exit_code(), 5);
}
