#pragma once

#include "ifgsim/core/fft.hpp"
#include "ifgsim/core/field.hpp"
#include "ifgsim/core/parallel.hpp"
#include "ifgsim/core/propagation.hpp"
#include "ifgsim/estimator/noise.hpp"
#include "ifgsim/estimator/phase_curve.hpp"
#include "ifgsim/estimator/series_fit.hpp"
#include "ifgsim/imaging/model.hpp"
#include "ifgsim/io/config.hpp"
#include "ifgsim/io/manifest.hpp"
#include "ifgsim/io/render.hpp"
#include "ifgsim/oracle.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace ifgsim::app {

namespace fs = std::filesystem;

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

inline std::string image_name(std::size_t detuning_index, std::size_t defocus_index) {
  std::ostringstream s;
  s << "ifg_d" << std::setw(2) << std::setfill('0') << detuning_index << "_z" << std::setw(2)
    << std::setfill('0') << defocus_index << ".ifg1";
  return s.str();
}

/// Per-image noise seed derived from the run seed and the image position in
/// the sweep, independent of scheduling.
inline std::uint64_t image_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Peak intensity (W/cm^2) of a Gaussian drive beam with intensity FWHM d:
/// I0 = 4 ln2 P / (pi d^2).
inline double peak_intensity_w_cm2(const io::RunConfig& cfg) {
  const double d = cfg.illumination_fwhm;
  return 4.0 * std::numbers::ln2 * cfg.illumination_power / (std::numbers::pi * d * d) * 1e-4;
}

/// Imaging system with rho0 taken from the config or calibrated against the
/// target resolution.
inline ImagingSystem resolve_system(const io::RunConfig& cfg, ResolutionCalibration* cal = nullptr) {
  ImagingSystem sys = cfg.system;
  if (cfg.rho0) {
    sys.rho0 = *cfg.rho0;
  } else {
    const auto c = calibrate_rho0(sys, cfg.target_resolution);
    sys.rho0 = c.rho0;
    if (cal) *cal = c;
  }
  return sys;
}

struct SimulateResult {
  std::vector<fs::path> files;
  fs::path manifest;
  ImagingSystem system;
};

/// One image per (detuning, defocus) pair, plus manifest.txt written last.
inline SimulateResult cmd_simulate(const io::RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const ImagingSystem sys = resolve_system(cfg);
  const auto sat = saturation_guard(peak_intensity_w_cm2(cfg));
  if (sat.status == SaturationStatus::warning) log << "warning: " << sat.message << '\n';
  ensure_directory(cfg.output_dir);

  const Grid grid(cfg.grid_n, cfg.grid_pitch);
  const PupilLattice lattice(sys);
  const std::size_t nd = cfg.detunings.size();
  const std::size_t nz = cfg.defocus.size();
  std::vector<Interferogram> images(nd * nz);
  parallel::for_each_index(nd * nz, [&](std::size_t idx) {
    const auto resp = scatter_response(cfg.detunings[idx / nz], cfg.line);
    Interferogram img = interferogram(resp, sys, lattice, cfg.defocus[idx % nz], grid,
                                      {cfg.source_x, cfg.source_y});
    images[idx] = motional_blur(img, cfg.thermal_blur);
  });

  SimulateResult result;
  result.system = sys;
  io::Manifest manifest;
  auto param = [&](const std::string& k, double v) { manifest.parameters.emplace_back(k, io::format_double(v)); };
  manifest.parameters.emplace_back("seed", std::to_string(cfg.seed));
  param("gamma_hz", cfg.line.gamma);
  param("delta0_hz", cfg.line.delta0);
  param("a0", cfg.line.a0);
  param("rho0_m", sys.rho0);
  param("aberration_rad_per_m4", sys.aberration);
  param("f_fresnel_m", sys.f_fresnel);
  param("f_reimage_m", sys.f_reimage);
  param("na", sys.na);
  param("wavelength_m", sys.wavelength);
  param("thermal_blur_m", cfg.thermal_blur);
  param("source_x_m", cfg.source_x);
  param("source_y_m", cfg.source_y);

  for (std::size_t d = 0; d < nd; ++d) {
    double series_max = 0.0;
    for (std::size_t z = 0; z < nz; ++z)
      for (double v : images[d * nz + z].signal) series_max = std::max(series_max, std::abs(v));
    const double sigma = cfg.noise_sigma + cfg.noise_sigma_relative * series_max;
    for (std::size_t z = 0; z < nz; ++z) {
      const std::size_t idx = d * nz + z;
      const Interferogram noisy = inject_noise(images[idx], sigma, image_seed(cfg.seed, idx));
      const auto bytes = io::encode_ifg1(noisy);
      const fs::path path = cfg.output_dir / image_name(d, z);
      io::write_bytes(path, bytes);
      manifest.entries.push_back({path.filename().string(), noisy.detuning, noisy.defocus_object,
                                  io::sha256_hex(bytes)});
      result.files.push_back(path);
    }
    param("noise_sigma_" + std::to_string(d), sigma);
  }
  result.manifest = cfg.output_dir / "manifest.txt";
  io::write_manifest(result.manifest, manifest);
  log << "wrote " << result.files.size() << " images and " << result.manifest.string() << '\n';
  return result;
}

/// Groups images by detuning (sorted ascending), each group ordered by defocus.
inline std::vector<SeriesObservation> group_series(const std::vector<Interferogram>& images) {
  std::map<double, SeriesObservation> groups;
  for (const auto& img : images) groups[img.detuning].images.push_back(img);
  std::vector<SeriesObservation> out;
  for (auto& [d, obs] : groups) {
    std::sort(obs.images.begin(), obs.images.end(),
              [](const Interferogram& a, const Interferogram& b) { return a.defocus_object < b.defocus_object; });
    for (const auto& img : obs.images)
      if (!(img.grid == obs.images.front().grid))
        throw InputError("mixed grids within the series at detuning " + std::to_string(d * 1e-6) + " MHz");
    out.push_back(std::move(obs));
  }
  return out;
}

struct CalibrationReport {
  double target_resolution = 0.0;
  double achieved_resolution = 0.0;
  double min_resolution = 0.0;
  double max_resolution = 0.0;
  double rho0 = 0.0;
  std::string rho0_status = "resolution";
  double aberration = 0.0;
  double aberration_sigma = 0.0;
  std::string aberration_status = "pinned";
  std::optional<double> calibration_detuning;
};

inline void write_calibration(const fs::path& path, const CalibrationReport& r) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write calibration report " + path.string());
  out << "# ifgsim calibration report\n";
  out << "target_resolution_nm = " << io::format_double(r.target_resolution * 1e9) << '\n';
  out << "achieved_resolution_nm = " << io::format_double(r.achieved_resolution * 1e9) << '\n';
  out << "min_achievable_resolution_nm = " << io::format_double(r.min_resolution * 1e9) << '\n';
  out << "max_achievable_resolution_nm = " << io::format_double(r.max_resolution * 1e9) << '\n';
  out << "rho0_mm = " << io::format_double(r.rho0 * 1e3) << '\n';
  out << "rho0_status = " << r.rho0_status << '\n';
  out << "aberration_rad_per_mm4 = " << io::format_double(r.aberration * 1e-12) << '\n';
  out << "aberration_sigma_rad_per_mm4 = " << io::format_double(r.aberration_sigma * 1e-12) << '\n';
  out << "aberration_status = " << r.aberration_status << '\n';
  if (r.calibration_detuning)
    out << "calibration_detuning_mhz = " << io::format_double(*r.calibration_detuning * 1e-6) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

inline CalibrationReport read_calibration(const fs::path& path) {
  if (!fs::exists(path))
    throw ConfigError("calibration report " + path.string() +
                      " not found; run `ifgsim calibrate` first or pass --calibration <file>");
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw IoError(path.string() + ": " + e.message());
  }
  auto number = [&](const std::string& key) {
    const auto v = tree.get_optional<std::string>(key);
    if (!v) throw ConfigError(path.string() + ": missing key " + key);
    return io::detail::parse_number(key, *v);
  };
  CalibrationReport r;
  r.target_resolution = number("target_resolution_nm") * 1e-9;
  r.achieved_resolution = number("achieved_resolution_nm") * 1e-9;
  r.min_resolution = number("min_achievable_resolution_nm") * 1e-9;
  r.max_resolution = number("max_achievable_resolution_nm") * 1e-9;
  r.rho0 = number("rho0_mm") * 1e-3;
  r.rho0_status = tree.get<std::string>("rho0_status", "resolution");
  r.aberration = number("aberration_rad_per_mm4") * 1e12;
  r.aberration_sigma = number("aberration_sigma_rad_per_mm4") * 1e12;
  r.aberration_status = tree.get<std::string>("aberration_status", "fitted");
  if (auto v = tree.get_optional<std::string>("calibration_detuning_mhz"))
    r.calibration_detuning = io::detail::parse_number("calibration_detuning_mhz", *v) * 1e6;
  return r;
}

struct CalibrateOptions {
  bool pin_aberration = false;
  bool fit_rho0 = false;
};

/// rho0 search against the target resolution, then (unless pinned) a fit of
/// the shared aberration coefficient on the designated calibration series.
inline CalibrationReport cmd_calibrate(const io::RunConfig& cfg, const std::vector<Interferogram>& images,
                                       const CalibrateOptions& opt, const fs::path& report_path,
                                       std::ostream& log) {
  cfg.validate();
  CalibrationReport report;
  ImagingSystem sys = cfg.system;
  const auto cal = calibrate_rho0(sys, cfg.target_resolution);
  sys.rho0 = cal.rho0;
  report.target_resolution = cfg.target_resolution;
  report.achieved_resolution = cal.fwhm;
  report.min_resolution = cal.min_fwhm;
  report.max_resolution = cal.max_fwhm;
  report.rho0 = cal.rho0;
  report.aberration = sys.aberration;
  log << "rho0 = " << cal.rho0 * 1e3 << " mm gives " << cal.fwhm * 1e9 << " nm FWHM (achievable "
      << cal.min_fwhm * 1e9 << " - " << cal.max_fwhm * 1e9 << " nm)\n";

  const bool pinned = opt.pin_aberration || cfg.pin_aberration;
  const bool fit_rho0 = opt.fit_rho0 || cfg.fit_rho0;
  if (pinned && !fit_rho0) {
    report.aberration_status = "pinned";
  } else {
    if (images.empty())
      throw ConfigError("aberration calibration needs a calibration image series (pass images or a "
                        "manifest), or pin the aberration with --pin-aberration");
    auto series = group_series(images);
    const double wanted = cfg.calibration_detuning.value_or(cfg.detunings.front());
    const auto best = std::min_element(series.begin(), series.end(), [&](const auto& a, const auto& b) {
      return std::abs(a.images.front().detuning - wanted) < std::abs(b.images.front().detuning - wanted);
    });
    SeriesOptions sopt;
    sopt.fit_aberration = !pinned;
    sopt.fit_rho0 = fit_rho0;
    sopt.thermal_sigma = cfg.thermal_blur;
    const SeriesFit fit = fit_series(*best, sys, {}, sopt);
    report.calibration_detuning = best->images.front().detuning;
    if (!pinned) {
      report.aberration = fit.shared.aberration;
      const auto it = std::find(fit.parameter_names.begin(), fit.parameter_names.end(), "aberration_rad_per_mm4");
      const auto j = static_cast<Eigen::Index>(it - fit.parameter_names.begin());
      report.aberration_sigma = std::sqrt(fit.covariance(j, j)) * 1e12;
      report.aberration_status = "fitted";
    } else {
      report.aberration_status = "pinned";
    }
    if (fit_rho0) {
      report.rho0 = fit.shared.rho0;
      report.rho0_status = "fitted";
      ImagingSystem check = sys;
      check.rho0 = fit.shared.rho0;
      report.achieved_resolution = spot_fwhm(check);
    }
    log << "aberration A = " << report.aberration * 1e-12 << " rad/mm^4 (" << report.aberration_status
        << ") from the series at " << *report.calibration_detuning * 1e-6 << " MHz\n";
  }
  ensure_directory(report_path.parent_path().empty() ? fs::path(".") : report_path.parent_path());
  write_calibration(report_path, report);
  return report;
}

struct SeriesRow {
  double detuning = 0.0;
  SeriesFit fit;
};

struct FitResult {
  std::vector<SeriesRow> series;
  PhaseCurveFit curve;
  fs::path report;
  fs::path table;
  fs::path curve_data;
};

/// Smallest phase uncertainty passed to the line fit (noiseless series
/// otherwise produce vanishing weights).
inline constexpr double phase_sigma_floor = 1e-6;

inline FitResult cmd_fit(const io::RunConfig& cfg, const fs::path& calibration_path,
                         const std::vector<Interferogram>& images, std::ostream& log) {
  cfg.validate();
  const CalibrationReport cal = read_calibration(calibration_path);
  if (images.empty()) throw ConfigError("fit needs at least one image series");
  ImagingSystem sys = cfg.system;
  sys.rho0 = cal.rho0;
  sys.aberration = cal.aberration;

  const auto series = group_series(images);
  std::vector<SeriesRow> rows(series.size());
  SeriesOptions sopt;
  sopt.thermal_sigma = cfg.thermal_blur;
  parallel::for_each_index(series.size(), [&](std::size_t i) {
    rows[i].detuning = series[i].images.front().detuning;
    rows[i].fit = fit_series(series[i], sys, {}, sopt);
  });

  std::vector<PhasePoint> points;
  for (const auto& r : rows)
    points.push_back({r.detuning, r.fit.phase, std::max(r.fit.phase_sigma, phase_sigma_floor)});
  FitResult result;
  result.series = rows;
  result.curve = fit_phase_curve(points);

  ensure_directory(cfg.output_dir);
  result.report = cfg.output_dir / "fit_report.txt";
  result.table = cfg.output_dir / "phase_table.csv";
  result.curve_data = cfg.output_dir / "phase_curve.csv";
  {
    std::ofstream out(result.report, std::ios::trunc);
    if (!out) throw IoError("cannot write " + result.report.string());
    const auto& c = result.curve;
    out << "# ifgsim fit report\n";
    out << "gamma_mhz = " << io::format_double(c.gamma * 1e-6) << '\n';
    out << "gamma_sigma_mhz = " << io::format_double(c.gamma_sigma * 1e-6) << '\n';
    out << "delta0_mhz = " << io::format_double(c.delta0 * 1e-6) << '\n';
    out << "delta0_sigma_mhz = " << io::format_double(c.delta0_sigma * 1e-6) << '\n';
    out << "chi2 = " << io::format_double(c.chi2) << '\n';
    out << "series = " << rows.size() << '\n';
    out << "rho0_mm = " << io::format_double(sys.rho0 * 1e3) << '\n';
    out << "aberration_rad_per_mm4 = " << io::format_double(sys.aberration * 1e-12) << '\n';
  }
  double max_p = 0.0;
  for (const auto& r : rows) max_p = std::max(max_p, r.fit.amplitude * r.fit.amplitude);
  {
    std::ofstream out(result.table, std::ios::trunc);
    if (!out) throw IoError("cannot write " + result.table.string());
    out << "detuning_mhz,phase_rad,phase_sigma_rad,amplitude,amplitude_sigma,normalised_probability,"
           "residual_rms,iterations\n";
    for (const auto& r : rows)
      out << io::format_double(r.detuning * 1e-6) << ',' << io::format_double(r.fit.phase) << ','
          << io::format_double(r.fit.phase_sigma) << ',' << io::format_double(r.fit.amplitude) << ','
          << io::format_double(r.fit.amplitude_sigma) << ','
          << io::format_double(max_p > 0 ? r.fit.amplitude * r.fit.amplitude / max_p : 0.0) << ','
          << io::format_double(r.fit.residual_rms) << ',' << r.fit.iterations << '\n';
  }
  {
    std::ofstream out(result.curve_data, std::ios::trunc);
    if (!out) throw IoError("cannot write " + result.curve_data.string());
    out << "detuning_mhz,phase_model_rad,probability_model\n";
    const auto lo = std::min_element(points.begin(), points.end(),
                                     [](auto& a, auto& b) { return a.detuning < b.detuning; })->detuning;
    const auto hi = std::max_element(points.begin(), points.end(),
                                     [](auto& a, auto& b) { return a.detuning < b.detuning; })->detuning;
    const LineParams line = result.curve.line();
    for (int k = 0; k <= 200; ++k) {
      const double d = lo + (hi - lo) * k / 200.0;
      const double phi = scatter_phase(d, line);
      out << io::format_double(d * 1e-6) << ',' << io::format_double(phi) << ','
          << io::format_double(std::sin(phi) * std::sin(phi)) << '\n';
    }
  }
  log << "gamma = " << result.curve.gamma * 1e-6 << " +- " << result.curve.gamma_sigma * 1e-6
      << " MHz, delta0 = " << result.curve.delta0 * 1e-6 << " +- " << result.curve.delta0_sigma * 1e-6
      << " MHz (" << rows.size() << " series)\n";
  return result;
}

struct RenderedImage {
  fs::path ppm, png, bounds;
  double min = 0.0, max = 0.0;
};

/// Renders each image (optionally smoothed for display) and writes the
/// colorbar bounds of the rendered data to <stem>.bounds.txt.
inline std::vector<RenderedImage> cmd_render(const std::vector<fs::path>& files, io::Colormap map,
                                             double smooth_sigma, const fs::path& out_dir) {
  ensure_directory(out_dir);
  std::vector<RenderedImage> out;
  for (const auto& file : files) {
    const Interferogram raw = io::read_ifg1(file);
    const Interferogram shown = smooth_sigma > 0.0 ? render_smoothed(raw, smooth_sigma) : raw;
    const io::Raster raster = io::rasterize(shown, map);
    RenderedImage r;
    const std::string stem = file.stem().string();
    r.ppm = out_dir / (stem + ".ppm");
    r.png = out_dir / (stem + ".png");
    r.bounds = out_dir / (stem + ".bounds.txt");
    io::write_ppm(r.ppm, raster);
    io::write_png(r.png, raster);
    std::ofstream b(r.bounds, std::ios::trunc);
    if (!b) throw IoError("cannot write " + r.bounds.string());
    b << "min = " << io::format_double(raster.min) << '\n'
      << "max = " << io::format_double(raster.max) << '\n'
      << "smoothed_with_nm = " << io::format_double(shown.smoothed_with * 1e9) << '\n';
    r.min = raster.min;
    r.max = raster.max;
    out.push_back(r);
  }
  return out;
}

/// Delimited-text export: x_um,y_um,signal per pixel.
inline void cmd_export(const fs::path& file, std::ostream& out) {
  const Interferogram img = io::read_ifg1(file);
  out << "# detuning_mhz=" << io::format_double(img.detuning * 1e-6)
      << " defocus_um=" << io::format_double(img.defocus_object * 1e6) << '\n';
  out << "x_um,y_um,signal\n";
  for (std::size_t r = 0; r < img.grid.n(); ++r)
    for (std::size_t c = 0; c < img.grid.n(); ++c)
      out << io::format_double(img.grid.x(c) * 1e6) << ',' << io::format_double(img.grid.y(r) * 1e6) << ','
          << io::format_double(img.at(r, c)) << '\n';
}

struct OracleSummary {
  double dft_error = 0.0;         ///< fast vs direct DFT, relative
  double propagator_error = 0.0;  ///< fresnel vs quadrature, relative
  double image_error = 0.0;       ///< fast vs direct pupil sum, relative
};

inline double max_relative_error(std::span<const complex> a, std::span<const complex> b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

inline std::vector<complex> random_samples(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<complex> v(count);
  for (auto& x : v) x = {normal(rng), normal(rng)};
  return v;
}

/// Oracle-equivalence checks for the transform, propagator and image
/// formation kernels. `fields` random fields per grid size, `steps` legal
/// propagation distances per field.
inline OracleSummary cmd_oracle_check(std::ostream& log, std::size_t fields = 10, std::size_t steps = 5) {
  OracleSummary s;
  const double lambda = 369.5e-9;
  {
    const Grid g(16, 50e-9);
    const auto data = random_samples(g.size(), 1);
    const Field f(g, data, lambda);
    const Field fast = unitary_dft2(f, Direction::forward);
    const auto slow = oracle::direct_dft2(data, g.n(), false);
    s.dft_error = max_relative_error(fast.samples(), slow);
  }
  for (std::size_t n : {32u, 64u}) {
    const Grid g(n, 40e-9);
    const double limit = max_fresnel_step(g, lambda);
    for (std::size_t k = 0; k < fields; ++k) {
      const Field f(g, random_samples(g.size(), 100 * n + k), lambda);
      for (std::size_t j = 0; j < steps; ++j) {
        // legal distances spread over (-limit, limit], skipping zero
        const double frac = -1.0 + 2.0 * static_cast<double>(j + 1) / static_cast<double>(steps);
        const double dz = (frac == 0.0 ? 0.5 / static_cast<double>(steps) : frac) * limit;
        const Field a = fresnel_propagate(f, dz);
        const Field b = quadrature_propagate(f, dz);
        s.propagator_error = std::max(s.propagator_error, max_relative_error(a.samples(), b.samples()));
      }
    }
  }
  {
    ImagingSystem sys;
    sys.pupil_samples = 32;
    sys.rho0 = 0.7 * sys.pupil_radius();
    const Grid object(32, 3.4e-6 / 32);
    const double m = sys.magnification();
    const Grid image = object.scaled(m);
    const PupilLattice lattice(sys);
    const double zmax = 0.9 * lattice.max_defocus_image();
    for (double aberration : {0.0, 0.5 / std::pow(sys.rho0, 4)}) {
      sys.aberration = aberration;
      for (double zeta : {0.0, zmax, -zmax}) {
        const ScatterResponse resp{0.0, 1.0, 0.0};
        const Field fast = scattered_image_field(resp, sys, zeta, image);
        std::vector<double> xs(image.n()), ys(image.n());
        for (std::size_t k = 0; k < image.n(); ++k) {
          xs[k] = image.x(k);
          ys[k] = image.y(k);
        }
        auto slow = oracle::direct_pupil_transform(sys, zeta, xs, ys);
        const double radius = sys.pupil_radius();
        const double n0 = 2.0 * std::numbers::pi *
                          (std::sqrt(sys.f_fresnel * sys.f_fresnel + radius * radius) - sys.f_fresnel);
        for (auto& v : slow) v *= complex(0.0, 1.0) / n0;
        s.image_error = std::max(s.image_error, max_relative_error(fast.samples(), slow));
      }
    }
  }
  log << std::scientific << std::setprecision(3);
  log << "unitary DFT vs direct sum (16x16):           max rel error " << s.dft_error << '\n';
  log << "Fresnel vs direct quadrature (32^2, 64^2):   max rel error " << s.propagator_error << '\n';
  log << "image field vs direct pupil sum (32^2):      max rel error " << s.image_error << '\n';
  log << std::defaultfloat;
  return s;
}

} // namespace ifgsim::app
