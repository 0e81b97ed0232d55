// Command-line front end: simulate, calibrate, fit, render, export, oracle-check.
//
// Exit codes:
//   0  success
//   1  usage or unexpected failure
//   2  configuration / input error
//   3  file IO error
//   4  sampling, range or resource limit
//   5  convergence or singularity failure

#include "ifgsim/app/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace ifgsim;

io::RunConfig load(const std::string& path, const std::string& out) {
  io::RunConfig cfg = io::load_config(path);
  if (!out.empty()) cfg.output_dir = out;
  return cfg;
}

std::vector<Interferogram> images_from(const std::vector<std::string>& args) {
  std::vector<std::filesystem::path> paths(args.begin(), args.end());
  return io::load_images(paths);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"ifgsim: single-atom interferogram simulator and phase estimator"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  std::string config, out;
  auto* sim = app.add_subcommand("simulate", "render the configured (detuning, defocus) sweep to IFG1 files");
  sim->add_option("-c,--config", config, "run configuration")->required();
  sim->add_option("-o,--out", out, "output directory (overrides config and $IFGSIM_OUTPUT_DIR)");

  std::vector<std::string> images;
  std::string report;
  bool pin = false, fit_rho0 = false;
  auto* cal = app.add_subcommand("calibrate", "calibrate rho0 and the spherical aberration");
  cal->add_option("-c,--config", config, "run configuration")->required();
  cal->add_option("-o,--out", out, "output directory");
  cal->add_option("--report", report, "calibration report path (default <out>/calibration.txt)");
  cal->add_flag("--pin-aberration", pin, "keep the configured aberration instead of fitting it");
  cal->add_flag("--fit-rho0", fit_rho0, "also refine rho0 on the calibration series");
  cal->add_option("images", images, "IFG1 files or manifests of the calibration series");

  std::string calibration;
  auto* fit = app.add_subcommand("fit", "fit each detuning series, then the phase curve");
  fit->add_option("-c,--config", config, "run configuration")->required();
  fit->add_option("-o,--out", out, "output directory");
  fit->add_option("--calibration", calibration, "calibration report (default <out>/calibration.txt)");
  fit->add_option("images", images, "IFG1 files or manifests")->required();

  std::string colormap = "diverging";
  double smooth_nm = 0.0;
  auto* render = app.add_subcommand("render", "render IFG1 files to PPM and PNG");
  render->add_option("images", images, "IFG1 files")->required();
  render->add_option("--colormap", colormap, "diverging or gray");
  render->add_option("--smooth-nm", smooth_nm, "display smoothing sigma in nm");
  render->add_option("-o,--out", out, "output directory")->required();

  std::string target;
  auto* exp = app.add_subcommand("export", "write an IFG1 file as x,y,signal text");
  exp->add_option("image", target, "IFG1 file")->required();
  exp->add_option("-o,--output", out, "output file (default stdout)");

  auto* oracle = app.add_subcommand("oracle-check", "compare fast kernels against direct-sum oracles");

  CLI11_PARSE(app, argc, argv);

  try {
    parallel::set_thread_count(threads);
    if (*sim) {
      app::cmd_simulate(load(config, out), std::cout);
    } else if (*cal) {
      const auto cfg = load(config, out);
      const std::filesystem::path path = report.empty() ? cfg.output_dir / "calibration.txt" : std::filesystem::path(report);
      app::CalibrateOptions opt{pin, fit_rho0};
      app::cmd_calibrate(cfg, images_from(images), opt, path, std::cout);
      std::cout << "wrote " << path.string() << '\n';
    } else if (*fit) {
      const auto cfg = load(config, out);
      const std::filesystem::path path = calibration.empty() ? cfg.output_dir / "calibration.txt" : std::filesystem::path(calibration);
      const auto r = app::cmd_fit(cfg, path, images_from(images), std::cout);
      std::cout << "wrote " << r.report.string() << ", " << r.table.string() << ", " << r.curve_data.string()
                << '\n';
    } else if (*render) {
      std::vector<std::filesystem::path> paths(images.begin(), images.end());
      for (const auto& r : app::cmd_render(paths, io::parse_colormap(colormap), smooth_nm * 1e-9, out))
        std::cout << r.png.string() << "  [" << r.min << ", " << r.max << "]\n";
    } else if (*exp) {
      if (out.empty()) {
        app::cmd_export(target, std::cout);
      } else {
        std::ofstream file(out, std::ios::trunc);
        if (!file) throw IoError("cannot write " + out);
        app::cmd_export(target, file);
      }
    } else if (*oracle) {
      app::cmd_oracle_check(std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "ifgsim: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "ifgsim: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
