// Simulates a nine-point detuning sweep, recovers the scattering phase at
// each detuning from three viewing planes, and fits the line parameters.

#include "ifgsim/ifgsim.hpp"

#include <cstdio>
#include <vector>

int main() {
  using namespace ifgsim;

  ImagingSystem sys;
  sys.rho0 = calibrate_rho0(sys, 370e-9).rho0;
  const LineParams line{34e6, 5e6, 0.1};
  const Grid grid(128, 3.4e-6 / 128);
  const PupilLattice lattice(sys);
  const double defocus[] = {0.0, 1.7e-6, 3.3e-6};

  std::vector<PhasePoint> points;
  std::printf("%10s %10s %10s %10s\n", "MHz", "phi_true", "phi_fit", "sigma");
  std::uint64_t seed = 1;
  for (double mhz : {-30.0, -20.0, -13.0, -5.0, 0.0, 5.0, 9.0, 15.0, 25.0}) {
    const auto resp = scatter_response(mhz * 1e6, line);
    SeriesObservation obs;
    for (double z : defocus) obs.images.push_back(interferogram(resp, sys, lattice, z, grid));
    double peak = 0.0;
    for (const auto& img : obs.images)
      for (double v : img.signal) peak = std::max(peak, std::abs(v));
    obs.noise_sigma = 0.05 * peak;
    for (auto& img : obs.images) img = inject_noise(img, obs.noise_sigma, seed++);

    const SeriesFit fit = fit_series(obs, sys);
    std::printf("%10.1f %10.4f %10.4f %10.4f\n", mhz, resp.phase, fit.phase, fit.phase_sigma);
    points.push_back({mhz * 1e6, fit.phase, fit.phase_sigma});
  }

  const PhaseCurveFit curve = fit_phase_curve(points);
  std::printf("gamma  = %.2f +- %.2f MHz\n", curve.gamma * 1e-6, curve.gamma_sigma * 1e-6);
  std::printf("delta0 = %.2f +- %.2f MHz\n", curve.delta0 * 1e-6, curve.delta0_sigma * 1e-6);
  return 0;
}
