#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "trislit/classical.hpp"
#include "trislit/core.hpp"
#include "trislit/parallel.hpp"
#include "trislit/quantum.hpp"

namespace trislit::scan {

enum class Engine { classical, quantum };

inline std::vector<double> linspace(double start, double end, int points) {
  if (points < 2) throw std::invalid_argument("grid needs at least two points");
  std::vector<double> out(points);
  const double step = (end - start) / (points - 1);
  for (int i = 0; i < points; ++i) out[i] = start + i * step;
  out.back() = end;
  return out;
}

struct ScanConfig {
  BeamTriple beams;
  classical::CrystalModel crystal;
  double z_start_m = 0.0;
  double z_end_m = 0.60e-2;
  int z_points = 601;
  Engine engine = Engine::classical;
  std::optional<quantum::QuantumConfig> quantum;
  int solver_steps = classical::default_solver_steps;
  int threads = 0;

  ScanConfig(BeamTriple b, classical::CrystalModel c) : beams(std::move(b)), crystal(c) {}

  void validate() const {
    if (!(z_start_m < z_end_m)) throw std::invalid_argument("scan needs z_start < z_end");
    if (z_points < 2) throw std::invalid_argument("scan needs at least two grid points");
    crystal.validate();
    if (engine == Engine::quantum) {
      if (!quantum) throw std::invalid_argument("quantum engine selected without quantum config");
      quantum->validate();
    }
  }

  std::array<double, 3> wavelengths() const {
    return {beams[0].wavelength_m, beams[1].wavelength_m, beams[2].wavelength_m};
  }
};

struct ScanRecord {
  double z = 0.0;
  SorkinTerms terms;
  double kappa = 0.0;
  classical::PhaseTriple phase;
  classical::CouplingTriple couplings;  // pair-overlap couplings (quantum: gamma(Z) in all three)
};

struct ZscanResult {
  std::vector<ScanRecord> records;
  std::vector<std::string> warnings;
};

/// Evaluates all eight shutter configurations on the inclusive Z grid.
/// Grid points run on a parallel map and are merged in grid order, so the
/// output is identical for any worker count.
inline ZscanResult run_zscan(const ScanConfig& cfg) {
  cfg.validate();
  ZscanResult result;
  const std::vector<double> zs = linspace(cfg.z_start_m, cfg.z_end_m, cfg.z_points);
  const double step = (cfg.z_end_m - cfg.z_start_m) / (cfg.z_points - 1);

  if (cfg.crystal.theta_rad > 0) {
    const double period = classical::fringe_period(cfg.crystal, cfg.beams[2].wavelength_m);
    if (step > period / 8.0)
      result.warnings.push_back(
          "z step " + std::to_string(step) + " m resolves fewer than 8 points per fringe period (" +
          std::to_string(period) + " m); fringes may be undersampled");
  }

  result.records.resize(zs.size());
  if (cfg.engine == Engine::classical) {
    const auto masks = all_masks();
    parallel_for_index(long(zs.size()), cfg.threads, [&](long i) {
      const double z = zs[i];
      try {
        ScanRecord rec;
        rec.z = z;
        std::array<double, 8> terms{};
        for (int m = 0; m < 8; ++m)
          terms[m] = classical::classical_term(masks[m], cfg.beams, cfg.crystal, z,
                                               cfg.solver_steps);
        rec.terms = SorkinTerms::from_array(terms);
        rec.kappa = sorkin_kappa(rec.terms);
        rec.phase = classical::phase_profile(z, cfg.crystal, cfg.wavelengths());
        rec.couplings = classical::coupling_profile(z, cfg.crystal, false,
                                                    angular_frequency(cfg.beams[0].wavelength_m));
        result.records[i] = rec;
      } catch (const std::exception& e) {
        throw NumericalError("z-scan failed at Z = " + std::to_string(z) + " m: " + e.what());
      }
    });
  } else {
    const auto points = quantum::quantum_kappa_scan(zs, *cfg.quantum, cfg.crystal,
                                                    cfg.wavelengths(), quantum::EvolveMethod::exact,
                                                    cfg.threads);
    for (size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      result.records[i] =
          ScanRecord{p.z, p.terms, p.kappa, p.phases,
                     classical::CouplingTriple{p.gamma, p.gamma, p.gamma}};
    }
  }
  return result;
}

/// Per-cycle hook for the measurement emulation; the identity keeps the run
/// noiseless and deterministic.
using CycleTransform = std::function<SorkinTerms(int cycle, const SorkinTerms&)>;

/// Repeats the eight-configuration cycle at a fixed crystal position.
inline std::vector<SorkinTerms> run_static(const ScanConfig& cfg, double z_m, int cycles,
                                           const CycleTransform& transform = nullptr) {
  cfg.validate();
  if (cycles < 1) throw std::invalid_argument("static run needs at least one cycle");

  SorkinTerms base;
  if (cfg.engine == Engine::classical) {
    std::array<double, 8> terms{};
    const auto masks = all_masks();
    for (int m = 0; m < 8; ++m)
      terms[m] = classical::classical_term(masks[m], cfg.beams, cfg.crystal, z_m, cfg.solver_steps);
    base = SorkinTerms::from_array(terms);
  } else {
    const auto points = quantum::quantum_kappa_scan({z_m}, *cfg.quantum, cfg.crystal,
                                                    cfg.wavelengths());
    base = points.front().terms;
  }

  std::vector<SorkinTerms> out;
  out.reserve(cycles);
  for (int c = 0; c < cycles; ++c) out.push_back(transform ? transform(c, base) : base);
  return out;
}

struct KappaMax {
  double z = 0.0;
  double kappa = 0.0;
  long grid_index = 0;
};

/// Grid argmax of kappa with local quadratic refinement; ties break toward
/// smaller Z.  Endpoint maxima are returned unrefined.
inline KappaMax find_kappa_max(const std::vector<ScanRecord>& records) {
  if (records.empty()) throw std::invalid_argument("find_kappa_max: empty scan");
  long best = 0;
  for (long i = 1; i < long(records.size()); ++i)
    if (records[i].kappa > records[best].kappa) best = i;

  KappaMax r{records[best].z, records[best].kappa, best};
  if (best == 0 || best == long(records.size()) - 1) return r;

  const double km = records[best - 1].kappa;
  const double k0 = records[best].kappa;
  const double kp = records[best + 1].kappa;
  const double denom = km - 2.0 * k0 + kp;
  if (denom >= 0.0) return r;  // not locally concave; keep the grid point
  const double h = 0.5 * (records[best + 1].z - records[best - 1].z);
  const double offset = 0.5 * (km - kp) / denom;
  r.z = records[best].z + offset * h;
  r.kappa = k0 - 0.25 * (km - kp) * offset;
  return r;
}

}  // namespace trislit::scan
