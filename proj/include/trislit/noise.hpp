#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "trislit/classical.hpp"
#include "trislit/core.hpp"
#include "trislit/quantum.hpp"

namespace trislit::lab {

/// Synthetic measurement imperfections.  The relative phase drifts as a
/// Gaussian random walk per shutter cycle (slow drift); every power reading
/// carries multiplicative noise; the detector background adds to each
/// reading and is what populates the all-blocked term.  The same seed
/// replays the identical sample stream.
struct NoiseModel {
  double phase_jitter_sigma = 0.0;
  double power_noise_rel = 0.0;
  int readings_per_measurement = 500;
  double background_power_w = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(phase_jitter_sigma >= 0)) throw std::invalid_argument("phase jitter must be >= 0");
    if (!(power_noise_rel >= 0)) throw std::invalid_argument("power noise must be >= 0");
    if (readings_per_measurement < 1) throw std::invalid_argument("need at least one reading");
    if (!(background_power_w >= 0)) throw std::invalid_argument("background must be >= 0");
  }
};

/// True (noiseless) terms as a function of the accumulated drift on the
/// relative phase.
using TermEvaluator = std::function<SorkinTerms(double phase_offset)>;

inline TermEvaluator classical_term_evaluator(const BeamTriple& beams,
                                              const classical::CrystalModel& crystal, double z_m,
                                              int steps = classical::default_solver_steps) {
  return [beams, crystal, z_m, steps](double phase_offset) {
    BeamTriple b = beams;
    b[0] = b[0].with_phase(b[0].phase_rad + phase_offset);
    std::array<double, 8> terms{};
    const auto masks = all_masks();
    for (int m = 0; m < 8; ++m)
      terms[m] = classical::classical_term(masks[m], b, crystal, z_m, steps);
    return SorkinTerms::from_array(terms);
  };
}

inline TermEvaluator quantum_term_evaluator(const quantum::QuantumConfig& cfg,
                                            const classical::PhaseTriple& phases) {
  return [cfg, phases](double phase_offset) {
    classical::PhaseTriple p = phases;
    p.phi1 += phase_offset;
    std::array<double, 8> terms{};
    const auto masks = all_masks();
    for (int m = 0; m < 8; ++m) terms[m] = quantum::quantum_term(masks[m], cfg, p);
    return SorkinTerms::from_array(terms);
  };
}

struct TermStats {
  double mean = 0.0;
  double stddev = 0.0;
  double stderr_mean = 0.0;
};

namespace detail {
inline bool all_equal(const std::vector<double>& v) {
  for (double x : v)
    if (x != v.front()) return false;
  return true;
}
}  // namespace detail

inline TermStats summarize(const std::vector<double>& v) {
  TermStats s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / v.size();
  if (v.size() > 1 && !detail::all_equal(v)) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / (v.size() - 1));
    s.stderr_mean = s.stddev / std::sqrt(double(v.size()));
  }
  return s;
}

inline double sample_skewness(const std::vector<double>& v) {
  if (v.size() < 3 || detail::all_equal(v)) return 0.0;  // a delta spike has no skew
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= v.size();
  m3 /= v.size();
  return m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

struct StaticRunResult {
  std::array<std::vector<double>, 8> term_samples;  // normalized readings per term
  std::vector<double> kappa_samples;                // one per (cycle, reading)
  SorkinTerms noiseless;
  double noiseless_kappa = 0.0;
  std::array<TermStats, 8> stats;
  double kappa_from_means = 0.0;
  double kappa_stderr = 0.0;
  int cycles = 0;
  int readings = 0;
};

/// Emulates the shutter-cycle protocol: per cycle the relative phase takes
/// one random-walk step and the eight configurations are measured
/// `readings` times each; kappa samples combine the eight readings of equal
/// index within a cycle.  Draw order is fixed (drift, then readings in
/// canonical mask order), so a seed fully determines the output.
inline StaticRunResult emulate_static_run(const TermEvaluator& eval, double total_power_w,
                                          const NoiseModel& noise, int cycles) {
  noise.validate();
  if (cycles < 1) throw std::invalid_argument("static run needs at least one cycle");
  if (!(total_power_w > 0)) throw std::invalid_argument("total power must be > 0");

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int readings = noise.readings_per_measurement;

  StaticRunResult out;
  out.cycles = cycles;
  out.readings = readings;
  out.noiseless = eval(0.0);
  out.noiseless_kappa = sorkin_kappa(out.noiseless);
  for (auto& v : out.term_samples) v.reserve(size_t(cycles) * readings);
  out.kappa_samples.reserve(size_t(cycles) * readings);

  double drift = 0.0;
  for (int c = 0; c < cycles; ++c) {
    drift += noise.phase_jitter_sigma * gauss(rng);
    const SorkinTerms truth = noise.phase_jitter_sigma > 0 ? eval(drift) : out.noiseless;
    const auto tp = truth.as_array();
    for (int m = 0; m < 8; ++m) {
      for (int r = 0; r < readings; ++r) {
        const double power = tp[m] * total_power_w + noise.background_power_w;
        const double reading = power * (1.0 + noise.power_noise_rel * gauss(rng));
        out.term_samples[m].push_back(reading / total_power_w);
      }
    }
    const size_t base = size_t(c) * readings;
    for (int r = 0; r < readings; ++r) {
      SorkinTerms t;
      std::array<double, 8> a{};
      for (int m = 0; m < 8; ++m) a[m] = out.term_samples[m][base + r];
      t = SorkinTerms::from_array(a);
      out.kappa_samples.push_back(t.p123 - t.p12 - t.p23 - t.p13 + t.p1 + t.p2 + t.p3 - t.p0);
    }
  }

  std::array<double, 8> means{};
  double var_sum = 0.0;
  for (int m = 0; m < 8; ++m) {
    out.stats[m] = summarize(out.term_samples[m]);
    means[m] = out.stats[m].mean;
    var_sum += out.stats[m].stderr_mean * out.stats[m].stderr_mean;
  }
  out.kappa_from_means = sorkin_kappa(SorkinTerms::from_array(means));
  out.kappa_stderr = std::sqrt(var_sum);  // all Eq.-style coefficients are +-1
  return out;
}

struct StabilityPoint {
  int cycle = 0;
  double p123_w = 0.0;  // cycle-averaged detected power, all beams open
};

/// Power in the detected mode with all shutters open, cycle by cycle, under
/// the drift model.  Zero drift and zero reading noise give a constant
/// trace.
inline std::vector<StabilityPoint> stability_trace(const TermEvaluator& eval,
                                                   double total_power_w, const NoiseModel& noise,
                                                   int cycles) {
  noise.validate();
  if (cycles < 1) throw std::invalid_argument("stability trace needs at least one cycle");
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<StabilityPoint> out;
  out.reserve(cycles);
  const SorkinTerms base = eval(0.0);
  double drift = 0.0;
  for (int c = 0; c < cycles; ++c) {
    drift += noise.phase_jitter_sigma * gauss(rng);
    const SorkinTerms truth = noise.phase_jitter_sigma > 0 ? eval(drift) : base;
    double acc = 0.0;
    for (int r = 0; r < noise.readings_per_measurement; ++r) {
      const double power = truth.p123 * total_power_w + noise.background_power_w;
      acc += power * (1.0 + noise.power_noise_rel * gauss(rng));
    }
    out.push_back(StabilityPoint{c, acc / noise.readings_per_measurement});
  }
  return out;
}

}  // namespace trislit::lab
