#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "trislit/classical.hpp"
#include "trislit/core.hpp"
#include "trislit/quantum.hpp"
#include "trislit/scan.hpp"

namespace trislit::calib {

struct PowerSample {
  double p1_w = 0.0;
  double p2_w = 0.0;
  double p3_w = 0.0;
  double pout_w = 0.0;
  std::optional<double> z_m;
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> estimates;
  std::vector<double> std_errors;
  double residual_norm = 0.0;
  double initial_residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;

  double estimate(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return estimates[i];
    throw std::invalid_argument("no fitted parameter named " + name);
  }
};

namespace detail {

struct GoldenResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline GoldenResult golden_minimize(const std::function<double(double)>& f, double lo, double hi,
                                    double rel_tol = 1e-10, int max_iter = 200) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  GoldenResult r;
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
    if (b - a <= rel_tol * (std::abs(a) + std::abs(b) + 1e-300)) {
      r.converged = true;
      break;
    }
  }
  r.x = 0.5 * (a + b);
  r.fx = f(r.x);
  return r;
}

inline double sum_sq(const std::vector<double>& v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

}  // namespace detail

struct GammaFitOptions {
  int series_order = 6;
  std::vector<double> weights;  // optional per-sample weights; empty = unweighted
  double rel_tol = 1e-10;
  int max_iterations = 200;
};

/// Scalar least squares for the effective interaction strength from
/// two-beam SFG power samples.  Powers are converted to photons per pulse at
/// each beam's own wavelength; the model is the analytic order-6 photon
/// series n12(Gamma; n1, n2).
inline FitResult fit_gamma(const std::vector<PowerSample>& samples, const BeamTriple& beams,
                           const GammaFitOptions& opt = {}) {
  if (samples.size() < 3) throw std::invalid_argument("fit_gamma needs at least 3 samples");
  if (!opt.weights.empty() && opt.weights.size() != samples.size())
    throw std::invalid_argument("weight count does not match sample count");

  const double rep = beams[0].rep_rate_hz;
  std::vector<double> n1(samples.size()), n2(samples.size()), nout(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].p1_w < 0 || samples[i].p2_w < 0 || samples[i].pout_w < 0)
      throw std::invalid_argument("power samples must be non-negative");
    n1[i] = photons_per_pulse(samples[i].p1_w, beams[0].wavelength_m, rep);
    n2[i] = photons_per_pulse(samples[i].p2_w, beams[1].wavelength_m, rep);
    nout[i] = photons_per_pulse(samples[i].pout_w, beams[2].wavelength_m, rep);
  }

  FitResult result;
  result.names = {"gamma"};

  const bool all_zero = std::all_of(nout.begin(), nout.end(), [](double v) { return v == 0.0; });
  auto sse = [&](double gamma) {
    double s = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
      const double w = opt.weights.empty() ? 1.0 : opt.weights[i];
      const double r =
          quantum::two_beam_photon_series(gamma, n1[i], n2[i], opt.series_order) - nout[i];
      s += w * r * r;
    }
    return s;
  };

  if (all_zero) {
    result.estimates = {0.0};
    result.std_errors = {0.0};
    result.residual_norm = 0.0;
    result.initial_residual_norm = 0.0;
    result.converged = true;
    return result;
  }

  // first-order initial guess: nout ~ Gamma^2 n1 n2
  double ratio_sum = 0.0;
  int ratio_count = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (n1[i] > 0 && n2[i] > 0) {
      ratio_sum += nout[i] / (n1[i] * n2[i]);
      ++ratio_count;
    }
  }
  if (ratio_count == 0) throw std::invalid_argument("fit_gamma needs samples with both beams on");
  const double gamma0 = std::sqrt(std::max(ratio_sum / ratio_count, 0.0));
  result.initial_residual_norm = std::sqrt(sse(gamma0));

  const auto g = detail::golden_minimize(sse, 0.0, 8.0 * std::max(gamma0, 1e-300), opt.rel_tol,
                                         opt.max_iterations);
  if (!g.converged)
    throw NumericalError("fit_gamma did not converge: residual " + std::to_string(g.fx) +
                         " after " + std::to_string(g.iterations) + " iterations");

  result.estimates = {g.x};
  result.iterations = g.iterations;
  result.residual_norm = std::sqrt(g.fx);
  result.converged = true;

  // linearized standard error from the numeric sensitivity at the optimum
  const double h = std::max(1e-8 * g.x, 1e-16);
  double jtj = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const double w = opt.weights.empty() ? 1.0 : opt.weights[i];
    const double d = (quantum::two_beam_photon_series(g.x + h, n1[i], n2[i], opt.series_order) -
                      quantum::two_beam_photon_series(g.x - h, n1[i], n2[i], opt.series_order)) /
                     (2.0 * h);
    jtj += w * d * d;
  }
  const double dof = std::max<double>(1.0, double(samples.size()) - 1.0);
  result.std_errors = {jtj > 0 ? std::sqrt(g.fx / dof / jtj) : 0.0};
  return result;
}

struct EtaFitOptions {
  int solver_steps = 400;
  double rel_tol = 1e-10;
  int max_iterations = 200;
};

namespace detail {

inline void require_z(const std::vector<PowerSample>& ds, const std::string& name) {
  if (ds.size() < 3) throw std::invalid_argument(name + " dataset needs at least 3 samples");
  for (const auto& s : ds)
    if (!s.z_m) throw std::invalid_argument(name + " dataset is missing the z column");
}

inline bool is_flat(const std::vector<PowerSample>& ds) {
  double lo = ds.front().pout_w, hi = lo;
  for (const auto& s : ds) {
    lo = std::min(lo, s.pout_w);
    hi = std::max(hi, s.pout_w);
  }
  return (hi - lo) <= 1e-9 * std::max(std::abs(hi), 1e-300);
}

}  // namespace detail

/// Joint fit of the per-process efficiencies and the shared interaction
/// width from the three pair z-scans (masks 13, 23, 12).  Nested search:
/// Gauss-Newton on (eta1, eta2, eta3) inside a golden-section scan over the
/// width.
inline FitResult fit_eta(const std::vector<PowerSample>& ds13,
                         const std::vector<PowerSample>& ds23,
                         const std::vector<PowerSample>& ds12, const BeamTriple& beams,
                         const classical::CrystalModel& crystal_template,
                         const EtaFitOptions& opt = {}) {
  detail::require_z(ds13, "p13");
  detail::require_z(ds23, "p23");
  detail::require_z(ds12, "p12");

  const bool flat13 = detail::is_flat(ds13);
  const bool flat23 = detail::is_flat(ds23);
  const bool flat12 = detail::is_flat(ds12);
  const double sfg_peak =
      std::max_element(ds12.begin(), ds12.end(), [](const auto& a, const auto& b) {
        return a.pout_w < b.pout_w;
      })->pout_w;

  FitResult result;
  result.names = {"eta1", "eta2", "eta3", "delta_m"};

  if (flat13 && flat23 && flat12) {
    if (sfg_peak <= 1e-12) {  // consistent with zero nonlinearity
      result.estimates = {0.0, 0.0, 0.0, crystal_template.interaction_width_m};
      result.std_errors = {0.0, 0.0, 0.0, 0.0};
      result.converged = true;
      return result;
    }
    throw std::invalid_argument("all pair datasets are flat; the scans carry no z information");
  }
  if (flat13) throw std::invalid_argument("p13 dataset is flat over the scan");
  if (flat23) throw std::invalid_argument("p23 dataset is flat over the scan");
  if (flat12) throw std::invalid_argument("p12 dataset is flat over the scan");

  struct Dataset {
    const std::vector<PowerSample>* samples;
    SlitMask mask;
  };
  const std::array<Dataset, 3> data = {
      Dataset{&ds13, SlitMask{true, false, true}},
      Dataset{&ds23, SlitMask{false, true, true}},
      Dataset{&ds12, SlitMask{true, true, false}},
  };

  auto residuals = [&](const std::array<double, 3>& eta, double delta, std::vector<double>& out) {
    classical::CrystalModel c = crystal_template;
    c.eta = eta;
    c.interaction_width_m = delta;
    out.clear();
    for (const auto& d : data) {
      for (const auto& s : *d.samples) {
        const BeamTriple b = {beams[0].with_power(s.p1_w), beams[1].with_power(s.p2_w),
                              beams[2].with_power(s.p3_w)};
        out.push_back(classical::output_power(d.mask, b, c, *s.z_m, opt.solver_steps) - s.pout_w);
      }
    }
  };

  // width guess from the half-depth of the p13 dip (envelope^2 profile)
  double delta0 = crystal_template.interaction_width_m;
  {
    const auto dip = std::min_element(ds13.begin(), ds13.end(), [](const auto& a, const auto& b) {
      return a.pout_w < b.pout_w;
    });
    const double base = std::max_element(ds13.begin(), ds13.end(), [](const auto& a,
                                                                      const auto& b) {
                          return a.pout_w < b.pout_w;
                        })->pout_w;
    const double half = base - 0.5 * (base - dip->pout_w);
    double width = 0.0;
    for (const auto& s : ds13)
      if (s.pout_w <= half) width = std::max(width, std::abs(*s.z_m - *dip->z_m));
    if (width > 0) delta0 = width / 0.4163;  // half-depth radius of exp(-4 x^2 / D^2)
  }

  std::array<double, 3> eta = {0.1, 0.1, 0.1};  // refined per width below
  std::vector<double> r, r2;
  int total_iterations = 0;

  auto inner_fit = [&](double delta) {
    // damped Gauss-Newton over the three efficiencies
    for (int it = 0; it < 60; ++it) {
      ++total_iterations;
      residuals(eta, delta, r);
      const double f0 = detail::sum_sq(r);
      Eigen::MatrixXd j(r.size(), 3);
      for (int p = 0; p < 3; ++p) {
        auto bumped = eta;
        const double h = std::max(1e-4 * std::abs(eta[p]), 1e-6);
        bumped[p] += h;
        residuals(bumped, delta, r2);
        for (size_t i = 0; i < r.size(); ++i) j(i, p) = (r2[i] - r[i]) / h;
      }
      const Eigen::VectorXd rv = Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
      Eigen::Matrix3d jtj = j.transpose() * j;
      jtj.diagonal() *= 1.0 + 1e-10;
      const Eigen::Vector3d step = jtj.ldlt().solve(-j.transpose() * rv);
      double lambda = 1.0;
      std::array<double, 3> next = eta;
      double f1 = f0;
      for (int back = 0; back < 12; ++back) {
        for (int p = 0; p < 3; ++p) next[p] = std::max(0.0, eta[p] + lambda * step[p]);
        residuals(next, delta, r2);
        f1 = detail::sum_sq(r2);
        if (f1 <= f0) break;
        lambda *= 0.5;
      }
      if (f1 > f0) return f0;  // no improving step
      const double change = std::abs(next[0] - eta[0]) + std::abs(next[1] - eta[1]) +
                            std::abs(next[2] - eta[2]);
      eta = next;
      if (change <= opt.rel_tol * (eta[0] + eta[1] + eta[2] + 1e-30)) return f1;
    }
    residuals(eta, delta, r);
    return detail::sum_sq(r);
  };

  residuals(eta, delta0, r);
  result.initial_residual_norm = std::sqrt(detail::sum_sq(r));

  const auto outer = detail::golden_minimize(inner_fit, delta0 / 3.0, 3.0 * delta0, 1e-6, 80);
  const double best_sse = inner_fit(outer.x);

  result.estimates = {eta[0], eta[1], eta[2], outer.x};
  result.residual_norm = std::sqrt(best_sse);
  result.iterations = total_iterations;
  result.converged = result.residual_norm <= result.initial_residual_norm;

  // linearized standard errors over the stacked parameters
  residuals(eta, outer.x, r);
  const long nres = long(r.size());
  Eigen::MatrixXd j(nres, 4);
  for (int p = 0; p < 4; ++p) {
    auto e = eta;
    double d = outer.x;
    const double h = std::max(1e-4 * std::abs(result.estimates[p]), 1e-8);
    if (p < 3)
      e[p] += h;
    else
      d += h;
    residuals(e, d, r2);
    for (long i = 0; i < nres; ++i) j(i, p) = (r2[i] - r[i]) / h;
  }
  const Eigen::MatrixXd cov =
      (j.transpose() * j + 1e-30 * Eigen::MatrixXd::Identity(4, 4)).inverse() * best_sse /
      std::max<double>(1.0, double(nres) - 4.0);
  result.std_errors.resize(4);
  for (int p = 0; p < 4; ++p) result.std_errors[p] = std::sqrt(std::max(0.0, cov(p, p)));
  return result;
}

/// Extracts the fringe period of a kappa z-scan and inverts the phase-model
/// relation period = lambda3 / (n (1/cos(theta) - 1)) for the intersection
/// angle.  The period comes from a single-frequency projection refined
/// around the spacing of the trace's extrema.
inline FitResult fit_theta(const std::vector<scan::ScanRecord>& records,
                           const classical::CrystalModel& crystal, double lambda3_m) {
  if (records.size() < 8) throw std::invalid_argument("fit_theta needs a denser scan");

  std::vector<double> z(records.size()), kappa(records.size());
  double kmax = 0.0;
  for (size_t i = 0; i < records.size(); ++i) {
    z[i] = records[i].z;
    kappa[i] = records[i].kappa;
    kmax = std::max(kmax, std::abs(kappa[i]));
  }
  if (kmax <= 0) throw std::invalid_argument("fit_theta: kappa trace is identically zero");

  // interior extrema of the oscillating trace, ignoring numerical dust
  const double floor = 1e-3 * kmax;
  std::vector<double> maxima;
  int extrema = 0;
  for (size_t i = 1; i + 1 < records.size(); ++i) {
    if (std::abs(kappa[i]) < floor) continue;
    const bool is_max = kappa[i] > kappa[i - 1] && kappa[i] >= kappa[i + 1];
    const bool is_min = kappa[i] < kappa[i - 1] && kappa[i] <= kappa[i + 1];
    if (is_max || is_min) ++extrema;
    if (is_max) maxima.push_back(z[i]);
  }
  if (extrema < 2)
    throw std::invalid_argument("fit_theta: fewer than 2 extrema in the kappa trace");
  if (maxima.size() < 3)
    throw std::invalid_argument("fit_theta: fewer than 3 fringes visible in the scan");

  std::vector<double> spacings;
  for (size_t i = 1; i < maxima.size(); ++i) spacings.push_back(maxima[i] - maxima[i - 1]);
  std::nth_element(spacings.begin(), spacings.begin() + spacings.size() / 2, spacings.end());
  const double period0 = spacings[spacings.size() / 2];

  const double mean = std::accumulate(kappa.begin(), kappa.end(), 0.0) / kappa.size();
  double total = 0.0;
  for (double k : kappa) total += (k - mean) * (k - mean);
  // residual after removing the single-frequency component at 1/period
  auto residual_sq = [&](double period) {
    Complex acc{0.0, 0.0};
    for (size_t i = 0; i < z.size(); ++i)
      acc += (kappa[i] - mean) * std::polar(1.0, -constants::two_pi * z[i] / period);
    return std::max(0.0, total - 2.0 * std::norm(acc) / double(z.size()));
  };
  const auto best =
      detail::golden_minimize(residual_sq, 0.66 * period0, 1.5 * period0, 1e-12, 200);
  const double period = best.x;

  const double inv_cos = 1.0 + lambda3_m / (crystal.refractive_index * period);
  const double theta = std::acos(1.0 / inv_cos);
  if (theta < deg_to_rad(0.5))
    throw std::invalid_argument("fit_theta: recovered angle below 0.5 deg; the period formula is "
                                "singular near zero angle");

  FitResult result;
  result.names = {"theta_rad", "period_m"};
  result.estimates = {theta, period};
  result.iterations = best.iterations;
  result.initial_residual_norm = std::sqrt(residual_sq(period0));
  result.residual_norm = std::sqrt(best.fx);
  result.converged = best.converged && result.residual_norm <= result.initial_residual_norm;

  // curvature-based uncertainty of the matched period, propagated to theta
  const double h = 1e-4 * period;
  const double curv = (residual_sq(period + h) + residual_sq(period - h) - 2.0 * best.fx) / (h * h);
  double sigma_p =
      curv > 0 ? std::sqrt(2.0 * std::max(best.fx, 1e-300) / curv) / std::sqrt(double(z.size()))
               : 0.0;
  const double dtheta_dp =
      lambda3_m / (crystal.refractive_index * period * period * std::sin(theta)) /
      (inv_cos * inv_cos);
  result.std_errors = {std::abs(dtheta_dp) * sigma_p, sigma_p};
  return result;
}

}  // namespace trislit::calib
