// trislit: nonlinear triple-slit lab
//
// Simulates three pulsed beams mixing in a chi(2) crystal, computes the
// higher-order-interference parameter kappa from the eight shutter
// configurations, emulates the measurement protocol, and runs the
// calibration fits.  See README.md for the file formats.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "trislit/config.hpp"
#include "trislit/io.hpp"
#include "trislit/svg.hpp"

namespace fs = std::filesystem;
using namespace trislit;

namespace {

struct CommonOpts {
  std::string preset = "paper";
  std::string config_file;
  std::string outdir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--preset", opts.preset, "named preset to start from (paper, fock)");
  cmd->add_option("--config", opts.config_file, "INI config file layered over the preset");
  cmd->add_option("--out", opts.outdir, "output directory (default: $TRISLIT_OUTDIR or .)");
  cmd->allow_extras();  // --section.key value overrides
}

fs::path resolve_outdir(const CommonOpts& opts) {
  fs::path dir;
  if (!opts.outdir.empty()) {
    dir = opts.outdir;
  } else if (const char* env = std::getenv("TRISLIT_OUTDIR"); env && *env) {
    dir = env;
  } else {
    dir = ".";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

lab::Config load_config(const CLI::App* cmd, const CommonOpts& opts,
                        std::vector<std::string> extra_overrides = {}) {
  lab::Config cfg = lab::Config::preset(opts.preset);
  if (!opts.config_file.empty()) cfg.merge_ini(io::read_file(opts.config_file), opts.config_file);
  // remaining tokens are one-for-one key overrides: --section.key value
  auto extras = cmd->remaining();
  extras.insert(extras.end(), extra_overrides.begin(), extra_overrides.end());
  for (size_t i = 0; i < extras.size(); ++i) {
    std::string token = extras[i];
    if (token.rfind("--", 0) != 0 || token.find('.') == std::string::npos)
      throw ConfigError("unrecognized argument '" + token + "'");
    token.erase(0, 2);
    std::string value;
    if (const auto eq = token.find('='); eq != std::string::npos) {
      value = token.substr(eq + 1);
      token.erase(eq);
    } else {
      if (++i >= extras.size()) throw ConfigError("override '--" + token + "' is missing a value");
      value = extras[i];
    }
    cfg.set(token, value);
  }
  return cfg;
}

std::string engine_name(scan::Engine e) {
  return e == scan::Engine::classical ? "classical" : "quantum";
}

double kappa_max_z(const lab::Config& cfg) {
  auto scan_cfg = cfg.scan_config();
  const auto res = scan::run_zscan(scan_cfg);
  return scan::find_kappa_max(res.records).z;
}

void print_fit_report(const calib::FitResult& fit) {
  std::cout << "fit " << (fit.converged ? "converged" : "did not converge") << " after "
            << fit.iterations << " iterations\n";
  for (size_t i = 0; i < fit.names.size(); ++i) {
    std::cout << "  " << fit.names[i] << " = " << io::format_double(fit.estimates[i]);
    if (i < fit.std_errors.size())
      std::cout << " +- " << io::format_double(fit.std_errors[i]);
    if (fit.names[i] == "theta_rad")
      std::cout << "  (" << io::format_double(rad_to_deg(fit.estimates[i])) << " deg)";
    std::cout << "\n";
  }
  std::cout << "  residual norm " << io::format_double(fit.residual_norm) << " (initial "
            << io::format_double(fit.initial_residual_norm) << ")\n";
}

// -------------------------------------------------------------------------

int run_zscan_cmd(const CLI::App* cmd, const CommonOpts& opts,
                  const std::vector<std::string>& extra_overrides) {
  const lab::Config cfg = load_config(cmd, opts, extra_overrides);
  const fs::path outdir = resolve_outdir(opts);
  const auto scan_cfg = cfg.scan_config();
  const auto result = scan::run_zscan(scan_cfg);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

  io::RunManifest manifest;
  manifest.config_hash = cfg.hash_hex();
  manifest.command = "zscan";
  manifest.engine = engine_name(scan_cfg.engine);
  manifest.created_utc = io::utc_timestamp();
  manifest.outputs = {"zscan.csv", "zscan_kappa.svg"};

  io::write_scan_csv(outdir / "zscan.csv", result.records, manifest.config_hash);
  std::vector<double> zs, ks;
  for (const auto& r : result.records) {
    zs.push_back(r.z * 100.0);  // cm for the plot axis
    ks.push_back(r.kappa);
  }
  plot::write_line_plot(outdir / "zscan_kappa.svg", "Sorkin parameter vs crystal position",
                        "z [cm]", "kappa", zs, ks);
  io::write_manifest(outdir / "zscan_manifest.json", manifest);

  const auto peak = scan::find_kappa_max(result.records);
  double max_abs = 0.0;
  for (const auto& r : result.records) max_abs = std::max(max_abs, std::abs(r.kappa));
  std::cout << "zscan: " << result.records.size() << " points, engine " << manifest.engine
            << "\n  kappa max " << io::format_double(peak.kappa) << " at z = "
            << io::format_double(peak.z * 100.0) << " cm; max |kappa| = "
            << io::format_double(max_abs) << "\n  wrote " << (outdir / "zscan.csv").string()
            << "\n";
  return 0;
}

int run_histogram_cmd(const CLI::App* cmd, const CommonOpts& opts, int cycles,
                      std::optional<double> z_cm, int bins) {
  const lab::Config cfg = load_config(cmd, opts);
  if (cycles < 1) throw ConfigError("histogram needs at least one cycle");
  const fs::path outdir = resolve_outdir(opts);
  const auto noise = cfg.noise();
  const auto beams = cfg.beams();
  const auto crystal = cfg.crystal();

  const double z = z_cm ? *z_cm * 1e-2 : kappa_max_z(cfg);
  lab::TermEvaluator eval;
  double total = 0.0;
  if (cfg.engine() == scan::Engine::classical) {
    eval = lab::classical_term_evaluator(beams, crystal, z,
                                         int(cfg.integer("scan.solver_steps")));
    total = total_input_power(beams);
  } else {
    auto q = cfg.quantum_config();
    const double dz = z - crystal.focus_z_m;
    q.gamma *= std::exp(-2.0 * dz * dz /
                        (crystal.interaction_width_m * crystal.interaction_width_m));
    const auto phases = classical::phase_profile(
        z, crystal, {beams[0].wavelength_m, beams[1].wavelength_m, beams[2].wavelength_m});
    eval = lab::quantum_term_evaluator(q, phases);
    total = std::norm(q.alpha[0]) + std::norm(q.alpha[1]) + std::norm(q.alpha[2]);
  }

  const auto run = lab::emulate_static_run(eval, total, noise, cycles);

  io::RunManifest manifest;
  manifest.config_hash = cfg.hash_hex();
  manifest.command = "histogram";
  manifest.engine = engine_name(cfg.engine());
  manifest.created_utc = io::utc_timestamp();

  const auto& labels = SorkinTerms::labels();
  std::vector<plot::HistogramPanel> panels;
  for (int m = 0; m < 8; ++m) {
    const std::string name = "hist_" + labels[m] + ".csv";
    io::write_histogram_csv(outdir / name, run.term_samples[m], bins, manifest.config_hash,
                            labels[m]);
    manifest.outputs.push_back(name);
    panels.push_back(plot::HistogramPanel{labels[m], &run.term_samples[m]});
  }
  io::write_histogram_csv(outdir / "hist_kappa.csv", run.kappa_samples, bins,
                          manifest.config_hash, "kappa");
  manifest.outputs.push_back("hist_kappa.csv");
  panels.push_back(plot::HistogramPanel{"kappa", &run.kappa_samples});
  plot::write_histogram_grid(outdir / "histograms.svg",
                             "Per-term and kappa histograms (" +
                                 std::to_string(run.kappa_samples.size()) + " samples)",
                             panels, bins);
  manifest.outputs.push_back("histograms.svg");
  io::write_term_summary_csv(outdir / "hist_summary.csv", run, manifest.config_hash);
  manifest.outputs.push_back("hist_summary.csv");
  io::write_manifest(outdir / "histogram_manifest.json", manifest);

  std::cout << "histogram: " << run.kappa_samples.size() << " kappa samples at z = "
            << io::format_double(z * 100.0) << " cm\n  kappa from term means = "
            << io::format_double(run.kappa_from_means) << " +- "
            << io::format_double(run.kappa_stderr) << " (noiseless "
            << io::format_double(run.noiseless_kappa) << ")\n  kappa sample skewness = "
            << io::format_double(lab::sample_skewness(run.kappa_samples)) << "\n";
  return 0;
}

int run_stability_cmd(const CLI::App* cmd, const CommonOpts& opts, int cycles,
                      std::optional<double> z_cm) {
  const lab::Config cfg = load_config(cmd, opts);
  const fs::path outdir = resolve_outdir(opts);
  const auto beams = cfg.beams();
  const auto crystal = cfg.crystal();
  const double z = z_cm ? *z_cm * 1e-2 : kappa_max_z(cfg);
  const auto eval = lab::classical_term_evaluator(beams, crystal, z,
                                                  int(cfg.integer("scan.solver_steps")));
  const auto trace = lab::stability_trace(eval, total_input_power(beams), cfg.noise(), cycles);

  io::RunManifest manifest;
  manifest.config_hash = cfg.hash_hex();
  manifest.command = "stability";
  manifest.engine = "classical";
  manifest.created_utc = io::utc_timestamp();
  manifest.outputs = {"stability.csv", "stability.svg"};
  io::write_stability_csv(outdir / "stability.csv", trace, manifest.config_hash);
  std::vector<double> xs, ys;
  for (const auto& p : trace) {
    xs.push_back(p.cycle);
    ys.push_back(w_to_mw(p.p123_w));
  }
  plot::write_line_plot(outdir / "stability.svg", "Detected power, all beams open", "cycle",
                        "P123 [mW]", xs, ys);
  io::write_manifest(outdir / "stability_manifest.json", manifest);
  std::cout << "stability: " << trace.size() << " cycles at z = " << io::format_double(z * 100.0)
            << " cm; wrote " << (outdir / "stability.csv").string() << "\n";
  return 0;
}

int run_fit_gamma(const CLI::App* cmd, const CommonOpts& opts, const std::string& data) {
  const lab::Config cfg = load_config(cmd, opts);
  const fs::path outdir = resolve_outdir(opts);
  const auto samples = io::read_power_samples(data);
  const auto beams = cfg.beams();
  const auto fit = calib::fit_gamma(samples, beams);
  print_fit_report(fit);

  io::RunManifest manifest;
  manifest.config_hash = cfg.hash_hex();
  manifest.command = "fit gamma";
  manifest.engine = "quantum";
  manifest.created_utc = io::utc_timestamp();
  manifest.outputs = {"fit_gamma_residuals.csv"};
  auto out = io::open_output(outdir / "fit_gamma_residuals.csv");
  out << "# trislit fit gamma residuals\n# manifest: " << manifest.config_hash
      << "\nn1,n2,nout_measured,nout_model\n";
  const double rep = beams[0].rep_rate_hz;
  const double gamma = fit.estimate("gamma");
  for (const auto& s : samples) {
    const double n1 = photons_per_pulse(s.p1_w, beams[0].wavelength_m, rep);
    const double n2 = photons_per_pulse(s.p2_w, beams[1].wavelength_m, rep);
    const double nout = photons_per_pulse(s.pout_w, beams[2].wavelength_m, rep);
    out << io::format_double(n1) << ',' << io::format_double(n2) << ','
        << io::format_double(nout) << ','
        << io::format_double(quantum::two_beam_photon_series(gamma, n1, n2)) << "\n";
  }
  out.close();
  io::write_manifest(outdir / "fit_gamma_manifest.json", manifest);
  return 0;
}

int run_fit_eta(const CLI::App* cmd, const CommonOpts& opts, const std::string& d13,
                const std::string& d23, const std::string& d12) {
  const lab::Config cfg = load_config(cmd, opts);
  const fs::path outdir = resolve_outdir(opts);
  const auto s13 = io::read_power_samples(d13);
  const auto s23 = io::read_power_samples(d23);
  const auto s12 = io::read_power_samples(d12);
  const auto fit = calib::fit_eta(s13, s23, s12, cfg.beams(), cfg.crystal());
  print_fit_report(fit);

  io::RunManifest manifest;
  manifest.config_hash = cfg.hash_hex();
  manifest.command = "fit eta";
  manifest.engine = "classical";
  manifest.created_utc = io::utc_timestamp();
  manifest.outputs = {"fit_eta_residuals.csv"};
  classical::CrystalModel fitted = cfg.crystal();
  fitted.eta = {fit.estimates[0], fit.estimates[1], fit.estimates[2]};
  fitted.interaction_width_m = fit.estimate("delta_m");
  const auto beams = cfg.beams();
  auto out = io::open_output(outdir / "fit_eta_residuals.csv");
  out << "# trislit fit eta residuals\n# manifest: " << manifest.config_hash
      << "\ndataset,z_m,pout_measured,pout_model\n";
  const struct {
    const std::vector<calib::PowerSample>* s;
    SlitMask mask;
    const char* name;
  } sets[3] = {{&s13, SlitMask{true, false, true}, "p13"},
               {&s23, SlitMask{false, true, true}, "p23"},
               {&s12, SlitMask{true, true, false}, "p12"}};
  for (const auto& set : sets)
    for (const auto& s : *set.s) {
      const BeamTriple b = {beams[0].with_power(s.p1_w), beams[1].with_power(s.p2_w),
                            beams[2].with_power(s.p3_w)};
      out << set.name << ',' << io::format_double(s.z_m.value()) << ','
          << io::format_double(s.pout_w) << ','
          << io::format_double(classical::output_power(set.mask, b, fitted, s.z_m.value(), 400))
          << "\n";
    }
  out.close();
  io::write_manifest(outdir / "fit_eta_manifest.json", manifest);
  return 0;
}

int run_fit_theta(const CLI::App* cmd, const CommonOpts& opts, const std::string& scan_file) {
  const lab::Config cfg = load_config(cmd, opts);
  const fs::path outdir = resolve_outdir(opts);
  const auto records = io::read_scan_csv(scan_file);
  const auto crystal = cfg.crystal();
  const double lambda3 = cfg.beams()[2].wavelength_m;
  const auto fit = calib::fit_theta(records, crystal, lambda3);
  print_fit_report(fit);

  io::RunManifest manifest;
  manifest.config_hash = cfg.hash_hex();
  manifest.command = "fit theta";
  manifest.engine = "classical";
  manifest.created_utc = io::utc_timestamp();
  manifest.outputs = {"fit_theta_residuals.csv"};

  // single-frequency component at the fitted period, for the residual plot
  const double period = fit.estimate("period_m");
  double mean = 0.0;
  for (const auto& r : records) mean += r.kappa;
  mean /= double(records.size());
  Complex acc{0.0, 0.0};
  for (const auto& r : records)
    acc += (r.kappa - mean) * std::polar(1.0, -constants::two_pi * r.z / period);
  acc *= 2.0 / double(records.size());
  auto out = io::open_output(outdir / "fit_theta_residuals.csv");
  out << "# trislit fit theta residuals\n# manifest: " << manifest.config_hash
      << "\nz_m,kappa_measured,kappa_fit\n";
  for (const auto& r : records) {
    const double fitv =
        mean + (acc * std::polar(1.0, constants::two_pi * r.z / period)).real();
    out << io::format_double(r.z) << ',' << io::format_double(r.kappa) << ','
        << io::format_double(fitv) << "\n";
  }
  out.close();
  io::write_manifest(outdir / "fit_theta_manifest.json", manifest);
  return 0;
}

int run_decompose_cmd(const CLI::App* cmd, const CommonOpts& opts, std::optional<double> z_cm) {
  const lab::Config cfg = load_config(cmd, opts);
  const auto beams = cfg.beams();
  const auto crystal = cfg.crystal();
  const double z = z_cm ? *z_cm * 1e-2 : crystal.focus_z_m;
  const auto r = classical::conversion_decomposition(beams, crystal, z,
                                                     int(cfg.integer("scan.solver_steps")));
  std::cout << "conversion decomposition at z = " << io::format_double(z * 100.0) << " cm\n"
            << "  P_SFG  (pair)      = " << io::format_double(w_to_mw(r.powers.p_sfg2))
            << " mW\n"
            << "  P_DFG  (pair)      = " << io::format_double(w_to_mw(r.powers.p_dfg2))
            << " mW\n"
            << "  P'_SFG (all open)  = " << io::format_double(w_to_mw(r.powers.p_sfg3))
            << " mW\n"
            << "  P'_DFG (all open)  = " << io::format_double(w_to_mw(r.powers.p_dfg3))
            << " mW\n"
            << "  kappa (term route)       = " << io::format_double(r.kappa_terms) << "\n"
            << "  kappa (conversion route) = " << io::format_double(r.kappa_conversion) << "\n";
  if (!r.warning.empty()) std::cerr << "warning: " << r.warning << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trislit: nonlinear triple-slit simulation and calibration lab"};
  app.require_subcommand(1);

  CommonOpts zscan_opts, hist_opts, stab_opts, gamma_opts, eta_opts, theta_opts, dec_opts;

  auto* zscan = app.add_subcommand("zscan", "scan the crystal through the focus and record kappa");
  add_common(zscan, zscan_opts);
  std::string engine_flag, alpha_flag;
  double deff_flag = -1.0, gamma_peak = -1.0;
  int points_flag = -1;
  zscan->add_option("--engine", engine_flag, "classical or quantum");
  zscan->add_option("--points", points_flag, "z grid points");
  zscan->add_option("--deff", deff_flag, "nonlinear coefficient [pm/V]");
  zscan->add_option("--alpha", alpha_flag, "coherent amplitudes a1,a2,a3");
  zscan->add_option("--gamma-peak", gamma_peak, "peak interaction strength of the quantum engine");

  auto* hist = app.add_subcommand("histogram", "emulate repeated shutter-cycle measurements");
  add_common(hist, hist_opts);
  int cycles = 100, bins = 60;
  double hist_z_cm = -1.0;
  hist->add_option("--cycles", cycles, "shutter cycles (8 configurations each)");
  hist->add_option("--z-cm", hist_z_cm, "crystal position [cm]; default: the kappa maximum");
  hist->add_option("--bins", bins, "histogram bins");

  auto* stab = app.add_subcommand("stability", "trace the all-open power across cycles");
  add_common(stab, stab_opts);
  int stab_cycles = 200;
  double stab_z_cm = -1.0;
  stab->add_option("--cycles", stab_cycles, "number of cycles");
  stab->add_option("--z-cm", stab_z_cm, "crystal position [cm]; default: the kappa maximum");

  auto* fit = app.add_subcommand("fit", "calibration fits");
  fit->require_subcommand(1);
  auto* fit_gamma_cmd = fit->add_subcommand("gamma", "effective interaction strength from SFG samples");
  add_common(fit_gamma_cmd, gamma_opts);
  std::string gamma_data;
  fit_gamma_cmd->add_option("--data", gamma_data, "CSV: p1_w,p2_w,p3_w,pout_w")->required();
  auto* fit_eta_cmd = fit->add_subcommand("eta", "per-process efficiencies from pair z-scans");
  add_common(fit_eta_cmd, eta_opts);
  std::string eta13, eta23, eta12;
  fit_eta_cmd->add_option("--data13", eta13, "pair 13 CSV (with z_m)")->required();
  fit_eta_cmd->add_option("--data23", eta23, "pair 23 CSV (with z_m)")->required();
  fit_eta_cmd->add_option("--data12", eta12, "pair 12 CSV (with z_m)")->required();
  auto* fit_theta_cmd = fit->add_subcommand("theta", "intersection angle from kappa fringes");
  add_common(fit_theta_cmd, theta_opts);
  std::string theta_scan;
  fit_theta_cmd->add_option("--scan", theta_scan, "zscan CSV")->required();

  auto* dec = app.add_subcommand("decompose", "SFG/DFG conversion shares and both kappa routes");
  add_common(dec, dec_opts);
  double dec_z_cm = -1.0;
  dec->add_option("--z-cm", dec_z_cm, "crystal position [cm]; default: the focus");

  auto* preset = app.add_subcommand("preset", "preset utilities");
  preset->require_subcommand(1);
  preset->add_subcommand("list", "list the named presets");

  try {
    app.parse(argc, argv);

    if (zscan->parsed()) {
      // convenience flags map one-for-one onto config keys
      std::vector<std::string> extra;
      auto push = [&](const std::string& k, const std::string& v) {
        extra.push_back("--" + k + "=" + v);
      };
      if (!engine_flag.empty()) push("scan.engine", engine_flag);
      if (points_flag > 0) push("scan.points", std::to_string(points_flag));
      if (deff_flag >= 0) push("crystal.deff", io::format_double(deff_flag));
      if (gamma_peak >= 0) push("quantum.gamma", io::format_double(gamma_peak));
      if (!alpha_flag.empty()) {
        std::istringstream in(alpha_flag);
        std::string part;
        int k = 1;
        while (std::getline(in, part, ',') && k <= 3)
          push("quantum.alpha" + std::to_string(k++), part);
      }
      return run_zscan_cmd(zscan, zscan_opts, extra);
    }
    if (hist->parsed())
      return run_histogram_cmd(hist, hist_opts, cycles,
                               hist_z_cm >= 0 ? std::optional<double>(hist_z_cm) : std::nullopt,
                               bins);
    if (stab->parsed())
      return run_stability_cmd(stab, stab_opts, stab_cycles,
                               stab_z_cm >= 0 ? std::optional<double>(stab_z_cm) : std::nullopt);
    if (fit_gamma_cmd->parsed()) return run_fit_gamma(fit_gamma_cmd, gamma_opts, gamma_data);
    if (fit_eta_cmd->parsed()) return run_fit_eta(fit_eta_cmd, eta_opts, eta13, eta23, eta12);
    if (fit_theta_cmd->parsed()) return run_fit_theta(fit_theta_cmd, theta_opts, theta_scan);
    if (dec->parsed())
      return run_decompose_cmd(dec, dec_opts,
                               dec_z_cm >= 0 ? std::optional<double>(dec_z_cm) : std::nullopt);
    if (preset->parsed()) {
      for (const auto& [name, desc] : lab::Config::preset_list())
        std::cout << name << "\t" << desc << "\n";
      return 0;
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
