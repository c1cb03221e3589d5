#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "trislit/noise.hpp"
#include "trislit/scan.hpp"

namespace trislit::lab {

/// Flat section.key -> value store behind the INI-style config files and
/// the one-for-one CLI flag overrides.  Keys are fixed; unknown keys are
/// configuration errors.
class Config {
 public:
  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"beams.pulse_fwhm_fs", "140"},
        {"beams.rep_rate_mhz", "76"},
        {"beams.waist_um", "26"},
        {"beams.signal_wavelength_nm", "800"},
        {"beams.idler_wavelength_nm", "800"},
        {"beams.pump_wavelength_nm", "400"},
        {"beams.signal_power_mw", "870"},
        {"beams.idler_power_mw", "600"},
        {"beams.pump_power_mw", "345"},
        {"beams.signal_phase_rad", "0"},
        {"beams.idler_phase_rad", "0"},
        {"beams.pump_phase_rad", "0"},
        {"crystal.length_mm", "1.0"},
        {"crystal.refractive_index", "1.611"},
        {"crystal.deff", "0.749"},  // pm/V
        {"crystal.delta_k_per_m", "0"},
        {"crystal.eta1", "0.15"},
        {"crystal.eta2", "0.15"},
        {"crystal.eta3", "0.05"},
        {"crystal.interaction_width_cm", "0.05"},
        {"crystal.three_beam_factor", "0.3"},
        {"crystal.theta_deg", "6.2"},
        {"crystal.focus_z_cm", "0.35"},
        {"scan.z_start_cm", "0.0"},
        {"scan.z_end_cm", "0.6"},
        {"scan.points", "601"},
        {"scan.engine", "classical"},
        {"scan.solver_steps", "2000"},
        {"scan.threads", "0"},
        {"quantum.alpha1", "1.2"},
        {"quantum.alpha2", "1.0"},
        {"quantum.alpha3", "0.8"},
        {"quantum.gamma", "0.05"},
        {"quantum.cutoff", "0"},
        {"quantum.series_order", "6"},
        {"noise.phase_jitter_sigma", "0.15"},
        {"noise.power_noise_rel", "0.01"},
        {"noise.readings", "500"},
        {"noise.background_mw", "0.2"},
        {"noise.seed", "12345"},
    };
    return d;
  }

  /// The `paper` preset is the experimental configuration every figure
  /// reproduction starts from; `fock` switches to the truncated-space
  /// engine on a focus-centered window.
  static Config preset(const std::string& name) {
    Config c;
    c.values_ = defaults();
    if (name == "paper") return c;
    if (name == "fock") {
      c.set("scan.engine", "quantum");
      c.set("scan.z_start_cm", "0.30");
      c.set("scan.z_end_cm", "0.40");
      c.set("scan.points", "241");
      return c;
    }
    throw ConfigError("unknown preset '" + name + "'; available: paper, fock");
  }

  static std::vector<std::pair<std::string, std::string>> preset_list() {
    return {{"paper", "classical engine, experimental powers/fit constants, full 0.6 cm scan"},
            {"fock", "quantum engine, desk-scale coherent amplitudes, focus-centered window"}};
  }

  void set(const std::string& key, const std::string& value) {
    if (!defaults().count(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
  }

  double num(const std::string& key) const {
    const std::string& s = get(key);
    try {
      size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' has non-numeric value '" + s + "'");
    }
  }

  long integer(const std::string& key) const {
    const double v = num(key);
    if (v != long(v)) throw ConfigError("config key '" + key + "' must be an integer");
    return long(v);
  }

  /// Parses INI text over this config.  Lines are `key = value` under
  /// `[section]` headers; `#` and `;` start comments.
  void merge_ini(const std::string& text, const std::string& origin = "config") {
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto cut = line.find_first_of("#;");
      if (cut != std::string::npos) line.erase(cut);
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError(origin + " line " + std::to_string(lineno) + ": unterminated section");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + " line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (section.empty())
        throw ConfigError(origin + " line " + std::to_string(lineno) + ": key outside a section");
      try {
        set(section + "." + key, value);
      } catch (const ConfigError& e) {
        throw ConfigError(origin + " line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }

  /// Sorted `key = value` lines; the run hash is taken over this text.
  std::string canonical_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  std::uint64_t hash() const {
    // FNV-1a 64
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical_text()) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  std::string hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
  }

  BeamTriple beams() const {
    const double fwhm = num("beams.pulse_fwhm_fs") * 1e-15;
    const double rep = num("beams.rep_rate_mhz") * 1e6;
    const double waist = num("beams.waist_um") * 1e-6;
    auto beam = [&](const std::string& name) {
      return BeamParams(num("beams." + name + "_wavelength_nm") * 1e-9,
                        mw_to_w(num("beams." + name + "_power_mw")), fwhm, rep, waist,
                        num("beams." + name + "_phase_rad"));
    };
    return {beam("signal"), beam("idler"), beam("pump")};
  }

  classical::CrystalModel crystal() const {
    classical::CrystalModel c;
    c.length_m = num("crystal.length_mm") * 1e-3;
    c.refractive_index = num("crystal.refractive_index");
    c.d_eff_m_per_v = num("crystal.deff") * 1e-12;
    c.delta_k_per_m = num("crystal.delta_k_per_m");
    c.eta = {num("crystal.eta1"), num("crystal.eta2"), num("crystal.eta3")};
    c.interaction_width_m = num("crystal.interaction_width_cm") * 1e-2;
    c.three_beam_factor = num("crystal.three_beam_factor");
    c.theta_rad = deg_to_rad(num("crystal.theta_deg"));
    c.focus_z_m = num("crystal.focus_z_cm") * 1e-2;
    c.validate();
    return c;
  }

  quantum::QuantumConfig quantum_config() const {
    quantum::QuantumConfig q;
    q.alpha = {Complex{num("quantum.alpha1"), 0.0}, Complex{num("quantum.alpha2"), 0.0},
               Complex{num("quantum.alpha3"), 0.0}};
    q.gamma = num("quantum.gamma");
    q.cutoff = int(integer("quantum.cutoff"));
    q.series_order = int(integer("quantum.series_order"));
    q.validate();
    return q;
  }

  scan::Engine engine() const {
    const std::string& e = get("scan.engine");
    if (e == "classical") return scan::Engine::classical;
    if (e == "quantum") return scan::Engine::quantum;
    throw ConfigError("scan.engine must be 'classical' or 'quantum', got '" + e + "'");
  }

  scan::ScanConfig scan_config() const {
    scan::ScanConfig s(beams(), crystal());
    s.z_start_m = num("scan.z_start_cm") * 1e-2;
    s.z_end_m = num("scan.z_end_cm") * 1e-2;
    s.z_points = int(integer("scan.points"));
    s.engine = engine();
    s.solver_steps = int(integer("scan.solver_steps"));
    s.threads = int(integer("scan.threads"));
    if (s.engine == scan::Engine::quantum) s.quantum = quantum_config();
    s.validate();
    return s;
  }

  NoiseModel noise() const {
    NoiseModel n;
    n.phase_jitter_sigma = num("noise.phase_jitter_sigma");
    n.power_noise_rel = num("noise.power_noise_rel");
    n.readings_per_measurement = int(integer("noise.readings"));
    n.background_power_w = mw_to_w(num("noise.background_mw"));
    n.seed = std::uint64_t(integer("noise.seed"));
    n.validate();
    return n;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace trislit::lab
