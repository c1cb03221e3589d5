#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trislit/calibrate.hpp"
#include "trislit/noise.hpp"
#include "trislit/scan.hpp"

namespace trislit::io {

inline constexpr const char* version_tag = "0.1.0";

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// z-scan dataset

inline constexpr const char* scan_csv_header =
    "z_m,p0,p1,p2,p3,p12,p13,p23,p123,kappa,phi1,phi2,phi3,g1,g2,g3";

inline void write_scan_csv(const std::filesystem::path& path,
                           const std::vector<scan::ScanRecord>& records,
                           const std::string& manifest_hash) {
  auto out = open_output(path);
  out << "# trislit zscan " << version_tag << "\n# manifest: " << manifest_hash << "\n"
      << scan_csv_header << "\n";
  for (const auto& r : records) {
    const auto t = r.terms.as_array();
    out << format_double(r.z);
    for (double v : t) out << ',' << format_double(v);
    out << ',' << format_double(r.kappa) << ',' << format_double(r.phase.phi1) << ','
        << format_double(r.phase.phi2) << ',' << format_double(r.phase.phi3) << ','
        << format_double(r.couplings.g1) << ',' << format_double(r.couplings.g2) << ','
        << format_double(r.couplings.g3) << "\n";
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  return out;
}

inline double parse_num(const std::string& s, const std::string& where) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(where + ": non-numeric field '" + s + "'");
  }
}

}  // namespace detail

inline std::vector<scan::ScanRecord> read_scan_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = detail::split_csv_line(line);
    break;
  }
  const std::vector<std::string> expected = detail::split_csv_line(scan_csv_header);
  for (const auto& col : expected)
    if (std::find(header.begin(), header.end(), col) == header.end())
      throw ConfigError("scan file '" + path.string() + "' is missing column '" + col + "'");
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < header.size(); ++i) index[header[i]] = i;

  std::vector<scan::ScanRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() < header.size())
      throw IoError(path.string() + " line " + std::to_string(lineno) + ": short row");
    auto num = [&](const char* col) {
      return detail::parse_num(f[index.at(col)], path.string());
    };
    scan::ScanRecord r;
    r.z = num("z_m");
    r.terms = SorkinTerms{num("p0"),  num("p1"),  num("p2"),  num("p3"),
                          num("p12"), num("p13"), num("p23"), num("p123")};
    r.kappa = num("kappa");
    r.phase = classical::PhaseTriple{num("phi1"), num("phi2"), num("phi3")};
    r.couplings = classical::CouplingTriple{num("g1"), num("g2"), num("g3")};
    records.push_back(r);
  }
  return records;
}

// ---------------------------------------------------------------------------
// calibration sample files: header p1_w,p2_w,p3_w,pout_w[,z_m]

inline void write_power_samples(const std::filesystem::path& path,
                                const std::vector<calib::PowerSample>& samples,
                                const std::string& manifest_hash) {
  auto out = open_output(path);
  const bool with_z = !samples.empty() && samples.front().z_m.has_value();
  out << "# trislit samples " << version_tag << "\n# manifest: " << manifest_hash << "\n"
      << "p1_w,p2_w,p3_w,pout_w" << (with_z ? ",z_m" : "") << "\n";
  for (const auto& s : samples) {
    out << format_double(s.p1_w) << ',' << format_double(s.p2_w) << ',' << format_double(s.p3_w)
        << ',' << format_double(s.pout_w);
    if (with_z) out << ',' << format_double(s.z_m.value());
    out << "\n";
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::vector<calib::PowerSample> read_power_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = detail::split_csv_line(line);
    break;
  }
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
  for (const char* col : {"p1_w", "p2_w", "p3_w", "pout_w"})
    if (!index.count(col))
      throw ConfigError("sample file '" + path.string() + "' is missing column '" + col + "'");
  const bool with_z = index.count("z_m") > 0;

  std::vector<calib::PowerSample> samples;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() < header.size())
      throw IoError(path.string() + " line " + std::to_string(lineno) + ": short row");
    calib::PowerSample s;
    s.p1_w = detail::parse_num(f[index.at("p1_w")], path.string());
    s.p2_w = detail::parse_num(f[index.at("p2_w")], path.string());
    s.p3_w = detail::parse_num(f[index.at("p3_w")], path.string());
    s.pout_w = detail::parse_num(f[index.at("pout_w")], path.string());
    if (with_z) s.z_m = detail::parse_num(f[index.at("z_m")], path.string());
    samples.push_back(s);
  }
  return samples;
}

// ---------------------------------------------------------------------------
// histograms, summaries, stability traces

struct HistogramBin {
  double center = 0.0;
  long count = 0;
};

inline std::vector<HistogramBin> make_histogram(const std::vector<double>& samples, int bins) {
  if (samples.empty() || bins < 1) return {};
  double lo = samples.front(), hi = lo;
  for (double v : samples) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) return {HistogramBin{lo, long(samples.size())}};
  std::vector<HistogramBin> out(bins);
  const double width = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) out[b].center = lo + (b + 0.5) * width;
  for (double v : samples) {
    int b = int((v - lo) / width);
    if (b >= bins) b = bins - 1;
    ++out[b].count;
  }
  return out;
}

inline void write_histogram_csv(const std::filesystem::path& path,
                                const std::vector<double>& samples, int bins,
                                const std::string& manifest_hash, const std::string& label) {
  auto out = open_output(path);
  const auto stats = lab::summarize(samples);
  out << "# trislit histogram " << version_tag << "\n# manifest: " << manifest_hash << "\n"
      << "# label: " << label << "\n"
      << "# samples: " << samples.size() << "  mean: " << format_double(stats.mean)
      << "  stddev: " << format_double(stats.stddev)
      << "  stderr: " << format_double(stats.stderr_mean)
      << "  skewness: " << format_double(lab::sample_skewness(samples)) << "\n"
      << "bin_center,count\n";
  for (const auto& b : make_histogram(samples, bins))
    out << format_double(b.center) << ',' << b.count << "\n";
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline void write_term_summary_csv(const std::filesystem::path& path,
                                   const lab::StaticRunResult& run,
                                   const std::string& manifest_hash) {
  auto out = open_output(path);
  out << "# trislit static-run summary " << version_tag << "\n# manifest: " << manifest_hash
      << "\n"
      << "# kappa_from_means: " << format_double(run.kappa_from_means)
      << "  kappa_stderr: " << format_double(run.kappa_stderr)
      << "  noiseless_kappa: " << format_double(run.noiseless_kappa) << "\n"
      << "term,mean,stddev,stderr\n";
  const auto& labels = SorkinTerms::labels();
  for (int m = 0; m < 8; ++m)
    out << labels[m] << ',' << format_double(run.stats[m].mean) << ','
        << format_double(run.stats[m].stddev) << ',' << format_double(run.stats[m].stderr_mean)
        << "\n";
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline void write_stability_csv(const std::filesystem::path& path,
                                const std::vector<lab::StabilityPoint>& trace,
                                const std::string& manifest_hash) {
  auto out = open_output(path);
  out << "# trislit stability " << version_tag << "\n# manifest: " << manifest_hash << "\n"
      << "cycle,p123_w\n";
  for (const auto& p : trace) out << p.cycle << ',' << format_double(p.p123_w) << "\n";
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// run manifest

struct RunManifest {
  std::string config_hash;
  std::string command;
  std::string engine;
  std::string created_utc;
  std::vector<std::string> outputs;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::json j;
  j["tool"] = "trislit";
  j["version"] = version_tag;
  j["config_hash"] = m.config_hash;
  j["command"] = m.command;
  j["engine"] = m.engine;
  j["created_utc"] = m.created_utc;
  j["outputs"] = m.outputs;
  auto out = open_output(path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace trislit::io
