#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trislit/units.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args, const fs::path& workdir,
                  const std::string& env_prefix = "") {
  fs::create_directories(workdir);
  const fs::path out = workdir / "_stdout.txt";
  const fs::path err = workdir / "_stderr.txt";
  const std::string cmd = "cd '" + workdir.string() + "' && " + env_prefix + " '" + TRISLIT_BIN +
                          "' " + args + " > _stdout.txt 2> _stderr.txt";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "trislit_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int data_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  int rows = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

double extract_value(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size()));
}

const std::string narrow_window =
    " --scan.z_start_cm 0.33 --scan.z_end_cm 0.37 --scan.points 161";

}  // namespace

TEST_CASE("preset list") {
  const auto r = run_cli("preset list", fresh_dir("preset"));
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("paper") != std::string::npos);
  CHECK(r.out.find("fock") != std::string::npos);
}

TEST_CASE("zscan writes the dataset, plot and manifest; reruns are byte-identical") {
  const auto d1 = fresh_dir("zscan1");
  const auto r1 = run_cli("zscan --preset paper" + narrow_window, d1);
  INFO(r1.err);
  CHECK(r1.exit_code == 0);
  CHECK(fs::exists(d1 / "zscan.csv"));
  CHECK(fs::exists(d1 / "zscan_kappa.svg"));
  CHECK(fs::exists(d1 / "zscan_manifest.json"));
  CHECK(data_rows(d1 / "zscan.csv") == 161);

  const auto manifest = nlohmann::json::parse(slurp(d1 / "zscan_manifest.json"));
  for (const auto& f : manifest["outputs"]) CHECK(fs::exists(d1 / f.get<std::string>()));
  // the dataset references the manifest's config hash
  CHECK(slurp(d1 / "zscan.csv").find(manifest["config_hash"].get<std::string>()) !=
        std::string::npos);

  const auto d2 = fresh_dir("zscan2");
  const auto r2 = run_cli("zscan --preset paper" + narrow_window, d2);
  CHECK(r2.exit_code == 0);
  CHECK(slurp(d1 / "zscan.csv") == slurp(d2 / "zscan.csv"));
}

TEST_CASE("zscan with the nonlinearity off produces an all-zero kappa column") {
  const auto dir = fresh_dir("zscan_deff0");
  const auto r = run_cli("zscan --deff 0 --scan.points 21 --scan.z_start_cm 0.34 "
                         "--scan.z_end_cm 0.36",
                         dir);
  CHECK(r.exit_code == 0);
  std::ifstream in(dir / "zscan.csv");
  std::string line;
  std::getline(in, line);  // comment
  std::getline(in, line);  // comment
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string field;
    for (int i = 0; i <= 9; ++i) std::getline(ls, field, ',');  // kappa column
    CHECK(std::abs(std::stod(field)) <= 1e-12);
    ++rows;
  }
  CHECK(rows == 21);
}

TEST_CASE("quantum zscan through the CLI flags") {
  const auto dir = fresh_dir("zscan_quantum");
  const auto r = run_cli("zscan --engine quantum --alpha 1.2,1.0,0.8 --gamma-peak 0.05 "
                         "--scan.z_start_cm 0.342 --scan.z_end_cm 0.358 --scan.points 33",
                         dir);
  INFO(r.err);
  CHECK(r.exit_code == 0);
  const auto records = data_rows(dir / "zscan.csv");
  CHECK(records == 33);
  // kappa column must change sign across the window
  std::ifstream in(dir / "zscan.csv");
  std::string line;
  bool seen_pos = false, seen_neg = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'z') continue;
    std::istringstream ls(line);
    std::string field;
    for (int i = 0; i <= 9; ++i) std::getline(ls, field, ',');
    const double kappa = std::stod(field);
    seen_pos |= kappa > 1e-6;
    seen_neg |= kappa < -1e-6;
  }
  CHECK(seen_pos);
  CHECK(seen_neg);
}

TEST_CASE("config errors exit with code 2 and a diagnostic") {
  const auto dir = fresh_dir("bad_config");
  {
    std::ofstream bad(dir / "bad.ini");
    bad << "[crystal]\nnot_a_key = 1\n";
  }
  const auto r = run_cli("zscan --config bad.ini", dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("not_a_key") != std::string::npos);
  CHECK(r.err.find("line 2") != std::string::npos);

  const auto unknown = run_cli("zscan --no-such-flag 1", fresh_dir("bad_flag"));
  CHECK(unknown.exit_code == 2);

  const auto bad_preset = run_cli("zscan --preset nope", fresh_dir("bad_preset"));
  CHECK(bad_preset.exit_code == 2);
}

TEST_CASE("a valid config file layers over the preset") {
  const auto dir = fresh_dir("good_config");
  {
    std::ofstream ini(dir / "run.ini");
    ini << "[scan]\npoints = 19\nz_start_cm = 0.34\nz_end_cm = 0.36\n"
        << "[crystal]\ntheta_deg = 3.0\n";
  }
  const auto r = run_cli("zscan --config run.ini", dir);
  INFO(r.err);
  CHECK(r.exit_code == 0);
  CHECK(data_rows(dir / "zscan.csv") == 19);
}

TEST_CASE("histogram command emits per-term histograms and summary") {
  const auto dir = fresh_dir("histogram");
  const auto r = run_cli("histogram --cycles 8 --noise.readings 25 --z-cm 0.3465 --bins 24", dir);
  INFO(r.err);
  CHECK(r.exit_code == 0);
  for (const char* name : {"hist_p0.csv", "hist_p1.csv", "hist_p2.csv", "hist_p3.csv",
                           "hist_p12.csv", "hist_p13.csv", "hist_p23.csv", "hist_p123.csv",
                           "hist_kappa.csv", "hist_summary.csv", "histograms.svg"})
    CHECK(fs::exists(dir / name));
  CHECK(r.out.find("kappa from term means") != std::string::npos);
  CHECK(data_rows(dir / "hist_kappa.csv") >= 1);

  const auto manifest = nlohmann::json::parse(slurp(dir / "histogram_manifest.json"));
  CHECK(manifest["outputs"].size() == 11);

  const auto zero = run_cli("histogram --cycles 0 --z-cm 0.3465", fresh_dir("hist_zero"));
  CHECK(zero.exit_code == 2);
}

TEST_CASE("histogram picks the kappa maximum when no position is given") {
  const auto dir = fresh_dir("hist_auto");
  const auto r = run_cli("histogram --cycles 3 --noise.readings 10" + narrow_window, dir);
  INFO(r.err);
  CHECK(r.exit_code == 0);
  const double z = extract_value(r.out, "kappa samples at z = ");
  CHECK(z > 0.33);
  CHECK(z < 0.37);
}

TEST_CASE("stability command: zero drift gives a constant trace") {
  const auto dir = fresh_dir("stability");
  const auto r = run_cli("stability --cycles 12 --z-cm 0.345 --noise.phase_jitter_sigma 0 "
                         "--noise.power_noise_rel 0 --noise.readings 5",
                         dir);
  INFO(r.err);
  CHECK(r.exit_code == 0);
  std::ifstream in(dir / "stability.csv");
  std::string line;
  std::vector<double> powers;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'c') continue;
    powers.push_back(std::stod(line.substr(line.find(',') + 1)));
  }
  REQUIRE(powers.size() == 12);
  for (double p : powers) CHECK(p == powers.front());
}

TEST_CASE("fit gamma on the shipped fixture") {
  const auto dir = fresh_dir("fit_gamma");
  const auto r = run_cli(std::string("fit gamma --data '") + TRISLIT_FIXTURES +
                             "/gamma_sfg.csv'",
                         dir);
  INFO(r.err);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("converged") != std::string::npos);
  const double gamma = extract_value(r.out, "gamma = ");
  CHECK(std::abs(gamma / 1.05e-6 - 1.0) <= 1e-3);
  CHECK(fs::exists(dir / "fit_gamma_residuals.csv"));
}

TEST_CASE("fit eta on the shipped fixtures") {
  const auto dir = fresh_dir("fit_eta");
  const std::string base = TRISLIT_FIXTURES;
  const auto r = run_cli("fit eta --data13 '" + base + "/eta_p13.csv' --data23 '" + base +
                             "/eta_p23.csv' --data12 '" + base + "/eta_p12.csv'",
                         dir);
  INFO(r.err);
  CHECK(r.exit_code == 0);
  CHECK(std::abs(extract_value(r.out, "eta1 = ") / 0.15 - 1.0) <= 0.01);
  CHECK(std::abs(extract_value(r.out, "eta2 = ") / 0.15 - 1.0) <= 0.01);
  CHECK(std::abs(extract_value(r.out, "eta3 = ") / 0.05 - 1.0) <= 0.01);
  CHECK(std::abs(extract_value(r.out, "delta_m = ") / 5e-4 - 1.0) <= 0.01);
}

TEST_CASE("fit theta on a paper-preset scan") {
  const auto dir = fresh_dir("fit_theta");
  const auto scan = run_cli("zscan --preset paper" + narrow_window, dir);
  REQUIRE(scan.exit_code == 0);
  const auto r = run_cli("fit theta --scan zscan.csv", dir);
  INFO(r.err);
  CHECK(r.exit_code == 0);
  const double theta_deg = trislit::rad_to_deg(extract_value(r.out, "theta_rad = "));
  CHECK(std::abs(theta_deg - 6.2) <= 0.1);
  CHECK(fs::exists(dir / "fit_theta_residuals.csv"));
}

TEST_CASE("fit input errors map to the documented exit codes") {
  const auto missing = run_cli("fit gamma --data nowhere.csv", fresh_dir("fit_missing"));
  CHECK(missing.exit_code == 4);

  const auto dir = fresh_dir("fit_cols");
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "p1_w,p2_w,p3_w\n0.1,0.1,0\n";
  }
  const auto cols = run_cli("fit gamma --data bad.csv", dir);
  CHECK(cols.exit_code == 2);
  CHECK(cols.err.find("pout_w") != std::string::npos);
}

TEST_CASE("decompose prints both kappa routes") {
  const auto r = run_cli("decompose --z-cm 0.35", fresh_dir("decompose"));
  INFO(r.err);
  CHECK(r.exit_code == 0);
  const double k3 = extract_value(r.out, "kappa (term route)       = ");
  const double k4 = extract_value(r.out, "kappa (conversion route) = ");
  CHECK(std::abs(k3 - k4) <= 1e-12);
}

TEST_CASE("TRISLIT_OUTDIR provides the default output directory") {
  const auto dir = fresh_dir("envdir");
  const auto r = run_cli("zscan --scan.points 9 --scan.z_start_cm 0.34 --scan.z_end_cm 0.345",
                         dir, "TRISLIT_OUTDIR=sub");
  INFO(r.err);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "sub" / "zscan.csv"));
}
