#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "trislit/config.hpp"
#include "trislit/io.hpp"
#include "trislit/svg.hpp"

using namespace trislit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "trislit_io_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("paper preset carries the experimental constants") {
  const auto cfg = lab::Config::preset("paper");
  const auto beams = cfg.beams();
  CHECK(beams[0].avg_power_w == Catch::Approx(0.870));
  CHECK(beams[1].avg_power_w == Catch::Approx(0.600));
  CHECK(beams[2].avg_power_w == Catch::Approx(0.345));
  CHECK(beams[2].wavelength_m == Catch::Approx(400e-9));
  const auto crystal = cfg.crystal();
  CHECK(crystal.d_eff_m_per_v == Catch::Approx(0.749e-12));
  CHECK(crystal.eta[0] == Catch::Approx(0.15));
  CHECK(crystal.eta[2] == Catch::Approx(0.05));
  CHECK(crystal.interaction_width_m == Catch::Approx(5e-4));
  CHECK(crystal.theta_rad == Catch::Approx(deg_to_rad(6.2)));
  CHECK(crystal.focus_z_m == Catch::Approx(0.35e-2));
  const auto scan_cfg = cfg.scan_config();
  CHECK(scan_cfg.z_points == 601);
  CHECK(scan_cfg.engine == scan::Engine::classical);
  CHECK(scan_cfg.z_end_m == Catch::Approx(0.6e-2));

  CHECK_THROWS_AS(lab::Config::preset("nope"), ConfigError);
  CHECK(lab::Config::preset("fock").engine() == scan::Engine::quantum);
}

TEST_CASE("ini parsing with diagnostics") {
  auto cfg = lab::Config::preset("paper");
  cfg.merge_ini("[crystal]\n"
                "deff = 0.5  # pm/V\n"
                "theta_deg = 3.0\n"
                "[scan]\n"
                "points = 101\n");
  CHECK(cfg.num("crystal.deff") == Catch::Approx(0.5));
  CHECK(cfg.integer("scan.points") == 101);

  CHECK_THROWS_MATCHES(cfg.merge_ini("[crystal\ndeff = 1\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("line 1")));
  CHECK_THROWS_MATCHES(cfg.merge_ini("[crystal]\nnot_a_key = 1\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("not_a_key")));
  CHECK_THROWS_MATCHES(cfg.merge_ini("deff = 1\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("outside a section")));
  CHECK_THROWS_MATCHES(cfg.merge_ini("[crystal]\njust words\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("key = value")));

  cfg.set("crystal.deff", "abc");
  CHECK_THROWS_AS(cfg.num("crystal.deff"), ConfigError);
}

TEST_CASE("config hash tracks values") {
  auto a = lab::Config::preset("paper");
  auto b = lab::Config::preset("paper");
  CHECK(a.hash_hex() == b.hash_hex());
  CHECK(a.hash_hex().size() == 16);
  b.set("noise.seed", "999");
  CHECK(a.hash_hex() != b.hash_hex());
}

TEST_CASE("scan CSV round trip preserves every value bit-exactly") {
  scan::ScanConfig cfg({BeamParams(800e-9, 0.870, 140e-15, 76e6, 26e-6),
                        BeamParams(800e-9, 0.600, 140e-15, 76e6, 26e-6),
                        BeamParams(400e-9, 0.345, 140e-15, 76e6, 26e-6)},
                       classical::CrystalModel{});
  cfg.z_start_m = 0.345e-2;
  cfg.z_end_m = 0.352e-2;
  cfg.z_points = 17;
  const auto res = scan::run_zscan(cfg);

  const auto path = temp_dir() / "scan.csv";
  io::write_scan_csv(path, res.records, "deadbeefdeadbeef");
  const auto back = io::read_scan_csv(path);
  REQUIRE(back.size() == res.records.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].z == res.records[i].z);
    CHECK(back[i].kappa == res.records[i].kappa);
    CHECK(back[i].terms.as_array() == res.records[i].terms.as_array());
    CHECK(back[i].phase.phi3 == res.records[i].phase.phi3);
    CHECK(back[i].couplings.g2 == res.records[i].couplings.g2);
  }
}

TEST_CASE("power sample files round trip and flag missing columns") {
  const auto dir = temp_dir();
  std::vector<calib::PowerSample> samples = {
      calib::PowerSample{0.87, 0.6, 0.0, 0.0123, 0.0031},
      calib::PowerSample{0.80, 0.5, 0.0, 0.0101, 0.0032},
  };
  io::write_power_samples(dir / "s.csv", samples, "h");
  const auto back = io::read_power_samples(dir / "s.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].pout_w == samples[1].pout_w);
  CHECK(back[1].z_m.value() == samples[1].z_m.value());

  std::ofstream bad(dir / "bad.csv");
  bad << "p1_w,p2_w,p3_w\n1,2,3\n";
  bad.close();
  CHECK_THROWS_MATCHES(io::read_power_samples(dir / "bad.csv"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("pout_w")));
  CHECK_THROWS_AS(io::read_power_samples(dir / "missing.csv"), IoError);
}

TEST_CASE("histogram binning") {
  const std::vector<double> v = {0.0, 0.1, 0.2, 0.35, 0.5, 0.5, 0.9, 1.0};
  const auto h = io::make_histogram(v, 4);
  REQUIRE(h.size() == 4);
  long total = 0;
  for (const auto& b : h) total += b.count;
  CHECK(total == long(v.size()));
  CHECK(h.front().count == 3);  // 0.0, 0.1, 0.2
  CHECK(h.back().count == 2);   // 0.9 and 1.0

  const auto spike = io::make_histogram({0.3, 0.3, 0.3}, 10);
  REQUIRE(spike.size() == 1);
  CHECK(spike[0].center == 0.3);
  CHECK(spike[0].count == 3);
}

TEST_CASE("manifest lists the outputs of a run") {
  const auto dir = temp_dir();
  io::RunManifest m;
  m.config_hash = "cafe";
  m.command = "zscan";
  m.engine = "classical";
  m.created_utc = io::utc_timestamp();
  m.outputs = {"zscan.csv", "zscan_kappa.svg"};
  io::write_manifest(dir / "m.json", m);

  const auto j = nlohmann::json::parse(io::read_file(dir / "m.json"));
  CHECK(j["tool"] == "trislit");
  CHECK(j["config_hash"] == "cafe");
  CHECK(j["outputs"].size() == 2);
  CHECK(j["outputs"][0] == "zscan.csv");
}

TEST_CASE("svg plots are emitted as standalone vector graphics") {
  const auto dir = temp_dir();
  std::vector<double> xs, ys;
  for (int i = 0; i < 50; ++i) {
    xs.push_back(i * 0.1);
    ys.push_back(std::sin(i * 0.3));
  }
  plot::write_line_plot(dir / "line.svg", "test", "x", "y", xs, ys);
  const auto text = io::read_file(dir / "line.svg");
  CHECK(text.rfind("<svg", 0) == 0);
  CHECK(text.find("polyline") != std::string::npos);

  std::vector<double> samples;
  for (int i = 0; i < 500; ++i) samples.push_back(std::sin(i * 0.7) + 0.01 * i);
  plot::write_histogram_grid(dir / "grid.svg", "panels",
                             {plot::HistogramPanel{"a", &samples},
                              plot::HistogramPanel{"b", &samples}},
                             30);
  const auto grid = io::read_file(dir / "grid.svg");
  CHECK(grid.rfind("<svg", 0) == 0);
  CHECK(grid.find("rect") != std::string::npos);
}
