#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "resprog/campaign.hpp"

using namespace resprog;
namespace fs = std::filesystem;

namespace {

const char* kPaperDefault = R"({
  "K": 6, "N": 4, "Nt": 5, "B_hz": 30e3, "slot_s": 0.5e-3, "N0_dbm_per_hz": -174,
  "P_dbm": -40, "Q_bits": 200, "T_max": 8,
  "seeds": [1],
  "algorithms": ["urp"]
})";

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("resprog_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string without_wall_time(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    auto j = nlohmann::ordered_json::parse(line);
    j.erase("wall_time");
    out += j.dump() + '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("paper-default configuration") {
  const auto cfg = parse_config(kPaperDefault);
  CHECK(cfg.base.noise_psd_w_per_hz == doctest::Approx(3.981e-21).epsilon(1e-3));
  CHECK(cfg.base.noise_psd_w_per_hz == doctest::Approx(dbm_to_watt(-174.0)).epsilon(1e-15));
  CHECK(cfg.base.power_budget_w == doctest::Approx(1e-7).epsilon(1e-12));
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
  CHECK(cfg.algorithms == std::vector<Algorithm>{Algorithm::Urp});
  CHECK(cfg.sweep == SweepKind::None);
}

TEST_CASE("slot weights default to (0.01, 10) at T_max = 2") {
  const auto cfg = parse_config(R"({"seeds": [1], "T_max": 2})");
  REQUIRE(cfg.base.slot_weights.size() == 2);
  CHECK(cfg.base.slot_weights[0] == doctest::Approx(0.01));
  CHECK(cfg.base.slot_weights[1] == doctest::Approx(10.0));
}

TEST_CASE("configuration errors name the key") {
  auto expect_error = [](const std::string& text, const std::string& key) {
    try {
      (void)parse_config(text);
      FAIL("no error for " << key);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(key) != std::string::npos);
    }
  };
  expect_error(R"({"K": 2, "P_dbm": -40})", "seeds");
  expect_error(R"({"seeds": [1], "colour": 3})", "colour");
  expect_error(R"({"seeds": [1], "K": 2, "Q_bits": [1, 2, 3]})", "Q_bits");
  expect_error(R"({"seeds": [1], "T_max": 3, "lambda": [1, 2]})", "lambda");
  expect_error(R"({"seeds": [], "K": 2})", "seeds");
  expect_error(R"({"seeds": [1], "algorithms": ["sdr"]})", "sdr");
  expect_error(R"({"seeds": [1], "lambda": [10, 1, 2, 3]})", "non-decreasing");
  expect_error(R"({"seeds": [1], "sweep": {"power_dbm": [-40], "num_tx_antennas": [2]}})",
               "sweep");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("sweep points") {
  const auto cfg = parse_config(R"({"seeds": [1], "sweep": {"num_tx_antennas": [2, 4]}})");
  const auto points = sweep_points(cfg);
  REQUIRE(points.size() == 2);
  CHECK(config_at(cfg, points[1]).num_tx_antennas == 4);
  const auto power = parse_config(R"({"seeds": [1], "sweep": {"power_dbm": [-50, 0]}})");
  CHECK(config_at(power, -50.0).power_budget_w == doctest::Approx(1e-8));
  CHECK(std::isnan(sweep_points(parse_config(R"({"seeds": [1]})")).front()));
}

TEST_CASE("one seed, no sweep, one algorithm gives one record") {
  const auto cfg = parse_config(kPaperDefault);
  const auto records = run_campaign(cfg);
  REQUIRE(records.size() == 1);
  CHECK(records[0].ok());
  CHECK(records[0].per_user_rates.size() == 6);
  CHECK(records[0].multiplex_cdf.back() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < records[0].multiplex_cdf.size(); ++i)
    CHECK(records[0].multiplex_cdf[i] >= records[0].multiplex_cdf[i - 1]);
}

TEST_CASE("empty record list writes header-only files") {
  const auto dir = scratch_dir("empty");
  write_results({}, dir);
  for (const auto* name : {"aggregate.csv", "convergence.csv", "heatmap.csv", "multiplex_cdf.csv"}) {
    const auto lines = read_lines(dir / name);
    CHECK(lines.size() == 1);
  }
  CHECK(read_lines(dir / "trials.jsonl").empty());
  fs::remove_all(dir);
}

TEST_CASE("one fdrp record has one trace row per iteration") {
  const auto cfg = parse_config(R"({
    "K": 2, "N": 2, "Nt": 2, "Q_bits": 100, "P_dbm": -40, "T_max": 2,
    "seeds": [3], "algorithms": ["fdrp"]})");
  const auto records = run_campaign(cfg);
  REQUIRE(records.size() == 1);
  REQUIRE(records[0].ok());
  const auto dir = scratch_dir("trace");
  write_results(records, dir);
  const auto lines = read_lines(dir / "convergence.csv");
  CHECK(static_cast<int>(lines.size()) - 1 == records[0].iterations);
  CHECK(records[0].gamma_trace.size() == records[0].trace.size());
  const auto heat = read_lines(dir / "heatmap.csv");
  CHECK(heat.size() == 1 + 2 * 2);
  fs::remove_all(dir);
}

TEST_CASE("aggregate table matches recomputation from the raw log") {
  auto cfg = parse_config(kPaperDefault);
  cfg.algorithms = {Algorithm::Urp, Algorithm::Grp};
  cfg.seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);
  const auto records = run_campaign(cfg, 2);
  const auto dir = scratch_dir("aggregate");
  write_results(records, dir);

  std::map<std::string, std::vector<double>> samples;
  for (const auto& line : read_lines(dir / "trials.jsonl")) {
    const auto j = nlohmann::json::parse(line);
    if (j["status"] != "converged" && j["status"] != "max_iters") continue;
    samples[j["algorithm"].get<std::string>()].push_back(j["min_experience_rate"].get<double>());
  }
  const auto rows = read_lines(dir / "aggregate.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].rfind("sweep_value,algorithm,trials,ok_trials,min_rate_mean", 0) == 0);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::istringstream row(rows[r]);
    std::vector<std::string> cells;
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    const auto& values = samples[cells[1]];
    REQUIRE(values.size() == 20);
    CHECK(std::stoi(cells[3]) == 20);
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    CHECK(std::abs(std::stod(cells[4]) - mean) <= 1e-12 * mean);
  }
  fs::remove_all(dir);
}

TEST_CASE("raw logs are deterministic across runs and worker counts") {
  auto cfg = parse_config(kPaperDefault);
  cfg.algorithms = {Algorithm::Urp, Algorithm::Grp};
  cfg.seeds = {4, 5, 6};
  const auto a = scratch_dir("det_a");
  const auto b = scratch_dir("det_b");
  write_results(run_campaign(cfg, 1), a);
  write_results(run_campaign(cfg, 3), b);
  CHECK(without_wall_time(read_file(a / "trials.jsonl")) ==
        without_wall_time(read_file(b / "trials.jsonl")));
  for (const auto* name : {"aggregate.csv", "convergence.csv", "heatmap.csv", "multiplex_cdf.csv"})
    CHECK(read_file(a / name) == read_file(b / name));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("per-trial failures are recorded, not thrown") {
  auto cfg = parse_config(R"({"seeds": [1], "P_dbm": -90, "T_max": 1, "algorithms": ["urp"]})");
  const auto records = run_campaign(cfg);
  REQUIRE(records.size() == 1);
  CHECK(records[0].status == "horizon_exhausted");
  CHECK_FALSE(records[0].ok());
}

TEST_CASE("micro power sweep: FDRP rate is nondecreasing in power") {
  const auto cfg = parse_config(R"({
    "K": 2, "N": 2, "Nt": 2, "Q_bits": 100, "T_max": 2,
    "sweep": {"power_dbm": [-60, -50, -40]},
    "seeds": [1, 2], "algorithms": ["fdrp"]})");
  const auto records = run_campaign(cfg);
  REQUIRE(records.size() == 6);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t i = 1; i < 3; ++i) {
      const auto& lo = records[s * 3 + i - 1];
      const auto& hi = records[s * 3 + i];
      if (!lo.ok()) continue;
      REQUIRE(hi.ok());
      CHECK(hi.min_experience_rate >= lo.min_experience_rate * (1.0 - 1e-9));
    }
}
