#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "resprog/model.hpp"

namespace resprog {

enum class Algorithm { Fdrp, Urp, Grp, Oracle };

std::string to_string(Algorithm algorithm);
/// Accepts "fdrp", "urp", "grp", "oracle". Throws ConfigError otherwise.
Algorithm parse_algorithm(std::string_view name);

enum class SweepKind { None, PowerDbm, TxAntennas };

std::string to_string(SweepKind kind);

struct CampaignConfig {
  SystemConfig base;
  SweepKind sweep = SweepKind::None;
  /// dBm for PowerDbm, antenna counts for TxAntennas; empty for None.
  std::vector<double> sweep_values;
  std::vector<std::uint64_t> seeds;
  std::vector<Algorithm> algorithms{Algorithm::Fdrp};
  std::string output_dir = "results";
  bool coherent = true;
  double channel_variance = 1.0;
  /// Largest pattern count the oracle may enumerate.
  std::int64_t oracle_cap = 100000;
};

/// Sweep points of a campaign; a single NaN when there is no sweep.
std::vector<double> sweep_points(const CampaignConfig& cfg);

/// Base scenario with the sweep value applied. NaN leaves the base untouched.
SystemConfig config_at(const CampaignConfig& cfg, double sweep_value);

/// Throws ConfigError naming the offending key, or the line and column of a syntax error.
CampaignConfig parse_config(std::string_view text);
CampaignConfig load_config(const std::filesystem::path& path);

struct TrialRecord {
  std::uint64_t seed = 0;
  /// NaN when the campaign has no sweep.
  double sweep_value = 0.0;
  Algorithm algorithm = Algorithm::Fdrp;
  /// converged, max_iters, infeasible, horizon_exhausted or error.
  std::string status;
  std::string error;
  int horizon = 0;
  double min_experience_rate = 0.0;
  double mean_experience_rate = 0.0;
  double min_weighted_rate = 0.0;
  std::vector<double> per_user_rates;
  std::vector<int> completion_times;
  int iterations = 0;
  int selected_iteration = 0;
  std::vector<double> gamma_trace;
  std::vector<IterationRecord> trace;
  std::vector<double> per_slot_power;
  /// cdf[c] = fraction of (n, t) cells serving at most c users.
  std::vector<double> multiplex_cdf;
  /// Bits delivered to user k on subcarrier n summed over slots, row-major [k][n].
  std::vector<double> bits_per_subcarrier;
  double wall_time_s = 0.0;

  [[nodiscard]] bool ok() const { return status == "converged" || status == "max_iters"; }
};

/// Runs one algorithm on the channel drawn from `seed`. Failures are recorded in the status.
TrialRecord run_trial(const CampaignConfig& cfg, std::uint64_t seed, double sweep_value,
                      Algorithm algorithm);

/// Every (seed, sweep value, algorithm) trial, in that nesting order, on up to `workers` threads.
std::vector<TrialRecord> run_campaign(const CampaignConfig& cfg, int workers = 1);

/// Worker count from RESPROG_WORKERS, or 1 when unset or invalid.
int workers_from_env();

/// One JSON object, no trailing newline.
std::string to_json_line(const TrialRecord& record);

/// Writes trials.jsonl, aggregate.csv, convergence.csv, heatmap.csv and multiplex_cdf.csv into
/// `dir`, creating it if needed. Throws std::runtime_error naming the path on I/O failure.
void write_results(std::span<const TrialRecord> records, const std::filesystem::path& dir);

}  // namespace resprog
