// resprog: campaign runner and single-instance solver.
//
//   resprog run <config> [--out DIR] [--workers N]
//   resprog solve <config> --seed S --algo A [--sweep-value V] [--trace F] [--channels F] [--program F]
//   resprog oracle <config> [--seed S]
//   resprog selftest
//
// Exit codes: 0 success, 1 configuration or usage error, 2 campaign-level failure.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "resprog/campaign.hpp"
#include "resprog/channel.hpp"
#include "resprog/conic.hpp"
#include "resprog/fdrp.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kFailure = 2;

std::ofstream open_or_throw(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int workers) {
  const auto cfg = resprog::load_config(config_path);
  if (workers < 1) workers = resprog::workers_from_env();
  const auto records = resprog::run_campaign(cfg, workers);
  const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
  resprog::write_results(records, dir);
  int ok = 0;
  for (const auto& r : records) ok += r.ok() ? 1 : 0;
  std::cerr << records.size() << " trials, " << ok << " ok, results in " << dir << '\n';
  return ok == 0 ? kFailure : kOk;
}

struct SolveArgs {
  std::string config;
  std::uint64_t seed = 1;
  std::string algo = "fdrp";
  std::optional<double> sweep_value;
  std::string trace;
  std::string channels;
  std::string program;
};

int cmd_solve(const SolveArgs& args) {
  const auto cfg = resprog::load_config(args.config);
  const auto algorithm = resprog::parse_algorithm(args.algo);
  const double point = args.sweep_value.value_or(resprog::sweep_points(cfg).front());
  const auto sys = resprog::config_at(cfg, point);

  if (!args.channels.empty() || !args.program.empty()) {
    const resprog::ChannelSpec spec{args.seed, cfg.coherent, cfg.channel_variance};
    const auto h = resprog::generate_channels(spec, sys, sys.horizon_cap);
    if (!args.channels.empty()) {
      auto out = open_or_throw(args.channels);
      resprog::write_channel_dump(h, out);
    }
    if (!args.program.empty()) {
      const int horizon = resprog::find_min_horizon(h, sys).horizon;
      auto out = open_or_throw(args.program);
      resprog::conic::write_triplets(resprog::build_p7(h, sys, horizon).program, out);
    }
  }

  const auto record = resprog::run_trial(cfg, args.seed, point, algorithm);
  std::cout << resprog::to_json_line(record) << '\n';
  if (!args.trace.empty()) {
    auto out = open_or_throw(args.trace);
    out << "iteration,gamma,newton_steps,solver_status,per_slot_power\n" << std::setprecision(17);
    for (const auto& it : record.trace) {
      out << it.iteration << ',' << it.gamma << ',' << it.newton_steps << ',' << it.solver_status
          << ',';
      for (std::size_t t = 0; t < it.per_slot_power.size(); ++t)
        out << (t ? ";" : "") << it.per_slot_power[t];
      out << '\n';
    }
  }
  if (!record.ok()) std::cerr << "trial " << record.status << ": " << record.error << '\n';
  return record.ok() ? kOk : kFailure;
}

int cmd_oracle(const std::string& config_path, std::optional<std::uint64_t> seed) {
  const auto cfg = resprog::load_config(config_path);
  const auto seeds = seed ? std::vector<std::uint64_t>{*seed} : cfg.seeds;
  bool all_ok = true;
  for (const auto s : seeds)
    for (const double point : resprog::sweep_points(cfg)) {
      const auto record = resprog::run_trial(cfg, s, point, resprog::Algorithm::Oracle);
      std::cout << resprog::to_json_line(record) << '\n';
      all_ok = all_ok && record.ok();
    }
  return all_ok ? kOk : kFailure;
}

int cmd_selftest() {
  const auto cases = resprog::conic::run_selftest();
  bool all = true;
  std::cout << std::left << std::setw(20) << "case" << std::setw(18) << "status"
            << std::setw(16) << "expected" << std::setw(16) << "achieved" << std::setw(10)
            << "seconds" << "result\n";
  for (const auto& c : cases) {
    std::cout << std::setw(20) << c.name << std::setw(18)
              << resprog::conic::to_string(c.solution.status) << std::setw(16)
              << c.expected_value << std::setw(16) << c.achieved_value << std::setw(10)
              << std::setprecision(3) << c.seconds << std::setprecision(6)
              << (c.passed ? "pass" : "FAIL") << '\n';
    all = all && c.passed;
  }
  return all ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint time/frequency/space/power resource programming for MISO-OFDM downlink"};
  app.require_subcommand(1);

  std::string run_config;
  std::string run_out;
  int run_workers = 0;
  auto* run = app.add_subcommand("run", "Run a Monte Carlo campaign and write result tables");
  run->add_option("config", run_config, "Campaign configuration (JSON)")->required();
  run->add_option("--out", run_out, "Output directory (default: output_dir from the config)");
  run->add_option("--workers", run_workers,
                  "Concurrent trials (default: RESPROG_WORKERS, else 1)");

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Solve one instance and print its trial record");
  solve->add_option("config", solve_args.config, "Campaign configuration (JSON)")->required();
  solve->add_option("--seed", solve_args.seed, "Channel seed")->required();
  solve->add_option("--algo", solve_args.algo, "fdrp, urp, grp or oracle")->required();
  solve->add_option("--sweep-value", solve_args.sweep_value,
                    "Sweep point (default: first point of the config)");
  solve->add_option("--trace", solve_args.trace, "Write the per-iteration trace as CSV");
  solve->add_option("--channels", solve_args.channels, "Write the channel tensor");
  solve->add_option("--program", solve_args.program,
                    "Write the initializer program at the minimum horizon as triplets");

  std::string oracle_config;
  std::optional<std::uint64_t> oracle_seed;
  auto* oracle = app.add_subcommand("oracle", "Exhaustive orthogonal-allocation oracle");
  oracle->add_option("config", oracle_config, "Campaign configuration (JSON)")->required();
  oracle->add_option("--seed", oracle_seed, "Only this seed (default: every seed in the config)");

  auto* selftest = app.add_subcommand("selftest", "Run the conic solver self-test battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(run_config, run_out, run_workers);
    if (*solve) return cmd_solve(solve_args);
    if (*oracle) return cmd_oracle(oracle_config, oracle_seed);
    if (*selftest) return cmd_selftest();
  } catch (const resprog::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
