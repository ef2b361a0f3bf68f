#include "resprog/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "resprog/baselines.hpp"
#include "resprog/channel.hpp"
#include "resprog/fdrp.hpp"
#include "resprog/metrics.hpp"
#include "resprog/oracle.hpp"

namespace resprog {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr double kNoSweep = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
  throw ConfigError("key '" + key + "': " + what);
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) bad_key(key, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad_key(key, "expected an integer");
  const auto i = v.get<std::int64_t>();
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
    bad_key(key, "out of range");
  return static_cast<int>(i);
}

std::vector<double> numbers(const json& v, const std::string& key) {
  if (!v.is_array()) bad_key(key, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(number(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

/// Scalar broadcast to `count` entries, or a list of exactly `count` entries.
std::vector<double> per_user(const json& v, const std::string& key, int count) {
  if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(count), v.get<double>());
  auto out = numbers(v, key);
  if (static_cast<int>(out.size()) != count)
    bad_key(key, "expected " + std::to_string(count) + " entries, got " +
                     std::to_string(out.size()));
  return out;
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    const std::string& prefix) {
  for (const auto& item : obj.items())
    if (std::ranges::find(known, std::string_view(item.key())) == known.end())
      bad_key(prefix + item.key(), "unknown key");
}

bool same_sweep(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

std::string status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIters: return "max_iters";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "error";
}

SolveSummary run_oracle(const ChannelTensor& h, const SystemConfig& cfg, std::int64_t cap) {
  const auto result = brute_force_orthogonal(h, cfg, cfg.horizon_cap, cap);
  SolveSummary s;
  s.horizon = cfg.horizon_cap;
  if (!result.feasible) {
    s.status = SolveStatus::Infeasible;
    return s;
  }
  s.status = SolveStatus::Converged;
  s.precoders = result.precoders;
  s.allocation = recover_allocation(s.precoders, zero_level(cfg));
  s.completion_times = result.completion_times;
  s.experience_rates = experience_rates(cfg.payload_bits, s.completion_times, cfg.slot_s);
  s.per_slot_power = s.precoders.per_slot_power();
  return s;
}

void fill(TrialRecord& r, const SolveSummary& s, const ChannelTensor& h, const SystemConfig& cfg) {
  r.status = status_name(s.status);
  r.horizon = s.horizon;
  r.iterations = s.iterations;
  r.selected_iteration = s.selected_iteration;
  r.gamma_trace = s.gamma_trace;
  r.trace = s.trace;
  if (s.status == SolveStatus::Infeasible) return;
  r.per_user_rates = s.experience_rates;
  r.completion_times = s.completion_times;
  r.per_slot_power = s.per_slot_power;
  r.min_experience_rate = *std::ranges::min_element(s.experience_rates);
  double sum = 0.0;
  for (const double rate : s.experience_rates) sum += rate;
  r.mean_experience_rate = sum / static_cast<double>(s.experience_rates.size());
  r.min_weighted_rate = s.min_weighted_rate(cfg.user_weights);
  r.multiplex_cdf = multiplex_histogram(s.allocation).cdf;
  r.bits_per_subcarrier =
      delivered_bits_per_subcarrier(slice_slots(h, s.horizon), s.precoders, cfg);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string key_prefix(const TrialRecord& r) {
  return std::to_string(r.seed) + ',' + fmt(r.sweep_value) + ',' + to_string(r.algorithm);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

struct Moments {
  double mean = kNoSweep;
  double sem = kNoSweep;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  double sum = 0.0;
  for (const double x : xs) sum += x;
  const auto n = static_cast<double>(xs.size());
  m.mean = sum / n;
  if (xs.size() < 2) {
    m.sem = 0.0;
    return m;
  }
  double ss = 0.0;
  for (const double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.sem = std::sqrt(ss / (n - 1.0) / n);
  return m;
}

}  // namespace

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Fdrp: return "fdrp";
    case Algorithm::Urp: return "urp";
    case Algorithm::Grp: return "grp";
    case Algorithm::Oracle: return "oracle";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (const auto a : {Algorithm::Fdrp, Algorithm::Urp, Algorithm::Grp, Algorithm::Oracle})
    if (name == to_string(a)) return a;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::string to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::None: return "none";
    case SweepKind::PowerDbm: return "power_dbm";
    case SweepKind::TxAntennas: return "num_tx_antennas";
  }
  return "unknown";
}

std::vector<double> sweep_points(const CampaignConfig& cfg) {
  if (cfg.sweep == SweepKind::None || cfg.sweep_values.empty()) return {kNoSweep};
  return cfg.sweep_values;
}

SystemConfig config_at(const CampaignConfig& cfg, double sweep_value) {
  SystemConfig sys = cfg.base;
  if (std::isnan(sweep_value)) return sys;
  switch (cfg.sweep) {
    case SweepKind::None: break;
    case SweepKind::PowerDbm: sys.power_budget_w = dbm_to_watt(sweep_value); break;
    case SweepKind::TxAntennas: sys.num_tx_antennas = static_cast<int>(sweep_value); break;
  }
  return sys;
}

CampaignConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(e.what());
  }
  if (!root.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown(root,
                 {"K", "N", "Nt", "B_hz", "slot_s", "N0_dbm_per_hz", "P_dbm", "Q_bits", "eta",
                  "lambda", "T_max", "seeds", "sweep", "algorithms", "tolerances",
                  "sparsity_norm", "greedy_order", "channel", "output_dir", "oracle_cap"},
                 "");

  CampaignConfig cfg;
  SystemConfig& sys = cfg.base;
  sys = default_config();
  auto opt = [&root](const char* key) -> const json* {
    const auto it = root.find(key);
    return it == root.end() ? nullptr : &*it;
  };

  if (const auto* v = opt("K")) sys.num_users = integer(*v, "K");
  if (const auto* v = opt("N")) sys.num_subcarriers = integer(*v, "N");
  if (const auto* v = opt("Nt")) sys.num_tx_antennas = integer(*v, "Nt");
  if (const auto* v = opt("B_hz")) sys.bandwidth_hz = number(*v, "B_hz");
  if (const auto* v = opt("slot_s")) sys.slot_s = number(*v, "slot_s");
  if (const auto* v = opt("N0_dbm_per_hz"))
    sys.noise_psd_w_per_hz = dbm_to_watt(number(*v, "N0_dbm_per_hz"));
  if (const auto* v = opt("P_dbm")) sys.power_budget_w = dbm_to_watt(number(*v, "P_dbm"));
  if (const auto* v = opt("T_max")) sys.horizon_cap = integer(*v, "T_max");
  if (sys.num_users < 1) bad_key("K", "must be at least 1");

  const json q = opt("Q_bits") ? *opt("Q_bits") : json(200.0);
  sys.payload_bits = per_user(q, "Q_bits", sys.num_users);
  const json eta = opt("eta") ? *opt("eta") : json(1.0);
  sys.user_weights = per_user(eta, "eta", sys.num_users);
  if (const auto* v = opt("lambda")) {
    sys.slot_weights = numbers(*v, "lambda");
    if (static_cast<int>(sys.slot_weights.size()) != sys.horizon_cap)
      bad_key("lambda", "expected T_max = " + std::to_string(sys.horizon_cap) + " entries");
  } else if (sys.horizon_cap >= 1) {
    sys.slot_weights = default_slot_weights(sys.horizon_cap);
  }

  if (const auto* v = opt("tolerances")) {
    if (!v->is_object()) bad_key("tolerances", "expected an object");
    reject_unknown(*v, {"zero_threshold", "conv_tol", "max_sca_iters", "solver_tol"},
                   "tolerances.");
    if (v->contains("zero_threshold"))
      sys.zero_threshold = number(v->at("zero_threshold"), "tolerances.zero_threshold");
    if (v->contains("conv_tol")) sys.conv_tol = number(v->at("conv_tol"), "tolerances.conv_tol");
    if (v->contains("max_sca_iters"))
      sys.max_sca_iters = integer(v->at("max_sca_iters"), "tolerances.max_sca_iters");
    if (v->contains("solver_tol"))
      sys.solver_tol = number(v->at("solver_tol"), "tolerances.solver_tol");
  }
  if (const auto* v = opt("sparsity_norm")) {
    const auto name = v->is_string() ? v->get<std::string>() : std::string();
    if (name == "l1") sys.sparsity_norm = SparsityNorm::EntrywiseL1;
    else if (name == "group_l2") sys.sparsity_norm = SparsityNorm::GroupL2;
    else bad_key("sparsity_norm", "expected \"l1\" or \"group_l2\"");
  }
  if (const auto* v = opt("greedy_order")) {
    const auto name = v->is_string() ? v->get<std::string>() : std::string();
    if (name == "index") sys.greedy_order = GreedyOrder::UserIndex;
    else if (name == "descending_payload") sys.greedy_order = GreedyOrder::DescendingPayload;
    else bad_key("greedy_order", "expected \"index\" or \"descending_payload\"");
  }
  if (const auto* v = opt("channel")) {
    if (!v->is_object()) bad_key("channel", "expected an object");
    reject_unknown(*v, {"coherent", "variance"}, "channel.");
    if (v->contains("coherent")) {
      if (!v->at("coherent").is_boolean()) bad_key("channel.coherent", "expected true or false");
      cfg.coherent = v->at("coherent").get<bool>();
    }
    if (v->contains("variance")) {
      cfg.channel_variance = number(v->at("variance"), "channel.variance");
      if (!(cfg.channel_variance > 0.0)) bad_key("channel.variance", "must be positive");
    }
  }
  if (const auto* v = opt("output_dir")) {
    if (!v->is_string()) bad_key("output_dir", "expected a string");
    cfg.output_dir = v->get<std::string>();
  }
  if (const auto* v = opt("oracle_cap")) {
    if (!v->is_number_integer() || v->get<std::int64_t>() < 1)
      bad_key("oracle_cap", "expected a positive integer");
    cfg.oracle_cap = v->get<std::int64_t>();
  }

  const auto* seeds = opt("seeds");
  if (!seeds) bad_key("seeds", "missing");
  if (!seeds->is_array() || seeds->empty()) bad_key("seeds", "expected a nonempty list");
  for (std::size_t i = 0; i < seeds->size(); ++i) {
    const auto& s = (*seeds)[i];
    if (!s.is_number_unsigned())
      bad_key("seeds[" + std::to_string(i) + "]", "expected a nonnegative integer");
    cfg.seeds.push_back(s.get<std::uint64_t>());
  }

  if (const auto* v = opt("algorithms")) {
    if (!v->is_array() || v->empty()) bad_key("algorithms", "expected a nonempty list");
    cfg.algorithms.clear();
    for (const auto& a : *v) {
      if (!a.is_string()) bad_key("algorithms", "expected algorithm names");
      Algorithm alg;
      try {
        alg = parse_algorithm(a.get<std::string>());
      } catch (const ConfigError& e) {
        bad_key("algorithms", e.what());
      }
      if (std::ranges::find(cfg.algorithms, alg) != cfg.algorithms.end())
        bad_key("algorithms", "duplicate '" + a.get<std::string>() + "'");
      cfg.algorithms.push_back(alg);
    }
  }

  if (const auto* v = opt("sweep")) {
    if (v->is_string() && v->get<std::string>() == "none") {
      cfg.sweep = SweepKind::None;
    } else if (v->is_object() && v->size() == 1) {
      const auto item = v->items().begin();
      const std::string name = item.key();
      const json& values = item.value();
      if (name == "power_dbm") {
        cfg.sweep = SweepKind::PowerDbm;
      } else if (name == "num_tx_antennas") {
        cfg.sweep = SweepKind::TxAntennas;
        for (const auto& x : values)
          if (!x.is_number_integer()) bad_key("sweep.num_tx_antennas", "expected integers");
      } else {
        bad_key("sweep." + name, "unknown sweep");
      }
      cfg.sweep_values = numbers(values, "sweep." + name);
      if (cfg.sweep_values.empty()) bad_key("sweep." + name, "expected a nonempty list");
    } else {
      bad_key("sweep", "expected \"none\" or an object with power_dbm or num_tx_antennas");
    }
  }

  std::vector<std::string> errors;
  for (const double point : sweep_points(cfg)) {
    for (const auto& e : validate_config(config_at(cfg, point))) {
      const std::string where = std::isnan(point) ? "" : " (sweep value " + fmt(point) + ")";
      errors.push_back(e + where);
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

CampaignConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return parse_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

TrialRecord run_trial(const CampaignConfig& cfg, std::uint64_t seed, double sweep_value,
                      Algorithm algorithm) {
  TrialRecord r;
  r.seed = seed;
  r.sweep_value = sweep_value;
  r.algorithm = algorithm;
  const auto start = std::chrono::steady_clock::now();
  try {
    const SystemConfig sys = config_at(cfg, sweep_value);
    require_valid(sys);
    const ChannelSpec spec{seed, cfg.coherent, cfg.channel_variance};
    const ChannelTensor h = generate_channels(spec, sys, sys.horizon_cap);
    SolveSummary s;
    switch (algorithm) {
      case Algorithm::Fdrp: s = run_fdrp(h, sys); break;
      case Algorithm::Urp: s = run_urp(h, sys); break;
      case Algorithm::Grp: s = run_grp(h, sys); break;
      case Algorithm::Oracle: s = run_oracle(h, sys, cfg.oracle_cap); break;
    }
    fill(r, s, h, sys);
  } catch (const HorizonError& e) {
    r.status = "horizon_exhausted";
    r.error = e.what();
  } catch (const std::exception& e) {
    r.status = "error";
    r.error = e.what();
  }
  r.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<TrialRecord> run_campaign(const CampaignConfig& cfg, int workers) {
  if (cfg.seeds.empty()) throw ConfigError("key 'seeds': expected a nonempty list");
  if (cfg.algorithms.empty()) throw ConfigError("key 'algorithms': expected a nonempty list");
  struct Job {
    std::uint64_t seed;
    double sweep_value;
    Algorithm algorithm;
  };
  std::vector<Job> jobs;
  for (const auto seed : cfg.seeds)
    for (const double point : sweep_points(cfg))
      for (const auto algorithm : cfg.algorithms) jobs.push_back({seed, point, algorithm});

  std::vector<TrialRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++)
      records[i] = run_trial(cfg, jobs[i].seed, jobs[i].sweep_value, jobs[i].algorithm);
  };
  const auto extra = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)) - 1,
                                           jobs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < extra; ++i) pool.emplace_back(work);
    work();
  }
  return records;
}

int workers_from_env() {
  const char* value = std::getenv("RESPROG_WORKERS");
  if (!value) return 1;
  int n = 0;
  const std::string_view text(value);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), n);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || n < 1) return 1;
  return n;
}

std::string to_json_line(const TrialRecord& r) {
  ordered_json j;
  j["seed"] = r.seed;
  j["sweep_value"] = std::isnan(r.sweep_value) ? ordered_json(nullptr) : ordered_json(r.sweep_value);
  j["algorithm"] = to_string(r.algorithm);
  j["status"] = r.status;
  if (!r.error.empty()) j["error"] = r.error;
  j["horizon"] = r.horizon;
  j["min_experience_rate"] = r.min_experience_rate;
  j["mean_experience_rate"] = r.mean_experience_rate;
  j["min_weighted_rate"] = r.min_weighted_rate;
  j["per_user_rates"] = r.per_user_rates;
  j["completion_times"] = r.completion_times;
  j["iterations"] = r.iterations;
  j["selected_iteration"] = r.selected_iteration;
  j["gamma_trace"] = r.gamma_trace;
  j["per_slot_power"] = r.per_slot_power;
  j["multiplex_cdf"] = r.multiplex_cdf;
  j["wall_time"] = r.wall_time_s;
  return j.dump();
}

void write_results(std::span<const TrialRecord> records, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  {
    const auto path = dir / "trials.jsonl";
    auto out = open_output(path);
    for (const auto& r : records) out << to_json_line(r) << '\n';
    finish(out, path);
  }

  {
    const auto path = dir / "aggregate.csv";
    auto out = open_output(path);
    out << "sweep_value,algorithm,trials,ok_trials,min_rate_mean,min_rate_stderr,"
           "mean_rate_mean,mean_rate_stderr\n";
    struct Group {
      double sweep;
      Algorithm algorithm;
      int trials = 0;
      std::vector<double> min_rates;
      std::vector<double> mean_rates;
    };
    std::vector<Group> groups;
    for (const auto& r : records) {
      auto it = std::ranges::find_if(groups, [&](const Group& g) {
        return same_sweep(g.sweep, r.sweep_value) && g.algorithm == r.algorithm;
      });
      if (it == groups.end()) {
        groups.emplace_back();
        groups.back().sweep = r.sweep_value;
        groups.back().algorithm = r.algorithm;
        it = std::prev(groups.end());
      }
      ++it->trials;
      if (r.ok()) {
        it->min_rates.push_back(r.min_experience_rate);
        it->mean_rates.push_back(r.mean_experience_rate);
      }
    }
    for (const auto& g : groups) {
      const auto lo = moments(g.min_rates);
      const auto avg = moments(g.mean_rates);
      out << fmt(g.sweep) << ',' << to_string(g.algorithm) << ',' << g.trials << ','
          << g.min_rates.size() << ',' << fmt(lo.mean) << ',' << fmt(lo.sem) << ','
          << fmt(avg.mean) << ',' << fmt(avg.sem) << '\n';
    }
    finish(out, path);
  }

  {
    const auto path = dir / "convergence.csv";
    auto out = open_output(path);
    out << "seed,sweep_value,algorithm,iteration,gamma,newton_steps,solver_status,per_slot_power\n";
    for (const auto& r : records)
      for (const auto& it : r.trace) {
        out << key_prefix(r) << ',' << it.iteration << ',' << fmt(it.gamma) << ','
            << it.newton_steps << ',' << it.solver_status << ',';
        for (std::size_t t = 0; t < it.per_slot_power.size(); ++t)
          out << (t ? ";" : "") << fmt(it.per_slot_power[t]);
        out << '\n';
      }
    finish(out, path);
  }

  {
    const auto path = dir / "heatmap.csv";
    auto out = open_output(path);
    out << "seed,sweep_value,algorithm,user,subcarrier,bits\n";
    for (const auto& r : records) {
      const auto users = r.per_user_rates.size();
      if (users == 0) continue;
      const auto subcarriers = r.bits_per_subcarrier.size() / users;
      for (std::size_t k = 0; k < users; ++k)
        for (std::size_t n = 0; n < subcarriers; ++n)
          out << key_prefix(r) << ',' << k << ',' << n << ','
              << fmt(r.bits_per_subcarrier[k * subcarriers + n]) << '\n';
    }
    finish(out, path);
  }

  {
    const auto path = dir / "multiplex_cdf.csv";
    auto out = open_output(path);
    out << "seed,sweep_value,algorithm,users,cdf\n";
    for (const auto& r : records)
      for (std::size_t c = 0; c < r.multiplex_cdf.size(); ++c)
        out << key_prefix(r) << ',' << c << ',' << fmt(r.multiplex_cdf[c]) << '\n';
    finish(out, path);
  }
}

}  // namespace resprog
