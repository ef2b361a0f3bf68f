#include "resprog/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace resprog {

std::span<const double> SystemConfig::slot_weights_for(int horizon) const {
  if (horizon < 0 || static_cast<std::size_t>(horizon) > slot_weights.size()) {
    throw HorizonError("slot_weights has " + std::to_string(slot_weights.size()) +
                       " entries, horizon " + std::to_string(horizon) + " requested");
  }
  return std::span<const double>(slot_weights).first(static_cast<std::size_t>(horizon));
}

std::vector<double> default_slot_weights(int horizon) {
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(std::max(horizon, 0)));
  for (int t = 0; t < horizon; ++t) weights.push_back(0.01 * std::pow(1000.0, t));
  return weights;
}

SystemConfig default_config() {
  SystemConfig cfg;
  cfg.power_budget_w = dbm_to_watt(-40.0);
  cfg.noise_psd_w_per_hz = dbm_to_watt(-174.0);
  cfg.payload_bits.assign(static_cast<std::size_t>(cfg.num_users), 200.0);
  cfg.user_weights.assign(static_cast<std::size_t>(cfg.num_users), 1.0);
  cfg.horizon_cap = 4;
  cfg.slot_weights = default_slot_weights(cfg.horizon_cap);
  return cfg;
}

double dbm_to_watt(double level_dbm) { return std::pow(10.0, (level_dbm - 30.0) / 10.0); }

double watt_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

std::vector<std::string> validate_config(const SystemConfig& cfg) {
  std::vector<std::string> errors;
  auto require = [&errors](bool ok, const char* message) {
    if (!ok) errors.emplace_back(message);
  };
  const auto finite_positive = [](double v) { return std::isfinite(v) && v > 0.0; };

  require(cfg.num_users >= 1, "num_users must be at least 1");
  require(cfg.num_subcarriers >= 1, "num_subcarriers must be at least 1");
  require(cfg.num_tx_antennas >= 1, "num_tx_antennas must be at least 1");
  require(cfg.horizon_cap >= 1, "horizon_cap must be at least 1");
  require(finite_positive(cfg.bandwidth_hz), "bandwidth must be positive");
  require(finite_positive(cfg.slot_s), "slot length must be positive");
  require(finite_positive(cfg.noise_psd_w_per_hz), "noise_psd must be positive");
  require(finite_positive(cfg.power_budget_w), "power_budget must be positive");

  const auto users = static_cast<std::size_t>(std::max(cfg.num_users, 0));
  require(cfg.payload_bits.size() == users, "payloads must have one entry per user");
  require(std::ranges::all_of(cfg.payload_bits, finite_positive), "payloads must be positive");
  require(cfg.user_weights.size() == users, "user_weights must have one entry per user");
  require(std::ranges::all_of(cfg.user_weights, finite_positive),
          "user_weights must be positive");

  require(cfg.slot_weights.size() >= static_cast<std::size_t>(std::max(cfg.horizon_cap, 0)),
          "slot_weights must cover horizon_cap");
  require(std::ranges::all_of(cfg.slot_weights, finite_positive),
          "slot_weights must be positive");
  require(std::ranges::is_sorted(cfg.slot_weights), "slot_weights not non-decreasing");

  require(cfg.zero_threshold > 0.0 && cfg.zero_threshold < 1.0,
          "zero_threshold must lie in (0, 1)");
  require(finite_positive(cfg.conv_tol), "conv_tol must be positive");
  require(cfg.max_sca_iters >= 1, "max_sca_iters must be at least 1");
  require(finite_positive(cfg.solver_tol) && cfg.solver_tol < 1.0,
          "solver_tol must lie in (0, 1)");
  return errors;
}

void require_valid(const SystemConfig& cfg) {
  const auto errors = validate_config(cfg);
  if (errors.empty()) return;
  std::ostringstream msg;
  msg << "invalid configuration:";
  for (const auto& e : errors) msg << "\n  - " << e;
  throw ConfigError(msg.str());
}

BlockTensor::BlockTensor(int users, int subcarriers, int slots, int antennas)
    : users_(users), subcarriers_(subcarriers), slots_(slots), antennas_(antennas) {
  if (users < 0 || subcarriers < 0 || slots < 0 || antennas < 0) {
    throw std::invalid_argument("tensor dimensions must be non-negative");
  }
  data_.assign(static_cast<std::size_t>(users) * subcarriers * slots * antennas, cplx{});
}

bool BlockTensor::same_shape(const BlockTensor& other) const {
  return users_ == other.users_ && subcarriers_ == other.subcarriers_ &&
         slots_ == other.slots_ && antennas_ == other.antennas_;
}

bool BlockTensor::all_finite() const {
  return std::ranges::all_of(
      data_, [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

std::vector<double> PrecoderTensor::per_slot_power() const {
  std::vector<double> power(static_cast<std::size_t>(slots()), 0.0);
  for (int k = 0; k < users(); ++k)
    for (int n = 0; n < subcarriers(); ++n)
      for (int t = 0; t < slots(); ++t) power[t] += block(k, n, t).squaredNorm();
  return power;
}

Allocation::Allocation(int users, int subcarriers, int slots)
    : users_(users),
      subcarriers_(subcarriers),
      slots_(slots),
      beta_(static_cast<std::size_t>(users) * subcarriers * slots, 0),
      alpha_(static_cast<std::size_t>(users) * slots, 0) {}

void Allocation::set_beta(int k, int n, int t, bool on) {
  beta_[(static_cast<std::size_t>(k) * subcarriers_ + n) * slots_ + t] = on ? 1 : 0;
  refresh_alpha(k, t);
}

void Allocation::refresh_alpha(int k, int t) {
  bool any = false;
  for (int n = 0; n < subcarriers_ && !any; ++n) any = beta(k, n, t);
  alpha_[static_cast<std::size_t>(k) * slots_ + t] = any ? 1 : 0;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

double SolveSummary::min_weighted_rate(std::span<const double> user_weights) const {
  if (experience_rates.empty()) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < experience_rates.size(); ++k) {
    const double eta = k < user_weights.size() ? user_weights[k] : 1.0;
    best = std::min(best, eta * experience_rates[k]);
  }
  return best;
}

}  // namespace resprog
