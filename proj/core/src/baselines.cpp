#include "resprog/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "resprog/fdrp.hpp"
#include "resprog/metrics.hpp"

namespace resprog {

SolveSummary run_urp(const ChannelTensor& h, const SystemConfig& cfg) {
  const auto init = find_min_horizon(h, cfg);
  SolveSummary summary;
  summary.horizon = init.horizon;
  summary.precoders = init.precoders;
  summary.status = SolveStatus::Converged;
  summary.allocation = recover_allocation(summary.precoders, zero_level(cfg));
  summary.completion_times.assign(static_cast<std::size_t>(cfg.num_users), init.horizon);
  summary.experience_rates =
      experience_rates(cfg.payload_bits, summary.completion_times, cfg.slot_s);
  summary.per_slot_power = summary.precoders.per_slot_power();
  return summary;
}

std::vector<double> waterfill(std::span<const double> gains, double budget, double noise) {
  std::vector<double> powers(gains.size(), 0.0);
  std::vector<std::size_t> order(gains.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });

  // Largest active set whose water level clears the floor of its weakest member.
  double floors = 0.0;
  double level = 0.0;
  std::size_t active = 0;
  for (std::size_t m = 0; m < order.size(); ++m) {
    const double g = gains[order[m]];
    if (!(g > 0.0)) break;
    const double floor = noise / g;
    const double trial = (budget + floors + floor) / static_cast<double>(m + 1);
    if (trial <= floor) break;
    floors += floor;
    level = trial;
    active = m + 1;
  }
  for (std::size_t m = 0; m < active; ++m) {
    const std::size_t n = order[m];
    powers[n] = std::max(0.0, level - noise / gains[n]);
  }
  return powers;
}

std::vector<int> greedy_order(const SystemConfig& cfg) {
  std::vector<int> order(static_cast<std::size_t>(cfg.num_users));
  std::iota(order.begin(), order.end(), 0);
  if (cfg.greedy_order == GreedyOrder::DescendingPayload)
    std::ranges::stable_sort(
        order, [&](int a, int b) { return cfg.payload_bits[a] > cfg.payload_bits[b]; });
  return order;
}

SolveSummary run_grp(const ChannelTensor& h, const SystemConfig& cfg) {
  require_valid(cfg);
  const int K = cfg.num_users;
  const int N = cfg.num_subcarriers;
  const double noise = cfg.noise_power_w();
  const double tol = 10.0 * cfg.solver_tol;

  // Slot t serves owner[t] with MRT blocks scaled by the waterfilled powers.
  std::vector<int> owner;
  std::vector<std::vector<double>> slot_powers;
  std::vector<int> completion(static_cast<std::size_t>(K), 0);
  for (const int k : greedy_order(cfg)) {
    double bits = 0.0;
    while (bits < cfg.payload_bits[k] * (1.0 - tol)) {
      const int t = static_cast<int>(owner.size());
      if (t >= cfg.horizon_cap || t >= h.slots())
        throw HorizonError("greedy schedule needs more than " + std::to_string(cfg.horizon_cap) +
                           " slots");
      std::vector<double> gains(static_cast<std::size_t>(N));
      for (int n = 0; n < N; ++n) gains[n] = h.block(k, n, t).squaredNorm();
      auto powers = waterfill(gains, cfg.power_budget_w, noise);
      for (int n = 0; n < N; ++n)
        bits += cfg.slot_s * throughput(powers[n] * gains[n] / noise, cfg);
      owner.push_back(k);
      slot_powers.push_back(std::move(powers));
    }
    completion[k] = static_cast<int>(owner.size());
  }

  const int T = static_cast<int>(owner.size());
  SolveSummary summary;
  summary.horizon = T;
  summary.status = SolveStatus::Converged;
  summary.precoders = PrecoderTensor(K, N, T, cfg.num_tx_antennas);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < N; ++n) {
      const auto hk = h.block(owner[t], n, t);
      const double norm = hk.norm();
      if (norm > 0.0) summary.precoders.block(owner[t], n, t) = hk * (std::sqrt(slot_powers[t][n]) / norm);
    }
  summary.allocation = recover_allocation(summary.precoders, zero_level(cfg));
  summary.completion_times = std::move(completion);
  summary.experience_rates =
      experience_rates(cfg.payload_bits, summary.completion_times, cfg.slot_s);
  summary.per_slot_power = summary.precoders.per_slot_power();
  return summary;
}

}  // namespace resprog
