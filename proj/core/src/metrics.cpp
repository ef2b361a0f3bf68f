#include "resprog/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace resprog {
namespace {

double gain(const ChannelTensor& h, const PrecoderTensor& w, int rx, int tx, int n, int t) {
  return std::norm(h.block(rx, n, t).dot(w.block(tx, n, t)));
}

double column_norm_sq(const PrecoderTensor& w, int k, int t) {
  double acc = 0.0;
  for (int n = 0; n < w.subcarriers(); ++n) acc += w.block(k, n, t).squaredNorm();
  return acc;
}

}  // namespace

double sinr(const ChannelTensor& h, const PrecoderTensor& w, const SystemConfig& cfg, int k, int n,
            int t) {
  double interference = 0.0;
  for (int j = 0; j < w.users(); ++j)
    if (j != k) interference += gain(h, w, k, j, n, t);
  return gain(h, w, k, k, n, t) / (interference + cfg.noise_power_w());
}

double sinr_gated(const ChannelTensor& h, const PrecoderTensor& w, const Allocation& alloc,
                  const SystemConfig& cfg, int k, int n, int t) {
  auto active = [&](int j) { return alloc.alpha(j, t) && alloc.beta(j, n, t); };
  double interference = 0.0;
  for (int j = 0; j < w.users(); ++j)
    if (j != k && active(j)) interference += gain(h, w, k, j, n, t);
  const double signal = active(k) ? gain(h, w, k, k, n, t) : 0.0;
  return signal / (interference + cfg.noise_power_w());
}

double throughput(double sinr_value, const SystemConfig& cfg) {
  if (!(sinr_value >= 0.0)) throw std::domain_error("throughput: SINR must be non-negative");
  return cfg.bandwidth_hz * std::log2(1.0 + sinr_value);
}

double delivered_bits(const ChannelTensor& h, const PrecoderTensor& w, const SystemConfig& cfg,
                      int k) {
  double bits = 0.0;
  for (int t = 0; t < w.slots(); ++t)
    for (int n = 0; n < w.subcarriers(); ++n)
      bits += cfg.slot_s * throughput(sinr(h, w, cfg, k, n, t), cfg);
  return bits;
}

std::vector<double> delivered_bits_per_subcarrier(const ChannelTensor& h, const PrecoderTensor& w,
                                                  const SystemConfig& cfg) {
  std::vector<double> table(static_cast<std::size_t>(w.users()) * w.subcarriers(), 0.0);
  for (int k = 0; k < w.users(); ++k)
    for (int n = 0; n < w.subcarriers(); ++n)
      for (int t = 0; t < w.slots(); ++t)
        table[static_cast<std::size_t>(k) * w.subcarriers() + n] +=
            cfg.slot_s * throughput(sinr(h, w, cfg, k, n, t), cfg);
  return table;
}

std::vector<int> completion_times(const PrecoderTensor& w, double level) {
  std::vector<int> times(static_cast<std::size_t>(w.users()), 0);
  for (int k = 0; k < w.users(); ++k)
    for (int t = w.slots() - 1; t >= 0; --t)
      if (std::sqrt(column_norm_sq(w, k, t)) > level) {
        times[k] = t + 1;
        break;
      }
  return times;
}

std::vector<double> experience_rates(std::span<const double> payload_bits,
                                     std::span<const int> completion, double slot_s) {
  if (payload_bits.size() != completion.size())
    throw std::invalid_argument("experience_rates: payload and completion sizes differ");
  std::vector<double> rates;
  rates.reserve(payload_bits.size());
  for (std::size_t k = 0; k < payload_bits.size(); ++k) {
    if (completion[k] < 1)
      throw IncompleteDelivery("user " + std::to_string(k) + " has no active slot");
    rates.push_back(payload_bits[k] / (completion[k] * slot_s));
  }
  return rates;
}

Allocation recover_allocation(const PrecoderTensor& w, double level) {
  Allocation alloc(w.users(), w.subcarriers(), w.slots());
  for (int k = 0; k < w.users(); ++k)
    for (int n = 0; n < w.subcarriers(); ++n)
      for (int t = 0; t < w.slots(); ++t)
        if (w.block(k, n, t).norm() > level) alloc.set_beta(k, n, t, true);
  return alloc;
}

double sparsity_surrogate(const PrecoderTensor& w, std::span<const double> slot_weights, int k,
                          SparsityNorm norm) {
  if (slot_weights.size() < static_cast<std::size_t>(w.slots()))
    throw std::invalid_argument("sparsity_surrogate: fewer slot weights than slots");
  double total = 0.0;
  for (int t = 0; t < w.slots(); ++t) {
    double column = 0.0;
    if (norm == SparsityNorm::GroupL2) {
      column = std::sqrt(column_norm_sq(w, k, t));
    } else {
      for (int n = 0; n < w.subcarriers(); ++n) column += w.block(k, n, t).cwiseAbs().sum();
    }
    total += slot_weights[t] * column;
  }
  return total;
}

MultiplexStats multiplex_histogram(const Allocation& alloc) {
  MultiplexStats stats;
  const int cells = alloc.subcarriers() * alloc.slots();
  stats.counts.assign(static_cast<std::size_t>(cells), 0);
  for (int n = 0; n < alloc.subcarriers(); ++n)
    for (int t = 0; t < alloc.slots(); ++t)
      for (int k = 0; k < alloc.users(); ++k)
        if (alloc.beta(k, n, t)) ++stats.counts[static_cast<std::size_t>(n) * alloc.slots() + t];

  stats.cdf.assign(static_cast<std::size_t>(alloc.users()) + 1, 0.0);
  if (cells == 0) {
    std::ranges::fill(stats.cdf, 1.0);
    return stats;
  }
  for (int c : stats.counts) stats.cdf[c] += 1.0;
  double running = 0.0;
  for (double& v : stats.cdf) {
    running += v;
    v = running / cells;
  }
  return stats;
}

ComplexityEstimate complexity_estimate(int users, int subcarriers, int slots, int antennas,
                                       double epsilon) {
  const double K = users, N = subcarriers, T = slots, Nt = antennas;
  const double o = K * N * T * Nt;
  const double log_term = std::log(1.0 / epsilon);
  const double knnt = K * N * Nt;
  const double sinr_dim = (K - 1.0) * Nt + 1.0;

  ComplexityEstimate est;
  const double p7_barrier = 2.0 * T + 3.0 * K * N * T;
  const double p7_form =
      o * T + o * o * T + o * T * knnt * knnt + o * K * N * T * sinr_dim * sinr_dim;
  est.p7 = log_term * std::sqrt(p7_barrier) * (p7_form + o * o * o);

  const double p6_barrier = 2.0 * K + K * N * T + 2.0 * T;
  const double p6_form =
      o * (2.0 * K + K * N * T) + o * o * (K * N * T + 2.0 * K) + o * T * knnt * knnt;
  est.p6_per_iter = log_term * std::sqrt(p6_barrier) * (p6_form + o * o * o);
  return est;
}

}  // namespace resprog
