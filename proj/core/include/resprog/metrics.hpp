#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "resprog/model.hpp"

namespace resprog {

/// Absolute block-norm level below which a precoder block counts as zero: τ_zero·√P.
[[nodiscard]] inline double zero_level(const SystemConfig& cfg) {
  return cfg.zero_threshold * std::sqrt(cfg.power_budget_w);
}

/// SINR of user k on (n, t) with merged precoders: interference from every other user's block.
double sinr(const ChannelTensor& h, const PrecoderTensor& w, const SystemConfig& cfg, int k, int n,
            int t);

/// SINR with explicit binary gating: unmerged precoders w_{knt} count only where
/// alpha_{kt} * beta_{knt} = 1.
double sinr_gated(const ChannelTensor& h, const PrecoderTensor& w, const Allocation& alloc,
                  const SystemConfig& cfg, int k, int n, int t);

/// B·log2(1 + sinr) in bits/s. Throws std::domain_error for negative SINR.
double throughput(double sinr_value, const SystemConfig& cfg);

/// Σ_t Σ_n ι·B·log2(1 + SINR) for user k.
double delivered_bits(const ChannelTensor& h, const PrecoderTensor& w, const SystemConfig& cfg,
                      int k);

/// Bits delivered to each user on each subcarrier summed over slots; row-major [k][n].
std::vector<double> delivered_bits_per_subcarrier(const ChannelTensor& h, const PrecoderTensor& w,
                                                  const SystemConfig& cfg);

/// Highest 1-based slot whose stacked column [w̄_{k1t}; …; w̄_{kNt}] has norm above level,
/// or 0 when every column is at or below it.
std::vector<int> completion_times(const PrecoderTensor& w, double level);

struct IncompleteDelivery : std::domain_error {
  using std::domain_error::domain_error;
};

/// R_k = Q_k / (T_k·ι). Throws IncompleteDelivery if some T_k is 0.
std::vector<double> experience_rates(std::span<const double> payload_bits,
                                     std::span<const int> completion, double slot_s);

/// beta_{knt} = 1 iff ||w̄_{knt}||_2 > level; alpha is the OR over subcarriers.
Allocation recover_allocation(const PrecoderTensor& w, double level);

/// Σ_t λ_t·||column_t of user k||, the column norm chosen by `norm`.
double sparsity_surrogate(const PrecoderTensor& w, std::span<const double> slot_weights, int k,
                          SparsityNorm norm = SparsityNorm::EntrywiseL1);

struct MultiplexStats {
  /// Users with beta = 1, indexed [n * slots + t].
  std::vector<int> counts;
  /// cdf[c] = fraction of (n, t) cells with at most c users, c = 0..K.
  std::vector<double> cdf;
};

MultiplexStats multiplex_histogram(const Allocation& alloc);

struct ComplexityEstimate {
  double p7 = 0.0;
  double p6_per_iter = 0.0;
};

/// Interior-point cost model of the initializer SOCP and one SCA subproblem, with
/// o = K·N·T·Nt and unit big-O constants.
ComplexityEstimate complexity_estimate(int users, int subcarriers, int slots, int antennas,
                                       double epsilon);

}  // namespace resprog
