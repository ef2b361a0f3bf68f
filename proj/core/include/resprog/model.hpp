#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace resprog {

using cplx = std::complex<double>;

/// Which norm the sparsity surrogate applies to each slot column of a user's precoder matrix.
enum class SparsityNorm {
  EntrywiseL1,  ///< sum of moduli of every complex entry
  GroupL2,      ///< Euclidean norm of the whole slot column
};

/// Serving order used by the greedy sequential baseline.
enum class GreedyOrder { UserIndex, DescendingPayload };

/// Scenario parameters. Every physical quantity is linear (W, Hz, s, bits).
struct SystemConfig {
  int num_users = 6;
  int num_subcarriers = 4;
  int num_tx_antennas = 5;
  double bandwidth_hz = 30e3;
  double slot_s = 0.5e-3;
  double noise_psd_w_per_hz = 3.981071705534973e-21;
  double power_budget_w = 1e-7;
  std::vector<double> payload_bits;
  std::vector<double> user_weights;
  /// Stored up to horizon_cap; truncated to the active horizon when used.
  std::vector<double> slot_weights;
  int horizon_cap = 2;
  /// A precoder block counts as nonzero when its norm exceeds zero_threshold * sqrt(P).
  double zero_threshold = 1e-6;
  double conv_tol = 1e-5;
  int max_sca_iters = 30;
  double solver_tol = 1e-8;
  SparsityNorm sparsity_norm = SparsityNorm::EntrywiseL1;
  GreedyOrder greedy_order = GreedyOrder::UserIndex;

  [[nodiscard]] double noise_power_w() const { return bandwidth_hz * noise_psd_w_per_hz; }
  [[nodiscard]] std::span<const double> slot_weights_for(int horizon) const;
};

/// Default slot weights: (0.01, 10) for two slots, geometric 0.01 * 1000^(t-1) in general.
std::vector<double> default_slot_weights(int horizon);

/// Paper-default scenario: K=6, N=4, Nt=5, B=30 kHz, 0.5 ms slots, -174 dBm/Hz, 200-bit payloads.
SystemConfig default_config();

double dbm_to_watt(double level_dbm);
double watt_to_dbm(double watts);

/// Every violated invariant, by name. Empty means the configuration is valid.
std::vector<std::string> validate_config(const SystemConfig& cfg);

/// Throws ConfigError listing all violations.
void require_valid(const SystemConfig& cfg);

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct HorizonError : std::runtime_error {
  explicit HorizonError(const std::string& what) : std::runtime_error(what) {}
};

/// Complex vectors of length Nt indexed by (user, subcarrier, slot).
class BlockTensor {
 public:
  BlockTensor() = default;
  BlockTensor(int users, int subcarriers, int slots, int antennas);

  [[nodiscard]] int users() const { return users_; }
  [[nodiscard]] int subcarriers() const { return subcarriers_; }
  [[nodiscard]] int slots() const { return slots_; }
  [[nodiscard]] int antennas() const { return antennas_; }

  [[nodiscard]] Eigen::Map<const Eigen::VectorXcd> block(int k, int n, int t) const {
    return {data_.data() + offset(k, n, t), antennas_};
  }
  Eigen::Map<Eigen::VectorXcd> block(int k, int n, int t) {
    return {data_.data() + offset(k, n, t), antennas_};
  }

  [[nodiscard]] std::span<const cplx> data() const { return data_; }
  std::span<cplx> data() { return data_; }

  [[nodiscard]] bool same_shape(const BlockTensor& other) const;
  [[nodiscard]] bool all_finite() const;

  friend bool operator==(const BlockTensor&, const BlockTensor&) = default;

 protected:
  [[nodiscard]] std::size_t offset(int k, int n, int t) const {
    return ((static_cast<std::size_t>(k) * subcarriers_ + n) * slots_ + t) * antennas_;
  }

 private:
  int users_ = 0;
  int subcarriers_ = 0;
  int slots_ = 0;
  int antennas_ = 0;
  std::vector<cplx> data_;
};

/// Channel vectors h_{knt} in linear amplitude units.
class ChannelTensor : public BlockTensor {
 public:
  ChannelTensor() = default;
  ChannelTensor(int users, int subcarriers, int slots, int antennas, bool coherent)
      : BlockTensor(users, subcarriers, slots, antennas), coherent_(coherent) {}

  [[nodiscard]] bool coherent() const { return coherent_; }

  friend bool operator==(const ChannelTensor&, const ChannelTensor&) = default;

 private:
  bool coherent_ = true;
};

/// Merged precoders w̄_{knt} in sqrt(W).
class PrecoderTensor : public BlockTensor {
 public:
  using BlockTensor::BlockTensor;

  /// Sum over users and subcarriers of squared block norms, per slot (W).
  [[nodiscard]] std::vector<double> per_slot_power() const;
};

/// Binary subcarrier (beta) and slot (alpha) indicators.
class Allocation {
 public:
  Allocation() = default;
  Allocation(int users, int subcarriers, int slots);

  [[nodiscard]] int users() const { return users_; }
  [[nodiscard]] int subcarriers() const { return subcarriers_; }
  [[nodiscard]] int slots() const { return slots_; }

  [[nodiscard]] bool beta(int k, int n, int t) const {
    return beta_[(static_cast<std::size_t>(k) * subcarriers_ + n) * slots_ + t] != 0;
  }
  [[nodiscard]] bool alpha(int k, int t) const {
    return alpha_[static_cast<std::size_t>(k) * slots_ + t] != 0;
  }

  /// Sets beta and keeps alpha equal to the OR of beta over subcarriers.
  void set_beta(int k, int n, int t, bool on);

  friend bool operator==(const Allocation&, const Allocation&) = default;

 private:
  void refresh_alpha(int k, int t);

  int users_ = 0;
  int subcarriers_ = 0;
  int slots_ = 0;
  std::vector<std::uint8_t> beta_;
  std::vector<std::uint8_t> alpha_;
};

enum class SolveStatus { Converged, MaxIters, Infeasible };

std::string to_string(SolveStatus status);

/// One solved SCA subproblem.
struct IterationRecord {
  int iteration = 0;
  double gamma = 0.0;
  /// W, indexed by slot.
  std::vector<double> per_slot_power;
  int newton_steps = 0;
  /// Conic status of the subproblem; a NumericalFailure iterate is kept only when it is
  /// feasible and improves γ.
  std::string solver_status;
};

struct SolveSummary {
  std::vector<double> gamma_trace;
  std::vector<IterationRecord> trace;
  PrecoderTensor precoders;
  Allocation allocation;
  std::vector<int> completion_times;
  std::vector<double> experience_rates;
  std::vector<double> per_slot_power;
  int horizon = 0;
  int iterations = 0;
  /// Iterate the reported precoders come from (0 is the initializer).
  int selected_iteration = 0;
  SolveStatus status = SolveStatus::Infeasible;

  [[nodiscard]] double min_weighted_rate(std::span<const double> user_weights) const;
};

}  // namespace resprog
