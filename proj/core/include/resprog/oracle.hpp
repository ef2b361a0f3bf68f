#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "resprog/model.hpp"

namespace resprog {

/// owner[n * slots + t] is the user served on (n, t), or -1 when the cell is idle.
struct OrthogonalPattern {
  int subcarriers = 0;
  int slots = 0;
  std::vector<int> owner;

  [[nodiscard]] int at(int n, int t) const { return owner[static_cast<std::size_t>(n) * slots + t]; }
  /// 1-based last slot owned by user k, 0 if none.
  [[nodiscard]] int completion(int k) const;
};

struct OracleResult {
  bool feasible = false;
  /// min_k η_k·Q_k/(T_k·ι) of the best pattern, bits/s.
  double value = 0.0;
  OrthogonalPattern pattern;
  /// MRT blocks with the powers found for `pattern`.
  PrecoderTensor precoders;
  std::vector<int> completion_times;
  /// Largest s with delivered bits >= Q_k·(1 + s) for every user, at the chosen pattern.
  double delivery_slack = 0.0;
  std::int64_t patterns = 0;
  int feasibility_checks = 0;
};

struct OracleCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Best orthogonal allocation over the first `horizon` slots: enumerates every owner pattern,
/// checks candidates in order of decreasing value (ties: lexicographically smallest pattern),
/// and returns the first whose convex power problem delivers every payload.
OracleResult brute_force_orthogonal(const ChannelTensor& h, const SystemConfig& cfg, int horizon,
                                    std::int64_t cap = 100000);

/// Max delivery slack of one pattern with MRT directions and per-slot power budgets. Fills
/// `precoders` with the optimal powers; returns -inf when some user owns no cell.
double pattern_slack(const ChannelTensor& h, const SystemConfig& cfg,
                     const OrthogonalPattern& pattern, PrecoderTensor* precoders = nullptr);

struct MappingReport {
  int samples = 0;
  std::int64_t checks = 0;
  int violations = 0;
  double max_relative_error = 0.0;
  /// Blocks at or below the zero level that were nonzero; they are treated as zero.
  std::int64_t sub_threshold_blocks = 0;
  std::vector<std::string> messages;
};

/// For each merged sample W̄: recovers (β, α) by thresholding, takes w = W̄ on active blocks, and
/// compares SINR at every (k, n, t), per-slot power, delivered bits and completion times of the
/// gated form against the merged form. Relative differences above `tolerance` are violations.
MappingReport check_lemma1_mapping(const std::vector<PrecoderTensor>& samples,
                                   const ChannelTensor& h, const SystemConfig& cfg,
                                   double tolerance = 1e-12);

}  // namespace resprog
