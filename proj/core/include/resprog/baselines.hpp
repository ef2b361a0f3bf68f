#pragma once

#include <span>
#include <vector>

#include "resprog/model.hpp"

namespace resprog {

/// Uniform resource programming: the initializer solution at the smallest feasible horizon, every
/// user occupying every slot.
SolveSummary run_urp(const ChannelTensor& h, const SystemConfig& cfg);

/// Powers maximizing Σ log2(1 + p_n·g_n/noise) under Σ p_n <= budget. All-zero gains give
/// all-zero powers.
std::vector<double> waterfill(std::span<const double> gains, double budget, double noise);

/// Greedy sequential programming: one user at a time, whole slots, MRT directions with
/// waterfilled subcarrier powers. Users are served in cfg.greedy_order. Throws HorizonError if
/// the queue needs more than horizon_cap slots.
SolveSummary run_grp(const ChannelTensor& h, const SystemConfig& cfg);

/// Serving order of run_grp.
std::vector<int> greedy_order(const SystemConfig& cfg);

}  // namespace resprog
