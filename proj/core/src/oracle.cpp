#include "resprog/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "resprog/conic.hpp"
#include "resprog/metrics.hpp"

namespace resprog {
namespace {

using conic::AffineExpr;
using conic::Cone;

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

OrthogonalPattern decode(std::int64_t code, int users, int subcarriers, int slots) {
  OrthogonalPattern p;
  p.subcarriers = subcarriers;
  p.slots = slots;
  p.owner.assign(static_cast<std::size_t>(subcarriers) * slots, -1);
  // Cell 0 is the most significant digit, so numeric order is lexicographic order.
  for (auto cell = static_cast<std::ptrdiff_t>(p.owner.size()) - 1; cell >= 0; --cell) {
    p.owner[static_cast<std::size_t>(cell)] = static_cast<int>(code % (users + 1)) - 1;
    code /= users + 1;
  }
  return p;
}

// min_k η_k Q_k / (T_k ι), or -1 if some user owns nothing.
double pattern_value(const OrthogonalPattern& p, const SystemConfig& cfg) {
  double value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.num_users; ++k) {
    const int tk = p.completion(k);
    if (tk == 0) return -1.0;
    value = std::min(value, cfg.user_weights[k] * cfg.payload_bits[k] / (tk * cfg.slot_s));
  }
  return value;
}

}  // namespace

int OrthogonalPattern::completion(int k) const {
  int last = 0;
  for (int n = 0; n < subcarriers; ++n)
    for (int t = 0; t < slots; ++t)
      if (at(n, t) == k) last = std::max(last, t + 1);
  return last;
}

double pattern_slack(const ChannelTensor& h, const SystemConfig& cfg,
                     const OrthogonalPattern& pattern, PrecoderTensor* precoders) {
  const int K = cfg.num_users;
  const int N = pattern.subcarriers;
  const int T = pattern.slots;
  const double kInf = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k)
    if (pattern.completion(k) == 0) return -kInf;

  // Powers are fractions of P; each owned cell gets (u, 1, 1 + p·snr) in K_exp.
  conic::ConicProgram prog;
  const int slack = prog.add_variables(1);
  prog.set_objective(slack, -1.0);
  std::vector<int> power_var(static_cast<std::size_t>(N) * T, -1);
  std::vector<AffineExpr> rate(static_cast<std::size_t>(K));
  const double bits_per_nat = cfg.slot_s * cfg.bandwidth_hz / std::numbers::ln2;
  for (int n = 0; n < N; ++n)
    for (int t = 0; t < T; ++t) {
      const int k = pattern.at(n, t);
      if (k < 0) continue;
      const int p = prog.add_variables(1);
      const int u = prog.add_variables(1);
      power_var[static_cast<std::size_t>(n) * T + t] = p;
      const double snr =
          cfg.power_budget_w * h.block(k, n, t).squaredNorm() / cfg.noise_power_w();
      prog.add_block(Cone::NonNegative, std::vector<AffineExpr>{AffineExpr::variable(p)}, "p>=0");
      prog.add_block(Cone::Exponential,
                     {AffineExpr::variable(u), AffineExpr(1.0),
                      AffineExpr::variable(p, snr).add_constant(1.0)},
                     "rate");
      rate[k].add(u, bits_per_nat / cfg.payload_bits[k]);
    }
  for (int t = 0; t < T; ++t) {
    AffineExpr budget(1.0);
    for (int n = 0; n < N; ++n)
      if (const int p = power_var[static_cast<std::size_t>(n) * T + t]; p >= 0) budget.add(p, -1.0);
    prog.add_block(Cone::NonNegative, std::vector<AffineExpr>{budget}, "power");
  }
  for (int k = 0; k < K; ++k) {
    AffineExpr row = rate[k];
    row.add(slack, -1.0).add_constant(-1.0);
    prog.add_block(Cone::NonNegative, std::vector<AffineExpr>{row}, "delivery");
  }
  prog.add_block(Cone::NonNegative,
                 std::vector<AffineExpr>{AffineExpr::variable(slack, -1.0).add_constant(1.0)},
                 "slack cap");

  conic::SolverOptions opts;
  opts.tol = cfg.solver_tol;
  const auto sol = conic::solve(prog, opts);
  if (sol.status != conic::Status::Optimal) return -kInf;

  // Report the exact slack of the MRT precoders rather than the solver's s.
  PrecoderTensor w(K, N, T, cfg.num_tx_antennas);
  for (int n = 0; n < N; ++n)
    for (int t = 0; t < T; ++t) {
      const int p = power_var[static_cast<std::size_t>(n) * T + t];
      if (p < 0) continue;
      const int k = pattern.at(n, t);
      const auto hk = h.block(k, n, t);
      const double fraction = std::clamp(sol.x[p], 0.0, 1.0);
      if (hk.norm() > 0.0)
        w.block(k, n, t) = hk * std::sqrt(fraction * cfg.power_budget_w) / hk.norm();
    }
  double exact = kInf;
  for (int k = 0; k < K; ++k)
    exact = std::min(exact, delivered_bits(h, w, cfg, k) / cfg.payload_bits[k] - 1.0);
  if (precoders) *precoders = std::move(w);
  return exact;
}

OracleResult brute_force_orthogonal(const ChannelTensor& h, const SystemConfig& cfg, int horizon,
                                    std::int64_t cap) {
  require_valid(cfg);
  if (horizon < 1 || horizon > h.slots())
    throw HorizonError("oracle horizon " + std::to_string(horizon) + " outside the channel tensor");
  const int cells = cfg.num_subcarriers * horizon;
  std::int64_t total = 1;
  for (int i = 0; i < cells; ++i) {
    total *= cfg.num_users + 1;
    if (total > cap)
      throw OracleCapExceeded("oracle needs " + std::to_string(cfg.num_users + 1) + "^" +
                              std::to_string(cells) + " patterns, cap is " + std::to_string(cap));
  }

  struct Candidate {
    double value;
    std::int64_t code;
  };
  std::vector<Candidate> candidates;
  for (std::int64_t code = 0; code < total; ++code) {
    const double v = pattern_value(decode(code, cfg.num_users, cfg.num_subcarriers, horizon), cfg);
    if (v > 0.0) candidates.push_back({v, code});
  }
  std::ranges::sort(candidates, [](const Candidate& a, const Candidate& b) {
    return a.value != b.value ? a.value > b.value : a.code < b.code;
  });

  OracleResult result;
  result.patterns = total;
  const double tol = 10.0 * cfg.solver_tol;
  for (const auto& c : candidates) {
    auto pattern = decode(c.code, cfg.num_users, cfg.num_subcarriers, horizon);
    PrecoderTensor w;
    ++result.feasibility_checks;
    const double slack = pattern_slack(h, cfg, pattern, &w);
    if (!(slack >= -tol)) continue;
    result.feasible = true;
    result.value = c.value;
    result.delivery_slack = slack;
    result.completion_times.resize(static_cast<std::size_t>(cfg.num_users));
    for (int k = 0; k < cfg.num_users; ++k) result.completion_times[k] = pattern.completion(k);
    result.pattern = std::move(pattern);
    result.precoders = std::move(w);
    break;
  }
  return result;
}

MappingReport check_lemma1_mapping(const std::vector<PrecoderTensor>& samples,
                                   const ChannelTensor& h, const SystemConfig& cfg,
                                   double tolerance) {
  MappingReport report;
  const double level = zero_level(cfg);
  auto record = [&](double merged, double gated, const std::string& what) {
    ++report.checks;
    const double err = relative_gap(merged, gated);
    report.max_relative_error = std::max(report.max_relative_error, err);
    if (err > tolerance) {
      ++report.violations;
      if (report.messages.size() < 20) {
        std::ostringstream os;
        os << "sample " << report.samples << ' ' << what << ": merged " << merged << ", gated "
           << gated;
        report.messages.push_back(os.str());
      }
    }
  };

  for (const auto& sample : samples) {
    const Allocation alloc = recover_allocation(sample, level);
    PrecoderTensor merged = sample;
    for (int k = 0; k < sample.users(); ++k)
      for (int n = 0; n < sample.subcarriers(); ++n)
        for (int t = 0; t < sample.slots(); ++t)
          if (!alloc.beta(k, n, t) && !sample.block(k, n, t).isZero(0.0)) {
            merged.block(k, n, t).setZero();
            ++report.sub_threshold_blocks;
          }

    std::vector<double> gated_power(static_cast<std::size_t>(sample.slots()), 0.0);
    for (int k = 0; k < sample.users(); ++k) {
      double gated_bits = 0.0;
      for (int n = 0; n < sample.subcarriers(); ++n)
        for (int t = 0; t < sample.slots(); ++t) {
          const double g = sinr_gated(h, sample, alloc, cfg, k, n, t);
          gated_bits += cfg.slot_s * throughput(g, cfg);
          std::ostringstream what;
          what << "sinr k=" << k << " n=" << n << " t=" << t;
          record(sinr(h, merged, cfg, k, n, t), g, what.str());
          if (alloc.alpha(k, t) && alloc.beta(k, n, t))
            gated_power[t] += sample.block(k, n, t).squaredNorm();
        }
      record(delivered_bits(h, merged, cfg, k), gated_bits, "bits k=" + std::to_string(k));
    }
    const auto merged_power = merged.per_slot_power();
    for (int t = 0; t < sample.slots(); ++t)
      record(merged_power[t], gated_power[t], "power t=" + std::to_string(t));

    const auto merged_completion = completion_times(merged, level);
    for (int k = 0; k < sample.users(); ++k) {
      int last = 0;
      for (int t = 0; t < sample.slots(); ++t)
        if (alloc.alpha(k, t)) last = t + 1;
      record(merged_completion[k], last, "completion k=" + std::to_string(k));
    }
    ++report.samples;
  }
  return report;
}

}  // namespace resprog
