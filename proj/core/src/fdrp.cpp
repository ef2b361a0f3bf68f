#include "resprog/fdrp.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <optional>
#include <sstream>

#include "resprog/metrics.hpp"

namespace resprog {
namespace {

// Subproblems from ill-conditioned expansion points can need a few hundred steps past the default.
constexpr int kSubproblemSteps = 2000;

using conic::AffineExpr;
using conic::Cone;

// h·sqrt(P)/sqrt(B·N_0): unit noise, unit power budget.
ChannelTensor normalized_channels(const ChannelTensor& h, const SystemConfig& cfg) {
  ChannelTensor g = h;
  const double scale = std::sqrt(cfg.power_budget_w / cfg.noise_power_w());
  for (auto& z : g.data()) z *= scale;
  return g;
}

ProgramLayout make_layout(const SystemConfig& cfg, int horizon) {
  ProgramLayout layout;
  layout.users = cfg.num_users;
  layout.subcarriers = cfg.num_subcarriers;
  layout.slots = horizon;
  layout.antennas = cfg.num_tx_antennas;
  layout.amplitude = std::sqrt(cfg.power_budget_w);
  return layout;
}

void add_power_cones(conic::ConicProgram& prog, const ProgramLayout& layout) {
  for (int t = 0; t < layout.slots; ++t) {
    std::vector<AffineExpr> rows{AffineExpr(1.0)};
    for (int k = 0; k < layout.users; ++k)
      for (int n = 0; n < layout.subcarriers; ++n)
        for (int a = 0; a < layout.antennas; ++a) {
          const int idx = layout.block_index(k, n, t) + a;
          rows.push_back(AffineExpr::variable(layout.precoder.re(idx)));
          rows.push_back(AffineExpr::variable(layout.precoder.im(idx)));
        }
    prog.add_block(Cone::SecondOrder, rows, "power t=" + std::to_string(t));
  }
}

void check_horizon(const ChannelTensor& h, const SystemConfig& cfg, int horizon) {
  if (horizon < 1) throw HorizonError("horizon must be at least 1");
  if (h.slots() < horizon)
    throw HorizonError("channel tensor has " + std::to_string(h.slots()) + " slots, horizon " +
                       std::to_string(horizon) + " requested");
  if (h.users() != cfg.num_users || h.subcarriers() != cfg.num_subcarriers ||
      h.antennas() != cfg.num_tx_antennas)
    throw std::invalid_argument("channel tensor does not match the configuration");
}

std::string cell_label(const char* what, int k, int n, int t) {
  std::ostringstream os;
  os << what << " k=" << k << " n=" << n << " t=" << t;
  return os.str();
}

// Index of the last slot in which user k has a nonzero block, or -1.
int last_active_slot(const PrecoderTensor& w, int k) {
  for (int t = w.slots() - 1; t >= 0; --t)
    for (int n = 0; n < w.subcarriers(); ++n)
      if (!w.block(k, n, t).isZero(0.0)) return t;
  return -1;
}

}  // namespace

ChannelTensor slice_slots(const ChannelTensor& h, int horizon) {
  if (horizon < 1 || horizon > h.slots())
    throw HorizonError("cannot take " + std::to_string(horizon) + " of " +
                       std::to_string(h.slots()) + " slots");
  ChannelTensor out(h.users(), h.subcarriers(), horizon, h.antennas(), h.coherent());
  for (int k = 0; k < h.users(); ++k)
    for (int n = 0; n < h.subcarriers(); ++n)
      for (int t = 0; t < horizon; ++t) out.block(k, n, t) = h.block(k, n, t);
  return out;
}

double sinr_target(const SystemConfig& cfg, int k, int horizon) {
  const double exponent = cfg.payload_bits[k] / (cfg.num_subcarriers * horizon *
                                                 cfg.bandwidth_hz * cfg.slot_s);
  return std::expm1(exponent * std::numbers::ln2);
}

double normalized_gamma(const PrecoderTensor& w, const SystemConfig& cfg) {
  const auto lambda = cfg.slot_weights_for(w.slots());
  double worst = 0.0;
  for (int k = 0; k < w.users(); ++k) {
    const double f = sparsity_surrogate(w, lambda, k, cfg.sparsity_norm);
    worst = std::max(worst, f / (cfg.user_weights[k] * cfg.payload_bits[k]));
  }
  return worst / std::sqrt(cfg.power_budget_w);
}

SubproblemState make_state(const ChannelTensor& h, const SystemConfig& cfg,
                           const PrecoderTensor& w, int iteration) {
  SubproblemState state;
  state.precoders = w;
  state.iteration = iteration;
  state.zeta.resize(static_cast<std::size_t>(w.users()) * w.subcarriers() * w.slots());
  for (int k = 0; k < w.users(); ++k)
    for (int n = 0; n < w.subcarriers(); ++n)
      for (int t = 0; t < w.slots(); ++t)
        state.zeta[(static_cast<std::size_t>(k) * w.subcarriers() + n) * w.slots() + t] =
            1.0 + sinr(h, w, cfg, k, n, t);
  state.gamma = normalized_gamma(w, cfg);
  return state;
}

LinearizationTerms linearize_b(const ChannelTensor& h, const SystemConfig& cfg,
                               const SubproblemState& state, int k, int n, int t) {
  const auto& w = state.precoders;
  const auto hk = h.block(k, n, t);
  const double zeta = state.zeta_at(k, n, t);
  LinearizationTerms terms;
  double received = cfg.noise_power_w();
  for (int j = 0; j < w.users(); ++j) {
    const cplx c = hk.dot(w.block(j, n, t));
    received += std::norm(c);
    terms.grad_w.push_back(hk * (2.0 * c / zeta));
  }
  terms.constant = received / zeta;
  terms.grad_zeta = -received / (zeta * zeta);
  terms.expansion_zeta = zeta;
  return terms;
}

double b_value(const ChannelTensor& h, const PrecoderTensor& w, const SystemConfig& cfg,
               double zeta_value, int k, int n, int t) {
  double received = cfg.noise_power_w();
  for (int j = 0; j < w.users(); ++j) received += std::norm(h.block(k, n, t).dot(w.block(j, n, t)));
  return received / zeta_value;
}

double b_model(const LinearizationTerms& terms, const SubproblemState& state,
               const PrecoderTensor& w, double zeta_value, int n, int t) {
  double value = terms.constant;
  for (int j = 0; j < w.users(); ++j) {
    const Eigen::VectorXcd delta = w.block(j, n, t) - state.precoders.block(j, n, t);
    value += terms.grad_w[j].dot(delta).real();
  }
  return value + terms.grad_zeta * (zeta_value - terms.expansion_zeta);
}

PrecoderTensor ProgramLayout::decode_precoders(const Eigen::VectorXd& x) const {
  PrecoderTensor w(users, subcarriers, slots, antennas);
  for (int k = 0; k < users; ++k)
    for (int n = 0; n < subcarriers; ++n)
      for (int t = 0; t < slots; ++t)
        w.block(k, n, t) = amplitude * precoder.gather(x, block_index(k, n, t), antennas);
  return w;
}

CompiledProgram build_p7(const ChannelTensor& h, const SystemConfig& cfg, int horizon) {
  check_horizon(h, cfg, horizon);
  CompiledProgram out;
  auto& prog = out.program;
  auto& layout = out.layout;
  layout = make_layout(cfg, horizon);
  layout.precoder = conic::ComplexLayout::allocate(prog, cfg.num_users * cfg.num_subcarriers *
                                                             horizon * cfg.num_tx_antennas);
  const ChannelTensor g = normalized_channels(h, cfg);
  add_power_cones(prog, layout);

  for (int k = 0; k < layout.users; ++k) {
    const double root_target = std::sqrt(sinr_target(cfg, k, horizon));
    for (int n = 0; n < layout.subcarriers; ++n)
      for (int t = 0; t < horizon; ++t) {
        const auto gk = g.block(k, n, t);
        const double row_scale = 1.0 / std::max(1.0, gk.norm());
        // Re{gᴴx_k} >= sqrt(Γ)·||(1, gᴴx_j for j != k)||, multiplied through by sqrt(Γ).
        std::vector<AffineExpr> rows;
        rows.push_back(conic::hermitian_inner(gk, layout.precoder, layout.block_index(k, n, t),
                                              row_scale)
                           .re);
        rows.emplace_back(root_target * row_scale);
        for (int j = 0; j < layout.users; ++j) {
          if (j == k) continue;
          auto z = conic::hermitian_inner(gk, layout.precoder, layout.block_index(j, n, t),
                                          root_target * row_scale);
          rows.push_back(std::move(z.re));
          rows.push_back(std::move(z.im));
        }
        prog.add_block(Cone::SecondOrder, rows, cell_label("sinr", k, n, t));
      }
  }
  return out;
}

CompiledProgram build_p6(const ChannelTensor& h, const SystemConfig& cfg, int horizon,
                         const SubproblemState& state) {
  check_horizon(h, cfg, horizon);
  const auto& w0 = state.precoders;
  if (w0.users() != cfg.num_users || w0.subcarriers() != cfg.num_subcarriers ||
      w0.slots() != horizon || w0.antennas() != cfg.num_tx_antennas ||
      state.zeta.size() != static_cast<std::size_t>(cfg.num_users) * cfg.num_subcarriers * horizon)
    throw std::invalid_argument("build_p6: state does not match (cfg, horizon)");

  CompiledProgram out;
  auto& prog = out.program;
  auto& layout = out.layout;
  layout = make_layout(cfg, horizon);
  const int K = layout.users, N = layout.subcarriers, T = horizon, Nt = layout.antennas;
  const int cells = K * N * T;
  layout.precoder = conic::ComplexLayout::allocate(prog, cells * Nt);
  layout.xi = prog.add_variables(cells);
  layout.log_aux = prog.add_variables(cells);
  const bool entrywise = cfg.sparsity_norm == SparsityNorm::EntrywiseL1;
  layout.entrywise = entrywise;
  layout.modulus = prog.add_variables(entrywise ? cells * Nt : K * T);
  layout.gamma = prog.add_variables(1);
  layout.gamma_scale = state.gamma > 0.0 ? state.gamma : 1.0;
  prog.set_objective(layout.gamma, 1.0);

  const ChannelTensor g = normalized_channels(h, cfg);
  const double amp = layout.amplitude;

  // (C1)
  add_power_cones(prog, layout);

  // (C2a): u' <= ln ξ per cell, Σ (ln ζ0 + u') >= ln2·Q/(ιB) per user.
  for (int k = 0; k < K; ++k) {
    AffineExpr delivery(-std::numbers::ln2 * cfg.payload_bits[k] /
                        (cfg.slot_s * cfg.bandwidth_hz));
    for (int n = 0; n < N; ++n)
      for (int t = 0; t < T; ++t) {
        const int c = layout.cell(k, n, t);
        prog.add_block(Cone::Exponential,
                       std::vector<AffineExpr>{AffineExpr::variable(layout.log_aux + c),
                                               AffineExpr(1.0),
                                               AffineExpr::variable(layout.xi + c)},
                       cell_label("rate", k, n, t));
        delivery.add(layout.log_aux + c, 1.0).add_constant(std::log(state.zeta_at(k, n, t)));
      }
    prog.add_block(Cone::NonNegative, std::vector<AffineExpr>{delivery},
                   "delivery k=" + std::to_string(k));
  }

  // (C~2b): Σ_{j≠k} |gᴴx_j|² + 1 <= affine model of b, divided by b0 and lifted to an SOC.
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n)
      for (int t = 0; t < T; ++t) {
        const auto gk = g.block(k, n, t);
        const double zeta0 = state.zeta_at(k, n, t);
        std::vector<cplx> c0(static_cast<std::size_t>(K));
        double received = 1.0;
        for (int j = 0; j < K; ++j) {
          c0[j] = gk.dot(w0.block(j, n, t)) / amp;
          received += std::norm(c0[j]);
        }
        const double b0 = received / zeta0;
        const double inv_sqrt_b0 = 1.0 / std::sqrt(b0);

        // s = (b_model - 1)/b0 with b_model = b0·(2 - ξ) + (2/ζ0)·Σ_j Re{conj(c_j)(z_j - c_j)}
        AffineExpr s(2.0 - 1.0 / b0);
        s.add(layout.xi + layout.cell(k, n, t), -1.0);
        for (int j = 0; j < K; ++j) {
          const auto z = conic::hermitian_inner(gk, layout.precoder, layout.block_index(j, n, t));
          const double scale = 2.0 / (zeta0 * b0);
          AffineExpr lin = c0[j].real() * z.re + c0[j].imag() * z.im;
          lin.add_constant(-std::norm(c0[j]));
          lin *= scale;
          s += lin;
        }
        std::vector<AffineExpr> rows;
        rows.push_back(s + AffineExpr(1.0));
        for (int j = 0; j < K; ++j) {
          if (j == k) continue;
          auto z = conic::hermitian_inner(gk, layout.precoder, layout.block_index(j, n, t),
                                          2.0 * inv_sqrt_b0);
          rows.push_back(std::move(z.re));
          rows.push_back(std::move(z.im));
        }
        rows.push_back(s - AffineExpr(1.0));
        prog.add_block(Cone::SecondOrder, rows, cell_label("coupling", k, n, t));
      }

  // ζ >= 1
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n)
      for (int t = 0; t < T; ++t) {
        const int c = layout.cell(k, n, t);
        AffineExpr row = AffineExpr::variable(layout.xi + c);
        row.add_constant(-1.0 / state.zeta_at(k, n, t));
        prog.add_block(Cone::NonNegative, std::vector<AffineExpr>{row},
                       cell_label("zeta", k, n, t));
      }

  // (C3)
  const auto lambda = cfg.slot_weights_for(T);
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t) {
      if (entrywise) {
        for (int n = 0; n < N; ++n)
          for (int a = 0; a < Nt; ++a) {
            const int idx = layout.block_index(k, n, t) + a;
            prog.add_block(Cone::SecondOrder,
                           std::vector<AffineExpr>{AffineExpr::variable(layout.modulus + idx),
                                                   AffineExpr::variable(layout.precoder.re(idx)),
                                                   AffineExpr::variable(layout.precoder.im(idx))},
                           "modulus");
          }
      } else {
        std::vector<AffineExpr> rows{AffineExpr::variable(layout.modulus + k * T + t)};
        for (int n = 0; n < N; ++n)
          for (int a = 0; a < Nt; ++a) {
            const int idx = layout.block_index(k, n, t) + a;
            rows.push_back(AffineExpr::variable(layout.precoder.re(idx)));
            rows.push_back(AffineExpr::variable(layout.precoder.im(idx)));
          }
        prog.add_block(Cone::SecondOrder, rows, "column");
      }
    }
  for (int k = 0; k < K; ++k) {
    const double denom = cfg.user_weights[k] * cfg.payload_bits[k] * layout.gamma_scale;
    AffineExpr row = AffineExpr::variable(layout.gamma);
    for (int t = 0; t < T; ++t) {
      if (entrywise) {
        for (int n = 0; n < N; ++n)
          for (int a = 0; a < Nt; ++a)
            row.add(layout.modulus + layout.block_index(k, n, t) + a, -lambda[t] / denom);
      } else {
        row.add(layout.modulus + k * T + t, -lambda[t] / denom);
      }
    }
    prog.add_block(Cone::NonNegative, std::vector<AffineExpr>{row},
                   "norm k=" + std::to_string(k));
  }
  return out;
}

Eigen::VectorXd p6_point(const CompiledProgram& compiled, const SubproblemState& state) {
  const auto& layout = compiled.layout;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(compiled.program.num_vars());
  const auto& w = state.precoders;
  const int K = layout.users, N = layout.subcarriers, T = layout.slots, Nt = layout.antennas;
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n)
      for (int t = 0; t < T; ++t) {
        const Eigen::VectorXcd xk = w.block(k, n, t) / layout.amplitude;
        layout.precoder.scatter(xk, layout.block_index(k, n, t), x);
        x[layout.xi + layout.cell(k, n, t)] = 1.0;
        if (layout.entrywise) {
          for (int a = 0; a < Nt; ++a)
            x[layout.modulus + layout.block_index(k, n, t) + a] = std::abs(xk[a]);
        }
      }
  if (!layout.entrywise) {
    for (int k = 0; k < K; ++k)
      for (int t = 0; t < T; ++t) {
        double sq = 0.0;
        for (int n = 0; n < N; ++n) sq += w.block(k, n, t).squaredNorm();
        x[layout.modulus + k * T + t] = std::sqrt(sq) / layout.amplitude;
      }
  }
  x[layout.gamma] = state.gamma / layout.gamma_scale;
  return x;
}

HorizonSearch find_min_horizon(const ChannelTensor& h, const SystemConfig& cfg) {
  require_valid(cfg);
  HorizonSearch out;
  conic::SolverOptions opts;
  opts.tol = cfg.solver_tol;
  for (int horizon = 1; horizon <= cfg.horizon_cap; ++horizon) {
    const auto compiled = build_p7(slice_slots(h, horizon), cfg, horizon);
    const auto sol = conic::solve(compiled.program, opts);
    ++out.solves;
    if (sol.status == conic::Status::Optimal) {
      out.horizon = horizon;
      out.precoders = compiled.layout.decode_precoders(sol.x);
      return out;
    }
  }
  throw HorizonError("horizon exhausted: initializer infeasible up to T_max = " +
                     std::to_string(cfg.horizon_cap));
}

void threshold_allocation(SolveSummary& summary, const ChannelTensor& h,
                          const SystemConfig& cfg) {
  const double level = zero_level(cfg);
  PrecoderTensor pruned = summary.precoders;
  for (int k = 0; k < pruned.users(); ++k)
    for (int n = 0; n < pruned.subcarriers(); ++n)
      for (int t = 0; t < pruned.slots(); ++t)
        if (pruned.block(k, n, t).norm() <= level) pruned.block(k, n, t).setZero();

  const double tol = 10.0 * cfg.solver_tol;
  for (int k = 0; k < pruned.users(); ++k) {
    const double before = delivered_bits(h, summary.precoders, cfg, k);
    const double after = delivered_bits(h, pruned, cfg, k);
    if (std::abs(after - before) > tol * std::max(before, 1.0) &&
        after < cfg.payload_bits[k] * (1.0 - tol)) {
      std::ostringstream msg;
      msg << "pruning sub-threshold blocks drops user " << k << " from " << before << " to "
          << after << " bits";
      throw DegradedDelivery(msg.str());
    }
  }
  // Trailing slot columns a user does not need for its payload are dropped, latest first.
  // Zeroing a user's blocks only removes interference seen by the other users.
  for (bool changed = true; changed;) {
    changed = false;
    for (int k = 0; k < pruned.users(); ++k) {
      for (int t = last_active_slot(pruned, k); t > 0; t = last_active_slot(pruned, k)) {
        PrecoderTensor trial = pruned;
        for (int n = 0; n < trial.subcarriers(); ++n) trial.block(k, n, t).setZero();
        if (delivered_bits(h, trial, cfg, k) < cfg.payload_bits[k] * (1.0 - tol)) break;
        pruned = std::move(trial);
        changed = true;
      }
    }
  }
  summary.precoders = std::move(pruned);
  summary.allocation = recover_allocation(summary.precoders, level);
  summary.completion_times = completion_times(summary.precoders, level);
  summary.experience_rates =
      experience_rates(cfg.payload_bits, summary.completion_times, cfg.slot_s);
  summary.per_slot_power = summary.precoders.per_slot_power();
}

SolveSummary run_fdrp(const ChannelTensor& h, const SystemConfig& cfg) {
  const auto init = find_min_horizon(h, cfg);
  const int horizon = init.horizon;
  const ChannelTensor hs = slice_slots(h, horizon);

  SolveSummary summary;
  summary.horizon = horizon;
  summary.status = SolveStatus::MaxIters;
  SubproblemState state = make_state(hs, cfg, init.precoders, 0);
  std::vector<PrecoderTensor> iterates{state.precoders};

  conic::SolverOptions opts;
  opts.tol = cfg.solver_tol;
  opts.max_newton_steps = kSubproblemSteps;
  for (int iter = 1; iter <= cfg.max_sca_iters; ++iter) {
    const auto compiled = build_p6(hs, cfg, horizon, state);
    opts.warm_start = p6_point(compiled, state);
    const auto sol = conic::solve(compiled.program, opts);
    // The expansion point has objective 1, so a feasible point below it is still a descent step.
    const bool inexact = sol.status == conic::Status::NumericalFailure && sol.x.size() > 0 &&
                         sol.max_residual <= cfg.solver_tol && sol.objective_value < 1.0;
    if (sol.status != conic::Status::Optimal && !inexact) break;

    SubproblemState next = make_state(hs, cfg, compiled.layout.decode_precoders(sol.x), iter);
    summary.gamma_trace.push_back(next.gamma);
    summary.trace.push_back({iter, next.gamma, next.precoders.per_slot_power(), sol.newton_steps,
                             conic::to_string(sol.status)});
    summary.iterations = iter;
    iterates.push_back(next.precoders);
    const bool converged = std::abs(next.gamma - state.gamma) <=
                           cfg.conv_tol * std::max(1.0, std::abs(next.gamma));
    state = std::move(next);
    if (converged) {
      summary.status = SolveStatus::Converged;
      break;
    }
  }

  // Every iterate is feasible; report the one with the best min weighted experience rate,
  // preferring later iterates on ties.
  std::optional<SolveSummary> best;
  std::exception_ptr failure;
  for (int i = static_cast<int>(iterates.size()) - 1; i >= 0; --i) {
    SolveSummary candidate;
    candidate.precoders = iterates[static_cast<std::size_t>(i)];
    try {
      threshold_allocation(candidate, hs, cfg);
    } catch (const DegradedDelivery&) {
      if (!failure) failure = std::current_exception();
      continue;
    }
    candidate.selected_iteration = i;
    if (!best || candidate.min_weighted_rate(cfg.user_weights) >
                     best->min_weighted_rate(cfg.user_weights))
      best = std::move(candidate);
  }
  if (!best) std::rethrow_exception(failure);
  summary.precoders = std::move(best->precoders);
  summary.allocation = std::move(best->allocation);
  summary.completion_times = std::move(best->completion_times);
  summary.experience_rates = std::move(best->experience_rates);
  summary.per_slot_power = std::move(best->per_slot_power);
  summary.selected_iteration = best->selected_iteration;
  return summary;
}

}  // namespace resprog
