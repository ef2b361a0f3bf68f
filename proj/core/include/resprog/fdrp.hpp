#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "resprog/conic.hpp"
#include "resprog/conic_lift.hpp"
#include "resprog/model.hpp"

namespace resprog {

/// The first `horizon` slots of a channel tensor.
ChannelTensor slice_slots(const ChannelTensor& h, int horizon);

/// Per-subcarrier SINR target 2^{Q_k/(N·T·B·ι)} - 1 of the uniform initializer.
double sinr_target(const SystemConfig& cfg, int k, int horizon);

/// Expansion point of one SCA subproblem.
struct SubproblemState {
  PrecoderTensor precoders;
  /// ζ_{knt} = 1 + SINR, indexed (k·N + n)·T + t.
  std::vector<double> zeta;
  /// max_k sparsity_surrogate / (η_k Q_k), precoders measured in units of sqrt(P).
  double gamma = 0.0;
  int iteration = 0;

  [[nodiscard]] double zeta_at(int k, int n, int t) const {
    return zeta[(static_cast<std::size_t>(k) * precoders.subcarriers() + n) * precoders.slots() +
                t];
  }
};

/// Builds the state at precoders w with ζ = 1 + SINR(w).
SubproblemState make_state(const ChannelTensor& h, const SystemConfig& cfg,
                           const PrecoderTensor& w, int iteration);

/// Objective γ(w) = max_k Σ_t λ_t·||column_t||/(η_k Q_k) with precoders in units of sqrt(P).
double normalized_gamma(const PrecoderTensor& w, const SystemConfig& cfg);

/// First-order model of b_{knt}(W̄, ζ) = (Σ_{k'} |hᴴw̄_{k'nt}|² + B·N_0) / ζ_{knt} at the
/// expansion point, physical units.
struct LinearizationTerms {
  double constant = 0.0;
  /// Complex gradient with respect to w̄_{k'nt}, one entry per user k'.
  std::vector<Eigen::VectorXcd> grad_w;
  double grad_zeta = 0.0;
  /// ζ at the expansion point.
  double expansion_zeta = 1.0;
};

LinearizationTerms linearize_b(const ChannelTensor& h, const SystemConfig& cfg,
                               const SubproblemState& state, int k, int n, int t);

/// b_{knt} evaluated exactly at (w, zeta_value).
double b_value(const ChannelTensor& h, const PrecoderTensor& w, const SystemConfig& cfg,
               double zeta_value, int k, int n, int t);

/// The affine model of linearize_b evaluated at (w, zeta_value).
double b_model(const LinearizationTerms& terms, const SubproblemState& state,
               const PrecoderTensor& w, double zeta_value, int n, int t);

/// Variable layout shared by the compiled initializer and SCA subproblems. Precoders are
/// stored as w̄/sqrt(P); channels enter as h·sqrt(P)/sqrt(B·N_0) so the noise term is 1.
struct ProgramLayout {
  int users = 0;
  int subcarriers = 0;
  int slots = 0;
  int antennas = 0;
  conic::ComplexLayout precoder;
  int xi = -1;       ///< ζ / ζ^{(i)}, one per (k, n, t)
  int log_aux = -1;  ///< u - ln ζ^{(i)}, one per (k, n, t)
  int modulus = -1;  ///< norm epigraphs feeding the sparsity rows
  int gamma = -1;    ///< γ / γ^{(i)}
  bool entrywise = true;  ///< one modulus per entry, else one per (k, t) column
  double amplitude = 1.0;    ///< sqrt(P)
  double gamma_scale = 1.0;  ///< γ^{(i)}

  [[nodiscard]] int block_index(int k, int n, int t) const {
    return ((k * subcarriers + n) * slots + t) * antennas;
  }
  [[nodiscard]] int cell(int k, int n, int t) const { return (k * subcarriers + n) * slots + t; }

  /// Physical precoders from a solution vector.
  [[nodiscard]] PrecoderTensor decode_precoders(const Eigen::VectorXd& x) const;
};

struct CompiledProgram {
  conic::ConicProgram program;
  ProgramLayout layout;
};

/// Uniform initializer: per-slot power SOCs and per-(k, n, t) SINR SOCs at the target of
/// sinr_target. Feasibility problem (zero objective).
CompiledProgram build_p7(const ChannelTensor& h, const SystemConfig& cfg, int horizon);

/// SCA subproblem at `state`: minimize γ subject to per-slot power, log-rate delivery through
/// exponential cones, majorized SINR coupling and the weighted sparsity epigraph.
CompiledProgram build_p6(const ChannelTensor& h, const SystemConfig& cfg, int horizon,
                         const SubproblemState& state);

/// The expansion point of `state` as a solution vector of build_p6(…, state): ζ = ζ^{(i)},
/// u = ln ζ^{(i)}, modulus epigraphs tight, γ at its own value.
Eigen::VectorXd p6_point(const CompiledProgram& compiled, const SubproblemState& state);

struct HorizonSearch {
  int horizon = 0;
  PrecoderTensor precoders;
  int solves = 0;
};

/// Smallest T in 1..T_max with a feasible initializer; throws HorizonError otherwise.
HorizonSearch find_min_horizon(const ChannelTensor& h, const SystemConfig& cfg);

struct DegradedDelivery : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Zeroes sub-threshold blocks of summary.precoders, then drops each user's trailing slot
/// columns while the user still receives Q_k(1 - 10·solver_tol) bits without them. Fills
/// allocation, completion times, experience rates and per-slot power. Throws DegradedDelivery
/// if the sub-threshold pruning costs some user more than 10·solver_tol of its delivered bits
/// (relative) and leaves it short of its payload.
void threshold_allocation(SolveSummary& summary, const ChannelTensor& h, const SystemConfig& cfg);

/// Initializer followed by successive convex approximation until |Δγ| <= conv_tol·max(1, |γ|)
/// or max_sca_iters subproblems have been solved. A subproblem the solver cannot finish is still
/// taken when its last point is feasible and lowers γ; otherwise the loop stops (MaxIters).
/// The reported allocation is that of the iterate with the best min weighted experience rate
/// after threshold_allocation, later iterates winning ties.
SolveSummary run_fdrp(const ChannelTensor& h, const SystemConfig& cfg);

}  // namespace resprog
