// Primal log-barrier path-following solver for programs over products of zero, nonnegative,
// second-order and exponential cones.
//
// Barriers: -log s (nu = 1), -log(t^2 - ||z||^2) (nu = 2), and for the exponential cone
// -log(v log(w/v) - u) - log v - log w (nu = 3). Zero-cone rows are kept as equality
// constraints inside a quasi-definite KKT system. Wide nonnegative rows and wide second-order
// blocks whose metric m'Jm is diagonal would put a dense clique into the Newton matrix; their
// Hessian is written as D + a·aᵀ with D diagonal and a carried by an extra KKT column with
// diagonal -1. The factorization order is fixed: variables with a positive diagonal first
// (AMD), then the extra columns, then the remaining variables, then equality rows.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "resprog/conic.hpp"

namespace resprog::conic {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using SpMat = Eigen::SparseMatrix<double>;  // column-major, lower triangle stored

double barrier_parameter(Cone cone) {
  switch (cone) {
    case Cone::NonNegative: return 1.0;
    case Cone::SecondOrder: return 2.0;
    case Cone::Exponential: return 3.0;
    case Cone::Zero: return 0.0;
  }
  return 0.0;
}

struct ExpDerivs {
  double value = kInf;
  Eigen::Vector3d grad;
  Eigen::Matrix3d hess;
};

double exp_psi(double u, double v, double w) {
  if (!(v > 0.0) || !(w > 0.0)) return -kInf;
  return v * std::log(w / v) - u;
}

ExpDerivs exp_barrier(const Eigen::Ref<const Eigen::VectorXd>& s, bool need_derivs) {
  ExpDerivs d;
  const double u = s[0], v = s[1], w = s[2];
  const double psi = exp_psi(u, v, w);
  if (!(psi > 0.0)) return d;
  d.value = -std::log(psi) - std::log(v) - std::log(w);
  if (!need_derivs) return d;
  const Eigen::Vector3d gpsi(-1.0, std::log(w / v) - 1.0, v / w);
  d.grad = -gpsi / psi - Eigen::Vector3d(0.0, 1.0 / v, 1.0 / w);
  Eigen::Matrix3d hpsi = Eigen::Matrix3d::Zero();
  hpsi(1, 1) = -1.0 / v;
  hpsi(1, 2) = hpsi(2, 1) = 1.0 / w;
  hpsi(2, 2) = -v / (w * w);
  d.hess = gpsi * gpsi.transpose() / (psi * psi) - hpsi / psi;
  d.hess(1, 1) += 1.0 / (v * v);
  d.hess(2, 2) += 1.0 / (w * w);
  return d;
}

// t^2 - ||z||^2 computed as (t - ||z||)(t + ||z||) to keep accuracy near the boundary.
double soc_gap(const Eigen::Ref<const Eigen::VectorXd>& s) {
  const double t = s[0];
  const double r = s.tail(s.size() - 1).norm();
  if (!(t > r)) return -1.0;
  return (t - r) * (t + r);
}

struct Entry {
  int i = 0;  // local support indices, i >= j
  int j = 0;
  double value = 0.0;
  int pos = 0;
};

struct BlockData {
  Cone cone = Cone::NonNegative;
  int row0 = 0;
  int dim = 0;
  std::vector<int> support;
  Eigen::MatrixXd m;           // dim x |support|
  Eigen::MatrixXd soc_metric;  // m' J m for second-order blocks
  std::vector<int> hess_pos;   // value index for each (a >= b) support pair

  // Expanded assembly (col_a >= 0): diagonal D, rank-one factor in its own column.
  int col_a = -1;
  std::vector<Entry> d_part;  // unscaled diagonal of D
  std::vector<int> a_pos;     // (col_a, support j)
};

constexpr Eigen::Index kExpandMin = 24;

std::vector<Entry> lower_entries(const Eigen::MatrixXd& d) {
  std::vector<Entry> out;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      if (d(i, j) != 0.0) out.push_back({static_cast<int>(i), static_cast<int>(j), d(i, j), 0});
  return out;
}

bool is_diagonal(const Eigen::MatrixXd& d) {
  for (Eigen::Index j = 0; j < d.cols(); ++j)
    for (Eigen::Index i = j + 1; i < d.rows(); ++i)
      if (d(i, j) != 0.0) return false;
  return true;
}

class BarrierModel {
 public:
  /// With a shift column the objective is the shift plus phase1_weight times the program
  /// objective, which keeps directions the shift does not see from drifting, and the shift is
  /// bounded above by shift_cap.
  BarrierModel(const ConicProgram& program, const Eigen::VectorXd* shift_column,
               double phase1_weight = 0.0, double shift_cap = kInf);

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int p() const { return static_cast<int>(e_.size()); }
  [[nodiscard]] double nu() const { return nu_; }
  [[nodiscard]] const Eigen::VectorXd& c() const { return c_; }
  [[nodiscard]] const RowMatrix& a() const { return a_; }
  [[nodiscard]] const Eigen::VectorXd& b() const { return b_; }
  [[nodiscard]] const RowMatrix& eq() const { return eq_; }
  [[nodiscard]] const Eigen::VectorXd& eq_rhs() const { return e_; }
  [[nodiscard]] const std::vector<BlockData>& blocks() const { return blocks_; }

  [[nodiscard]] Eigen::VectorXd slacks(const Eigen::VectorXd& x) const { return a_ * x + b_; }

  /// Barrier value at stacked slacks; +inf outside the interior.
  [[nodiscard]] double barrier(const Eigen::VectorXd& s) const;

  /// Gradient w.r.t. slacks, and assembles the x-space Hessian into kkt_ values.
  void derivatives(const Eigen::VectorXd& s, Eigen::VectorXd& grad_s, bool with_hessian);

  /// Solves [H E'; E -delta] [dx; dy] = [rhs; eq_target] using the last assembled Hessian.
  /// A null eq_target means E dx = 0.
  bool solve_newton(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx,
                    const Eigen::VectorXd* eq_target = nullptr);

  /// Interior direction per stacked row, used by phase I.
  [[nodiscard]] Eigen::VectorXd interior_direction() const;

 private:
  void build_pattern();
  [[nodiscard]] int eq_col(int r) const { return n_ + expanded_ + r; }

  int n_ = 0;
  int expanded_ = 0;
  double nu_ = 0.0;
  Eigen::VectorXd c_;
  RowMatrix a_;
  Eigen::VectorXd b_;
  RowMatrix eq_;
  Eigen::VectorXd e_;
  std::vector<BlockData> blocks_;

  void choose_order();
  bool factorize_and_solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& sol);

  SpMat kkt_;
  SpMat permuted_;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> order_;
  std::vector<int> diag_pos_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt_;
  bool analyzed_ = false;
  double reg_scale_ = 1e-12;
};

BarrierModel::BarrierModel(const ConicProgram& program, const Eigen::VectorXd* shift_column,
                           double phase1_weight, double shift_cap) {
  const int base_n = program.num_vars();
  n_ = base_n + (shift_column ? 1 : 0);
  c_ = Eigen::VectorXd::Zero(n_);
  if (shift_column) {
    c_[base_n] = 1.0;
    c_.head(base_n) = phase1_weight * program.objective();
  } else {
    c_ = program.objective();
  }

  std::vector<Eigen::Triplet<double>> cone_trip, eq_trip;
  std::vector<double> cone_b, eq_b;
  int shift_row = 0;
  for (const auto& blk : program.blocks()) {
    if (blk.cone == Cone::Zero) {
      for (int r = 0; r < blk.a.outerSize(); ++r)
        for (RowMatrix::InnerIterator it(blk.a, r); it; ++it)
          eq_trip.emplace_back(static_cast<int>(eq_b.size()) + r, static_cast<int>(it.col()),
                               it.value());
      for (Eigen::Index r = 0; r < blk.b.size(); ++r) eq_b.push_back(blk.b[r]);
      continue;
    }
    // Nonnegative blocks are barrier-separable: one piece per row.
    const bool split = blk.cone == Cone::NonNegative;
    const int pieces = split ? blk.dim() : 1;
    const int piece_dim = split ? 1 : blk.dim();
    for (int piece = 0; piece < pieces; ++piece) {
      BlockData data;
      data.cone = blk.cone;
      data.row0 = static_cast<int>(cone_b.size());
      data.dim = piece_dim;
      for (int r = 0; r < piece_dim; ++r) {
        const int src = piece * piece_dim + r;
        for (RowMatrix::InnerIterator it(blk.a, src); it; ++it) {
          cone_trip.emplace_back(data.row0 + r, static_cast<int>(it.col()), it.value());
          data.support.push_back(static_cast<int>(it.col()));
        }
        if (shift_column && (*shift_column)[shift_row + r] != 0.0) {
          cone_trip.emplace_back(data.row0 + r, base_n, (*shift_column)[shift_row + r]);
          data.support.push_back(base_n);
        }
        cone_b.push_back(blk.b[src]);
      }
      shift_row += piece_dim;
      std::ranges::sort(data.support);
      data.support.erase(std::unique(data.support.begin(), data.support.end()),
                         data.support.end());
      nu_ += barrier_parameter(blk.cone);
      blocks_.push_back(std::move(data));
    }
  }
  if (shift_column && std::isfinite(shift_cap)) {
    BlockData data;
    data.cone = Cone::NonNegative;
    data.row0 = static_cast<int>(cone_b.size());
    data.dim = 1;
    data.support = {base_n};
    cone_trip.emplace_back(data.row0, base_n, -1.0);
    cone_b.push_back(shift_cap);
    nu_ += barrier_parameter(Cone::NonNegative);
    blocks_.push_back(std::move(data));
  }

  a_.resize(static_cast<Eigen::Index>(cone_b.size()), n_);
  a_.setFromTriplets(cone_trip.begin(), cone_trip.end());
  b_ = Eigen::Map<Eigen::VectorXd>(cone_b.data(), static_cast<Eigen::Index>(cone_b.size()));
  eq_.resize(static_cast<Eigen::Index>(eq_b.size()), n_);
  eq_.setFromTriplets(eq_trip.begin(), eq_trip.end());
  e_ = Eigen::Map<Eigen::VectorXd>(eq_b.data(), static_cast<Eigen::Index>(eq_b.size()));

  for (auto& data : blocks_) {
    const auto supp = static_cast<Eigen::Index>(data.support.size());
    data.m = Eigen::MatrixXd::Zero(data.dim, supp);
    for (int r = 0; r < data.dim; ++r) {
      for (RowMatrix::InnerIterator it(a_, data.row0 + r); it; ++it) {
        const auto pos = std::ranges::lower_bound(data.support, static_cast<int>(it.col()));
        data.m(r, pos - data.support.begin()) += it.value();
      }
    }
    if (data.cone == Cone::SecondOrder) {
      Eigen::MatrixXd jm = data.m;
      jm.bottomRows(data.dim - 1) *= -1.0;
      data.soc_metric = data.m.transpose() * jm;
    }
    if (supp < kExpandMin || data.cone == Cone::Exponential) continue;
    if (data.cone == Cone::NonNegative) {
      data.col_a = n_ + expanded_++;
      continue;
    }
    // H = (2/g)·(-m'Jm) + a·aᵀ with a = (2/g)·m'J·s. A t-row variable gets a negative entry.
    const Eigen::MatrixXd neg_metric = -data.soc_metric;
    if (!is_diagonal(neg_metric)) continue;
    data.col_a = n_ + expanded_++;
    data.d_part = lower_entries(neg_metric);
  }
  build_pattern();
}

void BarrierModel::build_pattern() {
  const int dim = n_ + expanded_ + p();
  std::vector<std::vector<int>> rows_of_col(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) rows_of_col[j].push_back(j);
  for (const auto& data : blocks_) {
    if (data.col_a >= 0) {
      for (const auto& e : data.d_part) rows_of_col[data.support[e.j]].push_back(data.support[e.i]);
      for (int v : data.support) rows_of_col[v].push_back(data.col_a);
      continue;
    }
    for (std::size_t a = 0; a < data.support.size(); ++a)
      for (std::size_t b = 0; b <= a; ++b) rows_of_col[data.support[b]].push_back(data.support[a]);
  }
  for (int r = 0; r < eq_.outerSize(); ++r)
    for (RowMatrix::InnerIterator it(eq_, r); it; ++it)
      rows_of_col[it.col()].push_back(eq_col(r));

  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < dim; ++j) {
    auto& rows = rows_of_col[j];
    std::ranges::sort(rows);
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    for (int r : rows) trip.emplace_back(r, j, 0.0);
  }
  kkt_.resize(dim, dim);
  kkt_.setFromTriplets(trip.begin(), trip.end());
  kkt_.makeCompressed();

  auto position = [this](int row, int col) {
    const int* begin = kkt_.innerIndexPtr() + kkt_.outerIndexPtr()[col];
    const int* end = kkt_.innerIndexPtr() + kkt_.outerIndexPtr()[col + 1];
    return static_cast<int>(std::lower_bound(begin, end, row) - kkt_.innerIndexPtr());
  };
  diag_pos_.resize(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) diag_pos_[j] = position(j, j);
  for (auto& data : blocks_) {
    data.hess_pos.clear();
    if (data.col_a >= 0) {
      auto lower = [&](int r, int c) { return r >= c ? position(r, c) : position(c, r); };
      for (auto& e : data.d_part) e.pos = lower(data.support[e.i], data.support[e.j]);
      data.a_pos.clear();
      for (int v : data.support) data.a_pos.push_back(position(data.col_a, v));
      kkt_.valuePtr()[position(data.col_a, data.col_a)] = -1.0;
      continue;
    }
    for (std::size_t a = 0; a < data.support.size(); ++a)
      for (std::size_t b = 0; b <= a; ++b)
        data.hess_pos.push_back(position(data.support[a], data.support[b]));
  }
  // Equality rows are constant; write them once.
  for (int r = 0; r < eq_.outerSize(); ++r)
    for (RowMatrix::InnerIterator it(eq_, r); it; ++it)
      kkt_.valuePtr()[position(eq_col(r), static_cast<int>(it.col()))] = it.value();
  choose_order();
}

void BarrierModel::choose_order() {
  // A variable is eliminated early only if its diagonal in D is positive for sure.
  std::vector<char> positive(static_cast<std::size_t>(n_), 0);
  std::vector<char> late(static_cast<std::size_t>(n_), 0);
  for (const auto& data : blocks_) {
    if (data.col_a < 0) {
      for (int v : data.support) positive[v] = 1;
      continue;
    }
    for (const auto& e : data.d_part) {
      if (e.value > 0.0) positive[data.support[e.i]] = 1;
      if (e.value < 0.0) late[data.support[e.i]] = 1;
    }
  }
  std::vector<int> lead, trail;
  std::vector<int> lead_index(static_cast<std::size_t>(n_), -1);
  for (int v = 0; v < n_; ++v) {
    if (positive[v] && !late[v]) {
      lead_index[v] = static_cast<int>(lead.size());
      lead.push_back(v);
    } else {
      trail.push_back(v);
    }
  }

  std::vector<Eigen::Triplet<double>> trip;
  for (int col = 0; col < n_; ++col)
    for (SpMat::InnerIterator it(kkt_, col); it; ++it) {
      const auto row = static_cast<int>(it.row());
      if (row >= n_ || lead_index[row] < 0 || lead_index[col] < 0) continue;
      trip.emplace_back(lead_index[row], lead_index[col], 1.0);
      trip.emplace_back(lead_index[col], lead_index[row], 1.0);
    }
  SpMat sub(static_cast<Eigen::Index>(lead.size()), static_cast<Eigen::Index>(lead.size()));
  sub.setFromTriplets(trip.begin(), trip.end());
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> amd;
  Eigen::AMDOrdering<int>()(sub, amd);  // amd.indices()[new] = old

  std::vector<int> sequence;
  sequence.reserve(static_cast<std::size_t>(kkt_.rows()));
  for (Eigen::Index k = 0; k < amd.size(); ++k) sequence.push_back(lead[amd.indices()[k]]);
  for (int h = 0; h < expanded_; ++h) sequence.push_back(n_ + h);
  sequence.insert(sequence.end(), trail.begin(), trail.end());
  for (int r = 0; r < p(); ++r) sequence.push_back(eq_col(r));

  order_.resize(kkt_.rows());
  for (std::size_t k = 0; k < sequence.size(); ++k) order_.indices()[sequence[k]] = static_cast<int>(k);
  analyzed_ = false;
}

bool BarrierModel::factorize_and_solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& sol) {
  permuted_.resize(kkt_.rows(), kkt_.cols());
  permuted_.selfadjointView<Eigen::Lower>() = kkt_.selfadjointView<Eigen::Lower>().twistedBy(order_);
  if (!analyzed_) {
    ldlt_.analyzePattern(permuted_);
    analyzed_ = true;
  }
  ldlt_.factorize(permuted_);
  if (ldlt_.info() != Eigen::Success) return false;
  const Eigen::VectorXd permuted_rhs = order_ * rhs;
  const Eigen::VectorXd y = ldlt_.solve(permuted_rhs);
  sol = order_.inverse() * y;
  return sol.allFinite();
}

double BarrierModel::barrier(const Eigen::VectorXd& s) const {
  double total = 0.0;
  for (const auto& data : blocks_) {
    const auto seg = s.segment(data.row0, data.dim);
    switch (data.cone) {
      case Cone::NonNegative:
        if (!(seg[0] > 0.0)) return kInf;
        total -= std::log(seg[0]);
        break;
      case Cone::SecondOrder: {
        const double g = soc_gap(seg);
        if (!(g > 0.0)) return kInf;
        total -= std::log(g);
        break;
      }
      case Cone::Exponential: {
        const double v = exp_barrier(seg, false).value;
        if (!std::isfinite(v)) return kInf;
        total += v;
        break;
      }
      case Cone::Zero: break;
    }
  }
  return total;
}

void BarrierModel::derivatives(const Eigen::VectorXd& s, Eigen::VectorXd& grad_s,
                               bool with_hessian) {
  grad_s.setZero(s.size());
  double* values = kkt_.valuePtr();
  if (with_hessian) {
    // Only the Hessian block is refreshed; equality entries stay.
    for (const auto& data : blocks_) {
      for (int pos : data.hess_pos) values[pos] = 0.0;
      for (const auto& e : data.d_part) values[e.pos] = 0.0;
    }
    for (int j = 0; j < n_; ++j) values[diag_pos_[j]] = 0.0;
  }
  Eigen::MatrixXd local;
  for (const auto& data : blocks_) {
    const auto seg = s.segment(data.row0, data.dim);
    auto gseg = grad_s.segment(data.row0, data.dim);
    switch (data.cone) {
      case Cone::NonNegative: {
        gseg[0] = -1.0 / seg[0];
        if (with_hessian && data.col_a >= 0) {
          for (std::size_t j = 0; j < data.support.size(); ++j)
            values[data.a_pos[j]] = data.m(0, static_cast<Eigen::Index>(j)) / seg[0];
          continue;
        }
        if (with_hessian) {
          const Eigen::VectorXd row = data.m.row(0).transpose();
          local = row * row.transpose() / (seg[0] * seg[0]);
        }
        break;
      }
      case Cone::SecondOrder: {
        const double g = soc_gap(seg);
        Eigen::VectorXd jz = seg;
        jz.tail(data.dim - 1) *= -1.0;
        gseg = -2.0 * jz / g;
        if (with_hessian && data.col_a >= 0) {
          const Eigen::VectorXd q = data.m.transpose() * jz;
          for (const auto& e : data.d_part) values[e.pos] += (2.0 / g) * e.value;
          for (std::size_t j = 0; j < data.support.size(); ++j)
            values[data.a_pos[j]] = (2.0 / g) * q[static_cast<Eigen::Index>(j)];
          continue;
        }
        if (with_hessian) {
          const Eigen::VectorXd q = data.m.transpose() * jz;
          local = (-2.0 / g) * data.soc_metric + (4.0 / (g * g)) * (q * q.transpose());
        }
        break;
      }
      case Cone::Exponential: {
        const ExpDerivs d = exp_barrier(seg, true);
        gseg = d.grad;
        if (with_hessian) local = data.m.transpose() * d.hess * data.m;
        break;
      }
      case Cone::Zero: break;
    }
    if (with_hessian) {
      std::size_t idx = 0;
      const auto supp = static_cast<Eigen::Index>(data.support.size());
      for (Eigen::Index a = 0; a < supp; ++a)
        for (Eigen::Index b = 0; b <= a; ++b) values[data.hess_pos[idx++]] += local(a, b);
    }
  }
}

bool BarrierModel::solve_newton(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx,
                                const Eigen::VectorXd* eq_target) {
  double* values = kkt_.valuePtr();
  double max_diag = 0.0;
  for (int j = 0; j < n_; ++j) max_diag = std::max(max_diag, values[diag_pos_[j]]);
  if (!(max_diag > 0.0) || !std::isfinite(max_diag)) max_diag = 1.0;
  std::vector<double> diag(static_cast<std::size_t>(n_));
  for (int j = 0; j < n_; ++j) diag[j] = values[diag_pos_[j]];

  Eigen::VectorXd full = Eigen::VectorXd::Zero(n_ + expanded_ + p());
  full.head(n_) = rhs;
  if (eq_target != nullptr) full.tail(p()) = *eq_target;
  for (int attempt = 0; attempt < 6; ++attempt) {
    const double reg = reg_scale_ * std::pow(100.0, attempt);
    for (int j = 0; j < n_; ++j)
      values[diag_pos_[j]] = diag[j] * (1.0 + reg) + reg * 1e-8 * max_diag;
    // Equality rows get an absolute shift: scaling by the Hessian swamps E H^-1 E' late on the path.
    for (int r = 0; r < p(); ++r) values[diag_pos_[eq_col(r)]] = -reg;
    Eigen::VectorXd sol;
    if (!factorize_and_solve(full, sol)) continue;
    // Refine against the unregularized matrix; the expanded factors make the system indefinite.
    for (int j = 0; j < n_; ++j) values[diag_pos_[j]] = diag[j];
    for (int r = 0; r < p(); ++r) values[diag_pos_[eq_col(r)]] = 0.0;
    double last = kInf;
    for (int pass = 0; pass < 4; ++pass) {
      const Eigen::VectorXd resid = full - kkt_.selfadjointView<Eigen::Lower>() * sol;
      const double size = resid.lpNorm<Eigen::Infinity>();
      if (!(size < 0.5 * last) || size <= 1e-15 * (1.0 + full.lpNorm<Eigen::Infinity>())) break;
      last = size;
      const Eigen::VectorXd permuted_resid = order_ * resid;
      const Eigen::VectorXd y = ldlt_.solve(permuted_resid);
      const Eigen::VectorXd correction = order_.inverse() * y;
      sol += correction;
    }
    if (!sol.allFinite()) continue;
    dx = sol.head(n_);
    return true;
  }
  for (int j = 0; j < n_; ++j) values[diag_pos_[j]] = diag[j];
  return false;
}

Eigen::VectorXd BarrierModel::interior_direction() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(b_.size());
  for (const auto& data : blocks_) {
    switch (data.cone) {
      case Cone::NonNegative: d[data.row0] = 1.0; break;
      case Cone::SecondOrder: d[data.row0] = 1.0; break;
      case Cone::Exponential:
        d.segment(data.row0, 3) = Eigen::Vector3d(-1.0, 1.0, 1.0);
        break;
      case Cone::Zero: break;
    }
  }
  return d;
}

// Smallest shift s with slack + s*dir in the cone interior, per block; returns the maximum.
double required_shift(const BarrierModel& model, const Eigen::VectorXd& slack,
                      const Eigen::VectorXd& dir) {
  double need = -kInf;
  for (const auto& data : model.blocks()) {
    const auto seg = slack.segment(data.row0, data.dim);
    double block_need = 0.0;
    switch (data.cone) {
      case Cone::NonNegative: block_need = -seg[0]; break;
      case Cone::SecondOrder: block_need = seg.tail(data.dim - 1).norm() - seg[0]; break;
      case Cone::Exponential: {
        const auto dseg = dir.segment(data.row0, 3);
        const double scale = 1.0 + seg.cwiseAbs().maxCoeff();
        if (exp_psi(seg[0], seg[1], seg[2]) > 0.0) {
          block_need = -1e-6 * scale;
          break;
        }
        double step = 1e-9 * scale;
        while (!(exp_psi(seg[0] + step * dseg[0], seg[1] + step * dseg[1],
                         seg[2] + step * dseg[2]) > 0.0))
          step *= 2.0;
        block_need = step;
        break;
      }
      case Cone::Zero: break;
    }
    need = std::max(need, block_need);
  }
  return need;
}

enum class RunOutcome { Converged, Stopped, Unbounded, Stalled, StepLimit };

struct RunResult {
  RunOutcome outcome = RunOutcome::Stalled;
  double t = 1.0;
  double gap = kInf;
  /// nu/t of the last completed centering.
  double centered_gap = kInf;
  int steps = 0;
};

class PathFollower {
 public:
  PathFollower(BarrierModel& model, const SolverOptions& options) : model_(model), opt_(options) {}

  using Predicate = std::function<bool(const Eigen::VectorXd&)>;

  /// `stop` is tested after each completed centering, `early_stop` after every Newton step.
  RunResult run(Eigen::VectorXd& x, const Predicate& stop, int step_budget,
                const Predicate& early_stop = nullptr) {
    RunResult res;
    Eigen::VectorXd s = model_.slacks(x);
    Eigen::VectorXd grad_s;
    res.t = initial_t(x, s);
    const double nu = std::max(model_.nu(), 1.0);
    const bool feasibility_only = model_.c().isZero(0.0);
    while (true) {
      const auto centered = center(x, s, res.t, step_budget, res.steps, early_stop);
      if (centered == CenterOutcome::Stopped) return finish(res, RunOutcome::Stopped, nu);
      if (centered == CenterOutcome::Centered && stop && stop(x))
        return finish(res, RunOutcome::Stopped, nu);
      if (centered == CenterOutcome::Unbounded) return finish(res, RunOutcome::Unbounded, nu);
      if (centered == CenterOutcome::StepLimit) return finish(res, RunOutcome::StepLimit, nu);
      const double obj = model_.c().dot(x);
      res.gap = feasibility_only ? 0.0 : nu / res.t;
      if (res.gap <= opt_.tol * std::max(1.0, std::abs(obj)))
        return finish(res, RunOutcome::Converged, nu);
      if (centered == CenterOutcome::Stalled) return finish(res, RunOutcome::Stalled, nu);
      res.centered_gap = res.gap;
      res.t *= opt_.mu;
    }
  }

 private:
  enum class CenterOutcome { Centered, Stopped, Unbounded, Stalled, StepLimit };

  static RunResult finish(RunResult r, RunOutcome o, double nu) {
    r.outcome = o;
    if (!std::isfinite(r.gap)) r.gap = nu / r.t;
    return r;
  }

  double initial_t(const Eigen::VectorXd& x, const Eigen::VectorXd& s) {
    const Eigen::VectorXd& c = model_.c();
    if (c.isZero(0.0)) return 1.0;
    Eigen::VectorXd grad_s;
    model_.derivatives(s, grad_s, true);
    const Eigen::VectorXd gphi = model_.a().transpose() * grad_s;
    Eigen::VectorXd hc, hg;
    if (!model_.solve_newton(c, hc) || !model_.solve_newton(gphi, hg)) return 1.0;
    const double denom = c.dot(hc);
    double t = denom > 0.0 ? -c.dot(hg) / denom : 1.0;
    if (!std::isfinite(t) || t <= 0.0) t = 1.0;
    (void)x;
    return std::clamp(t, 1e-8, 1e8);
  }

  CenterOutcome center(Eigen::VectorXd& x, Eigen::VectorXd& s, double t,
                       int budget, int& steps, const Predicate& early_stop) {
    const Eigen::VectorXd& c = model_.c();
    Eigen::VectorXd grad_s, dx;
    double phi = model_.barrier(s);
    for (int inner = 0; inner < 60; ++inner) {
      if (steps >= budget) return CenterOutcome::StepLimit;
      model_.derivatives(s, grad_s, true);
      const Eigen::VectorXd g = t * c + model_.a().transpose() * grad_s;
      // Regularized equality rows leak a little per step; steer the drift back to zero.
      const Eigen::VectorXd eq_target = -(model_.eq() * x + model_.eq_rhs());
      if (!model_.solve_newton(-g, dx, &eq_target)) return CenterOutcome::Stalled;
      ++steps;
      const double lambda_sq = -g.dot(dx);
      if (!(lambda_sq >= 0.0) || lambda_sq / 2.0 <= 1e-10) return CenterOutcome::Centered;

      const Eigen::VectorXd ds = model_.a() * dx;
      double alpha = 1.0;
      double trial_phi = kInf;
      for (int k = 0; k < 80; ++k) {
        trial_phi = model_.barrier(s + alpha * ds);
        if (std::isfinite(trial_phi)) break;
        alpha *= 0.5;
      }
      if (!std::isfinite(trial_phi)) return CenterOutcome::Stalled;
      const double f0 = t * c.dot(x) + phi;
      const double slope = g.dot(dx);
      while (t * c.dot(x + alpha * dx) + trial_phi > f0 + 0.01 * alpha * slope) {
        alpha *= 0.5;
        if (alpha < 1e-14) break;
        trial_phi = model_.barrier(s + alpha * ds);
      }
      if (alpha < 1e-14) {
        // Newton direction is no longer a descent direction at working precision.
        return lambda_sq < 1e-6 ? CenterOutcome::Centered : CenterOutcome::Stalled;
      }
      x += alpha * dx;
      s = model_.slacks(x);
      phi = model_.barrier(s);
      if (early_stop && early_stop(x)) return CenterOutcome::Stopped;
      if (x.lpNorm<Eigen::Infinity>() > 1e13 || c.dot(x) < -1e13) return CenterOutcome::Unbounded;
    }
    return CenterOutcome::Centered;
  }

  BarrierModel& model_;
  const SolverOptions& opt_;
};

// Moves x onto {E x + e = 0} by a minimum-norm correction.
bool project_equalities(const BarrierModel& model, Eigen::VectorXd& x, double tol) {
  if (model.p() == 0) return true;
  const RowMatrix& e = model.eq();
  const Eigen::VectorXd r = e * x + model.eq_rhs();
  SpMat gram = (e * e.transpose()).pruned();
  for (int i = 0; i < gram.rows(); ++i) gram.coeffRef(i, i) += 1e-12;
  Eigen::SimplicialLDLT<SpMat> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd y = ldlt.solve(r);
  x -= e.transpose() * y;
  const double resid = (e * x + model.eq_rhs()).lpNorm<Eigen::Infinity>();
  return resid <= tol * (1.0 + model.eq_rhs().lpNorm<Eigen::Infinity>());
}

double equality_residual(const BarrierModel& model, const Eigen::VectorXd& x) {
  if (model.p() == 0) return 0.0;
  return (model.eq() * x + model.eq_rhs()).lpNorm<Eigen::Infinity>();
}

}  // namespace

Solution solve(const ConicProgram& program, const SolverOptions& options) {
  Solution sol;
  if (const auto errors = validate(program); !errors.empty()) {
    throw std::invalid_argument("conic::solve on invalid program: " + errors.front());
  }
  const int n = program.num_vars();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (options.warm_start && options.warm_start->size() == n) x = *options.warm_start;

  BarrierModel model(program, nullptr);
  if (!project_equalities(model, x, options.tol)) {
    sol.status = Status::Infeasible;
    sol.x = x;
    sol.max_residual = max_violation(program, x);
    return sol;
  }

  int steps_used = 0;
  Eigen::VectorXd s = model.slacks(x);
  if (!std::isfinite(model.barrier(s))) {
    // Phase I: minimize a common shift sigma along interior directions. The first attempt adds
    // a small multiple of the objective so the point handed over is not far off in directions
    // sigma does not see; only the pure shift problem certifies infeasibility.
    const Eigen::VectorXd dir = model.interior_direction();
    const double level = std::max(1.0, std::abs(program.objective().dot(x)));
    const double need = required_shift(model, s, dir);
    const double start = need + std::max(1e-3 * std::abs(need), 1e-6);
    const double margin = std::max(1e-6, 1e-2 * std::abs(start));
    const double weights[] = {1e-3 / level, 0.0};
    RunResult res;
    Eigen::VectorXd xs(n + 1);
    for (const double weight : weights) {
      if (program.objective().isZero(0.0) && weight != 0.0) continue;
      xs.head(n) = x;
      xs[n] = start;
      BarrierModel phase1(program, &dir, weight, 2.0 * start + 1.0);
      PathFollower follower(phase1, options);
      // Stop at the first centered point with a negative shift, or as soon as the shift is
      // clearly negative. A weighted attempt whose shift grows is abandoned.
      const double ceiling = weight != 0.0 ? start : kInf;
      res = follower.run(
          xs, [n](const Eigen::VectorXd& v) { return v[n] < 0.0; },
          std::max(options.max_newton_steps - steps_used, 1),
          [n, margin, ceiling](const Eigen::VectorXd& v) {
            return v[n] < -margin || v[n] > ceiling;
          });
      steps_used += res.steps;
      if (res.outcome == RunOutcome::Stopped && xs[n] < 0.0) break;
      if (res.outcome == RunOutcome::Stopped) res.outcome = RunOutcome::Stalled;
    }
    if (res.outcome != RunOutcome::Stopped) {
      sol.x = xs.head(n);
      sol.newton_steps = steps_used;
      sol.max_residual = max_violation(program, sol.x);
      sol.gap = res.gap;
      const bool certified = res.outcome == RunOutcome::Converged ||
                             (res.outcome == RunOutcome::Stalled && xs[n] - res.gap > 0.0);
      sol.status = certified ? Status::Infeasible : Status::NumericalFailure;
      return sol;
    }
    x = xs.head(n);
  }

  PathFollower follower(model, options);
  const auto res = follower.run(x, nullptr, std::max(options.max_newton_steps - steps_used, 1));
  sol.newton_steps = steps_used + res.steps;
  sol.x = x;
  sol.objective_value = program.objective().dot(x);
  sol.gap = res.gap;
  sol.max_residual = std::max(max_violation(program, x), equality_residual(model, x));
  // A stall near the end of the path is accepted when the last centered point already bounds
  // the relative gap by sqrt(tol).
  const bool near_optimal =
      (res.outcome == RunOutcome::Stalled || res.outcome == RunOutcome::StepLimit) &&
                            res.centered_gap <= std::sqrt(options.tol) *
                                                    std::max(1.0, std::abs(sol.objective_value));
  if (near_optimal) sol.gap = res.centered_gap;
  switch (res.outcome) {
    case RunOutcome::Converged: sol.status = Status::Optimal; break;
    case RunOutcome::Stalled:
    case RunOutcome::StepLimit:
      sol.status = near_optimal ? Status::Optimal : Status::NumericalFailure;
      break;
    case RunOutcome::Unbounded: sol.status = Status::Unbounded; break;
    default: sol.status = Status::NumericalFailure; break;
  }
  if (sol.status == Status::Optimal && sol.max_residual > options.tol)
    sol.status = Status::NumericalFailure;
  return sol;
}

}  // namespace resprog::conic
