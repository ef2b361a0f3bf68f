#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace resprog::conic {

/// Cone membership of an affine block A·x + b.
///
/// SecondOrder: (t, z) with ||z||_2 <= t, dimension >= 2.
/// Exponential: (u, v, w) with v·exp(u/v) <= w, v > 0, closed at v = 0.
enum class Cone { Zero, NonNegative, SecondOrder, Exponential };

std::string to_string(Cone cone);

struct LinearTerm {
  int var = 0;
  double coef = 0.0;
};

/// Sparse real affine form Σ coef·x[var] + constant.
class AffineExpr {
 public:
  AffineExpr() = default;
  explicit AffineExpr(double constant) : constant_(constant) {}

  static AffineExpr variable(int var, double coef = 1.0) {
    AffineExpr e;
    e.add(var, coef);
    return e;
  }

  AffineExpr& add(int var, double coef) {
    if (coef != 0.0) terms_.push_back({var, coef});
    return *this;
  }
  AffineExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }
  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator*=(double scale);

  [[nodiscard]] std::span<const LinearTerm> terms() const { return terms_; }
  [[nodiscard]] double constant() const { return constant_; }
  [[nodiscard]] double evaluate(const Eigen::VectorXd& x) const;

 private:
  std::vector<LinearTerm> terms_;
  double constant_ = 0.0;
};

AffineExpr operator+(AffineExpr lhs, const AffineExpr& rhs);
AffineExpr operator-(AffineExpr lhs, const AffineExpr& rhs);
AffineExpr operator*(double scale, AffineExpr e);

using RowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct ConeBlock {
  Cone cone = Cone::NonNegative;
  RowMatrix a;
  Eigen::VectorXd b;
  std::string label;

  [[nodiscard]] int dim() const { return static_cast<int>(b.size()); }
};

/// minimize cᵀx subject to A_i·x + b_i ∈ K_i for every block i.
class ConicProgram {
 public:
  explicit ConicProgram(int num_vars = 0);

  /// Appends `count` variables and returns the index of the first.
  int add_variables(int count);
  [[nodiscard]] int num_vars() const { return num_vars_; }

  void set_objective(int var, double coef);
  [[nodiscard]] const Eigen::VectorXd& objective() const { return c_; }

  /// Each expression becomes one row of the block, in order.
  void add_block(Cone cone, std::span<const AffineExpr> rows, std::string label = {});
  void add_block(Cone cone, const std::vector<AffineExpr>& rows, std::string label = {}) {
    add_block(cone, std::span<const AffineExpr>(rows), std::move(label));
  }
  void add_block(ConeBlock block) { blocks_.push_back(std::move(block)); }

  [[nodiscard]] const std::vector<ConeBlock>& blocks() const { return blocks_; }
  [[nodiscard]] std::size_t count(Cone cone) const;
  /// Number of SOC blocks with exactly `dim` rows.
  [[nodiscard]] std::size_t count_soc(int dim) const;

 private:
  int num_vars_ = 0;
  Eigen::VectorXd c_;
  std::vector<ConeBlock> blocks_;
};

/// Dimension and cone-tag problems, one message per offending block. Empty means valid.
std::vector<std::string> validate(const ConicProgram& program);

/// Largest violation of any block at x: |row| for zero rows, and for cones the amount by which
/// the defining inequality fails. Zero for points inside every cone.
double max_violation(const ConicProgram& program, const Eigen::VectorXd& x);

/// Sparse triplet dump: a header line per block "block <i> <cone> <rows> <label>", one line
/// "<block> <row> <col> <value>" per nonzero of A, "<block> <row> b <value>" per nonzero of b,
/// and "c <col> <value>" per objective nonzero.
void write_triplets(const ConicProgram& program, std::ostream& out);

enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure };

std::string to_string(Status status);

struct Solution {
  Status status = Status::NumericalFailure;
  Eigen::VectorXd x;
  double objective_value = 0.0;
  double max_residual = 0.0;
  /// Barrier duality-gap bound nu/t at exit.
  double gap = 0.0;
  int newton_steps = 0;
};

struct SolverOptions {
  /// Feasibility tolerance and relative objective accuracy.
  double tol = 1e-8;
  int max_newton_steps = 500;
  /// Barrier parameter growth per outer iteration.
  double mu = 20.0;
  /// Starting point; need not be feasible.
  std::optional<Eigen::VectorXd> warm_start;
};

/// Primal log-barrier path-following method with a phase-I search for a strictly feasible
/// point. Programs must have a strictly feasible point in the non-zero cones (Slater); a
/// feasible set without interior is reported as Infeasible.
Solution solve(const ConicProgram& program, const SolverOptions& options = {});

struct SelfTestCase {
  std::string name;
  Status expected_status = Status::Optimal;
  /// Expected optimal value of the quantity the case reports (NaN when infeasible).
  double expected_value = 0.0;
  double achieved_value = 0.0;
  Solution solution;
  bool passed = false;
  double seconds = 0.0;
};

/// Canonical battery: SOC norm, exponential-cone log bound, an infeasible pair of bounds, and a
/// two-user SINR-constrained minimum-power SOCP.
std::vector<SelfTestCase> run_selftest(double accuracy = 1e-6);

}  // namespace resprog::conic
