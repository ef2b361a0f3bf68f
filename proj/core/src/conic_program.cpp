#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "resprog/conic.hpp"

namespace resprog::conic {

std::string to_string(Cone cone) {
  switch (cone) {
    case Cone::Zero: return "zero";
    case Cone::NonNegative: return "nonneg";
    case Cone::SecondOrder: return "soc";
    case Cone::Exponential: return "exp";
  }
  return "unknown";
}

std::string to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
    case Status::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  constant_ += other.constant_;
  return *this;
}

AffineExpr& AffineExpr::operator*=(double scale) {
  for (auto& term : terms_) term.coef *= scale;
  constant_ *= scale;
  return *this;
}

double AffineExpr::evaluate(const Eigen::VectorXd& x) const {
  double acc = constant_;
  for (const auto& term : terms_) acc += term.coef * x[term.var];
  return acc;
}

AffineExpr operator+(AffineExpr lhs, const AffineExpr& rhs) { return lhs += rhs; }

AffineExpr operator-(AffineExpr lhs, const AffineExpr& rhs) {
  AffineExpr neg = rhs;
  neg *= -1.0;
  return lhs += neg;
}

AffineExpr operator*(double scale, AffineExpr e) { return e *= scale; }

ConicProgram::ConicProgram(int num_vars) : num_vars_(num_vars), c_(Eigen::VectorXd::Zero(num_vars)) {
  if (num_vars < 0) throw std::invalid_argument("negative variable count");
}

int ConicProgram::add_variables(int count) {
  if (count < 0) throw std::invalid_argument("negative variable count");
  const int first = num_vars_;
  num_vars_ += count;
  c_.conservativeResize(num_vars_);
  c_.tail(count).setZero();
  for (auto& block : blocks_) block.a.conservativeResize(block.a.rows(), num_vars_);
  return first;
}

void ConicProgram::set_objective(int var, double coef) {
  if (var < 0 || var >= num_vars_) throw std::out_of_range("objective variable out of range");
  c_[var] = coef;
}

void ConicProgram::add_block(Cone cone, std::span<const AffineExpr> rows, std::string label) {
  ConeBlock block;
  block.cone = cone;
  block.label = std::move(label);
  block.b.resize(static_cast<Eigen::Index>(rows.size()));
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    block.b[static_cast<Eigen::Index>(r)] = rows[r].constant();
    for (const auto& term : rows[r].terms()) {
      if (term.var < 0 || term.var >= num_vars_)
        throw std::out_of_range("block '" + block.label + "' references variable " +
                                std::to_string(term.var));
      triplets.emplace_back(static_cast<int>(r), term.var, term.coef);
    }
  }
  block.a.resize(static_cast<Eigen::Index>(rows.size()), num_vars_);
  block.a.setFromTriplets(triplets.begin(), triplets.end());
  blocks_.push_back(std::move(block));
}

std::size_t ConicProgram::count(Cone cone) const {
  return static_cast<std::size_t>(
      std::ranges::count_if(blocks_, [cone](const ConeBlock& b) { return b.cone == cone; }));
}

std::size_t ConicProgram::count_soc(int dim) const {
  return static_cast<std::size_t>(std::ranges::count_if(blocks_, [dim](const ConeBlock& b) {
    return b.cone == Cone::SecondOrder && b.dim() == dim;
  }));
}

std::vector<std::string> validate(const ConicProgram& program) {
  std::vector<std::string> errors;
  if (program.objective().size() != program.num_vars())
    errors.emplace_back("objective length differs from num_vars");
  const auto& blocks = program.blocks();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& blk = blocks[i];
    const std::string name =
        "block " + std::to_string(i) + (blk.label.empty() ? "" : " (" + blk.label + ")");
    if (blk.a.cols() != program.num_vars())
      errors.push_back(name + ": A has " + std::to_string(blk.a.cols()) + " columns, expected " +
                       std::to_string(program.num_vars()));
    if (blk.a.rows() != blk.b.size())
      errors.push_back(name + ": A rows and b length differ");
    if (blk.cone == Cone::SecondOrder && blk.dim() < 2)
      errors.push_back(name + ": second-order cone needs dimension >= 2");
    if (blk.cone == Cone::Exponential && blk.dim() != 3)
      errors.push_back(name + ": exponential cone needs dimension 3");
    if (!blk.b.allFinite()) errors.push_back(name + ": non-finite entries in b");
  }
  return errors;
}

namespace {

double cone_violation(Cone cone, const Eigen::VectorXd& s) {
  switch (cone) {
    case Cone::Zero: return s.size() ? s.cwiseAbs().maxCoeff() : 0.0;
    case Cone::NonNegative: return s.size() ? std::max(0.0, -s.minCoeff()) : 0.0;
    case Cone::SecondOrder:
      return std::max(0.0, s.tail(s.size() - 1).norm() - s[0]);
    case Cone::Exponential: {
      const double u = s[0], v = s[1], w = s[2];
      if (v > 0.0 && w > 0.0) return std::max(0.0, u - v * std::log(w / v));
      // closure at v = 0: {u <= 0, w >= 0}
      return std::max({0.0, -v, -w, v <= 0.0 ? u : 0.0});
    }
  }
  return 0.0;
}

}  // namespace

double max_violation(const ConicProgram& program, const Eigen::VectorXd& x) {
  double worst = 0.0;
  for (const auto& blk : program.blocks()) {
    const Eigen::VectorXd s = blk.a * x + blk.b;
    worst = std::max(worst, cone_violation(blk.cone, s));
  }
  return worst;
}

void write_triplets(const ConicProgram& program, std::ostream& out) {
  out << std::setprecision(17);
  out << "# resprog conic program: " << program.num_vars() << " variables, "
      << program.blocks().size() << " blocks\n";
  for (Eigen::Index j = 0; j < program.objective().size(); ++j)
    if (program.objective()[j] != 0.0) out << "c " << j << ' ' << program.objective()[j] << '\n';
  const auto& blocks = program.blocks();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& blk = blocks[i];
    out << "block " << i << ' ' << to_string(blk.cone) << ' ' << blk.dim() << ' '
        << (blk.label.empty() ? "-" : blk.label) << '\n';
    for (int r = 0; r < blk.a.outerSize(); ++r)
      for (RowMatrix::InnerIterator it(blk.a, r); it; ++it)
        out << i << ' ' << r << ' ' << it.col() << ' ' << it.value() << '\n';
    for (Eigen::Index r = 0; r < blk.b.size(); ++r)
      if (blk.b[r] != 0.0) out << i << ' ' << r << " b " << blk.b[r] << '\n';
  }
}

}  // namespace resprog::conic
