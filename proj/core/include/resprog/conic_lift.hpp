#pragma once

#include <complex>

#include <Eigen/Core>

#include "resprog/conic.hpp"

namespace resprog::conic {

/// Places `count` complex scalars on 2·count contiguous real variables starting at `first_real`:
/// complex i occupies (first_real + 2i, first_real + 2i + 1) as (real part, imaginary part).
class ComplexLayout {
 public:
  ComplexLayout() = default;
  ComplexLayout(int first_real, int count) : first_(first_real), count_(count) {}

  /// Reserves the real variables in `program` and returns the layout.
  static ComplexLayout allocate(ConicProgram& program, int count);

  [[nodiscard]] int size() const { return count_; }
  [[nodiscard]] int re(int i) const { return first_ + 2 * i; }
  [[nodiscard]] int im(int i) const { return first_ + 2 * i + 1; }

  /// Writes complex values z into the lifted positions of x.
  void scatter(const Eigen::Ref<const Eigen::VectorXcd>& z, int offset, Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXcd gather(const Eigen::VectorXd& x, int offset, int len) const;

 private:
  int first_ = 0;
  int count_ = 0;
};

/// Real and imaginary parts of a complex affine form.
struct ComplexAffine {
  AffineExpr re;
  AffineExpr im;
};

/// hᴴw where w is the length-h.size() run of lifted complex variables starting at `offset`.
/// |hᴴw|² = re² + im², and Re{hᴴw} is the single affine form `re`.
ComplexAffine hermitian_inner(const Eigen::Ref<const Eigen::VectorXcd>& h,
                              const ComplexLayout& layout, int offset, double scale = 1.0);

}  // namespace resprog::conic
