#include "resprog/conic_lift.hpp"

namespace resprog::conic {

ComplexLayout ComplexLayout::allocate(ConicProgram& program, int count) {
  return {program.add_variables(2 * count), count};
}

void ComplexLayout::scatter(const Eigen::Ref<const Eigen::VectorXcd>& z, int offset,
                            Eigen::VectorXd& x) const {
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    x[re(offset + static_cast<int>(i))] = z[i].real();
    x[im(offset + static_cast<int>(i))] = z[i].imag();
  }
}

Eigen::VectorXcd ComplexLayout::gather(const Eigen::VectorXd& x, int offset, int len) const {
  Eigen::VectorXcd z(len);
  for (int i = 0; i < len; ++i) z[i] = {x[re(offset + i)], x[im(offset + i)]};
  return z;
}

ComplexAffine hermitian_inner(const Eigen::Ref<const Eigen::VectorXcd>& h,
                              const ComplexLayout& layout, int offset, double scale) {
  // conj(a + ib)(x + iy) = (ax + by) + i(ay - bx)
  ComplexAffine out;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const int idx = offset + static_cast<int>(i);
    const double a = scale * h[i].real();
    const double b = scale * h[i].imag();
    out.re.add(layout.re(idx), a).add(layout.im(idx), b);
    out.im.add(layout.re(idx), -b).add(layout.im(idx), a);
  }
  return out;
}

}  // namespace resprog::conic
