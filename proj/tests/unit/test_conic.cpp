#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "resprog/conic.hpp"
#include "resprog/conic_lift.hpp"

using namespace resprog::conic;

namespace {

AffineExpr var(int i, double c = 1.0) { return AffineExpr::variable(i, c); }

}  // namespace

TEST_CASE("self-test battery reaches the stated optima") {
  for (const auto& tc : run_selftest(1e-6)) {
    INFO(tc.name << " status=" << to_string(tc.solution.status) << " value=" << tc.achieved_value
                 << " steps=" << tc.solution.newton_steps);
    CHECK(tc.passed);
    CHECK(tc.seconds < 1.0);
  }
}

TEST_CASE("canonical problems") {
  SUBCASE("minimize x with (x, 1, 1) in SOC") {
    ConicProgram p;
    const int x = p.add_variables(1);
    p.set_objective(x, 1.0);
    p.add_block(Cone::SecondOrder, {var(x), AffineExpr(1.0), AffineExpr(1.0)});
    const auto s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.x[x] == doctest::Approx(std::numbers::sqrt2).epsilon(1e-6));
    CHECK(s.max_residual <= 1e-8);
  }
  SUBCASE("maximize t with (t, 1, e) in K_exp") {
    ConicProgram p;
    const int t = p.add_variables(1);
    p.set_objective(t, -1.0);
    p.add_block(Cone::Exponential, {var(t), AffineExpr(1.0), AffineExpr(std::numbers::e)});
    const auto s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.x[t] == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("x >= 1 and -x >= 0 is infeasible") {
    ConicProgram p;
    const int x = p.add_variables(1);
    p.add_block(Cone::NonNegative, {var(x).add_constant(-1.0)});
    p.add_block(Cone::NonNegative, {var(x, -1.0)});
    CHECK(solve(p).status == Status::Infeasible);
  }
}

TEST_CASE("empty program is valid with objective 0") {
  ConicProgram p;
  CHECK(validate(p).empty());
  const auto s = solve(p);
  CHECK(s.status == Status::Optimal);
  CHECK(s.objective_value == 0.0);
}

TEST_CASE("validate reports malformed blocks") {
  ConicProgram p;
  const int x = p.add_variables(2);
  p.add_block(Cone::SecondOrder, {var(x)}, "lonely soc");
  p.add_block(Cone::Exponential, {var(x), var(x + 1)}, "short exp");
  ConeBlock wide;
  wide.cone = Cone::NonNegative;
  wide.a = RowMatrix(1, 5);
  wide.b = Eigen::VectorXd::Zero(1);
  wide.label = "wide";
  p.add_block(wide);
  const auto errors = validate(p);
  REQUIRE(errors.size() == 3);
  CHECK(errors[0].find("lonely soc") != std::string::npos);
  CHECK(errors[1].find("short exp") != std::string::npos);
  CHECK(errors[2].find("wide") != std::string::npos);
}

TEST_CASE("multi-row nonnegative and zero blocks") {
  // minimize x + 2y + z  s.t.  x >= 1, y >= 2, z >= -1 (one block), x + y + z = 4
  ConicProgram p;
  const int x = p.add_variables(3);
  p.set_objective(x, 1.0);
  p.set_objective(x + 1, 2.0);
  p.set_objective(x + 2, 1.0);
  p.add_block(Cone::NonNegative,
              {var(x).add_constant(-1.0), var(x + 1).add_constant(-2.0), var(x + 2).add_constant(1.0)},
              "bounds");
  p.add_block(Cone::Zero, {var(x) + var(x + 1) + var(x + 2).add_constant(-4.0)}, "sum");
  const auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  // y sits at its bound; x + z = 2 with unit cost either way, so only the objective is fixed.
  CHECK(s.objective_value == doctest::Approx(6.0).epsilon(1e-6));
  CHECK(s.x[x + 1] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(s.x[x] >= 1.0 - 1e-8);
  CHECK(s.x[x + 2] >= -1.0 - 1e-8);
  CHECK(max_violation(p, s.x) <= 1e-8);
}

TEST_CASE("unbounded objective is reported") {
  ConicProgram p;
  const int x = p.add_variables(1);
  p.set_objective(x, 1.0);
  p.add_block(Cone::NonNegative, {var(x, -1.0)});
  CHECK(solve(p).status == Status::Unbounded);
}

TEST_CASE("lifting examples") {
  ConicProgram p;
  const auto layout = ComplexLayout::allocate(p, 1);
  Eigen::VectorXd x(2);
  x << 0.7, -1.3;  // w = a + bi
  Eigen::VectorXcd h1(1);
  h1 << std::complex<double>(1.0, 0.0);
  const auto real_h = hermitian_inner(h1, layout, 0);
  const double re = real_h.re.evaluate(x);
  const double im = real_h.im.evaluate(x);
  CHECK(re * re + im * im == doctest::Approx(0.7 * 0.7 + 1.3 * 1.3).epsilon(1e-15));

  Eigen::VectorXcd hi(1);
  hi << std::complex<double>(0.0, 1.0);
  const auto imag_h = hermitian_inner(hi, layout, 0);
  // conj(i)(a + bi) = b - ai
  CHECK(imag_h.re.evaluate(x) == doctest::Approx(-1.3).epsilon(1e-15));
  CHECK(imag_h.im.evaluate(x) == doctest::Approx(-0.7).epsilon(1e-15));
}

TEST_CASE("vector lifting matches complex arithmetic") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100; ++trial) {
    ConicProgram p;
    p.add_variables(3);
    const auto layout = ComplexLayout::allocate(p, 4);
    Eigen::VectorXcd h(2), w(4);
    for (auto& z : h) z = {g(rng), g(rng)};
    for (auto& z : w) z = {g(rng), g(rng)};
    Eigen::VectorXd x = Eigen::VectorXd::Zero(p.num_vars());
    layout.scatter(w, 0, x);
    CHECK((layout.gather(x, 0, 4) - w).norm() == 0.0);
    const double scale = 1.7;
    const auto lifted = hermitian_inner(h, layout, 2, scale);
    const std::complex<double> direct = scale * h.dot(w.segment(2, 2));
    CHECK(std::abs(lifted.re.evaluate(x) - direct.real()) <= 1e-12 * std::abs(direct));
    CHECK(std::abs(lifted.im.evaluate(x) - direct.imag()) <= 1e-12 * std::abs(direct));
  }
}

TEST_CASE("exponential cone encodes the natural log") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> z(1.0, 1e6);
  for (int trial = 0; trial < 200; ++trial) {
    const double zeta = z(rng);
    ConicProgram p;
    const int u = p.add_variables(2);
    p.add_block(Cone::Exponential, {var(u), AffineExpr(1.0), var(u + 1)});
    Eigen::VectorXd x(2);
    x << std::log(zeta), zeta;
    CHECK(max_violation(p, x) <= 1e-9 * zeta);
    x[0] = std::log(zeta) + 1e-6;
    CHECK(max_violation(p, x) > 0.0);
    // Bits recovered through the 1/ln 2 aggregation.
    CHECK(std::log(zeta) / std::numbers::ln2 == doctest::Approx(std::log2(zeta)).epsilon(1e-12));
  }
}

TEST_CASE("maximizing u under (u, 1, zeta) gives ln zeta") {
  for (const double zeta : {1.0, 2.0, 10.079, 1e4}) {
    ConicProgram p;
    const int u = p.add_variables(1);
    p.set_objective(u, -1.0);
    p.add_block(Cone::Exponential, {var(u), AffineExpr(1.0), AffineExpr(zeta)});
    const auto s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.x[u] == doctest::Approx(std::log(zeta)).epsilon(1e-6));
  }
}

TEST_CASE("triplet dump") {
  ConicProgram p;
  const int x = p.add_variables(2);
  p.set_objective(x + 1, 3.0);
  p.add_block(Cone::SecondOrder, {var(x, 2.0).add_constant(1.0), var(x + 1, -1.0)}, "cone");
  std::ostringstream out;
  write_triplets(p, out);
  const std::string text = out.str();
  CHECK(text.find("c 1 3\n") != std::string::npos);
  CHECK(text.find("block 0 soc 2 cone\n") != std::string::npos);
  CHECK(text.find("0 0 0 2\n") != std::string::npos);
  CHECK(text.find("0 1 1 -1\n") != std::string::npos);
  CHECK(text.find("0 0 b 1\n") != std::string::npos);
  CHECK(p.count(Cone::SecondOrder) == 1);
  CHECK(p.count_soc(2) == 1);
}

TEST_CASE("feasible warm start keeps its objective bound") {
  // minimize -x - y  s.t.  ||(x, y)|| <= 1: optimum -sqrt(2).
  ConicProgram p;
  const int x = p.add_variables(2);
  p.set_objective(x, -1.0);
  p.set_objective(x + 1, -1.0);
  p.add_block(Cone::SecondOrder, {AffineExpr(1.0), var(x), var(x + 1)});
  SolverOptions opts;
  opts.warm_start = Eigen::Vector2d(0.1, -0.2);
  const auto s = solve(p, opts);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective_value == doctest::Approx(-std::numbers::sqrt2).epsilon(1e-6));
}
