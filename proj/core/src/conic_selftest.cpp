#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "resprog/conic.hpp"
#include "resprog/conic_lift.hpp"

namespace resprog::conic {
namespace {

using Expr = AffineExpr;

SelfTestCase make_case(std::string name, Status status, double expected) {
  SelfTestCase tc;
  tc.name = std::move(name);
  tc.expected_status = status;
  tc.expected_value = expected;
  return tc;
}

SelfTestCase soc_norm_case() {
  // minimize x  s.t.  ||(1, 1)|| <= x
  ConicProgram p(1);
  p.set_objective(0, 1.0);
  p.add_block(Cone::SecondOrder, {Expr::variable(0), Expr(1.0), Expr(1.0)}, "norm");
  auto tc = make_case("soc_norm", Status::Optimal, std::sqrt(2.0));
  tc.solution = solve(p);
  tc.achieved_value = tc.solution.objective_value;
  return tc;
}

SelfTestCase exp_log_case() {
  // maximize t  s.t.  (t, 1, e) in K_exp, i.e. t <= ln e
  ConicProgram p(1);
  p.set_objective(0, -1.0);
  p.add_block(Cone::Exponential, {Expr::variable(0), Expr(1.0), Expr(std::numbers::e)}, "log");
  auto tc = make_case("exp_log", Status::Optimal, 1.0);
  tc.solution = solve(p);
  tc.achieved_value = tc.solution.x.size() ? tc.solution.x[0] : 0.0;
  return tc;
}

SelfTestCase infeasible_case() {
  // x >= 1 and -x >= 0
  ConicProgram p(1);
  p.add_block(Cone::NonNegative, {Expr::variable(0).add_constant(-1.0)}, "x>=1");
  p.add_block(Cone::NonNegative, {Expr::variable(0, -1.0)}, "x<=0");
  auto tc = make_case("infeasible_bounds", Status::Infeasible,
                      std::numeric_limits<double>::quiet_NaN());
  tc.solution = solve(p);
  tc.achieved_value = std::numeric_limits<double>::quiet_NaN();
  return tc;
}

SelfTestCase two_user_sinr_case() {
  // Minimum total transmit amplitude for two users with SINR >= 1 over unit noise and
  // orthogonal channels: interference-free optimum has total power 2.
  ConicProgram p;
  const int t = p.add_variables(1);
  const auto w = ComplexLayout::allocate(p, 4);  // w1 = (w[0], w[1]), w2 = (w[2], w[3])
  p.set_objective(t, 1.0);

  std::vector<Expr> power{Expr::variable(t)};
  for (int i = 0; i < 4; ++i) {
    power.push_back(Expr::variable(w.re(i)));
    power.push_back(Expr::variable(w.im(i)));
  }
  p.add_block(Cone::SecondOrder, power, "power");

  const Eigen::Vector2cd h1(1.0, 0.0), h2(0.0, 1.0);
  const Eigen::Vector2cd* channels[2] = {&h1, &h2};
  const double target = 1.0;
  for (int k = 0; k < 2; ++k) {
    const int other = 1 - k;
    const auto own = hermitian_inner(*channels[k], w, 2 * k);
    const auto cross = hermitian_inner(*channels[k], w, 2 * other);
    p.add_block(Cone::SecondOrder,
                {(1.0 / std::sqrt(target)) * own.re, Expr(1.0), cross.re, cross.im},
                "sinr" + std::to_string(k));
  }
  auto tc = make_case("two_user_sinr", Status::Optimal, std::sqrt(2.0));
  tc.solution = solve(p);
  tc.achieved_value = tc.solution.objective_value;
  return tc;
}

}  // namespace

std::vector<SelfTestCase> run_selftest(double accuracy) {
  using clock = std::chrono::steady_clock;
  std::vector<SelfTestCase> cases;
  for (auto* make : {&soc_norm_case, &exp_log_case, &infeasible_case, &two_user_sinr_case}) {
    const auto start = clock::now();
    SelfTestCase tc = make();
    tc.seconds = std::chrono::duration<double>(clock::now() - start).count();
    if (tc.expected_status != tc.solution.status) {
      tc.passed = false;
    } else if (std::isnan(tc.expected_value)) {
      tc.passed = true;
    } else {
      tc.passed = std::abs(tc.achieved_value - tc.expected_value) <= accuracy;
    }
    cases.push_back(std::move(tc));
  }
  return cases;
}

}  // namespace resprog::conic
