#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ebmss/errors.hpp"
#include "ebmss/projection.hpp"
#include "ebmss/simulation.hpp"
#include "fixtures.hpp"

using namespace ebmss;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const PhysicalParams kRef{1.0828, 1.3027, 9.6376, 98.4886};

struct Case {
  FitResult fit;
  Dataset data;
};

// A fit-shaped object at the base-configuration reference parameters.
Case base_case(const Eigen::Matrix4d& vcov) {
  const auto full = reference_config();
  Case c;
  c.fit.config = base_config(full);
  c.fit.theta_hat = restrict_to_base(reference_dgp(), full);
  c.fit.vcov_physical = vcov;
  c.data = simulate_dgp(c.fit.theta_hat, c.fit.config, fixtures::reference_setup(), 31).data;
  return c;
}

std::vector<ScenarioPath> scenarios(std::initializer_list<const char*> names) {
  std::vector<ScenarioPath> out;
  for (const char* n : names) out.push_back(read_scenario_csv(fixtures::data_dir() / "scenarios" / (std::string(n) + ".csv"), n));
  return out;
}

}  // namespace

TEST_CASE("type-7 quantiles") {
  CHECK(quantile({4, 1, 3, 2}, 0.25) == 1.75);
  CHECK(quantile({4, 1, 3, 2}, 0.5) == 2.5);
  CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
  CHECK(quantile({7}, 0.3) == 7.0);
  CHECK_THROWS_AS(quantile({}, 0.5), input_error);
  CHECK_THROWS_AS(quantile({1, 2}, 1.5), input_error);
}

TEST_CASE("deterministic recursion") {
  const VectorXd zero = deterministic_forward(kRef, Eigen::Vector2d::Zero(), VectorXd::Zero(50));
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

  const VectorXd f = VectorXd::LinSpaced(40, 0.5, 3.0);
  const Eigen::Vector2d x0(0.4, 0.1);
  const VectorXd one = deterministic_forward(kRef, x0, f);
  const VectorXd two = deterministic_forward(kRef, 2.0 * x0, 2.0 * f);
  CHECK(two == 2.0 * one);

  // first step by hand
  const double t1 = (1 - (kRef.lambda + kRef.gamma) / kRef.c_m) * 0.4 + kRef.gamma / kRef.c_m * 0.1 + 0.5 / kRef.c_m;
  CHECK(one(0) == doctest::Approx(t1).epsilon(1e-15));

  const VectorXd steady = deterministic_forward(kRef, Eigen::Vector2d::Zero(), VectorXd::Constant(6000, 3.93));
  CHECK(std::abs(steady(steady.size() - 1) - 3.93 / kRef.lambda) < 1e-6);
  CHECK(std::abs(3.93 / kRef.lambda - 3.6294) < 1e-4);
  // the equilibrium is a fixed point
  const double eq = 3.93 / kRef.lambda;
  const VectorXd at_eq = deterministic_forward(kRef, Eigen::Vector2d(eq, eq), VectorXd::Constant(10, 3.93));
  CHECK((at_eq.array() - eq).abs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(deterministic_forward(kRef, x0, VectorXd()), input_error);
  CHECK_THROWS_AS(deterministic_forward(PhysicalParams{1, 1, 100, 10}, x0, f), input_error);
}

TEST_CASE("monotone transitions") {
  CHECK(monotone_transition(kRef));
  CHECK_FALSE(monotone_transition(PhysicalParams{9, 3, 10, 100}));  // 1 - 12/10 < 0
  CHECK_FALSE(monotone_transition(PhysicalParams{-1, 1, 10, 100}));
}

TEST_CASE("scenario files") {
  const auto s = scenarios({"rcp26"});
  CHECK(s[0].years.front() == 2021);
  CHECK(s[0].years.back() == 2100);
  ScenarioPath bad{"gap", {2021, 2023}, VectorXd::Ones(2)};
  CHECK_THROWS_AS(bad.validate(), input_error);
  ScenarioPath nan{"nan", {2021, 2022}, VectorXd::Constant(2, std::nan(""))};
  CHECK_THROWS_AS(nan.validate(), input_error);
}

TEST_CASE("degenerate parameter distribution gives a single path") {
  const auto c = base_case(Eigen::Matrix4d::Zero());
  ProjectionOptions opt;
  opt.draws = 50;
  opt.seed = 3;
  const auto sc = scenarios({"rcp45"});
  const auto r = project(c.fit, c.data, sc, opt);
  REQUIRE(r.fans.size() == 1);
  const auto& q = r.fans[0].quantiles;
  CHECK(q.rows() == 80);
  CHECK((q.col(0) - q.col(2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.col(1) - q.col(2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.rejected == 0);
  // equals the recursion from the filtered end state
  const auto end = filtered_end_state(c.fit.theta_hat, c.fit.config, c.data);
  VectorXd seq(80);
  seq(0) = end.forcing;
  seq.tail(79) = sc[0].forcing.head(79);
  const VectorXd det = deterministic_forward(c.fit.theta_hat.physical, end.temps, seq);
  CHECK((q.col(1) - det).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fans are ordered, reproducible and independent of the worker count") {
  Eigen::Matrix4d v = Eigen::Vector4d(0.04, 0.02, 0.5, 1.0).asDiagonal();
  const auto c = base_case(v);
  ProjectionOptions opt;
  opt.draws = 400;
  opt.seed = 9;
  const auto sc = scenarios({"rcp26", "rcp85"});
  const auto a = project(c.fit, c.data, sc, opt);
  opt.workers = 3;
  const auto b = project(c.fit, c.data, sc, opt);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(a.fans[s].quantiles == b.fans[s].quantiles);
    const auto& q = a.fans[s].quantiles;
    CHECK((q.col(0).array() <= q.col(1).array()).all());
    CHECK((q.col(1).array() <= q.col(2).array()).all());
  }
  CHECK(a.rejected == b.rejected);
  opt.seed = 10;
  const auto d = project(c.fit, c.data, sc, opt);
  CHECK(d.fans[0].quantiles != a.fans[0].quantiles);
}

TEST_CASE("ordered forcing paths give ordered projections draw by draw") {
  Eigen::Matrix4d v = Eigen::Vector4d(0.06, 0.05, 1.0, 4.0).asDiagonal();
  const auto c = base_case(v);
  ProjectionOptions opt;
  opt.draws = 300;
  opt.seed = 5;
  opt.keep_paths = true;
  const auto sc = scenarios({"rcp26", "rcp45", "rcp60", "rcp85"});
  const auto r = project(c.fit, c.data, sc, opt);
  for (std::size_t s = 1; s < sc.size(); ++s) {
    CHECK((sc[s].forcing.array() >= sc[s - 1].forcing.array()).all());
    CHECK((r.fans[s].paths.array() >= r.fans[s - 1].paths.array()).all());
    CHECK((r.fans[s].quantiles.array() >= r.fans[s - 1].quantiles.array()).all());
  }
}

TEST_CASE("median with uncertainty in lambda only tracks the point projection") {
  Eigen::Matrix4d v = Eigen::Matrix4d::Zero();
  v(0, 0) = 0.25 * 0.25;
  const auto c = base_case(v);
  ProjectionOptions opt;
  opt.draws = 10000;
  opt.seed = 12;
  opt.quantiles = {0.25, 0.5, 0.75};
  const auto sc = scenarios({"rcp45"});
  const auto r = project(c.fit, c.data, sc, opt);
  const auto& q = r.fans[0].quantiles;
  const Index h = q.rows() - 1;
  const auto end = filtered_end_state(c.fit.theta_hat, c.fit.config, c.data);
  VectorXd seq(q.rows());
  seq(0) = end.forcing;
  seq.tail(q.rows() - 1) = sc[0].forcing.head(q.rows() - 1);
  const double point = deterministic_forward(c.fit.theta_hat.physical, end.temps, seq)(h);
  const double iqr = q(h, 2) - q(h, 0);
  CHECK(std::abs(q(h, 1) - point) <= 3.0 * iqr / std::sqrt(10000.0));
}

TEST_CASE("invalid draws are resampled and a high rejection rate is flagged") {
  Eigen::Matrix4d v = Eigen::Matrix4d::Zero();
  v(0, 0) = 100.0;
  const auto c = base_case(v);
  ProjectionOptions opt;
  opt.draws = 200;
  opt.seed = 2;
  const auto r = project(c.fit, c.data, scenarios({"rcp45"}), opt);
  CHECK(r.draws == 200);
  CHECK(r.rejected > 200);
  CHECK(r.high_rejection);
  CHECK(r.status.find("warning") != std::string::npos);
}

TEST_CASE("projection input errors") {
  const auto c = base_case(Eigen::Matrix4d::Zero());
  ProjectionOptions opt;
  opt.draws = 10;
  CHECK_THROWS_AS(project(c.fit, c.data, {}, opt), input_error);
  opt.quantiles = {0.5, 1.2};
  CHECK_THROWS_AS(project(c.fit, c.data, scenarios({"rcp45"}), opt), input_error);
  opt.quantiles = {0.5};
  opt.draws = 0;
  CHECK_THROWS_AS(project(c.fit, c.data, scenarios({"rcp45"}), opt), input_error);
  auto bad = c;
  bad.fit.vcov_physical(0, 0) = std::nan("");
  opt.draws = 10;
  CHECK_THROWS_AS(project(bad.fit, bad.data, scenarios({"rcp45"}), opt), input_error);
  bad = c;
  bad.fit.vcov_physical(0, 1) = 1.0;
  bad.fit.vcov_physical(1, 0) = 1.0;  // indefinite
  CHECK_THROWS(project(bad.fit, bad.data, scenarios({"rcp45"}), opt));
}
