#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ebmss/ssm.hpp"
#include "oracles.hpp"

using namespace ebmss;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SystemMatrices<double> local_level(double q, double h, double p1, double a1 = 0.0) {
  SystemMatrices<double> m;
  m.transition = MatrixXd::Ones(1, 1);
  m.measurement = MatrixXd::Ones(1, 1);
  m.state_cov = MatrixXd::Constant(1, 1, q);
  m.obs_cov = MatrixXd::Constant(1, 1, h);
  m.init_mean = VectorXd::Constant(1, a1);
  m.init_cov = MatrixXd::Constant(1, 1, p1);
  return m;
}

ObservationPanel random_panel(Eigen::Index p, Eigen::Index n, std::mt19937_64& rng, double missing_rate) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  MatrixXd y(p, n);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = u(rng) < missing_rate ? std::nan("") : nd(rng);
  y(0, 0) = nd(rng);
  return ObservationPanel::unlabeled(y);
}

}  // namespace

TEST_CASE("scalar local level: single observation matches N(0; 0, 2)") {
  const auto model = local_level(1.0, 1.0, 1.0);
  const auto panel = ObservationPanel::unlabeled(MatrixXd::Zero(1, 1));
  const auto res = kalman_filter(model, panel);
  const double expected = -0.5 * (std::log(2.0 * std::numbers::pi) + std::log(2.0));
  CHECK(res.loglik == doctest::Approx(expected).epsilon(1e-14));
  CHECK(res.loglik == doctest::Approx(-1.26552).epsilon(1e-5));
  CHECK(log_likelihood(model, panel) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("entirely missing data is prediction only") {
  const auto model = local_level(1.0, 1.0, 1.0);
  const auto panel = ObservationPanel::unlabeled(MatrixXd::Constant(1, 2, std::nan("")));
  const auto res = kalman_filter(model, panel);
  CHECK(res.loglik == 0.0);
  CHECK(res.filt_mean[0](0) == 0.0);
  CHECK(res.filt_cov[0](0, 0) == 1.0);
  CHECK(res.pred_mean[1](0) == 0.0);
  CHECK(res.pred_cov[1](0, 0) == 2.0);
}

TEST_CASE("three-step bivariate model agrees with brute-force joint density") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    const auto model = oracle::random_model(2, 2, 3, rng, false);
    const auto panel = random_panel(2, 3, rng, 0.0);
    CHECK(kalman_filter(model, panel).loglik == doctest::Approx(oracle::joint_loglik(model, panel)).epsilon(1e-10));
  }
}

TEST_CASE("oracle equivalence on random models with missing cells and time-varying transition") {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> dim(1, 4), obs(1, 3), len(1, 8);
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::Index m = dim(rng), p = obs(rng), n = len(rng);
    const auto model = oracle::random_model(m, p, n, rng, rep % 2 == 0);
    const auto panel = random_panel(p, n, rng, rep % 3 == 0 ? 0.3 : 0.0);
    const double brute = oracle::joint_loglik(model, panel);
    const auto res = kalman_filter(model, panel);
    CHECK(std::abs(res.loglik - brute) < 1e-8);
    CHECK(res.loglik == doctest::Approx(res.loglik_terms.sum()).epsilon(1e-13));
    CHECK(log_likelihood(model, panel) == res.loglik);
  }
}

TEST_CASE("fully missing series equals deleting its row from Z and H") {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    auto model = oracle::random_model(3, 3, 6, rng, true);
    auto panel = random_panel(3, 6, rng, 0.0);
    panel.values.row(1).setConstant(std::nan(""));
    panel.observed.row(1).setConstant(false);

    auto reduced = model;
    const std::vector<Eigen::Index> keep{0, 2};
    reduced.measurement = model.measurement(keep, Eigen::all);
    reduced.obs_cov = model.obs_cov(keep, keep);
    const auto reduced_panel = panel.select_rows(keep);
    CHECK(kalman_filter(model, panel).loglik ==
          doctest::Approx(kalman_filter(reduced, reduced_panel).loglik).epsilon(1e-12));
  }
}

TEST_CASE("stored covariances are symmetric and PSD") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const auto model = oracle::random_model(4, 3, 8, rng, true);
    const auto panel = random_panel(3, 8, rng, 0.2);
    const auto res = kalman_filter(model, panel);
    const auto sm = kalman_smoother(model, res);
    for (Eigen::Index t = 0; t < res.n_steps(); ++t) {
      const auto s = static_cast<std::size_t>(t);
      for (const MatrixXd* c : {&res.pred_cov[s], &res.filt_cov[s], &sm.smooth_cov[s]}) {
        CHECK(max_asymmetry(*c) <= 1e-10);
        CHECK(min_eigenvalue(*c) >= -1e-8);
      }
      CHECK(max_asymmetry(res.innovation_cov[s]) <= 1e-10);
    }
  }
}

TEST_CASE("dimension mismatch and degenerate innovations are reported") {
  auto model = local_level(1.0, 1.0, 1.0);
  CHECK_THROWS_AS(kalman_filter(model, ObservationPanel::unlabeled(MatrixXd::Zero(2, 3))), input_error);

  const auto degenerate = local_level(0.0, 0.0, 0.0);
  CHECK_THROWS_AS(kalman_filter(degenerate, ObservationPanel::unlabeled(MatrixXd::Zero(1, 3))), numerical_error);

  model.state_cov(0, 0) = -1.0;
  CHECK_THROWS_AS(kalman_filter(model, ObservationPanel::unlabeled(MatrixXd::Zero(1, 3))), input_error);
}

TEST_CASE("smoother boundary equals filtered values exactly") {
  std::mt19937_64 rng(11);
  const auto model = oracle::random_model(3, 2, 6, rng, true);
  const auto panel = random_panel(2, 6, rng, 0.1);
  const auto res = kalman_filter(model, panel);
  const auto sm = kalman_smoother(model, res);
  CHECK(sm.smooth_mean.back() == res.filt_mean.back());
  CHECK(sm.smooth_cov.back() == res.filt_cov.back());
}

TEST_CASE("smoother matches Gaussian conditioning") {
  SUBCASE("scalar local level, T = 2") {
    const auto model = local_level(0.7, 1.3, 2.0, 0.4);
    MatrixXd y(1, 2);
    y << 1.1, -0.6;
    const auto panel = ObservationPanel::unlabeled(y);
    const auto sm = kalman_smoother(model, kalman_filter(model, panel));
    CHECK(std::abs(sm.smooth_mean[0](0) - oracle::conditional_state_mean(model, panel, 0)(0)) < 1e-10);
  }
  SUBCASE("random models, every time point") {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 20; ++rep) {
      const auto model = oracle::random_model(3, 2, 5, rng, true);
      const auto panel = random_panel(2, 5, rng, 0.2);
      const auto sm = kalman_smoother(model, kalman_filter(model, panel));
      for (Eigen::Index t = 0; t < 5; ++t)
        CHECK((sm.smooth_mean[static_cast<std::size_t>(t)] - oracle::conditional_state_mean(model, panel, t))
                  .cwiseAbs()
                  .maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("static state with no disturbance smooths to a constant") {
  SystemMatrices<double> model;
  model.transition = MatrixXd::Identity(2, 2);
  model.measurement = MatrixXd::Identity(2, 2);
  model.state_cov = MatrixXd::Zero(2, 2);
  model.obs_cov = MatrixXd::Identity(2, 2) * 0.5;
  model.init_mean = VectorXd::Zero(2);
  model.init_cov = MatrixXd::Identity(2, 2) * 10.0;
  std::mt19937_64 rng(3);
  const auto panel = random_panel(2, 7, rng, 0.0);
  const auto sm = kalman_smoother(model, kalman_filter(model, panel));
  for (const auto& s : sm.smooth_mean) CHECK((s - sm.smooth_mean.back()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("standardized innovations") {
  SUBCASE("scalar scaling") {
    FilterResult<double> f;
    f.n_series = 1;
    f.filt_mean = {VectorXd::Zero(1)};
    f.innovations = {VectorXd::Constant(1, 2.0)};
    f.innovation_cov = {MatrixXd::Constant(1, 1, 4.0)};
    f.observed_rows = {{0}};
    CHECK(standardized_innovations(f)(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("missing cells stay missing") {
    const auto model = local_level(1.0, 1.0, 1.0);
    MatrixXd y(1, 3);
    y << 0.3, std::nan(""), -0.2;
    const auto e = standardized_innovations(kalman_filter(model, ObservationPanel::unlabeled(y)));
    CHECK(std::isnan(e(0, 1)));
    CHECK(std::isfinite(e(0, 2)));
  }
  SUBCASE("calibrated on data from the true model") {
    std::mt19937_64 rng(17);
    auto model = oracle::random_model(2, 2, 2, rng, false);
    model.transition << 0.8, 0.1, 0.0, 0.5;
    const auto sim = simulate_ssm(model, 10000, std::uint64_t{4242});
    const auto e = standardized_innovations(kalman_filter(model, sim.panel));
    for (Eigen::Index i = 0; i < 2; ++i) {
      const double mean = e.row(i).mean();
      const double var = (e.row(i).array() - mean).square().sum() / static_cast<double>(e.cols() - 1);
      CHECK(std::abs(mean) < 0.05);
      CHECK(std::abs(var - 1.0) < 0.05);
    }
  }
}

TEST_CASE("simulate_ssm") {
  SUBCASE("noise-free simulation is the deterministic recursion") {
    std::mt19937_64 rng(21);
    auto model = oracle::random_model(3, 2, 10, rng, true);
    model.state_cov.setZero();
    model.obs_cov.setZero();
    model.init_cov.setZero();
    const auto sim = simulate_ssm(model, 10, std::uint64_t{1});
    VectorXd x = model.init_mean;
    for (Eigen::Index t = 0; t < 10; ++t) {
      CHECK(sim.states.col(t) == x);
      CHECK(sim.panel.values.col(t) == model.measurement * x);
      if (t + 1 < 10) x = model.transition_at(t) * x;
    }
  }
  SUBCASE("same seed, same path") {
    std::mt19937_64 rng(22);
    const auto model = oracle::random_model(3, 2, 50, rng, true);
    const auto a = simulate_ssm(model, 50, std::uint64_t{77});
    const auto b = simulate_ssm(model, 50, std::uint64_t{77});
    CHECK(a.states == b.states);
    CHECK(a.panel.values == b.panel.values);
  }
  SUBCASE("differenced local level has variance q + 2h") {
    const double q = 0.3, h = 0.5;
    const auto sim = simulate_ssm(local_level(q, h, 0.0), 1000000, std::uint64_t{2024});
    const Eigen::RowVectorXd y = sim.panel.values.row(0);
    const Eigen::ArrayXd dy = (y.tail(y.size() - 1) - y.head(y.size() - 1)).transpose().array();
    const double var = (dy - dy.mean()).square().sum() / static_cast<double>(dy.size() - 1);
    CHECK(std::abs(var / (q + 2 * h) - 1.0) < 0.01);
  }
  SUBCASE("non-PSD covariance is rejected") {
    auto model = local_level(1.0, 1.0, 1.0);
    model.obs_cov(0, 0) = -0.5;
    CHECK_THROWS(simulate_ssm(model, 5, std::uint64_t{1}));
  }
}
