#include "ebmss/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "ebmss/errors.hpp"

namespace ebmss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimizes g = -f from a single start.
struct Simplex {
  const Objective& f;
  int max_evals;
  double ftol;
  double spread_tol;
  int evals = 0;
  int iterations = 0;

  double g(const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? -v : kInf;
  }

  bool run(Eigen::VectorXd& best_x, double& best_g, double step) {
    const auto n = best_x.size();
    const double dn = static_cast<double>(n);
    // Gao & Han adaptive coefficients.
    const double alpha = 1.0;
    const double beta = 1.0 + 2.0 / dn;
    const double gam = 0.75 - 0.5 / dn;
    const double delta = 1.0 - 1.0 / dn;

    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), best_x);
    std::vector<double> vals(static_cast<std::size_t>(n + 1));
    vals[0] = best_g;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& p = pts[static_cast<std::size_t>(i + 1)];
      p(i) += step;
      vals[static_cast<std::size_t>(i + 1)] = g(p);
    }
    std::vector<std::size_t> order(pts.size());

    bool converged = false;
    // Best value at the start of the current cycle of n + 1 iterations.
    double cycle_best = kInf;
    int cycle_iter = 0;
    while (evals < max_evals) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
      const auto lo = order.front();
      const auto hi = order.back();
      const auto second = order[order.size() - 2];
      if (std::isfinite(vals[hi]) && vals[hi] - vals[lo] <= ftol) {
        converged = true;
        break;
      }
      if (cycle_iter == 0) {
        if (std::isfinite(cycle_best) && cycle_best - vals[lo] < ftol && vals[hi] - vals[lo] <= spread_tol) {
          converged = true;
          break;
        }
        cycle_best = vals[lo];
      }
      cycle_iter = (cycle_iter + 1) % static_cast<int>(n + 1);
      ++iterations;

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (auto k : order)
        if (k != hi) centroid += pts[k];
      centroid /= dn;

      const Eigen::VectorXd xr = centroid + alpha * (centroid - pts[hi]);
      const double fr = g(xr);
      if (fr < vals[lo]) {
        const Eigen::VectorXd xe = centroid + beta * (xr - centroid);
        const double fe = g(xe);
        if (fe < fr) {
          pts[hi] = xe;
          vals[hi] = fe;
        } else {
          pts[hi] = xr;
          vals[hi] = fr;
        }
        continue;
      }
      if (fr < vals[second]) {
        pts[hi] = xr;
        vals[hi] = fr;
        continue;
      }
      if (fr < vals[hi]) {
        const Eigen::VectorXd xc = centroid + gam * (xr - centroid);
        const double fc = g(xc);
        if (fc <= fr) {
          pts[hi] = xc;
          vals[hi] = fc;
          continue;
        }
      } else {
        const Eigen::VectorXd xc = centroid - gam * (centroid - pts[hi]);
        const double fc = g(xc);
        if (fc < vals[hi]) {
          pts[hi] = xc;
          vals[hi] = fc;
          continue;
        }
      }
      for (auto k : order) {
        if (k == lo) continue;
        pts[k] = pts[lo] + delta * (pts[k] - pts[lo]);
        vals[k] = g(pts[k]);
      }
    }
    const auto it = std::min_element(vals.begin(), vals.end());
    const auto idx = static_cast<std::size_t>(it - vals.begin());
    if (*it < best_g) {
      best_g = *it;
      best_x = pts[idx];
    }
    return converged;
  }
};

}  // namespace

NelderMeadResult nelder_mead_maximize(const Objective& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opt) {
  if (x0.size() == 0) throw input_error("nelder_mead: empty start vector");
  if (opt.max_evals < 1 || opt.restarts < 0) throw input_error("nelder_mead: invalid options");

  NelderMeadResult res;
  Eigen::VectorXd best_x = x0;
  Simplex first{f, opt.max_evals, opt.ftol, opt.spread_tol};
  double best_g = first.g(x0);
  if (!std::isfinite(best_g)) throw numerical_error("nelder_mead: objective is not finite at the start point");
  res.converged = first.run(best_x, best_g, opt.initial_step);
  res.evaluations = first.evals;
  res.iterations = first.iterations;
  res.starts = 1;

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> jitter(0.0, opt.restart_jitter);
  for (int r = 0; r < opt.restarts; ++r) {
    Eigen::VectorXd start = best_x;
    for (Eigen::Index i = 0; i < start.size(); ++i) start(i) += jitter(rng);
    Simplex s{f, opt.max_evals, opt.ftol, opt.spread_tol};
    double g0 = s.g(start);
    if (!std::isfinite(g0)) {
      start = best_x;
      g0 = best_g;
    }
    Eigen::VectorXd x = start;
    double gx = g0;
    res.converged = s.run(x, gx, opt.initial_step);
    res.evaluations += s.evals;
    res.iterations += s.iterations;
    ++res.starts;
    if (gx < best_g) {
      best_g = gx;
      best_x = x;
    }
  }
  res.x = best_x;
  res.value = -best_g;
  return res;
}

HessianResult numerical_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step) {
  if (!(rel_step > 0)) throw input_error("numerical_hessian: step must be positive");
  const auto n = x.size();
  const double f0 = f(x);
  if (!std::isfinite(f0)) throw numerical_error("numerical_hessian: objective is not finite at the centre");

  auto attempt = [&](double rel, Eigen::MatrixXd& h) {
    Eigen::VectorXd step(n);
    for (Eigen::Index i = 0; i < n; ++i) step(i) = rel * (1.0 + std::abs(x(i)));
    auto eval = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
      Eigen::VectorXd p = x;
      p(i) += si * step(i);
      if (j >= 0) p(j) += sj * step(j);
      return f(p);
    };
    h.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double fp = eval(i, 1, -1, 0);
      const double fm = eval(i, -1, -1, 0);
      if (!std::isfinite(fp) || !std::isfinite(fm)) return false;
      h(i, i) = (fp - 2.0 * f0 + fm) / (step(i) * step(i));
      for (Eigen::Index j = 0; j < i; ++j) {
        const double fpp = eval(i, 1, j, 1);
        const double fpm = eval(i, 1, j, -1);
        const double fmp = eval(i, -1, j, 1);
        const double fmm = eval(i, -1, j, -1);
        if (!std::isfinite(fpp) || !std::isfinite(fpm) || !std::isfinite(fmp) || !std::isfinite(fmm)) return false;
        h(i, j) = h(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * step(i) * step(j));
      }
    }
    return true;
  };

  HessianResult res;
  res.rel_step = rel_step;
  if (!attempt(rel_step, res.hessian)) {
    res.rel_step = 0.5 * rel_step;
    res.step_shrunk = true;
    if (!attempt(res.rel_step, res.hessian))
      throw numerical_error("numerical_hessian: objective failed at a stencil point after shrinking the step");
  }
  res.hessian = 0.5 * (res.hessian + res.hessian.transpose()).eval();
  return res;
}

}  // namespace ebmss
