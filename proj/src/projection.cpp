#include "ebmss/projection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "ebmss/data_pipeline.hpp"
#include "ebmss/linalg.hpp"
#include "ebmss/simulation.hpp"
#include "ebmss/ssm.hpp"

namespace ebmss {

void ScenarioPath::validate() const {
  if (years.empty()) throw input_error("scenario '" + name + "' is empty");
  if (static_cast<Index>(years.size()) != forcing.size())
    throw input_error("scenario '" + name + "': year and value counts differ");
  for (std::size_t t = 1; t < years.size(); ++t)
    if (years[t] != years[t - 1] + 1) throw input_error("scenario '" + name + "': years must be contiguous");
  if (!forcing.allFinite()) throw input_error("scenario '" + name + "': forcing must be finite");
}

ScenarioPath read_scenario_csv(const std::filesystem::path& path, const std::string& name) {
  const auto s = read_series_csv(path, name, SeriesKind::scenario_forcing);
  ScenarioPath p{name, s.years, s.values};
  p.validate();
  return p;
}

Eigen::VectorXd deterministic_forward(const PhysicalParams& physical, const Eigen::Vector2d& init,
                                      const Eigen::VectorXd& forcing) {
  physical.validate();
  if (forcing.size() == 0) throw input_error("deterministic_forward: empty forcing path");
  const double a = 1.0 - (physical.lambda + physical.gamma) / physical.c_m;
  const double b = physical.gamma / physical.c_m;
  const double c = physical.gamma / physical.c_d;
  const double d = 1.0 - physical.gamma / physical.c_d;
  double tm = init(0);
  double td = init(1);
  Eigen::VectorXd out(forcing.size());
  for (Index h = 0; h < forcing.size(); ++h) {
    const double next_tm = a * tm + b * td + forcing(h) / physical.c_m;
    const double next_td = c * tm + d * td;
    tm = next_tm;
    td = next_td;
    out(h) = tm;
  }
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw input_error("quantile: no values");
  if (!(p >= 0 && p <= 1)) throw input_error("quantile: level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

bool monotone_transition(const PhysicalParams& physical) {
  return physical.valid() && 1.0 - (physical.lambda + physical.gamma) / physical.c_m >= 0 &&
         1.0 - physical.gamma / physical.c_d >= 0;
}

EndState filtered_end_state(const EbmParamVector& params, const MeasurementConfig& config, const Dataset& data) {
  const auto sys = build_system(params, config, data.natural, data.panel.n_steps());
  const auto filt = kalman_filter(sys, data.panel);
  const auto& a = filt.filt_mean.back();
  return {Eigen::Vector2d(a(state::tm), a(state::td)), a(state::natural) + a(state::anthro)};
}

ProjectionResult project(const FitResult& fit, const Dataset& data, const std::vector<ScenarioPath>& scenarios,
                         const ProjectionOptions& options) {
  if (options.draws < 1) throw input_error("project: draws must be at least 1");
  if (options.workers < 1) throw input_error("project: workers must be at least 1");
  if (options.attempts_per_draw < 1) throw input_error("project: attempts_per_draw must be positive");
  if (scenarios.empty()) throw input_error("project: no scenarios given");
  for (double q : options.quantiles)
    if (!(q >= 0 && q <= 1)) throw input_error("project: quantile levels must lie in [0, 1]");
  for (const auto& s : scenarios) s.validate();
  check_layout(data.panel, fit.config);
  if (!fit.vcov_physical.allFinite()) throw input_error("project: fit has no physical covariance matrix");

  const Eigen::MatrixXd root = psd_factor<double>(Eigen::MatrixXd(fit.vcov_physical), "physical covariance");
  const Eigen::Vector4d centre = fit.theta_hat.physical.as_vector();

  const auto n_scen = scenarios.size();
  std::vector<Eigen::MatrixXd> paths(n_scen);
  for (std::size_t s = 0; s < n_scen; ++s) paths[s].resize(options.draws, scenarios[s].forcing.size());
  std::vector<int> rejected(static_cast<std::size_t>(options.draws), 0);

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < options.draws; i = next++) {
      try {
        std::mt19937_64 rng(replication_seed(options.seed, static_cast<std::uint64_t>(i)));
        std::normal_distribution<double> normal;
        EbmParamVector params = fit.theta_hat;
        EndState end{};
        bool ok = false;
        for (int attempt = 0; attempt < options.attempts_per_draw && !ok; ++attempt) {
          Eigen::Vector4d z;
          for (Index k = 0; k < 4; ++k) z(k) = normal(rng);
          params.physical = PhysicalParams::from_vector(centre + root * z);
          if (!monotone_transition(params.physical)) {
            ++rejected[static_cast<std::size_t>(i)];
            continue;
          }
          try {
            end = filtered_end_state(params, fit.config, data);
            ok = true;
          } catch (const numerical_error&) {
            ++rejected[static_cast<std::size_t>(i)];
          }
        }
        if (!ok) throw numerical_error("project: no valid parameter draw within the attempt limit");
        for (std::size_t s = 0; s < n_scen; ++s) {
          const auto& f = scenarios[s].forcing;
          Eigen::VectorXd seq(f.size());
          seq(0) = end.forcing;
          seq.tail(f.size() - 1) = f.head(f.size() - 1);
          paths[s].row(i) = deterministic_forward(params.physical, end.temps, seq).transpose();
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::min(options.workers, options.draws);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ProjectionResult res;
  res.draws = options.draws;
  res.seed = options.seed;
  for (int r : rejected) res.rejected += r;
  res.high_rejection = res.rejected > options.draws;  // rejected / attempts > 1/2
  if (res.high_rejection) res.status = "warning: more than half of the parameter draws were rejected";
  for (std::size_t s = 0; s < n_scen; ++s) {
    ProjectionFan fan;
    fan.scenario = scenarios[s].name;
    fan.years = scenarios[s].years;
    fan.levels = options.quantiles;
    const Index h = paths[s].cols();
    fan.quantiles.resize(h, static_cast<Index>(options.quantiles.size()));
    std::vector<double> col(static_cast<std::size_t>(options.draws));
    for (Index t = 0; t < h; ++t) {
      for (int i = 0; i < options.draws; ++i) col[static_cast<std::size_t>(i)] = paths[s](i, t);
      std::sort(col.begin(), col.end());
      for (std::size_t q = 0; q < options.quantiles.size(); ++q)
        fan.quantiles(t, static_cast<Index>(q)) = quantile(col, options.quantiles[q]);
    }
    if (options.keep_paths) fan.paths = std::move(paths[s]);
    res.fans.push_back(std::move(fan));
  }
  return res;
}

}  // namespace ebmss
