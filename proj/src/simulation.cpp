#include "ebmss/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "ebmss/ssm.hpp"

namespace ebmss {

EbmParamVector reference_dgp() {
  EbmParamVector p;
  p.physical = {1.0828, 1.3027, 9.6376, 98.4886};
  auto& n = p.noise;
  n.var_eta_tm = 0.0122;
  n.var_eta_td = 3.66e-5;
  n.var_eta_a = 4.73e-5;
  n.var_eta_beta = 9.72e-6;
  n.var_eps_gmst = {0.0010, 0.00090, 0.00241, 0.0118, 0.00282, 0.00659, 0.00074, 0.00026};
  n.var_eps_td = {0.00014, 0.00015};
  n.var_eps_ohc = {1.5311, 1.2805};
  n.var_eps_f = 1.61e-11;
  n.rho = {0.9092, 0.9943};
  n.mu_td = {-0.2738, -0.2802};
  return p;
}

MeasurementConfig reference_config() {
  MeasurementConfig c;
  c.n_gmst = 8;
  c.n_ocean_pairs = 2;
  return c;
}

MeasurementConfig base_config(const MeasurementConfig& config) {
  if (config.n_ocean_pairs < 1) throw input_error("base configuration needs at least one ocean pair");
  MeasurementConfig c = config;
  c.n_gmst = 1;
  c.n_ocean_pairs = 1;
  return c;
}

EbmParamVector restrict_to_base(const EbmParamVector& params, const MeasurementConfig& config) {
  params.validate(config);
  base_config(config);
  EbmParamVector b = params;
  auto first = [](const std::vector<double>& v) { return std::vector<double>{v.front()}; };
  b.noise.var_eps_gmst = first(params.noise.var_eps_gmst);
  b.noise.var_eps_td = first(params.noise.var_eps_td);
  b.noise.var_eps_ohc = first(params.noise.var_eps_ohc);
  b.noise.rho = first(params.noise.rho);
  b.noise.mu_td = first(params.noise.mu_td);
  return b;
}

void SimulationSetup::validate() const {
  const auto n = static_cast<Index>(years.size());
  if (n < 2) throw input_error("simulation setup: at least two years are required");
  for (std::size_t t = 1; t < years.size(); ++t)
    if (years[t] != years[t - 1] + 1) throw input_error("simulation setup: years must be contiguous");
  if (natural.size() != n || !natural.allFinite())
    throw input_error("simulation setup: natural forcing must be finite and cover every year");
  if (reference_anthro.size() != n || !reference_anthro.allFinite())
    throw input_error("simulation setup: reference anthropogenic forcing must be finite and cover every year");
  if (!init_state.allFinite()) throw input_error("simulation setup: initial state is not finite");
}

SimulationSetup make_setup(std::vector<int> years, Eigen::VectorXd natural, Eigen::VectorXd reference_anthro) {
  SimulationSetup s;
  s.years = std::move(years);
  s.natural = std::move(natural);
  s.reference_anthro = std::move(reference_anthro);
  const auto n = s.reference_anthro.size();
  const double slope = n > 1 ? (s.reference_anthro(n - 1) - s.reference_anthro(0)) / static_cast<double>(n - 1) : 0.0;
  s.init_state << 0.3, 0.1, n > 0 ? s.reference_anthro(0) : 0.0, slope;
  s.validate();
  return s;
}

bool accept_trajectory(double sim_mid, double sim_end, double ref_mid, double ref_end, double threshold) {
  return sim_mid >= threshold * ref_mid && sim_end >= threshold * ref_end;
}

Index mid_index(Index steps) {
  if (steps < 2) throw input_error("mid_index: need at least two steps");
  return steps / 2 - 1;
}

std::vector<SeriesMeta> simulated_series(const MeasurementConfig& config) {
  std::vector<SeriesMeta> s;
  for (int k = 1; k <= config.n_gmst; ++k) s.push_back({"gmst_" + std::to_string(k), SeriesKind::gmst, {}, "simulated"});
  for (int j = 1; j <= config.n_ocean_pairs; ++j)
    s.push_back({"ocean_temp_" + std::to_string(j), SeriesKind::ocean_temp, "pair_" + std::to_string(j), "simulated"});
  for (int j = 1; j <= config.n_ocean_pairs; ++j)
    s.push_back({"ohc_" + std::to_string(j), SeriesKind::ohc, "pair_" + std::to_string(j), "simulated"});
  s.push_back({"forcing_total", SeriesKind::forcing_total, {}, "simulated"});
  return s;
}

SimulatedDataset simulate_dgp(const EbmParamVector& params, const MeasurementConfig& config,
                              const SimulationSetup& setup, std::mt19937_64& rng, const RejectionRule& rule) {
  setup.validate();
  if (rule.attempt_cap < 1) throw input_error("rejection rule: attempt cap must be positive");
  const Index steps = static_cast<Index>(setup.years.size());
  StateInit init;
  init.kind = InitKind::known;
  init.known_mean = setup.init_state;
  const auto sys = build_system(params, config, setup.natural, steps, init);

  const Index mid = mid_index(steps);
  const Index end = steps - 1;
  const Index f_row = config.obs_dim() - 1;
  SimulatedDataset out;
  for (int attempt = 1; attempt <= rule.attempt_cap; ++attempt) {
    auto path = simulate_ssm(sys, steps, rng, setup.years.front());
    const double sim_mid = path.panel.values(f_row, mid) - setup.natural(mid);
    const double sim_end = path.panel.values(f_row, end) - setup.natural(end);
    if (rule.enabled && !accept_trajectory(sim_mid, sim_end, setup.reference_anthro(mid),
                                           setup.reference_anthro(end), rule.threshold))
      continue;
    path.panel.series = simulated_series(config);
    out.data.panel = std::move(path.panel);
    out.data.natural = setup.natural;
    out.states = std::move(path.states);
    out.attempts = attempt;
    return out;
  }
  throw numerical_error("simulate_dgp: no trajectory accepted within " + std::to_string(rule.attempt_cap) +
                        " attempts");
}

SimulatedDataset simulate_dgp(const EbmParamVector& params, const MeasurementConfig& config,
                              const SimulationSetup& setup, std::uint64_t seed, const RejectionRule& rule) {
  std::mt19937_64 rng(seed);
  return simulate_dgp(params, config, setup, rng, rule);
}

ObservationPanel extract_base_panel(const ObservationPanel& full) {
  full.validate();
  const auto gmst = full.rows_of_kind(SeriesKind::gmst);
  const auto temps = full.rows_of_kind(SeriesKind::ocean_temp);
  const auto forcing = full.rows_of_kind(SeriesKind::forcing_total);
  if (gmst.empty() || temps.empty() || forcing.size() != 1)
    throw input_error("extract_base_panel: panel needs a GMST, an ocean pair and one total forcing row");
  const auto& pair = full.series[static_cast<std::size_t>(temps.front())].pair_id;
  Index ohc = -1;
  for (auto r : full.rows_of_kind(SeriesKind::ohc))
    if (full.series[static_cast<std::size_t>(r)].pair_id == pair) ohc = r;
  const Index rows[] = {gmst.front(), temps.front(), ohc, forcing.front()};
  return full.select_rows(rows);
}

std::vector<ParameterStats> summarize(const std::vector<std::string>& names, const Eigen::VectorXd& dgp,
                                      const Eigen::MatrixXd& estimates, const std::vector<bool>& ok) {
  if (static_cast<Index>(names.size()) != dgp.size() || estimates.cols() != dgp.size() ||
      static_cast<Index>(ok.size()) != estimates.rows())
    throw input_error("summarize: dimension mismatch");
  std::vector<ParameterStats> out;
  for (Index c = 0; c < dgp.size(); ++c) {
    ParameterStats s;
    s.name = names[static_cast<std::size_t>(c)];
    s.dgp_value = dgp(c);
    double sum = 0;
    for (Index r = 0; r < estimates.rows(); ++r)
      if (ok[static_cast<std::size_t>(r)]) {
        sum += estimates(r, c);
        ++s.n;
      }
    if (s.n == 0) {
      s.bias = s.sd = s.rmse = s.mae = std::nan("");
      out.push_back(s);
      continue;
    }
    const double mean = sum / s.n;
    double var = 0, sq = 0, abs = 0;
    for (Index r = 0; r < estimates.rows(); ++r) {
      if (!ok[static_cast<std::size_t>(r)]) continue;
      const double e = estimates(r, c) - dgp(c);
      var += (estimates(r, c) - mean) * (estimates(r, c) - mean);
      sq += e * e;
      abs += std::abs(e);
    }
    s.bias = mean - dgp(c);
    s.sd = std::sqrt(var / s.n);
    s.rmse = std::sqrt(sq / s.n);
    s.mae = abs / s.n;
    out.push_back(s);
  }
  return out;
}

std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

namespace {

ConfigRecovery make_recovery(const EbmParamVector& dgp, const MeasurementConfig& config, int reps) {
  ConfigRecovery r;
  r.config = config;
  r.names = parameter_names(config);
  r.names.emplace_back("ecs");
  const auto v = dgp.values();
  r.dgp.resize(v.size() + 1);
  r.dgp << v, ecs(dgp.physical.lambda, config.f2x);
  r.estimates = Eigen::MatrixXd::Constant(reps, r.dgp.size(), std::nan(""));
  r.ok.assign(static_cast<std::size_t>(reps), false);
  r.lambda_cv = Eigen::VectorXd::Constant(reps, std::nan(""));
  return r;
}

// Returns success; `ok` is filled in after the workers join (vector<bool> is not thread safe).
bool record_fit(ConfigRecovery& r, int rep, const Dataset& data, const FitOptions& options) {
  try {
    const auto init = default_init(data, r.config);
    const auto fit = fit_mle(data, r.config, init, options);
    const auto v = fit.theta_hat.values();
    r.estimates.row(rep).head(v.size()) = v.transpose();
    r.estimates(rep, v.size()) = fit.config.f2x / fit.theta_hat.physical.lambda;
    r.lambda_cv(rep) = fit.cv(0);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

SimulationReport monte_carlo(const EbmParamVector& dgp, const MeasurementConfig& config,
                             const SimulationSetup& setup, const MonteCarloOptions& options) {
  if (options.reps < 1) throw input_error("monte_carlo: reps must be at least 1");
  if (options.workers < 1) throw input_error("monte_carlo: workers must be at least 1");
  dgp.validate(config);
  setup.validate();

  SimulationReport report;
  report.reps = options.reps;
  report.seed = options.seed;
  report.has_base = options.include_base;
  report.full = make_recovery(dgp, config, options.reps);
  if (options.include_base) report.base = make_recovery(restrict_to_base(dgp, config), base_config(config), options.reps);

  std::vector<int> attempts(static_cast<std::size_t>(options.reps), 0);
  std::vector<char> ok_full(static_cast<std::size_t>(options.reps), 0), ok_base(ok_full);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (int rep = next++; rep < options.reps; rep = next++) {
      try {
        const auto sim = simulate_dgp(dgp, config, setup, replication_seed(options.seed, static_cast<std::uint64_t>(rep)),
                                      options.rejection);
        const auto i = static_cast<std::size_t>(rep);
        attempts[i] = sim.attempts;
        ok_full[i] = record_fit(report.full, rep, sim.data, options.fit);
        if (options.include_base) {
          const Dataset base{extract_base_panel(sim.data.panel), sim.data.natural};
          ok_base[i] = record_fit(report.base, rep, base, options.fit);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::min(options.workers, options.reps);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (int a : attempts) report.attempts += a;
  report.full.ok.assign(ok_full.begin(), ok_full.end());
  if (options.include_base) report.base.ok.assign(ok_base.begin(), ok_base.end());
  report.retained = options.reps;
  for (auto* r : {&report.full, &report.base}) {
    if (r == &report.base && !options.include_base) continue;
    r->failures = static_cast<int>(std::count(r->ok.begin(), r->ok.end(), false));
    r->stats = summarize(r->names, r->dgp, r->estimates, r->ok);
  }
  return report;
}

}  // namespace ebmss
