#include "ebmss/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ebmss/data_pipeline.hpp"
#include "ebmss/errors.hpp"
#include "ebmss/estimation.hpp"
#include "ebmss/projection.hpp"
#include "ebmss/report_io.hpp"
#include "ebmss/simulation.hpp"
#include "ebmss/ssm.hpp"
#include "ebmss/stats_tests.hpp"

namespace ebmss {

namespace fs = std::filesystem;

namespace {

std::pair<int, int> parse_years(const std::string& text) {
  const auto colon = text.find(':');
  auto to_int = [&](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
      throw input_error("--years must look like FIRST:LAST, got '" + text + "'");
    return v;
  };
  if (colon == std::string::npos) throw input_error("--years must look like FIRST:LAST, got '" + text + "'");
  const std::string_view sv(text);
  const int a = to_int(sv.substr(0, colon));
  const int b = to_int(sv.substr(colon + 1));
  if (b < a) throw input_error("--years: last year precedes first year");
  return {a, b};
}

std::string file_stem_for(const std::string& label) {
  std::string s = label;
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return s;
}

AssembledData assemble(const std::string& manifest_path, const std::string& years) {
  const auto manifest = load_manifest(manifest_path);
  return years.empty() ? assemble_panel(manifest) : assemble_panel(manifest, parse_years(years));
}

int default_workers() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

// Forcing inputs for simulate/generate, aligned on the requested (or common) years.
SimulationSetup forcing_setup(const std::string& natural_path, const std::string& anthro_path,
                              const std::string& years) {
  const auto nat = read_series_csv(natural_path, "natural", SeriesKind::forcing_natural);
  const auto ant = read_series_csv(anthro_path, "anthropogenic", SeriesKind::forcing_anthropogenic);
  std::pair<int, int> span;
  if (years.empty()) {
    span = {std::max(nat.years.front(), ant.years.front()), std::min(nat.years.back(), ant.years.back())};
    if (span.second < span.first) throw input_error("forcing files share no years");
  } else {
    span = parse_years(years);
  }
  const auto n = span.second - span.first + 1;
  std::vector<int> yrs(static_cast<std::size_t>(n));
  Eigen::VectorXd nv(n), av(n);
  for (int i = 0; i < n; ++i) {
    const int y = span.first + i;
    yrs[static_cast<std::size_t>(i)] = y;
    nv(i) = nat.at(y);
    av(i) = ant.at(y);
    if (!std::isfinite(nv(i)) || !std::isfinite(av(i)))
      throw input_error("forcing files do not cover year " + std::to_string(y));
  }
  return make_setup(std::move(yrs), std::move(nv), std::move(av));
}

struct FitArgs {
  std::string manifest, years, out;
  int restarts = 5;
  int max_evals = 20000;
  std::uint64_t seed = 1;
  int skip_steps = 2;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const auto assembled = assemble(a.manifest, a.years);
  const auto& data = assembled.dataset;
  const auto config = config_for(data.panel);
  FitOptions opts;
  opts.optimizer.restarts = a.restarts;
  opts.optimizer.max_evals = a.max_evals;
  opts.optimizer.seed = a.seed;
  const auto fit = fit_mle(data, config, default_init(data, config), opts);

  const auto sys = build_system(fit.theta_hat, config, data.natural, data.panel.n_steps());
  const auto z = standardized_innovations(kalman_filter(sys, data.panel), a.skip_steps);
  std::vector<std::string> labels;
  std::vector<ResidualSummary> diag;
  for (Index i = 0; i < z.rows(); ++i) {
    std::vector<double> v;
    for (Index t = 0; t < z.cols(); ++t)
      if (std::isfinite(z(i, t))) v.push_back(z(i, t));
    labels.push_back(data.panel.series[static_cast<std::size_t>(i)].label);
    ResidualSummary s;
    s.mean = s.sd = s.skewness = s.kurtosis = s.jb = s.q1 = std::nan("");
    s.n = static_cast<int>(v.size());
    if (v.size() >= 8) s = residual_summary(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Index>(v.size())));
    diag.push_back(s);
  }

  FitContext ctx;
  for (const auto& m : data.panel.series) ctx.series.push_back(m.label);
  ctx.first_year = data.panel.years.front();
  ctx.last_year = data.panel.years.back();

  OutputBatch batch(a.out);
  batch.add("fit_report.json", fit_report_json(fit, ctx));
  batch.add("diagnostics.csv", diagnostics_csv(labels, diag));
  batch.commit();

  out << "loglik " << format_number(fit.loglik) << "\n";
  for (const auto& row : coefficient_of_variation(fit))
    out << row.name << " " << format_number(row.estimate) << " se " << format_number(row.se) << " cv "
        << format_number(row.cv) << "\n";
  out << "status " << fit.convergence.status << "\n";
  return kExitOk;
}

int cmd_sync(const std::string& manifest, const std::string& years, const std::string& out_dir, std::ostream& out) {
  const auto assembled = assemble(manifest, years);
  OutputBatch batch(out_dir);
  for (const auto& s : assembled.synchronized)
    batch.add(fs::path("synchronized") / (file_stem_for(s.label) + ".csv"), series_to_csv(s));
  const auto report = sync_report_csv(assembled.sync_report);
  batch.add("sync_report.csv", report);
  batch.commit();
  out << report;
  return kExitOk;
}

struct SimArgs {
  std::string natural, anthropogenic, years, out;
  std::uint64_t seed = 0;
  int reps = 200;
  int workers = 1;
  int restarts = 5;
  bool no_base = false;
  double threshold = 0.75;
};

int cmd_simulate(const SimArgs& a, std::ostream& out) {
  const auto setup = forcing_setup(a.natural, a.anthropogenic, a.years);
  MonteCarloOptions opts;
  opts.reps = a.reps;
  opts.seed = a.seed;
  opts.workers = a.workers;
  opts.include_base = !a.no_base;
  opts.fit.optimizer.restarts = a.restarts;
  opts.rejection.threshold = a.threshold;
  const auto report = monte_carlo(reference_dgp(), reference_config(), setup, opts);

  OutputBatch batch(a.out);
  const auto table = simulation_table_csv(report);
  batch.add("simulation_table.csv", table);
  batch.add("replications_full.csv", replications_csv(report.full));
  if (report.has_base) batch.add("replications_base.csv", replications_csv(report.base));
  batch.add("simulation_report.json", simulation_report_json(report));
  batch.commit();
  out << table;
  return kExitOk;
}

int cmd_generate(const SimArgs& a, std::ostream& out) {
  const auto setup = forcing_setup(a.natural, a.anthropogenic, a.years);
  const auto config = reference_config();
  RejectionRule rule;
  rule.threshold = a.threshold;
  const auto sim = simulate_dgp(reference_dgp(), config, setup, a.seed, rule);
  const auto& panel = sim.data.panel;

  OutputBatch batch(a.out);
  Manifest full, base;
  full.sample_years = base.sample_years = std::pair{panel.years.front(), panel.years.back()};
  auto entry_for = [](const std::string& label, SeriesKind kind, std::optional<std::string> pair) {
    ManifestEntry e;
    e.path = fs::path("series") / (label + ".csv");
    e.label = label;
    e.kind = kind;
    e.pair_id = std::move(pair);
    e.baseline = "pre-industrial";
    e.sync.mode = SyncMode::synchronized;
    return e;
  };
  for (Index i = 0; i < panel.n_series(); ++i) {
    const auto& m = panel.series[static_cast<std::size_t>(i)];
    AnomalySeries s;
    s.label = m.label;
    s.kind = m.kind;
    s.years = panel.years;
    s.values = panel.values.row(i).transpose();
    batch.add(fs::path("series") / (m.label + ".csv"), series_to_csv(s));
    const auto e = entry_for(m.label, m.kind, m.pair_id);
    full.entries.push_back(e);
    const bool in_base = m.kind == SeriesKind::forcing_total || m.label == "gmst_1" ||
                         (m.pair_id && *m.pair_id == "pair_1");
    if (in_base) base.entries.push_back(e);
  }
  AnomalySeries nat;
  nat.label = "forcing_natural";
  nat.kind = SeriesKind::forcing_natural;
  nat.years = panel.years;
  nat.values = sim.data.natural;
  batch.add("series/forcing_natural.csv", series_to_csv(nat));
  const auto nat_entry = entry_for(nat.label, nat.kind, std::nullopt);
  full.entries.push_back(nat_entry);
  base.entries.push_back(nat_entry);
  batch.add("manifest.json", manifest_to_json(full));
  batch.add("manifest_base.json", manifest_to_json(base));

  std::ostringstream states;
  states << "year,tm,td,natural,anthro,slope\n";
  for (Index t = 0; t < sim.states.cols(); ++t) {
    states << panel.years[static_cast<std::size_t>(t)];
    for (Index k = 0; k < 5; ++k) states << ',' << format_number(sim.states(k, t));
    states << '\n';
  }
  batch.add("states.csv", states.str());
  batch.commit();
  out << "generated " << panel.n_series() << " series over " << panel.years.front() << "-" << panel.years.back()
      << " after " << sim.attempts << " attempt(s)\n";
  return kExitOk;
}

struct ProjectArgs {
  std::string manifest, years, fit, out;
  std::vector<std::string> scenarios;
  std::uint64_t seed = 0;
  int draws = 10000;
  int workers = 1;
  std::vector<double> quantiles{0.05, 0.5, 0.95};
};

int cmd_project(const ProjectArgs& a, std::ostream& out, std::ostream& err) {
  const auto loaded = parse_fit_report(read_text_file(a.fit));
  const auto manifest = load_manifest(a.manifest);
  const auto span = a.years.empty() ? std::pair{loaded.context.first_year, loaded.context.last_year}
                                    : parse_years(a.years);
  const auto assembled = assemble_panel(manifest, span);
  const auto& data = assembled.dataset;
  std::vector<std::string> labels;
  for (const auto& m : data.panel.series) labels.push_back(m.label);
  if (labels != loaded.context.series) throw input_error("project: panel series differ from those in the fit report");

  std::vector<ScenarioPath> scen;
  std::vector<std::string> stems;
  for (const auto& f : a.scenarios) {
    const auto stem = fs::path(f).stem().string();
    if (std::find(stems.begin(), stems.end(), stem) != stems.end())
      throw input_error("project: duplicate scenario name '" + stem + "'");
    stems.push_back(stem);
    scen.push_back(read_scenario_csv(f, stem));
  }
  ProjectionOptions opts;
  opts.draws = a.draws;
  opts.seed = a.seed;
  opts.workers = a.workers;
  opts.quantiles = a.quantiles;
  const auto result = project(loaded.fit, data, scen, opts);

  OutputBatch batch(a.out);
  for (const auto& fan : result.fans) batch.add("fan_" + file_stem_for(fan.scenario) + ".csv", fan_csv(fan));
  batch.add("projection_report.json", projection_report_json(result, a.scenarios));
  batch.commit();
  if (result.high_rejection) err << result.status << "\n";
  for (const auto& fan : result.fans) {
    const Index h = fan.quantiles.rows() - 1;
    out << fan.scenario << " " << fan.years.back();
    for (std::size_t q = 0; q < fan.levels.size(); ++q)
      out << " " << quantile_column(fan.levels[q]) << " " << format_number(fan.quantiles(h, static_cast<Index>(q)));
    out << "\n";
  }
  return kExitOk;
}

int cmd_diagnose(const std::string& manifest, const std::string& years, int max_lag, const std::string& out_dir,
                 std::ostream& out, std::ostream& err) {
  const auto assembled = assemble(manifest, years);
  const auto& yrs = assembled.dataset.panel.years;
  std::vector<AdfRow> rows;
  for (const auto& s : assembled.synchronized) {
    // Longest run of consecutive observed values inside the sample.
    int best_start = 0, best_len = 0, start = 0, len = 0;
    for (std::size_t t = 0; t < yrs.size(); ++t) {
      if (std::isfinite(s.at(yrs[t]))) {
        if (len == 0) start = static_cast<int>(t);
        if (++len > best_len) best_len = len, best_start = start;
      } else {
        len = 0;
      }
    }
    Eigen::VectorXd level(best_len);
    for (int i = 0; i < best_len; ++i) level(i) = s.at(yrs[static_cast<std::size_t>(best_start + i)]);
    const int first = best_len > 0 ? yrs[static_cast<std::size_t>(best_start)] : 0;
    const int last = best_len > 0 ? first + best_len - 1 : 0;
    for (const bool diff : {false, true}) {
      const Eigen::VectorXd y = diff && best_len > 1
                                    ? Eigen::VectorXd(level.tail(best_len - 1) - level.head(best_len - 1))
                                    : level;
      if (y.size() <= max_lag + 6) {
        err << "diagnose: skipping " << s.label << (diff ? " (diff)" : " (level)") << ": only " << y.size()
            << " consecutive values\n";
        continue;
      }
      for (const auto spec : {AdfSpec::constant, AdfSpec::constant_trend})
        rows.push_back({s.label, diff ? "diff" : "level", diff ? first + 1 : first, last, adf_test(y, spec, max_lag)});
    }
  }
  const auto table = adf_table_csv(rows);
  OutputBatch batch(out_dir);
  batch.add("adf.csv", table);
  batch.commit();
  out << table;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-layer energy-balance state-space model: estimation, simulation and projection", "ebmss"};
  app.require_subcommand(1);

  std::string manifest, years, out_dir;
  auto* sync = app.add_subcommand("sync", "Synchronize series baselines and write the offset report");
  sync->add_option("--manifest", manifest, "Manifest file")->required();
  sync->add_option("--years", years, "Sample years FIRST:LAST");
  sync->add_option("--out", out_dir, "Output directory")->required();

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Maximum-likelihood fit with standard errors and residual diagnostics");
  fit->add_option("--manifest", fa.manifest, "Manifest file")->required();
  fit->add_option("--years", fa.years, "Sample years FIRST:LAST");
  fit->add_option("--out", fa.out, "Output directory")->required();
  fit->add_option("--restarts", fa.restarts, "Extra optimizer starts after the first")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  fit->add_option("--max-evals", fa.max_evals, "Evaluations per start")->capture_default_str();
  fit->add_option("--seed", fa.seed, "Restart jitter seed")->capture_default_str();
  fit->add_option("--skip-steps", fa.skip_steps, "Initial steps left out of the diagnostics")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  SimArgs sa;
  sa.workers = default_workers();
  auto add_forcing = [&](CLI::App* c) {
    c->add_option("--natural", sa.natural, "Natural forcing series")->required();
    c->add_option("--anthropogenic", sa.anthropogenic, "Reference anthropogenic forcing series")->required();
    c->add_option("--years", sa.years, "Sample years FIRST:LAST");
    c->add_option("--seed", sa.seed, "Random seed")->required();
    c->add_option("--out", sa.out, "Output directory")->required();
    c->add_option("--threshold", sa.threshold, "Trajectory acceptance threshold")->capture_default_str();
  };
  auto* sim = app.add_subcommand("simulate", "Monte Carlo parameter-recovery study at the reference parameters");
  add_forcing(sim);
  sim->add_option("--reps", sa.reps, "Replications")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--workers", sa.workers, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_option("--restarts", sa.restarts, "Extra optimizer starts per fit")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sim->add_flag("--no-base", sa.no_base, "Skip the one-GMST, one-pair configuration");
  auto* gen = app.add_subcommand("generate", "Write one simulated panel with its manifests");
  add_forcing(gen);

  ProjectArgs pa;
  pa.workers = default_workers();
  auto* proj = app.add_subcommand("project", "Scenario projections under parameter uncertainty");
  proj->add_option("--manifest", pa.manifest, "Manifest file")->required();
  proj->add_option("--years", pa.years, "Sample years FIRST:LAST (default: those of the fit)");
  proj->add_option("--fit", pa.fit, "Fit report from the fit subcommand")->required();
  proj->add_option("--scenario", pa.scenarios, "Scenario forcing file (repeatable)")->required();
  proj->add_option("--draws", pa.draws, "Parameter draws")->capture_default_str()->check(CLI::PositiveNumber);
  proj->add_option("--seed", pa.seed, "Random seed")->required();
  proj->add_option("--quantiles", pa.quantiles, "Quantile levels")->delimiter(',')->capture_default_str();
  proj->add_option("--workers", pa.workers, "Worker threads")->check(CLI::PositiveNumber);
  proj->add_option("--out", pa.out, "Output directory")->required();

  int max_lag = 15;
  auto* diag = app.add_subcommand("diagnose", "ADF unit-root tests on every series");
  diag->add_option("--manifest", manifest, "Manifest file")->required();
  diag->add_option("--years", years, "Sample years FIRST:LAST");
  diag->add_option("--max-lag", max_lag, "Largest lag considered")->capture_default_str()->check(CLI::NonNegativeNumber);
  diag->add_option("--out", out_dir, "Output directory")->required();

  std::vector<std::string> argv_store{"ebmss"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*sync) return cmd_sync(manifest, years, out_dir, out);
    if (*fit) return cmd_fit(fa, out);
    if (*sim) return cmd_simulate(sa, out);
    if (*gen) return cmd_generate(sa, out);
    if (*proj) return cmd_project(pa, out, err);
    if (*diag) return cmd_diagnose(manifest, years, max_lag, out_dir, out, err);
  } catch (const input_error& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const numerical_error& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitInput;
}

}  // namespace ebmss
