#include "ebmss/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "ebmss/errors.hpp"
#include "json.hpp"

namespace ebmss {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ordered_json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

double number_from(const ordered_json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

template <typename Row>
void append_row(std::ostringstream& out, const Row& cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out << ',';
    out << c;
    first = false;
  }
  out << '\n';
}

}  // namespace

std::string format_number(double x) {
  if (!std::isfinite(x)) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw numerical_error("format_number: conversion failed");
  return {buf, ptr};
}

void OutputBatch::add(const fs::path& relative, std::string content) {
  if (relative.is_absolute() || relative.empty()) throw input_error("output path must be relative: " + relative.string());
  files_.emplace_back(relative, std::move(content));
}

void OutputBatch::commit() const {
  std::vector<std::pair<fs::path, fs::path>> staged;  // temp, final
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& [tmp, final_path] : staged) fs::remove(tmp, ec);
  };
  try {
    for (const auto& [rel, content] : files_) {
      const fs::path final_path = dir_ / rel;
      fs::create_directories(final_path.parent_path());
      fs::path tmp = final_path;
      tmp += ".partial";
      staged.emplace_back(tmp, final_path);
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      out.close();
      if (!out) throw input_error("cannot write " + tmp.string());
    }
    for (const auto& [tmp, final_path] : staged) fs::rename(tmp, final_path);
  } catch (const fs::filesystem_error& e) {
    cleanup();
    throw input_error(std::string("output: ") + e.what());
  } catch (...) {
    cleanup();
    throw;
  }
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  OutputBatch batch(path.has_parent_path() ? path.parent_path() : fs::path("."));
  batch.add(path.filename(), content);
  batch.commit();
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fit_report_json(const FitResult& fit, const FitContext& context) {
  ordered_json j;
  j["schema"] = kFitReportSchema;
  j["sample"] = {{"first_year", context.first_year}, {"last_year", context.last_year}};
  j["series"] = context.series;
  j["config"] = {{"n_gmst", fit.config.n_gmst},
                 {"n_ocean_pairs", fit.config.n_ocean_pairs},
                 {"f2x", fit.config.f2x},
                 {"f2x_se", fit.config.f2x_se}};
  j["loglik"] = number(fit.loglik);
  j["init_loglik"] = number(fit.init_loglik);

  const auto names = parameter_names(fit.config);
  const Eigen::VectorXd values = fit.theta_hat.values();
  ordered_json params = ordered_json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto k = static_cast<Index>(i);
    const double se = k < fit.se.size() ? fit.se(k) : std::nan("");
    params.push_back({{"name", names[i]}, {"estimate", values(k)}, {"se", number(se)}});
  }
  j["parameters"] = params;

  ordered_json cv = ordered_json::array();
  for (const auto& row : coefficient_of_variation(fit))
    cv.push_back({{"name", row.name}, {"estimate", number(row.estimate)}, {"se", number(row.se)}, {"cv", number(row.cv)}});
  j["cv"] = cv;
  j["ecs"] = {{"estimate", number(fit.ecs_hat)}, {"se", number(fit.ecs_se)}};

  ordered_json vcov = ordered_json::array();
  for (Index r = 0; r < 4; ++r) {
    ordered_json row = ordered_json::array();
    for (Index c = 0; c < 4; ++c) row.push_back(number(fit.vcov_physical(r, c)));
    vcov.push_back(row);
  }
  j["vcov_physical"] = vcov;
  j["flags"] = {{"vcov_clipped", fit.vcov_clipped},
                {"pseudo_inverse", fit.pseudo_inverse},
                {"hessian_step_shrunk", fit.hessian_step_shrunk},
                {"nonidentified", fit.nonidentified},
                {"at_boundary", fit.at_boundary}};
  j["convergence"] = {{"converged", fit.convergence.converged},
                      {"evaluations", fit.convergence.evaluations},
                      {"iterations", fit.convergence.iterations},
                      {"starts", fit.convergence.starts},
                      {"status", fit.convergence.status}};
  return dump(j);
}

LoadedFit parse_fit_report(const std::string& text) {
  try {
    const auto j = ordered_json::parse(text);
    if (j.value("schema", std::string{}) != kFitReportSchema)
      throw input_error(std::string("fit report: expected schema ") + kFitReportSchema);
    LoadedFit out;
    auto& fit = out.fit;
    const auto& c = j.at("config");
    fit.config.n_gmst = c.at("n_gmst").get<int>();
    fit.config.n_ocean_pairs = c.at("n_ocean_pairs").get<int>();
    fit.config.f2x = c.at("f2x").get<double>();
    fit.config.f2x_se = c.at("f2x_se").get<double>();
    fit.config.validate();

    const auto names = parameter_names(fit.config);
    const auto& params = j.at("parameters");
    if (params.size() != names.size()) throw input_error("fit report: parameter count does not match the config");
    Eigen::VectorXd values(static_cast<Index>(names.size()));
    fit.se.resize(values.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto& p = params[i];
      if (p.at("name").get<std::string>() != names[i])
        throw input_error("fit report: expected parameter '" + names[i] + "'");
      values(static_cast<Index>(i)) = number_from(p.at("estimate"));
      fit.se(static_cast<Index>(i)) = number_from(p.at("se"));
    }
    fit.theta_hat = EbmParamVector::from_values(values, fit.config);
    fit.theta_hat.validate(fit.config);

    const auto& v = j.at("vcov_physical");
    if (v.size() != 4) throw input_error("fit report: vcov_physical must be 4 x 4");
    for (Index r = 0; r < 4; ++r) {
      if (v[static_cast<std::size_t>(r)].size() != 4) throw input_error("fit report: vcov_physical must be 4 x 4");
      for (Index col = 0; col < 4; ++col)
        fit.vcov_physical(r, col) = number_from(v[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]);
    }
    fit.loglik = number_from(j.at("loglik"));
    fit.ecs_hat = number_from(j.at("ecs").at("estimate"));
    fit.ecs_se = number_from(j.at("ecs").at("se"));
    fit.vcov_clipped = j.at("flags").at("vcov_clipped").get<bool>();

    out.context.series = j.at("series").get<std::vector<std::string>>();
    out.context.first_year = j.at("sample").at("first_year").get<int>();
    out.context.last_year = j.at("sample").at("last_year").get<int>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("fit report: ") + e.what());
  }
}

std::string diagnostics_csv(const std::vector<std::string>& labels, const std::vector<ResidualSummary>& rows) {
  if (labels.size() != rows.size()) throw input_error("diagnostics_csv: label count mismatch");
  std::ostringstream out;
  std::vector<std::string> header{"statistic"};
  header.insert(header.end(), labels.begin(), labels.end());
  append_row(out, header);
  auto line = [&](const char* name, auto get) {
    std::vector<std::string> cells{name};
    for (const auto& r : rows) cells.push_back(format_number(get(r)));
    append_row(out, cells);
  };
  line("mean", [](const ResidualSummary& r) { return r.mean; });
  line("std", [](const ResidualSummary& r) { return r.sd; });
  line("skewness", [](const ResidualSummary& r) { return r.skewness; });
  line("kurtosis", [](const ResidualSummary& r) { return r.kurtosis; });
  line("jb", [](const ResidualSummary& r) { return r.jb; });
  line("q1", [](const ResidualSummary& r) { return r.q1; });
  line("n", [](const ResidualSummary& r) { return static_cast<double>(r.n); });
  return out.str();
}

std::string simulation_table_csv(const SimulationReport& report) {
  std::ostringstream out;
  std::vector<std::string> header{"parameter", "dgp", "bias_full", "sd_full", "rmse_full", "mae_full"};
  if (report.has_base)
    for (const char* h : {"bias_base", "sd_base", "rmse_base", "mae_base"}) header.emplace_back(h);
  append_row(out, header);
  for (const auto& s : report.full.stats) {
    std::vector<std::string> cells{s.name, format_number(s.dgp_value), format_number(s.bias), format_number(s.sd),
                                   format_number(s.rmse), format_number(s.mae)};
    if (report.has_base) {
      const ParameterStats* b = nullptr;
      for (const auto& bs : report.base.stats)
        if (bs.name == s.name) b = &bs;
      for (double x : {b ? b->bias : NAN, b ? b->sd : NAN, b ? b->rmse : NAN, b ? b->mae : NAN})
        cells.push_back(b ? format_number(x) : std::string{});
    }
    append_row(out, cells);
  }
  return out.str();
}

std::string replications_csv(const ConfigRecovery& recovery) {
  std::ostringstream out;
  std::vector<std::string> header{"rep", "ok"};
  header.insert(header.end(), recovery.names.begin(), recovery.names.end());
  header.emplace_back("lambda_cv");
  append_row(out, header);
  for (Index r = 0; r < recovery.estimates.rows(); ++r) {
    std::vector<std::string> cells{std::to_string(r), recovery.ok[static_cast<std::size_t>(r)] ? "1" : "0"};
    for (Index c = 0; c < recovery.estimates.cols(); ++c) cells.push_back(format_number(recovery.estimates(r, c)));
    cells.push_back(r < recovery.lambda_cv.size() ? format_number(recovery.lambda_cv(r)) : "NA");
    append_row(out, cells);
  }
  return out.str();
}

std::string simulation_report_json(const SimulationReport& report) {
  ordered_json j;
  j["schema"] = "ebmss.simulation_report/1";
  j["reps"] = report.reps;
  j["seed"] = report.seed;
  j["attempts"] = report.attempts;
  j["retained"] = report.retained;
  j["acceptance_rate"] =
      number(report.attempts > 0 ? static_cast<double>(report.retained) / static_cast<double>(report.attempts) : NAN);
  auto block = [](const ConfigRecovery& r) {
    ordered_json b;
    b["n_gmst"] = r.config.n_gmst;
    b["n_ocean_pairs"] = r.config.n_ocean_pairs;
    b["failures"] = r.failures;
    ordered_json stats = ordered_json::array();
    for (const auto& s : r.stats)
      stats.push_back({{"name", s.name},
                       {"dgp", number(s.dgp_value)},
                       {"bias", number(s.bias)},
                       {"sd", number(s.sd)},
                       {"rmse", number(s.rmse)},
                       {"mae", number(s.mae)},
                       {"n", s.n}});
    b["stats"] = stats;
    return b;
  };
  j["full"] = block(report.full);
  if (report.has_base) j["base"] = block(report.base);
  return dump(j);
}

std::string quantile_column(double level) {
  const double pct = level * 100.0;
  const double rounded = std::round(pct);
  if (std::abs(pct - rounded) < 1e-9) {
    const auto n = static_cast<int>(rounded);
    return (n < 10 ? "q0" : "q") + std::to_string(n);
  }
  return "q" + format_number(pct);
}

std::string fan_csv(const ProjectionFan& fan) {
  std::ostringstream out;
  std::vector<std::string> header{"year"};
  for (double l : fan.levels) header.push_back(quantile_column(l));
  append_row(out, header);
  for (std::size_t t = 0; t < fan.years.size(); ++t) {
    std::vector<std::string> cells{std::to_string(fan.years[t])};
    for (Index q = 0; q < fan.quantiles.cols(); ++q)
      cells.push_back(format_number(fan.quantiles(static_cast<Index>(t), q)));
    append_row(out, cells);
  }
  return out.str();
}

std::string projection_report_json(const ProjectionResult& result, const std::vector<std::string>& scenario_files) {
  ordered_json j;
  j["schema"] = "ebmss.projection_report/1";
  j["draws"] = result.draws;
  j["seed"] = result.seed;
  j["rejected"] = result.rejected;
  j["high_rejection"] = result.high_rejection;
  j["status"] = result.status;
  ordered_json scen = ordered_json::array();
  for (std::size_t s = 0; s < result.fans.size(); ++s) {
    const auto& fan = result.fans[s];
    ordered_json last = ordered_json::object();
    const Index h = fan.quantiles.rows() - 1;
    for (std::size_t q = 0; q < fan.levels.size(); ++q)
      last[quantile_column(fan.levels[q])] = number(fan.quantiles(h, static_cast<Index>(q)));
    scen.push_back({{"name", fan.scenario},
                    {"file", s < scenario_files.size() ? scenario_files[s] : std::string{}},
                    {"first_year", fan.years.front()},
                    {"last_year", fan.years.back()},
                    {"final", last}});
  }
  j["scenarios"] = scen;
  return dump(j);
}

std::string adf_stars(const AdfResult& result) {
  if (result.reject_1) return "**";
  if (result.reject_5) return "*";
  return {};
}

std::string adf_table_csv(const std::vector<AdfRow>& rows) {
  std::ostringstream out;
  append_row(out, std::vector<std::string>{"series", "transform", "spec", "first_year", "last_year", "statistic",
                                           "lag", "n_obs", "crit_1", "crit_5", "signif"});
  for (const auto& r : rows) {
    const auto& a = r.result;
    append_row(out, std::vector<std::string>{r.series, r.transform, std::string(to_string(a.spec)),
                                             std::to_string(r.first_year), std::to_string(r.last_year),
                                             format_number(a.statistic), std::to_string(a.chosen_lag),
                                             std::to_string(a.n_obs), format_number(a.crit_1),
                                             format_number(a.crit_5), adf_stars(a)});
  }
  return out.str();
}

std::string sync_report_csv(const std::vector<SyncRecord>& records) {
  std::ostringstream out;
  append_row(out, std::vector<std::string>{"label", "kind", "mode", "offset", "note"});
  for (const auto& r : records)
    append_row(out, std::vector<std::string>{r.label, std::string(to_string(r.kind)), std::string(to_string(r.mode)),
                                             format_number(r.offset),
                                             r.mode == SyncMode::synchronized ? "untouched" : ""});
  return out.str();
}

}  // namespace ebmss
