#include "ebmss/panel.hpp"

#include <cmath>
#include <map>

#include "ebmss/errors.hpp"

namespace ebmss {

namespace {

constexpr std::pair<SeriesKind, std::string_view> kKindNames[] = {
    {SeriesKind::gmst, "gmst"},
    {SeriesKind::ocean_temp, "ocean_temp"},
    {SeriesKind::ohc, "ohc"},
    {SeriesKind::forcing_total, "forcing_total"},
    {SeriesKind::forcing_natural, "forcing_natural"},
    {SeriesKind::forcing_anthropogenic, "forcing_anthropogenic"},
    {SeriesKind::scenario_forcing, "scenario_forcing"},
};

}  // namespace

std::string_view to_string(SeriesKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

SeriesKind series_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw input_error("unknown series kind '" + std::string(name) + "'");
}

ObservationPanel ObservationPanel::from_values(std::vector<int> years, Eigen::MatrixXd values,
                                               std::vector<SeriesMeta> series) {
  ObservationPanel panel;
  panel.observed = values.array().isFinite();
  panel.years = std::move(years);
  panel.values = std::move(values);
  for (Eigen::Index t = 0; t < panel.values.cols(); ++t)
    for (Eigen::Index i = 0; i < panel.values.rows(); ++i)
      if (!panel.observed(i, t)) panel.values(i, t) = std::nan("");
  panel.series = std::move(series);
  return panel;
}

ObservationPanel ObservationPanel::unlabeled(Eigen::MatrixXd values, int first_year) {
  std::vector<int> years(static_cast<std::size_t>(values.cols()));
  for (std::size_t t = 0; t < years.size(); ++t) years[t] = first_year + static_cast<int>(t);
  std::vector<SeriesMeta> meta(static_cast<std::size_t>(values.rows()));
  for (std::size_t i = 0; i < meta.size(); ++i) meta[i].label = "y" + std::to_string(i + 1);
  return from_values(std::move(years), std::move(values), std::move(meta));
}

void ObservationPanel::validate() const {
  if (observed.rows() != values.rows() || observed.cols() != values.cols())
    throw input_error("panel: missing-marker shape does not match values");
  if (static_cast<Eigen::Index>(years.size()) != values.cols())
    throw input_error("panel: year count does not match value columns");
  if (static_cast<Eigen::Index>(series.size()) != values.rows())
    throw input_error("panel: series metadata count does not match value rows");
  for (std::size_t t = 1; t < years.size(); ++t)
    if (years[t] != years[t - 1] + 1)
      throw input_error("panel: years must be strictly increasing with unit step");

  std::map<std::string, int> temp_pairs, ohc_pairs;
  for (const auto& s : series) {
    if (s.kind != SeriesKind::ocean_temp && s.kind != SeriesKind::ohc) continue;
    if (!s.pair_id) throw input_error("panel: ocean series '" + s.label + "' has no pair_id");
    ++(s.kind == SeriesKind::ocean_temp ? temp_pairs : ohc_pairs)[*s.pair_id];
  }
  for (const auto& [id, count] : temp_pairs)
    if (count != 1 || !ohc_pairs.contains(id) || ohc_pairs.at(id) != 1)
      throw input_error("panel: ocean pair '" + id + "' must have exactly one ocean_temp and one ohc row");
  for (const auto& [id, count] : ohc_pairs)
    if (count != 1 || !temp_pairs.contains(id))
      throw input_error("panel: ocean pair '" + id + "' must have exactly one ocean_temp and one ohc row");
}

ObservationPanel ObservationPanel::select_rows(std::span<const Eigen::Index> rows) const {
  ObservationPanel out;
  out.years = years;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  out.observed.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    out.values.row(i) = values.row(rows[r]);
    out.observed.row(i) = observed.row(rows[r]);
    out.series.push_back(series[static_cast<std::size_t>(rows[r])]);
  }
  return out;
}

std::vector<Eigen::Index> ObservationPanel::rows_of_kind(SeriesKind kind) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series[i].kind == kind) rows.push_back(static_cast<Eigen::Index>(i));
  return rows;
}

std::optional<Eigen::Index> ObservationPanel::find_row(std::string_view label) const {
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series[i].label == label) return static_cast<Eigen::Index>(i);
  return std::nullopt;
}

}  // namespace ebmss
