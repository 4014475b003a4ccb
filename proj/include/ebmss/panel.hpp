#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ebmss {

enum class SeriesKind {
  gmst,
  ocean_temp,
  ohc,
  forcing_total,
  forcing_natural,
  forcing_anthropogenic,
  scenario_forcing,
};

std::string_view to_string(SeriesKind kind);
/// Throws input_error for an unknown name.
SeriesKind series_kind_from_string(std::string_view name);

struct SeriesMeta {
  std::string label;
  SeriesKind kind = SeriesKind::gmst;
  std::optional<std::string> pair_id;  // links an ocean_temp row to its ohc row
  std::string baseline = "unspecified";
};

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Year-indexed multivariate panel: one row per series, one column per year.
/// `observed(i, t)` is the missing-data marker; unobserved cells hold NaN.
struct ObservationPanel {
  std::vector<int> years;
  Eigen::MatrixXd values;
  BoolArray observed;
  std::vector<SeriesMeta> series;

  Eigen::Index n_series() const { return values.rows(); }
  Eigen::Index n_steps() const { return values.cols(); }
  bool is_observed(Eigen::Index i, Eigen::Index t) const { return observed(i, t); }
  Eigen::Index missing_count() const { return observed.size() - observed.count(); }

  /// Builds a panel from a value matrix in which NaN marks a missing cell.
  static ObservationPanel from_values(std::vector<int> years, Eigen::MatrixXd values,
                                      std::vector<SeriesMeta> series);
  /// Same, with generic labels y1..yp; used for panels with no domain meaning.
  static ObservationPanel unlabeled(Eigen::MatrixXd values, int first_year = 1);

  /// Checks dimensions, year contiguity and ocean pairing. Throws input_error.
  void validate() const;

  ObservationPanel select_rows(std::span<const Eigen::Index> rows) const;
  std::vector<Eigen::Index> rows_of_kind(SeriesKind kind) const;
  std::optional<Eigen::Index> find_row(std::string_view label) const;
};

/// Model-ready inputs: the observation panel in canonical row order plus the
/// exogenous natural forcing aligned with `panel.years`.
struct Dataset {
  ObservationPanel panel;
  Eigen::VectorXd natural;
};

}  // namespace ebmss
