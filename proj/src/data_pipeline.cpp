#include "ebmss/data_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "ebmss/errors.hpp"

namespace ebmss {

using nlohmann::json;

void AnomalySeries::validate() const {
  if (years.size() != static_cast<std::size_t>(values.size()))
    throw input_error("series '" + label + "': year and value counts differ");
  for (std::size_t i = 1; i < years.size(); ++i)
    if (years[i] <= years[i - 1]) throw input_error("series '" + label + "': years must be strictly increasing");
}

double AnomalySeries::at(int year) const {
  const auto it = std::lower_bound(years.begin(), years.end(), year);
  if (it == years.end() || *it != year) return std::nan("");
  return values(it - years.begin());
}

double compute_offset(double mean_1986_2005, double delta_preind) { return mean_1986_2005 - delta_preind; }

AnomalySeries synchronize(const AnomalySeries& series, double offset, std::string new_baseline) {
  if (!std::isfinite(offset)) throw input_error("synchronize: offset for '" + series.label + "' is not finite");
  AnomalySeries out = series;
  out.values = series.values.array() - offset;
  out.baseline = std::move(new_baseline);
  return out;
}

AnomalySeries split_forcing(const AnomalySeries& total, const AnomalySeries& natural) {
  total.validate();
  natural.validate();
  AnomalySeries out;
  out.label = "anthropogenic";
  out.kind = SeriesKind::forcing_anthropogenic;
  out.baseline = total.baseline;
  std::vector<double> v;
  for (std::size_t i = 0; i < total.years.size(); ++i) {
    const auto it = std::lower_bound(natural.years.begin(), natural.years.end(), total.years[i]);
    if (it == natural.years.end() || *it != total.years[i]) continue;
    out.years.push_back(total.years[i]);
    v.push_back(total.values(static_cast<Eigen::Index>(i)) - natural.values(it - natural.years.begin()));
  }
  if (out.years.empty()) throw input_error("split_forcing: total and natural forcing do not overlap");
  out.values = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return out;
}

std::string_view to_string(SyncMode mode) {
  switch (mode) {
    case SyncMode::table: return "table";
    case SyncMode::offset: return "offset";
    case SyncMode::synchronized: return "synchronized";
  }
  return "unknown";
}

double SyncSpec::resolved_offset() const {
  switch (mode) {
    case SyncMode::table: return compute_offset(mean_1986_2005, delta_preind);
    case SyncMode::offset: return offset;
    case SyncMode::synchronized: return 0.0;
  }
  return 0.0;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

double number_field(const json& obj, const char* key, const std::string& label) {
  if (!obj.contains(key)) throw input_error("manifest entry '" + label + "': missing '" + key + "'");
  if (!obj.at(key).is_number()) throw input_error("manifest entry '" + label + "': '" + key + "' must be a number");
  const double v = obj.at(key).get<double>();
  if (!std::isfinite(v)) throw input_error("manifest entry '" + label + "': '" + key + "' is not finite");
  return v;
}

SyncSpec parse_sync(const json& entry, const std::string& label, SeriesKind kind) {
  SyncSpec spec;
  if (!entry.contains("sync")) {
    const bool forcing = kind == SeriesKind::forcing_total || kind == SeriesKind::forcing_natural ||
                         kind == SeriesKind::forcing_anthropogenic;
    if (forcing) return spec;
    throw input_error("manifest entry '" + label + "': missing 'sync'");
  }
  const auto& s = entry.at("sync");
  if (!s.is_object() || !s.contains("mode") || !s.at("mode").is_string())
    throw input_error("manifest entry '" + label + "': 'sync' needs a 'mode'");
  const auto mode = s.at("mode").get<std::string>();
  std::set<std::string> allowed{"mode"};
  if (mode == "table") {
    spec.mode = SyncMode::table;
    spec.mean_1986_2005 = number_field(s, "mean_1986_2005", label);
    spec.delta_preind = number_field(s, "delta_preind", label);
    allowed.insert({"mean_1986_2005", "delta_preind"});
  } else if (mode == "offset") {
    spec.mode = SyncMode::offset;
    spec.offset = number_field(s, "offset", label);
    allowed.insert("offset");
  } else if (mode == "synchronized") {
    spec.mode = SyncMode::synchronized;
  } else {
    throw input_error("manifest entry '" + label + "': unknown sync mode '" + mode + "'");
  }
  for (const auto& [key, value] : s.items())
    if (!allowed.contains(key))
      throw input_error("manifest entry '" + label + "': field '" + key + "' conflicts with sync mode '" + mode + "'");
  return spec;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

namespace {

Manifest parse_manifest_doc(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw input_error(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("series") || !doc.at("series").is_array())
    throw input_error("manifest must be an object with a 'series' array");
  Manifest m;
  m.base_dir = base_dir;
  if (doc.contains("sample_years")) {
    const auto& y = doc.at("sample_years");
    if (!y.is_array() || y.size() != 2 || !y[0].is_number_integer() || !y[1].is_number_integer())
      throw input_error("manifest: 'sample_years' must be [first, last]");
    m.sample_years = std::pair{y[0].get<int>(), y[1].get<int>()};
    if (m.sample_years->first > m.sample_years->second) throw input_error("manifest: 'sample_years' is reversed");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < doc.at("series").size(); ++i) {
    const auto& e = doc.at("series")[i];
    if (!e.is_object()) throw input_error("manifest: series entry " + std::to_string(i) + " is not an object");
    if (!e.contains("label") || !e.at("label").is_string())
      throw input_error("manifest: series entry " + std::to_string(i) + " has no label");
    ManifestEntry entry;
    entry.label = e.at("label").get<std::string>();
    if (!labels.insert(entry.label).second) throw input_error("manifest: duplicate label '" + entry.label + "'");
    if (!e.contains("path") || !e.at("path").is_string())
      throw input_error("manifest entry '" + entry.label + "': missing 'path'");
    entry.path = e.at("path").get<std::string>();
    if (!e.contains("kind") || !e.at("kind").is_string())
      throw input_error("manifest entry '" + entry.label + "': missing 'kind'");
    entry.kind = series_kind_from_string(e.at("kind").get<std::string>());
    if (e.contains("pair_id")) entry.pair_id = e.at("pair_id").get<std::string>();
    if (e.contains("depth")) entry.depth = e.at("depth").get<std::string>();
    if (e.contains("baseline")) entry.baseline = e.at("baseline").get<std::string>();
    const bool ocean = entry.kind == SeriesKind::ocean_temp || entry.kind == SeriesKind::ohc;
    if (ocean && !entry.pair_id) throw input_error("manifest entry '" + entry.label + "': ocean series needs 'pair_id'");
    entry.sync = parse_sync(e, entry.label, entry.kind);
    m.entries.push_back(std::move(entry));
  }
  return m;
}

}  // namespace

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  try {
    return parse_manifest_doc(text, base_dir);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("manifest: ") + e.what());
  }
}

Manifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.parent_path());
}

std::string manifest_to_json(const Manifest& manifest) {
  json doc;
  doc["schema"] = "ebmss.manifest/1";
  if (manifest.sample_years) doc["sample_years"] = {manifest.sample_years->first, manifest.sample_years->second};
  doc["series"] = json::array();
  for (const auto& e : manifest.entries) {
    json j;
    j["label"] = e.label;
    j["path"] = e.path.generic_string();
    j["kind"] = std::string(to_string(e.kind));
    if (e.pair_id) j["pair_id"] = *e.pair_id;
    if (e.depth) j["depth"] = *e.depth;
    j["baseline"] = e.baseline;
    json s;
    s["mode"] = std::string(to_string(e.sync.mode));
    if (e.sync.mode == SyncMode::table) {
      s["mean_1986_2005"] = e.sync.mean_1986_2005;
      s["delta_preind"] = e.sync.delta_preind;
    } else if (e.sync.mode == SyncMode::offset) {
      s["offset"] = e.sync.offset;
    }
    j["sync"] = s;
    doc["series"].push_back(j);
  }
  return doc.dump(2) + "\n";
}

AnomalySeries read_series_csv(const std::filesystem::path& path, const std::string& label, SeriesKind kind) {
  std::istringstream in(read_file(path));
  AnomalySeries s;
  s.label = label;
  s.kind = kind;
  std::vector<double> values;
  std::string line;
  bool header = true;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw input_error(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) fail("expected two comma-separated fields");
    const auto first = trim(std::string_view(t).substr(0, comma));
    const auto second = trim(std::string_view(t).substr(comma + 1));
    if (header) {
      if (first != "year") fail("header must start with 'year'");
      header = false;
      continue;
    }
    int year = 0;
    if (!parse_number(first, year)) fail("invalid year '" + first + "'");
    double v = std::nan("");
    if (!second.empty() && !parse_number(second, v)) fail("invalid value '" + second + "'");
    if (!s.years.empty() && year <= s.years.back()) fail("years must be strictly increasing");
    s.years.push_back(year);
    values.push_back(v);
  }
  if (header) throw input_error(path.string() + ": missing header");
  s.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return s;
}

std::string series_to_csv(const AnomalySeries& series, const std::string& value_name) {
  std::string out = "year," + value_name + "\n";
  for (std::size_t i = 0; i < series.years.size(); ++i) {
    out += std::to_string(series.years[i]) + ",";
    const double v = series.values(static_cast<Eigen::Index>(i));
    if (std::isfinite(v)) out += format_double(v);
    out += "\n";
  }
  return out;
}

AssembledData assemble_panel(const Manifest& manifest, std::pair<int, int> years) {
  if (years.first > years.second) throw input_error("assemble_panel: sample years are reversed");
  AssembledData out;
  std::vector<AnomalySeries> gmst, temps, ohcs, total, natural, anthro;
  for (const auto& e : manifest.entries) {
    if (e.kind == SeriesKind::scenario_forcing)
      throw input_error("manifest entry '" + e.label + "': scenario series are passed to the project command");
    const auto path = e.path.is_absolute() ? e.path : manifest.base_dir / e.path;
    auto raw = read_series_csv(path, e.label, e.kind);
    raw.baseline = e.baseline;
    raw.pair_id = e.pair_id;
    raw.depth = e.depth;
    const double offset = e.sync.resolved_offset();
    AnomalySeries s = e.sync.mode == SyncMode::synchronized
                          ? raw
                          : synchronize(raw, offset, e.sync.mode == SyncMode::table ? "pre-industrial" : "synchronized");
    out.sync_report.push_back({e.label, e.kind, e.sync.mode, offset});
    out.synchronized.push_back(s);
    switch (e.kind) {
      case SeriesKind::gmst: gmst.push_back(std::move(s)); break;
      case SeriesKind::ocean_temp: temps.push_back(std::move(s)); break;
      case SeriesKind::ohc: ohcs.push_back(std::move(s)); break;
      case SeriesKind::forcing_total: total.push_back(std::move(s)); break;
      case SeriesKind::forcing_natural: natural.push_back(std::move(s)); break;
      case SeriesKind::forcing_anthropogenic: anthro.push_back(std::move(s)); break;
      case SeriesKind::scenario_forcing: break;
    }
  }
  if (gmst.empty()) throw input_error("manifest needs at least one GMST series");
  if (total.size() != 1) throw input_error("manifest needs exactly one total-forcing series");
  if (natural.size() != 1) throw input_error("manifest needs exactly one natural-forcing series");
  if (anthro.size() > 1) throw input_error("manifest has more than one anthropogenic-forcing series");

  auto by_label = [](const AnomalySeries& a, const AnomalySeries& b) { return a.label < b.label; };
  auto by_pair = [](const AnomalySeries& a, const AnomalySeries& b) { return *a.pair_id < *b.pair_id; };
  std::sort(gmst.begin(), gmst.end(), by_label);
  std::sort(temps.begin(), temps.end(), by_pair);
  std::sort(ohcs.begin(), ohcs.end(), by_pair);
  if (temps.size() != ohcs.size()) throw input_error("manifest: unpaired ocean series");
  for (std::size_t j = 0; j < temps.size(); ++j) {
    if (*temps[j].pair_id != *ohcs[j].pair_id)
      throw input_error("manifest: unpaired ocean series (pair '" + *temps[j].pair_id + "' vs '" + *ohcs[j].pair_id + "')");
    if (j > 0 && *temps[j].pair_id == *temps[j - 1].pair_id)
      throw input_error("manifest: ocean pair '" + *temps[j].pair_id + "' appears more than once");
  }

  std::vector<const AnomalySeries*> rows;
  for (const auto& s : gmst) rows.push_back(&s);
  for (const auto& s : temps) rows.push_back(&s);
  for (const auto& s : ohcs) rows.push_back(&s);
  rows.push_back(&total.front());

  const int n = years.second - years.first + 1;
  std::vector<int> year_list(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) year_list[static_cast<std::size_t>(t)] = years.first + t;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), n);
  std::vector<SeriesMeta> meta;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& s = *rows[r];
    bool any = false;
    for (int t = 0; t < n; ++t) {
      const double v = s.at(year_list[static_cast<std::size_t>(t)]);
      values(static_cast<Eigen::Index>(r), t) = v;
      any = any || std::isfinite(v);
    }
    if (!any) throw input_error("series '" + s.label + "' has no observations in the sample years");
    meta.push_back({s.label, s.kind, s.pair_id, s.baseline});
  }
  out.dataset.panel = ObservationPanel::from_values(year_list, std::move(values), std::move(meta));
  out.dataset.panel.validate();

  out.dataset.natural.resize(n);
  out.anthropogenic.resize(n);
  for (int t = 0; t < n; ++t) {
    const int y = year_list[static_cast<std::size_t>(t)];
    const double nv = natural.front().at(y);
    if (!std::isfinite(nv))
      throw input_error("natural forcing '" + natural.front().label + "' does not cover year " + std::to_string(y));
    out.dataset.natural(t) = nv;
    out.anthropogenic(t) = anthro.empty() ? total.front().at(y) - nv : anthro.front().at(y);
  }
  return out;
}

AssembledData assemble_panel(const Manifest& manifest) {
  if (manifest.sample_years) return assemble_panel(manifest, *manifest.sample_years);
  for (const auto& e : manifest.entries) {
    if (e.kind != SeriesKind::forcing_total) continue;
    const auto path = e.path.is_absolute() ? e.path : manifest.base_dir / e.path;
    const auto s = read_series_csv(path, e.label, e.kind);
    if (s.years.empty()) throw input_error("total-forcing series is empty");
    return assemble_panel(manifest, {s.years.front(), s.years.back()});
  }
  throw input_error("manifest needs exactly one total-forcing series");
}

}  // namespace ebmss
