#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fasc/error.hpp"
#include "fasc/random.hpp"

namespace fasc {

/// Cluster ids, 0-based. External formats (CSV, CLI output) are 1-based and
/// go through to_external()/from_external().
using Labels = std::vector<int>;

inline Labels to_external(const Labels& internal) {
  Labels out(internal);
  for (int& l : out) l += 1;
  return out;
}

inline Labels from_external(const Labels& external) {
  Labels out(external);
  for (int& l : out) {
    detail::require(l >= 1, "external label ids are 1-based, got " + std::to_string(l));
    l -= 1;
  }
  return out;
}

/// n×d observations with optional ground truth. Immutable once built.
class Dataset {
 public:
  Dataset() = default;

  /// num_classes = 0 infers K as max(label)+1.
  explicit Dataset(Eigen::MatrixXd x, std::optional<Labels> labels = std::nullopt,
                   std::vector<std::string> feature_names = {}, int num_classes = 0)
      : x_(std::move(x)), labels_(std::move(labels)), names_(std::move(feature_names)) {
    detail::require(x_.rows() >= 1 && x_.cols() >= 1, "dataset needs n >= 1 and d >= 1");
    detail::require(x_.allFinite(), "dataset contains NaN or Inf");
    detail::require(names_.empty() || names_.size() == static_cast<std::size_t>(x_.cols()),
                    "feature_names length must equal d");
    if (labels_) {
      detail::require(labels_->size() == static_cast<std::size_t>(x_.rows()),
                      "labels length must equal n");
      int max_label = -1;
      for (int l : *labels_) {
        detail::require(l >= 0, "negative label id");
        max_label = std::max(max_label, l);
      }
      if (num_classes == 0) num_classes = max_label + 1;
      detail::require(max_label < num_classes, "label outside the declared K");
      num_classes_ = num_classes;
    }
  }

  const Eigen::MatrixXd& x() const { return x_; }
  const std::optional<Labels>& labels() const { return labels_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  int n() const { return static_cast<int>(x_.rows()); }
  int d() const { return static_cast<int>(x_.cols()); }
  int num_classes() const { return num_classes_; }

  /// Same labels and names, new feature matrix (row count must match).
  Dataset with_features(Eigen::MatrixXd x) const {
    std::vector<std::string> names = x.cols() == x_.cols() ? names_ : std::vector<std::string>{};
    return Dataset(std::move(x), labels_, std::move(names), num_classes_);
  }

 private:
  Eigen::MatrixXd x_;
  std::optional<Labels> labels_;
  std::vector<std::string> names_;
  int num_classes_ = 0;
};

/// Generative parameters of x = μ_y + B f + ε.
struct FactorMixtureSpec {
  Eigen::MatrixXd centroids;  // K×d, row j is μ_j
  Eigen::MatrixXd loading;    // d×r; r = 0 means no factor component
  double sigma = 0.0;
  Eigen::VectorXd weights;    // length K
  bool centered = false;      // declares Σ_j p_j μ_j = 0

  int K() const { return static_cast<int>(centroids.rows()); }
  int d() const { return static_cast<int>(centroids.cols()); }
  int r() const { return static_cast<int>(loading.cols()); }

  void validate() const {
    detail::require(K() >= 1, "spec: K must be >= 1");
    detail::require(d() >= 1, "spec: d must be >= 1");
    detail::require(weights.size() == K(), "spec: weights length must equal K (centroid rows)");
    detail::require(loading.rows() == d() || loading.cols() == 0,
                    "spec: loading must have d rows");
    detail::require(std::isfinite(sigma) && sigma >= 0.0, "spec: sigma must be finite and >= 0");
    detail::require(centroids.allFinite() && loading.allFinite(), "spec: non-finite parameter");
    for (Eigen::Index j = 0; j < weights.size(); ++j)
      detail::require(weights(j) > 0.0, "spec: every weight must be > 0");
    detail::require(std::abs(weights.sum() - 1.0) <= 1e-12, "spec: weights must sum to 1");
    if (centered) {
      const Eigen::VectorXd mean = centroids.transpose() * weights;
      detail::require(mean.norm() <= 1e-10, "spec: declared centered but sum_j p_j mu_j != 0");
    }
  }
};

/// Everything drawn by the generator, for diagnostics that need the latent parts.
struct Realization {
  Dataset data;
  Eigen::MatrixXd factors;  // n×r
};

/// Draw order per row: label, r factor scores, d noise coordinates.
inline Realization generate_realization(const FactorMixtureSpec& spec, int n, std::uint64_t seed) {
  detail::require(n >= 1, "generate: n must be >= 1");
  spec.validate();
  const int d = spec.d();
  const int r = spec.r();
  Rng rng(seed);
  std::vector<double> w(spec.weights.data(), spec.weights.data() + spec.weights.size());

  Eigen::MatrixXd x(n, d);
  Eigen::MatrixXd f(n, r);
  Labels y(n);
  Eigen::VectorXd fi(r);
  Eigen::VectorXd eps(d);
  for (int i = 0; i < n; ++i) {
    y[i] = static_cast<int>(rng.categorical(w));
    for (int a = 0; a < r; ++a) fi(a) = rng.normal();
    for (int c = 0; c < d; ++c) eps(c) = spec.sigma * rng.normal();
    Eigen::VectorXd row = spec.centroids.row(y[i]).transpose() + eps;
    if (r > 0) row += spec.loading * fi;
    x.row(i) = row.transpose();
    f.row(i) = fi.transpose();
  }
  return {Dataset(std::move(x), std::move(y), {}, spec.K()), std::move(f)};
}

inline Dataset generate(const FactorMixtureSpec& spec, int n, std::uint64_t seed) {
  return generate_realization(spec, n, seed).data;
}

enum class ScenarioKind { strong, weak, toy };

inline ScenarioKind parse_scenario_kind(std::string_view name) {
  if (name == "strong") return ScenarioKind::strong;
  if (name == "weak") return ScenarioKind::weak;
  if (name == "toy") return ScenarioKind::toy;
  throw ValidationError("unknown scenario name '" + std::string(name) +
                        "' (expected strong, weak or toy)");
}

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::strong: return "strong";
    case ScenarioKind::weak: return "weak";
    case ScenarioKind::toy: return "toy";
  }
  return "?";
}

struct Dims {
  int n = 0;
  int d = 0;
  int K = 0;
  int r = 0;
};

/// Builds the generative parameters of a named simulation recipe.
///
/// strong: rows of B iid N(0, I_r); θ_j iid N(0, I_d/d); μ_j = θ_j − mean(θ);
///         equal weights; noise level `level`.
/// weak:   as strong with rows of B scaled by 1/√d.
/// toy:    two clusters μ = ±(10, 0, …, 0), loading √t·B with rows of B iid
///         N(0, I_r), σ = 1, so Σ = tBBᵀ + I; `level` is t and K must be 2.
inline FactorMixtureSpec paper_scenario_spec(ScenarioKind kind, double level, const Dims& dims,
                                             std::uint64_t seed) {
  detail::require(dims.n >= 1 && dims.d >= 1 && dims.K >= 1 && dims.r >= 0,
                  "scenario dims must be positive");
  detail::require(std::isfinite(level) && level >= 0.0, "scenario noise level must be >= 0");
  Rng rng(seed);
  const int d = dims.d;
  FactorMixtureSpec spec;
  spec.loading.resize(d, dims.r);
  for (int i = 0; i < d; ++i)
    for (int a = 0; a < dims.r; ++a) spec.loading(i, a) = rng.normal();

  if (kind == ScenarioKind::toy) {
    detail::require(dims.K == 2, "toy scenario has exactly K = 2 clusters");
    spec.loading *= std::sqrt(level);
    spec.centroids = Eigen::MatrixXd::Zero(2, d);
    spec.centroids(0, 0) = 10.0;
    spec.centroids(1, 0) = -10.0;
    spec.sigma = 1.0;
  } else {
    if (kind == ScenarioKind::weak) spec.loading /= std::sqrt(static_cast<double>(d));
    Eigen::MatrixXd theta(dims.K, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int j = 0; j < dims.K; ++j)
      for (int c = 0; c < d; ++c) theta(j, c) = scale * rng.normal();
    const Eigen::RowVectorXd mean = theta.colwise().mean();
    spec.centroids = theta.rowwise() - mean;
    spec.sigma = level;
  }
  spec.weights = Eigen::VectorXd::Constant(dims.K, 1.0 / dims.K);
  spec.centered = true;
  return spec;
}

/// Spec construction and sampling use decorrelated sub-seeds of `seed`.
inline std::pair<Dataset, FactorMixtureSpec> generate_paper_scenario(ScenarioKind kind, double level,
                                                                     const Dims& dims,
                                                                     std::uint64_t seed) {
  FactorMixtureSpec spec = paper_scenario_spec(kind, level, dims, seed);
  Dataset data = generate(spec, dims.n, seed ^ 0x9E3779B97F4A7C15ULL);
  return {std::move(data), std::move(spec)};
}

inline std::pair<Dataset, FactorMixtureSpec> generate_paper_scenario(std::string_view name,
                                                                     double level,
                                                                     const Dims& dims,
                                                                     std::uint64_t seed) {
  return generate_paper_scenario(parse_scenario_kind(name), level, dims, seed);
}

/// First half holds rows [0, ⌊n/2⌋), second the rest.
inline std::pair<Dataset, Dataset> split_halves(const Dataset& data) {
  detail::require(data.n() >= 2, "split_halves needs n >= 2");
  const int first = data.n() / 2;
  const int second = data.n() - first;
  std::optional<Labels> la, lb;
  if (data.labels()) {
    la = Labels(data.labels()->begin(), data.labels()->begin() + first);
    lb = Labels(data.labels()->begin() + first, data.labels()->end());
  }
  return {Dataset(data.x().topRows(first), std::move(la), data.feature_names(), data.num_classes()),
          Dataset(data.x().bottomRows(second), std::move(lb), data.feature_names(),
                  data.num_classes())};
}

inline Dataset concat_rows(const Dataset& a, const Dataset& b) {
  detail::require(a.d() == b.d(), "concat_rows: column counts differ");
  Eigen::MatrixXd x(a.n() + b.n(), a.d());
  x << a.x(), b.x();
  std::optional<Labels> labels;
  if (a.labels() && b.labels()) {
    labels = *a.labels();
    labels->insert(labels->end(), b.labels()->begin(), b.labels()->end());
  }
  return Dataset(std::move(x), std::move(labels), a.feature_names(),
                 std::max(a.num_classes(), b.num_classes()));
}

// ---------------------------------------------------------------------------
// CSV ingestion

struct CleaningRule {
  std::vector<std::string> drop_columns;
  bool drop_rows_with_missing = false;
  bool centralize = false;
  /// Rows whose label cell equals one of these are removed.
  std::vector<std::string> drop_label_values;
};

struct CleaningReport {
  std::size_t rows_kept = 0;
  std::size_t rows_dropped = 0;
  std::size_t cols_dropped = 0;

  std::string to_string() const {
    return "cleaning rows_kept=" + std::to_string(rows_kept) +
           " rows_dropped=" + std::to_string(rows_dropped) +
           " cols_dropped=" + std::to_string(cols_dropped);
  }
};

/// Header plus string cells; `line` keeps each row's 1-based file line.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;

  bool operator==(const RawTable&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_record(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.emplace_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  out.emplace_back(trim(cell));
  return out;
}

inline char detect_delimiter(std::string_view header) {
  std::size_t commas = 0, semis = 0;
  bool quoted = false;
  for (char c : header) {
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    commas += c == ',';
    semis += c == ';';
  }
  if (commas > 0 && semis > 0 && commas == semis)
    throw ValidationError("cannot auto-detect delimiter (equal commas and semicolons in header); "
                          "pass it explicitly");
  return semis > commas ? ';' : ',';
}

inline bool is_missing(std::string_view cell) {
  cell = trim(cell);
  return cell.empty() || cell == "NA" || cell == "NaN";
}

inline std::optional<double> parse_real(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

inline std::size_t column_index(const RawTable& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw ValidationError("column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - t.header.begin());
}

}  // namespace detail

/// Parses delimiter-separated text with a header row. Leading lines starting
/// with '#' and blank lines are skipped. delimiter = 0 auto-detects ',' or ';'.
inline RawTable parse_table(std::istream& in, char delimiter = 0) {
  RawTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    if (!have_header) {
      if (view.front() == '#') continue;
      if (delimiter == 0) delimiter = detail::detect_delimiter(view);
      t.header = detail::split_record(view, delimiter);
      have_header = true;
      continue;
    }
    auto cells = detail::split_record(view, delimiter);
    if (cells.size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       lineno, cells.size());
    t.rows.push_back(std::move(cells));
    t.line.push_back(lineno);
  }
  if (!have_header) throw ValidationError("input has no header row");
  return t;
}

inline RawTable read_table(const std::string& path, char delimiter = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_table(in, delimiter);
}

/// Column drops, label-value row filter, then missing-row drop. Columns named
/// in drop_columns must exist.
inline RawTable clean_table(const RawTable& table, const std::optional<std::string>& label_column,
                            const CleaningRule& rule, CleaningReport* report = nullptr) {
  std::vector<bool> drop(table.header.size(), false);
  for (const auto& name : rule.drop_columns) drop[detail::column_index(table, name)] = true;
  std::optional<std::size_t> label_idx;
  if (label_column) {
    label_idx = detail::column_index(table, *label_column);
    detail::require(!drop[*label_idx], "label column '" + *label_column + "' is also dropped");
  }

  RawTable out;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (!drop[c]) out.header.push_back(table.header[c]);

  std::size_t dropped_rows = 0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (label_idx && !rule.drop_label_values.empty() &&
        std::find(rule.drop_label_values.begin(), rule.drop_label_values.end(),
                  row[*label_idx]) != rule.drop_label_values.end()) {
      ++dropped_rows;
      continue;
    }
    bool missing = false;
    std::vector<std::string> kept;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (drop[c]) continue;
      missing = missing || detail::is_missing(row[c]);
      kept.push_back(row[c]);
    }
    if (rule.drop_rows_with_missing && missing) {
      ++dropped_rows;
      continue;
    }
    out.rows.push_back(std::move(kept));
    out.line.push_back(table.line[i]);
  }
  if (report) {
    report->rows_kept = out.rows.size();
    report->rows_dropped = dropped_rows;
    report->cols_dropped = rule.drop_columns.size();
  }
  return out;
}

struct LoadResult {
  Dataset data;
  CleaningReport report;
  std::vector<std::string> label_names;  // index = internal label id
};

/// Converts a cleaned table to a Dataset. Label strings map to ids in sorted
/// order. Column means are subtracted when `centralize` is set.
inline LoadResult table_to_dataset(const RawTable& table,
                                   const std::optional<std::string>& label_column,
                                   bool centralize) {
  std::optional<std::size_t> label_idx;
  if (label_column) label_idx = detail::column_index(table, *label_column);
  std::vector<std::size_t> features;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (label_idx && c == *label_idx) continue;
    features.push_back(c);
    names.push_back(table.header[c]);
  }
  detail::require(!features.empty(), "no feature columns left after cleaning");
  detail::require(!table.rows.empty(), "no rows left after cleaning");

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(features.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    for (std::size_t j = 0; j < features.size(); ++j) {
      const std::string& cell = row[features[j]];
      if (detail::is_missing(cell))
        throw ParseError("missing value in column '" + table.header[features[j]] + "'",
                         table.line[i], features[j] + 1);
      const auto v = detail::parse_real(cell);
      if (!v)
        throw ParseError("non-numeric cell '" + cell + "' in column '" +
                             table.header[features[j]] + "'",
                         table.line[i], features[j] + 1);
      x(i, static_cast<Eigen::Index>(j)) = *v;
    }
  }
  if (centralize) x.rowwise() -= x.colwise().mean();

  LoadResult result;
  std::optional<Labels> labels;
  if (label_idx) {
    std::map<std::string, int> ids;
    for (const auto& row : table.rows) ids.emplace(row[*label_idx], 0);
    int next = 0;
    for (auto& [name, id] : ids) {
      id = next++;
      result.label_names.push_back(name);
    }
    labels.emplace();
    for (const auto& row : table.rows) labels->push_back(ids.at(row[*label_idx]));
  }
  result.data = Dataset(std::move(x), std::move(labels), std::move(names),
                        static_cast<int>(result.label_names.size()));
  result.report.rows_kept = table.rows.size();
  return result;
}

/// Reads, cleans and converts a CSV file. The one-line cleaning report is
/// written to `diagnostics` when given.
inline LoadResult load_csv(const std::string& path, const std::optional<std::string>& label_column,
                           const CleaningRule& rule, char delimiter = 0,
                           std::ostream* diagnostics = nullptr) {
  const RawTable raw = read_table(path, delimiter);
  CleaningReport report;
  const RawTable cleaned = clean_table(raw, label_column, rule, &report);
  LoadResult result = table_to_dataset(cleaned, label_column, rule.centralize);
  result.report = report;
  if (diagnostics) *diagnostics << report.to_string() << '\n';
  return result;
}

}  // namespace fasc
