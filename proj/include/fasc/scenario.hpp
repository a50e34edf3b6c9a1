#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fasc/clustering.hpp"
#include "fasc/dataset.hpp"
#include "fasc/error.hpp"

namespace fasc {

/// Shortest decimal text that parses back to the same double.
inline std::string format_real(double x) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

/// A clustering method plus its factor count (fasc only).
struct MethodSpec {
  Method method = Method::spectral;
  int r = 0;

  std::string to_string() const {
    if (method == Method::fasc) return "fasc(" + std::to_string(r) + ")";
    return fasc::to_string(method);
  }
  bool operator==(const MethodSpec&) const = default;
};

inline MethodSpec parse_method_spec(std::string_view s) {
  MethodSpec m;
  const auto open = s.find('(');
  if (open == std::string_view::npos) {
    m.method = parse_method(s);
    detail::require(m.method != Method::fasc, "method 'fasc' needs a factor count, e.g. fasc(3)");
    return m;
  }
  detail::require(s.back() == ')', "malformed method '" + std::string(s) + "'");
  m.method = parse_method(s.substr(0, open));
  detail::require(m.method == Method::fasc, "only fasc takes an argument: '" + std::string(s) + "'");
  const std::string arg(s.substr(open + 1, s.size() - open - 2));
  try {
    std::size_t used = 0;
    m.r = std::stoi(arg, &used);
    detail::require(used == arg.size() && m.r >= 0, "");
  } catch (const std::exception&) {
    throw ValidationError("bad factor count in '" + std::string(s) + "'");
  }
  return m;
}

namespace detail {

using KeyValues = std::map<std::string, std::string>;

/// `key = value` lines; '#' starts a comment; duplicate keys are errors.
inline KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    require(eq != std::string_view::npos,
            "scenario line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key(trim(view.substr(0, eq)));
    std::string value(trim(view.substr(eq + 1)));
    require(!key.empty(), "scenario line " + std::to_string(lineno) + ": empty key");
    require(kv.emplace(key, value).second, "scenario: duplicate key '" + key + "'");
  }
  return kv;
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t depth = 0, start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i < s.size() && s[i] == '(') ++depth;
    if (i < s.size() && s[i] == ')') --depth;
    if (i == s.size() || (s[i] == ',' && depth == 0)) {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline double to_real(const std::string& key, const std::string& v) {
  const auto x = parse_real(v);
  require(x.has_value(), "scenario key '" + key + "': not a number: '" + v + "'");
  return *x;
}

inline long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  require(ec == std::errc() && ptr == v.data() + v.size(),
          "scenario key '" + key + "': not an integer: '" + v + "'");
  return x;
}

inline std::uint64_t to_seed(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  require(ec == std::errc() && ptr == v.data() + v.size(),
          "scenario key '" + key + "': not an unsigned integer: '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("scenario key '" + key + "': expected true or false, got '" + v + "'");
}

/// Accepts "a, b, c" and inclusive ranges "start:step:stop" as list items.
inline std::vector<double> to_grid(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) {
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(to_real(key, item));
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    require(c2 != std::string::npos, "scenario key '" + key + "': range needs start:step:stop");
    const double start = to_real(key, std::string(trim(std::string_view(item).substr(0, c1))));
    const double step =
        to_real(key, std::string(trim(std::string_view(item).substr(c1 + 1, c2 - c1 - 1))));
    const double stop = to_real(key, std::string(trim(std::string_view(item).substr(c2 + 1))));
    require(step > 0.0 && stop >= start, "scenario key '" + key + "': empty or invalid range");
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long long i = 0; i < count; ++i) out.push_back(start + step * static_cast<double>(i));
  }
  return out;
}

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Consumes keys from a KeyValues map; whatever is left over is unknown.
class KeyReader {
 public:
  explicit KeyReader(KeyValues kv) : kv_(std::move(kv)) {}

  std::optional<std::string> take(const std::string& key) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    std::string v = it->second;
    kv_.erase(it);
    return v;
  }
  std::string need(const std::string& key) {
    auto v = take(key);
    require(v.has_value(), "scenario: missing required key '" + key + "'");
    return *v;
  }
  void finish() const {
    if (!kv_.empty()) throw ValidationError("scenario: unknown key '" + kv_.begin()->first + "'");
  }

 private:
  KeyValues kv_;
};

}  // namespace detail

/// One simulation study: a grid of noise levels (or correlation strengths for
/// the toy model), replicates per grid point and the methods to compare.
///
/// File schema (flat `key = value`, unknown keys rejected):
///   kind        simulation (default)
///   name        identifier, enters seed derivation
///   loading     strong | weak | toy
///   n, d, K     sizes; r_true factor count of the generator
///   k           embedding dimension (default K)
///   sigma_grid  list and/or start:step:stop ranges; t for the toy model
///   methods     e.g. "spectral, fasc(3), kmeans_raw, crossfit"
///   replicates  default 20
///   base_seed   default 0
///   mode        full_sample (default) | half_split, used by fasc
///   restarts    K-means restarts, default 10
struct Scenario {
  std::string name;
  ScenarioKind loading = ScenarioKind::strong;
  Dims dims;
  int k = 0;
  std::vector<double> sigma_grid;
  std::vector<MethodSpec> methods;
  int replicates = 20;
  std::uint64_t base_seed = 0;
  SplitMode mode = SplitMode::full_sample;
  int restarts = 10;

  int embedding_dim() const { return k == 0 ? dims.K : k; }

  void validate() const {
    detail::require(!name.empty(), "scenario: name must be set");
    detail::require(dims.n >= 1 && dims.d >= 1 && dims.K >= 1 && dims.r >= 0,
                    "scenario: n, d, K must be positive and r_true >= 0");
    detail::require(embedding_dim() >= 1 && embedding_dim() <= dims.K,
                    "scenario: need 1 <= k <= K");
    detail::require(!sigma_grid.empty(), "scenario: sigma_grid must be nonempty");
    for (double s : sigma_grid) detail::require(s >= 0.0, "scenario: sigma_grid must be >= 0");
    detail::require(!methods.empty(), "scenario: methods must be nonempty");
    detail::require(replicates >= 1, "scenario: replicates must be >= 1");
    detail::require(restarts >= 1, "scenario: restarts must be >= 1");
    if (loading == ScenarioKind::toy) detail::require(dims.K == 2, "scenario: toy model needs K = 2");
  }

  bool operator==(const Scenario& o) const {
    return name == o.name && loading == o.loading && dims.n == o.dims.n && dims.d == o.dims.d &&
           dims.K == o.dims.K && dims.r == o.dims.r && k == o.k && sigma_grid == o.sigma_grid &&
           methods == o.methods && replicates == o.replicates && base_seed == o.base_seed &&
           mode == o.mode && restarts == o.restarts;
  }
};

/// Real-data study. Schema:
///   kind = realdata, name, data_path, label_column, K,
///   drop_columns (list), drop_missing (bool), centralize (bool, default true),
///   drop_label_values (list), methods (kmeans_raw, spectral, crossfit, fasc),
///   r_grid (list of fasc factor counts), base_seed, restarts,
///   expected_rows / expected_cols (optional shape check after cleaning)
struct RealDataStudy {
  std::string name;
  std::string data_path;
  std::string label_column;
  int K = 2;
  CleaningRule rules{{}, false, true, {}};
  std::vector<Method> methods{Method::kmeans_raw, Method::spectral, Method::fasc};
  std::vector<int> r_grid{1};
  std::uint64_t base_seed = 0;
  int restarts = 10;
  int expected_rows = 0;
  int expected_cols = 0;

  void validate() const {
    detail::require(!name.empty(), "realdata: name must be set");
    detail::require(!data_path.empty(), "realdata: data_path must be set");
    detail::require(!label_column.empty(), "realdata: label_column must be set");
    detail::require(K >= 1, "realdata: K must be >= 1");
    detail::require(restarts >= 1, "realdata: restarts must be >= 1");
    for (int r : r_grid) detail::require(r >= 0, "realdata: r_grid entries must be >= 0");
  }
};

inline std::string scenario_kind(std::string_view text) {
  const auto kv = detail::parse_key_values(text);
  const auto it = kv.find("kind");
  return it == kv.end() ? "simulation" : it->second;
}

inline Scenario parse_scenario(std::string_view text) {
  detail::KeyReader in(detail::parse_key_values(text));
  if (const auto kind = in.take("kind"))
    detail::require(*kind == "simulation", "scenario: expected kind = simulation, got '" + *kind + "'");
  Scenario sc;
  sc.name = in.need("name");
  sc.loading = parse_scenario_kind(in.need("loading"));
  sc.dims.n = static_cast<int>(detail::to_int("n", in.need("n")));
  sc.dims.d = static_cast<int>(detail::to_int("d", in.need("d")));
  sc.dims.K = static_cast<int>(detail::to_int("K", in.need("K")));
  sc.dims.r = static_cast<int>(detail::to_int("r_true", in.need("r_true")));
  if (const auto v = in.take("k")) sc.k = static_cast<int>(detail::to_int("k", *v));
  sc.sigma_grid = detail::to_grid("sigma_grid", in.need("sigma_grid"));
  for (const auto& m : detail::split_list(in.need("methods"))) sc.methods.push_back(parse_method_spec(m));
  if (const auto v = in.take("replicates")) sc.replicates = static_cast<int>(detail::to_int("replicates", *v));
  if (const auto v = in.take("base_seed")) sc.base_seed = detail::to_seed("base_seed", *v);
  if (const auto v = in.take("mode")) sc.mode = parse_split(*v);
  if (const auto v = in.take("restarts")) sc.restarts = static_cast<int>(detail::to_int("restarts", *v));
  in.finish();
  sc.validate();
  return sc;
}

inline std::string serialize(const Scenario& sc) {
  std::vector<std::string> grid, methods;
  for (double s : sc.sigma_grid) grid.push_back(format_real(s));
  for (const auto& m : sc.methods) methods.push_back(m.to_string());
  std::ostringstream out;
  out << "kind = simulation\n"
      << "name = " << sc.name << '\n'
      << "loading = " << to_string(sc.loading) << '\n'
      << "n = " << sc.dims.n << '\n'
      << "d = " << sc.dims.d << '\n'
      << "K = " << sc.dims.K << '\n'
      << "r_true = " << sc.dims.r << '\n';
  if (sc.k != 0) out << "k = " << sc.k << '\n';
  out << "sigma_grid = " << detail::join(grid) << '\n'
      << "methods = " << detail::join(methods) << '\n'
      << "replicates = " << sc.replicates << '\n'
      << "base_seed = " << sc.base_seed << '\n'
      << "mode = " << to_string(sc.mode) << '\n'
      << "restarts = " << sc.restarts << '\n';
  return out.str();
}

inline RealDataStudy parse_realdata(std::string_view text) {
  detail::KeyReader in(detail::parse_key_values(text));
  detail::require(in.need("kind") == "realdata", "realdata: expected kind = realdata");
  RealDataStudy st;
  st.name = in.need("name");
  st.data_path = in.need("data_path");
  st.label_column = in.need("label_column");
  st.K = static_cast<int>(detail::to_int("K", in.need("K")));
  if (const auto v = in.take("drop_columns")) st.rules.drop_columns = detail::split_list(*v);
  if (const auto v = in.take("drop_missing")) st.rules.drop_rows_with_missing = detail::to_bool("drop_missing", *v);
  if (const auto v = in.take("centralize")) st.rules.centralize = detail::to_bool("centralize", *v);
  if (const auto v = in.take("drop_label_values")) st.rules.drop_label_values = detail::split_list(*v);
  if (const auto v = in.take("methods")) {
    st.methods.clear();
    for (const auto& m : detail::split_list(*v)) st.methods.push_back(parse_method(m));
  }
  if (const auto v = in.take("r_grid")) {
    st.r_grid.clear();
    for (const auto& r : detail::split_list(*v))
      st.r_grid.push_back(static_cast<int>(detail::to_int("r_grid", r)));
  }
  if (const auto v = in.take("base_seed")) st.base_seed = detail::to_seed("base_seed", *v);
  if (const auto v = in.take("restarts")) st.restarts = static_cast<int>(detail::to_int("restarts", *v));
  if (const auto v = in.take("expected_rows")) st.expected_rows = static_cast<int>(detail::to_int("expected_rows", *v));
  if (const auto v = in.take("expected_cols")) st.expected_cols = static_cast<int>(detail::to_int("expected_cols", *v));
  in.finish();
  st.validate();
  return st;
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(detail::read_file(path)); }
/// A relative data_path is resolved against the study file's directory.
inline RealDataStudy load_realdata(const std::string& path) {
  RealDataStudy st = parse_realdata(detail::read_file(path));
  const std::filesystem::path data(st.data_path);
  if (data.is_relative()) st.data_path = (std::filesystem::path(path).parent_path() / data).lexically_normal().string();
  return st;
}

}  // namespace fasc
