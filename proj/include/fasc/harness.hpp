#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "fasc/analysis.hpp"
#include "fasc/clustering.hpp"
#include "fasc/dataset.hpp"
#include "fasc/error.hpp"
#include "fasc/scenario.hpp"

namespace fasc {

/// One (scenario, method, grid value, replicate) row.
struct ExperimentRecord {
  std::string scenario;
  std::string method;
  int r_alg = 0;
  double sigma = 0.0;
  int replicate = 0;
  std::uint64_t seed = 0;
  double mislabeling = 0.0;
  double objective = 0.0;
  double wall_ms = 0.0;
  double snr_bar = 0.0;
  double s_quantity = 0.0;
  std::optional<std::string> error;  // set on failed rows; numeric columns then read NA

  bool operator==(const ExperimentRecord&) const = default;
};

inline constexpr const char* kRecordHeader =
    "scenario,method,r_alg,sigma,replicate,seed,mislabeling,objective,wall_ms,snr_bar,s_quantity";

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t hash_name(const std::string& name) {
  return fnv1a(0xCBF29CE484222325ULL, name.data(), name.size());
}

}  // namespace detail

/// Seed of one replicate at one grid value: base ⊕ hash(name, value, replicate).
/// Drives data sampling and every method's K-means.
inline std::uint64_t replicate_seed(std::uint64_t base, const std::string& name, double value,
                                    int replicate) {
  std::uint64_t h = detail::hash_name(name);
  const auto bits = std::bit_cast<std::uint64_t>(value);
  h = detail::fnv1a(h, &bits, sizeof bits);
  const auto rep = static_cast<std::uint64_t>(replicate);
  h = detail::fnv1a(h, &rep, sizeof rep);
  return base ^ detail::mix64(h);
}

/// Seed of the model parameters (B, centroids) of one replicate, shared by
/// every grid value so curves over the grid are paired.
inline std::uint64_t model_seed(std::uint64_t base, const std::string& name, int replicate) {
  std::uint64_t h = detail::fnv1a(detail::hash_name(name), "model", 5);
  const auto rep = static_cast<std::uint64_t>(replicate);
  h = detail::fnv1a(h, &rep, sizeof rep);
  return base ^ detail::mix64(h);
}

/// Runs body(i) for i in [0, count) on `jobs` threads. Exceptions thrown by
/// body are rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t count, int jobs, Body&& body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct RunOptions {
  int jobs = 1;
  bool timing = false;  // off keeps wall_ms at 0 so output is reproducible
};

/// Realizes the spec and data of one replicate at one grid value.
inline std::pair<Dataset, FactorMixtureSpec> scenario_replicate(const Scenario& sc, double value,
                                                                int replicate) {
  FactorMixtureSpec spec = paper_scenario_spec(sc.loading, value, sc.dims,
                                               model_seed(sc.base_seed, sc.name, replicate));
  Dataset data = generate(spec, sc.dims.n, replicate_seed(sc.base_seed, sc.name, value, replicate));
  return {std::move(data), std::move(spec)};
}

inline ClusteringResult run_method(const MethodSpec& m, const Dataset& data, int K, int k,
                                   SplitMode mode, const KMeansConfig& kcfg) {
  switch (m.method) {
    case Method::kmeans_raw: return kmeans_raw(data.x(), K, kcfg);
    case Method::spectral: return spectral_cluster(data, K, k, kcfg);
    case Method::spectral_crossfit: return spectral_cluster_crossfit(data, K, k, kcfg);
    case Method::fasc: return fasc(data, FascConfig{m.r, K, k, mode, kcfg});
  }
  throw ValidationError("unknown method");
}

/// Every (grid value, replicate) cell runs all methods on one shared dataset.
/// Failures become error rows. Output order: grid value, replicate, method.
inline std::vector<ExperimentRecord> run_scenario(const Scenario& sc, const RunOptions& opt = {}) {
  sc.validate();
  const std::size_t cells = sc.sigma_grid.size() * static_cast<std::size_t>(sc.replicates);
  const std::size_t per_cell = sc.methods.size();
  std::vector<ExperimentRecord> records(cells * per_cell);

  parallel_for(cells, opt.jobs, [&](std::size_t cell) {
    const double value = sc.sigma_grid[cell / sc.replicates];
    const int rep = static_cast<int>(cell % sc.replicates);
    const std::uint64_t seed = replicate_seed(sc.base_seed, sc.name, value, rep);
    std::optional<std::pair<Dataset, FactorMixtureSpec>> sample;
    std::optional<SnrReport> snr;
    std::string setup_error;
    try {
      sample = scenario_replicate(sc, value, rep);
      snr = snr_report(sample->second);
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (std::size_t j = 0; j < per_cell; ++j) {
      ExperimentRecord& rec = records[cell * per_cell + j];
      const MethodSpec& m = sc.methods[j];
      rec.scenario = sc.name;
      rec.method = to_string(m.method);
      rec.r_alg = m.r;
      rec.sigma = value;
      rec.replicate = rep;
      rec.seed = seed;
      if (!sample) {
        rec.error = setup_error;
        continue;
      }
      rec.snr_bar = snr->snr_bar;
      rec.s_quantity = snr->s_quantity;
      try {
        const auto start = std::chrono::steady_clock::now();
        const KMeansConfig kcfg{sc.dims.K, sc.restarts, 300, 1e-8, seed};
        const ClusteringResult res =
            run_method(m, sample->first, sc.dims.K, sc.embedding_dim(), sc.mode, kcfg);
        const auto stop = std::chrono::steady_clock::now();
        rec.mislabeling = mislabeling(res.labels, *sample->first.labels(), sc.dims.K);
        rec.objective = res.objective;
        if (opt.timing)
          rec.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
    }
  });
  return records;
}

// ---------------------------------------------------------------------------
// Oracle (Bayes) reference curve for the symmetric two-cluster model

struct OraclePoint {
  double t = 0.0;
  double snr = 0.0;                // mean over replicates
  double optimal_rate = 0.0;       // mean Φ(−√SNR)
  double empirical_optimal = 0.0;  // mean mislabeling of the Bayes rule
  int replicates = 0;
  std::uint64_t base_seed = 0;
};

inline std::vector<OraclePoint> run_oracle_curve(const Scenario& sc, const RunOptions& opt = {}) {
  sc.validate();
  detail::require(sc.loading == ScenarioKind::toy,
                  "oracle curve needs the symmetric two-cluster toy scenario (loading = toy)");
  std::vector<OraclePoint> out(sc.sigma_grid.size());
  parallel_for(sc.sigma_grid.size(), opt.jobs, [&](std::size_t g) {
    OraclePoint p;
    p.t = sc.sigma_grid[g];
    p.replicates = sc.replicates;
    p.base_seed = sc.base_seed;
    for (int rep = 0; rep < sc.replicates; ++rep) {
      const auto [data, spec] = scenario_replicate(sc, p.t, rep);
      const SnrReport snr = snr_report(spec);
      p.snr += *snr.snr;
      p.optimal_rate += *snr.optimal_rate;
      p.empirical_optimal += mislabeling(optimal_bayes_labels(data, spec), *data.labels(), 2);
    }
    p.snr /= sc.replicates;
    p.optimal_rate /= sc.replicates;
    p.empirical_optimal /= sc.replicates;
    out[g] = p;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Real data

struct RealDataRow {
  std::string method;
  int r = 0;
  double mislabeling = 0.0;
  double objective = 0.0;
};

struct RealDataTable {
  std::string name;
  int n = 0;
  int d = 0;
  int K = 0;
  int classes = 0;
  std::uint64_t seed = 0;
  CleaningReport cleaning;
  std::vector<RealDataRow> rows;
  double baseline_random = 0.0;      // uniform random labels, identity matching
  double baseline_random_min = 0.0;  // same labels, minimized over relabelings
  Eigen::VectorXd scree;
};

/// Runs each method on already-loaded data (fasc once per r in r_grid).
inline RealDataTable run_realdata(const Dataset& data, const RealDataStudy& st) {
  detail::require(data.labels().has_value(), "realdata: dataset has no labels");
  RealDataTable t;
  t.name = st.name;
  t.n = data.n();
  t.d = data.d();
  t.K = st.K;
  t.classes = data.num_classes();
  t.seed = st.base_seed;
  const int K = std::max(st.K, data.num_classes());
  const KMeansConfig kcfg{st.K, st.restarts, 300, 1e-8, st.base_seed};
  for (Method m : st.methods) {
    if (m == Method::fasc) {
      for (int r : st.r_grid) {
        const auto res = fasc(data, FascConfig{r, st.K, 0, SplitMode::full_sample, kcfg});
        t.rows.push_back({"fasc", r, mislabeling(res.labels, *data.labels(), K), res.objective});
      }
    } else {
      const auto res = run_method(MethodSpec{m, 0}, data, st.K, st.K, SplitMode::full_sample, kcfg);
      t.rows.push_back({to_string(m), 0, mislabeling(res.labels, *data.labels(), K), res.objective});
    }
  }

  Rng rng(st.base_seed);
  Labels guess(data.n());
  std::size_t wrong = 0;
  for (int i = 0; i < data.n(); ++i) {
    guess[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(st.K)));
    wrong += guess[i] != (*data.labels())[i];
  }
  t.baseline_random = static_cast<double>(wrong) / data.n();
  t.baseline_random_min = mislabeling(guess, *data.labels(), K);
  t.scree = scree(data);
  return t;
}

inline RealDataTable run_realdata(const RealDataStudy& st, std::ostream* diagnostics = nullptr) {
  st.validate();
  LoadResult loaded = load_csv(st.data_path, st.label_column, st.rules, 0, diagnostics);
  if (st.expected_rows > 0)
    detail::require(loaded.data.n() == st.expected_rows,
                    "realdata: expected " + std::to_string(st.expected_rows) + " rows after cleaning, got " +
                        std::to_string(loaded.data.n()));
  if (st.expected_cols > 0)
    detail::require(loaded.data.d() == st.expected_cols,
                    "realdata: expected " + std::to_string(st.expected_cols) +
                        " feature columns after cleaning, got " + std::to_string(loaded.data.d()));
  RealDataTable t = run_realdata(loaded.data, st);
  t.cleaning = loaded.report;
  return t;
}

inline void emit_realdata(const RealDataTable& t, std::ostream& out) {
  out << "# study=" << t.name << " n=" << t.n << " d=" << t.d << " K=" << t.K
      << " classes=" << t.classes << " seed=" << t.seed << '\n';
  out << "method,r,mislabeling,objective\n";
  for (const auto& row : t.rows)
    out << row.method << ',' << row.r << ',' << format_real(row.mislabeling) << ','
        << format_real(row.objective) << '\n';
  out << "baseline_random,0," << format_real(t.baseline_random) << ",\n";
  out << "baseline_random_min,0," << format_real(t.baseline_random_min) << ",\n";
}

// ---------------------------------------------------------------------------
// Output

inline void emit_csv(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  out << kRecordHeader << '\n';
  for (const auto& r : records) {
    out << r.scenario << ',' << r.method << ',' << r.r_alg << ',' << format_real(r.sigma) << ','
        << r.replicate << ',' << r.seed << ',';
    if (r.error) {
      out << "NA,NA,";
    } else {
      out << format_real(r.mislabeling) << ',' << format_real(r.objective) << ',';
    }
    out << format_real(r.wall_ms) << ',' << format_real(r.snr_bar) << ','
        << format_real(r.s_quantity) << '\n';
  }
}

namespace detail {
inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}
}  // namespace detail

inline void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  auto out = detail::open_output(path);
  emit_csv(records, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

struct PlotRow {
  std::string method;
  int r_alg = 0;
  double sigma = 0.0;
  int count = 0;
  int errors = 0;
  double mean_mislabeling = 0.0;
  double se_mislabeling = 0.0;  // sample sd / √count
  double mean_objective = 0.0;
};

/// Groups successful records by (method, r_alg, sigma) in first-seen order.
inline std::vector<PlotRow> summarize(const std::vector<ExperimentRecord>& records) {
  std::vector<PlotRow> rows;
  std::map<std::tuple<std::string, int, double>, std::size_t> index;
  std::vector<std::vector<double>> values;
  for (const auto& r : records) {
    const auto key = std::make_tuple(r.method, r.r_alg, r.sigma);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      rows.push_back({r.method, r.r_alg, r.sigma});
      values.emplace_back();
    }
    PlotRow& row = rows[it->second];
    if (r.error) {
      ++row.errors;
      continue;
    }
    values[it->second].push_back(r.mislabeling);
    row.mean_objective += r.objective;
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    const auto& v = values[g];
    PlotRow& row = rows[g];
    row.count = static_cast<int>(v.size());
    if (v.empty()) continue;
    double sum = 0.0;
    for (double x : v) sum += x;
    row.mean_mislabeling = sum / v.size();
    row.mean_objective /= v.size();
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - row.mean_mislabeling) * (x - row.mean_mislabeling);
      row.se_mislabeling = std::sqrt(ss / (v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
    }
  }
  return rows;
}

inline void emit_plotdata(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  out << "method,r_alg,sigma,count,errors,mean_mislabeling,se_mislabeling,mean_objective\n";
  for (const auto& row : summarize(records))
    out << row.method << ',' << row.r_alg << ',' << format_real(row.sigma) << ',' << row.count << ','
        << row.errors << ',' << format_real(row.mean_mislabeling) << ','
        << format_real(row.se_mislabeling) << ',' << format_real(row.mean_objective) << '\n';
}

inline void emit_plotdata(const std::vector<ExperimentRecord>& records, const std::string& path) {
  auto out = detail::open_output(path);
  emit_plotdata(records, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline void emit_oracle(const std::vector<OraclePoint>& points, std::ostream& out) {
  out << "t,snr,optimal_rate,empirical_optimal,replicates,base_seed\n";
  for (const auto& p : points)
    out << format_real(p.t) << ',' << format_real(p.snr) << ',' << format_real(p.optimal_rate) << ','
        << format_real(p.empirical_optimal) << ',' << p.replicates << ',' << p.base_seed << '\n';
}

}  // namespace fasc
