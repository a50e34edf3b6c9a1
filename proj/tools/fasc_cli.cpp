// Command-line front end: data generation, clustering, simulation sweeps,
// the Bayes reference curve, real-data studies and model diagnostics.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "fasc/fasc.hpp"

namespace {

using nlohmann::json;
using namespace fasc;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* key, Eigen::Index cols_if_empty = 0) {
  if (!j.is_array()) throw ValidationError(std::string("spec: '") + key + "' must be an array of rows");
  if (j.empty()) return Eigen::MatrixXd(0, cols_if_empty);
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols)
      throw ValidationError(std::string("spec: '") + key + "' rows must have equal length");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json spec_to_json(const FactorMixtureSpec& s) {
  json w = json::array();
  for (Eigen::Index i = 0; i < s.weights.size(); ++i) w.push_back(s.weights(i));
  return {{"centroids", matrix_to_json(s.centroids)},
          {"loading", matrix_to_json(s.loading)},
          {"sigma", s.sigma},
          {"weights", w},
          {"centered", s.centered}};
}

FactorMixtureSpec spec_from_json(const json& j) {
  try {
    FactorMixtureSpec s;
    s.centroids = matrix_from_json(j.at("centroids"), "centroids");
    s.loading = j.contains("loading") ? matrix_from_json(j.at("loading"), "loading")
                                      : Eigen::MatrixXd(s.centroids.cols(), 0);
    if (s.loading.rows() == 0) s.loading.resize(s.centroids.cols(), 0);
    s.sigma = j.at("sigma").get<double>();
    const int K = static_cast<int>(s.centroids.rows());
    s.weights = Eigen::VectorXd::Constant(K, 1.0 / K);
    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      if (static_cast<int>(w.size()) != K) throw ValidationError("spec: weights length != K");
      for (int i = 0; i < K; ++i) s.weights(i) = w[i].get<double>();
    }
    s.centered = j.value("centered", false);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("spec: ") + e.what());
  }
}

FactorMixtureSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read spec '" + path + "'");
  try {
    return spec_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ValidationError("spec '" + path + "': " + e.what());
  }
}

/// Writes to `path`, or stdout for "-" / empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw IoError("cannot write '" + path + "'");
    }
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_dataset(std::ostream& out, const Dataset& data, std::uint64_t seed) {
  out << "# seed=" << seed << '\n';
  for (int j = 0; j < data.d(); ++j) out << (j ? "," : "") << "x" << (j + 1);
  if (data.labels()) out << ",label";
  out << '\n';
  const auto ext = data.labels() ? to_external(*data.labels()) : Labels{};
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.d(); ++j) out << (j ? "," : "") << format_real(data.x()(i, j));
    if (data.labels()) out << ',' << ext[i];
    out << '\n';
  }
}

std::optional<std::string> label_option(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

int run(int argc, char** argv) {
  CLI::App app{"Factor-adjusted spectral clustering toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;

  // generate ------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "Sample a synthetic data set as CSV");
  std::string gen_scenario = "strong", gen_out, gen_spec_in, gen_spec_out;
  double gen_level = 0.1;
  Dims gen_dims{1000, 100, 5, 3};
  gen->add_option("--scenario", gen_scenario, "strong | weak | toy")->capture_default_str();
  gen->add_option("--level", gen_level, "sigma (strong/weak) or t (toy)")->capture_default_str();
  gen->add_option("--n", gen_dims.n)->capture_default_str();
  gen->add_option("--d", gen_dims.d)->capture_default_str();
  gen->add_option("--K", gen_dims.K)->capture_default_str();
  gen->add_option("--r", gen_dims.r, "factor count")->capture_default_str();
  gen->add_option("--spec", gen_spec_in, "sample from a JSON spec instead of a scenario");
  gen->add_option("--spec-out", gen_spec_out, "write the realized spec as JSON");
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("-o,--out", gen_out, "output CSV (default stdout)");

  // cluster -------------------------------------------------------------
  auto* clu = app.add_subcommand("cluster", "Cluster the rows of a CSV file");
  std::string clu_in, clu_out, clu_method = "fasc", clu_split = "full_sample", clu_label;
  int clu_K = 2, clu_k = 0, clu_r = 1, clu_restarts = 10;
  clu->add_option("input", clu_in, "CSV with numeric feature columns")->required();
  clu->add_option("--method", clu_method, "kmeans_raw | spectral | crossfit | fasc")->capture_default_str();
  clu->add_option("--K", clu_K, "number of clusters")->capture_default_str();
  clu->add_option("--k", clu_k, "embedding dimension (0: K)")->capture_default_str();
  clu->add_option("--r", clu_r, "factor count removed by fasc")->capture_default_str();
  clu->add_option("--split", clu_split, "full_sample | half_split")->capture_default_str();
  clu->add_option("--restarts", clu_restarts)->capture_default_str();
  clu->add_option("--label-column", clu_label, "ground-truth column; reports mislabeling");
  clu->add_option("--seed", seed)->capture_default_str();
  clu->add_option("-o,--out", clu_out, "labels CSV (default stdout)");

  // simulate ------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "Run a scenario file and write per-replicate records");
  std::string sim_scenario, sim_out, sim_plot;
  int jobs = 1;
  bool timing = false;
  std::optional<std::uint64_t> sim_seed;
  std::optional<int> sim_reps;
  sim->add_option("--scenario", sim_scenario, "scenario file")->required();
  sim->add_option("-o,--out", sim_out, "records CSV (default stdout)");
  sim->add_option("--plotdata", sim_plot, "grouped means and standard errors");
  sim->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  sim->add_option("--seed", sim_seed, "override base_seed");
  sim->add_option("--replicates", sim_reps, "override replicates");
  sim->add_flag("--timing", timing, "fill wall_ms (output is then not reproducible)");

  // oracle --------------------------------------------------------------
  auto* ora = app.add_subcommand("oracle", "Bayes reference curve of a two-cluster toy scenario");
  std::string ora_scenario, ora_out;
  std::optional<std::uint64_t> ora_seed;
  std::optional<int> ora_reps;
  ora->add_option("--scenario", ora_scenario, "scenario file with loading = toy")->required();
  ora->add_option("-o,--out", ora_out);
  ora->add_option("--jobs", jobs)->capture_default_str();
  ora->add_option("--seed", ora_seed, "override base_seed");
  ora->add_option("--replicates", ora_reps, "override replicates");

  // realdata ------------------------------------------------------------
  auto* real = app.add_subcommand("realdata", "Ingest a labelled table and compare methods");
  std::string real_study, real_out, real_scree, real_data;
  std::optional<std::uint64_t> real_seed;
  real->add_option("--study", real_study, "study file (kind = realdata)")->required();
  real->add_option("--data", real_data, "override data_path");
  real->add_option("-o,--out", real_out);
  real->add_option("--scree-out", real_scree, "write the scree vector");
  real->add_option("--seed", real_seed, "override base_seed");

  // scree ---------------------------------------------------------------
  auto* scr = app.add_subcommand("scree", "Eigenvalues of the centered sample covariance");
  std::string scr_in, scr_label, scr_out;
  std::vector<std::string> scr_drop;
  scr->add_option("input", scr_in)->required();
  scr->add_option("--label-column", scr_label, "column excluded from the features");
  scr->add_option("--drop", scr_drop, "columns to drop");
  scr->add_option("-o,--out", scr_out);

  // diagnose ------------------------------------------------------------
  auto* dia = app.add_subcommand("diagnose", "Assumption and spectral-condition report for a model");
  std::string dia_spec, dia_scenario;
  double dia_level = 0.1;
  Dims dia_dims{1000, 100, 5, 3};
  int dia_k = 0;
  double dia_c = 0.2;
  dia->add_option("--spec", dia_spec, "JSON spec (centroids, loading, sigma, weights, centered)");
  dia->add_option("--scenario", dia_scenario, "strong | weak | toy, used without --spec");
  dia->add_option("--level", dia_level)->capture_default_str();
  dia->add_option("--n", dia_dims.n, "sample size for log n and the realized labels")->capture_default_str();
  dia->add_option("--d", dia_dims.d)->capture_default_str();
  dia->add_option("--K", dia_dims.K)->capture_default_str();
  dia->add_option("--r", dia_dims.r)->capture_default_str();
  dia->add_option("--k", dia_k, "embedding dimension (0: K)")->capture_default_str();
  dia->add_option("--perp-c", dia_c, "cap of the perpendicularity threshold")->capture_default_str();
  dia->add_option("--seed", seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*gen) {
    FactorMixtureSpec spec;
    Dataset data = [&] {
      if (!gen_spec_in.empty()) {
        spec = load_spec(gen_spec_in);
        return generate(spec, gen_dims.n, seed);
      }
      auto [d, s] = generate_paper_scenario(parse_scenario_kind(gen_scenario), gen_level, gen_dims, seed);
      spec = std::move(s);
      return std::move(d);
    }();
    Output out(gen_out);
    write_dataset(out.get(), data, seed);
    if (!gen_spec_out.empty()) {
      Output spec_out(gen_spec_out);
      json j = spec_to_json(spec);
      j["seed"] = seed;
      spec_out.get() << j.dump(2) << '\n';
    }
    return 0;
  }

  if (*clu) {
    LoadResult loaded = load_csv(clu_in, label_option(clu_label), CleaningRule{{}, false, false, {}}, 0, &std::cerr);
    const Method method = parse_method(clu_method);
    const SplitMode split = parse_split(clu_split);
    const int k = clu_k == 0 ? clu_K : clu_k;
    KMeansConfig kcfg{clu_K, clu_restarts, 300, 1e-8, seed};
    ClusteringResult res;
    switch (method) {
      case Method::kmeans_raw: res = kmeans_raw(loaded.data.x(), clu_K, kcfg); break;
      case Method::spectral: res = spectral_cluster(loaded.data, clu_K, k, kcfg); break;
      case Method::spectral_crossfit: res = spectral_cluster_crossfit(loaded.data, clu_K, k, kcfg); break;
      case Method::fasc: res = fasc::fasc(loaded.data, FascConfig{clu_r, clu_K, k, split, kcfg}); break;
    }
    std::ostringstream head;
    head << "# method=" << to_string(method);
    if (method == Method::fasc) head << " r=" << clu_r << " mode=" << to_string(split);
    head << " K=" << clu_K << " k=" << k << " seed=" << seed << " objective=" << format_real(res.objective);
    if (loaded.data.labels()) {
      const int K = std::max(clu_K, loaded.data.num_classes());
      head << " mislabeling=" << format_real(mislabeling(res.labels, *loaded.data.labels(), K));
    }
    std::cerr << head.str() << '\n';
    Output out(clu_out);
    out.get() << head.str() << "\nlabel\n";
    for (int l : to_external(res.labels)) out.get() << l << '\n';
    return 0;
  }

  if (*sim) {
    Scenario sc = load_scenario(sim_scenario);
    if (sim_seed) sc.base_seed = *sim_seed;
    if (sim_reps) sc.replicates = *sim_reps;
    const auto records = run_scenario(sc, RunOptions{jobs, timing});
    Output out(sim_out);
    out.get() << "# scenario=" << sc.name << " base_seed=" << sc.base_seed << " mode=" << to_string(sc.mode)
              << '\n';
    emit_csv(records, out.get());
    if (!sim_plot.empty()) emit_plotdata(records, sim_plot);
    std::size_t failed = 0;
    for (const auto& r : records) failed += r.error.has_value();
    if (failed) std::cerr << failed << " of " << records.size() << " records failed\n";
    return 0;
  }

  if (*ora) {
    Scenario sc = load_scenario(ora_scenario);
    if (ora_seed) sc.base_seed = *ora_seed;
    if (ora_reps) sc.replicates = *ora_reps;
    Output out(ora_out);
    out.get() << "# scenario=" << sc.name << " base_seed=" << sc.base_seed << '\n';
    emit_oracle(run_oracle_curve(sc, RunOptions{jobs, false}), out.get());
    return 0;
  }

  if (*real) {
    RealDataStudy st = load_realdata(real_study);
    if (!real_data.empty()) st.data_path = real_data;
    if (real_seed) st.base_seed = *real_seed;
    const RealDataTable t = run_realdata(st, &std::cerr);
    std::cerr << "cleaning: " << t.cleaning.to_string() << '\n';
    Output out(real_out);
    emit_realdata(t, out.get());
    if (!real_scree.empty()) {
      Output s(real_scree);
      s.get() << "# study=" << t.name << " seed=" << t.seed << "\nindex,eigenvalue\n";
      for (Eigen::Index i = 0; i < t.scree.size(); ++i) s.get() << i + 1 << ',' << format_real(t.scree(i)) << '\n';
    }
    return 0;
  }

  if (*scr) {
    CleaningRule rule{scr_drop, true, true, {}};
    LoadResult loaded = load_csv(scr_in, label_option(scr_label), rule, 0, &std::cerr);
    const Eigen::VectorXd ev = scree(loaded.data);
    Output out(scr_out);
    out.get() << "index,eigenvalue\n";
    for (Eigen::Index i = 0; i < ev.size(); ++i) out.get() << i + 1 << ',' << format_real(ev(i)) << '\n';
    return 0;
  }

  if (*dia) {
    FactorMixtureSpec spec;
    if (!dia_spec.empty()) {
      spec = load_spec(dia_spec);
    } else if (!dia_scenario.empty()) {
      spec = paper_scenario_spec(parse_scenario_kind(dia_scenario), dia_level, dia_dims, seed);
    } else {
      throw ValidationError("diagnose needs --spec or --scenario");
    }
    const int k = dia_k == 0 ? spec.K() : dia_k;
    const AssumptionReport a = assumption_report(spec, k, AssumptionThresholds{dia_c, dia_dims.n});
    const Dataset sample = generate(spec, dia_dims.n, seed);
    const double sigma_spectral = std::sqrt(model_covariance(spec).selfadjointView<Eigen::Lower>().operatorNorm());
    std::optional<SpectralConditionReport> fasc_cond;
    if (spec.sigma > 0.0)
      fasc_cond = spectral_conditions(spec, *sample.labels(), spec.sigma, dia_dims.n, spec.d(), k);
    std::optional<SpectralConditionReport> raw_cond;
    if (sigma_spectral > 0.0)
      raw_cond = spectral_conditions(spec, *sample.labels(), sigma_spectral, dia_dims.n, spec.d(), k);
    const SnrReport snr = snr_report(spec);
    auto& o = std::cout;
    o << std::boolalpha;
    const auto kv = [&](const char* key, auto value) { o << key << '=' << value << '\n'; };
    const auto real = [&](const char* key, double v) { kv(key, format_real(v)); };
    kv("seed", seed);
    kv("n", dia_dims.n);
    kv("d", spec.d());
    kv("K", spec.K());
    kv("r", spec.r());
    kv("k", k);
    real("sigma", spec.sigma);
    real("sigma_min_B", a.sigma_min_B);
    real("sigma_max_B", a.sigma_max_B);
    real("u_top_m_norm", a.u_top_m_norm);
    real("pervasiveness_ratio_lo", a.pervasiveness_ratio_lo);
    real("pervasiveness_ratio_hi", a.pervasiveness_ratio_hi);
    real("mean_matrix_norm", a.mean_matrix_norm);
    kv("mean_rank", a.mean_rank);
    kv("weak_factor_ok", a.weak_factor_ok);
    real("weak_factor_lhs", a.weak_factor_lhs);
    kv("perpendicularity_ok", a.perpendicularity_ok);
    real("perpendicularity_threshold", a.perpendicularity_threshold);
    real("eigen_gap", a.eigen_gap);
    kv("factor_degenerate", a.factor_degenerate);
    kv("mean_degenerate", a.mean_degenerate);
    real("snr_bar", snr.snr_bar);
    real("s_quantity", snr.s_quantity);
    if (snr.snr) real("snr", *snr.snr);
    if (snr.optimal_rate) real("optimal_rate", *snr.optimal_rate);
    // residual: σ after factor removal; raw: ‖BBᵀ + σ²I‖^½ seen by plain spectral
    const auto conditions = [&](const std::string& tag, const std::optional<SpectralConditionReport>& c) {
      if (!c) {
        o << "conditions_" << tag << "=undefined\n";
        return;
      }
      o << "beta_" << tag << '=' << format_real(c->beta) << '\n';
      o << "psi_" << tag << '=' << (c->psi_defined() ? format_real(c->psi) : "undefined") << '\n';
      o << "rho_" << tag << '=' << format_real(c->rho) << '\n';
    };
    conditions("residual", fasc_cond);
    conditions("raw", raw_cond);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const fasc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
