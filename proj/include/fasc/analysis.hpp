#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fasc/assignment.hpp"
#include "fasc/dataset.hpp"
#include "fasc/error.hpp"
#include "fasc/numerics.hpp"

namespace fasc {

// ---------------------------------------------------------------------------
// Mislabeling

/// C(p, t) = #{i : predicted_i = p, truth_i = t}.
inline Eigen::MatrixXd confusion_matrix(const Labels& predicted, const Labels& truth, int K) {
  detail::require(predicted.size() == truth.size(), "mislabeling: label vectors differ in length");
  detail::require(!predicted.empty(), "mislabeling: empty label vectors");
  detail::require(K >= 1, "mislabeling: K must be >= 1");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(K, K);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    detail::require(predicted[i] >= 0 && predicted[i] < K && truth[i] >= 0 && truth[i] < K,
                    "mislabeling: label outside [K]");
    c(predicted[i], truth[i]) += 1.0;
  }
  return c;
}

/// Exact minimum over all K! relabelings by enumeration.
inline double mislabeling_exhaustive(const Labels& predicted, const Labels& truth, int K) {
  const Eigen::MatrixXd c = confusion_matrix(predicted, truth, K);
  std::vector<int> tau(K);
  std::iota(tau.begin(), tau.end(), 0);
  double best = 0.0;
  do {
    double agree = 0.0;
    for (int t = 0; t < K; ++t) agree += c(tau[t], t);
    best = std::max(best, agree);
  } while (std::next_permutation(tau.begin(), tau.end()));
  const double n = static_cast<double>(predicted.size());
  return (n - best) / n;
}

/// Exact minimum via maximum-weight matching on the confusion matrix.
inline double mislabeling_hungarian(const Labels& predicted, const Labels& truth, int K) {
  const Eigen::MatrixXd c = confusion_matrix(predicted, truth, K);
  const auto match = min_cost_assignment(-c.transpose());
  double agree = 0.0;
  for (int t = 0; t < K; ++t) agree += c(match[t], t);
  const double n = static_cast<double>(predicted.size());
  return (n - agree) / n;
}

/// n⁻¹ min_τ |{i : predicted_i ≠ τ(truth_i)}|. Enumeration for K ≤ 8,
/// Hungarian matching above; both are exact.
inline double mislabeling(const Labels& predicted, const Labels& truth, int K) {
  return K <= 8 ? mislabeling_exhaustive(predicted, truth, K)
                : mislabeling_hungarian(predicted, truth, K);
}

/// Alphabets of different sizes are padded with empty classes.
inline double mislabeling(const Labels& predicted, int k_predicted, const Labels& truth,
                          int k_truth) {
  return mislabeling(predicted, truth, std::max(k_predicted, k_truth));
}

// ---------------------------------------------------------------------------
// Standard normal and SNR family

/// Φ(x) = ½ erfc(−x/√2), evaluated with the C library's erfc.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct SnrReport {
  std::optional<double> snr;           // μᵀΣ⁻¹μ, symmetric two-cluster specs only
  double s_quantity = 0.0;             // min gap² / ‖BBᵀ + σ²I‖
  double snr_bar = 0.0;                // min gap² / σ²
  std::optional<double> optimal_rate;  // Φ(−√snr)
};

/// BBᵀ + σ²I.
inline Eigen::MatrixXd model_covariance(const FactorMixtureSpec& spec) {
  Eigen::MatrixXd sigma = spec.sigma * spec.sigma * Eigen::MatrixXd::Identity(spec.d(), spec.d());
  if (spec.r() > 0) sigma += spec.loading * spec.loading.transpose();
  return sigma;
}

/// K = 2 with μ₂ = −μ₁ and equal weights.
inline bool is_symmetric_two_cluster(const FactorMixtureSpec& spec) {
  if (spec.K() != 2) return false;
  const double scale = std::max(1.0, spec.centroids.row(0).norm());
  return (spec.centroids.row(0) + spec.centroids.row(1)).norm() <= 1e-12 * scale &&
         std::abs(spec.weights(0) - spec.weights(1)) <= 1e-12;
}

/// min_{i≠j} ‖μ_i − μ_j‖²; zero when K = 1.
inline double min_centroid_gap_sq(const Eigen::MatrixXd& centroids) {
  if (centroids.rows() < 2) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < centroids.rows(); ++i)
    for (Eigen::Index j = i + 1; j < centroids.rows(); ++j)
      best = std::min(best, (centroids.row(i) - centroids.row(j)).squaredNorm());
  return best;
}

/// σ_max(B)², via the r×r Gram route.
inline double loading_norm_sq(const Eigen::MatrixXd& loading) {
  if (loading.cols() == 0 || loading.rows() == 0) return 0.0;
  return top_right_singular(loading, 1).values(0);
}

/// Σ⁻¹μ₁ by Cholesky solve; nullopt when Σ is singular.
inline std::optional<Eigen::VectorXd> bayes_direction(const FactorMixtureSpec& spec) {
  const Eigen::LLT<Eigen::MatrixXd> llt(model_covariance(spec));
  if (llt.info() != Eigen::Success || spec.sigma == 0.0) return std::nullopt;
  return Eigen::VectorXd(llt.solve(spec.centroids.row(0).transpose()));
}

inline SnrReport snr_report(const FactorMixtureSpec& spec) {
  spec.validate();
  SnrReport rep;
  const double gap = min_centroid_gap_sq(spec.centroids);
  const double op_norm = loading_norm_sq(spec.loading) + spec.sigma * spec.sigma;
  const double inf = std::numeric_limits<double>::infinity();
  rep.s_quantity = gap == 0.0 ? 0.0 : (op_norm > 0.0 ? gap / op_norm : inf);
  rep.snr_bar = gap == 0.0 ? 0.0 : (spec.sigma > 0.0 ? gap / (spec.sigma * spec.sigma) : inf);
  if (is_symmetric_two_cluster(spec)) {
    if (const auto z = bayes_direction(spec)) {
      rep.snr = std::max(0.0, spec.centroids.row(0).dot(*z));
    } else {
      rep.snr = inf;  // singular Σ
    }
    rep.optimal_rate = normal_cdf(-std::sqrt(*rep.snr));
  }
  return rep;
}

/// Bayes rule for two symmetric clusters: label 0 iff ⟨x, Σ⁻¹μ₁⟩ ≥ 0.
inline Labels optimal_bayes_labels(const Eigen::MatrixXd& x, const FactorMixtureSpec& spec) {
  detail::require(is_symmetric_two_cluster(spec),
                  "optimal_bayes_labels: needs K = 2 with mu_2 = -mu_1 and equal weights");
  detail::require(x.cols() == spec.d(), "optimal_bayes_labels: dimension mismatch");
  const auto z = bayes_direction(spec);
  detail::require(z.has_value(), "optimal_bayes_labels: model covariance is singular");
  const Eigen::VectorXd score = x * *z;
  Labels labels(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) labels[i] = score(i) >= 0.0 ? 0 : 1;
  return labels;
}

inline Labels optimal_bayes_labels(const Dataset& data, const FactorMixtureSpec& spec) {
  return optimal_bayes_labels(data.x(), spec);
}

// ---------------------------------------------------------------------------
// Assumption diagnostics

struct AssumptionThresholds {
  double perpendicularity_c = 0.2;
  int n = 1000;  // sample size entering log n
};

struct AssumptionReport {
  double sigma_min_B = 0.0;
  double sigma_max_B = 0.0;
  double u_top_m_norm = 0.0;  // ‖UᵀM‖
  double pervasiveness_ratio_lo = 0.0;
  double pervasiveness_ratio_hi = 0.0;
  double mean_matrix_norm = 0.0;  // ‖E[μ_y μ_yᵀ]‖
  int mean_rank = 0;
  bool weak_factor_ok = false;
  double weak_factor_lhs = 0.0;  // 3(‖E[μμᵀ]‖ + σ²), compared with σ_min²(B)
  bool perpendicularity_ok = false;
  double perpendicularity_threshold = 0.0;
  double eigen_gap = 0.0;  // λ_r(Σ) − λ_{r+1}(Σ)
  bool factor_degenerate = false;
  bool mean_degenerate = false;
};

/// E[μμᵀ] = Σ_j p_j μ_j μ_jᵀ = MΛ̃Mᵀ and BBᵀ = UΛUᵀ from the spec; the
/// population covariance spectrum comes from the d×(K+r) factor
/// [√p_j μ_j | B].
inline AssumptionReport assumption_report(const FactorMixtureSpec& spec, int k,
                                          const AssumptionThresholds& th = {}) {
  spec.validate();
  detail::require(k >= 1, "assumption_report: k must be >= 1");
  detail::require(th.n >= 2, "assumption_report: n must be >= 2");
  const int K = spec.K();
  const int d = spec.d();
  const int r = spec.r();
  AssumptionReport rep;

  Eigen::MatrixXd weighted = spec.centroids;  // rows √p_j μ_j
  for (int j = 0; j < K; ++j) weighted.row(j) *= std::sqrt(spec.weights(j));
  const int mean_dim = std::min(K, d);
  const SpectralBasis mean_basis = top_right_singular(weighted, mean_dim);
  rep.mean_matrix_norm = std::max(0.0, mean_basis.values(0));
  const double rank_floor = 1e-12 * std::max(1.0, rep.mean_matrix_norm);
  for (int j = 0; j < mean_dim; ++j) rep.mean_rank += mean_basis.values(j) > rank_floor;
  rep.mean_degenerate = rep.mean_rank == 0;

  if (r == 0) {
    rep.factor_degenerate = true;
  } else {
    const SpectralBasis u = top_right_singular(spec.loading.transpose(), std::min(r, d));
    rep.sigma_max_B = std::sqrt(std::max(0.0, u.values(0)));
    rep.sigma_min_B = std::sqrt(std::max(0.0, u.values(u.size() - 1)));
    rep.pervasiveness_ratio_lo = rep.sigma_min_B * rep.sigma_min_B / d;
    rep.pervasiveness_ratio_hi = rep.sigma_max_B * rep.sigma_max_B / d;
    if (!rep.mean_degenerate) {
      // directions beyond the rank of E[μμᵀ] are arbitrary and must not count
      const int kk = std::min(k, rep.mean_rank);
      const Eigen::MatrixXd cross = u.vectors.transpose() * mean_basis.vectors.leftCols(kk);
      rep.u_top_m_norm = std::sqrt(std::max(0.0, top_right_singular(cross, 1).values(0)));
    }
  }

  const double s2 = spec.sigma * spec.sigma;
  rep.weak_factor_lhs = 3.0 * (rep.mean_matrix_norm + s2);
  rep.weak_factor_ok = !rep.factor_degenerate && rep.weak_factor_lhs <= rep.sigma_min_B * rep.sigma_min_B;
  rep.perpendicularity_threshold =
      std::min(std::sqrt(static_cast<double>(d)) *
                   std::max(spec.sigma, 1.0 / std::sqrt(std::log(static_cast<double>(th.n)))),
               th.perpendicularity_c);
  rep.perpendicularity_ok = rep.u_top_m_norm <= rep.perpendicularity_threshold;

  if (r > 0 && r < d) {
    Eigen::MatrixXd w(K + r, d);
    w << weighted, spec.loading.transpose();
    const int m = std::min(K + r, d);
    const SpectralBasis full = top_right_singular(w, m);
    const auto lambda = [&](int j) { return j < m ? full.values(j) : 0.0; };
    rep.eigen_gap = lambda(r - 1) - lambda(r);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Spectral-clustering conditions

struct SpectralConditionReport {
  double beta = 0.0;
  double psi = std::numeric_limits<double>::quiet_NaN();  // NaN when undefined
  double rho = 0.0;
  bool psi_defined() const { return !std::isnan(psi); }
};

/// β = (K/n) min cluster count,
/// ψ = min‖θ_i − θ_j‖ / (β^{-1/2} K (1 + √(d/n)) σ),
/// ρ = σ_k([θ_{y_1}, …, θ_{y_n}]ᵀ) / ((√n + √d) σ).
inline SpectralConditionReport spectral_conditions(const Eigen::MatrixXd& centroids,
                                                   const Labels& labels, double sigma_eff, int n,
                                                   int d, int k) {
  const int K = static_cast<int>(centroids.rows());
  detail::require(!labels.empty(), "spectral_conditions: empty labels");
  detail::require(static_cast<int>(labels.size()) == n, "spectral_conditions: labels length != n");
  detail::require(sigma_eff > 0.0, "spectral_conditions: sigma_eff must be > 0");
  detail::require(k >= 1 && k <= std::min<Eigen::Index>(K, centroids.cols()),
                  "spectral_conditions: need 1 <= k <= min(K, d)");
  std::vector<int> counts(K, 0);
  for (int l : labels) {
    detail::require(l >= 0 && l < K, "spectral_conditions: label outside [K]");
    ++counts[l];
  }
  SpectralConditionReport rep;
  const int min_count = *std::min_element(counts.begin(), counts.end());
  rep.beta = static_cast<double>(K) / n * min_count;
  if (rep.beta > 0.0 && K >= 2) {
    const double gap = std::sqrt(min_centroid_gap_sq(centroids));
    rep.psi = gap / (std::pow(rep.beta, -0.5) * K * (1.0 + std::sqrt(static_cast<double>(d) / n)) *
                     sigma_eff);
  }
  Eigen::MatrixXd weighted = centroids;
  for (int j = 0; j < K; ++j) weighted.row(j) *= std::sqrt(static_cast<double>(counts[j]));
  const double sk = std::sqrt(std::max(0.0, top_right_singular(weighted, k).values(k - 1)));
  rep.rho = sk / ((std::sqrt(static_cast<double>(n)) + std::sqrt(static_cast<double>(d))) * sigma_eff);
  return rep;
}

inline SpectralConditionReport spectral_conditions(const FactorMixtureSpec& spec,
                                                   const Labels& labels, double sigma_eff, int n,
                                                   int d, int k) {
  return spectral_conditions(spec.centroids, labels, sigma_eff, n, d, k);
}

// ---------------------------------------------------------------------------

/// Eigenvalues of the mean-centered sample covariance, descending.
inline Eigen::VectorXd scree(const Dataset& data) {
  return eigenvalues_descending(centered_covariance(data.x()));
}

}  // namespace fasc
