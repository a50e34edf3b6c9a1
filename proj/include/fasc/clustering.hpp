#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fasc/assignment.hpp"
#include "fasc/dataset.hpp"
#include "fasc/error.hpp"
#include "fasc/kmeans.hpp"
#include "fasc/numerics.hpp"

namespace fasc {

enum class Method { kmeans_raw, spectral, spectral_crossfit, fasc };
enum class SplitMode { half_split, full_sample };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kmeans_raw: return "kmeans_raw";
    case Method::spectral: return "spectral";
    case Method::spectral_crossfit: return "crossfit";
    case Method::fasc: return "fasc";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "kmeans_raw" || s == "kmeans") return Method::kmeans_raw;
  if (s == "spectral") return Method::spectral;
  if (s == "crossfit" || s == "spectral_crossfit") return Method::spectral_crossfit;
  if (s == "fasc") return Method::fasc;
  throw ValidationError("unknown method '" + std::string(s) + "'");
}

inline const char* to_string(SplitMode m) {
  return m == SplitMode::half_split ? "half_split" : "full_sample";
}

inline SplitMode parse_split(std::string_view s) {
  if (s == "half_split") return SplitMode::half_split;
  if (s == "full_sample") return SplitMode::full_sample;
  throw ValidationError("unknown split mode '" + std::string(s) + "'");
}

struct ClusteringResult {
  Labels labels;
  Eigen::MatrixXd embedded_centers;  // K×k
  Method method = Method::spectral;
  std::optional<SpectralBasis> basis;         // V̂
  std::optional<SpectralBasis> factor_basis;  // V̂_r (fasc only)
  double objective = 0.0;
};

struct FascConfig {
  int r = 0;
  int K = 2;
  int k = 0;  // 0 means k = K
  SplitMode split = SplitMode::full_sample;
  KMeansConfig kmeans;

  int embedding_dim() const { return k == 0 ? K : k; }

  void validate(int d) const {
    detail::require(K >= 1, "fasc: K must be >= 1");
    detail::require(embedding_dim() >= 1 && embedding_dim() <= K, "fasc: need 1 <= k <= K");
    detail::require(r >= 0, "fasc: r must be >= 0");
    detail::require(r + embedding_dim() <= d, "fasc: need r + k <= d");
  }
};

inline ClusteringResult kmeans_raw(const Eigen::MatrixXd& x, int K, KMeansConfig cfg) {
  cfg.K = K;
  KMeansResult km = kmeans(x, cfg);
  ClusteringResult out;
  out.method = Method::kmeans_raw;
  out.labels = std::move(km.labels);
  out.embedded_centers = std::move(km.centers);
  out.objective = km.objective;
  return out;
}

/// Embeds rows on the top-k right singular subspace and runs K-means there.
inline ClusteringResult spectral_cluster(const Eigen::MatrixXd& x, int K, int k, KMeansConfig cfg) {
  detail::require(k >= 1 && k <= std::min<Eigen::Index>(K, x.cols()),
                  "spectral_cluster: need 1 <= k <= min(K, d)");
  detail::require(x.rows() >= K, "spectral_cluster: need n >= K");
  cfg.K = K;
  SpectralBasis basis = top_right_singular(x, k);
  KMeansResult km = kmeans(x * basis.vectors, cfg);
  ClusteringResult out;
  out.method = Method::spectral;
  out.labels = std::move(km.labels);
  out.embedded_centers = std::move(km.centers);
  out.basis = std::move(basis);
  out.objective = km.objective;
  return out;
}

inline ClusteringResult spectral_cluster(const Dataset& data, int K, int k, const KMeansConfig& cfg) {
  return spectral_cluster(data.x(), K, k, cfg);
}

namespace detail {

/// Maps labels of the second half onto the first half's alphabet by
/// minimum-cost matching of centers in the ambient space (Euclidean cost).
inline std::vector<int> match_centers(const Eigen::MatrixXd& first, const Eigen::MatrixXd& second) {
  Eigen::MatrixXd cost(second.rows(), first.rows());
  for (Eigen::Index a = 0; a < second.rows(); ++a)
    for (Eigen::Index b = 0; b < first.rows(); ++b)
      cost(a, b) = (second.row(a) - first.row(b)).norm();
  return min_cost_assignment(cost);
}

inline Labels join_halves(const Labels& first, const Labels& second, const std::vector<int>& map) {
  Labels out(first);
  out.reserve(first.size() + second.size());
  for (int l : second) out.push_back(map[l]);
  return out;
}

}  // namespace detail

/// Cross-fitted spectral clustering: each half is embedded with the basis of
/// the other half; alphabets are reconciled through back-projected centers.
inline ClusteringResult spectral_cluster_crossfit(const Dataset& data, int K, int k,
                                                  KMeansConfig cfg) {
  detail::require(data.n() >= 2 * K, "crossfit: need n >= 2K");
  const auto [first, second] = split_halves(data);
  detail::require(k >= 1 && k <= std::min({K, first.n(), data.d()}),
                  "crossfit: need 1 <= k <= min(K, n/2, d)");
  cfg.K = K;

  SpectralBasis basis_second = top_right_singular(second.x(), k);
  SpectralBasis basis_first = top_right_singular(first.x(), k);
  KMeansResult km_first = kmeans(first.x() * basis_second.vectors, cfg);
  KMeansResult km_second = kmeans(second.x() * basis_first.vectors, cfg);

  const auto map = detail::match_centers(km_first.centers * basis_second.vectors.transpose(),
                                         km_second.centers * basis_first.vectors.transpose());
  ClusteringResult out;
  out.method = Method::spectral_crossfit;
  out.labels = detail::join_halves(km_first.labels, km_second.labels, map);
  out.embedded_centers = std::move(km_first.centers);
  out.basis = std::move(basis_second);
  out.objective = km_first.objective + km_second.objective;
  return out;
}

/// Top-r eigenpairs of the uncentered covariance (1/n)XᵀX.
inline SpectralBasis factor_basis(const Eigen::MatrixXd& x, int r) {
  SpectralBasis b = top_right_singular(x, r);
  b.values /= static_cast<double>(x.rows());
  return b;
}

/// û_i = x_i − V̂_r V̂_rᵀ x_i.
inline Eigen::MatrixXd factor_residuals(const Eigen::MatrixXd& x, const SpectralBasis& vr) {
  return project(Projector{vr, ProjectorMode::complement}, x);
}

namespace detail {

struct FascPass {
  ClusteringResult spectral;
  SpectralBasis factors;
};

/// Removes the factor space estimated on `source` from `target`, then
/// spectral-clusters the residuals.
inline FascPass fasc_pass(const Eigen::MatrixXd& target, const Eigen::MatrixXd& source,
                          const FascConfig& cfg) {
  if (cfg.r == 0)
    return {spectral_cluster(target, cfg.K, cfg.embedding_dim(), cfg.kmeans),
            SpectralBasis{Eigen::MatrixXd(target.cols(), 0), Eigen::VectorXd(0)}};
  SpectralBasis vr = factor_basis(source, cfg.r);
  ClusteringResult res =
      spectral_cluster(factor_residuals(target, vr), cfg.K, cfg.embedding_dim(), cfg.kmeans);
  return {std::move(res), std::move(vr)};
}

}  // namespace detail

/// Factor-adjusted spectral clustering.
///
/// full_sample: V̂_r and the residuals use every row. half_split: V̂_r from
/// the second half adjusts the first half and vice versa; the two label
/// alphabets are matched through the fitted centers mapped back to ℝᵈ.
/// r = 0 reduces to spectral_cluster on the unmodified data.
inline ClusteringResult fasc(const Dataset& data, const FascConfig& cfg) {
  cfg.validate(data.d());
  const Eigen::MatrixXd& x = data.x();
  ClusteringResult out;
  if (cfg.split == SplitMode::full_sample) {
    auto pass = detail::fasc_pass(x, x, cfg);
    out = std::move(pass.spectral);
    out.factor_basis = std::move(pass.factors);
  } else {
    detail::require(data.n() >= 2, "fasc half_split: need n >= 2");
    const auto [first, second] = split_halves(data);
    detail::require(first.n() >= cfg.K, "fasc half_split: each half needs at least K rows");
    detail::require(cfg.r <= first.n(), "fasc half_split: r exceeds the half-sample size");
    auto pass_first = detail::fasc_pass(first.x(), second.x(), cfg);
    auto pass_second = detail::fasc_pass(second.x(), first.x(), cfg);
    const auto& a = pass_first.spectral;
    const auto& b = pass_second.spectral;
    const auto map = detail::match_centers(a.embedded_centers * a.basis->vectors.transpose(),
                                           b.embedded_centers * b.basis->vectors.transpose());
    out.labels = detail::join_halves(a.labels, b.labels, map);
    out.embedded_centers = a.embedded_centers;
    out.basis = a.basis;
    out.objective = a.objective + b.objective;
    out.factor_basis = std::move(pass_first.factors);
  }
  out.method = Method::fasc;
  return out;
}

}  // namespace fasc
