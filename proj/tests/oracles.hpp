#pragma once

// Independent reference computations used by the unit and acceptance suites.
// None of these call into the library's numerics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "fasc/random.hpp"

namespace oracle {

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
  fasc::Rng rng(seed * 7919 + 13);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

inline Eigen::MatrixXd random_symmetric(int d, std::uint64_t seed) {
  const Eigen::MatrixXd a = random_matrix(d, d, seed);
  return 0.5 * (a + a.transpose());
}

/// Cyclic Jacobi rotations; eigenvalues descending with matching columns.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a) {
  const int d = static_cast<int>(a.rows());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, d);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });
  Eigen::VectorXd values(d);
  Eigen::MatrixXd vectors(d, d);
  for (int j = 0; j < d; ++j) {
    values(j) = a(order[j], order[j]);
    vectors.col(j) = v.col(order[j]);
  }
  return {values, vectors};
}

inline double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

/// S = UΛUᵀ with r spikes and gap g, perturbation E with 2‖E‖ ≤ (1 − 1/√2) g.
struct SpikedTrial {
  Eigen::MatrixXd s, e;
  int r = 0;
  double gap = 0.0, e_norm = 0.0;
};

inline SpikedTrial spiked_trial(std::uint64_t seed) {
  fasc::Rng rng(seed + 4242);
  SpikedTrial t;
  const int d = 5 + static_cast<int>(rng.below(40));
  t.r = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(4, d - 1)));
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(d, d, seed + 77));
  const Eigen::MatrixXd u = qr.householderQ();
  Eigen::VectorXd lambda(d);
  for (int i = 0; i < d; ++i) lambda(i) = i < t.r ? 10.0 + 5.0 * rng.uniform() : 2.0 * rng.uniform();
  t.gap = lambda.head(t.r).minCoeff() - lambda.tail(d - t.r).maxCoeff();
  t.s = u * lambda.asDiagonal() * u.transpose();
  t.s = 0.5 * (t.s + t.s.transpose()).eval();
  Eigen::MatrixXd e = random_symmetric(d, seed + 991);
  const double target = (0.05 + 0.95 * rng.uniform()) * (1.0 - 1.0 / std::sqrt(2.0)) * t.gap / 2.0;
  e *= target / spectral_norm(e);
  t.e = e;
  t.e_norm = spectral_norm(e);
  return t;
}

/// Fraction misassigned, minimized over all K! relabelings.
inline double mislabeling_brute_force(const std::vector<int>& pred, const std::vector<int>& truth, int K) {
  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = pred.size();
  do {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) wrong += perm[pred[i]] != truth[i];
    best = std::min(best, wrong);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / pred.size();
}

/// Global K-means optimum over every labeling of n ≤ 12 points.
inline double kmeans_brute_force(const Eigen::MatrixXd& x, int K) {
  const int n = static_cast<int>(x.rows());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> label(n, 0);
  while (true) {
    double obj = 0.0;
    for (int j = 0; j < K; ++j) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(x.cols());
      int count = 0;
      for (int i = 0; i < n; ++i)
        if (label[i] == j) {
          sum += x.row(i);
          ++count;
        }
      if (count == 0) continue;
      const Eigen::RowVectorXd c = sum / count;
      for (int i = 0; i < n; ++i)
        if (label[i] == j) obj += (x.row(i) - c).squaredNorm();
    }
    best = std::min(best, obj);
    int i = 0;
    while (i < n && ++label[i] == K) label[i++] = 0;
    if (i == n) break;
  }
  return best;
}

/// μᵀ(tBBᵀ + σ²I)⁻¹μ by Sherman–Morrison–Woodbury.
inline double woodbury_snr(const Eigen::VectorXd& mu, const Eigen::MatrixXd& b, double t, double sigma2) {
  const int r = static_cast<int>(b.cols());
  const Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(r, r) / t + b.transpose() * b / sigma2;
  const Eigen::VectorXd btmu = b.transpose() * mu;
  return mu.squaredNorm() / sigma2 - btmu.dot(inner.inverse() * btmu) / (sigma2 * sigma2);
}

}  // namespace oracle
