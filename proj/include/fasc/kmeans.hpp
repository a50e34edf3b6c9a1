#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "fasc/dataset.hpp"
#include "fasc/error.hpp"
#include "fasc/random.hpp"

namespace fasc {

struct KMeansConfig {
  int K = 2;
  int restarts = 10;
  int max_iters = 300;
  double tol = 1e-8;  // relative objective decrease that ends a restart
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(K >= 1, "kmeans: K must be >= 1");
    detail::require(restarts >= 1, "kmeans: restarts must be >= 1");
    detail::require(max_iters >= 1, "kmeans: max_iters must be >= 1");
    detail::require(tol >= 0.0, "kmeans: tol must be >= 0");
  }
};

struct KMeansResult {
  Labels labels;
  Eigen::MatrixXd centers;  // K×m
  double objective = 0.0;
  int iterations_used = 0;
  int restart_index = 0;
  /// Objective after the initial assignment and after every Lloyd step.
  std::vector<double> history;
};

/// Nearest center per row, lowest index on exact ties.
inline Labels assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers) {
  detail::require(points.cols() == centers.cols(), "assign: point and center dimensions differ");
  detail::require(centers.rows() >= 1, "assign: no centers");
  Labels labels(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index j = 0; j < centers.rows(); ++j) {
      const double dist = (points.row(i) - centers.row(j)).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = static_cast<int>(j);
      }
    }
    labels[i] = arg;
  }
  return labels;
}

/// Σ_i ‖z_i − center_{label_i}‖².
inline double kmeans_objective(const Eigen::MatrixXd& points, const Labels& labels,
                               const Eigen::MatrixXd& centers) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    total += (points.row(i) - centers.row(labels[i])).squaredNorm();
  return total;
}

/// Greedy ++ seeding: first center uniform; each further center is the best
/// of 2 + ⌊ln K⌋ candidates drawn proportional to squared distance to the
/// nearest chosen center (uniform if all distances vanish), judged by the
/// resulting potential.
inline Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int K, Rng& rng) {
  const auto n = points.rows();
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(K)));
  Eigen::MatrixXd centers(K, points.cols());
  centers.row(0) = points.row(static_cast<Eigen::Index>(rng.below(n)));
  std::vector<double> d2(n), candidate(n), best_d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centers.row(0)).squaredNorm();
  for (int j = 1; j < K; ++j) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    double best_potential = std::numeric_limits<double>::infinity();
    Eigen::Index best_pick = 0;
    for (int t = 0; t < trials; ++t) {
      const auto pick = total > 0.0 ? static_cast<Eigen::Index>(rng.categorical(d2))
                                    : static_cast<Eigen::Index>(rng.below(n));
      double potential = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        candidate[i] = std::min(d2[i], (points.row(i) - points.row(pick)).squaredNorm());
        potential += candidate[i];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best_pick = pick;
        best_d2.swap(candidate);
      }
    }
    centers.row(j) = points.row(best_pick);
    d2.swap(best_d2);
  }
  return centers;
}

/// Lloyd iteration from given centers. An empty cluster is re-seeded at the
/// point farthest from its own center. Stops when labels repeat, the relative
/// objective decrease drops below tol, or after max_iters updates.
inline KMeansResult lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centers, int max_iters,
                          double tol) {
  const auto n = points.rows();
  const auto K = centers.rows();
  KMeansResult res;
  res.labels = assign(points, centers);
  res.objective = kmeans_objective(points, res.labels, centers);
  res.history.push_back(res.objective);

  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(K, points.cols());
    std::vector<int> counts(K, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(res.labels[i]) += points.row(i);
      ++counts[res.labels[i]];
    }
    for (Eigen::Index j = 0; j < K; ++j)
      if (counts[j] > 0) next.row(j) /= counts[j];

    if (std::find(counts.begin(), counts.end(), 0) != counts.end()) {
      std::vector<double> dist(n);
      for (Eigen::Index i = 0; i < n; ++i)
        dist[i] = (points.row(i) - next.row(res.labels[i])).squaredNorm();
      for (Eigen::Index j = 0; j < K; ++j) {
        if (counts[j] > 0) continue;
        const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
        next.row(j) = points.row(far);
        dist[far] = -1.0;
      }
    }

    Labels labels = assign(points, next);
    const double objective = kmeans_objective(points, labels, next);
    const bool same = labels == res.labels;
    const bool small_step = res.objective <= 0.0 || (res.objective - objective) < tol * res.objective;
    centers = std::move(next);
    res.labels = std::move(labels);
    res.objective = objective;
    res.history.push_back(objective);
    res.iterations_used = it + 1;
    if (same || small_step) break;
  }
  res.centers = std::move(centers);
  return res;
}

/// Single-point transfer pass (Hartigan): moves a point to another cluster
/// whenever that lowers the objective once both means are updated, until no
/// move helps. Its fixed points are a subset of Lloyd's. Returns the number
/// of moves made.
inline int hartigan_refine(const Eigen::MatrixXd& points, KMeansResult& res, int max_passes = 100) {
  const auto n = points.rows();
  const auto K = res.centers.rows();
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(K, points.cols());
  std::vector<int> counts(K, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    means.row(res.labels[i]) += points.row(i);
    ++counts[res.labels[i]];
  }
  for (Eigen::Index j = 0; j < K; ++j)
    if (counts[j] > 0) means.row(j) /= counts[j];

  int moves = 0;
  for (int pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = res.labels[i];
      if (counts[a] <= 1) continue;
      const double na = counts[a];
      const double loss = na / (na - 1.0) * (points.row(i) - means.row(a)).squaredNorm();
      int target = a;
      double best_gain = 1e-12 * std::max(1.0, loss);
      for (Eigen::Index b = 0; b < K; ++b) {
        if (b == a) continue;
        const double nb = counts[b];
        const double gain = loss - nb / (nb + 1.0) * (points.row(i) - means.row(b)).squaredNorm();
        if (gain > best_gain) {
          best_gain = gain;
          target = static_cast<int>(b);
        }
      }
      if (target == a) continue;
      means.row(a) = (na * means.row(a) - points.row(i)) / (na - 1.0);
      const double nb = counts[target];
      means.row(target) = (nb * means.row(target) + points.row(i)) / (nb + 1.0);
      --counts[a];
      ++counts[target];
      res.labels[i] = target;
      moved = true;
      ++moves;
    }
    if (!moved) break;
  }
  if (moves > 0) {
    res.centers = means;
    res.labels = assign(points, res.centers);
    res.objective = kmeans_objective(points, res.labels, res.centers);
    res.history.push_back(res.objective);
  }
  return moves;
}

/// Best of `restarts` seeded ++/Lloyd/transfer runs; restart i uses seed + i and ties
/// go to the lowest restart index. Centers of the winner are put in
/// lexicographic order so label ids depend only on the partition found.
inline KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansConfig& cfg) {
  cfg.validate();
  detail::require(points.rows() >= cfg.K, "kmeans: need n >= K");
  detail::require(points.cols() >= 1, "kmeans: points need at least one column");
  detail::require(points.allFinite(), "kmeans: points contain NaN or Inf");

  KMeansResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rng(cfg.seed + static_cast<std::uint64_t>(r));
    KMeansResult run = lloyd(points, kmeanspp_init(points, cfg.K, rng), cfg.max_iters, cfg.tol);
    if (hartigan_refine(points, run) > 0)
      run = lloyd(points, run.centers, cfg.max_iters, cfg.tol);
    run.restart_index = r;
    if (run.objective < best.objective) best = std::move(run);
  }

  std::vector<int> order(cfg.K);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (Eigen::Index c = 0; c < best.centers.cols(); ++c) {
      if (best.centers(a, c) != best.centers(b, c)) return best.centers(a, c) < best.centers(b, c);
    }
    return a < b;
  });
  Eigen::MatrixXd sorted(cfg.K, best.centers.cols());
  for (int j = 0; j < cfg.K; ++j) sorted.row(j) = best.centers.row(order[j]);
  best.centers = std::move(sorted);
  best.labels = assign(points, best.centers);
  best.objective = kmeans_objective(points, best.labels, best.centers);
  return best;
}

}  // namespace fasc
