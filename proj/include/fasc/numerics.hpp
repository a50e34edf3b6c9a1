#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fasc/dataset.hpp"
#include "fasc/error.hpp"
#include "fasc/random.hpp"

namespace fasc {

/// Orthonormal columns with their eigenvalues (or squared singular values),
/// sorted descending. In each column the first entry with |x| > 1e-12 is
/// positive.
struct SpectralBasis {
  Eigen::MatrixXd vectors;  // d×m
  Eigen::VectorXd values;   // m

  int dim() const { return static_cast<int>(vectors.rows()); }
  int size() const { return static_cast<int>(vectors.cols()); }
};

enum class ProjectorMode { onto, complement };

struct Projector {
  SpectralBasis basis;
  ProjectorMode mode = ProjectorMode::complement;
};

namespace detail {

inline void canonicalize_signs(Eigen::MatrixXd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      if (std::abs(v(i, j)) > 1e-12) {
        if (v(i, j) < 0) v.col(j) = -v.col(j);
        break;
      }
    }
  }
}

/// Symmetric Gram matrix AᵀA with bitwise-exact symmetry.
inline Eigen::MatrixXd gram(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(a.cols(), a.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

}  // namespace detail

/// Uncentered second-moment matrix (1/n) XᵀX.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
  detail::require(x.rows() >= 1, "sample_covariance needs n >= 1");
  return detail::gram(x) / static_cast<double>(x.rows());
}

inline Eigen::MatrixXd sample_covariance(const Dataset& data) { return sample_covariance(data.x()); }

/// Mean-centered covariance (1/n) Σ (x_i − x̄)(x_i − x̄)ᵀ.
inline Eigen::MatrixXd centered_covariance(const Eigen::MatrixXd& x) {
  detail::require(x.rows() >= 1, "centered_covariance needs n >= 1");
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  return detail::gram(c) / static_cast<double>(x.rows());
}

/// Leading m eigenpairs of a symmetric matrix.
///
/// Backed by Eigen's tridiagonal QR solver. Every returned pair is checked
/// against ‖Sv − λv‖ ≤ 1e-8(1 + |λ|) + 1e-10‖S‖; a miss raises
/// NumericalError with the worst residual. For (near-)repeated eigenvalues the
/// vectors are some orthonormal basis of the invariant subspace.
inline SpectralBasis top_eigen(const Eigen::MatrixXd& s, int m) {
  detail::require(s.rows() == s.cols() && s.rows() >= 1, "top_eigen needs a square matrix");
  detail::require(m >= 1 && m <= s.rows(), "top_eigen needs 1 <= m <= d");
  detail::require(s.allFinite(), "top_eigen: non-finite entry");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  detail::require((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale,
                  "top_eigen: matrix is not symmetric");

  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric eigensolver did not converge",
                         std::numeric_limits<double>::infinity());

  const Eigen::Index d = s.rows();
  SpectralBasis out;
  out.vectors.resize(d, m);
  out.values.resize(m);
  for (int j = 0; j < m; ++j) {
    out.values(j) = solver.eigenvalues()(d - 1 - j);
    out.vectors.col(j) = solver.eigenvectors().col(d - 1 - j);
  }
  detail::canonicalize_signs(out.vectors);

  const double norm = solver.eigenvalues().cwiseAbs().maxCoeff();
  double worst = 0.0;
  bool ok = true;
  for (int j = 0; j < m; ++j) {
    const double lambda = out.values(j);
    const double res = (sym * out.vectors.col(j) - lambda * out.vectors.col(j)).norm();
    worst = std::max(worst, res);
    ok = ok && res <= 1e-8 * (1.0 + std::abs(lambda)) + 1e-10 * norm;
  }
  if (!ok) throw NumericalError("eigenpair residual above tolerance", worst);
  return out;
}

/// Top-k right singular vectors of X (n×d), values = squared singular values.
///
/// Uses the d×d Gram XᵀX when d ≤ n and the n×n Gram XXᵀ otherwise, mapping
/// v = Xᵀu/‖Xᵀu‖. Directions with zero singular value are completed to an
/// orthonormal set.
inline SpectralBasis top_right_singular(const Eigen::MatrixXd& x, int k) {
  const auto n = x.rows();
  const auto d = x.cols();
  detail::require(k >= 1 && k <= std::min(n, d), "top_right_singular needs 1 <= k <= min(n, d)");
  if (d <= n) return top_eigen(detail::gram(x), k);

  SpectralBasis left = top_eigen(detail::gram(x.transpose()), k);
  SpectralBasis out;
  out.values = left.values;
  out.vectors.resize(d, k);
  const double floor = 1e-12 * std::max(1.0, left.values(0));
  Eigen::Index next_axis = 0;
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd v;
    if (left.values(j) > floor) {
      v = x.transpose() * left.vectors.col(j);
    } else {
      out.values(j) = std::max(0.0, left.values(j));
      v = Eigen::VectorXd::Unit(d, next_axis++);
    }
    // re-orthogonalize against earlier columns (also completes null directions)
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < j; ++i) v -= out.vectors.col(i).dot(v) * out.vectors.col(i);
    while (v.norm() < 1e-8 && next_axis < d) {
      v = Eigen::VectorXd::Unit(d, next_axis++);
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i < j; ++i) v -= out.vectors.col(i).dot(v) * out.vectors.col(i);
    }
    out.vectors.col(j) = v.normalized();
  }
  detail::canonicalize_signs(out.vectors);
  return out;
}

/// onto: n×m coordinates XV. complement: X − XVVᵀ in the original space.
inline Eigen::MatrixXd project(const Projector& p, const Eigen::MatrixXd& x) {
  detail::require(p.basis.dim() == x.cols(), "project: basis dimension does not match d");
  const Eigen::MatrixXd coords = x * p.basis.vectors;
  if (p.mode == ProjectorMode::onto) return coords;
  return x - coords * p.basis.vectors.transpose();
}

inline Dataset project(const Projector& p, const Dataset& data) {
  return data.with_features(project(p, data.x()));
}

/// ‖AAᵀ − BBᵀ‖₂, by power iteration on (AAᵀ − BBᵀ)² applied matrix-free.
///
/// Stops when the eigen residual of the iterate is ≤ 1e-9 or after 10000
/// steps; a collapsed iterate triggers a fresh random start (three at most,
/// after which the difference is taken to be zero).
inline double subspace_distance(const SpectralBasis& a, const SpectralBasis& b) {
  detail::require(a.dim() == b.dim(), "subspace_distance: ambient dimensions differ");
  detail::require(a.size() == b.size(), "subspace_distance: column counts differ");
  const Eigen::MatrixXd& va = a.vectors;
  const Eigen::MatrixXd& vb = b.vectors;
  const auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return va * (va.transpose() * v) - vb * (vb.transpose() * v);
  };

  Rng rng(0x5eedULL);
  const auto random_unit = [&] {
    Eigen::VectorXd v(a.dim());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
    return Eigen::VectorXd(v.normalized());
  };

  Eigen::VectorXd v = random_unit();
  double best = 0.0;
  int restarts = 0;
  for (int it = 0; it < 10000; ++it) {
    const Eigen::VectorXd w = apply(apply(v));
    const double wn = w.norm();
    if (wn <= 1e-300) {
      if (++restarts > 3) break;
      v = random_unit();
      continue;
    }
    const double lambda = v.dot(w);
    best = std::max(best, lambda);
    const double residual = (w - lambda * v).norm();
    v = w / wn;
    if (residual <= 1e-9) break;
  }
  return std::min(1.0, std::sqrt(std::max(0.0, best)));
}

}  // namespace fasc

namespace fasc {

/// All eigenvalues of a symmetric matrix, descending (no vectors).
inline Eigen::VectorXd eigenvalues_descending(const Eigen::MatrixXd& s) {
  detail::require(s.rows() == s.cols() && s.rows() >= 1, "eigenvalues_descending needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (s + s.transpose()),
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric eigensolver did not converge",
                         std::numeric_limits<double>::infinity());
  return solver.eigenvalues().reverse();
}

}  // namespace fasc
