#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "txreid/errors.hpp"
#include "txreid/tensor.hpp"

namespace txreid {

// Pairing rule for cross-view sample pairs. `Aligned` admits only pairs whose
// within-slice positions are equal (the default for unfolded-tensor columns);
// `All` admits every cross-view pair (plain vectors, final metric step).
enum class PairAlignment : std::uint8_t { Aligned = 0, All = 1 };

inline const char* alignment_name(PairAlignment a) {
  return a == PairAlignment::Aligned ? "aligned" : "all";
}

inline PairAlignment parse_alignment(const std::string& s) {
  if (s == "aligned") return PairAlignment::Aligned;
  if (s == "all") return PairAlignment::All;
  throw UsageError("unknown alignment '" + s + "' (expected aligned or all)");
}

// Columns are samples; labels give the identity per column and positions the
// within-slice column index (empty means all zero, i.e. plain vectors).
struct CrossViewSamples {
  Matrix xa;  // d x Na
  Matrix xb;  // d x Nb
  std::vector<int> labels_a;
  std::vector<int> labels_b;
  std::vector<int> positions_a;
  std::vector<int> positions_b;
};

// Intra-personal (same identity) and extra-personal (different identity)
// covariances of cross-view difference vectors, plus the pair counts they
// average over.
struct CovariancePair {
  Matrix sigma_i;
  Matrix sigma_e;
  std::int64_t n_intra = 0;
  std::int64_t n_extra = 0;
};

namespace detail {

inline void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

struct PairGroup {
  std::vector<int> cols_a;
  std::vector<int> cols_b;
};

}  // namespace detail

// Builds sigma_i = mean of e*e^T over admitted same-identity pairs and
// sigma_e over admitted different-identity pairs, e = x_a - x_b. The sums are
// evaluated in closed form from per-class counts, sums, and weighted
// scatters, so the cost is linear in the sample count regardless of how many
// pairs the means range over.
inline CovariancePair cross_covariances(const CrossViewSamples& s, PairAlignment alignment) {
  const Index d = s.xa.rows();
  if (d < 1) throw UsageError("cross_covariances: empty samples");
  if (s.xb.rows() != d) {
    throw UsageError("cross_covariances: feature dimension differs across views");
  }
  if (static_cast<Index>(s.labels_a.size()) != s.xa.cols() ||
      static_cast<Index>(s.labels_b.size()) != s.xb.cols()) {
    throw UsageError("cross_covariances: label count does not match sample count");
  }
  if (!s.positions_a.empty() && static_cast<Index>(s.positions_a.size()) != s.xa.cols()) {
    throw UsageError("cross_covariances: position count does not match sample count");
  }
  if (!s.positions_b.empty() && static_cast<Index>(s.positions_b.size()) != s.xb.cols()) {
    throw UsageError("cross_covariances: position count does not match sample count");
  }

  auto group_key = [&](const std::vector<int>& pos, Index col) -> int {
    if (alignment == PairAlignment::All || pos.empty()) return 0;
    return pos[static_cast<std::size_t>(col)];
  };

  std::map<int, detail::PairGroup> groups;
  for (Index c = 0; c < s.xa.cols(); ++c) {
    groups[group_key(s.positions_a, c)].cols_a.push_back(static_cast<int>(c));
  }
  for (Index c = 0; c < s.xb.cols(); ++c) {
    groups[group_key(s.positions_b, c)].cols_b.push_back(static_cast<int>(c));
  }

  Matrix intra_sum = Matrix::Zero(d, d);
  Matrix all_sum = Matrix::Zero(d, d);
  std::int64_t n_intra = 0;
  std::int64_t n_all = 0;

  for (const auto& [pos, g] : groups) {
    if (g.cols_a.empty() || g.cols_b.empty()) continue;
    const Matrix a = s.xa(Eigen::all, g.cols_a);
    const Matrix b = s.xb(Eigen::all, g.cols_b);
    const Index na = a.cols(), nb = b.cols();

    // per-class counts and sums within the group
    struct ClassAgg {
      std::int64_t na = 0, nb = 0;
      Vector sa, sb;
    };
    std::map<int, ClassAgg> classes;
    for (Index c = 0; c < na; ++c) {
      auto& agg = classes[s.labels_a[static_cast<std::size_t>(g.cols_a[static_cast<std::size_t>(c)])]];
      if (agg.na == 0) agg.sa = Vector::Zero(d);
      agg.sa += a.col(c);
      ++agg.na;
    }
    for (Index c = 0; c < nb; ++c) {
      auto& agg = classes[s.labels_b[static_cast<std::size_t>(g.cols_b[static_cast<std::size_t>(c)])]];
      if (agg.nb == 0) agg.sb = Vector::Zero(d);
      agg.sb += b.col(c);
      ++agg.nb;
    }

    // sum over same-class pairs of (x-y)(x-y)^T =
    //   sum_i nb(cls(i)) x_i x_i^T + sum_j na(cls(j)) y_j y_j^T
    //   - sum_c s_a(c) s_b(c)^T - sum_c s_b(c) s_a(c)^T
    Vector wa(na), wb(nb);
    for (Index c = 0; c < na; ++c) {
      const auto& agg = classes[s.labels_a[static_cast<std::size_t>(g.cols_a[static_cast<std::size_t>(c)])]];
      wa(c) = static_cast<double>(agg.nb);
    }
    for (Index c = 0; c < nb; ++c) {
      const auto& agg = classes[s.labels_b[static_cast<std::size_t>(g.cols_b[static_cast<std::size_t>(c)])]];
      wb(c) = static_cast<double>(agg.na);
    }
    Matrix cross = Matrix::Zero(d, d);
    for (const auto& [cls, agg] : classes) {
      if (agg.na == 0 || agg.nb == 0) continue;
      cross.noalias() += agg.sa * agg.sb.transpose();
      n_intra += agg.na * agg.nb;
    }
    intra_sum.noalias() += (a * wa.asDiagonal()) * a.transpose();
    intra_sum.noalias() += (b * wb.asDiagonal()) * b.transpose();
    intra_sum -= cross + cross.transpose();

    // sum over all cross-view pairs in the group
    const Vector ta = a.rowwise().sum();
    const Vector tb = b.rowwise().sum();
    all_sum.noalias() += static_cast<double>(nb) * (a * a.transpose());
    all_sum.noalias() += static_cast<double>(na) * (b * b.transpose());
    all_sum.noalias() -= ta * tb.transpose();
    all_sum.noalias() -= tb * ta.transpose();
    n_all += static_cast<std::int64_t>(na) * static_cast<std::int64_t>(nb);
  }

  const std::int64_t n_extra = n_all - n_intra;
  if (n_intra == 0) {
    throw DataError("cross_covariances: no intra-personal pairs (no shared identities under the '" +
                    std::string(alignment_name(alignment)) + "' pairing rule)");
  }
  if (n_extra == 0) {
    throw DataError("cross_covariances: no extra-personal pairs (a single identity cannot form them)");
  }

  CovariancePair out;
  out.n_intra = n_intra;
  out.n_extra = n_extra;
  out.sigma_i = intra_sum / static_cast<double>(n_intra);
  out.sigma_e = (all_sum - intra_sum) / static_cast<double>(n_extra);
  detail::symmetrize(out.sigma_i);
  detail::symmetrize(out.sigma_e);
  return out;
}

// sigma_i + lambda*mean(diag(sigma_i))*I; plain lambda*I when the diagonal
// mean is zero. Scaling the data rescales the ridge with it.
inline Matrix regularize_intra(const Matrix& sigma_i, double lambda) {
  if (lambda < 0.0) throw UsageError("regularize_intra: lambda must be non-negative");
  const double mu = sigma_i.diagonal().mean();
  Matrix out = sigma_i;
  out.diagonal().array() += (mu == 0.0) ? lambda : lambda * mu;
  return out;
}

// Flips every column whose largest-magnitude component (first such component
// on ties) is negative. Makes eigenvector output sign-deterministic.
inline void canonicalize_sign_columns(Matrix& w) {
  for (Index c = 0; c < w.cols(); ++c) {
    Index imax = 0;
    double best = std::abs(w(0, c));
    for (Index i = 1; i < w.rows(); ++i) {
      const double m = std::abs(w(i, c));
      if (m > best) {
        best = m;
        imax = i;
      }
    }
    if (w(imax, c) < 0.0) w.col(c) = -w.col(c);
  }
}

// Inverse of a symmetric positive definite matrix via eigendecomposition;
// the result is symmetric by construction. Throws when the matrix is
// singular or indefinite relative to its largest eigenvalue.
inline Matrix symmetric_inverse(const Matrix& s, const std::string& what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success) {
    throw NumericalError(what + ": eigendecomposition failed");
  }
  const Vector& ev = es.eigenvalues();
  const double vmax = ev.cwiseAbs().maxCoeff();
  if (!(vmax > 0.0) || ev.minCoeff() <= vmax * 1e-13) {
    throw NumericalError(what + ": matrix is singular beyond regularization");
  }
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

// Projection + metric from one covariance pair.
struct XqdaSolution {
  Matrix w;       // d x r, columns are unit-norm sign-canonical eigenvectors
  Vector eigvals; // r descending generalized eigenvalues
  Matrix metric;  // r x r symmetric
};

// Solves sigma_e * w = lambda_gen * (sigma_i + ridge) * w, keeps the top
// target_dim eigenvectors (or, when target_dim is empty, those with
// eigenvalue > 1), and forms the metric
//   M = (W^T Si W)^-1 - (W^T sigma_e W)^-1
// in the projected space, Si being the ridge-regularized intra covariance.
inline XqdaSolution solve_xqda(const CovariancePair& cov, std::optional<int> target_dim,
                               double lambda) {
  const Index d = cov.sigma_i.rows();
  if (d < 1 || cov.sigma_i.cols() != d || cov.sigma_e.rows() != d || cov.sigma_e.cols() != d) {
    throw UsageError("solve_xqda: covariance matrices must be square and equally sized");
  }
  if (target_dim && (*target_dim < 1 || static_cast<Index>(*target_dim) > d)) {
    throw UsageError("solve_xqda: target_dim must be in [1, d]");
  }

  const Matrix si = regularize_intra(cov.sigma_i, lambda);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(cov.sigma_e, si,
                                                      Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) {
    throw NumericalError("solve_xqda: generalized eigensolve failed (intra covariance not positive definite?)");
  }

  const Vector& vals = es.eigenvalues();  // ascending
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return vals(a) > vals(b); });

  Index r = 0;
  if (target_dim) {
    r = static_cast<Index>(*target_dim);
  } else {
    for (Index i = 0; i < d; ++i)
      if (vals(order[static_cast<std::size_t>(i)]) > 1.0) ++r;
    if (r == 0) {
      throw NumericalError("solve_xqda: no discriminative directions (all generalized eigenvalues <= 1)");
    }
  }

  XqdaSolution sol;
  sol.w.resize(d, r);
  sol.eigvals.resize(r);
  for (Index i = 0; i < r; ++i) {
    const Index src = order[static_cast<std::size_t>(i)];
    const double norm = es.eigenvectors().col(src).norm();
    if (!(norm > 0.0)) throw NumericalError("solve_xqda: zero eigenvector");
    sol.w.col(i) = es.eigenvectors().col(src) / norm;
    sol.eigvals(i) = vals(src);
  }
  canonicalize_sign_columns(sol.w);
  if (!sol.w.allFinite() || !sol.eigvals.allFinite()) {
    throw NumericalError("solve_xqda: non-finite eigensolver output");
  }

  Matrix pi = sol.w.transpose() * si * sol.w;
  Matrix pe = sol.w.transpose() * cov.sigma_e * sol.w;
  detail::symmetrize(pi);
  detail::symmetrize(pe);
  sol.metric = symmetric_inverse(pi, "solve_xqda: projected intra covariance") -
               symmetric_inverse(pe, "solve_xqda: projected extra covariance");
  detail::symmetrize(sol.metric);
  return sol;
}

// Metric-only step used on already-projected data: no further dimension
// reduction, M = (sigma_i + ridge)^-1 - sigma_e^-1.
inline Matrix metric_from_covariances(const CovariancePair& cov, double lambda) {
  const Matrix si = regularize_intra(cov.sigma_i, lambda);
  Matrix m = symmetric_inverse(si, "metric: intra covariance") -
             symmetric_inverse(cov.sigma_e, "metric: extra covariance");
  detail::symmetrize(m);
  return m;
}

}  // namespace txreid
