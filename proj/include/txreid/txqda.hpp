#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "txreid/errors.hpp"
#include "txreid/feature_set.hpp"
#include "txreid/tensor.hpp"
#include "txreid/xqda.hpp"

namespace txreid {

struct TxqdaConfig {
  // Output extents per reduced mode; empty keeps every generalized
  // eigenvector with eigenvalue > 1 (the rank found in the first sweep is
  // then frozen for the remaining sweeps).
  std::optional<int> target_dim1;
  std::optional<int> target_dim2;
  int max_itr = 5;
  double epsilon = 1e-6;
  double lambda = 1e-3;
  PairAlignment alignment = PairAlignment::Aligned;
};

struct TxqdaModel {
  ProjectionSet projections;
  // Metric over the vectorized projected slice, (t1*t2) x (t1*t2).
  Matrix metric;
  int iterations_run = 0;
  bool converged = false;
  // Retained generalized eigenvalues from each mode's last solve.
  std::array<std::vector<double>, 2> mode_eigvals;
  // Sum of retained eigenvalues per mode after every sweep (diagnostics).
  std::vector<std::array<double, 2>> sweep_eigval_sums;
  TxqdaConfig config;

  Index source_dim(int mode) const { return projections.source_dim(mode); }
  Index target_dim(int mode) const { return projections.target_dim(mode); }
};

namespace detail {

// Flips rows so the largest-magnitude entry of each row (first on ties) is
// positive. Rows of a projection are eigenvector columns, which carry an
// arbitrary sign out of the solver.
inline Matrix sign_canonicalized_rows(Matrix p) {
  Matrix t = p.transpose();
  canonicalize_sign_columns(t);
  return t.transpose();
}

struct ModeSamples {
  Matrix cols;
  std::vector<int> labels;
  std::vector<int> positions;
};

// Unfolds along `mode` and labels every column with its slice's identity and
// within-slice position. Mode 3 is the person mode and always the slowest
// index of the unfolding columns, so column c maps to person c / other and
// position c % other.
inline ModeSamples mode_samples(const Tensor3& t, const std::vector<int>& labels, int mode) {
  ModeSamples s;
  s.cols = unfold(t, mode);
  const Index other = (mode == 1) ? t.extent(2) : t.extent(1);
  const Index n = s.cols.cols();
  s.labels.reserve(static_cast<std::size_t>(n));
  s.positions.reserve(static_cast<std::size_t>(n));
  for (Index c = 0; c < n; ++c) {
    s.labels.push_back(labels[static_cast<std::size_t>(c / other)]);
    s.positions.push_back(static_cast<int>(c % other));
  }
  return s;
}

}  // namespace detail

// True iff ||P_k(curr) - P_k(prev)||_F < n_k * n_k * eps for both modes, with
// n_k the source dimension of mode k and both matrices sign-canonicalized
// row-wise before comparison.
inline bool convergence_check(const ProjectionSet& prev, const ProjectionSet& curr, double eps) {
  if (!(eps > 0.0)) throw UsageError("convergence_check: eps must be positive");
  if (prev.p1.rows() != curr.p1.rows() || prev.p1.cols() != curr.p1.cols() ||
      prev.p2.rows() != curr.p2.rows() || prev.p2.cols() != curr.p2.cols()) {
    throw UsageError("convergence_check: projection shapes differ");
  }
  for (int mode = 1; mode <= 2; ++mode) {
    const Matrix& a = (mode == 1) ? prev.p1 : prev.p2;
    const Matrix& b = (mode == 1) ? curr.p1 : curr.p2;
    const double nk = static_cast<double>(b.cols());
    const double diff =
        (detail::sign_canonicalized_rows(b) - detail::sign_canonicalized_rows(a)).norm();
    if (!(diff < nk * nk * eps)) return false;
  }
  return true;
}

// Alternating mode-wise optimization: starting from identity projections, for
// every sweep and every reduced mode k, project both training tensors on the
// other reduced mode with the current matrix, unfold along k, build the
// cross-view difference covariances, and replace P_k with the solved
// projection. Stops when the sweep-to-sweep change passes convergence_check
// (only tested once iteration > 2) or after max_itr sweeps. The final metric
// is computed on the vectorized projected slices with identity-level pairing.
inline TxqdaModel fit(const ViewTensor& x, const ViewTensor& y, const TxqdaConfig& cfg) {
  if (x.view == y.view) throw DataError("txqda fit: training views must differ");
  if (x.parts() != y.parts() || x.part_len() != y.part_len()) {
    throw UsageError("txqda fit: tensor extents differ across views");
  }
  if (cfg.max_itr < 1) throw UsageError("txqda fit: max_itr must be >= 1");
  if (!(cfg.epsilon > 0.0)) throw UsageError("txqda fit: epsilon must be positive");
  if (cfg.lambda < 0.0) throw UsageError("txqda fit: lambda must be non-negative");

  const Index n1 = x.parts(), n2 = x.part_len();
  if (cfg.target_dim1 && (*cfg.target_dim1 < 1 || static_cast<Index>(*cfg.target_dim1) > n1)) {
    throw UsageError("txqda fit: mode-1 target dimension out of range");
  }
  if (cfg.target_dim2 && (*cfg.target_dim2 < 1 || static_cast<Index>(*cfg.target_dim2) > n2)) {
    throw UsageError("txqda fit: mode-2 target dimension out of range");
  }
  {
    std::unordered_set<int> ids_x(x.labels.begin(), x.labels.end());
    bool shared = false;
    for (int label : y.labels) {
      if (ids_x.count(label) > 0) {
        shared = true;
        break;
      }
    }
    if (!shared) throw DataError("txqda fit: no common identities across views");
  }

  TxqdaModel model;
  model.config = cfg;
  ProjectionSet cur{Matrix::Identity(n1, n1), Matrix::Identity(n2, n2)};
  ProjectionSet prev;
  std::array<std::optional<int>, 2> dims{cfg.target_dim1, cfg.target_dim2};

  for (int itr = 1; itr <= cfg.max_itr; ++itr) {
    for (int mode = 1; mode <= 2; ++mode) {
      const int other_mode = (mode == 1) ? 2 : 1;
      const Matrix& other_p = (mode == 1) ? cur.p2 : cur.p1;
      const Tensor3 xp = mode_product(x.tensor, other_p, other_mode);
      const Tensor3 yp = mode_product(y.tensor, other_p, other_mode);
      detail::ModeSamples sx = detail::mode_samples(xp, x.labels, mode);
      detail::ModeSamples sy = detail::mode_samples(yp, y.labels, mode);
      CrossViewSamples samples{std::move(sx.cols),      std::move(sy.cols),
                               std::move(sx.labels),    std::move(sy.labels),
                               std::move(sx.positions), std::move(sy.positions)};

      const std::string ctx = "txqda fit, mode " + std::to_string(mode) + ", iteration " +
                              std::to_string(itr) + ": ";
      XqdaSolution sol;
      try {
        const CovariancePair cov = cross_covariances(samples, cfg.alignment);
        sol = solve_xqda(cov, dims[static_cast<std::size_t>(mode - 1)], cfg.lambda);
      } catch (const DataError& e) {
        throw DataError(ctx + e.what());
      } catch (const NumericalError& e) {
        throw NumericalError(ctx + e.what());
      }

      auto& eigvals = model.mode_eigvals[static_cast<std::size_t>(mode - 1)];
      eigvals.assign(sol.eigvals.data(), sol.eigvals.data() + sol.eigvals.size());
      // freeze an auto-selected rank after its first solve so later sweeps
      // (and the convergence norm) see a fixed shape
      auto& dim_k = dims[static_cast<std::size_t>(mode - 1)];
      if (!dim_k) dim_k = static_cast<int>(sol.w.cols());
      ((mode == 1) ? cur.p1 : cur.p2) = sol.w.transpose();
    }

    model.sweep_eigval_sums.push_back(
        {std::accumulate(model.mode_eigvals[0].begin(), model.mode_eigvals[0].end(), 0.0),
         std::accumulate(model.mode_eigvals[1].begin(), model.mode_eigvals[1].end(), 0.0)});
    model.iterations_run = itr;

    if (itr > 2 && convergence_check(prev, cur, cfg.epsilon)) {
      model.converged = true;
      break;
    }
    prev = cur;
  }

  model.projections = std::move(cur);

  // final Mahalanobis metric on vectorized projected slices
  const Tensor3 xf = multi_project(x.tensor, model.projections);
  const Tensor3 yf = multi_project(y.tensor, model.projections);
  CrossViewSamples flat{slice_columns(xf), slice_columns(yf), x.labels, y.labels, {}, {}};
  try {
    const CovariancePair cov = cross_covariances(flat, PairAlignment::All);
    model.metric = metric_from_covariances(cov, cfg.lambda);
  } catch (const DataError& e) {
    throw DataError(std::string("txqda fit, final metric: ") + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("txqda fit, final metric: ") + e.what());
  }
  return model;
}

// Applies the learned projections; labels and the person mode are untouched.
inline ViewTensor project(const TxqdaModel& m, const ViewTensor& t) {
  if (m.source_dim(1) != t.parts() || m.source_dim(2) != t.part_len()) {
    throw UsageError("txqda project: tensor extents do not match the model's source dimensions");
  }
  ViewTensor out;
  out.view = t.view;
  out.labels = t.labels;
  out.tensor = multi_project(t.tensor, m.projections);
  return out;
}

}  // namespace txreid
