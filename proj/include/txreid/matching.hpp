#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "txreid/errors.hpp"
#include "txreid/tensor.hpp"
#include "txreid/txqda.hpp"

namespace txreid {

struct DistanceMatrix {
  Matrix values;  // probes x gallery
  std::vector<int> probe_labels;
  std::vector<int> gallery_labels;
};

enum class ScoreNormalization : std::uint8_t { None = 0, MinMax = 1, ZScore = 2 };

inline const char* normalization_name(ScoreNormalization n) {
  switch (n) {
    case ScoreNormalization::MinMax: return "minmax";
    case ScoreNormalization::ZScore: return "zscore";
    default: return "none";
  }
}

inline ScoreNormalization parse_normalization(const std::string& s) {
  if (s == "none") return ScoreNormalization::None;
  if (s == "minmax") return ScoreNormalization::MinMax;
  if (s == "zscore") return ScoreNormalization::ZScore;
  throw UsageError("unknown normalization '" + s + "' (expected none, minmax, or zscore)");
}

// Quadratic form (a-b)^T m (a-b); no square root is taken, and m may be
// indefinite: rankings only care about order.
inline double quadratic_distance(const Vector& a, const Vector& b, const Matrix& m) {
  if (a.size() != b.size() || m.rows() != a.size() || m.cols() != a.size()) {
    throw UsageError("quadratic_distance: dimension mismatch");
  }
  const Vector diff = a - b;
  return diff.dot(m * diff);
}

// Projects probes and gallery through the model and fills
// values(i, j) = quadratic_distance(probe_i, gallery_j, model.metric) over
// the vectorized projected slices. Rows are independent; `threads` > 1 splits
// them across worker threads with identical per-row arithmetic.
inline DistanceMatrix distance_matrix(const ViewTensor& probes, const ViewTensor& gallery,
                                      const TxqdaModel& model, int threads = 1) {
  const Matrix p = slice_columns(project(model, probes).tensor);
  const Matrix g = slice_columns(project(model, gallery).tensor);
  const Matrix& metric = model.metric;

  DistanceMatrix out;
  out.probe_labels = probes.labels;
  out.gallery_labels = gallery.labels;
  out.values.resize(p.cols(), g.cols());

  auto fill_row = [&](Index i) {
    const Matrix diff = g.colwise() - p.col(i);
    out.values.row(i) = (diff.cwiseProduct(metric * diff)).colwise().sum();
  };

  const Index np = p.cols();
  if (threads <= 1 || np < 2) {
    for (Index i = 0; i < np; ++i) fill_row(i);
  } else {
    const int nw = std::min<int>(threads, static_cast<int>(np));
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w) {
      workers.emplace_back([&, w] {
        for (Index i = w; i < np; i += nw) fill_row(i);
      });
    }
    for (auto& t : workers) t.join();
  }
  return out;
}

// Per-probe-row score normalization. Constant rows map to all zeros under
// both non-trivial methods.
inline DistanceMatrix normalize_scores(const DistanceMatrix& d, ScoreNormalization method) {
  if (d.values.cols() < 1) throw UsageError("normalize_scores: empty gallery");
  DistanceMatrix out = d;
  if (method == ScoreNormalization::None) return out;
  for (Index i = 0; i < d.values.rows(); ++i) {
    const auto row = d.values.row(i);
    if (method == ScoreNormalization::MinMax) {
      const double lo = row.minCoeff(), hi = row.maxCoeff();
      if (hi == lo) {
        out.values.row(i).setZero();
      } else {
        out.values.row(i) = (row.array() - lo) / (hi - lo);
      }
    } else {
      const double mean = row.mean();
      const double var = (row.array() - mean).square().mean();  // population
      if (var == 0.0) {
        out.values.row(i).setZero();
      } else {
        out.values.row(i) = (row.array() - mean) / std::sqrt(var);
      }
    }
  }
  return out;
}

// Ascending-distance order of gallery indices per probe; ties break toward
// the lower gallery index.
inline std::vector<std::vector<int>> rank_gallery(const DistanceMatrix& d) {
  std::vector<std::vector<int>> ranks(static_cast<std::size_t>(d.values.rows()));
  for (Index i = 0; i < d.values.rows(); ++i) {
    auto& order = ranks[static_cast<std::size_t>(i)];
    order.resize(static_cast<std::size_t>(d.values.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = d.values(i, a), vb = d.values(i, b);
      return va < vb || (va == vb && a < b);
    });
  }
  return ranks;
}

// CSV export: header row of gallery labels, first column of probe labels.
inline void write_distance_csv(const DistanceMatrix& d, std::ostream& os) {
  os << "probe";
  for (int label : d.gallery_labels) os << ',' << label;
  os << '\n';
  char buf[32];
  for (Index i = 0; i < d.values.rows(); ++i) {
    os << d.probe_labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < d.values.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", d.values(i, j));
      os << ',' << buf;
    }
    os << '\n';
  }
}

inline void write_distance_csv(const DistanceMatrix& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write distance file: " + path);
  write_distance_csv(d, out);
}

}  // namespace txreid
