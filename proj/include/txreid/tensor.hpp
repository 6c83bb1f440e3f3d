#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "txreid/errors.hpp"

namespace txreid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

using Dims3 = std::array<Index, 3>;

// Dense 3-mode tensor. Element (i1, i2, i3) lives at linear offset
// i1 + i2*n1 + i3*n1*n2, i.e. mode 1 varies fastest. All entries are finite;
// the constructor enforces it, and every operation below builds its result
// through the same path.
class Tensor3 {
 public:
  Tensor3() = default;

  Tensor3(Index n1, Index n2, Index n3) : dims_{n1, n2, n3} {
    check_dims(dims_);
    data_.assign(static_cast<std::size_t>(n1 * n2 * n3), 0.0);
  }

  static Tensor3 from_data(Dims3 dims, std::vector<double> data) {
    check_dims(dims);
    if (static_cast<Index>(data.size()) != dims[0] * dims[1] * dims[2]) {
      throw UsageError("Tensor3: data length does not match extents");
    }
    for (double v : data) {
      if (!std::isfinite(v)) throw NumericalError("Tensor3: non-finite entry");
    }
    Tensor3 t;
    t.dims_ = dims;
    t.data_ = std::move(data);
    return t;
  }

  double operator()(Index i1, Index i2, Index i3) const {
    return data_[static_cast<std::size_t>(i1 + i2 * dims_[0] + i3 * dims_[0] * dims_[1])];
  }
  double& operator()(Index i1, Index i2, Index i3) {
    return data_[static_cast<std::size_t>(i1 + i2 * dims_[0] + i3 * dims_[0] * dims_[1])];
  }

  const Dims3& dims() const { return dims_; }

  // mode is 1-based, matching the usual mode-product notation.
  Index extent(int mode) const {
    if (mode < 1 || mode > 3) throw UsageError("Tensor3::extent: mode must be 1, 2, or 3");
    return dims_[static_cast<std::size_t>(mode - 1)];
  }

  Index size() const { return static_cast<Index>(data_.size()); }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Tensor3& other) const {
    return dims_ == other.dims_ && data_ == other.data_;
  }

 private:
  static void check_dims(const Dims3& d) {
    if (d[0] < 1 || d[1] < 1 || d[2] < 1) {
      throw UsageError("Tensor3: extents must be positive");
    }
  }

  Dims3 dims_{0, 0, 0};
  std::vector<double> data_;
};

// Mode-n unfolding. Rows index the chosen mode; columns order the remaining
// modes with the lower-numbered one varying fastest, so for a (n1,n2,n3)
// tensor:
//   mode 1: n1 x (n2*n3), column j = i2 + i3*n2
//   mode 2: n2 x (n1*n3), column j = i1 + i3*n1
//   mode 3: n3 x (n1*n2), column j = i1 + i2*n1
inline Matrix unfold(const Tensor3& t, int mode) {
  const auto [n1, n2, n3] = t.dims();
  switch (mode) {
    case 1:
      // The linear layout already is the mode-1 unfolding, column-major.
      return Eigen::Map<const Matrix>(t.data().data(), n1, n2 * n3);
    case 2: {
      Matrix m(n2, n1 * n3);
      for (Index i3 = 0; i3 < n3; ++i3)
        for (Index i2 = 0; i2 < n2; ++i2)
          for (Index i1 = 0; i1 < n1; ++i1) m(i2, i1 + i3 * n1) = t(i1, i2, i3);
      return m;
    }
    case 3:
      return Eigen::Map<const Matrix>(t.data().data(), n1 * n2, n3).transpose();
    default:
      throw UsageError("unfold: mode must be 1, 2, or 3");
  }
}

// Inverse of unfold: refold(unfold(t, m), m, t.dims()) == t bit-exactly.
inline Tensor3 refold(const Matrix& m, int mode, Dims3 dims) {
  if (mode < 1 || mode > 3) throw UsageError("refold: mode must be 1, 2, or 3");
  const Index n1 = dims[0], n2 = dims[1], n3 = dims[2];
  if (n1 < 1 || n2 < 1 || n3 < 1) throw UsageError("refold: extents must be positive");
  const Index expect_rows = dims[static_cast<std::size_t>(mode - 1)];
  const Index expect_cols = n1 * n2 * n3 / expect_rows;
  if (m.rows() != expect_rows || m.cols() != expect_cols) {
    throw UsageError("refold: matrix shape inconsistent with target extents");
  }

  std::vector<double> data(static_cast<std::size_t>(n1 * n2 * n3));
  auto at = [&](Index i1, Index i2, Index i3) -> double& {
    return data[static_cast<std::size_t>(i1 + i2 * n1 + i3 * n1 * n2)];
  };
  switch (mode) {
    case 1:
      for (Index i3 = 0; i3 < n3; ++i3)
        for (Index i2 = 0; i2 < n2; ++i2)
          for (Index i1 = 0; i1 < n1; ++i1) at(i1, i2, i3) = m(i1, i2 + i3 * n2);
      break;
    case 2:
      for (Index i3 = 0; i3 < n3; ++i3)
        for (Index i2 = 0; i2 < n2; ++i2)
          for (Index i1 = 0; i1 < n1; ++i1) at(i1, i2, i3) = m(i2, i1 + i3 * n1);
      break;
    case 3:
      for (Index i3 = 0; i3 < n3; ++i3)
        for (Index i2 = 0; i2 < n2; ++i2)
          for (Index i1 = 0; i1 < n1; ++i1) at(i1, i2, i3) = m(i3, i1 + i2 * n1);
      break;
  }
  return Tensor3::from_data(dims, std::move(data));
}

// Mode-n product t x_mode a: multiplies every mode fiber by a, changing the
// extent along that mode to a.rows().
inline Tensor3 mode_product(const Tensor3& t, const Matrix& a, int mode) {
  if (mode < 1 || mode > 3) throw UsageError("mode_product: mode must be 1, 2, or 3");
  if (a.cols() != t.extent(mode)) {
    throw UsageError("mode_product: matrix columns do not match the tensor extent along the mode");
  }
  Dims3 dims = t.dims();
  dims[static_cast<std::size_t>(mode - 1)] = a.rows();
  return refold(a * unfold(t, mode), mode, dims);
}

// Per-mode projections for the two reduced modes. Mode 3 indexes persons and
// is never projected. Each matrix is (target_dim x source_dim).
struct ProjectionSet {
  Matrix p1;
  Matrix p2;

  Index source_dim(int mode) const { return mode == 1 ? p1.cols() : p2.cols(); }
  Index target_dim(int mode) const { return mode == 1 ? p1.rows() : p2.rows(); }
};

// t x_1 P1 x_2 P2; the mode-3 extent is unchanged.
inline Tensor3 multi_project(const Tensor3& t, const ProjectionSet& p) {
  if (p.p1.cols() != t.extent(1) || p.p2.cols() != t.extent(2)) {
    throw UsageError("multi_project: projection shapes do not match tensor extents");
  }
  return mode_product(mode_product(t, p.p1, 1), p.p2, 2);
}

// Columns are the vectorized (mode-1 fastest) slices, one per person:
// column p holds element (i1, i2) of slice p at offset i1 + i2*n1.
inline Matrix slice_columns(const Tensor3& t) {
  const auto [n1, n2, n3] = t.dims();
  return Eigen::Map<const Matrix>(t.data().data(), n1 * n2, n3);
}

}  // namespace txreid
