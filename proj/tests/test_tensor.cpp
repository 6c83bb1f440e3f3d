#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "test_helpers.hpp"
#include "txreid/tensor.hpp"

using namespace txreid;

namespace {

// t[i,j,k] = i + 2j + 4k over dims 2x2x2: every entry equals its own linear
// offset, which makes the index maps directly readable.
Tensor3 counting_tensor() {
  Tensor3 t(2, 2, 2);
  for (Index k = 0; k < 2; ++k)
    for (Index j = 0; j < 2; ++j)
      for (Index i = 0; i < 2; ++i) t(i, j, k) = static_cast<double>(i + 2 * j + 4 * k);
  return t;
}

}  // namespace

TEST_CASE("unfold follows the lower-mode-fastest column order") {
  const Tensor3 t = counting_tensor();

  const Matrix m1 = unfold(t, 1);
  Matrix want1(2, 4);
  want1 << 0, 2, 4, 6, 1, 3, 5, 7;
  REQUIRE(m1 == want1);

  const Matrix m2 = unfold(t, 2);
  Matrix want2(2, 4);
  want2 << 0, 1, 4, 5, 2, 3, 6, 7;
  REQUIRE(m2 == want2);

  const Matrix m3 = unfold(t, 3);
  Matrix want3(2, 4);
  want3 << 0, 1, 2, 3, 4, 5, 6, 7;
  REQUIRE(m3 == want3);
}

TEST_CASE("unfold matches the brute-force index map on random tensors") {
  testutil::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor3 t = rng.tensor(rng.integer(1, 6), rng.integer(1, 6), rng.integer(1, 6));
    for (int mode = 1; mode <= 3; ++mode) {
      REQUIRE(unfold(t, mode) == oracle::unfold_by_index_map(t, mode));
    }
  }
}

TEST_CASE("unfold rejects invalid modes") {
  const Tensor3 t = counting_tensor();
  REQUIRE_THROWS_AS(unfold(t, 0), UsageError);
  REQUIRE_THROWS_AS(unfold(t, 4), UsageError);
}

TEST_CASE("refold inverts unfold bit-exactly") {
  testutil::Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor3 t = rng.tensor(rng.integer(1, 8), rng.integer(1, 8), rng.integer(1, 8));
    for (int mode = 1; mode <= 3; ++mode) {
      REQUIRE(refold(unfold(t, mode), mode, t.dims()) == t);
    }
  }
}

TEST_CASE("refold examples and contract errors") {
  Matrix rows(2, 4);
  rows << 0, 2, 4, 6, 1, 3, 5, 7;
  REQUIRE(refold(rows, 1, {2, 2, 2}) == counting_tensor());

  Matrix scalar(1, 1);
  scalar << 5;
  for (int mode = 1; mode <= 3; ++mode) {
    const Tensor3 t = refold(scalar, mode, {1, 1, 1});
    REQUIRE(t(0, 0, 0) == 5.0);
  }

  Matrix bad(2, 3);
  bad.setZero();
  REQUIRE_THROWS_AS(refold(bad, 1, {2, 2, 2}), UsageError);
}

TEST_CASE("mode_product examples") {
  const Tensor3 t = counting_tensor();

  SECTION("identity is the identity map, bit-exactly") {
    for (int mode = 1; mode <= 3; ++mode) {
      REQUIRE(mode_product(t, Matrix::Identity(2, 2), mode) == t);
    }
  }

  SECTION("row-sum matrix collapses mode 1") {
    Matrix a(1, 2);
    a << 1, 1;
    const Tensor3 r = mode_product(t, a, 1);
    REQUIRE(r.dims() == Dims3{1, 2, 2});
    REQUIRE(r(0, 0, 0) == 1.0);
    REQUIRE(r(0, 1, 0) == 5.0);
    REQUIRE(r(0, 0, 1) == 9.0);
    REQUIRE(r(0, 1, 1) == 13.0);
  }

  SECTION("scaling matrix doubles every entry") {
    const Tensor3 r = mode_product(t, 2.0 * Matrix::Identity(2, 2), 1);
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j)
        for (Index k = 0; k < 2; ++k) REQUIRE(r(i, j, k) == 2.0 * t(i, j, k));
  }

  SECTION("dimension mismatch is a usage error") {
    REQUIRE_THROWS_AS(mode_product(t, Matrix::Identity(3, 3), 1), UsageError);
  }
}

TEST_CASE("mode products over distinct modes commute") {
  testutil::Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n1 = rng.integer(1, 6), n2 = rng.integer(1, 6), n3 = rng.integer(1, 6);
    const Tensor3 t = rng.tensor(n1, n2, n3);
    const Matrix a = rng.matrix(rng.integer(1, 6), n1);
    const Matrix b = rng.matrix(rng.integer(1, 6), n2);
    const Tensor3 r1 = mode_product(mode_product(t, a, 1), b, 2);
    const Tensor3 r2 = mode_product(mode_product(t, b, 2), a, 1);
    const Matrix m1 = unfold(r1, 1), m2 = unfold(r2, 1);
    REQUIRE(testutil::rel_err(m1, m2) < 1e-12);
  }
}

TEST_CASE("unfold is linear for exactly representable scalars") {
  testutil::Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n1 = rng.integer(1, 5), n2 = rng.integer(1, 5), n3 = rng.integer(1, 5);
    Tensor3 t(n1, n2, n3), s(n1, n2, n3), combo(n1, n2, n3);
    const double alpha = rng.integer(-4, 4), beta = rng.integer(-4, 4);
    for (Index k = 0; k < n3; ++k)
      for (Index j = 0; j < n2; ++j)
        for (Index i = 0; i < n1; ++i) {
          t(i, j, k) = rng.integer(-8, 8);
          s(i, j, k) = rng.integer(-8, 8);
          combo(i, j, k) = alpha * t(i, j, k) + beta * s(i, j, k);
        }
    for (int mode = 1; mode <= 3; ++mode) {
      const Matrix lhs = unfold(combo, mode);
      const Matrix rhs = alpha * unfold(t, mode) + beta * unfold(s, mode);
      REQUIRE(lhs == rhs);
    }
  }
}

TEST_CASE("multi_project") {
  testutil::Rng rng(19);

  SECTION("identity projections leave the tensor unchanged") {
    const Tensor3 t = rng.tensor(3, 4, 5);
    const ProjectionSet p{Matrix::Identity(3, 3), Matrix::Identity(4, 4)};
    REQUIRE(multi_project(t, p) == t);
  }

  SECTION("shape contract") {
    const Tensor3 t = rng.tensor(4, 6, 10);
    const ProjectionSet p{rng.matrix(3, 4), rng.matrix(2, 6)};
    REQUIRE(multi_project(t, p).dims() == Dims3{3, 2, 10});
  }

  SECTION("equals sequential mode products in either order") {
    const Tensor3 t = rng.tensor(4, 6, 7);
    const ProjectionSet p{rng.matrix(2, 4), rng.matrix(3, 6)};
    const Tensor3 r = multi_project(t, p);
    const Tensor3 seq12 = mode_product(mode_product(t, p.p1, 1), p.p2, 2);
    const Tensor3 seq21 = mode_product(mode_product(t, p.p2, 2), p.p1, 1);
    REQUIRE(testutil::rel_err(unfold(r, 1), unfold(seq12, 1)) < 1e-12);
    REQUIRE(testutil::rel_err(unfold(r, 1), unfold(seq21, 1)) < 1e-12);
  }

  SECTION("dimension mismatch is a usage error") {
    const Tensor3 t = rng.tensor(4, 6, 7);
    const ProjectionSet p{rng.matrix(2, 5), rng.matrix(3, 6)};
    REQUIRE_THROWS_AS(multi_project(t, p), UsageError);
  }
}

TEST_CASE("tensor construction rejects bad input") {
  REQUIRE_THROWS_AS(Tensor3(0, 1, 1), UsageError);
  REQUIRE_THROWS_AS(Tensor3::from_data({2, 2, 2}, std::vector<double>(7, 0.0)), UsageError);
  std::vector<double> with_nan(8, 0.0);
  with_nan[3] = std::nan("");
  REQUIRE_THROWS_AS(Tensor3::from_data({2, 2, 2}, with_nan), NumericalError);
}

TEST_CASE("slice_columns vectorizes each person slice mode-1 fastest") {
  const Tensor3 t = counting_tensor();
  const Matrix s = slice_columns(t);
  REQUIRE(s.rows() == 4);
  REQUIRE(s.cols() == 2);
  for (Index p = 0; p < 2; ++p)
    for (Index j = 0; j < 2; ++j)
      for (Index i = 0; i < 2; ++i) REQUIRE(s(i + 2 * j, p) == t(i, j, p));
}
