#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "test_helpers.hpp"
#include "txreid/eval.hpp"
#include "txreid/matching.hpp"
#include "txreid/txqda.hpp"

using namespace txreid;

TEST_CASE("quadratic_distance") {
  SECTION("identity metric is squared Euclidean") {
    const Vector a{{1.0, 2.0}}, b{{4.0, 6.0}};
    REQUIRE(quadratic_distance(a, b, Matrix::Identity(2, 2)) == 25.0);
  }

  SECTION("zero difference gives zero for any metric") {
    testutil::Rng rng(107);
    const Matrix m = rng.spd(3);
    const Vector a{{0.5, -1.0, 2.0}};
    REQUIRE(quadratic_distance(a, a, m) == 0.0);
  }

  SECTION("diagonal metric example") {
    const Vector a{{3.0, 4.0}}, b{{0.0, 0.0}};
    const Matrix m = Vector{{2.0, 1.0}}.asDiagonal();
    REQUIRE(quadratic_distance(a, b, m) == 34.0);
  }

  SECTION("symmetry in the two arguments") {
    testutil::Rng rng(109);
    const Matrix m = rng.spd(4);
    const Vector a{{1.0, 2.0, 3.0, 4.0}}, b{{-1.0, 0.5, 0.0, 2.0}};
    REQUIRE(quadratic_distance(a, b, m) == quadratic_distance(b, a, m));
  }

  SECTION("dimension mismatch is a usage error") {
    const Vector a{{1.0, 2.0}}, b{{1.0, 2.0, 3.0}};
    REQUIRE_THROWS_AS(quadratic_distance(a, b, Matrix::Identity(2, 2)), UsageError);
  }

  SECTION("a PSD metric keeps distances non-negative up to roundoff") {
    testutil::Rng rng(111);
    const Matrix m = rng.spd(5, 0.0);
    for (int trial = 0; trial < 50; ++trial) {
      const Vector a = rng.matrix(5, 1), b = rng.matrix(5, 1);
      REQUIRE(quadratic_distance(a, b, m) >= -1e-9);
    }
  }
}

namespace {

std::pair<ViewTensor, ViewTensor> projected_views(int n_ids, std::uint64_t seed) {
  const auto [fa, fb] = synth_dataset(n_ids, 24, 0.3, seed);
  return {split_to_tensor(fa, View::A, 6), split_to_tensor(fb, View::B, 6)};
}

TxqdaModel toy_model(const ViewTensor& a, const ViewTensor& b) {
  TxqdaConfig cfg;
  cfg.target_dim1 = 2;
  cfg.target_dim2 = 3;
  cfg.max_itr = 2;
  return fit(a, b, cfg);
}

}  // namespace

TEST_CASE("distance_matrix") {
  const auto [a, b] = projected_views(9, 37);
  const TxqdaModel model = toy_model(a, b);

  SECTION("self comparison has an exactly zero diagonal") {
    const DistanceMatrix d = distance_matrix(a, a, model);
    for (Index i = 0; i < d.values.rows(); ++i) REQUIRE(d.values(i, i) == 0.0);
  }

  SECTION("shape follows probes x gallery") {
    const auto [fa2, fb2] = synth_dataset(5, 24, 0.3, 38);
    const ViewTensor probes = split_to_tensor(fa2, View::A, 6);
    const DistanceMatrix d = distance_matrix(probes, b, model);
    REQUIRE(d.values.rows() == 5);
    REQUIRE(d.values.cols() == 9);
    REQUIRE(d.probe_labels.size() == 5);
    REQUIRE(d.gallery_labels.size() == 9);
  }

  SECTION("entries match looped quadratic distances") {
    const DistanceMatrix d = distance_matrix(a, b, model);
    const Matrix zp = slice_columns(project(model, a).tensor);
    const Matrix zg = slice_columns(project(model, b).tensor);
    for (Index i = 0; i < d.values.rows(); ++i) {
      for (Index j = 0; j < d.values.cols(); ++j) {
        const double want = quadratic_distance(zp.col(i), zg.col(j), model.metric);
        const double scale = std::max(1.0, std::abs(want));
        REQUIRE(std::abs(d.values(i, j) - want) < 1e-12 * scale);
      }
    }
  }

  SECTION("multi-threaded rows equal single-threaded rows bit-exactly") {
    const DistanceMatrix d1 = distance_matrix(a, b, model, 1);
    const DistanceMatrix d4 = distance_matrix(a, b, model, 4);
    REQUIRE(d1.values == d4.values);
  }
}

TEST_CASE("normalize_scores") {
  DistanceMatrix d;
  d.probe_labels = {0, 1, 2};
  d.gallery_labels = {0, 1, 2};
  d.values.resize(3, 3);
  d.values << 2, 4, 6, 5, 5, 5, 1, 2, 3;

  SECTION("minmax maps rows to [0,1], constant rows to zero") {
    const DistanceMatrix n = normalize_scores(d, ScoreNormalization::MinMax);
    REQUIRE(n.values(0, 0) == 0.0);
    REQUIRE(n.values(0, 1) == 0.5);
    REQUIRE(n.values(0, 2) == 1.0);
    REQUIRE(n.values.row(1).norm() == 0.0);
  }

  SECTION("zscore uses the population standard deviation") {
    const DistanceMatrix n = normalize_scores(d, ScoreNormalization::ZScore);
    REQUIRE(n.values(2, 0) == Catch::Approx(-1.2247).margin(1e-4));
    REQUIRE(n.values(2, 1) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(n.values(2, 2) == Catch::Approx(1.2247).margin(1e-4));
    REQUIRE(n.values.row(1).norm() == 0.0);
  }

  SECTION("none is the identity") {
    const DistanceMatrix n = normalize_scores(d, ScoreNormalization::None);
    REQUIRE(n.values == d.values);
  }

  SECTION("rankings are invariant under monotone normalizations") {
    testutil::Rng rng(113);
    DistanceMatrix r;
    r.values = rng.matrix(6, 8, 0.0, 10.0);
    r.probe_labels.assign(6, 0);
    r.gallery_labels.assign(8, 0);
    const auto base = rank_gallery(r);
    REQUIRE(rank_gallery(normalize_scores(r, ScoreNormalization::MinMax)) == base);
    REQUIRE(rank_gallery(normalize_scores(r, ScoreNormalization::ZScore)) == base);
  }
}

TEST_CASE("rank_gallery") {
  DistanceMatrix d;
  d.probe_labels = {0, 1, 2};
  d.gallery_labels = {0, 1, 2};
  d.values.resize(3, 3);
  d.values << 0.3, 0.1, 0.2, 0.5, 0.5, 0.9, 0.7, 0.7, 0.7;

  const auto ranks = rank_gallery(d);
  REQUIRE(ranks[0] == std::vector<int>{1, 2, 0});
  REQUIRE(ranks[1] == std::vector<int>{0, 1, 2});  // tie breaks to the lower index
  REQUIRE(ranks[2] == std::vector<int>{0, 1, 2});  // total tie: identity permutation

  SECTION("every row is a permutation") {
    testutil::Rng rng(127);
    DistanceMatrix r;
    r.values = rng.matrix(10, 12);
    r.probe_labels.assign(10, 0);
    r.gallery_labels.assign(12, 0);
    for (const auto& row : rank_gallery(r)) {
      std::vector<int> sorted = row;
      std::sort(sorted.begin(), sorted.end());
      for (int i = 0; i < 12; ++i) REQUIRE(sorted[static_cast<std::size_t>(i)] == i);
    }
  }
}

TEST_CASE("distance csv has a gallery header row and probe label column") {
  DistanceMatrix d;
  d.probe_labels = {7, 9};
  d.gallery_labels = {1, 2, 3};
  d.values.resize(2, 3);
  d.values << 0.5, 1, 2, 3, 4, 5.25;

  std::ostringstream os;
  write_distance_csv(d, os);
  REQUIRE(os.str() == "probe,1,2,3\n7,0.5,1,2\n9,3,4,5.25\n");
}
