#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"
#include "vafs/cloud_io.hpp"
#include "vafs/ply.hpp"
#include "vafs/query.hpp"
#include "vafs/voxel.hpp"

using namespace vafs;
using testutil::basis;
using testutil::TempDir;

namespace {

ConceptCloud random_concepts(std::size_t n, unsigned seed, std::size_t dim = 8, double extent = 0.5) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-extent, extent);
  std::normal_distribution<double> g;
  ConceptCloud c;
  c.feature_dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> f(dim);
    for (auto& x : f) x = g(gen);
    c.points.push_back({{u(gen), u(gen), u(gen)}, FeatureVector(f).normalized(), static_cast<ObjectId>(i % 3)});
  }
  return c;
}

ConceptCloud cloud_of(std::vector<ConceptPoint> pts, std::size_t dim) {
  ConceptCloud c;
  c.feature_dim = dim;
  c.points = std::move(pts);
  return c;
}

void expect_matches_oracle(const ConceptCloud& got, const ConceptCloud& want) {
  ASSERT_EQ(got.size(), want.size());
  EXPECT_EQ(got.voxel_size, want.voxel_size);
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got.points[i].position, want.points[i].position) << i;
    EXPECT_EQ(got.points[i].source_object, want.points[i].source_object) << i;
    for (std::size_t d = 0; d < got.feature_dim; ++d) EXPECT_NEAR(got.points[i].feature[d], want.points[i].feature[d], 1e-12);
  }
}

}  // namespace

// --- voxel -------------------------------------------------------------------------

TEST(VoxelKey, FloorSemantics) {
  EXPECT_EQ(voxel_key({0.25, 0.31, 0.07}, 0.1), (VoxelKey{2, 3, 0}));
  EXPECT_EQ(voxel_key({-0.05, 0, 0}, 0.1), (VoxelKey{-1, 0, 0}));
  EXPECT_EQ(voxel_key({0.1, 0.1, 0.1}, 0.1), (VoxelKey{1, 1, 1}));
  EXPECT_EQ(voxel_key({-0.1, 0, 0}, 0.1), (VoxelKey{-1, 0, 0}));
}

TEST(Aggregate, SingletonIsUnchanged) {
  const auto u = FeatureVector({0.6, 0.8});
  const auto out = aggregate(cloud_of({{{0.05, 0.05, 0.05}, u, 4}}, 2), 0.1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.points[0].position, (Point3{0.05, 0.05, 0.05}));
  EXPECT_EQ(out.points[0].feature, u);
  EXPECT_EQ(out.points[0].source_object, 4u);
  EXPECT_EQ(out.voxel_size, 0.1);
}

TEST(Aggregate, TwoOrthogonalPointsInOneVoxel) {
  const auto out = aggregate(cloud_of({{{0.02, 0.01, 0.01}, basis(2, 0), 1}, {{0.08, 0.01, 0.01}, basis(2, 1), 2}}, 2), 0.1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out.points[0].position.x, 0.05, 1e-15);
  EXPECT_EQ(out.points[0].position.y, 0.01);
  EXPECT_NEAR(out.points[0].feature[0], 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(out.points[0].feature[1], 1 / std::sqrt(2.0), 1e-15);
  EXPECT_FALSE(out.points[0].source_object.has_value());
}

TEST(Aggregate, SeparateVoxelsStaySeparate) {
  const auto in = cloud_of({{{0.35, 0, 0}, basis(2, 1), 1}, {{0.05, 0, 0}, basis(2, 0), 1}}, 2);
  const auto out = aggregate(in, 0.1);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.points[0].position, in.points[1].position);  // sorted by key
  EXPECT_EQ(out.points[1].feature, basis(2, 1));
}

TEST(Aggregate, CancellingFeaturesFallBackToLowestIndex) {
  const auto f = FeatureVector({0.6, 0.8}), g = FeatureVector({-0.6, -0.8});
  const auto out = aggregate(cloud_of({{{0.01, 0, 0}, f, 1}, {{0.02, 0, 0}, g, 1}}, 2), 0.1);
  EXPECT_EQ(out.points[0].feature, f);
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate(ConceptCloud{}, 0.1), DataError);
  EXPECT_THROW(aggregate(cloud_of({{{0, 0, 0}, basis(2, 0), 1}}, 2), 0.0), DataError);
  EXPECT_THROW(aggregate(cloud_of({{{0, 0, 0}, basis(3, 0), 1}}, 2), 0.1), DataError);
}

TEST(Aggregate, MatchesBruteForceOracle) {
  for (unsigned seed : {1u, 2u, 3u}) {
    const auto in = random_concepts(1000, seed);
    const auto want = oracle::voxel_group_by(in, 0.1);
    expect_matches_oracle(aggregate(in, 0.1), want);
    expect_matches_oracle(serial::aggregate(in, 0.1), want);
  }
}

TEST(Aggregate, Properties) {
  const auto in = random_concepts(3000, 9, 6, 0.4);
  const auto out = aggregate(in, 0.1);
  EXPECT_LE(out.size(), in.size());
  std::set<VoxelKey> keys;
  for (const auto& p : out.points) {
    EXPECT_TRUE(p.feature.is_unit(1e-6));
    EXPECT_TRUE(keys.insert(voxel_key(p.position, 0.1)).second) << "two points in one voxel";
  }
  EXPECT_EQ(aggregate(out, 0.1), out);  // already one point per voxel
  EXPECT_EQ(out, serial::aggregate(in, 0.1));
}

TEST(Aggregate, PermutationDeterminism) {
  // Shuffling the input reorders the summation, so the reference order is the same input
  // permuted back: aggregation of a permuted cloud equals the oracle run on that permuted cloud.
  auto in = random_concepts(800, 5);
  std::mt19937_64 gen(5);
  std::shuffle(in.points.begin(), in.points.end(), gen);
  expect_matches_oracle(aggregate(in, 0.1), oracle::voxel_group_by(in, 0.1));
  // Positions and memberships do not depend on order at all.
  auto sorted = in;
  std::sort(sorted.points.begin(), sorted.points.end(), [](const ConceptPoint& a, const ConceptPoint& b) {
    return std::tie(a.position.x, a.position.y, a.position.z) < std::tie(b.position.x, b.position.y, b.position.z);
  });
  const auto a = aggregate(in, 0.1), b = aggregate(sorted, 0.1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a.points[i].position.x, b.points[i].position.x, 1e-15);
    for (std::size_t d = 0; d < a.feature_dim; ++d) EXPECT_NEAR(a.points[i].feature[d], b.points[i].feature[d], 1e-12);
  }
}

// --- relevancy ------------------------------------------------------------------------

TEST(Relevancy, ConstantScoresNormalizeToHalf) {
  const auto q = basis(3, 0);
  const auto r = relevancy(cloud_of({{{0, 0, 0}, q, 1}, {{1, 0, 0}, q, 2}}, 3), q);
  EXPECT_EQ(r.raw, (std::vector<double>{1, 1}));
  EXPECT_EQ(r.normalized, (std::vector<double>{0.5, 0.5}));
}

TEST(Relevancy, SingleMatchNormalizesToOne) {
  const auto r = relevancy(cloud_of({{{0, 0, 0}, basis(3, 1), 1}, {{1, 0, 0}, basis(3, 0), 2}, {{2, 0, 0}, basis(3, 2), 3}}, 3),
                           basis(3, 0));
  EXPECT_EQ(r.normalized, (std::vector<double>{0, 1, 0}));
}

TEST(Relevancy, SixtyDegreesScoresHalf) {
  const FeatureVector f({0.5, std::sqrt(3.0) / 2});
  const auto r = relevancy(cloud_of({{{0, 0, 0}, f, 1}}, 2), basis(2, 0));
  EXPECT_NEAR(r.raw[0], std::cos(M_PI / 3), 1e-15);
}

TEST(Relevancy, ParallelMatchesSerialAndRankingIsScaleInvariant) {
  const auto c = random_concepts(2000, 4);
  const auto q = random_concepts(1, 99).points[0].feature;
  const auto a = relevancy(c, q);
  EXPECT_EQ(a.raw, serial::relevancy(c, q).raw);
  EXPECT_EQ(a.normalized, serial::relevancy(c, q).normalized);
  std::vector<double> scaled(q.values().begin(), q.values().end());
  for (auto& x : scaled) x *= 7.5;
  const auto b = relevancy(c, FeatureVector(scaled));
  std::vector<std::size_t> ia(c.size()), ib(c.size());
  std::iota(ia.begin(), ia.end(), 0);
  std::iota(ib.begin(), ib.end(), 0);
  std::stable_sort(ia.begin(), ia.end(), [&](auto x, auto y) { return a.raw[x] > a.raw[y]; });
  std::stable_sort(ib.begin(), ib.end(), [&](auto x, auto y) { return b.raw[x] > b.raw[y]; });
  EXPECT_EQ(ia, ib);
}

TEST(Relevancy, Errors) {
  EXPECT_THROW(relevancy(ConceptCloud{}, basis(2, 0)), DataError);
  EXPECT_THROW(relevancy(cloud_of({{{0, 0, 0}, basis(2, 0), 1}}, 2), basis(3, 0)), DataError);
}

TEST(ThresholdMask, Examples) {
  RelevancyResult r;
  r.normalized = {0.2, 0.7};
  EXPECT_EQ(threshold_mask(r, 0.5), std::vector<std::size_t>{1});
  EXPECT_EQ(threshold_mask(r, 0.0), (std::vector<std::size_t>{0, 1}));
  r.normalized = {0.0, 1.0, 0.3, 1.0};
  EXPECT_EQ(threshold_mask(r, 1.0), (std::vector<std::size_t>{1, 3}));
}

// --- IoU --------------------------------------------------------------------------------

namespace {

ConceptCloud labelled(std::vector<std::optional<ObjectId>> owners) {
  ConceptCloud c;
  c.feature_dim = 2;
  for (std::size_t i = 0; i < owners.size(); ++i) c.points.push_back({{double(i), 0, 0}, basis(2, 0), owners[i]});
  return c;
}

}  // namespace

TEST(Iou, Examples) {
  const auto c = labelled({1, 1, 2, 2, std::nullopt});
  const std::vector<std::size_t> exact = {0, 1}, disjoint = {2, 3}, half = {1, 2};
  EXPECT_EQ(iou(exact, 1, c), 1.0);
  EXPECT_EQ(iou(disjoint, 1, c), 0.0);
  EXPECT_DOUBLE_EQ(iou(half, 1, c), 1.0 / 3.0);
  const std::vector<std::size_t> with_mixed = {0, 1, 4};
  EXPECT_DOUBLE_EQ(iou(with_mixed, 1, c), 2.0 / 3.0);
  EXPECT_THROW(iou(exact, 9, c), DataError);
}

TEST(Iou, BoundedAndMonotone) {
  std::mt19937_64 gen(8);
  std::vector<std::optional<ObjectId>> owners;
  for (int i = 0; i < 60; ++i) owners.push_back(static_cast<ObjectId>(gen() % 3));
  const auto c = labelled(owners);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> mask;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (gen() % 2) mask.push_back(i);
    const double v = iou(mask, 0, c);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (owners[i] == ObjectId{0} || std::count(mask.begin(), mask.end(), i)) continue;
      auto bigger = mask;
      bigger.push_back(i);
      EXPECT_LE(iou(bigger, 0, c), v);
      break;
    }
  }
}

// --- export -------------------------------------------------------------------------------

TEST(ExportRelevancy, ColormapEndpointsAndRoundTrip) {
  EXPECT_EQ(relevancy_color(0.0), (Rgb8{0, 0, 255}));
  EXPECT_EQ(relevancy_color(1.0), (Rgb8{255, 0, 0}));
  EXPECT_EQ(relevancy_color(0.5), (Rgb8{128, 0, 128}));

  TempDir dir;
  const auto c = random_concepts(50, 2);
  auto r = relevancy(c, c.points[0].feature);
  r.query = "first\npoint";
  export_relevancy(c, r, dir / "rel.ply");
  const auto doc = ply::read(dir / "rel.ply");
  ASSERT_EQ(doc.vertices.rows, c.size());
  EXPECT_FALSE(doc.vertices.column("object_id").has_value());
  const auto red = doc.vertices.require_column("red"), blue = doc.vertices.require_column("blue");
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto want = relevancy_color(r.normalized[i]);
    EXPECT_EQ(doc.vertices.at(i, red), want.r);
    EXPECT_EQ(doc.vertices.at(i, blue), want.b);
  }
  export_relevancy(c, r, dir / "rel2.ply");
  EXPECT_EQ(testutil::slurp(dir / "rel.ply"), testutil::slurp(dir / "rel2.ply"));
}
