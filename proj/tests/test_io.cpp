#include <cstdint>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vafs/cloud_io.hpp"
#include "vafs/image_io.hpp"
#include "vafs/ply.hpp"

using namespace vafs;
using testutil::pt;
using testutil::TempDir;

namespace {

SegmentedPointCloud sample_cloud() {
  SegmentedPointCloud c;
  c.timestep = 4;
  c.points = {pt(0.5f, -1.25f, 2.0f, 3, {1, 0, 0}), pt(0.125f, 0.25f, -0.75f, 0xFFFFFFFFu, {0, 128 / 255.0, 1}),
              pt(1, 2, 3, 7, {10 / 255.0, 20 / 255.0, 30 / 255.0})};
  return c;
}

}  // namespace

TEST(FrameIo, SinglePointTranscription) {
  TempDir dir;
  testutil::spit(dir / "one.ply",
                 "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
                 "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty uint object_id\nend_header\n"
                 "0 0 0 255 0 0 3\n");
  const auto c = read_frame(dir / "one.ply");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.points[0], pt(0, 0, 0, 3, {1, 0, 0}));
  EXPECT_TRUE(validate_cloud(c).empty());
}

TEST(FrameIo, MissingObjectIdColumnIsAFormatError) {
  TempDir dir;
  testutil::spit(dir / "bad.ply",
                 "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
                 "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n0 0 0 255 0 0\n");
  try {
    read_frame(dir / "bad.ply");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("object_id"), std::string::npos);
  }
}

TEST(FrameIo, AsciiParseErrorCarriesLineNumber) {
  TempDir dir;
  testutil::spit(dir / "bad.ply",
                 "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
                 "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty uint object_id\nend_header\n"
                 "0 0 0 255 0 0 3\n0 zero 0 255 0 0 3\n");
  try {
    read_frame(dir / "bad.ply");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 13"), std::string::npos) << e.what();
  }
}

TEST(FrameIo, TruncatedBinaryCarriesRecordNumber) {
  TempDir dir;
  write_frame(sample_cloud(), dir / "f.ply");
  auto bytes = testutil::slurp(dir / "f.ply");
  bytes.resize(bytes.size() - 5);
  testutil::spit(dir / "f.ply", bytes);
  try {
    read_frame(dir / "f.ply");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos) << e.what();
  }
}

TEST(FrameIo, RoundTripIsBitExactInBothFormats) {
  TempDir dir;
  const auto c = sample_cloud();
  for (auto fmt : {ply::Format::kBinaryLittleEndian, ply::Format::kAscii}) {
    write_frame(c, dir / "rt.ply", fmt);
    EXPECT_EQ(read_frame(dir / "rt.ply"), c);
  }
}

TEST(FrameIo, EmptyCloudIsHeaderOnly) {
  TempDir dir;
  SegmentedPointCloud c;
  write_frame(c, dir / "e.ply");
  EXPECT_TRUE(read_frame(dir / "e.ply").empty());
}

TEST(FrameIo, PreservesOrderAndMaxObjectId) {
  TempDir dir;
  const auto c = sample_cloud();
  write_frame(c, dir / "o.ply");
  const auto back = read_frame(dir / "o.ply");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.points[1].object_id, 0xFFFFFFFFu);
  EXPECT_EQ(back.points[2].position, c.points[2].position);
  EXPECT_EQ(back.timestep, 4u);
}

TEST(FrameIo, RejectsInvalidCloudOnWrite) {
  TempDir dir;
  SegmentedPointCloud c{0, {pt(0, 0, 0, 1, {2, 0, 0})}};
  EXPECT_THROW(write_frame(c, dir / "x.ply"), DataError);
}

TEST(ConceptCloudIo, RoundTripWithLabelsAndMixedVoxels) {
  TempDir dir;
  ConceptCloud c;
  c.feature_dim = 3;
  c.voxel_size = 0.1;
  c.points = {{{0.1, 0.2, 0.3}, FeatureVector({1, 0, 0}), 5}, {{-1e-17, 1.0 / 3.0, 7}, FeatureVector({0, 0.6, 0.8}), {}}};
  const LabelMap labels{{5, "red \"apple\""}, {9, "banana"}};
  write_concept_cloud(c, labels, dir / "cc.ply");
  const auto back = read_concept_cloud(dir / "cc.ply");
  EXPECT_EQ(back.cloud, c);
  EXPECT_EQ(back.labels, labels);
}

TEST(ConceptCloudIo, RejectsPlainFrames) {
  TempDir dir;
  write_frame(sample_cloud(), dir / "f.ply");
  EXPECT_THROW(read_concept_cloud(dir / "f.ply"), DataError);
}

TEST(ImageIo, Base64RoundTrip) {
  const std::vector<std::uint8_t> bytes = {0, 1, 2, 250, 251, 252, 253};
  for (std::size_t n = 0; n <= bytes.size(); ++n) {
    const std::vector<std::uint8_t> head(bytes.begin(), bytes.begin() + n);
    EXPECT_EQ(base64_decode(base64_encode(head)), head);
  }
  EXPECT_EQ(base64_encode(std::vector<std::uint8_t>{'M', 'a', 'n'}), "TWFu");
  EXPECT_THROW(base64_decode("T@Fu"), DataError);
}

TEST(ImageIo, PngIsDeterministicWithSignature) {
  Image img(5, 3, {10, 20, 30});
  img.set(2, 1, {255, 0, 0});
  const auto a = encode_png(img), b = encode_png(img);
  EXPECT_EQ(a, b);
  ASSERT_GT(a.size(), 8u);
  EXPECT_EQ(a[1], 'P');
  EXPECT_EQ(a[2], 'N');
  EXPECT_EQ(a[3], 'G');
}
