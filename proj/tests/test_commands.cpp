#include <cstdlib>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "test_util.hpp"
#include "vafs/baseline.hpp"
#include "vafs/cloud_io.hpp"
#include "vafs/commands.hpp"
#include "vafs/scene.hpp"

using namespace vafs;
using testutil::TempDir;

#ifndef VAFS_CLI
#error "VAFS_CLI must name the vafs executable"
#endif

namespace {

SceneSpec small_scene(std::size_t objects, std::size_t timesteps = 1) {
  auto s = ring_scene(objects, 200);
  s.timesteps = timesteps;
  return s;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VAFS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// --- baseline -------------------------------------------------------------------------

TEST(Baseline, OneFrameThreeVisibleObjectsCostsFourCalls) {
  const auto cloud = generate_scene(small_scene(3), 1)[0];
  const auto frames = generate_orbit_frames(cloud, 1, {});
  MockEncoder enc;
  const auto r = run_baseline(frames, cloud, enc, {});
  EXPECT_EQ(r.encoder_calls, 4u);
  EXPECT_EQ(enc.image_calls(), 4u);
  EXPECT_TRUE(r.cloud.voxel_size.has_value());
  for (const auto& p : r.cloud.points) EXPECT_TRUE(p.feature.is_unit());
}

TEST(Baseline, CallsGrowLinearlyWithFrames) {
  const auto cloud = generate_scene(small_scene(4), 1)[0];
  for (std::size_t n : {1u, 5u, 12u}) {
    MockEncoder enc;
    const auto frames = generate_orbit_frames(cloud, n, {});
    std::size_t expected = 0;
    for (const auto& f : frames) {
      std::map<std::int64_t, std::size_t> counts;
      for (auto id : f.mask.ids)
        if (id != kNoObject) ++counts[id];
      expected += 1;
      for (const auto& [id, c] : counts) expected += c >= 25 ? 1 : 0;
    }
    EXPECT_EQ(run_baseline(frames, cloud, enc, {}).encoder_calls, expected);
    EXPECT_EQ(expected, n * 5);
  }
}

TEST(Baseline, UnseenObjectsTakeTheGlobalMean) {
  const auto cloud = generate_scene(small_scene(2), 1)[0];
  auto frames = generate_orbit_frames(cloud, 2, {});
  for (auto& f : frames)
    for (auto& id : f.mask.ids)
      if (id == 2) id = kNoObject;
  MockEncoder enc;
  const auto r = run_baseline(frames, cloud, enc, {});
  EXPECT_EQ(r.encoder_calls, 4u);
  const auto g0 = enc.embed_image(frames[0].image), g1 = enc.embed_image(frames[1].image);
  std::vector<double> mean(g0.dim());
  for (std::size_t d = 0; d < mean.size(); ++d) mean[d] = g0[d] + g1[d];
  const auto want = FeatureVector(mean).normalized();
  bool found = false;
  for (const auto& p : r.cloud.points) {
    if (p.source_object != ObjectId{2}) continue;
    found = true;
    for (std::size_t d = 0; d < want.dim(); ++d) EXPECT_NEAR(p.feature[d], want[d], 1e-12);
  }
  EXPECT_TRUE(found);
}

TEST(Baseline, Errors) {
  const auto cloud = generate_scene(small_scene(2), 1)[0];
  MockEncoder enc;
  EXPECT_THROW(run_baseline({}, cloud, enc, {}), DataError);
  auto frames = generate_orbit_frames(cloud, 1, {});
  auto stray = frames;
  stray[0].mask.ids[0] = 77;
  EXPECT_THROW(run_baseline(stray, cloud, enc, {}), DataError);
  auto shrunk = frames;
  shrunk[0].mask.width = 10;
  EXPECT_THROW(run_baseline(shrunk, cloud, enc, {}), DataError);
}

TEST(Baseline, CropIsTight) {
  Image img(6, 5, kBackground);
  ObjectMask m{6, 5, std::vector<std::int64_t>(30, kNoObject)};
  for (auto [x, y] : {std::pair{1, 1}, std::pair{3, 2}}) {
    m.ids[y * 6 + x] = 4;
    img.set(x, y, {1, 2, 3});
  }
  const auto c = crop_to_object(img, m, 4);
  EXPECT_EQ(c.width, 3);
  EXPECT_EQ(c.height, 2);
  EXPECT_EQ(c.at(0, 0), (Rgb8{1, 2, 3}));
  EXPECT_EQ(c.at(2, 1), (Rgb8{1, 2, 3}));
  EXPECT_THROW(crop_to_object(img, m, 5), DataError);
}

// --- commands ---------------------------------------------------------------------------

TEST(Commands, MapOneFrameTwoObjectsCostsThreeCalls) {
  TempDir dir;
  const auto manifest = run_gen_scene(small_scene(2), 1, dir.path());
  MockEncoder enc;
  const auto report = run_map(read_manifest(manifest), {}, enc, dir / "cc.ply");
  EXPECT_EQ(report.encoder_calls, 3u);
  const auto j = report.to_json();
  EXPECT_EQ(j.at("encoder_calls"), 3);
  EXPECT_TRUE(j.at("per_stage_seconds").contains("feature_2d"));
  EXPECT_TRUE(j.at("per_stage_seconds").contains("fusion_3d"));
  EXPECT_EQ(j.at("points_in"), 400);
  const auto file = read_concept_cloud(dir / "cc.ply");
  EXPECT_EQ(file.cloud.size(), report.voxels_out);
  EXPECT_EQ(file.labels.at(1), "object_1");
}

TEST(Commands, IdenticalFramesAddNoCalls) {
  TempDir dir;
  const auto manifest = run_gen_scene(small_scene(2, 2), 1, dir.path());
  MockEncoder enc;
  const auto report = run_map(read_manifest(manifest), {}, enc, dir / "cc.ply");
  EXPECT_EQ(report.calls_per_step, (std::vector<std::size_t>{3, 0}));
}

TEST(Commands, GenSceneIsByteDeterministic) {
  TempDir a, b;
  auto spec = small_scene(3, 2);
  spec.motions.push_back({1, 1, {0.1, 0, 0}, 0});
  run_gen_scene(spec, 4, a.path());
  run_gen_scene(spec, 4, b.path());
  for (const char* name : {"frame_0000.ply", "frame_0001.ply"}) {
    EXPECT_EQ(testutil::slurp(a / name), testutil::slurp(b / name)) << name;
  }
  EXPECT_EQ(read_manifest(a / "manifest.json").frames.size(), 2u);
}

TEST(Commands, QueryThresholdZeroCoversEverything) {
  TempDir dir;
  const auto manifest = run_gen_scene(small_scene(3), 1, dir.path());
  MockEncoder enc;
  run_map(read_manifest(manifest), {}, enc, dir / "cc.ply");
  const auto file = read_concept_cloud(dir / "cc.ply");
  const auto r = run_query(file, "object", enc, 0.0, std::string("object_2"), dir / "rel.ply");
  EXPECT_EQ(r.result.mask.size(), file.cloud.size());
  ASSERT_TRUE(r.result.iou.has_value());
  EXPECT_GT(*r.result.iou, 0.0);
  EXPECT_EQ(r.target, 2u);
  EXPECT_TRUE(std::filesystem::exists(dir / "rel.ply"));
  EXPECT_THROW(run_query(file, "x", enc, 0.5, std::string("nothing"), std::nullopt), DataError);
  EXPECT_THROW(run_query(ConceptCloudFile{}, "x", enc, 0.5, std::nullopt, std::nullopt), DataError);
}

TEST(Commands, ResolveTarget) {
  const LabelMap labels{{3, "banana"}, {5, "7"}};
  EXPECT_EQ(resolve_target("banana", labels), 3u);
  EXPECT_EQ(resolve_target("7", labels), 5u);  // labels win over ids
  EXPECT_EQ(resolve_target("42", labels), 42u);
  EXPECT_THROW(resolve_target("kiwi", labels), DataError);
}

TEST(Commands, BenchOneFrameOneObjectIsEven) {
  BenchOptions opts;
  opts.frames = 1;
  opts.latency_ms = 0;
  const auto r = run_bench(small_scene(1), 1, {}, opts);
  EXPECT_EQ(r.vafs.encoder_calls, 2u);
  EXPECT_EQ(r.baseline.encoder_calls, 2u);
  EXPECT_DOUBLE_EQ(r.call_ratio(), 1.0);
  EXPECT_NE(r.table().find("baseline"), std::string::npos);
}

// --- CLI exit codes -------------------------------------------------------------------------

TEST(Cli, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("map"), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("map " + (dir / "missing.json").string() + " --out " + (dir / "x.ply").string()), 2);

  testutil::spit(dir / "spec.json", scene_spec_to_json(small_scene(2)).dump());
  EXPECT_EQ(run_cli("gen-scene " + (dir / "spec.json").string() + " --out " + (dir / "scene").string()), 0);
  testutil::spit(dir / "bad_spec.json", R"({"objects": [{"center": [0, 0, 0], "size": [0, 1, 1], "color": [1, 0, 0]}]})");
  EXPECT_EQ(run_cli("gen-scene " + (dir / "bad_spec.json").string() + " --out " + (dir / "bad").string()), 2);

  const auto manifest = (dir / "scene" / "manifest.json").string();
  EXPECT_EQ(run_cli("map " + manifest + " --out " + (dir / "cc.ply").string() + " --report " + (dir / "r.json").string()), 0);
  const auto report = nlohmann::json::parse(testutil::slurp(dir / "r.json"));
  EXPECT_EQ(report.at("encoder_calls"), 3);
  EXPECT_EQ(run_cli("map " + manifest + " --out " + (dir / "cc2.ply").string() + " --encoder external:false"), 3);
  EXPECT_EQ(run_cli("query " + (dir / "cc.ply").string() + " banana --threshold 2"), 2);
  EXPECT_EQ(run_cli("query " + (dir / "cc.ply").string() + " banana --target object_1 --out " + (dir / "q.ply").string()), 0);

  testutil::spit(dir / "config.json", R"({"voxel_size": 0.2, "knn_k": 8})");
  EXPECT_EQ(run_cli("map " + manifest + " --config " + (dir / "config.json").string() + " --out " + (dir / "c3.ply").string()), 0);
  EXPECT_EQ(read_concept_cloud(dir / "c3.ply").cloud.voxel_size, 0.2);
  EXPECT_EQ(run_cli("map " + manifest + " --config " + (dir / "config.json").string() + " --voxel-size 0.3 --out " +
                    (dir / "c4.ply").string()),
            0);
  EXPECT_EQ(read_concept_cloud(dir / "c4.ply").cloud.voxel_size, 0.3);
  testutil::spit(dir / "bad_config.json", R"({"voxel_sise": 0.2})");
  EXPECT_EQ(run_cli("map " + manifest + " --config " + (dir / "bad_config.json").string() + " --out " + (dir / "c5.ply").string()), 2);
}
