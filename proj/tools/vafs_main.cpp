#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vafs/cloud_io.hpp"
#include "vafs/commands.hpp"
#include "vafs/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Shared {
  std::optional<fs::path> config;
  std::string encoder = "mock";
  std::optional<double> voxel_size;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  double latency_ms = 0.0;
  std::size_t concurrency = 1;
};

void add_shared(CLI::App* app, Shared& s, bool with_encoder = true) {
  app->add_option("--config", s.config, "RunConfig JSON file")->check(CLI::ExistingFile);
  if (with_encoder) {
    app->add_option("--encoder", s.encoder, "mock | mock:DIM | fixture:PATH | external:CMD");
    app->add_option("--latency-ms", s.latency_ms, "Fixed latency per mock request")->check(CLI::NonNegativeNumber);
    app->add_option("--concurrency", s.concurrency, "Concurrent mock requests")->check(CLI::PositiveNumber);
  }
  app->add_option("--voxel-size", s.voxel_size, "Overrides voxel_size");
  app->add_option("--seed", s.seed, "Random seed");
  app->add_option("--out", s.out, "Output path");
}

vafs::RunConfig load_config(const Shared& s) {
  vafs::RunConfig c = s.config ? vafs::load_run_config(*s.config) : vafs::RunConfig{};
  if (s.voxel_size) c.voxel_size = *s.voxel_size;
  c.validate();
  return c;
}

std::unique_ptr<vafs::Encoder> open_encoder(const Shared& s) {
  return vafs::make_encoder(s.encoder, std::chrono::microseconds(static_cast<std::int64_t>(s.latency_ms * 1000.0)),
                            s.concurrency);
}

void emit(const nlohmann::json& j, const std::optional<fs::path>& path) {
  if (path) {
    std::ofstream os(*path);
    if (!os) throw vafs::DataError("cannot write " + path->string());
    os << j.dump(2) << '\n';
  } else {
    std::cout << j.dump(2) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("vafs");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Voxel-aggregated feature synthesis: semantic concept clouds from segmented point clouds"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  Shared map_s;
  fs::path manifest;
  std::optional<fs::path> report_path, dump_views;
  auto* map = app.add_subcommand("map", "Build a concept cloud from a scene manifest");
  map->add_option("manifest", manifest, "Scene manifest JSON")->required();
  add_shared(map, map_s);
  map->add_option("--report", report_path, "Write the JSON run report here instead of stdout");
  map->add_option("--dump-views", dump_views, "Directory for rendered view PNGs");

  Shared query_s;
  fs::path cloud_path;
  std::string text;
  std::optional<double> threshold;
  std::optional<std::string> target;
  std::optional<fs::path> query_report;
  auto* query = app.add_subcommand("query", "Score a concept cloud against a text query");
  query->add_option("cloud", cloud_path, "Concept-cloud PLY")->required()->check(CLI::ExistingFile);
  query->add_option("text", text, "Query text")->required();
  add_shared(query, query_s);
  query->add_option("--threshold", threshold, "Relevancy threshold on normalized scores");
  query->add_option("--target", target, "Ground-truth object (label or id) for IoU");
  query->add_option("--report", query_report, "Write the JSON result here instead of stdout");

  Shared bench_s;
  std::optional<fs::path> scene_spec;
  std::size_t objects = 10;
  vafs::BenchOptions bench_opts;
  bool bench_json = false;
  auto* bench = app.add_subcommand("bench", "Compare VAFS against the per-frame baseline");
  add_shared(bench, bench_s, false);
  bench->add_option("--scene", scene_spec, "Scene spec JSON (default: a ring of boxes)")->check(CLI::ExistingFile);
  bench->add_option("--objects", objects, "Objects in the default ring scene")->check(CLI::PositiveNumber);
  bench->add_option("--frames", bench_opts.frames, "Orbit frames for the baseline")->check(CLI::PositiveNumber);
  bench->add_option("--latency-ms", bench_opts.latency_ms, "Mock encoder latency")->check(CLI::NonNegativeNumber);
  bench->add_option("--concurrency", bench_opts.concurrency, "Concurrent encoder requests")->check(CLI::PositiveNumber);
  bench->add_flag("--json", bench_json, "Print JSON instead of a table");

  Shared gen_s;
  fs::path spec_path;
  auto* gen = app.add_subcommand("gen-scene", "Write a synthetic scene as PLY frames plus a manifest");
  gen->add_option("spec", spec_path, "Scene spec JSON")->required()->check(CLI::ExistingFile);
  add_shared(gen, gen_s, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (verbose) spdlog::set_level(spdlog::level::info);

  try {
    if (*map) {
      if (!map_s.out) throw CLI::RequiredError("--out");
      const auto config = load_config(map_s);
      auto encoder = open_encoder(map_s);
      vafs::PipelineOptions opts;
      if (dump_views) {
        fs::create_directories(*dump_views);
        opts.dump_views_dir = *dump_views;
      }
      const auto report = vafs::run_map(vafs::read_manifest(manifest), config, *encoder, *map_s.out, opts);
      emit(report.to_json(), report_path);
    } else if (*query) {
      const auto config = load_config(query_s);
      auto encoder = open_encoder(query_s);
      const auto file = vafs::read_concept_cloud(cloud_path);
      const auto report = vafs::run_query(file, text, *encoder, threshold.value_or(config.relevancy_threshold), target,
                                          query_s.out);
      emit(report.to_json(), query_report);
    } else if (*bench) {
      const auto config = load_config(bench_s);
      const auto spec = scene_spec ? vafs::load_scene_spec(*scene_spec) : vafs::ring_scene(objects);
      const auto report = vafs::run_bench(spec, bench_s.seed.value_or(spec.seed), config, bench_opts);
      if (bench_s.out) emit(report.to_json(), bench_s.out);
      if (bench_json) {
        emit(report.to_json(), std::nullopt);
      } else {
        std::cout << report.table();
      }
    } else if (*gen) {
      if (!gen_s.out) throw CLI::RequiredError("--out");
      const auto spec = vafs::load_scene_spec(spec_path);
      std::cout << vafs::run_gen_scene(spec, gen_s.seed.value_or(spec.seed), *gen_s.out).string() << '\n';
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const vafs::EncoderError& e) {
    std::cerr << "encoder error: " << e.what() << '\n';
    return 3;
  } catch (const vafs::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
