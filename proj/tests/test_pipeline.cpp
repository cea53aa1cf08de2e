#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "bsda/config.hpp"
#include "bsda/pipeline.hpp"

using namespace bsda;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("bsda_test_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& s) const { return path / s; }
};

struct CliResult {
  int code = -1;
  std::string err;
};

CliResult cli(const std::string& args, const fs::path& scratch) {
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string("\"") + BSDA_CLI_PATH + "\" " + args + " 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = fs::exists(err) ? read_text(err) : "";
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("config parsing") {
  const KeyValues kv = KeyValues::parse(
      "# run\n"
      "fps = 30   # frame rate\n"
      "use_velocity_compare = true\n"
      "detections = a.csv, b.csv\n"
      "homography = 2 0 0, 0 2 0, 0 0 1\n");
  CHECK(kv.get_double("fps", 0) == 30.0);
  CHECK(kv.get_bool("use_velocity_compare", false));
  CHECK(kv.get_list("detections") == std::vector<std::string>{"a.csv", "b.csv"});
  const PipelineConfig cfg = PipelineConfig::from(kv);
  CHECK(cfg.sda.fps == 30.0);
  CHECK(cfg.scenario.fps == 30.0);
  CHECK(cfg.sda.use_velocity_compare);
  REQUIRE(cfg.homography);
  CHECK(warp_point(*cfg.homography, {3, 4}) == Point2{6, 8});
  CHECK(cfg.detections.size() == 2);

  const PipelineConfig d = PipelineConfig::from({});
  CHECK(d.sda.distance_threshold_px == 35.0);
  CHECK(d.sda.gamma == 0.1);
  CHECK(d.sda.velocity_threshold == 0.21);
  CHECK(d.sda.stability_threshold == 0.25);
  CHECK_FALSE(d.sda.use_velocity_compare);
  CHECK(d.tracker.iou_threshold == 0.3);
  CHECK(d.tracker.max_age == 1);
  CHECK(d.tracker.min_hits == 3);

  CHECK_THROWS_WITH_AS(KeyValues::parse("fps = 15\nfsp = 3\n"), doctest::Contains(":2"), Error);
  CHECK_THROWS_AS(KeyValues::parse("just words\n"), Error);
  KeyValues o;
  o.set_assignment("gamma=0.3");
  CHECK(o.get_double("gamma", 0) == 0.3);
  CHECK_THROWS_AS(o.set_assignment("nonsense"), Error);
  o.set("fps", "fast");
  CHECK_THROWS_AS(PipelineConfig::from(o), Error);
  KeyValues bad_h;
  bad_h.set("homography", "1 2 3");
  CHECK_THROWS_AS(PipelineConfig::from(bad_h), Error);
  KeyValues bad_gamma;
  bad_gamma.set("gamma", "2");
  CHECK_THROWS_AS(PipelineConfig::from(bad_gamma), Error);

  const auto c = parse_correspondences("0 0 0 0; 1 0 2 0; 1 1 2 2; 0 1 0 2");
  REQUIRE(c.size() == 4);
  KeyValues corr;
  corr.set("correspondences", "0 0 0 0; 1 0 2 0; 1 1 2 2; 0 1 0 2");
  const auto h = PipelineConfig::from(corr).homography;
  REQUIRE(h);
  const Point2 p = warp_point(*h, {0.5, 0.5});
  CHECK(p.x == doctest::Approx(1.0));
  CHECK(p.y == doctest::Approx(1.0));
}

TEST_CASE("cli end to end on a synthetic scene") {
  TempDir dir("e2e");
  const fs::path cfg = dir / "run.cfg";
  write_text(cfg,
             "output_dir = " + dir.path.string() + "\n"
             "pedestrian_count = 12\n"
             "group_count = 2\n"
             "spawn_window_frames = 150\n"
             "seed = 9\n"
             "detections = " + (dir / "detections.csv").string() + "\n"
             "tracks = " + (dir / "tracks.csv").string() + "\n"
             "gt = " + (dir / "gt.csv").string() + "\n"
             "gt_json = " + (dir / "gt.json").string() + "\n");

  REQUIRE(cli("synth -c " + q(cfg), dir.path).code == 0);
  const std::string det1 = read_text(dir / "detections.csv");
  const std::string gt1 = read_text(dir / "gt.json");
  REQUIRE(cli("synth -c " + q(cfg), dir.path).code == 0);
  CHECK(read_text(dir / "detections.csv") == det1);
  CHECK(read_text(dir / "gt.json") == gt1);

  REQUIRE(cli("track -c " + q(cfg), dir.path).code == 0);
  REQUIRE(cli("eval-mot -c " + q(cfg), dir.path).code == 0);
  const Json mot = Json::parse(read_text(dir / "mot_metrics.json"));
  // Walking groups keep boxes overlapping, so a rare association slip is possible.
  CHECK(mot["mota"].get<double>() > 0.98);

  REQUIRE(cli("eval-mot -c " + q(cfg) + " -s tracks=" + q(dir / "gt.csv"), dir.path).code == 0);
  CHECK(Json::parse(read_text(dir / "mot_metrics.json"))["mota"].get<double>() == 1.0);

  REQUIRE(cli("analyze -c " + q(cfg), dir.path).code == 0);
  const std::string report1 = read_text(dir / "report.json");
  const std::string events1 = read_text(dir / "events.jsonl");
  REQUIRE(cli("analyze -c " + q(cfg), dir.path).code == 0);
  CHECK(read_text(dir / "report.json") == report1);
  CHECK(read_text(dir / "events.jsonl") == events1);
  const Json report = Json::parse(report1);
  CHECK(report["event_count"].get<long>() == static_cast<long>(std::count(events1.begin(), events1.end(), '\n')));
  CHECK(report["volume"]["flag"] == "uncorrected");
  CHECK(read_text(dir / "duration_histogram.csv").rfind("bin_start,bin_end,count\n", 0) == 0);

  // Perfect predictions: every within-threshold member pair of the annotation.
  const GroupGt gt = group_gt_from_json(Json::parse(gt1));
  std::vector<PairObservation> perfect;
  std::vector<ViolationPair> ids;
  for (const auto& b : gt.boxes)
    for (std::size_t i = 0; i < b.members.size(); ++i)
      for (std::size_t j = i + 1; j < b.members.size(); ++j)
        if (distance(b.members[i].bp, b.members[j].bp) < 35.0) {
          perfect.push_back({b.frame, b.members[i].bp, b.members[j].bp});
          ids.push_back({b.frame, b.members[i].id, b.members[j].id});
        }
  write_pair_csv(dir / "perfect.csv", perfect, ids);
  REQUIRE(cli("eval-groups -c " + q(cfg) + " -s predicted_groups=" + q(dir / "perfect.csv"), dir.path).code == 0);
  const Json gm = Json::parse(read_text(dir / "group_metrics.json"));
  CHECK(gm["f1"].get<double>() == 1.0);

  // The analyser's own same-group pairs against the annotation.
  REQUIRE(cli("eval-groups -c " + q(cfg) + " -s predicted_groups=" + q(dir / "same_group_pairs.csv"), dir.path).code == 0);
  CHECK(Json::parse(read_text(dir / "group_metrics.json"))["recall"].get<double>() > 0.9);
}

TEST_CASE("cli error contracts") {
  TempDir dir("errors");
  write_text(dir / "empty.csv", "");
  auto r = cli("track -s output_dir=" + q(dir.path) + " -s detections=" + q(dir / "empty.csv"), dir.path);
  CHECK(r.code == 0);
  CHECK(read_text(dir / "tracks.csv").empty());

  r = cli("analyze -s output_dir=" + q(dir.path) + " -s tracks=" + q(dir / "tracks.csv"), dir.path);
  CHECK(r.code == 0);
  const Json report = Json::parse(read_text(dir / "report.json"));
  CHECK(report["event_count"] == 0);
  CHECK(report["volume"]["flag"] == "no_tracks");
  CHECK(report["volume"]["estimated"] == 0);

  write_text(dir / "unordered.csv", "1,-1,10,10,15,30,1,0,-1\n3,-1,10,10,15,30,1,0,-1\n2,-1,10,10,15,30,1,0,-1\n");
  r = cli("track -s output_dir=" + q(dir.path) + " -s detections=" + q(dir / "unordered.csv"), dir.path);
  CHECK(r.code != 0);
  CHECK(r.err.find("frame 2") != std::string::npos);

  write_text(dir / "bad.csv", "1,-1,10,10,15,30,1,0,-1\n2,-1,10,ten,15,30,1,0,-1\n");
  r = cli("track -s output_dir=" + q(dir.path) + " -s detections=" + q(dir / "bad.csv"), dir.path);
  CHECK(r.code != 0);
  CHECK(r.err.find("row 2") != std::string::npos);

  r = cli("track -s no_such_key=1", dir.path);
  CHECK(r.code != 0);
  CHECK(r.err.find("no_such_key") != std::string::npos);

  r = cli("track -s output_dir=" + q(dir.path) + " -s detections=" + q(dir / "missing.csv"), dir.path);
  CHECK(r.code != 0);
}

TEST_CASE("several videos fan out") {
  TempDir dir("fanout");
  std::vector<std::string> files;
  for (int s = 1; s <= 3; ++s) {
    PipelineConfig c;
    c.output_dir = dir.path / ("scene" + std::to_string(s));
    c.scenario.seed = static_cast<std::uint64_t>(s);
    c.scenario.pedestrian_count = 8;
    c.scenario.spawn_window_frames = 100;
    run_synth(c);
    files.push_back((c.output_dir / "detections.csv").string());
  }
  PipelineConfig cfg;
  cfg.output_dir = dir.path / "out1";
  for (const auto& f : files) cfg.detections.emplace_back(f);
  const auto serial = run_track(cfg, 1);
  cfg.output_dir = dir.path / "out3";
  const auto parallel = run_track(cfg, 3);
  REQUIRE(serial.size() == 3);
  REQUIRE(parallel.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(read_text(serial[i]) == read_text(parallel[i]));

  cfg.tracks.assign(parallel.begin(), parallel.end());
  cfg.slots = {"morning", "noon", "morning"};
  const auto reports = run_analyze(cfg, 3);
  CHECK(reports.size() == 3);
  const Json slots = Json::parse(read_text(cfg.output_dir / "slots.json"));
  CHECK(slots["events_per_minute"].contains("morning"));
  CHECK(slots["events_per_minute"].contains("noon"));
}

TEST_CASE("preprocess") {
  TempDir dir("prep");
  const fs::path in = dir / "in";
  fs::create_directories(in);
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> px(0, 255);
  std::vector<Frame> frames;
  for (int i = 0; i < 4; ++i) {
    Frame f(32, 24, 1);
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(px(rng));
    write_pnm(f, in / ("f" + std::to_string(i) + ".pgm"));
    frames.push_back(f);
  }
  PipelineConfig cfg;
  cfg.images_dir = in;
  cfg.output_dir = dir / "identity";
  cfg.wmbs_alpha = 0.0;
  cfg.homography = Homography{};
  cfg.crop = CropRect{0, 0, 32, 24};
  CHECK(run_preprocess(cfg) == 4);
  std::vector<fs::path> outs;
  for (const auto& e : fs::directory_iterator(cfg.output_dir / "frames")) outs.push_back(e.path());
  std::sort(outs.begin(), outs.end());
  REQUIRE(outs.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(read_pnm(outs[i]).pixels == frames[i].pixels);

  const fs::path flat = dir / "flat";
  fs::create_directories(flat);
  for (int i = 0; i < 3; ++i) write_pnm(Frame(16, 16, 3, 90), flat / ("f" + std::to_string(i) + ".ppm"));
  PipelineConfig z;
  z.images_dir = flat;
  z.output_dir = dir / "zero";
  z.wmbs_alpha = 1.0;
  CHECK(run_preprocess(z) == 3);
  for (const auto& e : fs::directory_iterator(z.output_dir / "frames")) {
    const Frame f = read_pnm(e.path());
    CHECK(f.channels == 3);
    CHECK(std::all_of(f.pixels.begin(), f.pixels.end(), [](std::uint8_t v) { return v == 0; }));
  }

  // Scaling homography: spot pixels match direct warp_frame output.
  PipelineConfig s;
  s.images_dir = in;
  s.output_dir = dir / "scaled";
  s.wmbs_alpha = 0.0;
  s.homography = Homography::scaling(2.0, 2.0);
  s.warp_size = Size{64, 48};
  run_preprocess(s);
  const Frame expected = warp_frame(*s.homography, frames[0], {64, 48}, Interpolation::Bilinear);
  CHECK(read_pnm(s.output_dir / "frames" / "000001.pgm").same_shape(64, 48, 1));
  CHECK(read_pnm(s.output_dir / "frames" / "000001.pgm").pixels == expected.pixels);

  PipelineConfig missing;
  missing.images_dir = dir / "nope";
  missing.output_dir = dir / "nope_out";
  CHECK_THROWS_AS(run_preprocess(missing), Error);
}
