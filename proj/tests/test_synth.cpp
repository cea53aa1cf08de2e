#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "bsda/mot_eval.hpp"
#include "bsda/synth.hpp"
#include "bsda/tracker.hpp"

using namespace bsda;

namespace {

std::string csv(const std::vector<MotRow>& rows) {
  std::ostringstream o;
  write_mot_csv(o, rows);
  return o.str();
}

// Frame-by-frame scan of the noiseless tracks for non-group pairs below the threshold.
std::vector<TrueInterval> scan_intervals(const ScenarioGroundTruth& t, double thr) {
  std::map<int, std::vector<const MotRow*>> by_frame;
  for (const auto& r : t.tracks) by_frame[r.frame].push_back(&r);
  std::map<std::pair<int, int>, std::vector<int>> hits;
  for (const auto& [f, rows] : by_frame)
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows.size(); ++j) {
        const int a = rows[i]->id, b = rows[j]->id;
        if (a >= b) continue;
        const auto ga = t.group_of.find(a), gb = t.group_of.find(b);
        if (ga != t.group_of.end() && gb != t.group_of.end() && ga->second == gb->second) continue;
        if (distance(bottom_point(rows[i]->bbox), bottom_point(rows[j]->bbox)) < thr) hits[{a, b}].push_back(f);
      }
  std::vector<TrueInterval> out;
  for (const auto& [p, fr] : hits) {
    int s = fr[0];
    for (std::size_t k = 1; k <= fr.size(); ++k)
      if (k == fr.size() || fr[k] != fr[k - 1] + 1) {
        out.push_back({p.first, p.second, s, fr[k - 1]});
        if (k < fr.size()) s = fr[k];
      }
  }
  std::sort(out.begin(), out.end(), [](const TrueInterval& x, const TrueInterval& y) {
    return std::tie(x.start_frame, x.a, x.b) < std::tie(y.start_frame, y.a, y.b);
  });
  return out;
}

}  // namespace

TEST_CASE("rng is reproducible") {
  SceneRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  SceneRng c(7);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = c.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / 20000) < 0.05);
  CHECK(std::abs(sq / 20000 - 1.0) < 0.05);
}

TEST_CASE("zero pedestrians") {
  ScenarioConfig cfg;
  cfg.pedestrian_count = 0;
  const Scenario s = generate(cfg);
  CHECK(s.detections.empty());
  CHECK(s.sim_tracks.empty());
  CHECK(s.truth.tracks.empty());
  CHECK(s.truth.violations.empty());
}

TEST_CASE("infeasible configs") {
  ScenarioConfig cfg;
  cfg.pedestrian_count = 3;
  cfg.group_count = 2;
  cfg.group_size_min = 2;
  CHECK_THROWS_AS(generate(cfg), Error);
  ScenarioConfig rate;
  rate.miss_rate = 1.5;
  CHECK_THROWS_AS(generate(rate), Error);
  ScenarioConfig sigma;
  sigma.jitter_sigma = -1;
  CHECK_THROWS_AS(generate(sigma), Error);
}

TEST_CASE("head-on strangers give one interval") {
  ScenarioConfig cfg;
  cfg.duration_frames = 300;
  const std::vector<WalkerPath> paths{
      {{20, 200}, {620, 200}, 2.0, 1, 0.0, 0.0},
      {{620, 220}, {20, 220}, 2.0, 1, 0.0, 0.0},
  };
  const Scenario s = generate_from_paths(paths, cfg);
  REQUIRE(s.truth.violations.size() == 1);
  const TrueInterval& v = s.truth.violations[0];
  CHECK(v.a == 1);
  CHECK(v.b == 2);
  CHECK((v.end_frame - v.start_frame + 1) / cfg.fps >= 1.0);
  CHECK(s.truth.violations == scan_intervals(s.truth, 35.0));
}

TEST_CASE("a lone group has no violations") {
  ScenarioConfig cfg;
  std::vector<WalkerPath> paths;
  for (int k = 0; k < 3; ++k) paths.push_back({{20, 240}, {620, 240}, 1.5, 1, 0.0, 20.0 * (k - 1), 0});
  const Scenario s = generate_from_paths(paths, cfg);
  CHECK(s.truth.violations.empty());
  CHECK(s.truth.groups.at(0) == std::vector<int>{1, 2, 3});
  CHECK_FALSE(s.truth.group_gt.boxes.empty());
}

TEST_CASE("random scenes") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.pedestrian_count = 20;
    cfg.group_count = 3;
    cfg.spawn_window_frames = 200;
    const Scenario s = generate(cfg);

    CHECK(s.truth.violations == scan_intervals(s.truth, cfg.violation_threshold_px));
    for (const auto& v : s.truth.violations) {
      CHECK(v.start_frame >= 1);
      CHECK(v.end_frame <= cfg.duration_frames);
      const auto ga = s.truth.group_of.find(v.a), gb = s.truth.group_of.find(v.b);
      CHECK_FALSE((ga != s.truth.group_of.end() && gb != s.truth.group_of.end() && ga->second == gb->second));
    }
    CHECK(s.truth.groups.size() == 3);
    for (const auto& [g, members] : s.truth.groups) {
      CHECK(members.size() >= 2);
      CHECK(members.size() <= 3);
    }

    // Without noise the detections are the gt boxes.
    REQUIRE(s.detections.size() == s.truth.tracks.size());
    for (std::size_t i = 0; i < s.detections.size(); ++i) {
      CHECK(s.detections[i].bbox == s.truth.tracks[i].bbox);
      CHECK(s.detections[i].frame == s.truth.tracks[i].frame);
      CHECK(s.detections[i].id == -1);
    }

    const Scenario again = generate(cfg);
    CHECK(csv(again.detections) == csv(s.detections));
    CHECK(csv(again.sim_tracks) == csv(s.sim_tracks));
    CHECK(again.truth.violations == s.truth.violations);
  }
}

TEST_CASE("noise") {
  ScenarioConfig cfg;
  cfg.pedestrian_count = 15;
  cfg.spawn_window_frames = 100;
  cfg.jitter_sigma = 1.0;
  cfg.miss_rate = 0.1;
  cfg.false_positive_rate = 0.2;
  cfg.id_switch_rate = 1.0;
  const Scenario s = generate(cfg);
  std::set<int> gt_ids, sim_ids;
  for (const auto& r : s.truth.tracks) gt_ids.insert(r.id);
  for (const auto& r : s.sim_tracks) sim_ids.insert(r.id);
  CHECK(sim_ids.size() >= 2 * gt_ids.size());
  CHECK(s.detections.size() == s.sim_tracks.size());
  for (const auto& r : s.detections) {
    CHECK(r.bbox.w >= 1.0);
    CHECK(r.bbox.h >= 1.0);
  }
  const double kept = static_cast<double>(s.detections.size()) / static_cast<double>(s.truth.tracks.size());
  CHECK(kept > 0.85);
  CHECK(kept < 1.0);
}

TEST_CASE("noise-free five-pedestrian scene tracks perfectly") {
  ScenarioConfig cfg;
  cfg.pedestrian_count = 5;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    cfg.seed = seed;
    const Scenario s = generate(cfg);
    const auto hyp = to_rows(track_sequence(to_detections(s.detections), {}));
    const MotMetrics m = evaluate_mot(s.truth.tracks, hyp);
    CHECK(m.mota == 1.0);
    CHECK(m.idsw == 0);
  }
}
