#include "bsda/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

namespace bsda {

double SceneRng::normal(double mean, double stddev) {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void ScenarioConfig::validate() const {
  if (!(arena_width > 0.0 && arena_height > 0.0)) throw Error("arena must have positive size");
  if (!(fps > 0.0)) throw Error("fps must be positive");
  if (duration_frames < 0 || pedestrian_count < 0 || group_count < 0) throw Error("counts must be non-negative");
  if (group_size_min < 2 || group_size_max > 4 || group_size_min > group_size_max)
    throw Error("group sizes must satisfy 2 <= min <= max <= 4");
  if (group_count * group_size_min > pedestrian_count)
    throw Error("more group members than pedestrians");
  if (!(speed_mean > 0.0) || speed_std < 0.0) throw Error("speed distribution must have positive mean");
  if (!(box_width > 0.0 && box_height > 0.0)) throw Error("box size must be positive");
  for (double r : {miss_rate, false_positive_rate, id_switch_rate, curved_fraction})
    if (!(r >= 0.0 && r <= 1.0)) throw Error("rates must lie in [0, 1]");
  if (jitter_sigma < 0.0) throw Error("jitter sigma must be non-negative");
  if (spawn_window_frames < 0) throw Error("spawn window must be non-negative");
}

std::optional<Point2> WalkerPath::position(int frame) const {
  if (frame < start_frame) return std::nullopt;
  const Point2 chord = end - start;
  const double length = chord.norm();
  const double travelled = speed * (frame - start_frame);
  if (length <= 0.0 || travelled > length) return std::nullopt;
  const Point2 dir = chord / length;
  const Point2 normal{-dir.y, dir.x};
  const double s = travelled / length;
  return start + travelled * dir + (lateral_offset + bulge * std::sin(std::numbers::pi * s)) * normal;
}

namespace {

// Point on edge `e` (0 top, 1 right, 2 bottom, 3 left) at fraction t.
Point2 edge_point(const ScenarioConfig& cfg, int e, double t) {
  switch (e) {
    case 0: return {t * cfg.arena_width, 0.0};
    case 1: return {cfg.arena_width, t * cfg.arena_height};
    case 2: return {t * cfg.arena_width, cfg.arena_height};
    default: return {0.0, t * cfg.arena_height};
  }
}

constexpr double kMinEntrySeparationPx = 60.0;
constexpr int kMinEntryGapFrames = 40;

BBox box_at(Point2 bp, double w, double h) { return {bp.x - w / 2.0, bp.y - h, w, h}; }

}  // namespace

std::vector<WalkerPath> random_paths(const ScenarioConfig& cfg) {
  cfg.validate();
  SceneRng rng(cfg.seed);
  std::vector<WalkerPath> paths;

  auto draw_route = [&]() {
    WalkerPath p;
    const int from = static_cast<int>(rng.bits() % 4);
    const int to = rng.bernoulli(0.7) ? (from + 2) % 4 : (from + 1 + 2 * static_cast<int>(rng.bits() % 2)) % 4;
    // Keep endpoints away from corners so routes cross the scene.
    p.start = edge_point(cfg, from, rng.uniform(0.15, 0.85));
    p.end = edge_point(cfg, to, rng.uniform(0.15, 0.85));
    p.speed = std::max(0.2, rng.normal(cfg.speed_mean, cfg.speed_std));
    p.start_frame = 1 + (cfg.spawn_window_frames > 0 ? static_cast<int>(rng.bits() % static_cast<std::uint64_t>(cfg.spawn_window_frames + 1)) : 0);
    if (rng.bernoulli(cfg.curved_fraction)) p.bulge = rng.uniform(-cfg.curve_max_px, cfg.curve_max_px);
    return p;
  };

  // Unrelated walkers entering at nearly the same place and time would walk
  // together like a group; such routes are redrawn.
  std::vector<WalkerPath> routes;
  auto separated = [&](const WalkerPath& p) {
    for (const WalkerPath& q : routes)
      if (distance(p.start, q.start) < kMinEntrySeparationPx && std::abs(p.start_frame - q.start_frame) < kMinEntryGapFrames)
        return false;
    return true;
  };
  auto draw_separated = [&]() {
    WalkerPath p = draw_route();
    for (int attempt = 0; attempt < 100 && !separated(p); ++attempt) p = draw_route();
    routes.push_back(p);
    return p;
  };

  int remaining = cfg.pedestrian_count;
  for (int g = 0; g < cfg.group_count; ++g) {
    const int span = cfg.group_size_max - cfg.group_size_min + 1;
    int size = cfg.group_size_min + static_cast<int>(rng.bits() % static_cast<std::uint64_t>(span));
    // Leave enough walkers for the groups still to come.
    size = std::min(size, remaining - (cfg.group_count - g - 1) * cfg.group_size_min);
    const WalkerPath route = draw_separated();
    for (int k = 0; k < size; ++k) {
      WalkerPath member = route;
      member.group = g;
      member.lateral_offset = (k - (size - 1) / 2.0) * cfg.group_spacing_px;
      paths.push_back(member);
    }
    remaining -= size;
  }
  while (remaining-- > 0) paths.push_back(draw_separated());
  return paths;
}

Scenario generate_from_paths(const std::vector<WalkerPath>& paths, const ScenarioConfig& cfg) {
  cfg.validate();
  Scenario sc;
  ScenarioGroundTruth& truth = sc.truth;

  for (std::size_t i = 0; i < paths.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (paths[i].group >= 0) {
      truth.groups[paths[i].group].push_back(id);
      truth.group_of[id] = paths[i].group;
    }
  }
  truth.group_gt.membership = truth.groups;

  // Truth, frame by frame.
  std::map<std::pair<int, int>, std::vector<int>> close_frames;
  for (int f = 1; f <= cfg.duration_frames; ++f) {
    std::vector<std::pair<int, Point2>> present;
    for (std::size_t i = 0; i < paths.size(); ++i)
      if (const auto bp = paths[i].position(f)) present.emplace_back(static_cast<int>(i) + 1, *bp);

    std::map<int, GroupBox> boxes;
    for (const auto& [id, bp] : present) {
      const BBox b = box_at(bp, cfg.box_width, cfg.box_height);
      truth.tracks.push_back({f, id, b, 1.0, 0, 1.0});
      const auto g = truth.group_of.find(id);
      if (g == truth.group_of.end()) continue;
      auto [it, fresh] = boxes.try_emplace(g->second, GroupBox{f, g->second, b, {}});
      if (!fresh) {
        BBox& u = it->second.box;
        const double x0 = std::min(u.x, b.x), y0 = std::min(u.y, b.y);
        const double x1 = std::max(u.right(), b.right()), y1 = std::max(u.bottom(), b.bottom());
        u = {x0, y0, x1 - x0, y1 - y0};
      }
      it->second.members.push_back({id, bp});
    }
    for (auto& [g, box] : boxes) truth.group_gt.boxes.push_back(std::move(box));

    for (std::size_t i = 0; i < present.size(); ++i) {
      for (std::size_t j = i + 1; j < present.size(); ++j) {
        const int a = present[i].first, b = present[j].first;
        const auto ga = truth.group_of.find(a), gb = truth.group_of.find(b);
        if (ga != truth.group_of.end() && gb != truth.group_of.end() && ga->second == gb->second) continue;
        if (distance(present[i].second, present[j].second) < cfg.violation_threshold_px) close_frames[{a, b}].push_back(f);
      }
    }
  }
  for (const auto& [key, frames] : close_frames) {
    int start = frames.front(), prev = start;
    for (std::size_t k = 1; k <= frames.size(); ++k) {
      if (k == frames.size() || frames[k] != prev + 1) {
        truth.violations.push_back({key.first, key.second, start, prev});
        if (k < frames.size()) start = frames[k];
      }
      if (k < frames.size()) prev = frames[k];
    }
  }
  std::sort(truth.violations.begin(), truth.violations.end(), [](const TrueInterval& x, const TrueInterval& y) {
    return std::tie(x.start_frame, x.a, x.b) < std::tie(y.start_frame, y.a, y.b);
  });

  // Noise. Separate stream so the layout does not shift when noise settings change.
  SceneRng rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  const int n = static_cast<int>(paths.size());
  std::vector<int> split_frame(static_cast<std::size_t>(n) + 1, 0);
  for (int id = 1; id <= n; ++id) {
    if (!rng.bernoulli(cfg.id_switch_rate)) continue;
    std::vector<int> frames;
    for (const MotRow& r : truth.tracks)
      if (r.id == id) frames.push_back(r.frame);
    if (frames.size() >= 2)
      split_frame[static_cast<std::size_t>(id)] = frames[1 + rng.bits() % (frames.size() - 1)];
  }
  int next_id = n + 1;
  std::map<int, int> second_id;
  for (int id = 1; id <= n; ++id)
    if (split_frame[static_cast<std::size_t>(id)] > 0) second_id[id] = next_id++;

  std::size_t row = 0;
  for (int f = 1; f <= cfg.duration_frames; ++f) {
    for (; row < truth.tracks.size() && truth.tracks[row].frame == f; ++row) {
      const MotRow& g = truth.tracks[row];
      if (rng.bernoulli(cfg.miss_rate)) continue;
      MotRow d = g;
      if (cfg.jitter_sigma > 0.0) {
        d.bbox.x += rng.normal(0.0, cfg.jitter_sigma);
        d.bbox.y += rng.normal(0.0, cfg.jitter_sigma);
        d.bbox.w = std::max(1.0, d.bbox.w + rng.normal(0.0, cfg.jitter_sigma));
        d.bbox.h = std::max(1.0, d.bbox.h + rng.normal(0.0, cfg.jitter_sigma));
      }
      d.conf = cfg.jitter_sigma > 0.0 || cfg.miss_rate > 0.0 ? std::round(rng.uniform(0.5, 1.0) * 1000.0) / 1000.0 : 1.0;
      d.visibility = -1.0;
      MotRow t = d;
      const int split = split_frame[static_cast<std::size_t>(g.id)];
      if (split > 0 && f >= split) t.id = second_id[g.id];
      d.id = -1;
      sc.detections.push_back(d);
      sc.sim_tracks.push_back(t);
    }
    if (rng.bernoulli(cfg.false_positive_rate)) {
      const Point2 bp{rng.uniform(0.0, cfg.arena_width), rng.uniform(cfg.box_height, cfg.arena_height)};
      MotRow d{f, -1, box_at(bp, cfg.box_width, cfg.box_height), 0.5, 0, -1.0};
      sc.detections.push_back(d);
      d.id = next_id++;
      sc.sim_tracks.push_back(d);
    }
  }
  return sc;
}

Scenario generate(const ScenarioConfig& cfg) { return generate_from_paths(random_paths(cfg), cfg); }

}  // namespace bsda
