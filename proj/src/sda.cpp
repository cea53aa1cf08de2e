#include "bsda/sda.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>

namespace bsda {

Point2 bottom_point(const BBox& roi) {
  if (!roi.valid()) throw Error("bottom point of a box with non-positive size");
  return {roi.x + roi.w / 2.0, roi.y + roi.h};
}

void SdaConfig::validate() const {
  if (!(distance_threshold_px > 0.0)) throw Error("distance_threshold_px must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("gamma must lie in [0, 1]");
  if (!(velocity_threshold > 0.0)) throw Error("velocity_threshold must be positive");
  if (!(stability_threshold > 0.0)) throw Error("stability_threshold must be positive");
  if (!(ewa_alpha >= 0.0 && ewa_alpha <= 1.0)) throw Error("ewa_alpha must lie in [0, 1]");
  if (!(min_event_seconds >= 0.0)) throw Error("min_event_seconds must be non-negative");
  if (!(fps > 0.0)) throw Error("fps must be positive");
  if (merge_gap_frames < 0) throw Error("merge_gap_frames must be non-negative");
  if (trajectory_window_frames < 0) throw Error("trajectory_window_frames must be non-negative");
}

// ---------------------------------------------------------------------------
// State history

std::optional<std::size_t> Trajectory::find(int frame) const {
  const auto it = std::lower_bound(frames.begin(), frames.end(), frame);
  if (it == frames.end() || *it != frame) return std::nullopt;
  return static_cast<std::size_t>(it - frames.begin());
}

StateHistory::StateHistory(double ewa_alpha, bool use_ewa) : ewa_alpha_(ewa_alpha), use_ewa_(use_ewa) {
  if (!(ewa_alpha >= 0.0 && ewa_alpha <= 1.0)) throw Error("ewa_alpha must lie in [0, 1]");
}

void StateHistory::add_frame(int frame, std::span<const MotRow> objects) {
  if (frame <= last_frame_)
    throw Error("state history frame " + std::to_string(frame) + " is not after frame " + std::to_string(last_frame_));
  last_frame_ = frame;

  std::vector<ObjectState> states;
  states.reserve(objects.size());
  for (const MotRow& r : objects) {
    if (r.frame != frame) throw Error("row for frame " + std::to_string(r.frame) + " passed with frame " + std::to_string(frame));
    Trajectory& t = trajectories_[r.id];
    t.id = r.id;
    if (!t.frames.empty() && t.frames.back() == frame)
      throw Error("id " + std::to_string(r.id) + " appears twice in frame " + std::to_string(frame));

    const Point2 bp = bottom_point(r.bbox);
    const std::size_t k = t.size();
    Point2 v{};
    if (k >= 1) {
      const Point2 raw = (bp - t.points.back()) / static_cast<double>(frame - t.frames.back());
      v = (use_ewa_ && k >= 2) ? ewa_alpha_ * raw + (1.0 - ewa_alpha_) * t.velocities.back() : raw;
    }
    t.frames.push_back(frame);
    t.rois.push_back(r.bbox);
    t.points.push_back(bp);
    t.velocities.push_back(v);
    states.push_back({r.bbox, bp, r.id, v, k});
  }
  std::sort(states.begin(), states.end(), [](const ObjectState& a, const ObjectState& b) { return a.id < b.id; });
  frames_.emplace(frame, std::move(states));
}

const Trajectory& StateHistory::trajectory(int id) const {
  const auto it = trajectories_.find(id);
  if (it == trajectories_.end()) throw Error("unknown track id " + std::to_string(id));
  return it->second;
}

const std::vector<ObjectState>& StateHistory::at(int frame) const {
  static const std::vector<ObjectState> empty;
  const auto it = frames_.find(frame);
  return it == frames_.end() ? empty : it->second;
}

const ObjectState& StateHistory::object(int frame, int id) const {
  const auto& objs = at(frame);
  const auto it = std::lower_bound(objs.begin(), objs.end(), id, [](const ObjectState& o, int v) { return o.id < v; });
  if (it == objs.end() || it->id != id)
    throw Error("unknown id " + std::to_string(id) + " in frame " + std::to_string(frame));
  return *it;
}

StateHistory StateHistory::from_rows(std::span<const MotRow> rows, double ewa_alpha, bool use_ewa) {
  std::vector<MotRow> sorted(rows.begin(), rows.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const MotRow& a, const MotRow& b) { return a.frame < b.frame; });
  StateHistory h(ewa_alpha, use_ewa);
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].frame == sorted[i].frame) ++j;
    h.add_frame(sorted[i].frame, std::span<const MotRow>(sorted).subspan(i, j - i));
    i = j;
  }
  return h;
}

std::vector<Point2> velocity_update(std::span<const int> frames, std::span<const Point2> points, double ewa_alpha,
                                    bool use_ewa) {
  if (frames.size() != points.size()) throw Error("frames and points differ in length");
  std::vector<Point2> v(frames.size());
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (frames[k] <= frames[k - 1]) throw Error("trajectory frames must strictly increase");
    const Point2 raw = (points[k] - points[k - 1]) / static_cast<double>(frames[k] - frames[k - 1]);
    v[k] = (use_ewa && k >= 2) ? ewa_alpha * raw + (1.0 - ewa_alpha) * v[k - 1] : raw;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Violations

std::vector<ViolationPair> find_violation_pairs(int frame, std::span<const ObjectState> objects,
                                                double distance_threshold_px) {
  std::vector<ViolationPair> pairs;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      if (distance(objects[i].bp, objects[j].bp) >= distance_threshold_px) continue;
      const int a = std::min(objects[i].id, objects[j].id);
      const int b = std::max(objects[i].id, objects[j].id);
      if (a == b) throw Error("duplicate id " + std::to_string(a) + " in frame " + std::to_string(frame));
      pairs.push_back({frame, a, b});
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

// ---------------------------------------------------------------------------
// Velocity similarity

double cosine_distance(Point2 v1, Point2 v2) {
  const double n = v1.norm() * v2.norm();
  if (n == 0.0) throw Error("cosine distance of a zero vector");
  return 1.0 - std::clamp(v1.dot(v2) / n, -1.0, 1.0);
}

double magnitude_distance(Point2 v1, Point2 v2) {
  const double m1 = v1.norm();
  const double m2 = v2.norm();
  const double top = std::max(m1, m2);
  if (top == 0.0) throw Error("magnitude distance of two zero vectors");
  return std::abs(m1 - m2) / top;
}

double velocity_distance(Point2 v1, Point2 v2, double gamma) {
  const bool z1 = v1.norm() == 0.0;
  const bool z2 = v2.norm() == 0.0;
  if (z1 && z2) return 0.0;
  if (z1 || z2) return (1.0 - gamma) * 1.0;
  return gamma * cosine_distance(v1, v2) + (1.0 - gamma) * magnitude_distance(v1, v2);
}

// ---------------------------------------------------------------------------
// Trajectory similarity

TrajectorySpan TrajectorySpan::up_to(int last_frame, int window_frames) const {
  const auto end = std::upper_bound(frames.begin(), frames.end(), last_frame);
  auto begin = frames.begin();
  if (window_frames > 0) begin = std::upper_bound(frames.begin(), end, last_frame - window_frames);
  const auto off = static_cast<std::size_t>(begin - frames.begin());
  const auto len = static_cast<std::size_t>(end - begin);
  return {frames.subspan(off, len), points.subspan(off, len)};
}

std::vector<double> shared_distances(TrajectorySpan a, TrajectorySpan b) {
  std::vector<double> d;
  std::size_t i = 0, j = 0;
  while (i < a.frames.size() && j < b.frames.size()) {
    if (a.frames[i] < b.frames[j]) {
      ++i;
    } else if (b.frames[j] < a.frames[i]) {
      ++j;
    } else {
      d.push_back(distance(a.points[i], b.points[j]));
      ++i;
      ++j;
    }
  }
  return d;
}

namespace {

double mean_of(const std::vector<double>& d) {
  double s = 0.0;
  for (double x : d) s += x;
  return s / static_cast<double>(d.size());
}

}  // namespace

double trajectory_similarity(TrajectorySpan a, TrajectorySpan b) {
  const std::vector<double> d = shared_distances(a, b);
  if (d.empty()) throw Error("trajectories share no frame");
  return mean_of(d);
}

double trajectory_stability(TrajectorySpan a, TrajectorySpan b) {
  const std::vector<double> d = shared_distances(a, b);
  if (d.size() < 2) throw Error("trajectory stability needs at least two shared frames");
  const double mean = mean_of(d);
  if (mean == 0.0) return 0.0;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(d.size())) / mean;
}

bool trajectory_compare(TrajectorySpan a, TrajectorySpan b, const SdaConfig& cfg) {
  const std::vector<double> d = shared_distances(a, b);
  if (d.empty()) return false;
  const double mean = mean_of(d);
  if (mean <= cfg.distance_threshold_px) return true;
  if (d.size() < 2) return false;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(d.size())) / mean <= cfg.stability_threshold;
}

bool velocity_compare(Point2 va, Point2 vb, const SdaConfig& cfg) {
  return velocity_distance(va, vb, cfg.gamma) <= cfg.velocity_threshold;
}

GroupValidation group_validate(const StateHistory& history, std::span<const ViolationPair> pairs,
                               const SdaConfig& cfg) {
  GroupValidation out;
  for (const ViolationPair& p : pairs) {
    const ObjectState& oa = history.object(p.frame, p.a);
    const ObjectState& ob = history.object(p.frame, p.b);
    bool same_group = true;
    if (cfg.use_velocity_compare) same_group = velocity_compare(oa.v, ob.v, cfg);
    if (same_group) {
      const auto ta = TrajectorySpan::of(history.trajectory(p.a)).up_to(p.frame, cfg.trajectory_window_frames);
      const auto tb = TrajectorySpan::of(history.trajectory(p.b)).up_to(p.frame, cfg.trajectory_window_frames);
      same_group = trajectory_compare(ta, tb, cfg);
    }
    (same_group ? out.removed : out.retained).push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Events

std::vector<ViolationEvent> merge_pair_runs(std::span<const ViolationPair> pairs, const SdaConfig& cfg) {
  std::map<std::pair<int, int>, std::vector<int>> by_pair;
  for (const ViolationPair& p : pairs) by_pair[{p.a, p.b}].push_back(p.frame);

  std::vector<ViolationEvent> events;
  for (auto& [key, frames] : by_pair) {
    std::sort(frames.begin(), frames.end());
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
    int start = frames.front();
    int prev = start;
    auto close = [&](int end) {
      events.push_back({key.first, key.second, start, end, (end - start + 1) / cfg.fps});
    };
    for (std::size_t i = 1; i < frames.size(); ++i) {
      if (frames[i] - prev - 1 > cfg.merge_gap_frames) {
        close(prev);
        start = frames[i];
      }
      prev = frames[i];
    }
    close(prev);
  }
  std::sort(events.begin(), events.end(), [](const ViolationEvent& x, const ViolationEvent& y) {
    return std::tie(x.start_frame, x.a, x.b) < std::tie(y.start_frame, y.a, y.b);
  });
  return events;
}

std::vector<ViolationEvent> aggregate_events(std::span<const ViolationPair> pairs, const SdaConfig& cfg) {
  std::vector<ViolationEvent> events = merge_pair_runs(pairs, cfg);
  // Frame counts over fps are exact for the usual rates; the slack only absorbs representation error.
  std::erase_if(events, [&](const ViolationEvent& e) { return e.duration_s + 1e-9 < cfg.min_event_seconds; });
  return events;
}

double estimate_volume(double trajectory_count, double at_gt_seconds, double at_infer_seconds, bool invert_ratio) {
  if (!(trajectory_count > 0.0) || !(at_gt_seconds > 0.0) || !(at_infer_seconds > 0.0))
    throw Error("volume estimation needs positive trajectory count and average lengths");
  return invert_ratio ? trajectory_count * at_infer_seconds / at_gt_seconds
                      : trajectory_count * at_gt_seconds / at_infer_seconds;
}

std::pair<Point2, Point2> event_velocities(const StateHistory& history, const ViolationEvent& e) {
  auto mean_velocity = [&](int id) {
    const Trajectory& t = history.trajectory(id);
    const auto lo = std::lower_bound(t.frames.begin(), t.frames.end(), e.start_frame);
    const auto hi = std::upper_bound(t.frames.begin(), t.frames.end(), e.end_frame);
    Point2 sum{};
    const auto n = hi - lo;
    if (n == 0) return sum;
    for (auto k = static_cast<std::size_t>(lo - t.frames.begin()); k < static_cast<std::size_t>(hi - t.frames.begin()); ++k)
      sum = sum + t.velocities[k];
    return sum / static_cast<double>(n);
  };
  return {mean_velocity(e.a), mean_velocity(e.b)};
}

SdaResult analyze(std::span<const MotRow> tracks, const SdaConfig& cfg) {
  cfg.validate();
  SdaResult r{StateHistory::from_rows(tracks, cfg.ewa_alpha, cfg.use_ewa), {}, {}, {}};
  for (const auto& [frame, objects] : r.history.frames()) {
    auto pairs = find_violation_pairs(frame, objects, cfg.distance_threshold_px);
    r.candidates.insert(r.candidates.end(), pairs.begin(), pairs.end());
  }
  r.validation = group_validate(r.history, r.candidates, cfg);
  r.events = aggregate_events(r.validation.retained, cfg);
  return r;
}

}  // namespace bsda
