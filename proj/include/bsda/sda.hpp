#pragma once

// Social-distancing analysis on bottom points of tracked boxes. Close pairs
// that move like a social group are dropped before events are aggregated.

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bsda/mot_io.hpp"

namespace bsda {

struct SdaConfig {
  double distance_threshold_px = 35.0;
  double gamma = 0.1;
  double lambda = 1.0;  // reserved, not used by any measure
  double velocity_threshold = 0.21;
  double stability_threshold = 0.25;
  double ewa_alpha = 0.5;
  bool use_ewa = true;
  bool use_velocity_compare = false;
  double min_event_seconds = 1.0;
  double fps = 15.0;
  int merge_gap_frames = 0;
  int trajectory_window_frames = 0;  // 0: full shared history

  void validate() const;
};

/// Per-id track of bottom points with velocities aligned to `frames`.
struct Trajectory {
  int id = 0;
  std::vector<int> frames;  // strictly increasing
  std::vector<BBox> rois;
  std::vector<Point2> points;
  std::vector<Point2> velocities;

  std::size_t size() const { return frames.size(); }
  /// Index of `frame`, if the object was observed there.
  std::optional<std::size_t> find(int frame) const;
};

struct ObjectState {
  BBox roi;
  Point2 bp;
  int id = 0;
  Point2 v;
  std::size_t traj_index = 0;  // position of this frame within the id's Trajectory
};

/// Frame-by-frame ingestion of tracker output. Single writer.
class StateHistory {
public:
  StateHistory(double ewa_alpha = 0.5, bool use_ewa = true);

  /// Frames must arrive in strictly increasing order; ids unique per frame.
  void add_frame(int frame, std::span<const MotRow> objects);

  const std::map<int, std::vector<ObjectState>>& frames() const { return frames_; }
  const std::map<int, Trajectory>& trajectories() const { return trajectories_; }
  const Trajectory& trajectory(int id) const;
  const std::vector<ObjectState>& at(int frame) const;
  const ObjectState& object(int frame, int id) const;

  static StateHistory from_rows(std::span<const MotRow> rows, double ewa_alpha = 0.5, bool use_ewa = true);

private:
  double ewa_alpha_;
  bool use_ewa_;
  int last_frame_ = 0;
  std::map<int, std::vector<ObjectState>> frames_;  // objects sorted by id
  std::map<int, Trajectory> trajectories_;
};

/// Batch form of the velocity recurrence: v0 = 0, raw finite difference
/// afterwards, EWA smoothing from the third sample on.
std::vector<Point2> velocity_update(std::span<const int> frames, std::span<const Point2> points, double ewa_alpha,
                                    bool use_ewa);

struct ViolationPair {
  int frame = 0;
  int a = 0;  // a < b
  int b = 0;

  friend bool operator==(const ViolationPair&, const ViolationPair&) = default;
  friend auto operator<=>(const ViolationPair&, const ViolationPair&) = default;
};

/// Pairs of objects whose bottom points are strictly closer than the threshold.
std::vector<ViolationPair> find_violation_pairs(int frame, std::span<const ObjectState> objects,
                                                double distance_threshold_px);

double cosine_distance(Point2 v1, Point2 v2);
double magnitude_distance(Point2 v1, Point2 v2);
/// gamma * D_cos + (1 - gamma) * D_mag, total over zero vectors: both zero
/// gives 0, exactly one zero gives (1 - gamma).
double velocity_distance(Point2 v1, Point2 v2, double gamma);

/// Frame-aligned view on a trajectory, optionally restricted to (last - window, last].
struct TrajectorySpan {
  std::span<const int> frames;
  std::span<const Point2> points;

  static TrajectorySpan of(const Trajectory& t) { return {t.frames, t.points}; }
  TrajectorySpan up_to(int last_frame, int window_frames = 0) const;
};

/// Bottom-point distances over the frames both trajectories share.
std::vector<double> shared_distances(TrajectorySpan a, TrajectorySpan b);

double trajectory_similarity(TrajectorySpan a, TrajectorySpan b);
/// Population standard deviation of shared distances over their mean; 0 when the mean is 0.
double trajectory_stability(TrajectorySpan a, TrajectorySpan b);

bool trajectory_compare(TrajectorySpan a, TrajectorySpan b, const SdaConfig& cfg);
bool velocity_compare(Point2 va, Point2 vb, const SdaConfig& cfg);

struct GroupValidation {
  std::vector<ViolationPair> retained;  // violations after validation
  std::vector<ViolationPair> removed;   // judged same-group
};

/// Removes pairs judged to belong to one social group. Each pair is evaluated
/// on history up to its own frame.
GroupValidation group_validate(const StateHistory& history, std::span<const ViolationPair> pairs, const SdaConfig& cfg);

struct ViolationEvent {
  int a = 0;
  int b = 0;
  int start_frame = 0;
  int end_frame = 0;
  double duration_s = 0.0;

  friend bool operator==(const ViolationEvent&, const ViolationEvent&) = default;
};

/// Merges per-frame pair occurrences into events (gaps of at most
/// merge_gap_frames missing frames are bridged) and drops events shorter than
/// min_event_seconds. Sorted by (start_frame, a, b).
std::vector<ViolationEvent> aggregate_events(std::span<const ViolationPair> pairs, const SdaConfig& cfg);

/// Same merge without the duration filter.
std::vector<ViolationEvent> merge_pair_runs(std::span<const ViolationPair> pairs, const SdaConfig& cfg);

/// EV = TC * AT_gt / AT_infer; invert_ratio gives TC * AT_infer / AT_gt.
double estimate_volume(double trajectory_count, double at_gt_seconds, double at_infer_seconds,
                       bool invert_ratio = false);

/// Mean velocity of both members over the event's frames where each is observed.
std::pair<Point2, Point2> event_velocities(const StateHistory& history, const ViolationEvent& e);

struct SdaResult {
  StateHistory history;
  std::vector<ViolationPair> candidates;
  GroupValidation validation;
  std::vector<ViolationEvent> events;
};

SdaResult analyze(std::span<const MotRow> tracks, const SdaConfig& cfg);

}  // namespace bsda
