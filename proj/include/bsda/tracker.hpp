#pragma once

// SORT-style tracking-by-detection. A constant-velocity Kalman filter runs
// over (u, v, s, r); detections are assigned by Hungarian matching on IoU.

#include <Eigen/Core>
#include <span>
#include <vector>

#include "bsda/geometry.hpp"

namespace bsda {

struct Detection {
  int frame = 0;
  BBox bbox;
  double conf = 1.0;
  int class_id = 0;
  double visibility = -1.0;
};

using StateVector = Eigen::Matrix<double, 7, 1>;
using StateCovariance = Eigen::Matrix<double, 7, 7>;

struct KalmanNoise {
  double process_scale = 1.0;
  double measurement_scale = 1.0;
};

/// State (u, v, s, r, du, dv, ds): center, area, aspect ratio w/h, rates.
struct KalmanTrack {
  StateVector state = StateVector::Zero();
  StateCovariance covariance = StateCovariance::Identity();
  int id = 0;
  int hits = 0;
  int age = 0;
  int time_since_update = 0;
  int class_id = 0;
  Detection last_detection;

  BBox bbox() const;
};

/// (u, v, s, r) measurement of a box.
Eigen::Vector4d box_to_measurement(const BBox& b);
BBox state_to_box(const StateVector& x);

/// New track from one detection; velocities start at zero with inflated variance.
KalmanTrack kalman_init(const Detection& d, int id);
KalmanTrack kalman_predict(KalmanTrack t, const KalmanNoise& noise = {});
KalmanTrack kalman_update(KalmanTrack t, const Detection& d, const KalmanNoise& noise = {});

struct AssociationResult {
  std::vector<std::pair<int, int>> matches;  // (track index, detection index)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_detections;
};

/// Hungarian on 1 - IoU; assigned pairs below iou_threshold are split back out.
AssociationResult associate(std::span<const BBox> tracks, std::span<const BBox> detections,
                            double iou_threshold);

enum class OutputBox {
  Detection,  // box of the detection matched this frame
  Filtered,   // posterior Kalman estimate
};

struct TrackerConfig {
  double iou_threshold = 0.3;
  int max_age = 1;
  int min_hits = 3;
  double process_noise_scale = 1.0;
  double measurement_noise_scale = 1.0;
  OutputBox output_box = OutputBox::Detection;

  void validate() const;
};

struct TrackOutput {
  int frame = 0;
  int id = 0;
  BBox bbox;
  int class_id = 0;
  double conf = 1.0;
  double visibility = -1.0;
};

/// Sequential state machine; one instance per video.
class Tracker {
public:
  explicit Tracker(TrackerConfig cfg = {});

  /// Advances one frame. Frame indices must strictly increase.
  std::vector<TrackOutput> step(int frame, std::span<const Detection> detections);

  const std::vector<KalmanTrack>& tracks() const { return tracks_; }
  int frame_count() const { return frame_count_; }

private:
  TrackerConfig cfg_;
  KalmanNoise noise_;
  std::vector<KalmanTrack> tracks_;
  int next_id_ = 1;
  int frame_count_ = 0;
  int last_frame_ = -1;
};

/// Runs the tracker over a detection stream, stepping every frame index from
/// 1 to the last detection frame (empty frames included).
std::vector<TrackOutput> track_sequence(std::span<const Detection> detections, const TrackerConfig& cfg);

}  // namespace bsda
