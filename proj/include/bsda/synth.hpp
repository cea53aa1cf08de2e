#pragma once

// Deterministic synthetic crossing scenes with their ground truth. All
// randomness comes from std::mt19937_64, whose output sequence is fixed by the
// C++ standard; uniform and normal variates are derived from its raw bits
// rather than through the implementation-defined std:: distributions.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "bsda/mot_io.hpp"
#include "bsda/stats.hpp"

namespace bsda {

/// Portable variates on top of mt19937_64.
class SceneRng {
public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Box-Muller, one variate per call.
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t bits() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

struct ScenarioConfig {
  double arena_width = 640.0;
  double arena_height = 480.0;
  double fps = 15.0;
  int duration_frames = 450;
  int pedestrian_count = 10;  // includes group members
  int group_count = 0;
  int group_size_min = 2;
  int group_size_max = 3;
  double group_spacing_px = 20.0;  // lateral offset between neighbours
  double speed_mean = 1.5;         // px/frame
  double speed_std = 0.2;
  double curved_fraction = 0.3;    // share of paths with a lateral bulge
  double curve_max_px = 30.0;
  int spawn_window_frames = 0;     // entry frames drawn from [1, 1 + window]
  double box_width = 15.0;
  double box_height = 30.0;
  double violation_threshold_px = 35.0;
  // Noise, applied after the truth is extracted.
  double jitter_sigma = 0.0;
  double miss_rate = 0.0;
  double false_positive_rate = 0.0;  // chance of one spurious box per frame
  double id_switch_rate = 0.0;       // chance that a pedestrian's simulated track splits
  std::uint64_t seed = 1;

  void validate() const;
};

/// One pedestrian's path of bottom points: a straight chord from start to end
/// walked at constant speed, shifted along the chord normal by
/// lateral_offset + bulge * sin(pi * progress).
struct WalkerPath {
  Point2 start;
  Point2 end;
  double speed = 1.5;
  int start_frame = 1;
  double bulge = 0.0;
  double lateral_offset = 0.0;
  int group = -1;  // -1: walks alone

  /// Bottom point at `frame`, or nothing when the walker is off the scene.
  std::optional<Point2> position(int frame) const;
};

struct TrueInterval {
  int a = 0;
  int b = 0;
  int start_frame = 0;
  int end_frame = 0;

  friend bool operator==(const TrueInterval&, const TrueInterval&) = default;
};

struct ScenarioGroundTruth {
  std::vector<MotRow> tracks;               // noiseless, true ids
  std::map<int, std::vector<int>> groups;   // group -> member ids
  std::map<int, int> group_of;              // member id -> group
  GroupGt group_gt;
  std::vector<TrueInterval> violations;     // non-group pairs below the threshold, all lengths
};

struct Scenario {
  std::vector<MotRow> detections;  // id = -1
  std::vector<MotRow> sim_tracks;  // detections labelled with true ids, split by injected id switches
  ScenarioGroundTruth truth;
};

/// Random crossing layout for the config (ids are 1-based path order).
std::vector<WalkerPath> random_paths(const ScenarioConfig& cfg);

/// Renders explicit paths; the config supplies scene size, box size and noise.
Scenario generate_from_paths(const std::vector<WalkerPath>& paths, const ScenarioConfig& cfg);

Scenario generate(const ScenarioConfig& cfg);

}  // namespace bsda
