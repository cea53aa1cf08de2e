#pragma once

// Flat `key = value` configuration files with `#` comments.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bsda/frame_prep.hpp"
#include "bsda/sda.hpp"
#include "bsda/synth.hpp"
#include "bsda/tracker.hpp"

namespace bsda {

/// Raw key/value store. Values keep their text; typed getters validate.
class KeyValues {
public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<config>");
  static KeyValues load(const std::filesystem::path& path);

  /// Applies "key=value"; later settings win.
  void set(const std::string& key, const std::string& value);
  void set_assignment(const std::string& assignment);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  /// Whitespace- and comma-separated numbers.
  std::vector<double> get_numbers(const std::string& key) const;
  /// Comma-separated items, trimmed.
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

struct ReportConfig {
  double duration_bin_seconds = 1.0;
  double duration_kde_bandwidth = 0.08;
  double angle_kde_bandwidth = 0.08 * 180.0;
  int kde_points = 512;
  double face_to_face_deg = 150.0;
  std::optional<double> avg_traj_seconds_gt;
  bool invert_ratio = false;
};

struct PipelineConfig {
  // Paths. Lists allow several videos per run.
  std::vector<std::filesystem::path> detections;
  std::vector<std::filesystem::path> tracks;
  std::vector<std::string> slots;
  std::filesystem::path gt;
  std::filesystem::path gt_json;
  std::filesystem::path predicted_groups;
  std::filesystem::path images_dir;
  std::filesystem::path output_dir = ".";

  // Preprocessing.
  double wmbs_alpha = 0.5;
  int background_window = 0;  // 0: mean over the whole sequence
  std::optional<Homography> homography;
  std::optional<CropRect> crop;
  std::optional<Size> crop_size;  // centered crop
  std::optional<Size> warp_size;
  Interpolation interpolation = Interpolation::Bilinear;

  TrackerConfig tracker;
  bool calibrate_detections = true;
  SdaConfig sda;
  ReportConfig report;
  ScenarioConfig scenario;
  double mot_iou_threshold = 0.5;
  double group_box_pad = 5.0;  // bottom points sit on the lower edge of a group box

  static PipelineConfig from(const KeyValues& kv);
};

/// Keys recognised in configuration files.
const std::vector<std::string>& known_config_keys();

/// Parses "x1 y1 X1 Y1; x2 y2 X2 Y2; ..." correspondence lists.
std::vector<Correspondence> parse_correspondences(const std::string& text);

}  // namespace bsda
