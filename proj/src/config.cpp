#include "bsda/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bsda {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
    throw Error("config key '" + key + "': '" + t + "' is not a number");
  return v;
}

}  // namespace

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      // paths
      "detections", "tracks", "slots", "gt", "gt_json", "predicted_groups", "images_dir", "output_dir",
      // preprocessing
      "wmbs_alpha", "background_window", "homography", "correspondences", "crop", "crop_size", "warp_width",
      "warp_height", "interpolation",
      // tracker
      "iou_threshold", "max_age", "min_hits", "process_noise_scale", "measurement_noise_scale", "output_box",
      "calibrate_detections",
      // analysis
      "distance_threshold_px", "gamma", "lambda", "velocity_threshold", "stability_threshold", "ewa_alpha", "use_ewa",
      "use_velocity_compare", "min_event_seconds", "fps", "merge_gap_frames", "trajectory_window_frames",
      // report
      "duration_bin_seconds", "duration_kde_bandwidth", "angle_kde_bandwidth", "kde_points", "face_to_face_deg",
      "avg_traj_seconds_gt", "invert_ratio",
      // evaluation
      "mot_iou_threshold", "group_box_pad",
      // synthetic scenes
      "arena_width", "arena_height", "duration_frames", "pedestrian_count", "group_count", "group_size_min",
      "group_size_max", "group_spacing_px", "speed_mean", "speed_std", "curved_fraction", "curve_max_px",
      "spawn_window_frames", "box_width", "box_height", "violation_threshold_px", "jitter_sigma", "miss_rate",
      "false_positive_rate", "id_switch_rate", "seed"};
  return keys;
}

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw Error(origin + ":" + std::to_string(line_no) + ": empty key");
    try {
      kv.set(key, trim(std::string_view(body).substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValues::set(const std::string& key, const std::string& value) {
  const auto& keys = known_config_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw Error("unknown config key '" + key + "'");
  values_[key] = value;
}

void KeyValues::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error("override '" + assignment + "' is not key=value");
  set(trim(std::string_view(assignment).substr(0, eq)), trim(std::string_view(assignment).substr(eq + 1)));
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? to_double(key, *v) : fallback;
}

int KeyValues::get_int(const std::string& key, int fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  const double d = to_double(key, *v);
  if (d != std::floor(d) || std::abs(d) > 2e9) throw Error("config key '" + key + "' must be an integer");
  return static_cast<int>(d);
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw Error("config key '" + key + "' must be a boolean");
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::vector<double> KeyValues::get_numbers(const std::string& key) const {
  std::vector<double> out;
  const auto v = get(key);
  if (!v) return out;
  std::string text = *v;
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(to_double(key, tok));
  return out;
}

std::vector<std::string> KeyValues::get_list(const std::string& key) const {
  std::vector<std::string> out;
  const auto v = get(key);
  if (!v) return out;
  std::istringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Correspondence> parse_correspondences(const std::string& text) {
  std::vector<Correspondence> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    if (trim(item).empty()) continue;
    std::istringstream nums(item);
    std::vector<double> v;
    std::string tok;
    while (nums >> tok) v.push_back(to_double("correspondences", tok));
    if (v.size() != 4) throw Error("each correspondence needs 4 numbers: image x y, world x y");
    out.push_back({{v[0], v[1]}, {v[2], v[3]}});
  }
  return out;
}

PipelineConfig PipelineConfig::from(const KeyValues& kv) {
  PipelineConfig c;
  for (const auto& p : kv.get_list("detections")) c.detections.emplace_back(p);
  for (const auto& p : kv.get_list("tracks")) c.tracks.emplace_back(p);
  c.slots = kv.get_list("slots");
  c.gt = kv.get_string("gt", "");
  c.gt_json = kv.get_string("gt_json", "");
  c.predicted_groups = kv.get_string("predicted_groups", "");
  c.images_dir = kv.get_string("images_dir", "");
  c.output_dir = kv.get_string("output_dir", ".");

  c.wmbs_alpha = kv.get_double("wmbs_alpha", c.wmbs_alpha);
  if (!(c.wmbs_alpha >= 0.0 && c.wmbs_alpha <= 1.0)) throw Error("wmbs_alpha must lie in [0, 1]");
  c.background_window = kv.get_int("background_window", 0);
  if (c.background_window < 0) throw Error("background_window must be non-negative");
  if (kv.has("homography") && kv.has("correspondences"))
    throw Error("set either homography or correspondences, not both");
  if (kv.has("homography")) {
    const auto h = kv.get_numbers("homography");
    if (h.size() != 9) throw Error("homography needs 9 numbers, row-major");
    std::array<double, 9> m{};
    std::copy(h.begin(), h.end(), m.begin());
    c.homography = Homography(m);
  } else if (kv.has("correspondences")) {
    const auto pairs = parse_correspondences(*kv.get("correspondences"));
    c.homography = estimate_homography(pairs);
  }
  if (kv.has("crop") && kv.has("crop_size")) throw Error("set either crop or crop_size, not both");
  if (kv.has("crop")) {
    const auto r = kv.get_numbers("crop");
    if (r.size() != 4) throw Error("crop needs x y w h");
    c.crop = CropRect{static_cast<int>(r[0]), static_cast<int>(r[1]), static_cast<int>(r[2]), static_cast<int>(r[3])};
    if (c.crop->w <= 0 || c.crop->h <= 0 || c.crop->x < 0 || c.crop->y < 0) throw Error("crop must be a positive rectangle");
  }
  if (kv.has("crop_size")) {
    const auto s = kv.get_numbers("crop_size");
    if (s.size() != 2 || s[0] <= 0 || s[1] <= 0) throw Error("crop_size needs positive w h");
    c.crop_size = Size{static_cast<int>(s[0]), static_cast<int>(s[1])};
  }
  if (kv.has("warp_width") || kv.has("warp_height")) {
    c.warp_size = Size{kv.get_int("warp_width", 0), kv.get_int("warp_height", 0)};
    if (c.warp_size->width <= 0 || c.warp_size->height <= 0) throw Error("warp_width and warp_height must both be positive");
  }
  const std::string interp = kv.get_string("interpolation", "bilinear");
  if (interp == "bilinear") c.interpolation = Interpolation::Bilinear;
  else if (interp == "nearest") c.interpolation = Interpolation::Nearest;
  else throw Error("interpolation must be bilinear or nearest");

  TrackerConfig& t = c.tracker;
  t.iou_threshold = kv.get_double("iou_threshold", t.iou_threshold);
  t.max_age = kv.get_int("max_age", t.max_age);
  t.min_hits = kv.get_int("min_hits", t.min_hits);
  t.process_noise_scale = kv.get_double("process_noise_scale", t.process_noise_scale);
  t.measurement_noise_scale = kv.get_double("measurement_noise_scale", t.measurement_noise_scale);
  const std::string box = kv.get_string("output_box", "detection");
  if (box == "detection") t.output_box = OutputBox::Detection;
  else if (box == "filtered") t.output_box = OutputBox::Filtered;
  else throw Error("output_box must be detection or filtered");
  t.validate();
  c.calibrate_detections = kv.get_bool("calibrate_detections", true);

  SdaConfig& s = c.sda;
  s.distance_threshold_px = kv.get_double("distance_threshold_px", s.distance_threshold_px);
  s.gamma = kv.get_double("gamma", s.gamma);
  s.lambda = kv.get_double("lambda", s.lambda);
  s.velocity_threshold = kv.get_double("velocity_threshold", s.velocity_threshold);
  s.stability_threshold = kv.get_double("stability_threshold", s.stability_threshold);
  s.ewa_alpha = kv.get_double("ewa_alpha", s.ewa_alpha);
  s.use_ewa = kv.get_bool("use_ewa", s.use_ewa);
  s.use_velocity_compare = kv.get_bool("use_velocity_compare", s.use_velocity_compare);
  s.min_event_seconds = kv.get_double("min_event_seconds", s.min_event_seconds);
  s.fps = kv.get_double("fps", s.fps);
  s.merge_gap_frames = kv.get_int("merge_gap_frames", s.merge_gap_frames);
  s.trajectory_window_frames = kv.get_int("trajectory_window_frames", s.trajectory_window_frames);
  s.validate();

  ReportConfig& r = c.report;
  r.duration_bin_seconds = kv.get_double("duration_bin_seconds", r.duration_bin_seconds);
  r.duration_kde_bandwidth = kv.get_double("duration_kde_bandwidth", r.duration_kde_bandwidth);
  r.angle_kde_bandwidth = kv.get_double("angle_kde_bandwidth", r.angle_kde_bandwidth);
  r.kde_points = kv.get_int("kde_points", r.kde_points);
  r.face_to_face_deg = kv.get_double("face_to_face_deg", r.face_to_face_deg);
  if (kv.has("avg_traj_seconds_gt")) r.avg_traj_seconds_gt = kv.get_double("avg_traj_seconds_gt", 0.0);
  r.invert_ratio = kv.get_bool("invert_ratio", r.invert_ratio);
  if (!(r.duration_bin_seconds > 0) || !(r.duration_kde_bandwidth > 0) || !(r.angle_kde_bandwidth > 0) || r.kde_points < 2)
    throw Error("report bin width, bandwidths and kde_points must be positive");

  c.mot_iou_threshold = kv.get_double("mot_iou_threshold", c.mot_iou_threshold);
  c.group_box_pad = kv.get_double("group_box_pad", c.group_box_pad);

  ScenarioConfig& sc = c.scenario;
  sc.arena_width = kv.get_double("arena_width", sc.arena_width);
  sc.arena_height = kv.get_double("arena_height", sc.arena_height);
  sc.fps = s.fps;
  sc.duration_frames = kv.get_int("duration_frames", sc.duration_frames);
  sc.pedestrian_count = kv.get_int("pedestrian_count", sc.pedestrian_count);
  sc.group_count = kv.get_int("group_count", sc.group_count);
  sc.group_size_min = kv.get_int("group_size_min", sc.group_size_min);
  sc.group_size_max = kv.get_int("group_size_max", sc.group_size_max);
  sc.group_spacing_px = kv.get_double("group_spacing_px", sc.group_spacing_px);
  sc.speed_mean = kv.get_double("speed_mean", sc.speed_mean);
  sc.speed_std = kv.get_double("speed_std", sc.speed_std);
  sc.curved_fraction = kv.get_double("curved_fraction", sc.curved_fraction);
  sc.curve_max_px = kv.get_double("curve_max_px", sc.curve_max_px);
  sc.spawn_window_frames = kv.get_int("spawn_window_frames", sc.spawn_window_frames);
  sc.box_width = kv.get_double("box_width", sc.box_width);
  sc.box_height = kv.get_double("box_height", sc.box_height);
  sc.violation_threshold_px = kv.get_double("violation_threshold_px", s.distance_threshold_px);
  sc.jitter_sigma = kv.get_double("jitter_sigma", sc.jitter_sigma);
  sc.miss_rate = kv.get_double("miss_rate", sc.miss_rate);
  sc.false_positive_rate = kv.get_double("false_positive_rate", sc.false_positive_rate);
  sc.id_switch_rate = kv.get_double("id_switch_rate", sc.id_switch_rate);
  if (kv.has("seed")) {
    const std::string seed = *kv.get("seed");
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), v);
    if (ec != std::errc() || ptr != seed.data() + seed.size()) throw Error("seed must be an unsigned 64-bit integer");
    sc.seed = v;
  }
  sc.validate();
  return c;
}

}  // namespace bsda
