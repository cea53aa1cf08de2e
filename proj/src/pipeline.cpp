#include "bsda/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace bsda {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string numbered(int index, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d%s", index, ext.c_str());
  return buf;
}

// Output stems per input; colliding stems get a 1-based index prefix.
std::vector<std::string> unique_stems(const std::vector<fs::path>& inputs) {
  std::map<std::string, int> seen;
  for (const auto& p : inputs) ++seen[p.stem().string()];
  std::vector<std::string> out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string stem = inputs[i].stem().string();
    out.push_back(seen[stem] > 1 ? std::to_string(i + 1) + "_" + stem : stem);
  }
  return out;
}

// Runs work(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
template <class F>
void fan_out(std::size_t n, int jobs, F work) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min<int>(jobs, static_cast<int>(n)); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          work(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

Json curve_json(const KdeCurve& c) {
  return Json{{"bandwidth", c.bandwidth}, {"x", c.grid}, {"density", c.densities}};
}

std::string curve_csv(const KdeCurve& c) {
  std::string s = "x,density\n";
  for (std::size_t i = 0; i < c.grid.size(); ++i) s += format_number(c.grid[i]) + "," + format_number(c.densities[i]) + "\n";
  return s;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::string s = "bin_start,bin_end,count\n";
  for (const auto& b : bins) s += format_number(b.start) + "," + format_number(b.end) + "," + std::to_string(b.count) + "\n";
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Preprocessing

int run_preprocess(const PipelineConfig& cfg) {
  if (cfg.images_dir.empty()) throw Error("images_dir is not set");
  if (!fs::is_directory(cfg.images_dir)) throw Error("images_dir " + cfg.images_dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(cfg.images_dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .pgm/.ppm frames in " + cfg.images_dir.string());

  MeanAccumulator whole;
  if (cfg.background_window == 0)
    for (const auto& f : files) whole.add(read_pnm(f));
  const MeanFrame global_mean = cfg.background_window == 0 ? whole.mean() : MeanFrame{};

  const fs::path out_dir = cfg.output_dir / "frames";
  fs::create_directories(out_dir);
  const int n = static_cast<int>(files.size());
  for (int i = 0; i < n; ++i) {
    Frame frame = read_pnm(files[static_cast<std::size_t>(i)]);
    frame.index = i + 1;
    MeanFrame local;
    if (cfg.background_window > 0) {
      MeanAccumulator acc;
      const int lo = std::max(0, i - cfg.background_window / 2);
      const int hi = std::min(n - 1, lo + cfg.background_window - 1);
      for (int k = lo; k <= hi; ++k) acc.add(k == i ? frame : read_pnm(files[static_cast<std::size_t>(k)]));
      local = acc.mean();
    }
    Frame out = wmbs_apply(frame, cfg.background_window > 0 ? local : global_mean, cfg.wmbs_alpha);
    if (cfg.homography) {
      const Size size = cfg.warp_size.value_or(Size{out.width, out.height});
      out = warp_frame(*cfg.homography, out, size, cfg.interpolation);
    }
    if (cfg.crop) out = center_crop(out, *cfg.crop);
    else if (cfg.crop_size) out = center_crop(out, centered_rect(out.width, out.height, cfg.crop_size->width, cfg.crop_size->height));
    write_pnm(out, out_dir / numbered(i + 1, out.channels == 1 ? ".pgm" : ".ppm"));
  }
  return n;
}

// ---------------------------------------------------------------------------
// Tracking

Point2 crop_origin(const PipelineConfig& cfg, Size calibrated_size) {
  if (cfg.crop) return {static_cast<double>(cfg.crop->x), static_cast<double>(cfg.crop->y)};
  if (cfg.crop_size) {
    if (calibrated_size.width <= 0 || calibrated_size.height <= 0)
      throw Error("crop_size needs warp_width and warp_height to place detections");
    const CropRect r = centered_rect(calibrated_size.width, calibrated_size.height, cfg.crop_size->width, cfg.crop_size->height);
    return {static_cast<double>(r.x), static_cast<double>(r.y)};
  }
  return {0.0, 0.0};
}

std::vector<MotRow> calibrate_rows(const std::vector<MotRow>& rows, const Homography& h, Point2 origin) {
  std::vector<MotRow> out = rows;
  for (MotRow& r : out) {
    BBox b = warp_box(h, r.bbox);
    b.x -= origin.x;
    b.y -= origin.y;
    if (!b.valid()) throw Error("detection in frame " + std::to_string(r.frame) + " degenerates under the homography");
    r.bbox = b;
  }
  return out;
}

std::vector<fs::path> run_track(const PipelineConfig& cfg, int jobs) {
  if (cfg.detections.empty()) throw Error("detections is not set");
  fs::create_directories(cfg.output_dir);
  const auto stems = unique_stems(cfg.detections);
  std::vector<fs::path> outputs(cfg.detections.size());
  fan_out(cfg.detections.size(), jobs, [&](std::size_t i) {
    std::vector<MotRow> rows = read_mot_csv(cfg.detections[i]);
    if (cfg.calibrate_detections && cfg.homography)
      rows = calibrate_rows(rows, *cfg.homography, crop_origin(cfg, cfg.warp_size.value_or(Size{})));
    std::vector<Detection> dets;
    try {
      dets = to_detections(rows);
      outputs[i] = cfg.detections.size() == 1 ? cfg.output_dir / "tracks.csv" : cfg.output_dir / (stems[i] + "_tracks.csv");
      write_mot_csv(outputs[i], to_rows(track_sequence(dets, cfg.tracker)));
    } catch (const Error& e) {
      throw Error(cfg.detections[i].string() + ": " + e.what());
    }
  });
  return outputs;
}

// ---------------------------------------------------------------------------
// Analysis

Json event_json(const ViolationEvent& e) {
  return Json{{"pair", {e.a, e.b}}, {"start_frame", e.start_frame}, {"end_frame", e.end_frame}, {"duration_s", e.duration_s}};
}

VideoReport build_report(const std::vector<MotRow>& tracks, const PipelineConfig& cfg, const std::string& slot) {
  const SdaConfig& sc = cfg.sda;
  const ReportConfig& rc = cfg.report;
  SdaResult r = analyze(tracks, sc);

  VideoReport out;
  out.events = r.events;
  out.same_group_ids = r.validation.removed;
  for (const ViolationPair& p : r.validation.removed)
    out.same_group.push_back({p.frame, r.history.object(p.frame, p.a).bp, r.history.object(p.frame, p.b).bp});

  int first_frame = 0, last_frame = 0;
  if (!r.history.frames().empty()) {
    first_frame = 1;
    last_frame = r.history.frames().rbegin()->first;
  }
  const long frames = last_frame - first_frame + (last_frame > 0 ? 1 : 0);
  out.minutes = frames / sc.fps / 60.0;
  out.events_count = static_cast<long>(r.events.size());

  // Volume from trajectory count and average trajectory length.
  const auto& trajs = r.history.trajectories();
  const double tc = static_cast<double>(trajs.size());
  double at_infer = 0.0;
  for (const auto& [id, t] : trajs) at_infer += (t.frames.back() - t.frames.front() + 1) / sc.fps;
  if (!trajs.empty()) at_infer /= tc;
  Json volume{{"trajectory_count", trajs.size()}, {"at_infer_seconds", at_infer}};
  double estimated = 0.0;
  std::string flag;
  if (trajs.empty()) {
    flag = "no_tracks";
    volume["at_gt_seconds"] = rc.avg_traj_seconds_gt ? Json(*rc.avg_traj_seconds_gt) : Json(nullptr);
  } else if (rc.avg_traj_seconds_gt) {
    estimated = estimate_volume(tc, *rc.avg_traj_seconds_gt, at_infer, rc.invert_ratio);
    flag = "corrected";
    volume["at_gt_seconds"] = *rc.avg_traj_seconds_gt;
  } else {
    estimated = tc;
    flag = "uncorrected";
    volume["at_gt_seconds"] = nullptr;
  }
  volume["invert_ratio"] = rc.invert_ratio;
  volume["estimated"] = estimated;
  volume["flag"] = flag;

  std::set<int> violators;
  std::vector<double> durations, angles;
  std::vector<std::pair<Point2, Point2>> velocity_pairs;
  for (const ViolationEvent& e : r.events) {
    violators.insert(e.a);
    violators.insert(e.b);
    durations.push_back(e.duration_s);
    const auto vp = event_velocities(r.history, e);
    velocity_pairs.push_back(vp);
    if (vp.first.norm() > 0.0 && vp.second.norm() > 0.0) angles.push_back(angle_between(vp.first, vp.second));
  }

  Json& j = out.report;
  j["slot"] = slot;
  j["fps"] = sc.fps;
  j["frames"] = frames;
  j["minutes"] = out.minutes;
  j["candidate_pair_frames"] = r.candidates.size();
  j["same_group_pair_frames"] = r.validation.removed.size();
  j["retained_pair_frames"] = r.validation.retained.size();
  j["volume"] = volume;
  j["event_count"] = r.events.size();
  j["distinct_violators"] = violators.size();
  j["violation_percentage"] = estimated > 0.0 ? Json(violation_percentage(static_cast<double>(violators.size()), estimated)) : Json(nullptr);
  j["events_per_minute"] = out.minutes > 0.0 ? Json(static_cast<double>(r.events.size()) / out.minutes) : Json(nullptr);

  out.duration_bins = histogram(durations, rc.duration_bin_seconds);
  if (!durations.empty())
    out.duration_kde = kde(durations, rc.duration_kde_bandwidth, kde_grid(durations, rc.duration_kde_bandwidth, rc.kde_points));
  if (!angles.empty())
    out.angle_kde = kde(angles, rc.angle_kde_bandwidth, kde_grid(angles, rc.angle_kde_bandwidth, rc.kde_points));

  Json hist = Json::array();
  for (const auto& b : out.duration_bins) hist.push_back({{"bin_start", b.start}, {"bin_end", b.end}, {"count", b.count}});
  j["duration_histogram"] = hist;
  j["face_to_face_threshold_deg"] = rc.face_to_face_deg;
  j["face_to_face_fraction"] = face_to_face_fraction(velocity_pairs, rc.face_to_face_deg);
  j["angles_deg"] = angles;
  j["duration_kde"] = durations.empty() ? Json(nullptr) : curve_json(out.duration_kde);
  j["angle_kde"] = angles.empty() ? Json(nullptr) : curve_json(out.angle_kde);
  j["events"] = Json::array();
  for (const ViolationEvent& e : r.events) j["events"].push_back(event_json(e));
  return out;
}

void write_pair_csv(const fs::path& path, const std::vector<PairObservation>& pairs, const std::vector<ViolationPair>& ids) {
  std::string s = "frame,id_a,id_b,ax,ay,bx,by\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    s += std::to_string(p.frame) + "," + std::to_string(ids[i].a) + "," + std::to_string(ids[i].b) + "," +
         format_number(p.a.x) + "," + format_number(p.a.y) + "," + format_number(p.b.x) + "," + format_number(p.b.y) + "\n";
  }
  write_text(path, s);
}

std::vector<PairObservation> read_pair_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<PairObservation> out;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.find_first_not_of(" \r\t") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    PairObservation p;
    int a = 0, b = 0;
    if (!(row >> p.frame >> a >> b >> p.a.x >> p.a.y >> p.b.x >> p.b.y))
      throw Error(path.string() + ": malformed row " + std::to_string(line_no));
    out.push_back(p);
  }
  return out;
}

std::vector<fs::path> run_analyze(const PipelineConfig& cfg, int jobs) {
  if (cfg.tracks.empty()) throw Error("tracks is not set");
  if (!cfg.slots.empty() && cfg.slots.size() != cfg.tracks.size())
    throw Error("slots must list one label per tracks file");
  const bool many = cfg.tracks.size() > 1;
  const auto stems = unique_stems(cfg.tracks);
  std::vector<fs::path> reports(cfg.tracks.size());
  std::vector<SlotTally> tallies(cfg.tracks.size());

  fan_out(cfg.tracks.size(), jobs, [&](std::size_t i) {
    const std::string slot = cfg.slots.empty() ? "all" : cfg.slots[i];
    const fs::path dir = many ? cfg.output_dir / stems[i] : cfg.output_dir;
    fs::create_directories(dir);
    const std::vector<MotRow> rows = read_mot_csv(cfg.tracks[i]);
    VideoReport vr;
    try {
      vr = build_report(rows, cfg, slot);
    } catch (const Error& e) {
      throw Error(cfg.tracks[i].string() + ": " + e.what());
    }
    tallies[i] = {slot, vr.events_count, vr.minutes};

    Json rates = Json::object();
    if (vr.minutes > 0.0) rates[slot] = static_cast<double>(vr.events_count) / vr.minutes;
    vr.report["slot_rates"] = rates;

    std::string lines;
    for (const ViolationEvent& e : vr.events) lines += event_json(e).dump() + "\n";
    write_text(dir / "events.jsonl", lines);
    write_text(dir / "report.json", vr.report.dump(2) + "\n");

    write_text(dir / "duration_histogram.csv", histogram_csv(vr.duration_bins));
    write_text(dir / "duration_kde.csv", curve_csv(vr.duration_kde));
    write_text(dir / "angle_kde.csv", curve_csv(vr.angle_kde));
    write_pair_csv(dir / "same_group_pairs.csv", vr.same_group, vr.same_group_ids);
    reports[i] = dir / "report.json";
  });

  if (many) {
    std::vector<SlotTally> usable;
    for (const auto& t : tallies)
      if (t.minutes > 0.0) usable.push_back(t);
    Json slots = Json::object();
    for (const auto& [label, rate] : per_slot_rates(usable)) slots[label] = rate;
    write_text(cfg.output_dir / "slots.json", Json{{"events_per_minute", slots}}.dump(2) + "\n");
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Synthetic scenes and evaluation

Json truth_json(const ScenarioGroundTruth& t) {
  Json groups = Json::array();
  for (const auto& [g, ids] : t.groups) groups.push_back({{"group", g}, {"members", ids}});
  Json violations = Json::array();
  for (const auto& v : t.violations)
    violations.push_back({{"pair", {v.a, v.b}}, {"start_frame", v.start_frame}, {"end_frame", v.end_frame}});
  Json boxes = Json::array();
  for (const GroupBox& b : t.group_gt.boxes) {
    Json members = Json::array();
    for (const auto& m : b.members) members.push_back({{"id", m.id}, {"bp", {m.bp.x, m.bp.y}}});
    boxes.push_back({{"frame", b.frame}, {"group", b.group}, {"box", {b.box.x, b.box.y, b.box.w, b.box.h}}, {"members", members}});
  }
  return Json{{"groups", groups}, {"violations", violations}, {"group_boxes", boxes}};
}

GroupGt group_gt_from_json(const Json& j) {
  GroupGt gt;
  try {
    for (const auto& g : j.at("groups")) gt.membership[g.at("group").get<int>()] = g.at("members").get<std::vector<int>>();
    for (const auto& b : j.at("group_boxes")) {
      GroupBox box;
      box.frame = b.at("frame").get<int>();
      box.group = b.at("group").get<int>();
      const auto r = b.at("box").get<std::vector<double>>();
      if (r.size() != 4) throw Error("group box needs 4 numbers");
      box.box = {r[0], r[1], r[2], r[3]};
      for (const auto& m : b.at("members")) {
        const auto bp = m.at("bp").get<std::vector<double>>();
        if (bp.size() != 2) throw Error("member bp needs 2 numbers");
        box.members.push_back({m.at("id").get<int>(), {bp[0], bp[1]}});
      }
      gt.boxes.push_back(std::move(box));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed ground-truth JSON: ") + e.what());
  }
  return gt;
}

void run_synth(const PipelineConfig& cfg) {
  ScenarioConfig sc = cfg.scenario;
  sc.fps = cfg.sda.fps;
  const Scenario s = generate(sc);
  fs::create_directories(cfg.output_dir);
  write_mot_csv(cfg.output_dir / "detections.csv", s.detections);
  write_mot_csv(cfg.output_dir / "gt.csv", s.truth.tracks);
  write_mot_csv(cfg.output_dir / "sim_tracks.csv", s.sim_tracks);
  write_text(cfg.output_dir / "gt.json", truth_json(s.truth).dump(2) + "\n");
}

Json metrics_json(const MotMetrics& m) {
  return Json{{"mota", m.mota}, {"motp", m.motp}, {"mt", m.mt},       {"ml", m.ml},
              {"fp", m.fp},     {"fn", m.fn},     {"idsw", m.idsw},   {"matches", m.matches},
              {"gt_boxes", m.gt_boxes}, {"hyp_boxes", m.hyp_boxes}, {"gt_tracks", m.gt_tracks}};
}

Json metrics_json(const GroupMetrics& m) {
  return Json{{"precision", m.precision_defined ? Json(m.precision) : Json(0.0)},
              {"precision_defined", m.precision_defined},
              {"recall", m.recall},
              {"f1", m.f1},
              {"tp", m.tp},
              {"fp", m.fp},
              {"fn", m.fn}};
}

MotMetrics run_eval_mot(const PipelineConfig& cfg) {
  if (cfg.gt.empty()) throw Error("gt is not set");
  if (cfg.tracks.empty()) throw Error("tracks is not set");
  const MotMetrics m = evaluate_mot(read_mot_csv(cfg.gt), read_mot_csv(cfg.tracks.front()), {cfg.mot_iou_threshold});
  fs::create_directories(cfg.output_dir);
  write_text(cfg.output_dir / "mot_metrics.json", metrics_json(m).dump(2) + "\n");
  return m;
}

GroupMetrics run_eval_groups(const PipelineConfig& cfg) {
  if (cfg.gt_json.empty()) throw Error("gt_json is not set");
  if (cfg.predicted_groups.empty()) throw Error("predicted_groups is not set");
  Json j;
  try {
    j = Json::parse(read_text(cfg.gt_json));
  } catch (const nlohmann::json::exception& e) {
    throw Error(cfg.gt_json.string() + ": " + e.what());
  }
  const GroupMetrics m = group_validation_metrics(read_pair_csv(cfg.predicted_groups), group_gt_from_json(j),
                                                  cfg.sda.distance_threshold_px, cfg.group_box_pad);
  fs::create_directories(cfg.output_dir);
  write_text(cfg.output_dir / "group_metrics.json", metrics_json(m).dump(2) + "\n");
  return m;
}

}  // namespace bsda
