#pragma once

// One entry point per pipeline stage, plus the JSON/CSV shapes they exchange.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsda/config.hpp"
#include "bsda/mot_eval.hpp"
#include "bsda/sda.hpp"
#include "bsda/stats.hpp"
#include "bsda/synth.hpp"

namespace bsda {

using Json = nlohmann::ordered_json;

/// WMBS, then warp, then crop over every PGM/PPM in images_dir (name order).
/// Writes output_dir/frames/NNNNNN.{pgm,ppm}; returns the frame count.
int run_preprocess(const PipelineConfig& cfg);

/// Tracks every detections file. One input writes output_dir/tracks.csv,
/// several write output_dir/<stem>_tracks.csv. Returns the files written.
std::vector<std::filesystem::path> run_track(const PipelineConfig& cfg, int jobs = 1);

/// Analyses every tracks file into events.jsonl, report.json, CSV exports and
/// same_group_pairs.csv (in output_dir, or output_dir/<stem>/ for several
/// inputs, plus output_dir/slots.json). Returns the report paths.
std::vector<std::filesystem::path> run_analyze(const PipelineConfig& cfg, int jobs = 1);

/// Writes detections.csv, gt.csv, sim_tracks.csv and gt.json.
void run_synth(const PipelineConfig& cfg);

/// gt against tracks[0]; writes output_dir/mot_metrics.json.
MotMetrics run_eval_mot(const PipelineConfig& cfg);

/// predicted_groups against gt_json; writes output_dir/group_metrics.json.
GroupMetrics run_eval_groups(const PipelineConfig& cfg);

/// Maps raw-image boxes into the calibrated, cropped frame.
std::vector<MotRow> calibrate_rows(const std::vector<MotRow>& rows, const Homography& h, Point2 crop_origin);

/// Origin of the configured crop in calibrated coordinates (0, 0 when uncropped).
Point2 crop_origin(const PipelineConfig& cfg, Size calibrated_size);

struct VideoReport {
  Json report;
  std::vector<ViolationEvent> events;
  std::vector<PairObservation> same_group;
  std::vector<ViolationPair> same_group_ids;
  std::vector<HistogramBin> duration_bins;
  KdeCurve duration_kde;  // empty when there are no events
  KdeCurve angle_kde;
  long events_count = 0;
  double minutes = 0.0;
};

VideoReport build_report(const std::vector<MotRow>& tracks, const PipelineConfig& cfg, const std::string& slot);

Json event_json(const ViolationEvent& e);
Json metrics_json(const MotMetrics& m);
Json metrics_json(const GroupMetrics& m);
Json truth_json(const ScenarioGroundTruth& t);
GroupGt group_gt_from_json(const Json& j);

void write_pair_csv(const std::filesystem::path& path, const std::vector<PairObservation>& pairs,
                    const std::vector<ViolationPair>& ids);
std::vector<PairObservation> read_pair_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace bsda
