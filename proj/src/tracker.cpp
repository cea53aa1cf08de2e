#include "bsda/tracker.hpp"

#include <algorithm>
#include <string>

#include "bsda/hungarian.hpp"

namespace bsda {

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

AssociationResult associate(std::span<const BBox> tracks, std::span<const BBox> detections,
                            double iou_threshold) {
  AssociationResult res;
  const auto nt = static_cast<Eigen::Index>(tracks.size());
  const auto nd = static_cast<Eigen::Index>(detections.size());
  std::vector<char> track_used(tracks.size(), 0), det_used(detections.size(), 0);

  if (nt > 0 && nd > 0) {
    Eigen::MatrixXd overlap(nt, nd);
    for (Eigen::Index i = 0; i < nt; ++i)
      for (Eigen::Index j = 0; j < nd; ++j)
        overlap(i, j) = iou(tracks[static_cast<std::size_t>(i)], detections[static_cast<std::size_t>(j)]);
    const Assignment a = hungarian(Eigen::MatrixXd::Ones(nt, nd) - overlap);
    for (const auto& [t, d] : a.pairs) {
      if (overlap(t, d) < iou_threshold) continue;
      res.matches.emplace_back(t, d);
      track_used[static_cast<std::size_t>(t)] = 1;
      det_used[static_cast<std::size_t>(d)] = 1;
    }
  }
  for (std::size_t i = 0; i < tracks.size(); ++i)
    if (!track_used[i]) res.unmatched_tracks.push_back(static_cast<int>(i));
  for (std::size_t j = 0; j < detections.size(); ++j)
    if (!det_used[j]) res.unmatched_detections.push_back(static_cast<int>(j));
  return res;
}

void TrackerConfig::validate() const {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) throw Error("iou_threshold must lie in [0, 1]");
  if (max_age < 0) throw Error("max_age must be non-negative");
  if (min_hits < 0) throw Error("min_hits must be non-negative");
  if (!(process_noise_scale > 0.0) || !(measurement_noise_scale > 0.0))
    throw Error("noise scales must be positive");
}

Tracker::Tracker(TrackerConfig cfg)
    : cfg_(cfg), noise_{cfg.process_noise_scale, cfg.measurement_noise_scale} {
  cfg_.validate();
}

std::vector<TrackOutput> Tracker::step(int frame, std::span<const Detection> detections) {
  if (frame <= last_frame_)
    throw Error("frame " + std::to_string(frame) + " arrived after frame " + std::to_string(last_frame_));
  last_frame_ = frame;
  ++frame_count_;

  for (KalmanTrack& t : tracks_) t = kalman_predict(std::move(t), noise_);

  std::vector<BBox> predicted, observed;
  predicted.reserve(tracks_.size());
  for (const KalmanTrack& t : tracks_) predicted.push_back(t.bbox());
  observed.reserve(detections.size());
  for (const Detection& d : detections) {
    if (!d.bbox.valid()) throw Error("detection in frame " + std::to_string(frame) + " has a non-positive box");
    observed.push_back(d.bbox);
  }

  const AssociationResult assoc = associate(predicted, observed, cfg_.iou_threshold);
  for (const auto& [ti, di] : assoc.matches)
    tracks_[static_cast<std::size_t>(ti)] =
        kalman_update(std::move(tracks_[static_cast<std::size_t>(ti)]), detections[static_cast<std::size_t>(di)], noise_);
  for (int di : assoc.unmatched_detections) tracks_.push_back(kalman_init(detections[static_cast<std::size_t>(di)], next_id_++));

  std::vector<TrackOutput> out;
  const bool warm_up = frame_count_ <= cfg_.min_hits;
  for (const KalmanTrack& t : tracks_) {
    if (t.time_since_update != 0) continue;
    if (t.hits < cfg_.min_hits && !warm_up) continue;
    const BBox box = cfg_.output_box == OutputBox::Detection ? t.last_detection.bbox : t.bbox();
    out.push_back({frame, t.id, box, t.class_id, t.last_detection.conf, t.last_detection.visibility});
  }
  std::sort(out.begin(), out.end(), [](const TrackOutput& a, const TrackOutput& b) { return a.id < b.id; });

  std::erase_if(tracks_, [&](const KalmanTrack& t) { return t.time_since_update > cfg_.max_age; });
  return out;
}

std::vector<TrackOutput> track_sequence(std::span<const Detection> detections, const TrackerConfig& cfg) {
  Tracker tracker(cfg);
  std::vector<TrackOutput> out;
  std::size_t i = 0;
  const int last = detections.empty() ? 0 : detections.back().frame;
  int prev = 0;
  for (const Detection& d : detections) {
    if (d.frame < 1) throw Error("frame indices are 1-based; got " + std::to_string(d.frame));
    if (d.frame < prev)
      throw Error("detections out of order: frame " + std::to_string(d.frame) + " follows frame " + std::to_string(prev));
    prev = d.frame;
  }
  for (int f = 1; f <= last; ++f) {
    const std::size_t begin = i;
    while (i < detections.size() && detections[i].frame == f) ++i;
    auto step = tracker.step(f, detections.subspan(begin, i - begin));
    out.insert(out.end(), step.begin(), step.end());
  }
  return out;
}

}  // namespace bsda
