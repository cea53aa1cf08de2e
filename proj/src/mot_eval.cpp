#include "bsda/mot_eval.hpp"

#include <map>
#include <unordered_map>

#include "bsda/hungarian.hpp"

namespace bsda {

MotMetrics evaluate_mot(const std::vector<MotRow>& gt, const std::vector<MotRow>& hyp, const MotEvalConfig& cfg) {
  if (gt.empty()) throw Error("ground truth is empty");
  if (!(cfg.iou_threshold > 0.0 && cfg.iou_threshold <= 1.0)) throw Error("match IoU threshold must lie in (0, 1]");

  std::map<int, std::vector<const MotRow*>> gt_by_frame, hyp_by_frame;
  for (const MotRow& r : gt) gt_by_frame[r.frame].push_back(&r);
  for (const MotRow& r : hyp) hyp_by_frame[r.frame].push_back(&r);

  MotMetrics m;
  m.gt_boxes = static_cast<long>(gt.size());
  m.hyp_boxes = static_cast<long>(hyp.size());

  std::unordered_map<int, int> last_match;  // gt id -> hyp id, most recent match
  std::unordered_map<int, int> gt_length, gt_covered;
  double iou_sum = 0.0;

  for (const auto& [frame, gts] : gt_by_frame) {
    static const std::vector<const MotRow*> none;
    const auto hit = hyp_by_frame.find(frame);
    const std::vector<const MotRow*>& hyps = hit == hyp_by_frame.end() ? none : hit->second;

    const auto ng = static_cast<Eigen::Index>(gts.size());
    const auto nh = static_cast<Eigen::Index>(hyps.size());
    Eigen::MatrixXd overlap(ng, nh);
    for (Eigen::Index i = 0; i < ng; ++i)
      for (Eigen::Index j = 0; j < nh; ++j)
        overlap(i, j) = iou(gts[static_cast<std::size_t>(i)]->bbox, hyps[static_cast<std::size_t>(j)]->bbox);

    std::vector<int> gt_to_hyp(gts.size(), -1);
    std::vector<char> hyp_taken(hyps.size(), 0);

    // Continuity: keep last frame's pairing when it still overlaps enough.
    for (Eigen::Index i = 0; i < ng; ++i) {
      const auto prev = last_match.find(gts[static_cast<std::size_t>(i)]->id);
      if (prev == last_match.end()) continue;
      for (Eigen::Index j = 0; j < nh; ++j) {
        if (hyp_taken[static_cast<std::size_t>(j)] || hyps[static_cast<std::size_t>(j)]->id != prev->second) continue;
        if (overlap(i, j) >= cfg.iou_threshold) {
          gt_to_hyp[static_cast<std::size_t>(i)] = static_cast<int>(j);
          hyp_taken[static_cast<std::size_t>(j)] = 1;
        }
        break;
      }
    }

    std::vector<Eigen::Index> free_gt, free_hyp;
    for (Eigen::Index i = 0; i < ng; ++i)
      if (gt_to_hyp[static_cast<std::size_t>(i)] < 0) free_gt.push_back(i);
    for (Eigen::Index j = 0; j < nh; ++j)
      if (!hyp_taken[static_cast<std::size_t>(j)]) free_hyp.push_back(j);
    if (!free_gt.empty() && !free_hyp.empty()) {
      Eigen::MatrixXd cost(static_cast<Eigen::Index>(free_gt.size()), static_cast<Eigen::Index>(free_hyp.size()));
      for (std::size_t a = 0; a < free_gt.size(); ++a)
        for (std::size_t b = 0; b < free_hyp.size(); ++b) {
          const double o = overlap(free_gt[a], free_hyp[b]);
          cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = o >= cfg.iou_threshold ? 1.0 - o : kForbiddenCost;
        }
      for (const auto& [a, b] : hungarian(cost).pairs) {
        const Eigen::Index i = free_gt[static_cast<std::size_t>(a)];
        const Eigen::Index j = free_hyp[static_cast<std::size_t>(b)];
        if (overlap(i, j) < cfg.iou_threshold) continue;
        gt_to_hyp[static_cast<std::size_t>(i)] = static_cast<int>(j);
        const int gid = gts[static_cast<std::size_t>(i)]->id;
        const auto prev = last_match.find(gid);
        if (prev != last_match.end() && prev->second != hyps[static_cast<std::size_t>(j)]->id) ++m.idsw;
      }
    }

    long frame_matches = 0;
    for (Eigen::Index i = 0; i < ng; ++i) {
      const int gid = gts[static_cast<std::size_t>(i)]->id;
      ++gt_length[gid];
      const int j = gt_to_hyp[static_cast<std::size_t>(i)];
      if (j < 0) continue;
      ++frame_matches;
      ++gt_covered[gid];
      iou_sum += overlap(i, j);
      last_match[gid] = hyps[static_cast<std::size_t>(j)]->id;
    }
    m.matches += frame_matches;
    m.fn += ng - frame_matches;
    m.fp += nh - frame_matches;
  }
  // Hypotheses in frames without any ground truth are false positives too.
  for (const auto& [frame, hyps] : hyp_by_frame)
    if (!gt_by_frame.contains(frame)) m.fp += static_cast<long>(hyps.size());

  m.mota = 1.0 - static_cast<double>(m.fn + m.fp + m.idsw) / static_cast<double>(m.gt_boxes);
  m.motp = m.matches > 0 ? iou_sum / static_cast<double>(m.matches) : 0.0;
  m.gt_tracks = static_cast<int>(gt_length.size());
  int mostly_tracked = 0, mostly_lost = 0;
  for (const auto& [gid, len] : gt_length) {
    const auto c = gt_covered.find(gid);
    const double ratio = c == gt_covered.end() ? 0.0 : static_cast<double>(c->second) / len;
    if (ratio >= cfg.mostly_tracked) ++mostly_tracked;
    if (ratio <= cfg.mostly_lost) ++mostly_lost;
  }
  m.mt = static_cast<double>(mostly_tracked) / m.gt_tracks;
  m.ml = static_cast<double>(mostly_lost) / m.gt_tracks;
  return m;
}

}  // namespace bsda
