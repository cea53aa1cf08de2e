#pragma once

// CLEAR multi-object tracking metrics.

#include <vector>

#include "bsda/mot_io.hpp"

namespace bsda {

struct MotMetrics {
  double mota = 0.0;
  double motp = 0.0;  // mean IoU over matches
  double mt = 0.0;    // fraction of gt tracks covered >= mostly_tracked
  double ml = 0.0;    // fraction of gt tracks covered <= mostly_lost
  long fp = 0;
  long fn = 0;
  long idsw = 0;
  long matches = 0;
  long gt_boxes = 0;
  long hyp_boxes = 0;
  int gt_tracks = 0;
};

struct MotEvalConfig {
  double iou_threshold = 0.5;
  double mostly_tracked = 0.8;
  double mostly_lost = 0.2;
};

/// Per frame: previous gt-hyp pairings persist while IoU >= threshold, the
/// rest is matched by Hungarian on 1 - IoU. A gt track matched to a hypothesis
/// id different from its last one counts an identity switch.
MotMetrics evaluate_mot(const std::vector<MotRow>& gt, const std::vector<MotRow>& hyp, const MotEvalConfig& cfg = {});

}  // namespace bsda
