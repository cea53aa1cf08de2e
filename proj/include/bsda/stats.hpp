#pragma once

// Report statistics over violation events, plus precision/recall of group
// validation against annotated group boxes.

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bsda/geometry.hpp"

namespace bsda {

struct HistogramBin {
  double start = 0.0;
  double end = 0.0;
  long count = 0;
};

/// Right-open bins [k*w, (k+1)*w) from 0 up to the bin holding the largest value.
std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width = 1.0);

struct KdeCurve {
  std::vector<double> grid;
  std::vector<double> densities;
  double bandwidth = 0.0;
};

/// Evenly spaced grid over [min - pad*h, max + pad*h].
std::vector<double> kde_grid(std::span<const double> samples, double bandwidth, int points = 512, double pad = 5.0);

/// Gaussian kernel density: (1 / (n h)) * sum phi((x - s_i) / h).
KdeCurve kde(std::span<const double> samples, double bandwidth, std::span<const double> grid);
KdeCurve kde(std::span<const double> samples, double bandwidth);

double trapezoid(std::span<const double> x, std::span<const double> y);

/// Angle between two nonzero vectors, degrees in [0, 180].
double angle_between(Point2 v1, Point2 v2);

/// Share of velocity pairs whose angle exceeds threshold_deg. Pairs with a
/// zero velocity are not resolvable and are left out of both counts.
double face_to_face_fraction(std::span<const std::pair<Point2, Point2>> velocity_pairs, double threshold_deg = 150.0);

struct SlotTally {
  std::string label;
  long events = 0;
  double minutes = 0.0;
};

/// Events per minute per slot label; tallies sharing a label are pooled.
std::map<std::string, double> per_slot_rates(std::span<const SlotTally> tallies);

/// 100 * violators / volume.
double violation_percentage(double violators, double volume);

struct GroupMember {
  int id = 0;
  Point2 bp;
};

/// One annotated group in one frame: the box covering its members.
struct GroupBox {
  int frame = 0;
  int group = 0;
  BBox box;
  std::vector<GroupMember> members;
};

struct GroupGt {
  std::vector<GroupBox> boxes;
  std::map<int, std::vector<int>> membership;  // group -> member ids
};

/// A pair the validator judged to be one group, located by bottom points.
struct PairObservation {
  int frame = 0;
  Point2 a;
  Point2 b;
};

struct GroupMetrics {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_defined = true;  // false when nothing was predicted
};

/// Positives are member pairs of one annotated group closer than the
/// threshold. A prediction whose both points fall in the same group box
/// (grown by box_pad) claims one positive of that group.
GroupMetrics group_validation_metrics(std::span<const PairObservation> predicted, const GroupGt& gt,
                                      double distance_threshold_px, double box_pad = 0.0);

}  // namespace bsda
