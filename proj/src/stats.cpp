#include "bsda/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bsda {

std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width) {
  if (!(bin_width > 0.0)) throw Error("histogram bin width must be positive");
  std::vector<HistogramBin> bins;
  if (values.empty()) return bins;
  const double top = *std::max_element(values.begin(), values.end());
  const auto n = static_cast<std::size_t>(std::floor(std::max(top, 0.0) / bin_width)) + 1;
  bins.resize(n);
  for (std::size_t k = 0; k < n; ++k) bins[k] = {static_cast<double>(k) * bin_width, static_cast<double>(k + 1) * bin_width, 0};
  for (double v : values) {
    if (v < 0.0) throw Error("histogram values must be non-negative");
    ++bins[std::min(static_cast<std::size_t>(std::floor(v / bin_width)), n - 1)].count;
  }
  return bins;
}

std::vector<double> kde_grid(std::span<const double> samples, double bandwidth, int points, double pad) {
  if (samples.empty()) throw Error("KDE grid needs at least one sample");
  if (points < 2) throw Error("KDE grid needs at least two points");
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  const double a = *lo - pad * bandwidth;
  const double b = *hi + pad * bandwidth;
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = a + (b - a) * i / (points - 1);
  return grid;
}

KdeCurve kde(std::span<const double> samples, double bandwidth, std::span<const double> grid) {
  if (samples.empty()) throw Error("KDE of an empty sample");
  if (!(bandwidth > 0.0)) throw Error("KDE bandwidth must be positive");
  KdeCurve c{{grid.begin(), grid.end()}, std::vector<double>(grid.size(), 0.0), bandwidth};
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sum = 0.0;
    for (double s : samples) {
      const double z = (grid[i] - s) / bandwidth;
      sum += std::exp(-0.5 * z * z);
    }
    c.densities[i] = norm * sum;
  }
  return c;
}

KdeCurve kde(std::span<const double> samples, double bandwidth) {
  const std::vector<double> grid = kde_grid(samples, bandwidth);
  return kde(samples, bandwidth, grid);
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("trapezoid: length mismatch");
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) area += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return area;
}

double angle_between(Point2 v1, Point2 v2) {
  const double n = v1.norm() * v2.norm();
  if (n == 0.0) throw Error("angle with a zero vector");
  return std::acos(std::clamp(v1.dot(v2) / n, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

double face_to_face_fraction(std::span<const std::pair<Point2, Point2>> velocity_pairs, double threshold_deg) {
  long resolvable = 0, head_on = 0;
  for (const auto& [v1, v2] : velocity_pairs) {
    if (v1.norm() == 0.0 || v2.norm() == 0.0) continue;
    ++resolvable;
    if (angle_between(v1, v2) > threshold_deg) ++head_on;
  }
  return resolvable == 0 ? 0.0 : static_cast<double>(head_on) / static_cast<double>(resolvable);
}

std::map<std::string, double> per_slot_rates(std::span<const SlotTally> tallies) {
  std::map<std::string, std::pair<long, double>> pooled;
  for (const SlotTally& t : tallies) {
    if (!(t.minutes > 0.0)) throw Error("slot '" + t.label + "' has no recorded duration");
    auto& [events, minutes] = pooled[t.label];
    events += t.events;
    minutes += t.minutes;
  }
  std::map<std::string, double> rates;
  for (const auto& [label, acc] : pooled) rates[label] = static_cast<double>(acc.first) / acc.second;
  return rates;
}

double violation_percentage(double violators, double volume) {
  if (!(volume > 0.0)) throw Error("violation percentage needs a positive volume");
  if (violators < 0.0) throw Error("violator count must be non-negative");
  return 100.0 * violators / volume;
}

namespace {

bool contains(const BBox& b, Point2 p, double pad) {
  return p.x >= b.x - pad && p.x <= b.right() + pad && p.y >= b.y - pad && p.y <= b.bottom() + pad;
}

}  // namespace

GroupMetrics group_validation_metrics(std::span<const PairObservation> predicted, const GroupGt& gt,
                                      double distance_threshold_px, double box_pad) {
  // (frame, group) -> [positives, claimed]
  std::map<std::pair<int, int>, std::pair<long, long>> cells;
  std::map<int, std::vector<const GroupBox*>> by_frame;
  long positives = 0;
  for (const GroupBox& g : gt.boxes) {
    long p = 0;
    for (std::size_t i = 0; i < g.members.size(); ++i)
      for (std::size_t j = i + 1; j < g.members.size(); ++j)
        if (distance(g.members[i].bp, g.members[j].bp) < distance_threshold_px) ++p;
    cells[{g.frame, g.group}].first += p;
    positives += p;
    by_frame[g.frame].push_back(&g);
  }
  if (positives == 0) throw Error("ground truth has no same-group pairs within the distance threshold");

  for (auto& [frame, boxes] : by_frame)
    std::sort(boxes.begin(), boxes.end(), [](const GroupBox* x, const GroupBox* y) { return x->group < y->group; });

  GroupMetrics m;
  for (const PairObservation& p : predicted) {
    const auto it = by_frame.find(p.frame);
    if (it == by_frame.end()) continue;
    for (const GroupBox* g : it->second) {
      if (contains(g->box, p.a, box_pad) && contains(g->box, p.b, box_pad)) {
        ++cells[{g->frame, g->group}].second;
        break;
      }
    }
  }
  for (const auto& [key, cell] : cells) m.tp += std::min(cell.first, cell.second);
  m.fp = static_cast<long>(predicted.size()) - m.tp;
  m.fn = positives - m.tp;

  m.precision_defined = !predicted.empty();
  m.precision = m.precision_defined ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace bsda
