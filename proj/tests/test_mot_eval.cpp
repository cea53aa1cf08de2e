#include <doctest.h>

#include <map>
#include <random>

#include "bsda/mot_eval.hpp"

using namespace bsda;

namespace {

MotRow row(int frame, int id, double x, double y) { return {frame, id, {x, y, 15, 30}, 1.0, 0, 1}; }

std::vector<MotRow> straight_track(int id, int first, int last, double y) {
  std::vector<MotRow> r;
  for (int f = first; f <= last; ++f) r.push_back(row(f, id, 2.0 * f, y));
  return r;
}

}  // namespace

TEST_CASE("identity hypothesis") {
  auto gt = straight_track(1, 1, 20, 0);
  const auto b = straight_track(2, 1, 20, 100);
  gt.insert(gt.end(), b.begin(), b.end());
  std::stable_sort(gt.begin(), gt.end(), [](const MotRow& l, const MotRow& r) { return l.frame < r.frame; });
  const MotMetrics m = evaluate_mot(gt, gt);
  CHECK(m.mota == 1.0);
  CHECK(m.motp == 1.0);
  CHECK(m.idsw == 0);
  CHECK(m.mt == 1.0);
  CHECK(m.ml == 0.0);
  CHECK(m.gt_tracks == 2);
}

TEST_CASE("empty hypothesis") {
  const auto gt = straight_track(1, 1, 10, 0);
  const MotMetrics m = evaluate_mot(gt, {});
  CHECK(m.mota == 0.0);
  CHECK(m.fn == 10);
  CHECK(m.ml == 1.0);
  CHECK(m.mt == 0.0);
  CHECK_THROWS_AS(evaluate_mot({}, gt), Error);
}

TEST_CASE("split id at frame 6") {
  const auto gt = straight_track(1, 1, 10, 0);
  auto hyp = straight_track(7, 1, 5, 0);
  const auto tail = straight_track(8, 6, 10, 0);
  hyp.insert(hyp.end(), tail.begin(), tail.end());
  const MotMetrics m = evaluate_mot(gt, hyp);
  CHECK(m.idsw == 1);
  CHECK(m.mota == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(m.fp == 0);
  CHECK(m.fn == 0);
}

TEST_CASE("continuity keeps an existing pairing") {
  // Two hypotheses overlap the gt from frame 3; the established one stays.
  std::vector<MotRow> gt, hyp;
  for (int f = 1; f <= 6; ++f) {
    gt.push_back(row(f, 1, 0, 0));
    hyp.push_back(row(f, 5, 2, 0));  // IoU 13/17
    if (f >= 3) hyp.push_back(row(f, 6, 0, 0));  // IoU 1
  }
  const MotMetrics m = evaluate_mot(gt, hyp);
  CHECK(m.idsw == 0);
  CHECK(m.fp == 4);
}

TEST_CASE("hypotheses in frames without gt are false positives") {
  const auto gt = straight_track(1, 1, 5, 0);
  auto hyp = gt;
  hyp.push_back(row(9, 3, 0, 0));
  const MotMetrics m = evaluate_mot(gt, hyp);
  CHECK(m.fp == 1);
  CHECK(m.mota == doctest::Approx(0.8));
}

TEST_CASE("relabel invariance and count identities on noisy hypotheses") {
  std::mt19937 rng(5);
  std::normal_distribution<double> n(0.0, 2.0);
  std::bernoulli_distribution drop(0.15), spurious(0.1);
  std::vector<MotRow> gt, hyp;
  for (int f = 1; f <= 60; ++f) {
    for (int id = 1; id <= 6; ++id) {
      const MotRow g = row(f, id, 40.0 * id + f, 10.0 * id);
      gt.push_back(g);
      if (!drop(rng)) hyp.push_back(row(f, id + (f > 30 && id == 2 ? 100 : 0), g.bbox.x + n(rng), g.bbox.y + n(rng)));
    }
    if (spurious(rng)) hyp.push_back(row(f, 500 + f, 600, 400));
  }
  const MotMetrics m = evaluate_mot(gt, hyp);
  CHECK(m.fp + m.matches == m.hyp_boxes);
  CHECK(m.fn + m.matches == m.gt_boxes);
  CHECK(m.hyp_boxes == static_cast<long>(hyp.size()));
  CHECK(m.idsw >= 1);

  std::map<int, int> rename;
  auto relabeled = hyp;
  for (auto& r : relabeled) r.id = rename.try_emplace(r.id, 10000 - static_cast<int>(rename.size()) * 3).first->second;
  const MotMetrics m2 = evaluate_mot(gt, relabeled);
  CHECK(m2.mota == m.mota);
  CHECK(m2.motp == m.motp);
  CHECK(m2.idsw == m.idsw);
  CHECK(m2.mt == m.mt);
  CHECK(m2.ml == m.ml);
}
