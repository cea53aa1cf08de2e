#include <Eigen/Dense>
#include <cmath>

#include "bsda/tracker.hpp"

namespace bsda {
namespace {

constexpr double kMinArea = 1e-6;

using Obs = Eigen::Matrix<double, 4, 7>;

StateCovariance transition() {
  StateCovariance f = StateCovariance::Identity();
  f(0, 4) = f(1, 5) = f(2, 6) = 1.0;
  return f;
}

Obs observation() {
  Obs h = Obs::Zero();
  for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
  return h;
}

StateCovariance process_noise(double scale) {
  StateVector d;
  d << 1, 1, 1, 1, 1e-2, 1e-2, 1e-4;
  return StateCovariance(d.asDiagonal()) * scale;
}

Eigen::Matrix4d measurement_noise(double scale) {
  return Eigen::Vector4d(1, 1, 10, 10).asDiagonal() * scale;
}

void symmetrize(StateCovariance& p) { p = 0.5 * (p + p.transpose()); }

}  // namespace

Eigen::Vector4d box_to_measurement(const BBox& b) {
  return {b.x + b.w / 2.0, b.y + b.h / 2.0, b.w * b.h, b.w / b.h};
}

BBox state_to_box(const StateVector& x) {
  const double s = std::max(x(2), kMinArea);
  const double r = std::max(x(3), kMinArea);
  const double w = std::sqrt(s * r);
  const double h = s / w;
  return {x(0) - w / 2.0, x(1) - h / 2.0, w, h};
}

BBox KalmanTrack::bbox() const { return state_to_box(state); }

KalmanTrack kalman_init(const Detection& d, int id) {
  if (!d.bbox.valid()) throw Error("detection box must have positive size");
  KalmanTrack t;
  t.state.head<4>() = box_to_measurement(d.bbox);
  StateVector p0;
  p0 << 10, 10, 10, 10, 1e4, 1e4, 1e4;
  t.covariance = p0.asDiagonal();
  t.id = id;
  t.hits = 1;
  t.class_id = d.class_id;
  t.last_detection = d;
  return t;
}

KalmanTrack kalman_predict(KalmanTrack t, const KalmanNoise& noise) {
  const StateCovariance f = transition();
  t.state = f * t.state;
  if (t.state(2) <= 0.0) {
    t.state(2) = kMinArea;
    t.state(6) = 0.0;
  }
  t.covariance = f * t.covariance * f.transpose() + process_noise(noise.process_scale);
  symmetrize(t.covariance);
  ++t.age;
  ++t.time_since_update;
  return t;
}

KalmanTrack kalman_update(KalmanTrack t, const Detection& d, const KalmanNoise& noise) {
  if (!d.bbox.valid()) throw Error("detection box must have positive size");
  const Obs h = observation();
  const Eigen::Matrix4d r = measurement_noise(noise.measurement_scale);
  const Eigen::Vector4d innovation = box_to_measurement(d.bbox) - h * t.state;
  Eigen::Matrix4d s = h * t.covariance * h.transpose() + r;
  Eigen::LDLT<Eigen::Matrix4d> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || std::abs(s.determinant()) < 1e-300) {
    s += 1e-9 * Eigen::Matrix4d::Identity();
    ldlt.compute(s);
  }
  // K = P H' S^-1, computed as (S^-1 H P)'.
  const Eigen::Matrix<double, 7, 4> gain = ldlt.solve(h * t.covariance).transpose();
  t.state += gain * innovation;
  if (t.state(3) <= 0.0) t.state(3) = kMinArea;

  // Joseph form keeps the covariance symmetric positive semi-definite.
  const StateCovariance ikh = StateCovariance::Identity() - gain * h;
  t.covariance = ikh * t.covariance * ikh.transpose() + gain * r * gain.transpose();
  symmetrize(t.covariance);

  ++t.hits;
  t.time_since_update = 0;
  t.class_id = d.class_id;
  t.last_detection = d;
  return t;
}

}  // namespace bsda
