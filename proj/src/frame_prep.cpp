#include "bsda/frame_prep.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace bsda {

Frame::Frame(int w, int h, int c, std::uint8_t fill, int idx) : width(w), height(h), channels(c), index(idx) {
  if (w <= 0 || h <= 0) throw Error("frame dimensions must be positive");
  if (c != 1 && c != 3) throw Error("frame must have 1 or 3 channels");
  pixels.assign(sample_count(), fill);
}

void MeanAccumulator::add(const Frame& f) {
  if (count_ == 0) {
    width_ = f.width;
    height_ = f.height;
    channels_ = f.channels;
    sums_.assign(f.sample_count(), 0.0);
  } else if (!f.same_shape(width_, height_, channels_)) {
    throw Error("frame " + std::to_string(f.index) + " does not match the sequence dimensions");
  }
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += f.pixels[i];
  ++count_;
}

MeanFrame MeanAccumulator::mean() const {
  if (count_ == 0) throw Error("mean of an empty frame sequence");
  MeanFrame m{width_, height_, channels_, sums_, count_};
  for (double& s : m.samples) s /= count_;
  return m;
}

MeanFrame compute_mean_frame(std::span<const Frame> frames) {
  MeanAccumulator acc;
  for (const Frame& f : frames) acc.add(f);
  return acc.mean();
}

Frame wmbs_apply(const Frame& frame, const MeanFrame& mean, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("WMBS alpha must lie in [0, 1]");
  if (!frame.same_shape(mean.width, mean.height, mean.channels))
    throw Error("frame and background mean differ in shape");
  Frame out = frame;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double v = std::clamp(frame.pixels[i] - alpha * mean.samples[i], 0.0, 255.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::nearbyint(v));  // FE_TONEAREST: ties to even
  }
  return out;
}

// ---------------------------------------------------------------------------
// Homography

namespace {

using Mat3 = Eigen::Matrix3d;

Mat3 to_eigen(const std::array<double, 9>& m) {
  Mat3 e;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) e(r, c) = m[static_cast<std::size_t>(r) * 3 + c];
  return e;
}

std::array<double, 9> from_eigen(const Mat3& e) {
  std::array<double, 9> m{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m[static_cast<std::size_t>(r) * 3 + c] = e(r, c);
  return m;
}

// Similarity transform moving the centroid to the origin with mean distance sqrt(2).
Mat3 normalizing_transform(const std::vector<Point2>& pts) {
  Point2 c{};
  for (const Point2& p : pts) c = c + p;
  c = c / static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const Point2& p : pts) mean_dist += distance(p, c);
  mean_dist /= static_cast<double>(pts.size());
  if (mean_dist <= 0.0) throw Error("degenerate correspondences: all points coincide");
  const double s = std::sqrt(2.0) / mean_dist;
  Mat3 t;
  t << s, 0, -s * c.x, 0, s, -s * c.y, 0, 0, 1;
  return t;
}

Point2 apply(const Mat3& t, Point2 p) {
  const Eigen::Vector3d q = t * Eigen::Vector3d(p.x, p.y, 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

}  // namespace

Homography::Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const std::array<double, 9>& m) : m_(m) {
  for (double v : m_)
    if (!std::isfinite(v)) throw Error("homography has non-finite coefficients");
  if (std::abs(m_[8]) < 1e-12) throw Error("homography with m[2][2] = 0 cannot be normalized");
  const double s = m_[8];
  for (double& v : m_) v /= s;
  if (std::abs(determinant()) <= 1e-12) throw Error("homography is singular");
}

Homography Homography::scaling(double sx, double sy) { return Homography({sx, 0, 0, 0, sy, 0, 0, 0, 1}); }

Homography Homography::translation(double tx, double ty) { return Homography({1, 0, tx, 0, 1, ty, 0, 0, 1}); }

double Homography::determinant() const { return to_eigen(m_).determinant(); }

Homography Homography::inverse() const { return Homography(from_eigen(to_eigen(m_).inverse())); }

Homography Homography::compose(const Homography& after) const {
  return Homography(from_eigen(to_eigen(after.m_) * to_eigen(m_)));
}

Homography estimate_homography(std::span<const Correspondence> pairs) {
  const std::size_t n = pairs.size();
  if (n < 4) throw Error("homography estimation needs at least 4 correspondences");

  std::vector<Point2> src, dst;
  for (const auto& c : pairs) {
    src.push_back(c.image);
    dst.push_back(c.world);
  }
  const Mat3 ts = normalizing_transform(src);
  const Mat3 td = normalizing_transform(dst);

  // At least 9 rows so the SVD always exposes all nine singular values.
  const Eigen::Index rows = std::max<Eigen::Index>(static_cast<Eigen::Index>(2 * n), 9);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 p = apply(ts, src[i]);
    const Point2 q = apply(td, dst[i]);
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << -p.x, -p.y, -1, 0, 0, 0, q.x * p.x, q.x * p.y, q.x;
    a.row(r + 1) << 0, 0, 0, -p.x, -p.y, -1, q.y * p.x, q.y * p.y, q.y;
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv(7) <= 1e-10 * sv(0)) throw Error("degenerate correspondences: DLT system is rank deficient");

  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Mat3 full = td.inverse() * hn * ts;
  return Homography(from_eigen(full));
}

Point2 warp_point(const Homography& h, Point2 p) {
  const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
  if (std::abs(w) < 1e-12) throw Error("point maps to the line at infinity");
  return {(h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2)) / w, (h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2)) / w};
}

BBox warp_box(const Homography& h, const BBox& b) {
  const Point2 corners[4] = {{b.x, b.y}, {b.right(), b.y}, {b.x, b.bottom()}, {b.right(), b.bottom()}};
  double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
  for (const Point2& c : corners) {
    const Point2 q = warp_point(h, c);
    x0 = std::min(x0, q.x);
    y0 = std::min(y0, q.y);
    x1 = std::max(x1, q.x);
    y1 = std::max(y1, q.y);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

Frame warp_frame(const Homography& h, const Frame& f, Size out_size, Interpolation interp) {
  Frame out(out_size.width, out_size.height, f.channels, 0, f.index);
  const Homography inv = h.inverse();
  const double max_x = f.width - 1;
  const double max_y = f.height - 1;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const double w = inv(2, 0) * x + inv(2, 1) * y + inv(2, 2);
      if (std::abs(w) < 1e-12) continue;
      const double sx = (inv(0, 0) * x + inv(0, 1) * y + inv(0, 2)) / w;
      const double sy = (inv(1, 0) * x + inv(1, 1) * y + inv(1, 2)) / w;

      if (interp == Interpolation::Nearest) {
        const double rx = std::nearbyint(sx);
        const double ry = std::nearbyint(sy);
        if (rx < 0 || ry < 0 || rx > max_x || ry > max_y) continue;
        for (int c = 0; c < f.channels; ++c) out.at(x, y, c) = f.at(static_cast<int>(rx), static_cast<int>(ry), c);
        continue;
      }

      // Tolerate round-off right at the border.
      constexpr double eps = 1e-9;
      if (sx < -eps || sy < -eps || sx > max_x + eps || sy > max_y + eps) continue;
      const double cx = std::clamp(sx, 0.0, max_x);
      const double cy = std::clamp(sy, 0.0, max_y);
      const int x0 = static_cast<int>(std::floor(cx));
      const int y0 = static_cast<int>(std::floor(cy));
      const int x1 = std::min(x0 + 1, f.width - 1);
      const int y1 = std::min(y0 + 1, f.height - 1);
      const double fx = cx - x0;
      const double fy = cy - y0;
      for (int c = 0; c < f.channels; ++c) {
        const double top = (1 - fx) * f.at(x0, y0, c) + fx * f.at(x1, y0, c);
        const double bot = (1 - fx) * f.at(x0, y1, c) + fx * f.at(x1, y1, c);
        const double v = (1 - fy) * top + fy * bot;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::nearbyint(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

Frame center_crop(const Frame& f, const CropRect& r) {
  if (r.w <= 0 || r.h <= 0) throw Error("crop rectangle must have positive size");
  if (r.x < 0 || r.y < 0 || r.x + r.w > f.width || r.y + r.h > f.height)
    throw Error("crop rectangle lies outside the frame");
  Frame out(r.w, r.h, f.channels, 0, f.index);
  const std::size_t row_bytes = static_cast<std::size_t>(r.w) * f.channels;
  for (int y = 0; y < r.h; ++y) {
    const auto src = f.pixels.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(r.y + y) * f.width + r.x) * f.channels);
    std::copy_n(src, row_bytes, out.pixels.begin() + static_cast<std::ptrdiff_t>(y * row_bytes));
  }
  return out;
}

CropRect centered_rect(int frame_w, int frame_h, int w, int h) {
  w = std::min(w, frame_w);
  h = std::min(h, frame_h);
  return {(frame_w - w) / 2, (frame_h - h) / 2, w, h};
}

}  // namespace bsda
