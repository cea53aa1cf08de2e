#pragma once

// Frame-level preprocessing: weighted-mask background subtraction followed by
// a homography warp onto the ground plane and a crop.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bsda/geometry.hpp"

namespace bsda {

struct Frame {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 (gray) or 3 (RGB)
  std::vector<std::uint8_t> pixels;  // row-major, interleaved
  int index = 0;

  Frame() = default;
  Frame(int w, int h, int c, std::uint8_t fill = 0, int idx = 0);

  std::size_t sample_count() const { return static_cast<std::size_t>(width) * height * channels; }
  std::uint8_t& at(int x, int y, int c = 0) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::uint8_t at(int x, int y, int c = 0) const { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  bool same_shape(int w, int h, int c) const { return width == w && height == h && channels == c; }

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Per-sample running mean of a frame sequence.
struct MeanFrame {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> samples;
  int count = 0;

  double at(int x, int y, int c = 0) const { return samples[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

/// Streaming accumulator behind compute_mean_frame. Single writer.
class MeanAccumulator {
public:
  void add(const Frame& f);
  MeanFrame mean() const;
  int count() const { return count_; }

private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  int count_ = 0;
  std::vector<double> sums_;
};

MeanFrame compute_mean_frame(std::span<const Frame> frames);

/// out = clamp(frame - alpha * mean, 0, 255), rounded half-to-even.
Frame wmbs_apply(const Frame& frame, const MeanFrame& mean, double alpha);

class Homography {
public:
  /// Identity map.
  Homography();
  /// Row-major 3x3; rescaled so that m[2][2] == 1. Throws if singular.
  explicit Homography(const std::array<double, 9>& m);

  static Homography scaling(double sx, double sy);
  static Homography translation(double tx, double ty);

  double operator()(int r, int c) const { return m_[static_cast<std::size_t>(r) * 3 + c]; }
  const std::array<double, 9>& coefficients() const { return m_; }
  double determinant() const;
  Homography inverse() const;
  Homography compose(const Homography& after) const;  // after * this

private:
  std::array<double, 9> m_;
};

struct Correspondence {
  Point2 image;
  Point2 world;
};

/// Normalized DLT over >= 4 correspondences, solved by SVD.
Homography estimate_homography(std::span<const Correspondence> pairs);

Point2 warp_point(const Homography& h, Point2 p);

/// Axis-aligned bounds of the four warped corners.
BBox warp_box(const Homography& h, const BBox& b);

enum class Interpolation { Bilinear, Nearest };

struct Size {
  int width = 0;
  int height = 0;
};

/// Inverse-mapping resample; pixels whose source falls outside the input are 0.
Frame warp_frame(const Homography& h, const Frame& f, Size out_size,
                 Interpolation interp = Interpolation::Bilinear);

struct CropRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

Frame center_crop(const Frame& f, const CropRect& r);

/// Largest rect of size (w, h) centered in the frame.
CropRect centered_rect(int frame_w, int frame_h, int w, int h);

// Binary PGM (P5) / PPM (P6), maxval 255.
Frame read_pnm(const std::filesystem::path& path);
void write_pnm(const Frame& f, const std::filesystem::path& path);

}  // namespace bsda
