#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "bsda/frame_prep.hpp"

using namespace bsda;

namespace {

Frame random_frame(std::mt19937& rng, int w, int h, int c) {
  Frame f(w, h, c);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& p : f.pixels) p = static_cast<std::uint8_t>(d(rng));
  return f;
}

// Cross product of (b - a) and (c - a), normalized by the side lengths.
double collinearity(Point2 a, Point2 b, Point2 c) {
  const Point2 u = b - a, v = c - a;
  return std::abs(u.x * v.y - u.y * v.x) / (u.norm() * v.norm());
}

Homography random_homography(std::mt19937& rng) {
  std::uniform_real_distribution<double> d(-0.3, 0.3);
  std::uniform_real_distribution<double> t(-20.0, 20.0);
  std::uniform_real_distribution<double> p(-1e-3, 1e-3);
  return Homography({1 + d(rng), d(rng), t(rng), d(rng), 1 + d(rng), t(rng), p(rng), p(rng), 1.0});
}

}  // namespace

TEST_CASE("mean frame") {
  std::mt19937 rng(7);
  SUBCASE("two identical frames give the frame back") {
    const Frame f = random_frame(rng, 8, 6, 3);
    const std::vector<Frame> seq{f, f};
    const MeanFrame m = compute_mean_frame(seq);
    CHECK(m.count == 2);
    for (std::size_t i = 0; i < f.pixels.size(); ++i) CHECK(m.samples[i] == f.pixels[i]);
  }
  SUBCASE("black and white average to 127.5") {
    const std::vector<Frame> seq{Frame(4, 4, 1, 0), Frame(4, 4, 1, 255)};
    for (double s : compute_mean_frame(seq).samples) CHECK(s == 127.5);
  }
  SUBCASE("matches an independent summation over 10 random frames") {
    std::vector<Frame> seq;
    for (int i = 0; i < 10; ++i) seq.push_back(random_frame(rng, 9, 7, 1));
    const MeanFrame m = compute_mean_frame(seq);
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 9; ++x) {
        long sum = 0;
        for (const Frame& f : seq) sum += f.at(x, y);
        CHECK(std::abs(m.at(x, y) - sum / 10.0) < 1e-9);
      }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(compute_mean_frame(std::vector<Frame>{}), Error);
    const std::vector<Frame> mixed{Frame(4, 4, 1), Frame(4, 5, 1)};
    CHECK_THROWS_AS(compute_mean_frame(mixed), Error);
  }
}

TEST_CASE("weighted-mask background subtraction") {
  std::mt19937 rng(11);
  const Frame f = random_frame(rng, 10, 10, 1);
  const std::vector<Frame> seq{f, random_frame(rng, 10, 10, 1)};
  const MeanFrame mean = compute_mean_frame(seq);

  CHECK(wmbs_apply(f, mean, 0.0) == f);

  const Frame constant(5, 5, 3, 90);
  const std::vector<Frame> flat{constant, constant, constant};
  const Frame zeroed = wmbs_apply(constant, compute_mean_frame(flat), 1.0);
  for (auto p : zeroed.pixels) CHECK(p == 0);

  const std::vector<Frame> two{Frame(1, 1, 1, 200), Frame(1, 1, 1, 0)};
  CHECK(wmbs_apply(Frame(1, 1, 1, 200), compute_mean_frame(two), 0.5).pixels[0] == 150);

  SUBCASE("ties round to even") {
    // 101 - 0.5 * 1 = 100.5 -> 100; 102 - 0.5 * 1 = 101.5 -> 102
    const std::vector<Frame> ones{Frame(1, 1, 1, 1)};
    const MeanFrame m1 = compute_mean_frame(ones);
    CHECK(wmbs_apply(Frame(1, 1, 1, 101), m1, 0.5).pixels[0] == 100);
    CHECK(wmbs_apply(Frame(1, 1, 1, 102), m1, 0.5).pixels[0] == 102);
  }
  SUBCASE("monotone non-increasing in alpha") {
    Frame prev = wmbs_apply(f, mean, 0.0);
    for (double a = 0.1; a <= 1.0; a += 0.1) {
      const Frame cur = wmbs_apply(f, mean, a);
      for (std::size_t i = 0; i < cur.pixels.size(); ++i) CHECK(cur.pixels[i] <= prev.pixels[i]);
      prev = cur;
    }
  }
  CHECK_THROWS_AS(wmbs_apply(f, mean, 1.5), Error);
  CHECK_THROWS_AS(wmbs_apply(f, mean, -0.1), Error);
  CHECK_THROWS_AS(wmbs_apply(Frame(3, 3, 1), mean, 0.5), Error);
}

TEST_CASE("homography estimation") {
  const std::vector<Point2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};

  SUBCASE("unit square onto itself is the identity") {
    std::vector<Correspondence> c;
    for (Point2 p : square) c.push_back({p, p});
    const Homography h = estimate_homography(c);
    const Homography id;
    for (int i = 0; i < 9; ++i) CHECK(std::abs(h.coefficients()[static_cast<std::size_t>(i)] - id.coefficients()[static_cast<std::size_t>(i)]) < 1e-9);
  }
  SUBCASE("unit square onto a doubled square") {
    std::vector<Correspondence> c;
    for (Point2 p : square) c.push_back({p, 2.0 * p});
    const Point2 q = warp_point(estimate_homography(c), {0.5, 0.5});
    CHECK(std::abs(q.x - 1.0) < 1e-9);
    CHECK(std::abs(q.y - 1.0) < 1e-9);
  }
  SUBCASE("generic convex quad reprojects exactly") {
    const std::vector<Point2> quad{{10, 20}, {310, 5}, {350, 260}, {-15, 240}};
    std::vector<Correspondence> c;
    for (std::size_t i = 0; i < 4; ++i) c.push_back({square[i], quad[i]});
    const Homography h = estimate_homography(c);
    CHECK(h(2, 2) == 1.0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(distance(warp_point(h, square[i]), quad[i]) < 1e-9);
  }
  SUBCASE("least squares over many exact pairs recovers the map") {
    std::mt19937 rng(5);
    const Homography truth = random_homography(rng);
    std::uniform_real_distribution<double> d(0.0, 300.0);
    std::vector<Correspondence> c;
    for (int i = 0; i < 20; ++i) {
      const Point2 p{d(rng), d(rng)};
      c.push_back({p, warp_point(truth, p)});
    }
    const Homography h = estimate_homography(c);
    for (const auto& cc : c) CHECK(distance(warp_point(h, cc.image), cc.world) < 1e-6);
  }
  SUBCASE("degenerate inputs") {
    std::vector<Correspondence> three{{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
    CHECK_THROWS_AS(estimate_homography(three), Error);
    std::vector<Correspondence> collinear{{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{2, 0}, {2, 0}}, {{0, 1}, {0, 1}}};
    CHECK_THROWS_AS(estimate_homography(collinear), Error);
  }
}

TEST_CASE("point warping") {
  CHECK(warp_point(Homography(), {3, 4}) == Point2{3, 4});
  CHECK(warp_point(Homography::scaling(2, 2), {3, 4}) == Point2{6, 8});
  CHECK_THROWS_AS(warp_point(Homography({1, 0, 0, 0, 1, 0, 1, 0, 1}), {-1, 5}), Error);
  CHECK_THROWS_AS(Homography({1, 2, 3, 2, 4, 6, 0, 0, 1}), Error);

  std::mt19937 rng(21);
  std::uniform_real_distribution<double> d(0.0, 400.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Homography h = random_homography(rng);
    const Homography inv = h.inverse();
    const Point2 p{d(rng), d(rng)};
    CHECK(distance(warp_point(inv, warp_point(h, p)), p) < 1e-6);

    // Collinearity survives the projective map.
    const Point2 a{d(rng), d(rng)}, b{d(rng), d(rng)};
    const Point2 mid = a + 0.37 * (b - a);
    CHECK(collinearity(warp_point(h, a), warp_point(h, b), warp_point(h, mid)) < 1e-6);
  }
}

TEST_CASE("frame warping") {
  std::mt19937 rng(3);
  const Frame f = random_frame(rng, 32, 24, 3);
  CHECK(warp_frame(Homography(), f, {32, 24}) == f);
  CHECK(warp_frame(Homography(), f, {32, 24}, Interpolation::Nearest) == f);

  SUBCASE("translation shifts content and zero-fills") {
    const Frame g = warp_frame(Homography::translation(10, 0), f, {32, 24});
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 32; ++x)
        for (int c = 0; c < 3; ++c) CHECK(g.at(x, y, c) == (x < 10 ? 0 : f.at(x - 10, y, c)));
  }
  SUBCASE("scaled checkerboard squares land at their analytic positions") {
    // 8 px squares; square (i, j) is white when i + j is even.
    Frame board(64, 64, 1);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) board.at(x, y) = ((x / 8 + y / 8) % 2 == 0) ? 255 : 0;
    const Frame big = warp_frame(Homography::scaling(2, 2), board, {128, 128});
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) {
        // Source center (8i + 3.5, 8j + 3.5) maps to (16i + 7, 16j + 7).
        const int x = 16 * i + 7, y = 16 * j + 7;
        CHECK(big.at(x, y) == board.at(8 * i + 3, 8 * j + 3));
      }
  }
}

TEST_CASE("center crop") {
  Frame grad(200, 150, 1);
  for (int y = 0; y < 150; ++y)
    for (int x = 0; x < 200; ++x) grad.at(x, y) = static_cast<std::uint8_t>((x + 2 * y) % 256);

  CHECK(center_crop(grad, {0, 0, 200, 150}) == grad);
  const Frame one = center_crop(grad, {5, 5, 1, 1});
  CHECK(one.width == 1);
  CHECK(one.pixels[0] == grad.at(5, 5));

  const Frame sub = center_crop(grad, {40, 30, 100, 100});
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x) CHECK(sub.at(x, y) == grad.at(x + 40, y + 30));

  CHECK_THROWS_AS(center_crop(grad, {150, 0, 100, 10}), Error);
  CHECK_THROWS_AS(center_crop(grad, {0, 0, 0, 10}), Error);
  const CropRect r = centered_rect(200, 150, 100, 50);
  CHECK(r.x == 50);
  CHECK(r.y == 50);
}

TEST_CASE("PGM/PPM round trip is bit-exact") {
  std::mt19937 rng(9);
  const auto dir = std::filesystem::temp_directory_path() / "bsda_pnm_test";
  std::filesystem::create_directories(dir);
  for (int c : {1, 3}) {
    const Frame f = random_frame(rng, 17, 13, c);
    const auto path = dir / (c == 1 ? "a.pgm" : "a.ppm");
    write_pnm(f, path);
    Frame g = read_pnm(path);
    g.index = f.index;
    CHECK(g == f);
    CHECK(std::filesystem::file_size(path) == f.pixels.size() + std::string("P5\n17 13\n255\n").size());
  }
  std::ofstream(dir / "bad.pgm") << "P2\n2 2\n255\n0 0 0 0\n";
  CHECK_THROWS_AS(read_pnm(dir / "bad.pgm"), Error);
  std::ofstream(dir / "short.pgm", std::ios::binary) << "P5\n4 4\n255\nabc";
  CHECK_THROWS_AS(read_pnm(dir / "short.pgm"), Error);
  std::filesystem::remove_all(dir);
}
