#include <cmath>
#include <cstring>

#include "doctest.h"
#include "test_util.hpp"
#include "tsr/error.hpp"
#include "tsr/transform.hpp"

using namespace tsr;

namespace {

// Independent construction of the same mapping: compose the elementary
// factors numerically instead of using the trig-identity closed form.
// Linear part L = zoom * [1, tan hx; tan hy, 1] * [cos r, -sin r; sin r,
// cos r]; full map p' = L * (p - center + t) + center with center =
// (sx/2, sy/2).
void oracle_point(const TransformParams& p, int sx, int sy, double i,
                  double j, double& oi, double& oj) {
  const double d2r = std::acos(-1.0) / 180.0;
  const double r = p.rot_deg * d2r;
  const double hx = p.shear_x_deg * d2r;
  const double hy = p.shear_y_deg * d2r;
  const double S[4] = {1.0, std::tan(hx), std::tan(hy), 1.0};
  const double R[4] = {std::cos(r), -std::sin(r), std::sin(r), std::cos(r)};
  const double L[4] = {
      p.zoom * (S[0] * R[0] + S[1] * R[2]),
      p.zoom * (S[0] * R[1] + S[1] * R[3]),
      p.zoom * (S[2] * R[0] + S[3] * R[2]),
      p.zoom * (S[2] * R[1] + S[3] * R[3]),
  };
  const double ci = sx / 2.0, cj = sy / 2.0;
  const double ui = i - ci + p.tx, uj = j - cj + p.ty;
  oi = L[0] * ui + L[1] * uj + ci;
  oj = L[2] * ui + L[3] * uj + cj;
}

double apply_i(const AffineTransform& t, double i, double j) {
  return t.m[0] * i + t.m[1] * j + t.m[2];
}
double apply_j(const AffineTransform& t, double i, double j) {
  return t.m[3] * i + t.m[4] * j + t.m[5];
}

} // namespace

TEST_CASE("matrix matches the composed elementary factors") {
  Rng rng(2024);
  const TransformRanges ranges; // defaults
  for (int trial = 0; trial < 200; ++trial) {
    const TransformParams p = sample_transform(ranges, rng);
    const int sx = 16 + int(rng.below(40));
    const int sy = 16 + int(rng.below(40));
    const AffineTransform t = build_matrix(p, sx, sy);
    for (int k = 0; k < 5; ++k) {
      const double i = rng.uniform(-5.0, sx + 5.0);
      const double j = rng.uniform(-5.0, sy + 5.0);
      double oi = 0, oj = 0;
      oracle_point(p, sx, sy, i, j, oi, oj);
      CHECK(apply_i(t, i, j) == doctest::Approx(oi).epsilon(1e-12));
      CHECK(apply_j(t, i, j) == doctest::Approx(oj).epsilon(1e-12));
    }
  }
}

TEST_CASE("known matrix entries") {
  // pure translation: constant column is the translation itself
  TransformParams p;
  p.tx = 2.0;
  p.ty = -1.0;
  AffineTransform t = build_matrix(p, 64, 64);
  CHECK(t.m[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t.m[1] == doctest::Approx(0.0).scale(1).epsilon(1e-15));
  CHECK(t.m[2] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(t.m[5] == doctest::Approx(-1.0).epsilon(1e-12));

  // pure zoom about the center of a 128 image: offset = (s/2)(1 - z)
  TransformParams z;
  z.zoom = 1.03;
  AffineTransform tz = build_matrix(z, 128, 128);
  CHECK(tz.m[0] == doctest::Approx(1.03).epsilon(1e-15));
  CHECK(tz.m[4] == doctest::Approx(1.03).epsilon(1e-15));
  CHECK(tz.m[2] == doctest::Approx(64.0 * (1.0 - 1.03)).epsilon(1e-12));
  CHECK(tz.m[5] == doctest::Approx(64.0 * (1.0 - 1.03)).epsilon(1e-12));

  // identity params give the identity matrix
  const AffineTransform id = build_matrix(TransformParams{}, 32, 32);
  CHECK(is_identity(id));
  CHECK(is_identity(identity_transform(32, 32)));
  CHECK(!is_identity(tz));
}

TEST_CASE("build_matrix rejects degenerate inputs") {
  TransformParams p;
  CHECK_THROWS_AS(build_matrix(p, 0, 16), DimensionError);
  CHECK_THROWS_AS(build_matrix(p, 16, -2), DimensionError);
  p.shear_x_deg = 90.0;
  CHECK_THROWS_AS(build_matrix(p, 16, 16), ConfigError);
}

TEST_CASE("warp with identity is bit exact") {
  Rng rng(5);
  const ImageTensor x = tsrtest::random_image(13, 9, 2, rng);
  const ImageTensor out = warp(x, identity_transform(13, 9));
  REQUIRE(out.same_shape(x));
  CHECK(std::memcmp(out.data.data(), x.data.data(),
                    x.data.size() * sizeof(double)) == 0);
}

TEST_CASE("warp is linear in the image") {
  Rng rng(6);
  const TransformRanges ranges;
  const ImageTensor a = tsrtest::random_image(12, 14, 1, rng);
  const ImageTensor b = tsrtest::random_image(12, 14, 1, rng);
  const AffineTransform t =
      build_matrix(sample_transform(ranges, rng), 12, 14);
  ImageTensor mix(12, 14, 1);
  for (size_t i = 0; i < mix.data.size(); ++i) {
    mix.data[i] = 2.5 * a.data[i] - 0.75 * b.data[i];
  }
  const ImageTensor wa = warp(a, t), wb = warp(b, t), wm = warp(mix, t);
  for (size_t i = 0; i < wm.data.size(); ++i) {
    CHECK(wm.data[i] ==
          doctest::Approx(2.5 * wa.data[i] - 0.75 * wb.data[i])
              .epsilon(1e-12));
  }
}

TEST_CASE("warp_gradient is the exact adjoint of warp") {
  Rng rng(7);
  TransformRanges wide; // include clamping at the borders
  wide.translation = {-5.0, 5.0};
  wide.rotation = {-10.0, 10.0};
  wide.zoom = {0.8, 1.25};
  wide.shear = {-8.0, 8.0};
  for (int trial = 0; trial < 25; ++trial) {
    const AffineTransform t =
        build_matrix(sample_transform(wide, rng), 9, 11);
    const ImageTensor x = tsrtest::random_image(9, 11, 2, rng, -1.0, 1.0);
    const ImageTensor g = tsrtest::random_image(9, 11, 2, rng, -1.0, 1.0);
    const double lhs = tsrtest::dot(warp(x, t), g);
    const double rhs = tsrtest::dot(x, warp_gradient(g, t));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("round trip through the inverse stays close on smooth content") {
  // Smooth low-frequency image; bilinear resampling error is what the
  // tolerance absorbs.
  const int n = 32;
  ImageTensor x(n, n, 1);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      x.at(i, j, 0) =
          0.5 + 0.4 * std::sin(2 * pi * i / n) * std::cos(2 * pi * j / n);
    }
  }
  Rng rng(8);
  const TransformRanges ranges; // default magnitudes
  for (int trial = 0; trial < 10; ++trial) {
    const AffineTransform t =
        build_matrix(sample_transform(ranges, rng), n, n);
    const ImageTensor back = warp(warp(x, t), invert(t));
    const int margin = 6;
    double worst = 0.0;
    for (int i = margin; i < n - margin; ++i) {
      for (int j = margin; j < n - margin; ++j) {
        worst = std::max(worst, std::abs(back.at(i, j, 0) - x.at(i, j, 0)));
      }
    }
    CHECK(worst < 0.02);
  }
}

TEST_CASE("invert composes to the identity map") {
  Rng rng(9);
  const TransformRanges ranges;
  for (int trial = 0; trial < 50; ++trial) {
    const AffineTransform t =
        build_matrix(sample_transform(ranges, rng), 24, 24);
    const AffineTransform inv = invert(t);
    for (int k = 0; k < 4; ++k) {
      const double i = rng.uniform(0.0, 24.0), j = rng.uniform(0.0, 24.0);
      const double mi = apply_i(inv, apply_i(t, i, j), apply_j(t, i, j));
      const double mj = apply_j(inv, apply_i(t, i, j), apply_j(t, i, j));
      CHECK(mi == doctest::Approx(i).epsilon(1e-10));
      CHECK(mj == doctest::Approx(j).epsilon(1e-10));
    }
  }
}

TEST_CASE("sampled parameters respect their ranges") {
  Rng rng(10);
  const TransformRanges ranges;
  for (int trial = 0; trial < 10000; ++trial) {
    const TransformParams p = sample_transform(ranges, rng);
    CHECK(p.tx >= ranges.translation.lo);
    CHECK(p.tx <= ranges.translation.hi);
    CHECK(p.ty >= ranges.translation.lo);
    CHECK(p.ty <= ranges.translation.hi);
    CHECK(p.rot_deg >= ranges.rotation.lo);
    CHECK(p.rot_deg <= ranges.rotation.hi);
    CHECK(p.zoom >= ranges.zoom.lo);
    CHECK(p.zoom <= ranges.zoom.hi);
    CHECK(p.shear_x_deg >= ranges.shear.lo);
    CHECK(p.shear_x_deg <= ranges.shear.hi);
    CHECK(p.shear_y_deg >= ranges.shear.lo);
    CHECK(p.shear_y_deg <= ranges.shear.hi);
  }
  TransformRanges degenerate;
  degenerate.translation = {1.0, 1.0};
  degenerate.rotation = {0.0, 0.0};
  degenerate.zoom = {1.0, 1.0};
  degenerate.shear = {0.0, 0.0};
  const TransformParams p = sample_transform(degenerate, rng);
  CHECK(p.tx == 1.0);
  CHECK(p.zoom == 1.0);
  TransformRanges bad;
  bad.zoom = {1.1, 0.9};
  CHECK_THROWS_AS(sample_transform(bad, rng), ConfigError);
}

TEST_CASE("noise perturbation") {
  Rng rng(11);
  const ImageTensor x = tsrtest::random_image(64, 64, 1, rng);
  NoiseSpec fixed{0.05, 0.05};
  const ImageTensor noisy = perturb_noise(x, fixed, rng);
  REQUIRE(noisy.same_shape(x));
  double sq = 0.0;
  for (size_t i = 0; i < x.data.size(); ++i) {
    const double d = noisy.data[i] - x.data[i];
    sq += d * d;
  }
  const double sd = std::sqrt(sq / double(x.data.size()));
  CHECK(sd == doctest::Approx(0.05).epsilon(0.15));

  NoiseSpec zero{0.0, 0.0};
  const ImageTensor same = perturb_noise(x, zero, rng);
  CHECK(std::memcmp(same.data.data(), x.data.data(),
                    x.data.size() * sizeof(double)) == 0);

  NoiseSpec bad{0.2, 0.1};
  CHECK_THROWS_AS(perturb_noise(x, bad, rng), ConfigError);
}
