#include <cmath>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "tsr/error.hpp"
#include "tsr/metrics.hpp"

using namespace tsr;

namespace {

// One-pixel frames so temporal behaviour can be probed in isolation.
std::vector<ImageTensor> scalar_video(const std::vector<double>& values) {
  std::vector<ImageTensor> frames;
  frames.reserve(values.size());
  for (double v : values) frames.emplace_back(1, 1, 1, v);
  return frames;
}

std::vector<ImageTensor> const_video(int frames, int size, double value) {
  return std::vector<ImageTensor>(size_t(frames),
                                  ImageTensor(size, size, 1, value));
}

double total_energy(const std::vector<ImageTensor>& d) {
  double sum = 0.0;
  for (const ImageTensor& f : d) {
    for (double v : f.data) sum += v;
  }
  return sum;
}

} // namespace

TEST_CASE("temporal kernel shape") {
  const TemporalFilter filt = make_temporal_filter(0.15, 25.0);
  // 0.15 s at 25 fps is 3.75 frames; +-3 sigma truncation needs 12 taps
  CHECK(filt.radius == 12);
  REQUIRE(int(filt.kernel.size()) == 2 * filt.radius + 1);
  double sum = 0.0;
  for (double k : filt.kernel) {
    CHECK(k > 0.0);
    sum += k;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < filt.radius; ++i) {
    CHECK(filt.kernel[size_t(i)] ==
          doctest::Approx(filt.kernel[filt.kernel.size() - 1 - size_t(i)])
              .epsilon(1e-15));
  }
  const double peak = filt.kernel[size_t(filt.radius)];
  for (double k : filt.kernel) CHECK(k <= peak + 1e-18);

  CHECK_THROWS_AS(make_temporal_filter(0.0, 25.0), ConfigError);
  CHECK_THROWS_AS(make_temporal_filter(0.15, 0.0), ConfigError);
}

TEST_CASE("high pass of an impulse reproduces the kernel") {
  const TemporalFilter filt = make_temporal_filter(0.15, 25.0);
  const int n = 4 * filt.radius + 1;
  std::vector<double> values(size_t(n), 0.0);
  const int mid = n / 2;
  values[size_t(mid)] = 1.0;
  const auto d = highpass_energy(scalar_video(values), filt);
  REQUIRE(int(d.size()) == n);
  // at the impulse: (1 - g0)^2, at offset k within the support: g_k^2
  const double g0 = filt.kernel[size_t(filt.radius)];
  CHECK(d[size_t(mid)].data[0] ==
        doctest::Approx((1.0 - g0) * (1.0 - g0)).epsilon(1e-12));
  for (int k = 1; k <= filt.radius; ++k) {
    const double gk = filt.kernel[size_t(filt.radius + k)];
    CHECK(d[size_t(mid + k)].data[0] ==
          doctest::Approx(gk * gk).epsilon(1e-12));
    CHECK(d[size_t(mid - k)].data[0] ==
          doctest::Approx(gk * gk).epsilon(1e-12));
  }
  CHECK(d[size_t(mid + filt.radius + 1)].data[0] == 0.0);
}

TEST_CASE("constant video carries no high-pass energy") {
  const TemporalFilter filt = make_temporal_filter(0.15, 25.0);
  const auto d = highpass_energy(const_video(30, 4, 0.37), filt);
  CHECK(total_energy(d) <= 1e-24);
}

TEST_CASE("dc offset does not change the energy") {
  const TemporalFilter filt = make_temporal_filter(0.15, 25.0);
  Rng rng(81);
  std::vector<double> base(40);
  for (double& v : base) v = rng.uniform(0.0, 1.0);
  std::vector<double> shifted = base;
  for (double& v : shifted) v += 5.0;
  const double e0 = total_energy(highpass_energy(scalar_video(base), filt));
  const double e1 = total_energy(highpass_energy(scalar_video(shifted), filt));
  CHECK(e1 == doctest::Approx(e0).epsilon(1e-9));
}

TEST_CASE("sequence shorter than the support is rejected") {
  const TemporalFilter filt = make_temporal_filter(0.15, 25.0);
  // support is 25 frames; 24 must fail, 25 must pass
  CHECK_THROWS_AS(highpass_energy(const_video(24, 2, 0.0), filt),
                  DimensionError);
  CHECK_NOTHROW(highpass_energy(const_video(25, 2, 0.0), filt));
}

TEST_CASE("masks zero energy outside, all-ones mask changes nothing") {
  const TemporalFilter filt = make_temporal_filter(0.15, 25.0);
  Rng rng(82);
  std::vector<ImageTensor> frames;
  for (int f = 0; f < 30; ++f) {
    frames.push_back(tsrtest::random_image(3, 3, 1, rng));
  }
  std::vector<ImageTensor> ones(30, ImageTensor(3, 3, 1, 1.0));
  std::vector<ImageTensor> checker(30, ImageTensor(3, 3, 1, 0.0));
  for (ImageTensor& m : checker) {
    for (size_t i = 0; i < m.data.size(); i += 2) m.data[i] = 1.0;
  }

  const auto plain = highpass_energy(frames, filt);
  const auto full = highpass_energy(frames, filt, &ones);
  const auto masked = highpass_energy(frames, filt, &checker);
  for (size_t f = 0; f < plain.size(); ++f) {
    for (size_t i = 0; i < plain[f].data.size(); ++i) {
      CHECK(full[f].data[i] == plain[f].data[i]);
      const double want = (i % 2 == 0) ? plain[f].data[i] : 0.0;
      CHECK(masked[f].data[i] == want);
    }
  }

  std::vector<ImageTensor> bad_mask(30, ImageTensor(2, 2, 1, 1.0));
  CHECK_THROWS_AS(highpass_energy(frames, filt, &bad_mask), DimensionError);
}

TEST_CASE("smoothness reference points") {
  const TemporalFilter filt = make_temporal_filter(0.15, 25.0);
  Rng rng(83);
  std::vector<ImageTensor> ref;
  for (int f = 0; f < 30; ++f) {
    ref.push_back(tsrtest::random_image(4, 4, 1, rng));
  }

  SUBCASE("identical reconstruction scores 1") {
    CHECK(smoothness(ref, ref, filt) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("noisier reconstruction scores below 1") {
    std::vector<ImageTensor> noisy = ref;
    Rng nr(84);
    for (ImageTensor& fimg : noisy) {
      for (double& v : fimg.data) v += 0.5 * nr.normal();
    }
    CHECK(smoothness(ref, noisy, filt) < 1.0);
  }
  SUBCASE("static reconstruction of moving truth scores infinity") {
    const auto still = const_video(30, 4, 0.5);
    CHECK(std::isinf(smoothness(ref, still, filt)));
    CHECK(smoothness(ref, still, filt) > 0.0);
  }
  SUBCASE("two static sequences score 1 by convention") {
    const auto a = const_video(30, 4, 0.2);
    const auto b = const_video(30, 4, 0.9);
    CHECK(smoothness(a, b, filt) == 1.0);
  }
  SUBCASE("halving the flicker amplitude doubles the score") {
    // same phase, half amplitude: energies scale with amplitude^2
    std::vector<double> big(40), small(40);
    for (int f = 0; f < 40; ++f) {
      const double w = std::sin(2.0 * M_PI * double(f) / 5.0);
      big[size_t(f)] = 0.5 + 0.4 * w;
      small[size_t(f)] = 0.5 + 0.2 * w;
    }
    CHECK(smoothness(scalar_video(big), scalar_video(small), filt) ==
          doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("matches the exposed energy sums") {
    std::vector<ImageTensor> rec = ref;
    Rng nr(85);
    for (ImageTensor& fimg : rec) {
      for (double& v : fimg.data) v += 0.1 * nr.normal();
    }
    double sr = 0.0, sc = 0.0;
    smoothness_sums(ref, rec, filt, nullptr, sr, sc);
    CHECK(sr > 0.0);
    CHECK(sc > 0.0);
    CHECK(smoothness(ref, rec, filt) ==
          doctest::Approx(std::sqrt(sr / sc)).epsilon(1e-15));
  }
}

TEST_CASE("alternating flicker is heavily penalized") {
  const TemporalFilter filt = make_temporal_filter(0.15, 25.0);
  std::vector<double> flicker(40);
  for (int f = 0; f < 40; ++f) flicker[size_t(f)] = (f % 2 == 0) ? 1.0 : 0.0;
  const auto d = highpass_energy(scalar_video(flicker), filt);
  // the fastest representable flicker passes nearly untouched: per-frame
  // energy approaches (1/2)^2 once the window is interior
  CHECK(d[20].data[0] > 0.2);
}

TEST_CASE("psnr reference points") {
  SUBCASE("0.1 error at peak 1 is exactly 20 dB") {
    const auto ref = const_video(3, 4, 0.5);
    const auto rec = const_video(3, 4, 0.6);
    CHECK(psnr(ref, rec, 1.0) == doctest::Approx(20.0).epsilon(1e-9));
  }
  SUBCASE("raising the peak raises the score by 20 log10(peak)") {
    const auto ref = const_video(3, 4, 0.5);
    const auto rec = const_video(3, 4, 0.6);
    const double base = psnr(ref, rec, 1.0);
    CHECK(psnr(ref, rec, 4.0) ==
          doctest::Approx(base + 20.0 * std::log10(4.0)).epsilon(1e-12));
  }
  SUBCASE("identical inputs give infinity") {
    const auto ref = const_video(3, 4, 0.5);
    CHECK(std::isinf(psnr(ref, ref, 1.0)));
  }
  SUBCASE("pooled over frames, masked pixels only") {
    // frame 0: error 0.2 on the single masked pixel, frame 1: error 0
    std::vector<ImageTensor> ref = const_video(2, 2, 0.5);
    std::vector<ImageTensor> rec = const_video(2, 2, 0.5);
    rec[0].data[1] = 0.7;
    rec[0].data[2] = 9.0; // unmasked, must not count
    std::vector<ImageTensor> masks(2, ImageTensor(2, 2, 1, 0.0));
    masks[0].data[1] = 1.0;
    masks[1].data[3] = 1.0;
    const double mse = (0.2 * 0.2 + 0.0) / 2.0;
    CHECK(psnr(ref, rec, 1.0, &masks) ==
          doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-12));
  }
  SUBCASE("empty mask is an error") {
    const auto ref = const_video(2, 2, 0.5);
    std::vector<ImageTensor> masks(2, ImageTensor(2, 2, 1, 0.0));
    CHECK_THROWS_AS(psnr(ref, ref, 1.0, &masks), UsageError);
  }
}

TEST_CASE("masked_count counts nonzero entries") {
  std::vector<ImageTensor> masks(2, ImageTensor(2, 2, 1, 0.0));
  masks[0].data[0] = 1.0;
  masks[1].data[2] = 1.0;
  masks[1].data[3] = 1.0;
  CHECK(masked_count(masks) == 3);
}
