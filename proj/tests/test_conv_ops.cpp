#include <cmath>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "tsr/conv_ops.hpp"
#include "tsr/rng.hpp"

using namespace tsr;

namespace {

std::vector<double> random_vec(size_t n, Rng& rng, double lo = -1.0,
                               double hi = 1.0) {
  std::vector<double> v(n);
  for (double& e : v) e = rng.uniform(lo, hi);
  return v;
}

// Direct zero-padded convolution with explicit bounds checks; no padding
// buffer, so it exercises none of the production code paths.
std::vector<double> naive_conv(const std::vector<double>& x, int in_c, int h,
                               int w, const std::vector<double>& wt,
                               const std::vector<double>* bias, int out_c,
                               int k, int stride) {
  const int r = k / 2;
  const int oh = (h - 1) / stride + 1, ow = (w - 1) / stride + 1;
  std::vector<double> out(size_t(out_c) * oh * ow, 0.0);
  for (int co = 0; co < out_c; ++co) {
    for (int oi = 0; oi < oh; ++oi) {
      for (int oj = 0; oj < ow; ++oj) {
        double acc = bias ? (*bias)[co] : 0.0;
        for (int ci = 0; ci < in_c; ++ci) {
          for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
              const int i = oi * stride + ki - r;
              const int j = oj * stride + kj - r;
              if (i < 0 || i >= h || j < 0 || j >= w) continue;
              acc += x[(size_t(ci) * h + i) * w + j] *
                     wt[((size_t(co) * in_c + ci) * k + ki) * k + kj];
            }
          }
        }
        out[(size_t(co) * oh + oi) * ow + oj] = acc;
      }
    }
  }
  return out;
}

// Scatter form of the transposed convolution (kernel 4, stride 2, pad 1).
std::vector<double> naive_convt(const std::vector<double>& x, int in_c,
                                int h, int w, const std::vector<double>& wt,
                                const std::vector<double>* bias, int out_c) {
  const int oh = 2 * h, ow = 2 * w;
  std::vector<double> out(size_t(out_c) * oh * ow, 0.0);
  if (bias) {
    for (int co = 0; co < out_c; ++co) {
      for (int p = 0; p < oh * ow; ++p) out[size_t(co) * oh * ow + p] = (*bias)[co];
    }
  }
  for (int ci = 0; ci < in_c; ++ci) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const double v = x[(size_t(ci) * h + i) * w + j];
        for (int co = 0; co < out_c; ++co) {
          for (int ki = 0; ki < 4; ++ki) {
            for (int kj = 0; kj < 4; ++kj) {
              const int ti = 2 * i + ki - 1, tj = 2 * j + kj - 1;
              if (ti < 0 || ti >= oh || tj < 0 || tj >= ow) continue;
              out[(size_t(co) * oh + ti) * ow + tj] +=
                  v * wt[((size_t(ci) * out_c + co) * 4 + ki) * 4 + kj];
            }
          }
        }
      }
    }
  }
  return out;
}

double max_abs_diff(const std::vector<double>& a,
                    const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

} // namespace

TEST_CASE("conv matches hand values on a 3x3 all-ones kernel") {
  // x is a 3x3 ramp 1..9; all-ones kernel computes zero-padded local sums.
  const std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::vector<double> wt(9, 1.0);
  std::vector<double> out(9, -1.0);
  conv_forward(x.data(), 1, 3, 3, wt.data(), nullptr, 1, 3, 1, out.data());
  CHECK(out[4] == doctest::Approx(45.0).epsilon(1e-15)); // full sum
  CHECK(out[0] == doctest::Approx(1 + 2 + 4 + 5).epsilon(1e-15));
  CHECK(out[2] == doctest::Approx(2 + 3 + 5 + 6).epsilon(1e-15));
  CHECK(out[8] == doctest::Approx(5 + 6 + 8 + 9).epsilon(1e-15));
}

TEST_CASE("conv 1x1 kernel is channel mixing") {
  Rng rng(21);
  const int h = 4, w = 5;
  const std::vector<double> x = random_vec(2 * h * w, rng);
  const std::vector<double> wt = {2.0, -1.0, 0.5, 3.0}; // [out2][in2][1][1]
  const std::vector<double> bias = {0.25, -0.5};
  std::vector<double> out(2 * h * w, 0.0);
  conv_forward(x.data(), 2, h, w, wt.data(), bias.data(), 2, 1, 1,
               out.data());
  for (int p = 0; p < h * w; ++p) {
    CHECK(out[p] == doctest::Approx(2.0 * x[p] - 1.0 * x[h * w + p] + 0.25)
                        .epsilon(1e-14));
    CHECK(out[h * w + p] ==
          doctest::Approx(0.5 * x[p] + 3.0 * x[h * w + p] - 0.5)
              .epsilon(1e-14));
  }
}

TEST_CASE("conv matches the naive oracle across shapes and strides") {
  Rng rng(22);
  const struct {
    int in_c, h, w, out_c, k, stride;
  } cases[] = {
      {1, 6, 6, 2, 3, 1}, {3, 5, 7, 2, 3, 1}, {2, 8, 6, 3, 5, 1},
      {2, 6, 6, 2, 3, 2}, {3, 7, 9, 1, 3, 2}, {1, 8, 8, 4, 1, 2},
  };
  for (const auto& c : cases) {
    const std::vector<double> x = random_vec(size_t(c.in_c) * c.h * c.w, rng);
    const std::vector<double> wt =
        random_vec(size_t(c.out_c) * c.in_c * c.k * c.k, rng);
    const std::vector<double> bias = random_vec(c.out_c, rng);
    const int oh = (c.h - 1) / c.stride + 1, ow = (c.w - 1) / c.stride + 1;
    std::vector<double> out(size_t(c.out_c) * oh * ow, 0.0);
    conv_forward(x.data(), c.in_c, c.h, c.w, wt.data(), bias.data(), c.out_c,
                 c.k, c.stride, out.data());
    const std::vector<double> expect =
        naive_conv(x, c.in_c, c.h, c.w, wt, &bias, c.out_c, c.k, c.stride);
    CHECK(max_abs_diff(out, expect) < 1e-12);
  }
}

TEST_CASE("conv backward passes finite differences") {
  Rng rng(23);
  const int in_c = 2, h = 6, w = 5, out_c = 3, k = 3;
  for (int stride = 1; stride <= 2; ++stride) {
    const std::vector<double> x = random_vec(size_t(in_c) * h * w, rng);
    const std::vector<double> wt =
        random_vec(size_t(out_c) * in_c * k * k, rng);
    const std::vector<double> bias = random_vec(out_c, rng);
    const int oh = (h - 1) / stride + 1, ow = (w - 1) / stride + 1;
    const std::vector<double> gout = random_vec(size_t(out_c) * oh * ow, rng);

    // scalar objective: dot(conv(x, w, b), gout)
    auto objective = [&](const std::vector<double>& xx,
                         const std::vector<double>& ww,
                         const std::vector<double>& bb) {
      std::vector<double> out(size_t(out_c) * oh * ow, 0.0);
      conv_forward(xx.data(), in_c, h, w, ww.data(), bb.data(), out_c, k,
                   stride, out.data());
      double acc = 0.0;
      for (size_t i = 0; i < out.size(); ++i) acc += out[i] * gout[i];
      return acc;
    };

    std::vector<double> gx(x.size(), 0.0), gw(wt.size(), 0.0),
        gb(bias.size(), 0.0);
    conv_backward(x.data(), in_c, h, w, wt.data(), out_c, k, stride,
                  gout.data(), gx.data(), gw.data(), gb.data());

    const double step = 1e-6;
    for (size_t i = 0; i < x.size(); i += 7) {
      std::vector<double> xp = x, xm = x;
      xp[i] += step;
      xm[i] -= step;
      const double fd = (objective(xp, wt, bias) - objective(xm, wt, bias)) /
                        (2 * step);
      CHECK(tsrtest::grad_rel_err(fd, gx[i]) < 1e-6);
    }
    for (size_t i = 0; i < wt.size(); i += 5) {
      std::vector<double> wp = wt, wm = wt;
      wp[i] += step;
      wm[i] -= step;
      const double fd =
          (objective(x, wp, bias) - objective(x, wm, bias)) / (2 * step);
      CHECK(tsrtest::grad_rel_err(fd, gw[i]) < 1e-6);
    }
    for (size_t i = 0; i < bias.size(); ++i) {
      std::vector<double> bp = bias, bm = bias;
      bp[i] += step;
      bm[i] -= step;
      const double fd =
          (objective(x, wt, bp) - objective(x, wt, bm)) / (2 * step);
      CHECK(tsrtest::grad_rel_err(fd, gb[i]) < 1e-6);
    }
  }
}

TEST_CASE("transposed conv matches the scatter oracle") {
  Rng rng(24);
  const struct {
    int in_c, h, w, out_c;
  } cases[] = {{1, 3, 3, 2}, {2, 4, 5, 3}, {3, 6, 4, 1}};
  for (const auto& c : cases) {
    const std::vector<double> x = random_vec(size_t(c.in_c) * c.h * c.w, rng);
    const std::vector<double> wt =
        random_vec(size_t(c.in_c) * c.out_c * 16, rng);
    const std::vector<double> bias = random_vec(c.out_c, rng);
    std::vector<double> out(size_t(c.out_c) * 4 * c.h * c.w, 0.0);
    convt_forward(x.data(), c.in_c, c.h, c.w, wt.data(), bias.data(),
                  c.out_c, out.data());
    const std::vector<double> expect =
        naive_convt(x, c.in_c, c.h, c.w, wt, &bias, c.out_c);
    CHECK(max_abs_diff(out, expect) < 1e-12);
  }
}

TEST_CASE("transposed conv backward passes finite differences") {
  Rng rng(25);
  const int in_c = 2, h = 3, w = 4, out_c = 2;
  const std::vector<double> x = random_vec(size_t(in_c) * h * w, rng);
  const std::vector<double> wt = random_vec(size_t(in_c) * out_c * 16, rng);
  const std::vector<double> bias = random_vec(out_c, rng);
  const std::vector<double> gout =
      random_vec(size_t(out_c) * 4 * h * w, rng);

  auto objective = [&](const std::vector<double>& xx,
                       const std::vector<double>& ww,
                       const std::vector<double>& bb) {
    std::vector<double> out(size_t(out_c) * 4 * h * w, 0.0);
    convt_forward(xx.data(), in_c, h, w, ww.data(), bb.data(), out_c,
                  out.data());
    double acc = 0.0;
    for (size_t i = 0; i < out.size(); ++i) acc += out[i] * gout[i];
    return acc;
  };

  std::vector<double> gx(x.size(), 0.0), gw(wt.size(), 0.0),
      gb(bias.size(), 0.0);
  convt_backward(x.data(), in_c, h, w, wt.data(), out_c, gout.data(),
                 gx.data(), gw.data(), gb.data());

  const double step = 1e-6;
  for (size_t i = 0; i < x.size(); i += 3) {
    std::vector<double> xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const double fd =
        (objective(xp, wt, bias) - objective(xm, wt, bias)) / (2 * step);
    CHECK(tsrtest::grad_rel_err(fd, gx[i]) < 1e-6);
  }
  for (size_t i = 0; i < wt.size(); i += 7) {
    std::vector<double> wp = wt, wm = wt;
    wp[i] += step;
    wm[i] -= step;
    const double fd =
        (objective(x, wp, bias) - objective(x, wm, bias)) / (2 * step);
    CHECK(tsrtest::grad_rel_err(fd, gw[i]) < 1e-6);
  }
  for (size_t i = 0; i < bias.size(); ++i) {
    std::vector<double> bp = bias, bm = bias;
    bp[i] += step;
    bm[i] -= step;
    const double fd =
        (objective(x, wt, bp) - objective(x, wt, bm)) / (2 * step);
    CHECK(tsrtest::grad_rel_err(fd, gb[i]) < 1e-6);
  }
}

TEST_CASE("maxpool forward, ties, and backward scatter") {
  // one channel, 4x4
  const std::vector<double> x = {
      1, 2, 5, 5, //
      3, 4, 5, 5, // both 2x2 blocks have their max at known spots
      0, 0, 7, 8, //
      0, 0, 9, 6, //
  };
  std::vector<double> out(4, 0.0);
  std::vector<int> argmax(4, -1);
  maxpool_forward(x.data(), 1, 4, 4, out.data(), argmax.data());
  CHECK(out[0] == 4.0);
  CHECK(out[1] == 5.0);
  CHECK(out[2] == 0.0);
  CHECK(out[3] == 9.0);
  CHECK(argmax[0] == 5);  // (1,1)
  CHECK(argmax[1] == 2);  // tie: first in row-major scan, (0,2)
  CHECK(argmax[2] == 8);  // tie among zeros: (2,0)
  CHECK(argmax[3] == 14); // (3,2)

  const std::vector<double> gout = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> gx(16, 0.0);
  maxpool_backward(gout.data(), 1, 4, 4, argmax.data(), gx.data());
  double sum = 0.0;
  for (double v : gx) sum += v;
  CHECK(sum == 10.0);
  CHECK(gx[5] == 1.0);
  CHECK(gx[2] == 2.0);
  CHECK(gx[8] == 3.0);
  CHECK(gx[14] == 4.0);
  // accumulation: second call doubles
  maxpool_backward(gout.data(), 1, 4, 4, argmax.data(), gx.data());
  CHECK(gx[5] == 2.0);
}

TEST_CASE("upsample2 replicates and its backward sums blocks") {
  const std::vector<double> x = {1, 2, 3, 4}; // 2x2
  std::vector<double> out(16, 0.0);
  upsample2_forward(x.data(), 1, 2, 2, out.data());
  const std::vector<double> expect = {1, 1, 2, 2, 1, 1, 2, 2,
                                      3, 3, 4, 4, 3, 3, 4, 4};
  CHECK(out == expect);

  std::vector<double> gout(16);
  for (int i = 0; i < 16; ++i) gout[i] = i + 1;
  std::vector<double> gx(4, 0.0);
  upsample2_backward(gout.data(), 1, 2, 2, gx.data());
  CHECK(gx[0] == 1 + 2 + 5 + 6);
  CHECK(gx[1] == 3 + 4 + 7 + 8);
  CHECK(gx[2] == 9 + 10 + 13 + 14);
  CHECK(gx[3] == 11 + 12 + 15 + 16);
}

TEST_CASE("relu and its mask") {
  const std::vector<double> x = {-1.0, 0.0, 2.5, -0.2, 7.0};
  std::vector<double> out(5, -9.0);
  relu_forward(x.data(), 5, out.data());
  CHECK(out == std::vector<double>{0.0, 0.0, 2.5, 0.0, 7.0});
  const std::vector<double> gout = {1, 2, 3, 4, 5};
  std::vector<double> gx(5, 0.0);
  relu_backward(x.data(), gout.data(), 5, gx.data());
  CHECK(gx == std::vector<double>{0.0, 0.0, 3.0, 0.0, 5.0});
}
