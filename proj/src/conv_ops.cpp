#include "tsr/conv_ops.hpp"

#include <cstring>
#include <vector>

namespace tsr {

namespace {

// Copies a [c][h][w] buffer into a zero-filled buffer with `pad` extra
// rows/columns on every side.
std::vector<double> pad_planes(const double* x, int c, int h, int w,
                               int pad) {
  const int hp = h + 2 * pad;
  const int wp = w + 2 * pad;
  std::vector<double> out(static_cast<size_t>(c) * hp * wp, 0.0);
  for (int ci = 0; ci < c; ++ci) {
    for (int i = 0; i < h; ++i) {
      std::memcpy(&out[(static_cast<size_t>(ci) * hp + i + pad) * wp + pad],
                  &x[(static_cast<size_t>(ci) * h + i) * w],
                  sizeof(double) * static_cast<size_t>(w));
    }
  }
  return out;
}

} // namespace

void conv_forward(const double* x, int in_c, int h, int w,
                  const double* weight, const double* bias, int out_c, int k,
                  int stride, double* out) {
  const int pad = (k - 1) / 2;
  const int hp = h + 2 * pad;
  const int wp = w + 2 * pad;
  const int oh = (h - 1) / stride + 1;
  const int ow = (w - 1) / stride + 1;
  const std::vector<double> xpad = pad_planes(x, in_c, h, w, pad);
  for (int co = 0; co < out_c; ++co) {
    double* op = out + static_cast<size_t>(co) * oh * ow;
    const double bv = bias ? bias[co] : 0.0;
    for (int i = 0; i < oh * ow; ++i) op[i] = bv;
    for (int ci = 0; ci < in_c; ++ci) {
      const double* xp = xpad.data() + static_cast<size_t>(ci) * hp * wp;
      const double* wblock =
          weight + (static_cast<size_t>(co) * in_c + ci) * k * k;
      for (int ki = 0; ki < k; ++ki) {
        for (int kj = 0; kj < k; ++kj) {
          const double wv = wblock[ki * k + kj];
          for (int oi = 0; oi < oh; ++oi) {
            const double* src =
                xp + static_cast<size_t>(oi * stride + ki) * wp + kj;
            double* dst = op + static_cast<size_t>(oi) * ow;
            if (stride == 1) {
              for (int oj = 0; oj < ow; ++oj) dst[oj] += wv * src[oj];
            } else {
              for (int oj = 0; oj < ow; ++oj) {
                dst[oj] += wv * src[static_cast<size_t>(oj) * stride];
              }
            }
          }
        }
      }
    }
  }
}

void conv_backward(const double* x, int in_c, int h, int w,
                   const double* weight, int out_c, int k, int stride,
                   const double* gout, double* gx, double* gweight,
                   double* gbias) {
  const int pad = (k - 1) / 2;
  const int hp = h + 2 * pad;
  const int wp = w + 2 * pad;
  const int oh = (h - 1) / stride + 1;
  const int ow = (w - 1) / stride + 1;
  std::vector<double> xpad;
  if (gweight) xpad = pad_planes(x, in_c, h, w, pad);
  std::vector<double> gxpad;
  if (gx) gxpad.assign(static_cast<size_t>(in_c) * hp * wp, 0.0);

  for (int co = 0; co < out_c; ++co) {
    const double* gp = gout + static_cast<size_t>(co) * oh * ow;
    if (gbias) {
      double s = 0.0;
      for (int i = 0; i < oh * ow; ++i) s += gp[i];
      gbias[co] += s;
    }
    for (int ci = 0; ci < in_c; ++ci) {
      const size_t widx = (static_cast<size_t>(co) * in_c + ci) * k * k;
      for (int ki = 0; ki < k; ++ki) {
        for (int kj = 0; kj < k; ++kj) {
          if (gweight) {
            const double* xp =
                xpad.data() + static_cast<size_t>(ci) * hp * wp;
            double s = 0.0;
            for (int oi = 0; oi < oh; ++oi) {
              const double* src =
                  xp + static_cast<size_t>(oi * stride + ki) * wp + kj;
              const double* grow = gp + static_cast<size_t>(oi) * ow;
              if (stride == 1) {
                for (int oj = 0; oj < ow; ++oj) s += grow[oj] * src[oj];
              } else {
                for (int oj = 0; oj < ow; ++oj) {
                  s += grow[oj] * src[static_cast<size_t>(oj) * stride];
                }
              }
            }
            gweight[widx + ki * k + kj] += s;
          }
          if (gx) {
            const double wv = weight[widx + ki * k + kj];
            double* gxp = gxpad.data() + static_cast<size_t>(ci) * hp * wp;
            for (int oi = 0; oi < oh; ++oi) {
              double* dst =
                  gxp + static_cast<size_t>(oi * stride + ki) * wp + kj;
              const double* grow = gp + static_cast<size_t>(oi) * ow;
              if (stride == 1) {
                for (int oj = 0; oj < ow; ++oj) dst[oj] += wv * grow[oj];
              } else {
                for (int oj = 0; oj < ow; ++oj) {
                  dst[static_cast<size_t>(oj) * stride] += wv * grow[oj];
                }
              }
            }
          }
        }
      }
    }
  }
  if (gx) {
    for (int ci = 0; ci < in_c; ++ci) {
      for (int i = 0; i < h; ++i) {
        const double* src =
            gxpad.data() + (static_cast<size_t>(ci) * hp + i + pad) * wp + pad;
        double* dst = gx + (static_cast<size_t>(ci) * h + i) * w;
        for (int j = 0; j < w; ++j) dst[j] += src[j];
      }
    }
  }
}

void convt_forward(const double* x, int in_c, int h, int w,
                   const double* weight, const double* bias, int out_c,
                   double* out) {
  const int oh = 2 * h;
  const int ow = 2 * w;
  // Scatter target indices are 2i - 1 + ki in [-1, oh + 1]; a one-left,
  // two-right padded plane absorbs them without bounds checks.
  const int hp = oh + 3;
  const int wp = ow + 3;
  std::vector<double> opad(static_cast<size_t>(hp) * wp);
  for (int co = 0; co < out_c; ++co) {
    std::fill(opad.begin(), opad.end(), 0.0);
    for (int ci = 0; ci < in_c; ++ci) {
      const double* xp = x + static_cast<size_t>(ci) * h * w;
      const double* wblock =
          weight + (static_cast<size_t>(ci) * out_c + co) * 16;
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
          const double v = xp[static_cast<size_t>(i) * w + j];
          for (int ki = 0; ki < 4; ++ki) {
            double* dst = opad.data() +
                          static_cast<size_t>(2 * i + ki) * wp + 2 * j;
            const double* wrow = wblock + ki * 4;
            dst[0] += v * wrow[0];
            dst[1] += v * wrow[1];
            dst[2] += v * wrow[2];
            dst[3] += v * wrow[3];
          }
        }
      }
    }
    const double bv = bias ? bias[co] : 0.0;
    for (int oi = 0; oi < oh; ++oi) {
      const double* src = opad.data() + static_cast<size_t>(oi + 1) * wp + 1;
      double* dst = out + (static_cast<size_t>(co) * oh + oi) * ow;
      for (int oj = 0; oj < ow; ++oj) dst[oj] = src[oj] + bv;
    }
  }
}

void convt_backward(const double* x, int in_c, int h, int w,
                    const double* weight, int out_c, const double* gout,
                    double* gx, double* gweight, double* gbias) {
  const int oh = 2 * h;
  const int ow = 2 * w;
  const int hp = oh + 3;
  const int wp = ow + 3;
  // gout padded with the same geometry as the forward scatter target.
  std::vector<double> gpad(static_cast<size_t>(out_c) * hp * wp, 0.0);
  for (int co = 0; co < out_c; ++co) {
    for (int oi = 0; oi < oh; ++oi) {
      std::memcpy(&gpad[(static_cast<size_t>(co) * hp + oi + 1) * wp + 1],
                  &gout[(static_cast<size_t>(co) * oh + oi) * ow],
                  sizeof(double) * static_cast<size_t>(ow));
    }
    if (gbias) {
      const double* gp = gout + static_cast<size_t>(co) * oh * ow;
      double s = 0.0;
      for (int i = 0; i < oh * ow; ++i) s += gp[i];
      gbias[co] += s;
    }
  }
  for (int ci = 0; ci < in_c; ++ci) {
    const double* xp = x + static_cast<size_t>(ci) * h * w;
    double* gxp = gx ? gx + static_cast<size_t>(ci) * h * w : nullptr;
    for (int co = 0; co < out_c; ++co) {
      const double* gp = gpad.data() + static_cast<size_t>(co) * hp * wp;
      const size_t widx = (static_cast<size_t>(ci) * out_c + co) * 16;
      for (int ki = 0; ki < 4; ++ki) {
        for (int kj = 0; kj < 4; ++kj) {
          const double wv = weight[widx + ki * 4 + kj];
          double ws = 0.0;
          for (int i = 0; i < h; ++i) {
            const double* grow =
                gp + static_cast<size_t>(2 * i + ki) * wp + kj;
            const double* xrow = xp + static_cast<size_t>(i) * w;
            double* gxrow = gxp ? gxp + static_cast<size_t>(i) * w : nullptr;
            if (gxrow) {
              for (int j = 0; j < w; ++j) {
                const double g = grow[2 * j];
                gxrow[j] += wv * g;
                ws += xrow[j] * g;
              }
            } else {
              for (int j = 0; j < w; ++j) ws += xrow[j] * grow[2 * j];
            }
          }
          if (gweight) gweight[widx + ki * 4 + kj] += ws;
        }
      }
    }
  }
}

void maxpool_forward(const double* x, int c, int h, int w, double* out,
                     int* argmax) {
  const int oh = h / 2;
  const int ow = w / 2;
  for (int ci = 0; ci < c; ++ci) {
    const double* xp = x + static_cast<size_t>(ci) * h * w;
    double* op = out + static_cast<size_t>(ci) * oh * ow;
    int* ap = argmax + static_cast<size_t>(ci) * oh * ow;
    for (int oi = 0; oi < oh; ++oi) {
      for (int oj = 0; oj < ow; ++oj) {
        int best = (2 * oi) * w + 2 * oj;
        double bv = xp[best];
        const int cand[3] = {(2 * oi) * w + 2 * oj + 1,
                             (2 * oi + 1) * w + 2 * oj,
                             (2 * oi + 1) * w + 2 * oj + 1};
        for (int idx : cand) {
          if (xp[idx] > bv) {
            bv = xp[idx];
            best = idx;
          }
        }
        op[static_cast<size_t>(oi) * ow + oj] = bv;
        ap[static_cast<size_t>(oi) * ow + oj] = best;
      }
    }
  }
}

void maxpool_backward(const double* gout, int c, int h, int w,
                      const int* argmax, double* gx) {
  const int oh = h / 2;
  const int ow = w / 2;
  for (int ci = 0; ci < c; ++ci) {
    const double* gp = gout + static_cast<size_t>(ci) * oh * ow;
    const int* ap = argmax + static_cast<size_t>(ci) * oh * ow;
    double* gxp = gx + static_cast<size_t>(ci) * h * w;
    for (int i = 0; i < oh * ow; ++i) gxp[ap[i]] += gp[i];
  }
}

void upsample2_forward(const double* x, int c, int h, int w, double* out) {
  const int ow = 2 * w;
  for (int ci = 0; ci < c; ++ci) {
    const double* xp = x + static_cast<size_t>(ci) * h * w;
    double* op = out + static_cast<size_t>(ci) * 4 * h * w;
    for (int i = 0; i < h; ++i) {
      double* row0 = op + static_cast<size_t>(2 * i) * ow;
      for (int j = 0; j < w; ++j) {
        const double v = xp[static_cast<size_t>(i) * w + j];
        row0[2 * j] = v;
        row0[2 * j + 1] = v;
      }
      std::memcpy(row0 + ow, row0, sizeof(double) * static_cast<size_t>(ow));
    }
  }
}

void upsample2_backward(const double* gout, int c, int h, int w, double* gx) {
  const int ow = 2 * w;
  for (int ci = 0; ci < c; ++ci) {
    const double* gp = gout + static_cast<size_t>(ci) * 4 * h * w;
    double* gxp = gx + static_cast<size_t>(ci) * h * w;
    for (int i = 0; i < h; ++i) {
      const double* row0 = gp + static_cast<size_t>(2 * i) * ow;
      const double* row1 = row0 + ow;
      for (int j = 0; j < w; ++j) {
        gxp[static_cast<size_t>(i) * w + j] +=
            row0[2 * j] + row0[2 * j + 1] + row1[2 * j] + row1[2 * j + 1];
      }
    }
  }
}

void relu_forward(const double* x, size_t n, double* out) {
  for (size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* gout, size_t n,
                   double* gx) {
  for (size_t i = 0; i < n; ++i) {
    if (x[i] > 0.0) gx[i] += gout[i];
  }
}

} // namespace tsr
