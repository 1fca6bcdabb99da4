#include "tsr/transform.hpp"

#include <cmath>
#include <cstring>

#include "tsr/error.hpp"

namespace tsr {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

double draw(const ParamRange& r, Rng& rng, const char* name) {
  if (!(r.lo <= r.hi)) {
    throw ConfigError(std::string(name) + ": inverted range");
  }
  return rng.uniform(r.lo, r.hi);
}

int clamp_index(int v, int hi) {
  if (v < 0) return 0;
  if (v > hi) return hi;
  return v;
}

} // namespace

TransformParams sample_transform(const TransformRanges& ranges, Rng& rng) {
  TransformParams p;
  // Draw order is part of the deterministic contract.
  p.tx = draw(ranges.translation, rng, "translation");
  p.ty = draw(ranges.translation, rng, "translation");
  p.rot_deg = draw(ranges.rotation, rng, "rotation");
  p.zoom = draw(ranges.zoom, rng, "zoom");
  p.shear_x_deg = draw(ranges.shear, rng, "shear");
  p.shear_y_deg = draw(ranges.shear, rng, "shear");
  return p;
}

AffineTransform build_matrix(const TransformParams& p, int sx, int sy) {
  if (sx <= 0 || sy <= 0) {
    throw DimensionError("build_matrix: image extents must be positive");
  }
  const double r = p.rot_deg * kDegToRad;
  const double hx = p.shear_x_deg * kDegToRad;
  const double hy = p.shear_y_deg * kDegToRad;
  const double z = p.zoom;
  const double ch_x = std::cos(hx);
  const double ch_y = std::cos(hy);
  if (std::fabs(ch_x) < 1e-9 || std::fabs(ch_y) < 1e-9) {
    throw ConfigError("build_matrix: shear angle too close to 90 degrees");
  }
  // Rotation folds into each shear axis with opposite sign.
  const double a = hx - r;
  const double b = hy + r;
  const double ca = std::cos(a);
  const double sa = std::sin(a);
  const double cb = std::cos(b);
  const double sb = std::sin(b);

  AffineTransform t;
  t.sx = sx;
  t.sy = sy;
  t.m[0] = z * ca / ch_x;
  t.m[1] = z * sa / ch_x;
  t.m[2] = (sx * ch_x - sx * z * ca + 2.0 * p.tx * z * ca - sy * z * sa +
            2.0 * p.ty * z * sa) /
           (2.0 * ch_x);
  t.m[3] = z * sb / ch_y;
  t.m[4] = z * cb / ch_y;
  t.m[5] = (sy * ch_y - sy * z * cb + 2.0 * p.ty * z * cb - sx * z * sb +
            2.0 * p.tx * z * sb) /
           (2.0 * ch_y);
  return t;
}

AffineTransform identity_transform(int sx, int sy) {
  AffineTransform t;
  t.sx = sx;
  t.sy = sy;
  return t;
}

bool is_identity(const AffineTransform& t) {
  return t.m[0] == 1.0 && t.m[1] == 0.0 && t.m[2] == 0.0 && t.m[3] == 0.0 &&
         t.m[4] == 1.0 && t.m[5] == 0.0;
}

AffineTransform invert(const AffineTransform& t) {
  const double det = t.m[0] * t.m[4] - t.m[1] * t.m[3];
  if (std::fabs(det) < 1e-12) {
    throw ConfigError("invert: singular transform");
  }
  AffineTransform inv;
  inv.sx = t.sx;
  inv.sy = t.sy;
  inv.m[0] = t.m[4] / det;
  inv.m[1] = -t.m[1] / det;
  inv.m[3] = -t.m[3] / det;
  inv.m[4] = t.m[0] / det;
  inv.m[2] = -(inv.m[0] * t.m[2] + inv.m[1] * t.m[5]);
  inv.m[5] = -(inv.m[3] * t.m[2] + inv.m[4] * t.m[5]);
  return inv;
}

ImageTensor warp(const ImageTensor& x, const AffineTransform& t) {
  validate(x, "warp");
  if (t.sx != x.height || t.sy != x.width) {
    throw DimensionError("warp: transform extents do not match image");
  }
  const int h = x.height;
  const int w = x.width;
  const int c = x.channels;
  ImageTensor out(h, w, c);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double si = t.m[0] * i + t.m[1] * j + t.m[2];
      const double sj = t.m[3] * i + t.m[4] * j + t.m[5];
      const double fi0 = std::floor(si);
      const double fj0 = std::floor(sj);
      const double di = si - fi0;
      const double dj = sj - fj0;
      // Clamp the four corner indices to the image; the weights are kept
      // as-is so edge samples repeat the border pixel.
      const int i0 = clamp_index(static_cast<int>(fi0), h - 1);
      const int i1 = clamp_index(static_cast<int>(fi0) + 1, h - 1);
      const int j0 = clamp_index(static_cast<int>(fj0), w - 1);
      const int j1 = clamp_index(static_cast<int>(fj0) + 1, w - 1);
      const double w00 = (1.0 - di) * (1.0 - dj);
      const double w01 = (1.0 - di) * dj;
      const double w10 = di * (1.0 - dj);
      const double w11 = di * dj;
      for (int k = 0; k < c; ++k) {
        out.at(i, j, k) = w00 * x.at(i0, j0, k) + w01 * x.at(i0, j1, k) +
                          w10 * x.at(i1, j0, k) + w11 * x.at(i1, j1, k);
      }
    }
  }
  return out;
}

ImageTensor warp_gradient(const ImageTensor& gout, const AffineTransform& t) {
  validate(gout, "warp_gradient");
  if (t.sx != gout.height || t.sy != gout.width) {
    throw DimensionError("warp_gradient: transform extents do not match image");
  }
  const int h = gout.height;
  const int w = gout.width;
  const int c = gout.channels;
  ImageTensor grad(h, w, c);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double si = t.m[0] * i + t.m[1] * j + t.m[2];
      const double sj = t.m[3] * i + t.m[4] * j + t.m[5];
      const double fi0 = std::floor(si);
      const double fj0 = std::floor(sj);
      const double di = si - fi0;
      const double dj = sj - fj0;
      const int i0 = clamp_index(static_cast<int>(fi0), h - 1);
      const int i1 = clamp_index(static_cast<int>(fi0) + 1, h - 1);
      const int j0 = clamp_index(static_cast<int>(fj0), w - 1);
      const int j1 = clamp_index(static_cast<int>(fj0) + 1, w - 1);
      const double w00 = (1.0 - di) * (1.0 - dj);
      const double w01 = (1.0 - di) * dj;
      const double w10 = di * (1.0 - dj);
      const double w11 = di * dj;
      for (int k = 0; k < c; ++k) {
        const double g = gout.at(i, j, k);
        grad.at(i0, j0, k) += w00 * g;
        grad.at(i0, j1, k) += w01 * g;
        grad.at(i1, j0, k) += w10 * g;
        grad.at(i1, j1, k) += w11 * g;
      }
    }
  }
  return grad;
}

ImageTensor perturb_noise(const ImageTensor& x, const NoiseSpec& spec,
                          Rng& rng) {
  validate(x, "perturb_noise");
  if (spec.sigma_min < 0.0 || spec.sigma_min > spec.sigma_max) {
    throw ConfigError("perturb_noise: invalid sigma range");
  }
  const double sigma = rng.uniform(spec.sigma_min, spec.sigma_max);
  ImageTensor out = x;
  for (double& v : out.data) {
    v += sigma * rng.normal();
  }
  return out;
}

} // namespace tsr
