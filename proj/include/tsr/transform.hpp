#pragma once

#include "tsr/rng.hpp"
#include "tsr/tensor.hpp"

namespace tsr {

/// One sampled geometric perturbation: translation in pixels, rotation and
/// shear in degrees, zoom as a dimensionless factor.
struct TransformParams {
  double tx = 0.0;
  double ty = 0.0;
  double rot_deg = 0.0;
  double zoom = 1.0;
  double shear_x_deg = 0.0;
  double shear_y_deg = 0.0;
};

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Sampling ranges for the perturbation parameters. Defaults are the
/// standard ones used throughout: +-2 px translation, +-1 degree rotation
/// and shear, zoom 0.97..1.03.
struct TransformRanges {
  ParamRange translation{-2.0, 2.0};
  ParamRange rotation{-1.0, 1.0};
  ParamRange zoom{0.97, 1.03};
  ParamRange shear{-1.0, 1.0};
};

/// 2x3 index transform: output pixel (i, j) samples the source image at
///   i' = m[0]*i + m[1]*j + m[2]
///   j' = m[3]*i + m[4]*j + m[5]
/// The center shift for (sx, sy) is folded into the constant column.
struct AffineTransform {
  double m[6] = {1, 0, 0, 0, 1, 0};
  int sx = 0;
  int sy = 0;
};

/// Per-image additive Gaussian noise; one sigma drawn uniformly from
/// [sigma_min, sigma_max] per image, then i.i.d. across pixels/channels.
struct NoiseSpec {
  double sigma_min = 0.01;
  double sigma_max = 0.04;
};

/// Draws each parameter independently from U(lo, hi) of its range.
/// tx and ty share the translation range, the two shear angles share the
/// shear range. Throws ConfigError on an inverted range.
TransformParams sample_transform(const TransformRanges& ranges, Rng& rng);

/// Builds the closed-form 2x3 matrix for the parameters, with the image
/// center translated to the origin and back. Angles are converted from
/// degrees to radians before any trigonometry. Throws ConfigError when a
/// shear angle reaches +-90 degrees (singular).
AffineTransform build_matrix(const TransformParams& p, int sx, int sy);

AffineTransform identity_transform(int sx, int sy);

bool is_identity(const AffineTransform& t);

/// Analytic inverse: if t maps p to A*p + d, the result maps q to
/// inv(A)*(q - d). Throws ConfigError when the linear part is singular.
AffineTransform invert(const AffineTransform& t);

/// Bilinear warp. Output (i, j) gathers from source (i', j'); source
/// coordinates outside the image clamp to the nearest edge pixel. With an
/// identity transform the output is bit-identical to the input.
ImageTensor warp(const ImageTensor& x, const AffineTransform& t);

/// Adjoint of warp: scatters gout back through the transpose of the
/// bilinear gather weights, so that
///   dot(warp(x, t), g) == dot(x, warp_gradient(g, t)).
ImageTensor warp_gradient(const ImageTensor& gout, const AffineTransform& t);

/// x + sigma * N(0, I), sigma ~ U(spec.sigma_min, spec.sigma_max).
ImageTensor perturb_noise(const ImageTensor& x, const NoiseSpec& spec,
                          Rng& rng);

} // namespace tsr
