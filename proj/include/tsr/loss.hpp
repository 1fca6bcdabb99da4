#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tsr/network.hpp"
#include "tsr/transform.hpp"

namespace tsr {

enum class RegKind {
  None,
  StabilityNoise,
  StabilityTransform,
  TransformInvariance,
  SparseJacobian,
  Augmentation,
};

/// Canonical token for config files and CSV output (snake_case).
const char* reg_kind_name(RegKind k);

/// Parses a canonical token; throws ConfigError on anything else.
RegKind reg_kind_from_name(const std::string& name);

/// The training objective: total = (1 - alpha) * rec + alpha * reg.
/// regKind none forces total = rec regardless of alpha.
struct LossConfig {
  RegKind reg_kind = RegKind::None;
  double alpha = 0.0;
  TransformRanges transform_ranges;
  NoiseSpec noise_spec;
};

/// Throws ConfigError unless alpha is in [0, 1).
void validate(const LossConfig& cfg);

/// Predictor abstraction so tests can inject exact functions (identity,
/// constant) where a trained network would otherwise sit.
using PredictFn = std::function<ImageTensor(const ImageTensor&)>;

PredictFn predictor(const Network& net);

/// All loss values use the shared mean-square convention.
double loss_rec(const ImageTensor& fx, const ImageTensor& y);

/// f(x) vs f(perturbed); perturbed comes from additive noise or a warp.
double loss_stability(const PredictFn& f, const ImageTensor& x,
                      const ImageTensor& perturbed);

/// f(T(x)) vs T(f(x)).
double loss_transform_invariance(const PredictFn& f, const ImageTensor& x,
                                 const AffineTransform& t);

/// (f(T(x)) - T(y)) vs (f(x) - y); ty must be warp(y, t).
double loss_sparse_jacobian(const PredictFn& f, const ImageTensor& x,
                            const ImageTensor& y, const AffineTransform& t,
                            const ImageTensor& ty);

/// f(T(x)) vs T(y): plain supervision on the transformed pair.
double loss_augmentation(const PredictFn& f, const ImageTensor& x,
                         const AffineTransform& t, const ImageTensor& ty);

struct LossBreakdown {
  double total = 0.0;
  double rec = 0.0;
  double reg = 0.0;
  std::vector<double> param_gradients;
};

/// One sampled perturbation, made explicit so finite-difference oracles can
/// pin it while the training path draws a fresh one per image per step.
struct Perturbation {
  enum class Mode { None, Noise, Transform };
  Mode mode = Mode::None;
  ImageTensor noisy;
  AffineTransform t;
};

/// Draws the perturbation the given regularization kind consumes. Draw
/// counts per image: none 0, noise 1 + pixels, transform 6.
Perturbation sample_perturbation(RegKind kind, const LossConfig& cfg,
                                 const ImageTensor& x, Rng& rng);

/// Evaluates one (x, y) sample under the blend with a fixed perturbation.
/// Accumulates the unnormalized gradient of this sample's total into grad
/// (callers average over the batch). rec and reg receive the two loss
/// terms. Throws ConfigError when the perturbation mode does not match the
/// configured kind.
void evaluate_sample(const Network& net, const ImageTensor& x,
                     const ImageTensor& y, const LossConfig& cfg,
                     const Perturbation& p, double& rec, double& reg,
                     std::vector<double>& grad);

/// Batch-mean losses and exact gradients; one fresh perturbation per image
/// drawn from rng in batch order. At alpha = 0 the perturbed branch still
/// runs (and rng advances identically) but contributes nothing to the
/// gradient, so the parameter trajectory matches regKind none bit for bit.
LossBreakdown evaluate_total(const Network& net,
                             const std::vector<const ImageTensor*>& xs,
                             const std::vector<const ImageTensor*>& ys,
                             const LossConfig& cfg, Rng& rng);

} // namespace tsr
