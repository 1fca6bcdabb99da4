#include "tsr/loss.hpp"

#include "tsr/error.hpp"

namespace tsr {

namespace {

void require_same_shape(const ImageTensor& a, const ImageTensor& b,
                        const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch");
  }
}

ImageTensor perturbed_input(const ImageTensor& x, const Perturbation& p) {
  if (p.mode == Perturbation::Mode::Noise) return p.noisy;
  return warp(x, p.t);
}

Perturbation::Mode expected_mode(RegKind kind) {
  switch (kind) {
    case RegKind::None:
      return Perturbation::Mode::None;
    case RegKind::StabilityNoise:
      return Perturbation::Mode::Noise;
    default:
      return Perturbation::Mode::Transform;
  }
}

// Regularizer value from the two branch outputs, no gradient bookkeeping.
double regularizer_value(const ImageTensor& a, const ImageTensor& b,
                         const ImageTensor& y, const Perturbation& p,
                         RegKind kind) {
  switch (kind) {
    case RegKind::StabilityNoise:
    case RegKind::StabilityTransform:
      return mean_square_diff(a, b);
    case RegKind::TransformInvariance:
      return mean_square_diff(b, warp(a, p.t));
    case RegKind::SparseJacobian: {
      const ImageTensor ty = warp(y, p.t);
      double acc = 0.0;
      for (size_t i = 0; i < b.data.size(); ++i) {
        const double r = (b.data[i] - ty.data[i]) - (a.data[i] - y.data[i]);
        acc += r * r;
      }
      return acc / static_cast<double>(b.data.size());
    }
    case RegKind::Augmentation:
      return mean_square_diff(b, warp(y, p.t));
    case RegKind::None:
      break;
  }
  return 0.0;
}

} // namespace

const char* reg_kind_name(RegKind k) {
  switch (k) {
    case RegKind::None:
      return "none";
    case RegKind::StabilityNoise:
      return "stability_noise";
    case RegKind::StabilityTransform:
      return "stability_transform";
    case RegKind::TransformInvariance:
      return "transform_invariance";
    case RegKind::SparseJacobian:
      return "sparse_jacobian";
    case RegKind::Augmentation:
      return "augmentation";
  }
  return "none";
}

RegKind reg_kind_from_name(const std::string& name) {
  for (RegKind k :
       {RegKind::None, RegKind::StabilityNoise, RegKind::StabilityTransform,
        RegKind::TransformInvariance, RegKind::SparseJacobian,
        RegKind::Augmentation}) {
    if (name == reg_kind_name(k)) return k;
  }
  throw ConfigError("unknown regularization kind: " + name);
}

void validate(const LossConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0)) {
    throw ConfigError("loss config: alpha must lie in [0, 1)");
  }
}

PredictFn predictor(const Network& net) {
  return [&net](const ImageTensor& u) { return net.forward(u); };
}

double loss_rec(const ImageTensor& fx, const ImageTensor& y) {
  require_same_shape(fx, y, "loss_rec");
  return mean_square_diff(fx, y);
}

double loss_stability(const PredictFn& f, const ImageTensor& x,
                      const ImageTensor& perturbed) {
  require_same_shape(x, perturbed, "loss_stability");
  return mean_square_diff(f(x), f(perturbed));
}

double loss_transform_invariance(const PredictFn& f, const ImageTensor& x,
                                 const AffineTransform& t) {
  const ImageTensor fTx = f(warp(x, t));
  const ImageTensor Tfx = warp(f(x), t);
  return mean_square_diff(fTx, Tfx);
}

double loss_sparse_jacobian(const PredictFn& f, const ImageTensor& x,
                            const ImageTensor& y, const AffineTransform& t,
                            const ImageTensor& ty) {
  require_same_shape(x, y, "loss_sparse_jacobian");
  const ImageTensor fx = f(x);
  const ImageTensor fTx = f(warp(x, t));
  require_same_shape(fx, y, "loss_sparse_jacobian");
  require_same_shape(fTx, ty, "loss_sparse_jacobian");
  double acc = 0.0;
  for (size_t i = 0; i < fx.data.size(); ++i) {
    const double r = (fTx.data[i] - ty.data[i]) - (fx.data[i] - y.data[i]);
    acc += r * r;
  }
  return acc / static_cast<double>(fx.data.size());
}

double loss_augmentation(const PredictFn& f, const ImageTensor& x,
                         const AffineTransform& t, const ImageTensor& ty) {
  const ImageTensor fTx = f(warp(x, t));
  return mean_square_diff(fTx, ty);
}

Perturbation sample_perturbation(RegKind kind, const LossConfig& cfg,
                                 const ImageTensor& x, Rng& rng) {
  Perturbation p;
  switch (expected_mode(kind)) {
    case Perturbation::Mode::None:
      p.mode = Perturbation::Mode::None;
      break;
    case Perturbation::Mode::Noise:
      p.mode = Perturbation::Mode::Noise;
      p.noisy = perturb_noise(x, cfg.noise_spec, rng);
      break;
    case Perturbation::Mode::Transform:
      p.mode = Perturbation::Mode::Transform;
      p.t = build_matrix(sample_transform(cfg.transform_ranges, rng),
                         x.height, x.width);
      break;
  }
  return p;
}

void evaluate_sample(const Network& net, const ImageTensor& x,
                     const ImageTensor& y, const LossConfig& cfg,
                     const Perturbation& p, double& rec, double& reg,
                     std::vector<double>& grad) {
  validate(cfg);
  if (p.mode != expected_mode(cfg.reg_kind)) {
    throw ConfigError("evaluate_sample: perturbation does not match regKind");
  }

  GradientTape tape1;
  const ImageTensor a = net.forward(x, &tape1);
  require_same_shape(a, y, "evaluate_sample");
  rec = mean_square_diff(a, y);

  const size_t n = a.data.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  ImageTensor g_rec(a.height, a.width, a.channels);
  for (size_t i = 0; i < n; ++i) {
    g_rec.data[i] = 2.0 * (a.data[i] - y.data[i]) * inv_n;
  }

  if (cfg.reg_kind == RegKind::None) {
    reg = 0.0;
    net.backward(tape1, g_rec, grad);
    return;
  }

  const double alpha = cfg.alpha;
  const ImageTensor xp = perturbed_input(x, p);
  if (alpha == 0.0) {
    // The branch still runs so the loss report stays complete, but the
    // gradient path is identical to regKind none.
    const ImageTensor b = net.forward(xp);
    reg = regularizer_value(a, b, y, p, cfg.reg_kind);
    net.backward(tape1, g_rec, grad);
    return;
  }

  GradientTape tape2;
  const ImageTensor b = net.forward(xp, &tape2);

  ImageTensor g_a(a.height, a.width, a.channels);
  ImageTensor g_b(a.height, a.width, a.channels);
  switch (cfg.reg_kind) {
    case RegKind::StabilityNoise:
    case RegKind::StabilityTransform: {
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double r = a.data[i] - b.data[i];
        acc += r * r;
        g_a.data[i] = 2.0 * r * inv_n;
        g_b.data[i] = -2.0 * r * inv_n;
      }
      reg = acc * inv_n;
      break;
    }
    case RegKind::TransformInvariance: {
      const ImageTensor c = warp(a, p.t);
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double r = b.data[i] - c.data[i];
        acc += r * r;
        g_b.data[i] = 2.0 * r * inv_n;
      }
      reg = acc * inv_n;
      g_a = warp_gradient(g_b, p.t);
      for (double& v : g_a.data) v = -v;
      break;
    }
    case RegKind::SparseJacobian: {
      const ImageTensor ty = warp(y, p.t);
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double r =
            (b.data[i] - ty.data[i]) - (a.data[i] - y.data[i]);
        acc += r * r;
        g_b.data[i] = 2.0 * r * inv_n;
        g_a.data[i] = -2.0 * r * inv_n;
      }
      reg = acc * inv_n;
      break;
    }
    case RegKind::Augmentation: {
      const ImageTensor ty = warp(y, p.t);
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double r = b.data[i] - ty.data[i];
        acc += r * r;
        g_b.data[i] = 2.0 * r * inv_n;
        g_a.data[i] = 0.0;
      }
      reg = acc * inv_n;
      break;
    }
    case RegKind::None:
      break;
  }

  ImageTensor g_total(a.height, a.width, a.channels);
  for (size_t i = 0; i < n; ++i) {
    g_total.data[i] = (1.0 - alpha) * g_rec.data[i] + alpha * g_a.data[i];
  }
  net.backward(tape1, g_total, grad);
  for (size_t i = 0; i < n; ++i) g_b.data[i] *= alpha;
  net.backward(tape2, g_b, grad);
}

LossBreakdown evaluate_total(const Network& net,
                             const std::vector<const ImageTensor*>& xs,
                             const std::vector<const ImageTensor*>& ys,
                             const LossConfig& cfg, Rng& rng) {
  validate(cfg);
  if (xs.size() != ys.size() || xs.empty()) {
    throw UsageError("evaluate_total: batch must be non-empty and paired");
  }
  LossBreakdown out;
  out.param_gradients.assign(net.param_count(), 0.0);
  for (size_t i = 0; i < xs.size(); ++i) {
    const Perturbation p =
        sample_perturbation(cfg.reg_kind, cfg, *xs[i], rng);
    double rec = 0.0, reg = 0.0;
    evaluate_sample(net, *xs[i], *ys[i], cfg, p, rec, reg,
                    out.param_gradients);
    out.rec += rec;
    out.reg += reg;
  }
  const double inv_b = 1.0 / static_cast<double>(xs.size());
  out.rec *= inv_b;
  out.reg *= inv_b;
  for (double& g : out.param_gradients) g *= inv_b;
  const double eff_alpha = cfg.reg_kind == RegKind::None ? 0.0 : cfg.alpha;
  out.total = (1.0 - eff_alpha) * out.rec + eff_alpha * out.reg;
  return out;
}

} // namespace tsr
