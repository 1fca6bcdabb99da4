#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tsr/rng.hpp"
#include "tsr/tensor.hpp"

namespace tsr {

enum class DownsampleMode { MaxPool, StridedConv };
enum class UpsampleMode { NearestConv, TransposedConv };

/// Convolutional autoencoder configuration. Hidden activations are
/// rectified; the output layer is linear so targets above 1 stay reachable.
struct NetworkConfig {
  int in_channels = 1;
  int out_channels = 1;
  std::vector<int> encoder_widths = {8, 16};
  int kernel = 3;
  bool skip_connections = true;
  DownsampleMode down = DownsampleMode::MaxPool;
  UpsampleMode up = UpsampleMode::NearestConv;
};

enum class StepKind {
  Conv,
  MaxPool,
  Upsample,
  ConvTranspose,
  Relu,
  SaveSkip,
  AddSkip,
};

/// One primitive in the flattened execution plan. Channel counts are fixed
/// by the plan; spatial sizes follow the input at run time.
struct Step {
  StepKind kind = StepKind::Conv;
  int in_c = 0;
  int out_c = 0;
  int stride = 1;
  int kernel = 0;
  size_t w_off = 0;
  size_t b_off = 0;
  int skip_slot = -1;
};

/// Saved forward state for one step: the step input where the backward
/// rule needs it, pool argmax indices, and the dims on both sides.
struct TapeEntry {
  std::vector<double> x;
  std::vector<int> argmax;
  int c = 0, h = 0, w = 0;
  int oc = 0, oh = 0, ow = 0;
};

struct GradientTape {
  std::vector<TapeEntry> entries;
  bool valid = false;
};

class Network {
public:
  explicit Network(NetworkConfig cfg);

  const NetworkConfig& config() const { return cfg_; }
  const std::vector<Step>& steps() const { return steps_; }
  size_t param_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Fan-in-scaled uniform weights (limit sqrt(6 / fan_in)), zero biases.
  void init_params(Rng& rng);

  /// Input must have in_channels channels and spatial sizes divisible by
  /// 2^stages. Output has out_channels channels at the input's spatial
  /// size. When a tape is given, intermediates needed by backward are
  /// recorded into it.
  ImageTensor forward(const ImageTensor& x, GradientTape* tape = nullptr) const;

  /// Accumulates d(loss)/d(params) into param_grad given d(loss)/d(output).
  /// param_grad must already be sized to param_count().
  void backward(const GradientTape& tape, const ImageTensor& loss_grad,
                std::vector<double>& param_grad) const;

  void save(const std::string& path) const;
  static Network load(const std::string& path);

private:
  NetworkConfig cfg_;
  std::vector<Step> steps_;
  std::vector<double> params_;
  int skip_slots_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction; deterministic given the gradient sequence.
class AdamOptimizer {
public:
  AdamOptimizer(AdamConfig cfg, size_t n_params);
  void step(std::vector<double>& params, const std::vector<double>& grad);
  long steps_taken() const { return t_; }

private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

} // namespace tsr
