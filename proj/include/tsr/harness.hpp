#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tsr/config.hpp"
#include "tsr/loss.hpp"
#include "tsr/metrics.hpp"
#include "tsr/network.hpp"
#include "tsr/procgen.hpp"

namespace tsr {

struct ScheduleConfig {
  int epochs = 0;
  int batch = 16;
  double lr = 1e-3;
};

/// One fine-tune condition of the sweep grid.
struct SweepCondition {
  RegKind kind = RegKind::None;
  double alpha = 0.0;
};

/// Which fine-tune runs a sweep performs. Conditions come either from
/// explicit kind:alpha pairs (sweep.conditions) or from the cartesian
/// product sweep.reg_kinds x alphas, where the alphas are an explicit list
/// (sweep.alphas) or grid indices (sweep.alpha_indices). The plain run
/// without regularization is controlled by include_none, never listed as a
/// condition; include_baseline adds the frozen pretrained network as a row
/// of its own.
struct SweepSpec {
  std::vector<SweepCondition> conditions;
  std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
  bool include_baseline = true;
  bool include_none = true;
};

/// Everything one experiment needs, parsed and validated from a Config.
struct HarnessConfig {
  SceneSpec scene;
  int train_count = 2000;
  int train_size = 32;
  int test_sequences = 8;
  int test_frames = 60;
  int test_size = 64;
  NetworkConfig net;
  ScheduleConfig pretrain{20, 16, 1e-3};
  ScheduleConfig finetune{10, 16, 1e-4};
  LossConfig loss;
  SweepSpec sweep;
  std::string out_dir = "out";
};

/// Parses dotted keys into a HarnessConfig. Unknown keys and out-of-range
/// values throw ConfigError; everything has a default, so an empty Config
/// yields the reference experiment.
HarnessConfig parse_harness_config(const Config& raw);

/// The twelve blend weights used by grid sweeps: alpha_i = l/(l+1) with
/// l = 2^(i-3), i = 1..12. Spans 0.2 to 0.998.
std::array<double, 12> alpha_grid();

struct TrainResult {
  Network net;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double step_ms = 0.0;
  long steps = 0;
  bool failed = false;
};

std::vector<FramePair> make_training_set(const HarnessConfig& cfg);
SequenceSet make_test_set(const HarnessConfig& cfg);

/// Reconstruction-only training from fresh weights. The overloads taking a
/// data set skip regeneration when the caller already holds one.
TrainResult pretrain(const HarnessConfig& cfg, uint64_t seed);
TrainResult pretrain(const HarnessConfig& cfg, uint64_t seed,
                     const std::vector<FramePair>& data);

/// Continues from trained weights under the given objective. Draws its rng
/// streams from (seed, stream-id) pairs disjoint from pretraining, so a
/// fine-tune never replays pretraining noise.
TrainResult finetune_from(const HarnessConfig& cfg, const Network& start,
                          const LossConfig& loss, uint64_t seed);
TrainResult finetune_from(const HarnessConfig& cfg, const Network& start,
                          const LossConfig& loss, uint64_t seed,
                          const std::vector<FramePair>& data);

/// Runs the predictor over every test frame and scores reconstruction
/// against the truth inside the saturated mask: pooled-MSE PSNR against
/// peak ymax and pooled-energy smoothness S.
MetricReport evaluate_predictor(const HarnessConfig& cfg, const PredictFn& f,
                                const SequenceSet& test);
MetricReport evaluate_network(const HarnessConfig& cfg, const Network& net,
                              const SequenceSet& test);

/// Writes predictions in the dataset dump format (x and mask copied from
/// the test set, y replaced by the prediction clamped to [0, ymax]).
void dump_predictions(const std::string& dir, const PredictFn& f,
                      const SequenceSet& test, double ymax);

/// Scores a dumped prediction directory against a dumped truth directory
/// (same manifest layout; masks are taken from the truth).
struct SequenceMetricsResult {
  double psnr_db = 0.0;
  double smoothness = 0.0;
  unsigned long long masked_pixels = 0;
};

SequenceMetricsResult sequence_metrics(const std::string& truth_dir,
                                       const std::string& pred_dir);

/// One CSV row of a sweep.
struct RunRecord {
  int kind_order = 0; // -1 baseline, else static_cast<int>(RegKind)
  std::string reg_kind;
  double alpha = 0.0;
  uint64_t seed = 0;
  double psnr_db = 0.0;
  double smoothness = 0.0;
  double pretrain_step_ms = 0.0;
  double finetune_step_ms = 0.0;
  std::string status = "ok";
  std::string checkpoint;
};

/// Full experiment: one shared dataset, one pretrain per seed, one
/// fine-tune per (condition, seed), metrics for every run. Checkpoints are
/// written under cfg.out_dir. Runs are independent, so workers > 1 farms
/// them over threads without changing any result. A run whose training
/// diverges (non-finite loss) is reported with status "failed" and NaN
/// metrics rather than aborting the sweep.
std::vector<RunRecord> run_sweep(const HarnessConfig& cfg, int workers);

/// Deterministic CSV: header plus one sorted row per run (baseline rows
/// first, then by kind, alpha, seed). Timing columns are the only
/// wall-clock-dependent output.
void write_csv(const std::string& path, const std::vector<RunRecord>& rows);
std::string csv_text(const std::vector<RunRecord>& rows);

/// Dumps training patches (as one-frame sequences) to dir/train and test
/// sequences to dir/test.
void gen_data(const HarnessConfig& cfg, const std::string& dir);

} // namespace tsr
