#include "tsr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "tsr/error.hpp"

namespace tsr {

namespace {

// Stream ids for Rng::derive. Pretraining and fine-tuning use disjoint
// streams so a fine-tune never replays pretraining draws; procgen uses its
// own ids on the data seed, which is independent of the run seed anyway.
constexpr uint64_t kInitStream = 11;
constexpr uint64_t kPretrainOrderStream = 12;
constexpr uint64_t kPretrainPerturbStream = 13;
constexpr uint64_t kFinetuneOrderStream = 14;
constexpr uint64_t kFinetunePerturbStream = 15;

// Temporal smoothing window used by the smoothness score, in seconds.
constexpr double kSmoothSigmaSeconds = 0.15;

const double kNan = std::numeric_limits<double>::quiet_NaN();

std::string trim_copy(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double_token(const std::string& s, const char* what) {
  errno = 0;
  const char* c = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(c, &end);
  if (end == c || *end != '\0' || errno == ERANGE) {
    throw ConfigError(std::string(what) + ": bad number '" + s + "'");
  }
  return v;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// All keys parse_harness_config understands; anything else in the file is
// a typo and gets rejected rather than silently ignored.
const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "data.seed",
      "data.ymax",
      "data.train_count",
      "data.train_size",
      "data.test_sequences",
      "data.test_frames",
      "data.test_size",
      "data.frame_rate",
      "data.feature_count_min",
      "data.feature_count_max",
      "data.radius_frac_min",
      "data.radius_frac_max",
      "data.peak_min",
      "data.peak_max",
      "data.beam_count_min",
      "data.beam_count_max",
      "data.beam_width_frac_min",
      "data.beam_width_frac_max",
      "data.max_speed",
      "net.in_channels",
      "net.out_channels",
      "net.widths",
      "net.kernel",
      "net.skips",
      "net.down",
      "net.up",
      "pretrain.epochs",
      "pretrain.batch",
      "pretrain.lr",
      "finetune.epochs",
      "finetune.batch",
      "finetune.lr",
      "loss.reg_kind",
      "loss.alpha",
      "loss.translation",
      "loss.rotation",
      "loss.zoom_min",
      "loss.zoom_max",
      "loss.shear",
      "loss.sigma_min",
      "loss.sigma_max",
      "sweep.conditions",
      "sweep.reg_kinds",
      "sweep.alphas",
      "sweep.alpha_indices",
      "sweep.seeds",
      "sweep.include_baseline",
      "sweep.include_none",
      "run.out_dir",
  };
  return keys;
}

void check_schedule(const ScheduleConfig& s, const char* name) {
  if (s.epochs < 0) {
    throw ConfigError(std::string(name) + ".epochs must be >= 0");
  }
  if (s.batch < 1) {
    throw ConfigError(std::string(name) + ".batch must be >= 1");
  }
  if (!(s.lr > 0.0) || !std::isfinite(s.lr)) {
    throw ConfigError(std::string(name) + ".lr must be positive and finite");
  }
}

std::vector<SweepCondition> parse_sweep_conditions(const Config& raw) {
  std::vector<SweepCondition> out;
  const bool has_pairs = raw.has("sweep.conditions");
  const bool has_grid = raw.has("sweep.reg_kinds");
  if (has_pairs && has_grid) {
    throw ConfigError("give either sweep.conditions or sweep.reg_kinds, not both");
  }
  if (has_pairs) {
    for (const std::string& item : raw.get_string_list("sweep.conditions")) {
      const size_t colon = item.find(':');
      if (colon == std::string::npos) {
        throw ConfigError("sweep.conditions: expected kind:alpha, got '" +
                          item + "'");
      }
      SweepCondition c;
      c.kind = reg_kind_from_name(trim_copy(item.substr(0, colon)));
      c.alpha = parse_double_token(trim_copy(item.substr(colon + 1)),
                                   "sweep.conditions");
      out.push_back(c);
    }
  } else if (has_grid) {
    std::vector<RegKind> kinds;
    for (const std::string& tok : raw.get_string_list("sweep.reg_kinds")) {
      kinds.push_back(reg_kind_from_name(tok));
    }
    std::vector<double> alphas;
    if (raw.has("sweep.alphas")) {
      if (raw.has("sweep.alpha_indices")) {
        throw ConfigError("give either sweep.alphas or sweep.alpha_indices, not both");
      }
      alphas = raw.get_double_list("sweep.alphas");
    } else if (raw.has("sweep.alpha_indices")) {
      const std::array<double, 12> grid = alpha_grid();
      for (int i : raw.get_int_list("sweep.alpha_indices")) {
        if (i < 1 || i > 12) {
          throw ConfigError("sweep.alpha_indices: index outside 1..12");
        }
        alphas.push_back(grid[i - 1]);
      }
    } else {
      throw ConfigError("sweep.reg_kinds needs sweep.alphas or sweep.alpha_indices");
    }
    for (RegKind k : kinds) {
      for (double a : alphas) out.push_back(SweepCondition{k, a});
    }
  }
  for (const SweepCondition& c : out) {
    if (c.kind == RegKind::None) {
      throw ConfigError(
          "the unregularized run is controlled by sweep.include_none, not a condition");
    }
    if (!(c.alpha >= 0.0 && c.alpha < 1.0)) {
      throw ConfigError("sweep condition alpha outside [0, 1)");
    }
  }
  return out;
}

double dataset_mse(const Network& net, const std::vector<FramePair>& data) {
  double acc = 0.0;
  for (const FramePair& p : data) {
    acc += mean_square_diff(net.forward(p.x), p.y);
  }
  return acc / static_cast<double>(data.size());
}

struct TrainStats {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double step_ms = 0.0;
  long steps = 0;
  bool failed = false;
};

// Shared epoch/batch loop. Losses reported before and after are the plain
// reconstruction MSE over the full data set, independent of the training
// objective, so runs under different objectives stay comparable.
TrainStats train_loop(Network& net, const std::vector<FramePair>& data,
                      const ScheduleConfig& sched, const LossConfig& loss,
                      uint64_t seed, uint64_t order_stream,
                      uint64_t perturb_stream) {
  if (data.empty()) throw UsageError("train: empty data set");
  TrainStats st;
  st.initial_loss = dataset_mse(net, data);
  Rng order_rng(Rng::derive(seed, order_stream));
  Rng perturb_rng(Rng::derive(seed, perturb_stream));
  AdamOptimizer opt(AdamConfig{sched.lr, 0.9, 0.999, 1e-8},
                    net.param_count());
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  const size_t batch = static_cast<size_t>(sched.batch);
  double total_ms = 0.0;
  for (int epoch = 0; epoch < sched.epochs && !st.failed; ++epoch) {
    order_rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += batch) {
      const size_t end = std::min(order.size(), start + batch);
      std::vector<const ImageTensor*> xs, ys;
      xs.reserve(end - start);
      ys.reserve(end - start);
      for (size_t i = start; i < end; ++i) {
        xs.push_back(&data[order[i]].x);
        ys.push_back(&data[order[i]].y);
      }
      const auto t0 = std::chrono::steady_clock::now();
      const LossBreakdown lb = evaluate_total(net, xs, ys, loss, perturb_rng);
      if (!std::isfinite(lb.total)) {
        st.failed = true;
        break;
      }
      opt.step(net.params(), lb.param_gradients);
      const auto t1 = std::chrono::steady_clock::now();
      total_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
      ++st.steps;
    }
  }
  st.step_ms = st.steps > 0 ? total_ms / static_cast<double>(st.steps) : 0.0;
  st.final_loss = st.failed ? kNan : dataset_mse(net, data);
  return st;
}

TrainResult result_from(Network net, const TrainStats& st) {
  return TrainResult{std::move(net), st.initial_loss, st.final_loss,
                     st.step_ms,     st.steps,        st.failed};
}

// Per-sequence pooled sums; aggregates add these across sequences before
// taking the final ratio/log, so every masked pixel counts once.
struct SeqSums {
  double err = 0.0;
  unsigned long long count = 0;
  double d_ref = 0.0;
  double d_rec = 0.0;
  unsigned long long masked = 0;
};

SeqSums score_one_sequence(const std::vector<ImageTensor>& ref,
                           const std::vector<ImageTensor>& rec,
                           const std::vector<ImageTensor>& masks,
                           const TemporalFilter& filt) {
  SeqSums s;
  s.masked = masked_count(masks);
  smoothness_sums(ref, rec, filt, &masks, s.d_ref, s.d_rec);
  for (size_t t = 0; t < ref.size(); ++t) {
    const std::vector<double>& a = ref[t].data;
    const std::vector<double>& b = rec[t].data;
    const std::vector<double>& m = masks[t].data;
    for (size_t i = 0; i < a.size(); ++i) {
      if (m[i] == 0.0) continue;
      const double d = a[i] - b[i];
      s.err += d * d;
      ++s.count;
    }
  }
  return s;
}

double psnr_from_sums(double err, unsigned long long count, double peak) {
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = err / static_cast<double>(count);
  return 10.0 * std::log10(peak * peak / mse);
}

double s_from_sums(double d_ref, double d_rec) {
  if (d_rec == 0.0) {
    return d_ref == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return std::sqrt(d_ref / d_rec);
}

MetricReport report_from_sums(const std::vector<SeqSums>& per_seq,
                              double peak) {
  MetricReport rep;
  double err = 0.0, d_ref = 0.0, d_rec = 0.0;
  unsigned long long count = 0;
  for (const SeqSums& s : per_seq) {
    SequenceScore sc;
    sc.masked_pixels = s.masked;
    if (s.count == 0) {
      // Blank mask: nothing saturated in this sequence. Score as NaN and
      // leave the aggregate to the other sequences.
      sc.psnr_db = kNan;
      sc.smoothness = kNan;
    } else {
      sc.psnr_db = psnr_from_sums(s.err, s.count, peak);
      sc.smoothness = s_from_sums(s.d_ref, s.d_rec);
      err += s.err;
      count += s.count;
      d_ref += s.d_ref;
      d_rec += s.d_rec;
    }
    rep.masked_pixels += s.masked;
    rep.per_sequence.push_back(sc);
  }
  if (count == 0) throw UsageError("evaluate: no masked pixels in any sequence");
  rep.psnr_db = psnr_from_sums(err, count, peak);
  rep.smoothness = s_from_sums(d_ref, d_rec);
  return rep;
}

// Runs fn(0..n-1) on `workers` threads (including the calling one). fn is
// expected to do its own error handling; as a backstop the first escaped
// exception is rethrown on the calling thread after the pool drains.
void run_parallel(int workers, size_t n,
                  const std::function<void(size_t)>& fn) {
  if (n == 0) return;
  const size_t w =
      std::min(static_cast<size_t>(std::max(workers, 1)), n);
  if (w <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto body = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(w - 1);
  for (size_t t = 0; t + 1 < w; ++t) pool.emplace_back(body);
  body();
  for (std::thread& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::string checkpoint_name(const std::string& kind, double alpha,
                            uint64_t seed) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_a%.10g_s%llu.ckpt", kind.c_str(), alpha,
                static_cast<unsigned long long>(seed));
  return buf;
}

} // namespace

std::array<double, 12> alpha_grid() {
  std::array<double, 12> out{};
  for (int i = 1; i <= 12; ++i) {
    const double l = std::ldexp(1.0, i - 3);
    out[i - 1] = l / (l + 1.0);
  }
  return out;
}

HarnessConfig parse_harness_config(const Config& raw) {
  for (const auto& [key, value] : raw.entries()) {
    (void)value;
    if (!known_keys().count(key)) {
      throw ConfigError("unknown config key: " + key);
    }
  }

  HarnessConfig cfg;
  SceneSpec& sc = cfg.scene;
  sc.seed = raw.get_u64("data.seed", sc.seed);
  sc.ymax = raw.get_double("data.ymax", sc.ymax);
  sc.frame_rate = raw.get_double("data.frame_rate", sc.frame_rate);
  sc.feature_count_min =
      raw.get_int("data.feature_count_min", sc.feature_count_min);
  sc.feature_count_max =
      raw.get_int("data.feature_count_max", sc.feature_count_max);
  sc.radius_frac_min =
      raw.get_double("data.radius_frac_min", sc.radius_frac_min);
  sc.radius_frac_max =
      raw.get_double("data.radius_frac_max", sc.radius_frac_max);
  sc.peak_min = raw.get_double("data.peak_min", sc.peak_min);
  sc.peak_max = raw.get_double("data.peak_max", sc.peak_max);
  sc.beam_count_min = raw.get_int("data.beam_count_min", sc.beam_count_min);
  sc.beam_count_max = raw.get_int("data.beam_count_max", sc.beam_count_max);
  sc.beam_width_frac_min =
      raw.get_double("data.beam_width_frac_min", sc.beam_width_frac_min);
  sc.beam_width_frac_max =
      raw.get_double("data.beam_width_frac_max", sc.beam_width_frac_max);
  sc.max_speed = raw.get_double("data.max_speed", sc.max_speed);

  cfg.train_count = raw.get_int("data.train_count", cfg.train_count);
  cfg.train_size = raw.get_int("data.train_size", cfg.train_size);
  cfg.test_sequences = raw.get_int("data.test_sequences", cfg.test_sequences);
  cfg.test_frames = raw.get_int("data.test_frames", cfg.test_frames);
  cfg.test_size = raw.get_int("data.test_size", cfg.test_size);

  cfg.net.in_channels = raw.get_int("net.in_channels", cfg.net.in_channels);
  cfg.net.out_channels =
      raw.get_int("net.out_channels", cfg.net.out_channels);
  if (raw.has("net.widths")) {
    cfg.net.encoder_widths = raw.get_int_list("net.widths");
  }
  cfg.net.kernel = raw.get_int("net.kernel", cfg.net.kernel);
  cfg.net.skip_connections = raw.get_bool("net.skips", true);
  const std::string down = raw.get_string("net.down", "maxpool");
  if (down == "maxpool") {
    cfg.net.down = DownsampleMode::MaxPool;
  } else if (down == "strided") {
    cfg.net.down = DownsampleMode::StridedConv;
  } else {
    throw ConfigError("net.down must be maxpool or strided");
  }
  const std::string up = raw.get_string("net.up", "nearest");
  if (up == "nearest") {
    cfg.net.up = UpsampleMode::NearestConv;
  } else if (up == "transposed") {
    cfg.net.up = UpsampleMode::TransposedConv;
  } else {
    throw ConfigError("net.up must be nearest or transposed");
  }

  cfg.pretrain.epochs = raw.get_int("pretrain.epochs", cfg.pretrain.epochs);
  cfg.pretrain.batch = raw.get_int("pretrain.batch", cfg.pretrain.batch);
  cfg.pretrain.lr = raw.get_double("pretrain.lr", cfg.pretrain.lr);
  cfg.finetune.epochs = raw.get_int("finetune.epochs", cfg.finetune.epochs);
  cfg.finetune.batch = raw.get_int("finetune.batch", cfg.finetune.batch);
  cfg.finetune.lr = raw.get_double("finetune.lr", cfg.finetune.lr);

  cfg.loss.reg_kind =
      reg_kind_from_name(raw.get_string("loss.reg_kind", "none"));
  cfg.loss.alpha = raw.get_double("loss.alpha", 0.0);
  const double tr = raw.get_double("loss.translation", 2.0);
  const double rot = raw.get_double("loss.rotation", 1.0);
  const double shear = raw.get_double("loss.shear", 1.0);
  if (tr < 0.0 || rot < 0.0 || shear < 0.0) {
    throw ConfigError("loss ranges must be half-widths >= 0");
  }
  cfg.loss.transform_ranges.translation = ParamRange{-tr, tr};
  cfg.loss.transform_ranges.rotation = ParamRange{-rot, rot};
  cfg.loss.transform_ranges.shear = ParamRange{-shear, shear};
  const double zlo = raw.get_double("loss.zoom_min", 0.97);
  const double zhi = raw.get_double("loss.zoom_max", 1.03);
  if (!(zlo > 0.0) || !(zlo <= zhi)) {
    throw ConfigError("loss.zoom range must satisfy 0 < min <= max");
  }
  cfg.loss.transform_ranges.zoom = ParamRange{zlo, zhi};
  const double slo = raw.get_double("loss.sigma_min", 0.01);
  const double shi = raw.get_double("loss.sigma_max", 0.04);
  if (!(slo >= 0.0) || !(slo <= shi)) {
    throw ConfigError("loss.sigma range must satisfy 0 <= min <= max");
  }
  cfg.loss.noise_spec = NoiseSpec{slo, shi};
  validate(cfg.loss);

  cfg.sweep.conditions = parse_sweep_conditions(raw);
  if (raw.has("sweep.seeds")) {
    cfg.sweep.seeds.clear();
    for (unsigned long long s : raw.get_u64_list("sweep.seeds")) {
      cfg.sweep.seeds.push_back(static_cast<uint64_t>(s));
    }
  }
  if (cfg.sweep.seeds.empty()) throw ConfigError("sweep.seeds is empty");
  cfg.sweep.include_baseline = raw.get_bool("sweep.include_baseline", true);
  cfg.sweep.include_none = raw.get_bool("sweep.include_none", true);

  cfg.out_dir = raw.get_string("run.out_dir", cfg.out_dir);

  // Cross-field checks. The scene is validated at both patch and sequence
  // resolution; a probe network surfaces width/kernel errors now instead
  // of inside a sweep thread.
  if (cfg.train_count < 1) throw ConfigError("data.train_count must be >= 1");
  if (cfg.test_sequences < 1 || cfg.test_frames < 1) {
    throw ConfigError("test set must have at least one sequence and frame");
  }
  {
    const TemporalFilter filt =
        make_temporal_filter(kSmoothSigmaSeconds, cfg.scene.frame_rate);
    if (cfg.test_frames < 2 * filt.radius + 1) {
      throw ConfigError(
          "data.test_frames is shorter than the temporal filter support (" +
          std::to_string(2 * filt.radius + 1) + " frames at this frame rate)");
    }
  }
  SceneSpec probe_scene = cfg.scene;
  probe_scene.image_size = cfg.train_size;
  validate(probe_scene);
  probe_scene.image_size = cfg.test_size;
  validate(probe_scene);
  const Network probe(cfg.net);
  (void)probe;
  const int div = 1 << cfg.net.encoder_widths.size();
  if (cfg.train_size % div != 0 || cfg.test_size % div != 0) {
    throw ConfigError("image sizes must be divisible by 2^(encoder stages)");
  }
  check_schedule(cfg.pretrain, "pretrain");
  check_schedule(cfg.finetune, "finetune");
  return cfg;
}

std::vector<FramePair> make_training_set(const HarnessConfig& cfg) {
  SceneSpec spec = cfg.scene;
  spec.image_size = cfg.train_size;
  return generate_training_set(spec, cfg.train_count);
}

SequenceSet make_test_set(const HarnessConfig& cfg) {
  SceneSpec spec = cfg.scene;
  spec.image_size = cfg.test_size;
  return generate_test_sequences(spec, cfg.test_sequences, cfg.test_frames);
}

TrainResult pretrain(const HarnessConfig& cfg, uint64_t seed,
                     const std::vector<FramePair>& data) {
  Network net(cfg.net);
  Rng init_rng(Rng::derive(seed, kInitStream));
  net.init_params(init_rng);
  const LossConfig rec_only; // RegKind::None
  const TrainStats st =
      train_loop(net, data, cfg.pretrain, rec_only, seed,
                 kPretrainOrderStream, kPretrainPerturbStream);
  return result_from(std::move(net), st);
}

TrainResult pretrain(const HarnessConfig& cfg, uint64_t seed) {
  return pretrain(cfg, seed, make_training_set(cfg));
}

TrainResult finetune_from(const HarnessConfig& cfg, const Network& start,
                          const LossConfig& loss, uint64_t seed,
                          const std::vector<FramePair>& data) {
  validate(loss);
  Network net = start;
  const TrainStats st =
      train_loop(net, data, cfg.finetune, loss, seed, kFinetuneOrderStream,
                 kFinetunePerturbStream);
  return result_from(std::move(net), st);
}

TrainResult finetune_from(const HarnessConfig& cfg, const Network& start,
                          const LossConfig& loss, uint64_t seed) {
  return finetune_from(cfg, start, loss, seed, make_training_set(cfg));
}

MetricReport evaluate_predictor(const HarnessConfig& cfg, const PredictFn& f,
                                const SequenceSet& test) {
  if (test.sequences.empty()) throw UsageError("evaluate: empty test set");
  const TemporalFilter filt =
      make_temporal_filter(kSmoothSigmaSeconds, test.frame_rate);
  std::vector<SeqSums> sums;
  sums.reserve(test.sequences.size());
  for (const std::vector<FramePair>& seq : test.sequences) {
    std::vector<ImageTensor> ref, rec, masks;
    ref.reserve(seq.size());
    rec.reserve(seq.size());
    masks.reserve(seq.size());
    for (const FramePair& fp : seq) {
      ref.push_back(fp.y);
      rec.push_back(f(fp.x));
      masks.push_back(fp.mask);
    }
    sums.push_back(score_one_sequence(ref, rec, masks, filt));
  }
  return report_from_sums(sums, cfg.scene.ymax);
}

MetricReport evaluate_network(const HarnessConfig& cfg, const Network& net,
                              const SequenceSet& test) {
  return evaluate_predictor(cfg, predictor(net), test);
}

void dump_predictions(const std::string& dir, const PredictFn& f,
                      const SequenceSet& test, double ymax) {
  SequenceSet out;
  out.frame_rate = test.frame_rate;
  out.sequences.reserve(test.sequences.size());
  for (const std::vector<FramePair>& seq : test.sequences) {
    std::vector<FramePair> oseq;
    oseq.reserve(seq.size());
    for (const FramePair& fp : seq) {
      ImageTensor pred = f(fp.x);
      for (double& v : pred.data) v = std::clamp(v, 0.0, ymax);
      oseq.push_back(FramePair{std::move(pred), fp.x, fp.mask});
    }
    out.sequences.push_back(std::move(oseq));
  }
  dump_dataset(dir, out, ymax);
}

SequenceMetricsResult sequence_metrics(const std::string& truth_dir,
                                       const std::string& pred_dir) {
  const LoadedDataset truth = load_dataset(truth_dir);
  const LoadedDataset pred = load_dataset(pred_dir);
  if (pred.set.sequences.size() != truth.set.sequences.size()) {
    throw UsageError("sequence metrics: sequence count mismatch");
  }
  const TemporalFilter filt =
      make_temporal_filter(kSmoothSigmaSeconds, truth.set.frame_rate);
  std::vector<SeqSums> sums;
  sums.reserve(truth.set.sequences.size());
  for (size_t s = 0; s < truth.set.sequences.size(); ++s) {
    const std::vector<FramePair>& tseq = truth.set.sequences[s];
    const std::vector<FramePair>& pseq = pred.set.sequences[s];
    if (tseq.size() != pseq.size()) {
      throw UsageError("sequence metrics: frame count mismatch");
    }
    std::vector<ImageTensor> ref, rec, masks;
    ref.reserve(tseq.size());
    rec.reserve(tseq.size());
    masks.reserve(tseq.size());
    for (size_t t = 0; t < tseq.size(); ++t) {
      ref.push_back(tseq[t].y);
      rec.push_back(pseq[t].y);
      masks.push_back(tseq[t].mask);
    }
    sums.push_back(score_one_sequence(ref, rec, masks, filt));
  }
  const MetricReport rep = report_from_sums(sums, truth.ymax);
  return SequenceMetricsResult{rep.psnr_db, rep.smoothness,
                               rep.masked_pixels};
}

std::vector<RunRecord> run_sweep(const HarnessConfig& cfg, int workers) {
  if (cfg.sweep.seeds.empty()) throw ConfigError("sweep: no seeds");
  std::filesystem::create_directories(cfg.out_dir);
  const std::vector<FramePair> train = make_training_set(cfg);
  const SequenceSet test = make_test_set(cfg);

  const std::vector<uint64_t>& seeds = cfg.sweep.seeds;
  std::vector<std::optional<TrainResult>> pre(seeds.size());
  run_parallel(workers, seeds.size(), [&](size_t i) {
    try {
      TrainResult r = pretrain(cfg, seeds[i], train);
      if (!r.failed) {
        r.net.save(join_path(
            cfg.out_dir, checkpoint_name("pretrain", 0.0, seeds[i])));
      }
      pre[i] = std::move(r);
    } catch (const std::exception&) {
      pre[i].reset();
    }
  });

  std::vector<RunRecord> rows;

  if (cfg.sweep.include_baseline) {
    std::vector<RunRecord> brows(seeds.size());
    run_parallel(workers, seeds.size(), [&](size_t i) {
      RunRecord r;
      r.kind_order = -1;
      r.reg_kind = "baseline";
      r.alpha = 0.0;
      r.seed = seeds[i];
      r.psnr_db = kNan;
      r.smoothness = kNan;
      r.status = "failed";
      if (pre[i] && !pre[i]->failed) {
        r.pretrain_step_ms = pre[i]->step_ms;
        r.checkpoint =
            join_path(cfg.out_dir, checkpoint_name("pretrain", 0.0, seeds[i]));
        try {
          const MetricReport rep = evaluate_network(cfg, pre[i]->net, test);
          r.psnr_db = rep.psnr_db;
          r.smoothness = rep.smoothness;
          r.status = "ok";
        } catch (const std::exception&) {
        }
      }
      brows[i] = std::move(r);
    });
    for (RunRecord& r : brows) rows.push_back(std::move(r));
  }

  struct RunTask {
    RegKind kind = RegKind::None;
    double alpha = 0.0;
    size_t seed_index = 0;
  };
  std::vector<RunTask> tasks;
  if (cfg.sweep.include_none) {
    for (size_t i = 0; i < seeds.size(); ++i) {
      tasks.push_back(RunTask{RegKind::None, 0.0, i});
    }
  }
  for (const SweepCondition& c : cfg.sweep.conditions) {
    for (size_t i = 0; i < seeds.size(); ++i) {
      tasks.push_back(RunTask{c.kind, c.alpha, i});
    }
  }

  std::vector<RunRecord> trows(tasks.size());
  run_parallel(workers, tasks.size(), [&](size_t ti) {
    const RunTask& task = tasks[ti];
    const uint64_t seed = seeds[task.seed_index];
    RunRecord r;
    r.kind_order = static_cast<int>(task.kind);
    r.reg_kind = reg_kind_name(task.kind);
    r.alpha = task.alpha;
    r.seed = seed;
    r.psnr_db = kNan;
    r.smoothness = kNan;
    r.status = "failed";
    const std::optional<TrainResult>& p = pre[task.seed_index];
    if (p && !p->failed) {
      r.pretrain_step_ms = p->step_ms;
      try {
        LossConfig lc = cfg.loss;
        lc.reg_kind = task.kind;
        lc.alpha = task.alpha;
        const TrainResult ft =
            finetune_from(cfg, p->net, lc, seed, train);
        r.finetune_step_ms = ft.step_ms;
        if (!ft.failed) {
          const std::string path = join_path(
              cfg.out_dir, checkpoint_name(r.reg_kind, task.alpha, seed));
          ft.net.save(path);
          r.checkpoint = path;
          const MetricReport rep = evaluate_network(cfg, ft.net, test);
          r.psnr_db = rep.psnr_db;
          r.smoothness = rep.smoothness;
          r.status = "ok";
        }
      } catch (const std::exception&) {
      }
    }
    trows[ti] = std::move(r);
  });
  for (RunRecord& r : trows) rows.push_back(std::move(r));

  std::sort(rows.begin(), rows.end(),
            [](const RunRecord& a, const RunRecord& b) {
              if (a.kind_order != b.kind_order) {
                return a.kind_order < b.kind_order;
              }
              if (a.alpha != b.alpha) return a.alpha < b.alpha;
              return a.seed < b.seed;
            });
  return rows;
}

std::string csv_text(const std::vector<RunRecord>& rows) {
  std::string out =
      "reg_kind,alpha,seed,psnr_db,smoothness,pretrain_step_ms,"
      "finetune_step_ms,status\n";
  char line[256];
  for (const RunRecord& r : rows) {
    std::snprintf(line, sizeof line, "%s,%.10g,%llu,%.6f,%.6f,%.3f,%.3f,%s\n",
                  r.reg_kind.c_str(), r.alpha,
                  static_cast<unsigned long long>(r.seed), r.psnr_db,
                  r.smoothness, r.pretrain_step_ms, r.finetune_step_ms,
                  r.status.c_str());
    out += line;
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<RunRecord>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  const std::string text = csv_text(rows);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("write failed: " + path);
}

void gen_data(const HarnessConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<FramePair> train = make_training_set(cfg);
  SequenceSet tset;
  tset.frame_rate = cfg.scene.frame_rate;
  tset.sequences.reserve(train.size());
  for (FramePair& p : train) {
    std::vector<FramePair> one;
    one.push_back(std::move(p));
    tset.sequences.push_back(std::move(one));
  }
  dump_dataset(join_path(dir, "train"), tset, cfg.scene.ymax);
  dump_dataset(join_path(dir, "test"), make_test_set(cfg), cfg.scene.ymax);
}

} // namespace tsr
