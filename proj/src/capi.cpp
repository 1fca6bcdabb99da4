#include "tsr/tsr.h"

#include <new>
#include <string>

#include "tsr/config.hpp"
#include "tsr/error.hpp"
#include "tsr/harness.hpp"
#include "tsr/loss.hpp"
#include "tsr/network.hpp"

struct tsr_config {
  tsr::Config cfg;
};

namespace {

thread_local std::string g_last_error;

tsr_status fail(tsr_status code, const char* what) {
  g_last_error = what ? what : "";
  return code;
}

template <typename Fn>
tsr_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return TSR_OK;
  } catch (const tsr::ConfigError& e) {
    return fail(TSR_ERR_CONFIG, e.what());
  } catch (const tsr::DimensionError& e) {
    return fail(TSR_ERR_DIMENSION, e.what());
  } catch (const tsr::IoError& e) {
    return fail(TSR_ERR_IO, e.what());
  } catch (const tsr::UsageError& e) {
    return fail(TSR_ERR_USAGE, e.what());
  } catch (const std::exception& e) {
    return fail(TSR_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(TSR_ERR_RUNTIME, "unknown error");
  }
}

tsr_status check_args(bool ok) {
  return ok ? TSR_OK : fail(TSR_ERR_INVALID_ARGUMENT, "null argument");
}

} // namespace

extern "C" {

const char* tsr_version(void) { return "1.0.0"; }

const char* tsr_last_error(void) { return g_last_error.c_str(); }

tsr_config* tsr_config_create(void) { return new (std::nothrow) tsr_config; }

void tsr_config_destroy(tsr_config* cfg) { delete cfg; }

tsr_status tsr_config_load_file(tsr_config* cfg, const char* path) {
  if (tsr_status s = check_args(cfg && path)) return s;
  return guarded([&] {
    const tsr::Config loaded = tsr::Config::from_file(path);
    for (const auto& [k, v] : loaded.entries()) cfg->cfg.set(k, v);
  });
}

tsr_status tsr_config_set(tsr_config* cfg, const char* key,
                          const char* value) {
  if (tsr_status s = check_args(cfg && key && value)) return s;
  return guarded([&] { cfg->cfg.set(key, value); });
}

tsr_status tsr_config_assign(tsr_config* cfg, const char* key_eq_value) {
  if (tsr_status s = check_args(cfg && key_eq_value)) return s;
  return guarded([&] { cfg->cfg.set_assignment(key_eq_value); });
}

tsr_status tsr_alpha_grid(double out[12]) {
  if (tsr_status s = check_args(out != nullptr)) return s;
  return guarded([&] {
    const std::array<double, 12> g = tsr::alpha_grid();
    for (int i = 0; i < 12; ++i) out[i] = g[i];
  });
}

tsr_status tsr_gen_data(const tsr_config* cfg, const char* out_dir) {
  if (tsr_status s = check_args(cfg && out_dir)) return s;
  return guarded([&] {
    const tsr::HarnessConfig h = tsr::parse_harness_config(cfg->cfg);
    tsr::gen_data(h, out_dir);
  });
}

tsr_status tsr_pretrain(const tsr_config* cfg, uint64_t seed,
                        const char* ckpt_out, double* final_loss,
                        double* step_ms) {
  if (tsr_status s = check_args(cfg && ckpt_out)) return s;
  return guarded([&] {
    const tsr::HarnessConfig h = tsr::parse_harness_config(cfg->cfg);
    const tsr::TrainResult r = tsr::pretrain(h, seed);
    if (r.failed) {
      throw std::runtime_error("pretraining diverged (non-finite loss)");
    }
    r.net.save(ckpt_out);
    if (final_loss) *final_loss = r.final_loss;
    if (step_ms) *step_ms = r.step_ms;
  });
}

tsr_status tsr_finetune(const tsr_config* cfg, uint64_t seed,
                        const char* ckpt_in, const char* reg_kind,
                        double alpha, const char* ckpt_out,
                        double* final_loss, double* step_ms) {
  if (tsr_status s = check_args(cfg && ckpt_in && reg_kind && ckpt_out)) {
    return s;
  }
  return guarded([&] {
    const tsr::HarnessConfig h = tsr::parse_harness_config(cfg->cfg);
    const tsr::Network start = tsr::Network::load(ckpt_in);
    tsr::LossConfig lc = h.loss;
    lc.reg_kind = tsr::reg_kind_from_name(reg_kind);
    lc.alpha = alpha;
    const tsr::TrainResult r = tsr::finetune_from(h, start, lc, seed);
    if (r.failed) {
      throw std::runtime_error("fine-tuning diverged (non-finite loss)");
    }
    r.net.save(ckpt_out);
    if (final_loss) *final_loss = r.final_loss;
    if (step_ms) *step_ms = r.step_ms;
  });
}

tsr_status tsr_evaluate(const tsr_config* cfg, const char* ckpt,
                        const char* dump_dir, double* psnr_db,
                        double* smoothness, uint64_t* masked_pixels) {
  if (tsr_status s = check_args(cfg && ckpt)) return s;
  return guarded([&] {
    const tsr::HarnessConfig h = tsr::parse_harness_config(cfg->cfg);
    const tsr::Network net = tsr::Network::load(ckpt);
    const tsr::SequenceSet test = tsr::make_test_set(h);
    const tsr::MetricReport rep = tsr::evaluate_network(h, net, test);
    if (dump_dir) {
      tsr::dump_predictions(dump_dir, tsr::predictor(net), test,
                            h.scene.ymax);
    }
    if (psnr_db) *psnr_db = rep.psnr_db;
    if (smoothness) *smoothness = rep.smoothness;
    if (masked_pixels) *masked_pixels = rep.masked_pixels;
  });
}

tsr_status tsr_sweep(const tsr_config* cfg, const char* csv_out,
                     int workers) {
  if (tsr_status s = check_args(cfg && csv_out)) return s;
  return guarded([&] {
    const tsr::HarnessConfig h = tsr::parse_harness_config(cfg->cfg);
    const std::vector<tsr::RunRecord> rows =
        tsr::run_sweep(h, workers < 1 ? 1 : workers);
    tsr::write_csv(csv_out, rows);
  });
}

tsr_status tsr_sequence_metrics(const char* truth_dir, const char* pred_dir,
                                double* psnr_db, double* smoothness,
                                uint64_t* masked_pixels) {
  if (tsr_status s = check_args(truth_dir && pred_dir)) return s;
  return guarded([&] {
    const tsr::SequenceMetricsResult r =
        tsr::sequence_metrics(truth_dir, pred_dir);
    if (psnr_db) *psnr_db = r.psnr_db;
    if (smoothness) *smoothness = r.smoothness;
    if (masked_pixels) *masked_pixels = r.masked_pixels;
  });
}

} // extern "C"
