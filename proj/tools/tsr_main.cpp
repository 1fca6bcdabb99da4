// Command-line front end. Everything goes through the C API in tsr/tsr.h;
// this translation unit never touches the C++ core directly.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsr/tsr.h"

namespace {

struct ConfigDeleter {
  void operator()(tsr_config* c) const { tsr_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<tsr_config, ConfigDeleter>;

int report_error(const char* op) {
  std::fprintf(stderr, "error: %s: %s\n", op, tsr_last_error());
  return 1;
}

// Builds the config handle from --config / --set for one subcommand run.
// Returns nullptr after printing the error.
ConfigPtr build_config(const std::string& file,
                       const std::vector<std::string>& sets) {
  ConfigPtr cfg(tsr_config_create());
  if (!cfg) {
    std::fprintf(stderr, "error: out of memory\n");
    return nullptr;
  }
  if (!file.empty() &&
      tsr_config_load_file(cfg.get(), file.c_str()) != TSR_OK) {
    report_error("loading config");
    return nullptr;
  }
  for (const std::string& s : sets) {
    if (tsr_config_assign(cfg.get(), s.c_str()) != TSR_OK) {
      report_error("applying --set");
      return nullptr;
    }
  }
  return cfg;
}

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_file,
                  "key=value configuration file");
  cmd->add_option("--set", opts.sets,
                  "override one key, e.g. --set data.train_count=100")
      ->take_all();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Trainer and benchmark for temporally stable saturation recovery"};
  app.require_subcommand(1);

  CommonOpts gen_opts;
  std::string gen_out = "data";
  CLI::App* gen = app.add_subcommand(
      "gen-data", "write the synthetic data set to <out>/train and <out>/test");
  add_common(gen, gen_opts);
  gen->add_option("--out", gen_out, "output directory")->required();

  CommonOpts pre_opts;
  uint64_t pre_seed = 1;
  std::string pre_out;
  CLI::App* pre = app.add_subcommand(
      "pretrain", "train from fresh weights on reconstruction only");
  add_common(pre, pre_opts);
  pre->add_option("--seed", pre_seed, "run seed");
  pre->add_option("--out", pre_out, "checkpoint to write")->required();

  CommonOpts ft_opts;
  uint64_t ft_seed = 1;
  std::string ft_in, ft_kind, ft_out;
  double ft_alpha = 0.0;
  CLI::App* ft = app.add_subcommand(
      "finetune", "continue training a checkpoint under a blended objective");
  add_common(ft, ft_opts);
  ft->add_option("--seed", ft_seed, "run seed");
  ft->add_option("--ckpt-in", ft_in, "starting checkpoint")->required();
  ft->add_option("--reg-kind", ft_kind,
                 "none | stability_noise | stability_transform | "
                 "transform_invariance | sparse_jacobian | augmentation")
      ->required();
  ft->add_option("--alpha", ft_alpha, "blend weight in [0, 1)")->required();
  ft->add_option("--out", ft_out, "checkpoint to write")->required();

  CommonOpts ev_opts;
  std::string ev_ckpt, ev_dump;
  CLI::App* ev = app.add_subcommand(
      "eval", "score a checkpoint on the configured test sequences");
  add_common(ev, ev_opts);
  ev->add_option("--ckpt", ev_ckpt, "checkpoint to evaluate")->required();
  ev->add_option("--dump-pred", ev_dump,
                 "also write predictions in dataset dump format");

  CommonOpts sw_opts;
  std::string sw_out = "results.csv";
  int sw_workers = 1;
  CLI::App* sw = app.add_subcommand(
      "sweep", "full experiment: pretrain, fine-tune grid, evaluate, CSV");
  add_common(sw, sw_opts);
  sw->add_option("--out", sw_out, "CSV path to write");
  sw->add_option("--workers", sw_workers, "parallel runs");

  std::string mt_truth, mt_pred, mt_condition = "condition", mt_csv;
  CLI::App* mt = app.add_subcommand(
      "metrics", "score a dumped prediction directory against dumped truth");
  mt->add_option("--truth", mt_truth, "truth dump directory")->required();
  mt->add_option("--pred", mt_pred, "prediction dump directory")->required();
  mt->add_option("--condition", mt_condition, "label for the CSV line");
  mt->add_option("--csv", mt_csv, "append the CSV line to this file");

  CLI::App* ag = app.add_subcommand(
      "alpha-grid", "print the twelve grid blend weights");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    ConfigPtr cfg = build_config(gen_opts.config_file, gen_opts.sets);
    if (!cfg) return 1;
    if (tsr_gen_data(cfg.get(), gen_out.c_str()) != TSR_OK) {
      return report_error("gen-data");
    }
    std::printf("dataset written: %s\n", gen_out.c_str());
    return 0;
  }

  if (pre->parsed()) {
    ConfigPtr cfg = build_config(pre_opts.config_file, pre_opts.sets);
    if (!cfg) return 1;
    double final_loss = 0.0, step_ms = 0.0;
    if (tsr_pretrain(cfg.get(), pre_seed, pre_out.c_str(), &final_loss,
                     &step_ms) != TSR_OK) {
      return report_error("pretrain");
    }
    std::printf("final_loss=%.10g step_ms=%.3f checkpoint=%s\n", final_loss,
                step_ms, pre_out.c_str());
    return 0;
  }

  if (ft->parsed()) {
    ConfigPtr cfg = build_config(ft_opts.config_file, ft_opts.sets);
    if (!cfg) return 1;
    double final_loss = 0.0, step_ms = 0.0;
    if (tsr_finetune(cfg.get(), ft_seed, ft_in.c_str(), ft_kind.c_str(),
                     ft_alpha, ft_out.c_str(), &final_loss,
                     &step_ms) != TSR_OK) {
      return report_error("finetune");
    }
    std::printf("final_loss=%.10g step_ms=%.3f checkpoint=%s\n", final_loss,
                step_ms, ft_out.c_str());
    return 0;
  }

  if (ev->parsed()) {
    ConfigPtr cfg = build_config(ev_opts.config_file, ev_opts.sets);
    if (!cfg) return 1;
    double psnr = 0.0, smooth = 0.0;
    uint64_t masked = 0;
    if (tsr_evaluate(cfg.get(), ev_ckpt.c_str(),
                     ev_dump.empty() ? nullptr : ev_dump.c_str(), &psnr,
                     &smooth, &masked) != TSR_OK) {
      return report_error("eval");
    }
    std::printf("psnr_db=%.6f smoothness=%.6f masked_pixels=%" PRIu64 "\n",
                psnr, smooth, masked);
    return 0;
  }

  if (sw->parsed()) {
    ConfigPtr cfg = build_config(sw_opts.config_file, sw_opts.sets);
    if (!cfg) return 1;
    if (tsr_sweep(cfg.get(), sw_out.c_str(), sw_workers) != TSR_OK) {
      return report_error("sweep");
    }
    std::printf("sweep complete: %s\n", sw_out.c_str());
    return 0;
  }

  if (mt->parsed()) {
    double psnr = 0.0, smooth = 0.0;
    uint64_t masked = 0;
    if (tsr_sequence_metrics(mt_truth.c_str(), mt_pred.c_str(), &psnr,
                             &smooth, &masked) != TSR_OK) {
      return report_error("metrics");
    }
    char line[256];
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%" PRIu64 "\n",
                  mt_condition.c_str(), psnr, smooth, masked);
    std::printf("condition,psnr_db,smoothness,masked_pixels\n%s", line);
    if (!mt_csv.empty()) {
      std::ofstream f(mt_csv, std::ios::app | std::ios::binary);
      if (!f) {
        std::fprintf(stderr, "error: cannot open %s\n", mt_csv.c_str());
        return 1;
      }
      f << line;
    }
    return 0;
  }

  if (ag->parsed()) {
    double grid[12];
    if (tsr_alpha_grid(grid) != TSR_OK) return report_error("alpha-grid");
    for (int i = 0; i < 12; ++i) {
      std::printf("%2d %.17g\n", i + 1, grid[i]);
    }
    return 0;
  }

  return 0;
}
