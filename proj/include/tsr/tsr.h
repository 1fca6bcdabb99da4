#ifndef TSR_H
#define TSR_H

/* C interface to the temporally stable reconstruction library.
 *
 * All functions returning tsr_status set a thread-local error message on
 * failure, readable via tsr_last_error() until the next call on the same
 * thread. Configuration handles hold raw key=value pairs; they are parsed
 * and validated by the operation that consumes them, so keys can be set in
 * any order. Unknown keys are rejected at that point.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define TSR_API __declspec(dllexport)
#else
#define TSR_API __attribute__((visibility("default")))
#endif

typedef enum tsr_status {
  TSR_OK = 0,
  TSR_ERR_INVALID_ARGUMENT = 1, /* null handle or pointer argument */
  TSR_ERR_CONFIG = 2,           /* bad key, value, or combination */
  TSR_ERR_DIMENSION = 3,        /* tensor or sequence shape mismatch */
  TSR_ERR_IO = 4,               /* file missing, unreadable, or corrupt */
  TSR_ERR_USAGE = 5,            /* operation misuse (e.g. empty mask) */
  TSR_ERR_RUNTIME = 6           /* anything else, incl. diverged training */
} tsr_status;

typedef struct tsr_config tsr_config;

/* Library version as "major.minor.patch". */
TSR_API const char* tsr_version(void);

/* Message of the last failing call on this thread ("" after a success). */
TSR_API const char* tsr_last_error(void);

/* NULL only on allocation failure. */
TSR_API tsr_config* tsr_config_create(void);
TSR_API void tsr_config_destroy(tsr_config* cfg);

/* Merges key=value lines from a file into the handle. */
TSR_API tsr_status tsr_config_load_file(tsr_config* cfg, const char* path);

TSR_API tsr_status tsr_config_set(tsr_config* cfg, const char* key,
                                  const char* value);

/* "key=value" in one string, the CLI override form. */
TSR_API tsr_status tsr_config_assign(tsr_config* cfg,
                                     const char* key_eq_value);

/* The twelve grid blend weights: alpha_i = l/(l+1), l = 2^(i-3), i=1..12. */
TSR_API tsr_status tsr_alpha_grid(double out[12]);

/* Writes the data set to out_dir/train and out_dir/test (16-bit PGM plus
 * manifest). */
TSR_API tsr_status tsr_gen_data(const tsr_config* cfg, const char* out_dir);

/* Reconstruction-only training from fresh weights; writes a checkpoint.
 * final_loss and step_ms may be NULL. Diverged training is an error and
 * writes nothing. */
TSR_API tsr_status tsr_pretrain(const tsr_config* cfg, uint64_t seed,
                                const char* ckpt_out, double* final_loss,
                                double* step_ms);

/* Continues from ckpt_in under the blended objective
 * (1-alpha)*rec + alpha*reg with the given regularizer kind: one of
 * none, stability_noise, stability_transform, transform_invariance,
 * sparse_jacobian, augmentation. */
TSR_API tsr_status tsr_finetune(const tsr_config* cfg, uint64_t seed,
                                const char* ckpt_in, const char* reg_kind,
                                double alpha, const char* ckpt_out,
                                double* final_loss, double* step_ms);

/* Runs the checkpoint over the configured test sequences and reports
 * saturated-region PSNR (dB, peak = data.ymax) and temporal smoothness S.
 * dump_dir, when non-NULL, receives the predictions in dataset dump
 * format. Output pointers may be NULL. */
TSR_API tsr_status tsr_evaluate(const tsr_config* cfg, const char* ckpt,
                                const char* dump_dir, double* psnr_db,
                                double* smoothness, uint64_t* masked_pixels);

/* Full experiment: per-seed pretraining, per-condition fine-tuning,
 * evaluation, checkpoints under run.out_dir and a deterministic CSV at
 * csv_out. workers < 1 means 1. */
TSR_API tsr_status tsr_sweep(const tsr_config* cfg, const char* csv_out,
                             int workers);

/* Scores a dumped prediction directory against a dumped truth directory. */
TSR_API tsr_status tsr_sequence_metrics(const char* truth_dir,
                                        const char* pred_dir,
                                        double* psnr_db, double* smoothness,
                                        uint64_t* masked_pixels);

#ifdef __cplusplus
}
#endif

#endif /* TSR_H */
