/* semcom — semantic-communication link simulator with a diffusion-based
 * receiver. C API over the C++ core: opaque handles, integer error codes.
 * On failure every function returns a nonzero code and leaves a message
 * readable through semcom_last_error() (thread-local). */

#ifndef SEMCOM_H
#define SEMCOM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define SEMCOM_OK 0
#define SEMCOM_ERR_CONFIG 1    /* bad configuration or input file */
#define SEMCOM_ERR_SHAPE 2     /* dimension mismatch */
#define SEMCOM_ERR_CONTRACT 3  /* precondition violated */
#define SEMCOM_ERR_INVARIANT 4 /* internal invariant violated */
#define SEMCOM_ERR_DIVERGED 5  /* sampler produced a non-finite state */
#define SEMCOM_ERR_TRAINING 6  /* training diverged */
#define SEMCOM_ERR_SELFTEST 7  /* selftest found failures */
#define SEMCOM_ERR_UNKNOWN 8

const char* semcom_last_error(void);
const char* semcom_version(void);

typedef struct semcom_schedule_s semcom_schedule;
typedef struct semcom_operator_s semcom_operator;
typedef struct semcom_denoiser_s semcom_denoiser;

/* ---- noise schedule ---- */

int semcom_schedule_create_linear(int steps, double beta_start, double beta_end,
                                  semcom_schedule** out);
void semcom_schedule_destroy(semcom_schedule* s);
int semcom_schedule_steps(const semcom_schedule* s);
/* t is 1-based */
int semcom_schedule_alpha_bar(const semcom_schedule* s, int t, double* out);
int semcom_schedule_sigma(const semcom_schedule* s, int t, double* out);

/* ---- degradation operators ---- */

int semcom_operator_create_identity(int dim, semcom_operator** out);
/* drops latent coordinates [drop_start, drop_start + drop_len) */
int semcom_operator_create_segment_mask(int dim, int drop_start, int drop_len,
                                        semcom_operator** out);
void semcom_operator_destroy(semcom_operator* op);
int semcom_operator_apply(const semcom_operator* op, const double* z, int n,
                          double* out);
int semcom_operator_pinv_apply(const semcom_operator* op, const double* y, int n,
                               double* out);

/* ---- denoisers ---- */

/* Analytic Gaussian-mixture denoiser. weights: K entries; means/variances:
 * K*dim entries, row-major by component. cond_noise_std > 0 decodes corrupted
 * condition embeddings softly; hard_snap != 0 snaps to the nearest prototype. */
int semcom_denoiser_create_mixture(const double* weights, const double* means,
                                   const double* variances, int components,
                                   int dim, const semcom_schedule* schedule,
                                   double cond_noise_std, int hard_snap,
                                   semcom_denoiser** out);
/* Loads a trained tiny network written by semcom_train_denoiser. */
int semcom_denoiser_load_tiny(const char* path, const semcom_schedule* schedule,
                              semcom_denoiser** out);
void semcom_denoiser_destroy(semcom_denoiser* d);

/* ---- restoration ---- */

#define SEMCOM_LAMBDA_POSTERIOR 0
#define SEMCOM_LAMBDA_NOISE_RATIO 1
#define SEMCOM_LAMBDA_EXACT_ZERO_GAMMA 2

typedef struct {
  double guidance_scale; /* classifier-free guidance mixing factor */
  double sigma_y;        /* working channel-noise level (sigma*_y) */
  int lambda_mode;       /* SEMCOM_LAMBDA_* */
  uint64_t seed;
} semcom_restore_options;

/* Restores a received latent y (length = operator output dim). cond may be
 * NULL for unconditional restoration; cond_noise_std is the receiver's
 * estimate of the conditioning corruption. z0_out must hold dim doubles;
 * residual_out (optional) receives the final consistency residual. */
int semcom_restore(const semcom_denoiser* model, const semcom_schedule* schedule,
                   const semcom_operator* op, const double* y, int y_len,
                   const double* cond, int cond_len, double cond_noise_std,
                   const semcom_restore_options* options, double* z0_out,
                   double* residual_out);

/* ---- experiment harness ---- */

/* Runs the experiment grid described by config_json (see README for the
 * schema), writing trials.csv / summary.csv / series.csv under out_dir.
 * seed_override >= 0 replaces the config seed; workers <= 0 means one. */
int semcom_run_grid(const char* config_json, const char* out_dir, int workers,
                    int64_t seed_override);

/* Trains the tiny denoiser described by the config's data/train sections and
 * writes it to out_path (falls back to data.model in the config). */
int semcom_train_denoiser(const char* config_json, const char* out_path,
                          double* final_loss_out);

/* Runs the built-in invariant checks, printing one line per check. */
int semcom_selftest(void);

#ifdef __cplusplus
}
#endif

#endif /* SEMCOM_H */
