/* C interface to the surgical deviation detection library. */
#ifndef SDEV_SDEV_H
#define SDEV_SDEV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SDEV_BUILDING_LIBRARY)
#    define SDEV_API __declspec(dllexport)
#  else
#    define SDEV_API __declspec(dllimport)
#  endif
#else
#  define SDEV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sdev_status {
    SDEV_OK = 0,
    SDEV_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad index or out-of-range value */
    SDEV_ERR_PARSE = 2,            /* malformed input file */
    SDEV_ERR_VOCABULARY = 3,       /* symbol outside the vocabulary */
    SDEV_ERR_CONFIG = 4,           /* infeasible or inconsistent configuration */
    SDEV_ERR_NUMERIC = 5,          /* non-finite likelihood */
    SDEV_ERR_IO = 6,               /* file system failure */
    SDEV_ERR_UNDEFINED = 7,        /* requested quantity is undefined, e.g. recall of an empty class */
    SDEV_ERR_INTERNAL = 8
} sdev_status;

/* Message of the last failing call on this thread; "" if none. */
SDEV_API const char* sdev_last_error(void);
SDEV_API const char* sdev_version(void);
SDEV_API const char* sdev_status_name(sdev_status s);

typedef struct sdev_cohort sdev_cohort;
typedef struct sdev_alignment sdev_alignment;
typedef struct sdev_model sdev_model;
typedef struct sdev_evaluation sdev_evaluation;

/* ---- cohorts ---- */

/* Every rate_hz argument must be one of 2, 3, ..., 12 or 12.5. */

typedef struct sdev_generator_options {
    uint64_t seed;
    uint32_t cohort_size;
    double perturbation_rate; /* per base step */
    double idle_gap_rate;     /* per base step */
    double event_fraction;    /* target event share; negative keeps the default */
    uint32_t min_events;      /* per procedure */
    uint32_t max_events;
} sdev_generator_options;

SDEV_API void sdev_generator_options_default(sdev_generator_options* opts);

SDEV_API sdev_status sdev_cohort_simulate(const sdev_generator_options* opts, sdev_cohort** out);
/* Loads a cohort manifest (JSON listing per-procedure activity/event CSVs). */
SDEV_API sdev_status sdev_cohort_load(const char* manifest_path, sdev_cohort** out);
/* Writes manifest.json, vocabulary.json and the CSV pairs; simulated cohorts
   also get ground_truth.json. */
SDEV_API sdev_status sdev_cohort_write(const sdev_cohort* c, const char* dir);
/* One sampled CSV per procedure, named <id>_<rate>hz.csv. */
SDEV_API sdev_status sdev_cohort_write_sampled(const sdev_cohort* c, double rate_hz, const char* dir);
SDEV_API size_t sdev_cohort_size(const sdev_cohort* c);
SDEV_API const char* sdev_cohort_procedure_id(const sdev_cohort* c, size_t index);
/* Timeline length of one procedure in seconds. */
SDEV_API double sdev_cohort_duration(const sdev_cohort* c, size_t index);
/* Counts of NoDeviation, ContextDeviation, EventDeviation instants with the
   whole cohort aligned jointly. */
SDEV_API sdev_status sdev_cohort_state_mix(const sdev_cohort* c, double rate_hz, uint64_t counts[3]);
SDEV_API void sdev_cohort_free(sdev_cohort* c);

/* ---- pipeline options ---- */

typedef enum sdev_decode_mode { SDEV_DECODE_VITERBI = 0, SDEV_DECODE_POSTERIOR = 1 } sdev_decode_mode;

typedef struct sdev_pipeline_options {
    uint32_t dba_max_iter;
    uint32_t dba_patience;
    double max_duration_factor; /* D_max = ceil(factor * longest training run) */
    double smoothing;           /* additive pseudo-count */
    int em;                     /* nonzero: refine with Baum-Welch after counting */
    uint32_t em_max_iter;
    double em_tol;
    sdev_decode_mode decode_mode;
} sdev_pipeline_options;

SDEV_API void sdev_pipeline_options_default(sdev_pipeline_options* opts);

/* ---- alignment ---- */

SDEV_API sdev_status sdev_align(const sdev_cohort* c, double rate_hz, const sdev_pipeline_options* opts,
                                sdev_alignment** out);
SDEV_API size_t sdev_alignment_length(const sdev_alignment* a);
SDEV_API size_t sdev_alignment_iterations(const sdev_alignment* a);
SDEV_API long sdev_alignment_cost(const sdev_alignment* a);
/* standard_process.csv, aligned.csv and traces/<id>.csv. */
SDEV_API sdev_status sdev_alignment_write(const sdev_alignment* a, const char* dir);
SDEV_API void sdev_alignment_free(sdev_alignment* a);

/* ---- models ---- */

SDEV_API sdev_status sdev_model_train(const sdev_cohort* c, double rate_hz, const sdev_pipeline_options* opts,
                                      sdev_model** out);
SDEV_API sdev_status sdev_model_save(const sdev_model* m, const char* path);
SDEV_API sdev_status sdev_model_load(const char* path, sdev_model** out);
SDEV_API size_t sdev_model_alphabet_size(const sdev_model* m);
SDEV_API size_t sdev_model_max_duration(const sdev_model* m);
SDEV_API sdev_status sdev_model_log_likelihood(const sdev_model* m, const uint32_t* obs, size_t n, double* out);
/* Writes n states (0 none, 1 context, 2 event) into states_out. */
SDEV_API sdev_status sdev_model_decode(const sdev_model* m, const uint32_t* obs, size_t n, uint8_t* states_out);
SDEV_API void sdev_model_free(sdev_model* m);

/* ---- leave-one-out evaluation ---- */

typedef enum sdev_metric {
    SDEV_METRIC_ACCURACY = 0,
    SDEV_METRIC_RECALL_NONE = 1,
    SDEV_METRIC_RECALL_CONTEXT = 2,
    SDEV_METRIC_RECALL_EVENT = 3,
    SDEV_METRIC_PRECISION_NONE = 4,
    SDEV_METRIC_PRECISION_CONTEXT = 5,
    SDEV_METRIC_PRECISION_EVENT = 6
} sdev_metric;

typedef enum sdev_report {
    SDEV_REPORT_FOLDS = 1,   /* folds.csv */
    SDEV_REPORT_SUMMARY = 2, /* summary.csv */
    SDEV_REPORT_TRENDS = 4,  /* trends.csv */
    SDEV_REPORT_ERRORS = 8,  /* errors.csv */
    SDEV_REPORT_ALL = 15
} sdev_report;

/* The cohort must outlive the evaluation. */
SDEV_API sdev_status sdev_evaluation_create(const sdev_cohort* c, const sdev_pipeline_options* opts, uint32_t jobs,
                                            sdev_evaluation** out);
/* Runs every fold at one rate and appends the results. */
SDEV_API sdev_status sdev_evaluation_run_rate(sdev_evaluation* e, double rate_hz);
SDEV_API size_t sdev_evaluation_rate_count(const sdev_evaluation* e);
SDEV_API sdev_status sdev_evaluation_metric_mean(const sdev_evaluation* e, size_t rate_index, sdev_metric metric,
                                                 double* out);
/* Fold-level value; SDEV_ERR_UNDEFINED for an empty class. */
SDEV_API sdev_status sdev_evaluation_fold_metric(const sdev_evaluation* e, size_t rate_index, size_t fold,
                                                 sdev_metric metric, double* out);
/* RarelyWrong, Untrained, CorrectlyTrained, Other. */
SDEV_API sdev_status sdev_evaluation_error_counts(const sdev_evaluation* e, size_t rate_index, uint64_t counts[4]);
SDEV_API sdev_status sdev_evaluation_trend(const sdev_evaluation* e, sdev_metric metric, double* tau, double* p_value,
                                           int* significant);
SDEV_API sdev_status sdev_evaluation_write(const sdev_evaluation* e, const char* dir, unsigned reports);
SDEV_API void sdev_evaluation_free(sdev_evaluation* e);

#ifdef __cplusplus
}
#endif

#endif
