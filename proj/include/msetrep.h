/*
 * msetrep C API: multiset algebra and simplex-constrained multiset
 * representation learning behind a plain C surface.
 *
 * Conventions:
 *   - Handles are opaque; every *_new/*_from_* call that returns a pointer
 *     returns NULL on failure, with the reason available from
 *     msr_last_error() (thread-local).
 *   - Functions returning int use 0 for success and a nonzero msr_status
 *     code for failure.
 *   - Strings returned through char** out-parameters are heap-allocated by
 *     the library; release them with msr_string_free().
 *   - The run entry points (msr_gen_data, msr_train, ...) take a JSON
 *     configuration document and, where applicable, return a JSON report.
 *     Field names mirror the CLI flags; see the project README.
 */
#ifndef MSETREP_H
#define MSETREP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum msr_status {
    MSR_OK = 0,
    MSR_ERR_INVALID_ARGUMENT = 1,
    MSR_ERR_IO = 2,
    MSR_ERR_NUMERIC = 3,
    MSR_ERR_CHECK_FAILED = 4,
    MSR_ERR_INTERNAL = 5
} msr_status;

/* Containment relation codes shared with the JSON reports. */
typedef enum msr_relation {
    MSR_RELATION_EQUAL = 0,
    MSR_RELATION_PROPER_SUBSET = 1,
    MSR_RELATION_PROPER_SUPERSET = 2,
    MSR_RELATION_INCOMPARABLE = 3,
    MSR_RELATION_ERROR = -1
} msr_relation;

const char* msr_version(void);

/* Message describing the most recent failure on this thread. */
const char* msr_last_error(void);

void msr_string_free(char* s);

/* ---- multiset algebra ------------------------------------------------- */

typedef struct msr_multiset msr_multiset;

msr_multiset* msr_multiset_new(void);
msr_multiset* msr_multiset_clone(const msr_multiset* m);
void msr_multiset_free(msr_multiset* m);

/* Accumulates multiplicity onto an element; rejects negative values. */
int msr_multiset_add(msr_multiset* m, int64_t element, double multiplicity);

double msr_multiset_multiplicity(const msr_multiset* m, int64_t element);
double msr_multiset_cardinality(const msr_multiset* m);
size_t msr_multiset_support_size(const msr_multiset* m);
/* 1 when every multiplicity is a whole number, else 0. */
int msr_multiset_integer_valued(const msr_multiset* m);

msr_multiset* msr_multiset_intersect(const msr_multiset* a, const msr_multiset* b);
msr_multiset* msr_multiset_union(const msr_multiset* a, const msr_multiset* b);
msr_multiset* msr_multiset_sum(const msr_multiset* a, const msr_multiset* b);
msr_multiset* msr_multiset_difference(const msr_multiset* a, const msr_multiset* b);
msr_multiset* msr_multiset_sym_difference(const msr_multiset* a, const msr_multiset* b);

msr_relation msr_multiset_relation(const msr_multiset* a, const msr_multiset* b);

/* Size-based containment decision from |A|, |B|, a predicted symmetric
 * difference size, and the decision margin tau. */
msr_relation msr_relation_from_sizes(double a, double b, double d_hat, double tau);

/* Text form: one "<element-id> <multiplicity>" line per element, sorted. */
int msr_multiset_to_text(const msr_multiset* m, char** out_text);
msr_multiset* msr_multiset_from_text(const char* text);

/* ---- experiment entry points ------------------------------------------ */

/* Writes synthetic train/eval pools as CSV plus a meta.json sidecar.
 * Config: {"k","d","n_train","n_eval","prototype_scale","noise_sigma",
 *          "seed","out_dir"} */
int msr_gen_data(const char* config_json);

/* Trains one model; writes the checkpoint and JSONL metrics; returns a JSON
 * summary {"config_hash","final_loss","checkpoint","iterations"}.
 * Config: {"data_dir","variant","head","task","rep_dim","hidden",
 *          "iterations","learning_rate","beta1","beta2","size_min",
 *          "size_max","seed","checkpoint","metrics"} */
int msr_train(const char* config_json, char** report_json);

/* Evaluates a checkpoint; returns the eval report as JSON.
 * Config: {"checkpoint","data_dir","size_min","size_max","pairs","seed",
 *          "containment","tau","dump_reps","metrics"} */
int msr_eval(const char* config_json, char** report_json);

/* Trains matched and cross-wired twins and compares their errors.
 * Config: train fields plus {"eval_pairs","eval_seed"}. */
int msr_cross_wire(const char* config_json, char** report_json);

/* Random clustering instances: builds and verifies the n-1 query
 * certificates and runs adaptive recovery.
 * Config: {"n","k","instances","seed"} */
int msr_cluster_demo(const char* config_json, char** report_json);

/* Runs the full module invariant sweep; MSR_OK only if every check passes.
 * The report lists one entry per check. */
int msr_selfcheck(char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* MSETREP_H */
