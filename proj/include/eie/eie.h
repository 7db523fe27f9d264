/*
 * C API for the EIE follow-up chest X-ray summary generator.
 *
 * All functions return eie_status; on failure eie_last_error() holds a
 * thread-local description. Objects returned through out-parameters are
 * owned by the caller and released with the matching close/free function.
 * Strings returned as char* are heap-allocated; free them with
 * eie_string_free().
 */
#ifndef EIE_H
#define EIE_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum eie_status {
  EIE_OK = 0,
  EIE_ERR_USAGE = 2,
  EIE_ERR_IO = 3,
  EIE_ERR_DATA = 4,
  EIE_ERR_NUMERIC = 5,
  EIE_ERR_INTERNAL = 6
} eie_status;

const char* eie_version(void);
const char* eie_last_error(void);
void eie_string_free(char* s);

typedef struct eie_dataset eie_dataset;
typedef struct eie_checkpoint eie_checkpoint;

/*
 * Synthetic dataset generation. config_json keys (all optional except
 * num_records): num_records, guidance_dim, noise, informativeness, seed,
 * feature_tokens, feature_dim, max_facts. Writes dataset.jsonl plus .eiet
 * feature sidecars under out_dir.
 */
eie_status eie_synth(const char* config_json, const char* out_dir);

eie_status eie_dataset_open(const char* path, eie_dataset** out);
void eie_dataset_close(eie_dataset* ds);
int eie_dataset_size(const eie_dataset* ds);
int eie_dataset_guidance_dim(const eie_dataset* ds);
/* half-open record range [begin, end) as a new dataset handle */
eie_status eie_dataset_slice(const eie_dataset* ds, int begin, int end, eie_dataset** out);

/*
 * Training. config_json: {"model": {...}, "train": {...}}; model keys follow
 * the model configuration (hidden_dim, num_heads, ...), train keys the
 * training configuration (variant, alpha, beta, guidance_mode,
 * guidance_threshold, lr, total_iterations, batch_size, seed, mask_rate,
 * checkpoint_every). Writes loss.csv and checkpoints under out_dir; the
 * final checkpoint directory is returned through final_ckpt_dir.
 * resume_from may be NULL for a fresh run.
 */
eie_status eie_train(const eie_dataset* ds, const char* config_json, const char* resume_from,
                     const char* out_dir, char** final_ckpt_dir);

eie_status eie_checkpoint_open(const char* dir, eie_checkpoint** out);
void eie_checkpoint_close(eie_checkpoint* ck);
/* echo of the training configuration stored in the checkpoint, as json */
char* eie_checkpoint_train_config(const eie_checkpoint* ck);

/*
 * Decoding. decode_json keys: strategy ("greedy"|"beam"), beam_width,
 * max_len, guidance ("default"|"off"|"soft"|"hard"), threshold, threads.
 * "default" resolves from the checkpoint's trained variant. Writes
 * {"id", "hypothesis", "reference"} JSONL. Records that fail are logged and
 * skipped; their count is returned through failed (may be NULL).
 */
eie_status eie_generate_corpus(const eie_checkpoint* ck, const eie_dataset* ds,
                               const char* decode_json, const char* out_jsonl, int* failed);
eie_status eie_generate_one(const eie_checkpoint* ck, const eie_dataset* ds, int index,
                            const char* decode_json, char** text_out);

/*
 * Metric report over a hypothesis JSONL (as written by eie_generate_corpus).
 * rules_path NULL selects the built-in observation rule table. The report
 * json carries bleu1..4, meteor, rouge_l, cider, acc5, acc14 and counts.
 */
eie_status eie_eval_files(const char* hyp_jsonl, const char* rules_path, char** report_json);

/*
 * Finite-difference gradient suite over every primitive op and the composed
 * model. Returns EIE_ERR_NUMERIC when any check fails; report_json lists
 * every check with its maximum relative error and tolerance.
 */
eie_status eie_gradcheck(unsigned long long seed, double eps, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* EIE_H */
