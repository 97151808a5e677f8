/*
 * aerje — joint API entity and relation extraction from software text.
 *
 * C interface to the extraction pipeline: corpus ingestion and filtering,
 * gold dataset handling, data augmentation, SEL encoding/decoding, prompt
 * construction, classifier and extractor training, evaluation and the
 * experiment harnesses.
 *
 * Conventions:
 *   - Every fallible call returns aerje_status; AERJE_OK is 0.
 *   - On failure, aerje_last_error() holds a message for the calling thread.
 *   - Output strings (char**) are heap-allocated; release them with
 *     aerje_string_free(). They are UTF-8 and, where noted, JSON.
 *   - Opaque handles are created and released with their _open/_free pairs.
 */
#ifndef AERJE_H
#define AERJE_H

#include <stdint.h>

#if defined(_WIN32)
#define AERJE_API __declspec(dllexport)
#else
#define AERJE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum aerje_status {
  AERJE_OK = 0,
  AERJE_ERR_INVALID_ARG = 1,
  AERJE_ERR_IO = 2,
  AERJE_ERR_PARSE = 3,
  AERJE_ERR_STATE = 4,
  AERJE_ERR_INTERNAL = 5
} aerje_status;

AERJE_API const char* aerje_version(void);
AERJE_API const char* aerje_last_error(void);
AERJE_API void aerje_string_free(char* s);

typedef struct aerje_inventory aerje_inventory;
typedef struct aerje_classifier aerje_classifier;
typedef struct aerje_adapter aerje_adapter;

/* ---- SEL codec ----------------------------------------------------------
 * Records travel as JSON: {"entities":[{"surface","start","end"}],
 * "relations":[{"head_surface","head_start","relation","tail_surface",
 * "tail_start"}]}; offsets may be omitted or -1 when unknown.
 */
AERJE_API aerje_status aerje_sel_encode(const char* record_json, char** out_sel);
AERJE_API aerje_status aerje_sel_decode(const char* sel_text, const char* sentence_text,
                                        char** out_record_json);
AERJE_API aerje_status aerje_sel_validate(const char* sel_text, char** out_diagnostics_json);

/* ---- Prompts ------------------------------------------------------------ */
AERJE_API aerje_status aerje_prompt_static(const char* text, char** out_prompt);
AERJE_API aerje_status aerje_prompt_dynamic(const aerje_classifier* classifier, const char* text,
                                            int top_n, char** out_prompt);

/* ---- API inventory and candidate filter --------------------------------- */
AERJE_API aerje_status aerje_inventory_load(const char* path, aerje_inventory** out);
AERJE_API void aerje_inventory_free(aerje_inventory* inv);
AERJE_API aerje_status aerje_judge_token(const aerje_inventory* inv, const char* token_surface,
                                         char** out_verdict_json);
AERJE_API aerje_status aerje_filter_file(const aerje_inventory* inv, const char* sentences_path,
                                         const char* out_path, char** out_stats_json);

/* ---- Corpus pipeline (file based) ----------------------------------------
 * ingest options JSON: {"tag","keep_inline_code","sample_posts","seed"}.
 * augment options JSON: {"combined"}.
 */
AERJE_API aerje_status aerje_ingest_file(const char* posts_path, const char* options_json,
                                         const char* out_sentences_path, char** out_stats_json);
AERJE_API aerje_status aerje_split_file(const char* gold_path, double train_ratio, uint64_t seed,
                                        const char* train_out_path, const char* test_out_path,
                                        char** out_stats_json);
AERJE_API aerje_status aerje_augment_file(const char* gold_path, const char* synonyms_path,
                                          const char* options_json, const char* out_path,
                                          char** out_stats_json);
AERJE_API aerje_status aerje_kshot_sample_file(const char* train_path, int k, uint64_t seed,
                                               const char* out_path, char** out_stats_json);

/* ---- Relation classifier -------------------------------------------------
 * spec is "keyword" or a checkpoint directory written by training.
 */
AERJE_API aerje_status aerje_train_classifier(const char* train_path, const char* config_json,
                                              const char* model_dir, char** out_metrics_json);
AERJE_API aerje_status aerje_classifier_open(const char* spec, aerje_classifier** out);
AERJE_API void aerje_classifier_free(aerje_classifier* c);
AERJE_API aerje_status aerje_classifier_predict_topn(const aerje_classifier* c, const char* text,
                                                     int n, char** out_json);

/* ---- Joint extractor ------------------------------------------------------
 * train config JSON: {"backbone_name","prompt_mode","top_n","classifier_spec",
 * "epochs","batch_size","learning_rate","warmup_fraction","seed",
 * "max_input_tokens","max_output_tokens","beam_size"}.
 */
AERJE_API aerje_status aerje_train_extractor(const char* train_path, const char* config_json,
                                             const char* model_dir, char** out_metrics_json);
AERJE_API aerje_status aerje_adapter_open(const char* dir, aerje_adapter** out);
AERJE_API void aerje_adapter_free(aerje_adapter* a);
AERJE_API aerje_status aerje_generate_sel(aerje_adapter* a, const char* prompt, char** out_json);
/* extract options JSON: {"prompt_mode","top_n"}; classifier may be NULL for
 * static mode. */
AERJE_API aerje_status aerje_extract_file(aerje_adapter* a, const aerje_classifier* classifier,
                                          const char* options_json, const char* sentences_path,
                                          const char* out_predictions_path,
                                          char** out_stats_json);

/* ---- Evaluation and experiments ------------------------------------------ */
AERJE_API aerje_status aerje_evaluate_file(const char* gold_path, const char* predictions_path,
                                           char** out_report_json);
/* rq in [1,5]; config JSON mirrors the experiment config plus
 * {"data":{"initial_train","final_train","final_test"}} paths. */
AERJE_API aerje_status aerje_run_rq(int rq, const char* config_json, const char* out_dir,
                                    char** out_table_json);
AERJE_API aerje_status aerje_plot_table(const char* table_json, const char* out_svg_path);

#ifdef __cplusplus
}
#endif

#endif /* AERJE_H */
