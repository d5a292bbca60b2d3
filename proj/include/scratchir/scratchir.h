/* Copyright 2026 the scratch-ir authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
 * with the License. You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software distributed under the License
 * is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
 * or implied. See the License for the specific language governing permissions and limitations under the License.
 */

/* C interface to the scratch-ir core. All functions return sir_status;
 * on failure sir_last_error() holds a message for the calling thread.
 * Strings returned through char** are owned by the library and must be
 * released with sir_string_free().
 */

#ifndef SCRATCHIR_SCRATCHIR_H_
#define SCRATCHIR_SCRATCHIR_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sir_status {
    SIR_OK = 0,
    SIR_ERR_CONFIG = 2,  /* bad configuration or arguments */
    SIR_ERR_DATA = 3,    /* bad or inconsistent input data */
    SIR_ERR_NUMERIC = 4, /* numeric failure (non-finite loss, ...) */
    SIR_ERR_IO = 5,      /* file system failure */
    SIR_ERR_STATE = 6    /* locked directory, existing outputs, ... */
} sir_status;

const char* sir_last_error(void);
const char* sir_version(void);

/* ---- stage operations: file paths in, file paths out ---- */

/* spec_json may be a path to a JSON file or inline JSON text. */
sir_status sir_generate_synthetic(const char* spec_json, const char* out_dir);

sir_status sir_train_tokenizer(const char* corpus_tsv, int32_t vocab_size, uint64_t seed, const char* out_vocab);

/* mode: "mlm" | "mlm-flops". config holds {"encoder": {...}, "pretrain": {...}}.
 * extra_corpus_tsv may be NULL (the paper's recipe appends training queries). */
sir_status sir_pretrain(const char* mode, const char* config_json, const char* corpus_tsv,
                        const char* extra_corpus_tsv, const char* vocab_path, const char* out_checkpoint,
                        const char* out_loss_csv);

/* kind: "sparse" | "dense" | "cross". config holds {"finetune": {...}}. */
sir_status sir_finetune(const char* kind, const char* config_json, const char* checkpoint, const char* vocab_path,
                        const char* collection_tsv, const char* queries_tsv, const char* triplets_tsv,
                        const char* out_checkpoint, const char* out_loss_csv);

/* Sparse checkpoints build an inverted index; dense ones a vector file. */
sir_status sir_build_index(const char* checkpoint, const char* vocab_path, const char* collection_tsv,
                           int32_t max_len, const char* out_index);

sir_status sir_search(const char* checkpoint, const char* vocab_path, const char* index_path,
                      const char* queries_tsv, int32_t max_len, int32_t k, const char* run_tag, const char* out_run);

sir_status sir_rerank(const char* checkpoint, const char* vocab_path, const char* collection_tsv,
                      const char* queries_tsv, const char* run_path, int32_t max_len, int32_t depth,
                      const char* run_tag, const char* out_run);

/* metrics_csv e.g. "mrr@10,ndcg@10,recall@1000"; rflops < 0 omits it. */
sir_status sir_evaluate(const char* run_path, const char* qrels_path, const char* metrics_csv, double rflops,
                        const char* out_json);

/* R-FLOPS sidecar written by sir_search next to a sparse run; -1 if absent. */
sir_status sir_read_rflops(const char* run_path, double* out_rflops);

/* Runs may be run files or experiment directories. names may be NULL.
 * out_table (optional) receives the rendered comparison table. */
sir_status sir_compare(const char* const* runs, int32_t num_runs, const char* const* names, const char* qrels_path,
                       const char* metric, double alpha, const char* out_json, char** out_table);

/* skip_stages_csv: comma-separated subset of
 * tokenizer,pretrain,finetune,index,search,eval (or NULL).
 * out_report_path (optional) receives the metric report location. */
sir_status sir_run_pipeline(const char* config_path, int force, const char* skip_stages_csv, char** out_report_path);

/* ---- opaque handles ---- */

typedef struct sir_vocab sir_vocab;
typedef struct sir_model sir_model;
typedef struct sir_index sir_index;

sir_status sir_vocab_load(const char* path, sir_vocab** out);
void sir_vocab_free(sir_vocab* vocab);
int32_t sir_vocab_size(const sir_vocab* vocab);
sir_status sir_vocab_encode(const sir_vocab* vocab, const char* text, int32_t max_len, int32_t* out_ids,
                            int32_t capacity, int32_t* out_len);
sir_status sir_vocab_decode(const sir_vocab* vocab, const int32_t* ids, int32_t len, char** out_text);

sir_status sir_model_load(const char* path, sir_model** out);
void sir_model_free(sir_model* model);
/* "pretrained" | "sparse" | "dense" | "cross" */
const char* sir_model_kind(const sir_model* model);
sir_status sir_model_encode_sparse(const sir_model* model, const sir_vocab* vocab, const char* text, int32_t max_len,
                                   int32_t* out_terms, float* out_weights, int32_t capacity, int32_t* out_nnz);
sir_status sir_model_encode_dense(const sir_model* model, const sir_vocab* vocab, const char* text, int32_t max_len,
                                  float* out_values, int32_t capacity, int32_t* out_dim);
sir_status sir_model_cross_score(const sir_model* model, const sir_vocab* vocab, const char* query_text,
                                 const char* doc_text, int32_t max_len, double* out_score);

sir_status sir_index_load(const char* path, sir_index** out);
void sir_index_free(sir_index* index);
int64_t sir_index_doc_count(const sir_index* index);
/* top-k by dot product; out_doc_ids/out_scores are parallel arrays of
 * length *out_count, released with sir_search_results_free. */
sir_status sir_index_search(const sir_index* index, const int32_t* terms, const float* weights, int32_t nnz,
                            int32_t k, char*** out_doc_ids, double** out_scores, int32_t* out_count);
void sir_search_results_free(char** doc_ids, double* scores, int32_t count);

void sir_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SCRATCHIR_SCRATCHIR_H_ */
