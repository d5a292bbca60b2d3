// Copyright 2026 the scratch-ir authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scratchir/data.hpp"
#include "scratchir/encoder.hpp"
#include "scratchir/finetune.hpp"
#include "scratchir/pretrain.hpp"

namespace scratchir {

struct FinetuneSection {
    std::string kind;  // sparse | dense | cross
    FinetuneConfig config;
};

struct EvalSection {
    std::vector<std::string> metrics = {"mrr@10", "ndcg@10", "recall@1000"};
    double alpha = 0.05;
    int search_k = 1000;
    int rerank_depth = 20;
    std::string run_tag = "scratch-ir";
};

/// Versioned experiment configuration. Parsing is strict: unknown keys
/// anywhere are configuration errors. Per-stage seeds default to values
/// derived from the global seed.
struct PipelineConfig {
    uint64_t seed = 42;
    struct Paths {
        std::string collection;
        std::string queries;       // training queries
        std::string queries_test;
        std::string qrels_test;
        std::string triplets;
        std::string output_dir;
    } paths;
    int tokenizer_vocab_size = 1200;
    uint64_t tokenizer_seed = 0;
    EncoderConfig encoder;
    PretrainMode pretrain_mode = PretrainMode::MlmFlops;
    PretrainConfig pretrain;
    FinetuneSection finetune;
    std::optional<FinetuneSection> first_stage;  // required when finetune.kind == "cross"
    EvalSection eval;
};

PipelineConfig parse_pipeline_config(const std::string& json_text);

// strict single-section parsers, shared by the pipeline and the CLI
// stage commands ({"encoder": {...}} / {"pretrain": {...}} / ...)
EncoderConfig parse_encoder_section(const std::string& json_text, uint64_t default_seed);
PretrainConfig parse_pretrain_section(const std::string& json_text, uint64_t default_seed);
FinetuneConfig parse_finetune_section(const std::string& json_text, const std::string& kind, uint64_t default_seed);

// ---- stage-level operations (file paths in, file paths out) ----

void stage_train_tokenizer(const std::vector<std::string>& corpus_tsvs, int vocab_size, uint64_t seed,
                           const std::string& out_vocab);

/// config_json holds {"encoder": {...}, "pretrain": {...}}.
void stage_pretrain(const std::string& mode, const std::string& config_json,
                    const std::vector<std::string>& corpus_tsvs, const std::string& vocab_path,
                    const std::string& out_checkpoint, const std::string& out_loss_csv);

/// config_json holds {"finetune": {...}}.
void stage_finetune(const std::string& kind, const std::string& config_json, const std::string& checkpoint,
                    const std::string& vocab_path, const std::string& collection_tsv, const std::string& queries_tsv,
                    const std::string& triplets_tsv, const std::string& out_checkpoint,
                    const std::string& out_loss_csv);

/// Dispatches on the checkpoint's trained_as: sparse checkpoints build
/// an inverted index, dense ones a dense matrix file.
void stage_build_index(const std::string& checkpoint, const std::string& vocab_path,
                       const std::string& collection_tsv, int max_len, const std::string& out_index);

/// First-stage retrieval. Sparse indices also get an R-FLOPS estimate
/// written to <out_run>.rflops.json.
void stage_search(const std::string& checkpoint, const std::string& vocab_path, const std::string& index_path,
                  const std::string& queries_tsv, int max_len, int k, const std::string& run_tag,
                  const std::string& out_run);

/// Cross-encoder reranking of an existing run's top `depth` hits.
void stage_rerank(const std::string& checkpoint, const std::string& vocab_path, const std::string& collection_tsv,
                  const std::string& queries_tsv, const std::string& run_path, int max_len, int depth,
                  const std::string& run_tag, const std::string& out_run);

/// metrics joined by commas, e.g. "mrr@10,ndcg@10,recall@1000";
/// rflops < 0 omits the field.
void stage_evaluate(const std::string& run_path, const std::string& qrels_path, const std::string& metrics_csv,
                    double rflops, const std::string& out_json);

double read_rflops_sidecar(const std::string& run_path);  // -1 when absent

/// Full experiment under paths.output_dir. Skippable stage names:
/// tokenizer, pretrain, finetune, index, search, eval. Returns the path
/// of the metric report.
std::string run_pipeline(const PipelineConfig& config, bool force, const std::set<std::string>& skip_stages);
std::string run_pipeline_file(const std::string& config_path, bool force, const std::set<std::string>& skip_stages);

struct CompareResult {
    std::string table;  // rendered text table with superscripts
    std::string json;
};

/// Runs may be given as run files or experiment directories (the
/// directory form reads <dir>/search/run.trec).
CompareResult compare_runs(const std::vector<std::string>& runs, const std::vector<std::string>& names,
                           const std::string& qrels_path, const std::string& metric, double alpha);

}  // namespace scratchir
