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

// Command-line front end. Talks to the core exclusively through the C
// API in scratchir.h; exit codes are 0 ok, 2 config, 3 data, 4 numeric.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scratchir/scratchir.h"

namespace {

int exit_code(sir_status status) {
    switch (status) {
        case SIR_OK: return 0;
        case SIR_ERR_CONFIG: return 2;
        case SIR_ERR_DATA: return 3;
        case SIR_ERR_NUMERIC: return 4;
        case SIR_ERR_IO: return 3;
        case SIR_ERR_STATE: return 2;
    }
    return 1;
}

int finish(sir_status status) {
    if (status != SIR_OK) {
        std::fprintf(stderr, "error: %s\n", sir_last_error());
    }
    return exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scratch-ir: train retrieval encoders from scratch and evaluate them"};
    app.require_subcommand(1);

    // generate-synthetic
    std::string spec_json = "{}";
    std::string synth_out;
    auto* synth = app.add_subcommand("generate-synthetic", "Generate a seeded synthetic retrieval task");
    synth->add_option("--spec", spec_json, "Synthetic spec (JSON file or inline JSON)");
    synth->add_option("--out", synth_out, "Output directory")->required();

    // train-tokenizer
    std::string tok_corpus, tok_out;
    int tok_vocab_size = 32000;
    uint64_t tok_seed = 0;
    auto* tok = app.add_subcommand("train-tokenizer", "Train a wordpiece vocabulary");
    tok->add_option("--corpus", tok_corpus, "Corpus TSV (id \\t text)")->required();
    tok->add_option("--vocab-size", tok_vocab_size, "Vocabulary size (default 32000)");
    tok->add_option("--seed", tok_seed, "Seed");
    tok->add_option("--out", tok_out, "Output vocab file")->required();

    // pretrain
    std::string pre_mode = "mlm-flops", pre_config, pre_corpus, pre_extra, pre_vocab, pre_out, pre_log;
    auto* pre = app.add_subcommand("pretrain", "MLM / MLM+FLOPS pretraining from scratch");
    pre->add_option("--mode", pre_mode, "mlm or mlm-flops");
    pre->add_option("--config", pre_config, "JSON with encoder and pretrain sections")->required();
    pre->add_option("--corpus", pre_corpus, "Collection TSV")->required();
    pre->add_option("--extra-corpus", pre_extra, "Second corpus TSV (e.g. training queries)");
    pre->add_option("--vocab", pre_vocab, "Vocab file")->required();
    pre->add_option("--out", pre_out, "Output checkpoint")->required();
    pre->add_option("--loss-log", pre_log, "Loss log CSV path");

    // finetune
    std::string ft_kind, ft_config = "{}", ft_ckpt, ft_vocab, ft_collection, ft_queries, ft_triplets, ft_out, ft_log;
    auto* ft = app.add_subcommand("finetune", "Contrastive finetuning (sparse, dense or cross)");
    ft->add_option("--kind", ft_kind, "sparse, dense or cross")->required();
    ft->add_option("--config", ft_config, "JSON with a finetune section");
    ft->add_option("--ckpt", ft_ckpt, "Pretrained checkpoint")->required();
    ft->add_option("--vocab", ft_vocab, "Vocab file")->required();
    ft->add_option("--collection", ft_collection, "Collection TSV")->required();
    ft->add_option("--queries", ft_queries, "Training queries TSV")->required();
    ft->add_option("--triplets", ft_triplets, "Triplets TSV")->required();
    ft->add_option("--out", ft_out, "Output checkpoint")->required();
    ft->add_option("--loss-log", ft_log, "Loss log CSV path");

    // index
    std::string ix_ckpt, ix_vocab, ix_collection, ix_out;
    int ix_max_len = 256;
    auto* ix = app.add_subcommand("index", "Encode a collection and build the index");
    ix->add_option("--ckpt", ix_ckpt, "Finetuned checkpoint")->required();
    ix->add_option("--vocab", ix_vocab, "Vocab file")->required();
    ix->add_option("--collection", ix_collection, "Collection TSV")->required();
    ix->add_option("--max-len", ix_max_len, "Truncation length");
    ix->add_option("--out", ix_out, "Output index file")->required();

    // search (also covers cross-encoder reranking of an existing run)
    std::string se_ckpt, se_vocab, se_index, se_queries, se_out, se_tag = "scratch-ir";
    std::string se_rerank_run, se_collection;
    int se_max_len = 256, se_k = 1000, se_depth = 20;
    auto* se = app.add_subcommand("search", "Retrieve top-k (bi-encoders) or rerank a run (cross)");
    se->add_option("--ckpt", se_ckpt, "Checkpoint")->required();
    se->add_option("--vocab", se_vocab, "Vocab file")->required();
    se->add_option("--index", se_index, "Index file (bi-encoder search)");
    se->add_option("--queries", se_queries, "Queries TSV")->required();
    se->add_option("--max-len", se_max_len, "Truncation length");
    se->add_option("-k,--top-k", se_k, "Hits per query");
    se->add_option("--tag", se_tag, "Run tag");
    se->add_option("--rerank-run", se_rerank_run, "Existing run to rerank (cross checkpoints)");
    se->add_option("--rerank-depth", se_depth, "How deep to rerank");
    se->add_option("--collection", se_collection, "Collection TSV (needed for reranking)");
    se->add_option("--out", se_out, "Output run file")->required();

    // evaluate
    std::string ev_run, ev_qrels, ev_metrics = "mrr@10,ndcg@10,recall@1000", ev_out;
    bool ev_rflops = false;
    auto* ev = app.add_subcommand("evaluate", "Score a run against qrels");
    ev->add_option("--run", ev_run, "Run file")->required();
    ev->add_option("--qrels", ev_qrels, "Qrels file")->required();
    ev->add_option("--metrics", ev_metrics, "Comma-separated metric@k list");
    ev->add_flag("--with-rflops", ev_rflops, "Attach the R-FLOPS sidecar written by search");
    ev->add_option("--out", ev_out, "Output report JSON")->required();

    // compare
    std::vector<std::string> cm_runs, cm_names;
    std::string cm_qrels, cm_metric = "mrr@10", cm_out;
    double cm_alpha = 0.05;
    auto* cm = app.add_subcommand("compare", "Significance matrix across runs (paired t-test, Bonferroni)");
    cm->add_option("runs", cm_runs, "Run files or experiment directories")->required()->expected(-2);
    cm->add_option("--names", cm_names, "Display names, one per run");
    cm->add_option("--qrels", cm_qrels, "Qrels file")->required();
    cm->add_option("--metric", cm_metric, "Metric@k to compare on");
    cm->add_option("--alpha", cm_alpha, "Significance level");
    cm->add_option("--out", cm_out, "Output JSON path");

    // run-pipeline
    std::string pl_config;
    bool pl_force = false;
    std::vector<std::string> pl_skip;
    auto* pl = app.add_subcommand("run-pipeline", "Full experiment from one config file");
    pl->add_option("--config", pl_config, "Pipeline config JSON")->required();
    pl->add_flag("--force", pl_force, "Overwrite existing stage outputs");
    pl->add_option("--skip", pl_skip, "Stages to skip (tokenizer,pretrain,finetune,index,search,eval)");

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        return finish(sir_generate_synthetic(spec_json.c_str(), synth_out.c_str()));
    }
    if (tok->parsed()) {
        return finish(sir_train_tokenizer(tok_corpus.c_str(), tok_vocab_size, tok_seed, tok_out.c_str()));
    }
    if (pre->parsed()) {
        if (pre_log.empty()) {
            pre_log = pre_out + ".loss.csv";
        }
        return finish(sir_pretrain(pre_mode.c_str(), pre_config.c_str(), pre_corpus.c_str(),
                                   pre_extra.empty() ? nullptr : pre_extra.c_str(), pre_vocab.c_str(),
                                   pre_out.c_str(), pre_log.c_str()));
    }
    if (ft->parsed()) {
        return finish(sir_finetune(ft_kind.c_str(), ft_config.c_str(), ft_ckpt.c_str(), ft_vocab.c_str(),
                                   ft_collection.c_str(), ft_queries.c_str(), ft_triplets.c_str(), ft_out.c_str(),
                                   ft_log.empty() ? nullptr : ft_log.c_str()));
    }
    if (ix->parsed()) {
        return finish(sir_build_index(ix_ckpt.c_str(), ix_vocab.c_str(), ix_collection.c_str(), ix_max_len,
                                      ix_out.c_str()));
    }
    if (se->parsed()) {
        if (!se_rerank_run.empty()) {
            if (se_collection.empty()) {
                std::fprintf(stderr, "error: --rerank-run requires --collection\n");
                return 2;
            }
            return finish(sir_rerank(se_ckpt.c_str(), se_vocab.c_str(), se_collection.c_str(), se_queries.c_str(),
                                     se_rerank_run.c_str(), se_max_len, se_depth, se_tag.c_str(), se_out.c_str()));
        }
        if (se_index.empty()) {
            std::fprintf(stderr, "error: search needs --index (or --rerank-run for cross checkpoints)\n");
            return 2;
        }
        return finish(sir_search(se_ckpt.c_str(), se_vocab.c_str(), se_index.c_str(), se_queries.c_str(), se_max_len,
                                 se_k, se_tag.c_str(), se_out.c_str()));
    }
    if (ev->parsed()) {
        double rflops = -1.0;
        if (ev_rflops) {
            sir_status st = sir_read_rflops(ev_run.c_str(), &rflops);
            if (st != SIR_OK) {
                return finish(st);
            }
        }
        return finish(sir_evaluate(ev_run.c_str(), ev_qrels.c_str(), ev_metrics.c_str(), rflops, ev_out.c_str()));
    }
    if (cm->parsed()) {
        std::vector<const char*> run_ptrs, name_ptrs;
        for (const auto& r : cm_runs) {
            run_ptrs.push_back(r.c_str());
        }
        for (const auto& n : cm_names) {
            name_ptrs.push_back(n.c_str());
        }
        if (!cm_names.empty() && cm_names.size() != cm_runs.size()) {
            std::fprintf(stderr, "error: --names must match the number of runs\n");
            return 2;
        }
        char* table = nullptr;
        sir_status st = sir_compare(run_ptrs.data(), static_cast<int32_t>(run_ptrs.size()),
                                    cm_names.empty() ? nullptr : name_ptrs.data(), cm_qrels.c_str(),
                                    cm_metric.c_str(), cm_alpha, cm_out.empty() ? nullptr : cm_out.c_str(), &table);
        if (st == SIR_OK && table != nullptr) {
            std::fputs(table, stdout);
        }
        sir_string_free(table);
        return finish(st);
    }
    if (pl->parsed()) {
        std::string skip_csv;
        for (size_t i = 0; i < pl_skip.size(); ++i) {
            if (i > 0) {
                skip_csv += ',';
            }
            skip_csv += pl_skip[i];
        }
        char* report = nullptr;
        sir_status st = sir_run_pipeline(pl_config.c_str(), pl_force ? 1 : 0,
                                         skip_csv.empty() ? nullptr : skip_csv.c_str(), &report);
        if (st == SIR_OK && report != nullptr) {
            std::printf("report: %s\n", report);
        }
        sir_string_free(report);
        return finish(st);
    }
    return 1;
}
