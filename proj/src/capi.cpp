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

#include "scratchir/scratchir.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "scratchir/data.hpp"
#include "scratchir/inverted_index.hpp"
#include "scratchir/io.hpp"
#include "scratchir/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

sir_status status_of(const scratchir::Error& e) {
    switch (e.code()) {
        case scratchir::ErrorCode::Config: return SIR_ERR_CONFIG;
        case scratchir::ErrorCode::Data: return SIR_ERR_DATA;
        case scratchir::ErrorCode::Numeric: return SIR_ERR_NUMERIC;
        case scratchir::ErrorCode::Io: return SIR_ERR_IO;
        case scratchir::ErrorCode::State: return SIR_ERR_STATE;
    }
    return SIR_ERR_STATE;
}

template <typename Fn>
sir_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return SIR_OK;
    } catch (const scratchir::Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SIR_ERR_STATE;
    } catch (...) {
        g_last_error = "unknown error";
        return SIR_ERR_STATE;
    }
}

template <typename T>
T* require(T* arg, const char* name) {
    if (arg == nullptr) {
        scratchir::throw_config(std::string(name) + " must not be NULL");
    }
    return arg;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::set<std::string> split_csv(const char* csv) {
    std::set<std::string> out;
    if (csv == nullptr) {
        return out;
    }
    std::string s = csv;
    size_t start = 0;
    while (start <= s.size()) {
        size_t comma = s.find(',', start);
        if (comma == std::string::npos) {
            comma = s.size();
        }
        if (comma > start) {
            out.insert(s.substr(start, comma - start));
        }
        start = comma + 1;
    }
    return out;
}

}  // namespace

struct sir_vocab {
    scratchir::Vocab impl;
};

struct sir_model {
    scratchir::EncoderModel<float> impl;
    std::string kind;
};

struct sir_index {
    scratchir::InvertedIndex impl;
};

extern "C" {

const char* sir_last_error(void) { return g_last_error.c_str(); }

const char* sir_version(void) { return "scratch-ir 1.0.0"; }

sir_status sir_generate_synthetic(const char* spec_json, const char* out_dir) {
    return guarded([&] {
        require(spec_json, "spec_json");
        require(out_dir, "out_dir");
        std::string text = spec_json;
        if (scratchir::file_exists(text)) {
            text = scratchir::read_file(text);
        }
        scratchir::SyntheticSpec spec = scratchir::synthetic_spec_from_json(text);
        scratchir::write_synthetic(scratchir::generate_synthetic(spec), out_dir);
    });
}

sir_status sir_train_tokenizer(const char* corpus_tsv, int32_t vocab_size, uint64_t seed, const char* out_vocab) {
    return guarded([&] {
        scratchir::stage_train_tokenizer({require(corpus_tsv, "corpus_tsv")}, vocab_size, seed,
                                         require(out_vocab, "out_vocab"));
    });
}

sir_status sir_pretrain(const char* mode, const char* config_json, const char* corpus_tsv,
                        const char* extra_corpus_tsv, const char* vocab_path, const char* out_checkpoint,
                        const char* out_loss_csv) {
    return guarded([&] {
        std::string config = require(config_json, "config_json");
        if (scratchir::file_exists(config)) {
            config = scratchir::read_file(config);
        }
        std::vector<std::string> corpora = {require(corpus_tsv, "corpus_tsv")};
        if (extra_corpus_tsv != nullptr) {
            corpora.emplace_back(extra_corpus_tsv);
        }
        scratchir::stage_pretrain(require(mode, "mode"), config, corpora, require(vocab_path, "vocab_path"),
                                  require(out_checkpoint, "out_checkpoint"),
                                  require(out_loss_csv, "out_loss_csv"));
    });
}

sir_status sir_finetune(const char* kind, const char* config_json, const char* checkpoint, const char* vocab_path,
                        const char* collection_tsv, const char* queries_tsv, const char* triplets_tsv,
                        const char* out_checkpoint, const char* out_loss_csv) {
    return guarded([&] {
        std::string config = require(config_json, "config_json");
        if (scratchir::file_exists(config)) {
            config = scratchir::read_file(config);
        }
        scratchir::stage_finetune(require(kind, "kind"), config, require(checkpoint, "checkpoint"),
                                  require(vocab_path, "vocab_path"), require(collection_tsv, "collection_tsv"),
                                  require(queries_tsv, "queries_tsv"), require(triplets_tsv, "triplets_tsv"),
                                  require(out_checkpoint, "out_checkpoint"),
                                  out_loss_csv == nullptr ? std::string() : out_loss_csv);
    });
}

sir_status sir_build_index(const char* checkpoint, const char* vocab_path, const char* collection_tsv,
                           int32_t max_len, const char* out_index) {
    return guarded([&] {
        scratchir::stage_build_index(require(checkpoint, "checkpoint"), require(vocab_path, "vocab_path"),
                                     require(collection_tsv, "collection_tsv"), max_len,
                                     require(out_index, "out_index"));
    });
}

sir_status sir_search(const char* checkpoint, const char* vocab_path, const char* index_path,
                      const char* queries_tsv, int32_t max_len, int32_t k, const char* run_tag,
                      const char* out_run) {
    return guarded([&] {
        scratchir::stage_search(require(checkpoint, "checkpoint"), require(vocab_path, "vocab_path"),
                                require(index_path, "index_path"), require(queries_tsv, "queries_tsv"), max_len, k,
                                require(run_tag, "run_tag"), require(out_run, "out_run"));
    });
}

sir_status sir_rerank(const char* checkpoint, const char* vocab_path, const char* collection_tsv,
                      const char* queries_tsv, const char* run_path, int32_t max_len, int32_t depth,
                      const char* run_tag, const char* out_run) {
    return guarded([&] {
        scratchir::stage_rerank(require(checkpoint, "checkpoint"), require(vocab_path, "vocab_path"),
                                require(collection_tsv, "collection_tsv"), require(queries_tsv, "queries_tsv"),
                                require(run_path, "run_path"), max_len, depth, require(run_tag, "run_tag"),
                                require(out_run, "out_run"));
    });
}

sir_status sir_evaluate(const char* run_path, const char* qrels_path, const char* metrics_csv, double rflops,
                        const char* out_json) {
    return guarded([&] {
        scratchir::stage_evaluate(require(run_path, "run_path"), require(qrels_path, "qrels_path"),
                                  require(metrics_csv, "metrics_csv"), rflops, require(out_json, "out_json"));
    });
}

sir_status sir_read_rflops(const char* run_path, double* out_rflops) {
    return guarded([&] {
        require(out_rflops, "out_rflops");
        *out_rflops = scratchir::read_rflops_sidecar(require(run_path, "run_path"));
    });
}

sir_status sir_compare(const char* const* runs, int32_t num_runs, const char* const* names, const char* qrels_path,
                       const char* metric, double alpha, const char* out_json, char** out_table) {
    return guarded([&] {
        require(runs, "runs");
        std::vector<std::string> run_paths;
        std::vector<std::string> run_names;
        for (int32_t i = 0; i < num_runs; ++i) {
            run_paths.push_back(require(runs[i], "runs[i]"));
            if (names != nullptr) {
                run_names.push_back(require(names[i], "names[i]"));
            }
        }
        scratchir::CompareResult result = scratchir::compare_runs(run_paths, run_names,
                                                                  require(qrels_path, "qrels_path"),
                                                                  require(metric, "metric"), alpha);
        if (out_json != nullptr) {
            scratchir::write_file(out_json, result.json);
        }
        if (out_table != nullptr) {
            *out_table = dup_string(result.table);
        }
    });
}

sir_status sir_run_pipeline(const char* config_path, int force, const char* skip_stages_csv,
                            char** out_report_path) {
    return guarded([&] {
        std::string report = scratchir::run_pipeline_file(require(config_path, "config_path"), force != 0,
                                                          split_csv(skip_stages_csv));
        if (out_report_path != nullptr) {
            *out_report_path = dup_string(report);
        }
    });
}

sir_status sir_vocab_load(const char* path, sir_vocab** out) {
    return guarded([&] {
        require(out, "out");
        *out = new sir_vocab{scratchir::Vocab::load(require(path, "path"))};
    });
}

void sir_vocab_free(sir_vocab* vocab) { delete vocab; }

int32_t sir_vocab_size(const sir_vocab* vocab) { return vocab == nullptr ? 0 : vocab->impl.size(); }

sir_status sir_vocab_encode(const sir_vocab* vocab, const char* text, int32_t max_len, int32_t* out_ids,
                            int32_t capacity, int32_t* out_len) {
    return guarded([&] {
        if (vocab == nullptr) {
            scratchir::throw_config("vocab must not be NULL");
        }
        auto ids = vocab->impl.encode(require(text, "text"), max_len);
        if (static_cast<int32_t>(ids.size()) > capacity) {
            scratchir::throw_data("encode: output buffer too small, need " + std::to_string(ids.size()));
        }
        std::memcpy(require(out_ids, "out_ids"), ids.data(), ids.size() * sizeof(int32_t));
        *require(out_len, "out_len") = static_cast<int32_t>(ids.size());
    });
}

sir_status sir_vocab_decode(const sir_vocab* vocab, const int32_t* ids, int32_t len, char** out_text) {
    return guarded([&] {
        if (vocab == nullptr) {
            scratchir::throw_config("vocab must not be NULL");
        }
        require(ids, "ids");
        std::vector<int32_t> id_vec(ids, ids + len);
        *require(out_text, "out_text") = dup_string(vocab->impl.decode(id_vec));
    });
}

sir_status sir_model_load(const char* path, sir_model** out) {
    return guarded([&] {
        if (out == nullptr) {
            scratchir::throw_config("out must not be NULL");
        }
        auto model = scratchir::load_checkpoint(require(path, "path"));
        std::string kind = scratchir::trained_as_name(model.trained_as);
        *out = new sir_model{std::move(model), std::move(kind)};
    });
}

void sir_model_free(sir_model* model) { delete model; }

const char* sir_model_kind(const sir_model* model) { return model == nullptr ? "" : model->kind.c_str(); }

sir_status sir_model_encode_sparse(const sir_model* model, const sir_vocab* vocab, const char* text, int32_t max_len,
                                   int32_t* out_terms, float* out_weights, int32_t capacity, int32_t* out_nnz) {
    return guarded([&] {
        if (model == nullptr || vocab == nullptr) {
            scratchir::throw_config("model and vocab must not be NULL");
        }
        int len = std::min<int32_t>(max_len, model->impl.config.max_positions);
        auto sv = scratchir::encode_sparse(model->impl, vocab->impl.encode(require(text, "text"), len));
        if (static_cast<int32_t>(sv.nnz()) > capacity) {
            scratchir::throw_data("encode_sparse: buffer too small, need " + std::to_string(sv.nnz()));
        }
        for (size_t i = 0; i < sv.nnz(); ++i) {
            require(out_terms, "out_terms")[i] = sv.entries[i].term;
            require(out_weights, "out_weights")[i] = sv.entries[i].weight;
        }
        *require(out_nnz, "out_nnz") = static_cast<int32_t>(sv.nnz());
    });
}

sir_status sir_model_encode_dense(const sir_model* model, const sir_vocab* vocab, const char* text, int32_t max_len,
                                  float* out_values, int32_t capacity, int32_t* out_dim) {
    return guarded([&] {
        if (model == nullptr || vocab == nullptr) {
            scratchir::throw_config("model and vocab must not be NULL");
        }
        int len = std::min<int32_t>(max_len, model->impl.config.max_positions);
        auto rep = scratchir::encode_dense(model->impl, vocab->impl.encode(require(text, "text"), len));
        if (static_cast<int32_t>(rep.size()) > capacity) {
            scratchir::throw_data("encode_dense: buffer too small, need " + std::to_string(rep.size()));
        }
        std::memcpy(require(out_values, "out_values"), rep.data(), rep.size() * sizeof(float));
        *require(out_dim, "out_dim") = static_cast<int32_t>(rep.size());
    });
}

sir_status sir_model_cross_score(const sir_model* model, const sir_vocab* vocab, const char* query_text,
                                 const char* doc_text, int32_t max_len, double* out_score) {
    return guarded([&] {
        if (model == nullptr || vocab == nullptr) {
            scratchir::throw_config("model and vocab must not be NULL");
        }
        int len = std::min<int32_t>(max_len, model->impl.config.max_positions);
        auto q = vocab->impl.encode(require(query_text, "query_text"), len);
        auto d = vocab->impl.encode(require(doc_text, "doc_text"), len);
        *require(out_score, "out_score") = scratchir::cross_score_pair(model->impl, q, d, len);
    });
}

sir_status sir_index_load(const char* path, sir_index** out) {
    return guarded([&] {
        if (out == nullptr) {
            scratchir::throw_config("out must not be NULL");
        }
        *out = new sir_index{scratchir::InvertedIndex::load(require(path, "path"))};
    });
}

void sir_index_free(sir_index* index) { delete index; }

int64_t sir_index_doc_count(const sir_index* index) { return index == nullptr ? 0 : index->impl.doc_count(); }

sir_status sir_index_search(const sir_index* index, const int32_t* terms, const float* weights, int32_t nnz,
                            int32_t k, char*** out_doc_ids, double** out_scores, int32_t* out_count) {
    return guarded([&] {
        if (index == nullptr) {
            scratchir::throw_config("index must not be NULL");
        }
        if (nnz > 0) {
            require(terms, "terms");
            require(weights, "weights");
        }
        scratchir::SparseVector query;
        for (int32_t i = 0; i < nnz; ++i) {
            query.entries.push_back({terms[i], weights[i]});
        }
        query.validate(index->impl.vocab_size());
        scratchir::RankedList hits = index->impl.search(query, k);
        int32_t count = static_cast<int32_t>(hits.hits.size());
        char** ids = static_cast<char**>(std::malloc(sizeof(char*) * static_cast<size_t>(std::max(count, 1))));
        double* scores =
            static_cast<double*>(std::malloc(sizeof(double) * static_cast<size_t>(std::max(count, 1))));
        for (int32_t i = 0; i < count; ++i) {
            ids[i] = dup_string(hits.hits[static_cast<size_t>(i)].doc_id);
            scores[i] = hits.hits[static_cast<size_t>(i)].score;
        }
        *require(out_doc_ids, "out_doc_ids") = ids;
        *require(out_scores, "out_scores") = scores;
        *require(out_count, "out_count") = count;
    });
}

void sir_search_results_free(char** doc_ids, double* scores, int32_t count) {
    if (doc_ids != nullptr) {
        for (int32_t i = 0; i < count; ++i) {
            std::free(doc_ids[i]);
        }
        std::free(doc_ids);
    }
    std::free(scores);
}

void sir_string_free(char* s) { std::free(s); }

}  // extern "C"
