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

#include "scratchir/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>

#include "json.hpp"
#include "scratchir/inverted_index.hpp"
#include "scratchir/io.hpp"

namespace scratchir {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// per-stage seed derivation tags
enum SeedTag : uint64_t {
    kSeedTokenizer = 1,
    kSeedEncoder = 2,
    kSeedPretrain = 3,
    kSeedFinetune = 4,
    kSeedFirstStage = 5,
};

void require_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw_config(where + " must be a JSON object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) {
            throw_config("unknown key \"" + key + "\" in " + where);
        }
    }
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw_config("bad JSON in " + what + ": " + e.what());
    }
}

EncoderConfig encoder_from_json(const json& j, uint64_t default_seed) {
    require_keys(j, {"num_layers", "num_heads", "hidden_dim", "ffn_dim", "max_positions", "seed", "vocab_size"},
                 "encoder section");
    EncoderConfig cfg;
    if (j.contains("num_layers")) cfg.num_layers = j["num_layers"].get<int>();
    if (j.contains("num_heads")) cfg.num_heads = j["num_heads"].get<int>();
    if (j.contains("hidden_dim")) cfg.hidden_dim = j["hidden_dim"].get<int>();
    if (j.contains("ffn_dim")) cfg.ffn_dim = j["ffn_dim"].get<int>();
    if (j.contains("max_positions")) cfg.max_positions = j["max_positions"].get<int>();
    if (j.contains("vocab_size")) cfg.vocab_size = j["vocab_size"].get<int>();
    cfg.seed = j.contains("seed") ? j["seed"].get<uint64_t>() : default_seed;
    return cfg;
}

PretrainConfig pretrain_from_json(const json& j, uint64_t default_seed) {
    require_keys(j,
                 {"mode", "mask_prob", "learning_rate", "total_steps", "lr_warmup_steps", "flops_warmup_steps",
                  "logits_warmup_steps", "lambda_flops", "batch_size", "max_len", "seed"},
                 "pretrain section");
    PretrainConfig cfg;
    if (j.contains("mask_prob")) cfg.mask_prob = j["mask_prob"].get<double>();
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("total_steps")) cfg.total_steps = j["total_steps"].get<int>();
    if (j.contains("lr_warmup_steps")) cfg.lr_warmup_steps = j["lr_warmup_steps"].get<int>();
    if (j.contains("flops_warmup_steps")) cfg.flops_warmup_steps = j["flops_warmup_steps"].get<int>();
    if (j.contains("logits_warmup_steps")) cfg.logits_warmup_steps = j["logits_warmup_steps"].get<int>();
    if (j.contains("lambda_flops")) cfg.lambda_flops = j["lambda_flops"].get<double>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
    if (j.contains("max_len")) cfg.max_len = j["max_len"].get<int>();
    cfg.seed = j.contains("seed") ? j["seed"].get<uint64_t>() : default_seed;
    cfg.validate();
    return cfg;
}

FinetuneConfig finetune_from_json(const json& j, const std::string& kind, uint64_t default_seed) {
    require_keys(j,
                 {"kind", "learning_rate", "num_negatives", "epochs", "lambda_q", "lambda_d",
                  "use_in_batch_negatives", "batch_size", "max_len", "seed", "first_stage"},
                 "finetune section");
    FinetuneConfig cfg;
    // the cross-encoder recipe differs: no in-batch negatives, lr 1e-4
    if (kind == "cross") {
        cfg.learning_rate = 1e-4;
        cfg.use_in_batch_negatives = false;
    }
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("num_negatives")) cfg.num_negatives = j["num_negatives"].get<int>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("lambda_q")) cfg.lambda_q = j["lambda_q"].get<double>();
    if (j.contains("lambda_d")) cfg.lambda_d = j["lambda_d"].get<double>();
    if (j.contains("use_in_batch_negatives")) cfg.use_in_batch_negatives = j["use_in_batch_negatives"].get<bool>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
    if (j.contains("max_len")) cfg.max_len = j["max_len"].get<int>();
    cfg.seed = j.contains("seed") ? j["seed"].get<uint64_t>() : default_seed;
    if (kind == "cross" && cfg.use_in_batch_negatives) {
        throw_config("cross-encoder finetuning never uses in-batch negatives");
    }
    cfg.validate();
    return cfg;
}

std::string check_kind(const std::string& kind) {
    if (kind != "sparse" && kind != "dense" && kind != "cross") {
        throw_config("finetune kind must be sparse, dense or cross, got: " + kind);
    }
    return kind;
}

}  // namespace

EncoderConfig parse_encoder_section(const std::string& json_text, uint64_t default_seed) {
    json j = parse_json(json_text, "encoder config");
    if (j.is_object() && j.contains("encoder")) {
        return encoder_from_json(j["encoder"], default_seed);
    }
    return encoder_from_json(j, default_seed);
}

PretrainConfig parse_pretrain_section(const std::string& json_text, uint64_t default_seed) {
    json j = parse_json(json_text, "pretrain config");
    if (j.is_object() && j.contains("pretrain")) {
        return pretrain_from_json(j["pretrain"], default_seed);
    }
    return pretrain_from_json(j, default_seed);
}

FinetuneConfig parse_finetune_section(const std::string& json_text, const std::string& kind, uint64_t default_seed) {
    json j = parse_json(json_text, "finetune config");
    if (j.is_object() && j.contains("finetune")) {
        return finetune_from_json(j["finetune"], kind, default_seed);
    }
    return finetune_from_json(j, kind, default_seed);
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
    json j = parse_json(json_text, "pipeline config");
    require_keys(j, {"version", "seed", "paths", "tokenizer", "encoder", "pretrain", "finetune", "eval"},
                 "pipeline config");
    if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != 1) {
        throw_config("pipeline config must declare \"version\": 1");
    }
    PipelineConfig cfg;
    if (j.contains("seed")) {
        cfg.seed = j["seed"].get<uint64_t>();
    }

    if (!j.contains("paths")) {
        throw_config("pipeline config needs a paths section");
    }
    const json& paths = j["paths"];
    require_keys(paths, {"collection", "queries", "queries_test", "qrels_test", "triplets", "output_dir"},
                 "paths section");
    auto need = [&paths](const char* key) {
        if (!paths.contains(key)) {
            throw_config(std::string("paths section is missing \"") + key + "\"");
        }
        return paths[key].get<std::string>();
    };
    cfg.paths.collection = need("collection");
    cfg.paths.queries = need("queries");
    cfg.paths.queries_test = need("queries_test");
    cfg.paths.qrels_test = need("qrels_test");
    cfg.paths.triplets = need("triplets");
    cfg.paths.output_dir = need("output_dir");

    cfg.tokenizer_seed = mix_seed(cfg.seed, kSeedTokenizer);
    if (j.contains("tokenizer")) {
        require_keys(j["tokenizer"], {"vocab_size", "seed"}, "tokenizer section");
        if (j["tokenizer"].contains("vocab_size")) {
            cfg.tokenizer_vocab_size = j["tokenizer"]["vocab_size"].get<int>();
        }
        if (j["tokenizer"].contains("seed")) {
            cfg.tokenizer_seed = j["tokenizer"]["seed"].get<uint64_t>();
        }
    }

    cfg.encoder = encoder_from_json(j.contains("encoder") ? j["encoder"] : json::object(),
                                    mix_seed(cfg.seed, kSeedEncoder));
    if (cfg.encoder.vocab_size != 0) {
        throw_config("encoder.vocab_size is derived from the tokenizer; do not set it in the pipeline config");
    }

    json pj = j.contains("pretrain") ? j["pretrain"] : json::object();
    if (pj.contains("mode")) {
        cfg.pretrain_mode = pretrain_mode_from_name(pj["mode"].get<std::string>());
        pj.erase("mode");
    }
    cfg.pretrain = pretrain_from_json(pj, mix_seed(cfg.seed, kSeedPretrain));

    json fj = j.contains("finetune") ? j["finetune"] : json::object();
    cfg.finetune.kind = check_kind(fj.contains("kind") ? fj["kind"].get<std::string>() : "sparse");
    if (fj.contains("first_stage")) {
        json fsj = fj["first_stage"];
        if (cfg.finetune.kind != "cross") {
            throw_config("finetune.first_stage is only valid with kind \"cross\"");
        }
        std::string fs_kind = check_kind(fsj.contains("kind") ? fsj["kind"].get<std::string>() : "sparse");
        if (fs_kind == "cross") {
            throw_config("the first stage must be a bi-encoder (sparse or dense)");
        }
        if (fsj.contains("first_stage")) {
            throw_config("first_stage sections do not nest");
        }
        FinetuneSection fs;
        fs.kind = fs_kind;
        fs.config = finetune_from_json(fsj, fs_kind, mix_seed(cfg.seed, kSeedFirstStage));
        cfg.first_stage = std::move(fs);
        fj.erase("first_stage");
    } else if (cfg.finetune.kind == "cross") {
        throw_config("finetune kind \"cross\" requires a first_stage section");
    }
    cfg.finetune.config = finetune_from_json(fj, cfg.finetune.kind, mix_seed(cfg.seed, kSeedFinetune));

    if (j.contains("eval")) {
        const json& ej = j["eval"];
        require_keys(ej, {"metrics", "alpha", "search_k", "rerank_depth", "run_tag"}, "eval section");
        if (ej.contains("metrics")) {
            cfg.eval.metrics = ej["metrics"].get<std::vector<std::string>>();
        }
        if (ej.contains("alpha")) cfg.eval.alpha = ej["alpha"].get<double>();
        if (ej.contains("search_k")) cfg.eval.search_k = ej["search_k"].get<int>();
        if (ej.contains("rerank_depth")) cfg.eval.rerank_depth = ej["rerank_depth"].get<int>();
        if (ej.contains("run_tag")) cfg.eval.run_tag = ej["run_tag"].get<std::string>();
    }
    return cfg;
}

namespace {

std::vector<std::string> corpus_texts(const std::vector<std::string>& tsv_paths) {
    std::vector<std::string> texts;
    for (const auto& path : tsv_paths) {
        Collection c = load_collection(path);
        for (auto& [id, text] : c.items) {
            texts.push_back(std::move(text));
        }
    }
    return texts;
}

TokenizedTexts tokenize_collection(const Collection& c, const Vocab& vocab, int max_len) {
    std::vector<std::pair<std::string, std::vector<int32_t>>> slots(c.size());
    parallel_for(c.size(), 0, [&](size_t i) {
        slots[i] = {c.items[i].first, vocab.encode(c.items[i].second, max_len)};
    });
    TokenizedTexts out;
    out.reserve(c.size());
    for (auto& [id, ids] : slots) {
        out.emplace(std::move(id), std::move(ids));
    }
    return out;
}

std::vector<std::pair<std::string, SparseVector>> encode_collection_sparse(const EncoderModel<float>& model,
                                                                           const Collection& c, const Vocab& vocab,
                                                                           int max_len) {
    std::vector<std::pair<std::string, SparseVector>> out(c.size());
    parallel_for(c.size(), 0, [&](size_t i) {
        out[i] = {c.items[i].first, encode_sparse(model, vocab.encode(c.items[i].second, max_len))};
    });
    return out;
}

std::vector<std::pair<std::string, DenseVector>> encode_collection_dense(const EncoderModel<float>& model,
                                                                         const Collection& c, const Vocab& vocab,
                                                                         int max_len) {
    std::vector<std::pair<std::string, DenseVector>> out(c.size());
    parallel_for(c.size(), 0, [&](size_t i) {
        out[i] = {c.items[i].first, encode_dense(model, vocab.encode(c.items[i].second, max_len))};
    });
    return out;
}

int clamp_len(const EncoderModel<float>& model, int max_len) {
    return std::min(max_len, model.config.max_positions);
}

}  // namespace

void stage_train_tokenizer(const std::vector<std::string>& corpus_tsvs, int vocab_size, uint64_t seed,
                           const std::string& out_vocab) {
    Vocab vocab = train_wordpiece(corpus_texts(corpus_tsvs), vocab_size, seed);
    vocab.save(out_vocab);
}

void stage_pretrain(const std::string& mode, const std::string& config_json,
                    const std::vector<std::string>& corpus_tsvs, const std::string& vocab_path,
                    const std::string& out_checkpoint, const std::string& out_loss_csv) {
    PretrainMode pm = pretrain_mode_from_name(mode);
    Vocab vocab = Vocab::load(vocab_path);
    EncoderConfig ec = parse_encoder_section(config_json, 0);
    PretrainConfig pc = parse_pretrain_section(config_json, 0);
    if (ec.vocab_size == 0) {
        ec.vocab_size = vocab.size();
    } else if (ec.vocab_size != vocab.size()) {
        throw_config("encoder vocab_size disagrees with the vocab file");
    }
    ec.resolve();

    std::vector<std::string> texts = corpus_texts(corpus_tsvs);
    std::vector<std::vector<int32_t>> corpus(texts.size());
    parallel_for(texts.size(), 0, [&](size_t i) { corpus[i] = vocab.encode(texts[i], pc.max_len); });

    auto model = EncoderModel<float>::random_init(ec);
    auto log = pretrain(model, corpus, pc, pm);
    save_checkpoint(model, out_checkpoint);
    write_file(out_loss_csv, loss_log_to_csv(log));
}

void stage_finetune(const std::string& kind, const std::string& config_json, const std::string& checkpoint,
                    const std::string& vocab_path, const std::string& collection_tsv, const std::string& queries_tsv,
                    const std::string& triplets_tsv, const std::string& out_checkpoint,
                    const std::string& out_loss_csv) {
    check_kind(kind);
    FinetuneConfig cfg = parse_finetune_section(config_json, kind, 0);
    Vocab vocab = Vocab::load(vocab_path);
    EncoderModel<float> model = load_checkpoint(checkpoint);
    if (model.config.vocab_size != vocab.size()) {
        throw_data("checkpoint and vocab disagree on vocabulary size");
    }
    Collection collection = load_collection(collection_tsv);
    Collection queries = load_queries(queries_tsv);
    Triplets triplets = load_triplets(triplets_tsv);
    check_references(triplets, collection, queries);

    int max_len = clamp_len(model, cfg.max_len);
    TokenizedTexts coll_ids = tokenize_collection(collection, vocab, max_len);
    TokenizedTexts query_ids = tokenize_collection(queries, vocab, max_len);

    std::vector<double> losses;
    if (kind == "sparse") {
        losses = finetune_sparse(model, triplets, coll_ids, query_ids, cfg);
    } else if (kind == "dense") {
        losses = finetune_dense(model, triplets, coll_ids, query_ids, cfg);
    } else {
        losses = finetune_cross(model, triplets, coll_ids, query_ids, cfg);
    }
    save_checkpoint(model, out_checkpoint);
    if (!out_loss_csv.empty()) {
        std::string csv = "step,loss\n";
        char buf[64];
        for (size_t i = 0; i < losses.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.10g\n", i, losses[i]);
            csv += buf;
        }
        write_file(out_loss_csv, csv);
    }
}

void stage_build_index(const std::string& checkpoint, const std::string& vocab_path,
                       const std::string& collection_tsv, int max_len, const std::string& out_index) {
    EncoderModel<float> model = load_checkpoint(checkpoint);
    Vocab vocab = Vocab::load(vocab_path);
    Collection collection = load_collection(collection_tsv);
    max_len = clamp_len(model, max_len);
    if (model.trained_as == TrainedAs::Dense) {
        save_dense_matrix(encode_collection_dense(model, collection, vocab, max_len), out_index);
    } else {
        auto docs = encode_collection_sparse(model, collection, vocab, max_len);
        InvertedIndex::build(docs, vocab.size()).save(out_index);
    }
}

void stage_search(const std::string& checkpoint, const std::string& vocab_path, const std::string& index_path,
                  const std::string& queries_tsv, int max_len, int k, const std::string& run_tag,
                  const std::string& out_run) {
    EncoderModel<float> model = load_checkpoint(checkpoint);
    Vocab vocab = Vocab::load(vocab_path);
    Collection queries = load_queries(queries_tsv);
    max_len = clamp_len(model, max_len);

    std::vector<RankedList> runs(queries.size());
    if (model.trained_as == TrainedAs::Dense) {
        auto docs = load_dense_matrix(index_path);
        parallel_for(queries.size(), 0, [&](size_t i) {
            auto ids = vocab.encode(queries.items[i].second, max_len);
            runs[i] = search_dense(docs, encode_dense(model, ids), k, queries.items[i].first);
        });
        save_run(runs, run_tag, out_run);
        return;
    }

    InvertedIndex index = InvertedIndex::load(index_path);
    std::vector<SparseVector> query_vecs(queries.size());
    parallel_for(queries.size(), 0, [&](size_t i) {
        auto ids = vocab.encode(queries.items[i].second, max_len);
        query_vecs[i] = encode_sparse(model, ids);
        runs[i] = index.search(query_vecs[i], k, queries.items[i].first);
    });
    save_run(runs, run_tag, out_run);

    json sidecar;
    sidecar["rflops"] = estimate_rflops(query_vecs, index);
    sidecar["num_queries"] = queries.size();
    write_file(out_run + ".rflops.json", sidecar.dump(2) + "\n");
}

double read_rflops_sidecar(const std::string& run_path) {
    std::string path = run_path + ".rflops.json";
    if (!file_exists(path)) {
        return -1.0;
    }
    json j = parse_json(read_file(path), "rflops sidecar");
    return j.at("rflops").get<double>();
}

void stage_rerank(const std::string& checkpoint, const std::string& vocab_path, const std::string& collection_tsv,
                  const std::string& queries_tsv, const std::string& run_path, int max_len, int depth,
                  const std::string& run_tag, const std::string& out_run) {
    EncoderModel<float> model = load_checkpoint(checkpoint);
    if (model.trained_as != TrainedAs::Cross) {
        throw_config("rerank requires a cross-encoder checkpoint");
    }
    Vocab vocab = Vocab::load(vocab_path);
    Collection collection = load_collection(collection_tsv);
    Collection queries = load_queries(queries_tsv);
    std::vector<RankedList> first_stage = load_run(run_path);
    max_len = clamp_len(model, max_len);

    std::vector<RankedList> reranked(first_stage.size());
    parallel_for(first_stage.size(), 0, [&](size_t i) {
        const RankedList& rl = first_stage[i];
        auto q_ids = vocab.encode(queries.text_of(rl.query_id), max_len);
        RankedList out;
        out.query_id = rl.query_id;
        size_t take = std::min(rl.hits.size(), static_cast<size_t>(depth));
        for (size_t h = 0; h < take; ++h) {
            auto d_ids = vocab.encode(collection.text_of(rl.hits[h].doc_id), max_len);
            out.hits.push_back({rl.hits[h].doc_id, cross_score_pair(model, q_ids, d_ids, max_len)});
        }
        std::sort(out.hits.begin(), out.hits.end(), [](const RankedHit& a, const RankedHit& b) {
            if (a.score != b.score) {
                return a.score > b.score;
            }
            return a.doc_id < b.doc_id;
        });
        reranked[i] = std::move(out);
    });
    save_run(reranked, run_tag, out_run);
}

void stage_evaluate(const std::string& run_path, const std::string& qrels_path, const std::string& metrics_csv,
                    double rflops, const std::string& out_json) {
    std::vector<RankedList> run = load_run(run_path);
    Qrels qrels = load_qrels(qrels_path);
    std::vector<MetricReport> reports;
    size_t start = 0;
    while (start <= metrics_csv.size()) {
        size_t comma = metrics_csv.find(',', start);
        if (comma == std::string::npos) {
            comma = metrics_csv.size();
        }
        if (comma > start) {
            reports.push_back(compute_metric(metrics_csv.substr(start, comma - start), run, qrels));
        }
        start = comma + 1;
    }
    if (reports.empty()) {
        throw_config("no metrics requested");
    }
    write_file(out_json, metric_report_to_json(reports, rflops));
}

namespace {

/// Exclusive ownership of an experiment directory while a run is live.
class DirLock {
  public:
    explicit DirLock(const std::string& dir) : path_((fs::path(dir) / ".lock").string()) {
        int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) {
            throw Error(ErrorCode::State, "experiment directory is locked by another process: " + path_);
        }
        ::close(fd);
    }
    ~DirLock() { ::unlink(path_.c_str()); }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

  private:
    std::string path_;
};

struct ManifestBuilder {
    json artifacts = json::object();
    json previous;  // manifest from an earlier run in this directory, if any
    std::string root;

    std::string rel(const std::string& path) const { return fs::relative(path, root).string(); }

    void record(const std::string& path) { artifacts[rel(path)] = sha256_file_hex(path); }

    // a skipped stage must hand back the artifact produced earlier,
    // checksum-verified against the previous manifest when one exists
    void reuse(const std::string& path, const std::string& stage) {
        if (!file_exists(path)) {
            throw_data("cannot skip " + stage + ": missing artifact " + path);
        }
        std::string digest = sha256_file_hex(path);
        std::string key = rel(path);
        if (!previous.is_null() && previous.contains("artifacts") && previous["artifacts"].contains(key)) {
            if (previous["artifacts"][key].get<std::string>() != digest) {
                throw_data("cannot skip " + stage + ": checksum mismatch for " + key);
            }
        }
        artifacts[key] = digest;
    }
};

void refuse_overwrite(const std::vector<std::string>& outputs, bool force, const std::string& stage) {
    if (force) {
        return;
    }
    for (const auto& path : outputs) {
        if (file_exists(path)) {
            throw Error(ErrorCode::State,
                        "output of stage " + stage + " exists: " + path + " (pass --force to overwrite)");
        }
    }
}

json encoder_to_json(const EncoderConfig& c) {
    json j;
    j["num_layers"] = c.num_layers;
    j["num_heads"] = c.num_heads;
    j["hidden_dim"] = c.hidden_dim;
    j["ffn_dim"] = c.ffn_dim;
    j["max_positions"] = c.max_positions;
    j["seed"] = c.seed;
    return j;
}

json pretrain_to_json(const PretrainConfig& c) {
    json j;
    j["mask_prob"] = c.mask_prob;
    j["learning_rate"] = c.learning_rate;
    j["total_steps"] = c.total_steps;
    j["lr_warmup_steps"] = c.lr_warmup_steps;
    j["flops_warmup_steps"] = c.flops_warmup_steps;
    j["logits_warmup_steps"] = c.logits_warmup_steps;
    j["lambda_flops"] = c.lambda_flops;
    j["batch_size"] = c.batch_size;
    j["max_len"] = c.max_len;
    j["seed"] = c.seed;
    return j;
}

json finetune_to_json(const FinetuneSection& s) {
    json j;
    j["kind"] = s.kind;
    j["learning_rate"] = s.config.learning_rate;
    j["num_negatives"] = s.config.num_negatives;
    j["epochs"] = s.config.epochs;
    j["lambda_q"] = s.config.lambda_q;
    j["lambda_d"] = s.config.lambda_d;
    j["use_in_batch_negatives"] = s.config.use_in_batch_negatives;
    j["batch_size"] = s.config.batch_size;
    j["max_len"] = s.config.max_len;
    j["seed"] = s.config.seed;
    return j;
}

// canonical config for hashing: fully resolved, output_dir blanked so
// the same experiment hashes identically wherever it lands on disk
std::string canonical_config(const PipelineConfig& cfg) {
    json j;
    j["version"] = 1;
    j["seed"] = cfg.seed;
    json paths;
    paths["collection"] = cfg.paths.collection;
    paths["queries"] = cfg.paths.queries;
    paths["queries_test"] = cfg.paths.queries_test;
    paths["qrels_test"] = cfg.paths.qrels_test;
    paths["triplets"] = cfg.paths.triplets;
    paths["output_dir"] = "";
    j["paths"] = paths;
    json tok;
    tok["vocab_size"] = cfg.tokenizer_vocab_size;
    tok["seed"] = cfg.tokenizer_seed;
    j["tokenizer"] = tok;
    j["encoder"] = encoder_to_json(cfg.encoder);
    j["pretrain"] = pretrain_to_json(cfg.pretrain);
    j["pretrain"]["mode"] = pretrain_mode_name(cfg.pretrain_mode);
    j["finetune"] = finetune_to_json(cfg.finetune);
    if (cfg.first_stage) {
        j["finetune"]["first_stage"] = finetune_to_json(*cfg.first_stage);
    }
    json ev;
    ev["metrics"] = cfg.eval.metrics;
    ev["alpha"] = cfg.eval.alpha;
    ev["search_k"] = cfg.eval.search_k;
    ev["rerank_depth"] = cfg.eval.rerank_depth;
    ev["run_tag"] = cfg.eval.run_tag;
    j["eval"] = ev;
    return j.dump(2) + "\n";
}

}  // namespace

std::string run_pipeline(const PipelineConfig& config, bool force, const std::set<std::string>& skip_stages) {
    static const std::set<std::string> kStages = {"tokenizer", "pretrain", "finetune", "index", "search", "eval"};
    for (const auto& s : skip_stages) {
        if (!kStages.count(s)) {
            throw_config("unknown stage to skip: " + s);
        }
    }
    const std::vector<std::pair<std::string, std::string>> inputs = {
        {"collection", config.paths.collection},   {"queries", config.paths.queries},
        {"queries_test", config.paths.queries_test}, {"qrels_test", config.paths.qrels_test},
        {"triplets", config.paths.triplets},
    };
    for (const auto& [what, path] : inputs) {
        if (!file_exists(path)) {
            throw_data("input file for " + what + " does not exist: " + path);
        }
    }

    const std::string root = config.paths.output_dir;
    fs::create_directories(root);
    for (const char* sub : {"tokenizer", "pretrain", "finetune", "index", "search", "eval"}) {
        fs::create_directories(fs::path(root) / sub);
    }
    DirLock lock(root);

    ManifestBuilder manifest;
    manifest.root = root;
    std::string manifest_path = (fs::path(root) / "manifest.json").string();
    if (file_exists(manifest_path)) {
        manifest.previous = parse_json(read_file(manifest_path), "previous manifest");
    }

    std::string config_str = canonical_config(config);
    write_file((fs::path(root) / "config.json").string(), config_str);

    auto in_root = [&root](const std::string& relpath) { return (fs::path(root) / relpath).string(); };
    const std::string vocab_path = in_root("tokenizer/vocab.txt");
    const std::string pretrain_ckpt = in_root("pretrain/checkpoint.bin");
    const std::string pretrain_log = in_root("pretrain/loss_log.csv");
    const std::string finetune_ckpt = in_root("finetune/checkpoint.bin");
    const std::string finetune_log = in_root("finetune/loss_log.csv");
    const std::string first_ckpt = in_root("finetune/first_stage.bin");
    const std::string first_log = in_root("finetune/first_stage_loss.csv");
    const std::string index_path = in_root("index/index.bin");
    const std::string run_path = in_root("search/run.trec");
    const std::string first_run_path = in_root("search/first_stage.trec");
    const std::string report_path = in_root("eval/report.json");
    const std::string first_report_path = in_root("eval/first_stage_report.json");

    std::string failed_stage;
    auto finish_manifest = [&](const std::string& status) {
        json m;
        m["format_version"] = 1;
        m["config_sha256"] = sha256_hex(config_str);
        m["seed"] = config.seed;
        json input_hashes;
        for (const auto& [what, path] : inputs) {
            input_hashes[what] = sha256_file_hex(path);
        }
        m["inputs"] = input_hashes;
        m["artifacts"] = manifest.artifacts;
        m["status"] = status;
        write_file(manifest_path, m.dump(2) + "\n");
    };

    bool cross = config.finetune.kind == "cross";
    json stage_cfg;
    stage_cfg["encoder"] = encoder_to_json(config.encoder);
    stage_cfg["pretrain"] = pretrain_to_json(config.pretrain);

    try {
        failed_stage = "tokenizer";
        if (skip_stages.count("tokenizer")) {
            manifest.reuse(vocab_path, "tokenizer");
        } else {
            refuse_overwrite({vocab_path}, force, "tokenizer");
            stage_train_tokenizer({config.paths.collection, config.paths.queries}, config.tokenizer_vocab_size,
                                  config.tokenizer_seed, vocab_path);
            manifest.record(vocab_path);
        }

        // pretraining corpus: the collection plus the training queries
        failed_stage = "pretrain";
        if (skip_stages.count("pretrain")) {
            manifest.reuse(pretrain_ckpt, "pretrain");
        } else {
            refuse_overwrite({pretrain_ckpt, pretrain_log}, force, "pretrain");
            stage_pretrain(pretrain_mode_name(config.pretrain_mode), stage_cfg.dump(),
                           {config.paths.collection, config.paths.queries}, vocab_path, pretrain_ckpt, pretrain_log);
            manifest.record(pretrain_ckpt);
            manifest.record(pretrain_log);
        }

        failed_stage = "finetune";
        const FinetuneSection& retriever = cross ? *config.first_stage : config.finetune;
        std::string retriever_ckpt = cross ? first_ckpt : finetune_ckpt;
        std::string retriever_log = cross ? first_log : finetune_log;
        if (skip_stages.count("finetune")) {
            manifest.reuse(retriever_ckpt, "finetune");
            if (cross) {
                manifest.reuse(finetune_ckpt, "finetune");
            }
        } else {
            std::vector<std::string> outs = {retriever_ckpt, retriever_log};
            if (cross) {
                outs.push_back(finetune_ckpt);
                outs.push_back(finetune_log);
            }
            refuse_overwrite(outs, force, "finetune");
            json fcfg;
            fcfg["finetune"] = finetune_to_json(retriever);
            fcfg["finetune"].erase("kind");
            stage_finetune(retriever.kind, fcfg.dump(), pretrain_ckpt, vocab_path, config.paths.collection,
                           config.paths.queries, config.paths.triplets, retriever_ckpt, retriever_log);
            manifest.record(retriever_ckpt);
            manifest.record(retriever_log);
            if (cross) {
                json ccfg;
                ccfg["finetune"] = finetune_to_json(config.finetune);
                ccfg["finetune"].erase("kind");
                stage_finetune("cross", ccfg.dump(), pretrain_ckpt, vocab_path, config.paths.collection,
                               config.paths.queries, config.paths.triplets, finetune_ckpt, finetune_log);
                manifest.record(finetune_ckpt);
                manifest.record(finetune_log);
            }
        }

        failed_stage = "index";
        if (skip_stages.count("index")) {
            manifest.reuse(index_path, "index");
        } else {
            refuse_overwrite({index_path}, force, "index");
            stage_build_index(retriever_ckpt, vocab_path, config.paths.collection, retriever.config.max_len,
                              index_path);
            manifest.record(index_path);
        }

        failed_stage = "search";
        if (skip_stages.count("search")) {
            manifest.reuse(run_path, "search");
        } else {
            std::vector<std::string> outs = {run_path};
            if (cross) {
                outs.push_back(first_run_path);
            }
            refuse_overwrite(outs, force, "search");
            std::string stage_one_run = cross ? first_run_path : run_path;
            stage_search(retriever_ckpt, vocab_path, index_path, config.paths.queries_test,
                         retriever.config.max_len, config.eval.search_k, config.eval.run_tag, stage_one_run);
            manifest.record(stage_one_run);
            if (file_exists(stage_one_run + ".rflops.json")) {
                manifest.record(stage_one_run + ".rflops.json");
            }
            if (cross) {
                stage_rerank(finetune_ckpt, vocab_path, config.paths.collection, config.paths.queries_test,
                             first_run_path, config.finetune.config.max_len, config.eval.rerank_depth,
                             config.eval.run_tag + "-rerank", run_path);
                manifest.record(run_path);
            }
        }

        failed_stage = "eval";
        std::string metrics_csv;
        for (size_t i = 0; i < config.eval.metrics.size(); ++i) {
            if (i > 0) {
                metrics_csv += ',';
            }
            metrics_csv += config.eval.metrics[i];
        }
        if (skip_stages.count("eval")) {
            manifest.reuse(report_path, "eval");
        } else {
            std::vector<std::string> outs = {report_path};
            if (cross) {
                outs.push_back(first_report_path);
            }
            refuse_overwrite(outs, force, "eval");
            std::string rflops_source = cross ? first_run_path : run_path;
            stage_evaluate(run_path, config.paths.qrels_test, metrics_csv, read_rflops_sidecar(rflops_source),
                           report_path);
            manifest.record(report_path);
            if (cross) {
                stage_evaluate(first_run_path, config.paths.qrels_test, metrics_csv,
                               read_rflops_sidecar(first_run_path), first_report_path);
                manifest.record(first_report_path);
            }
        }
        failed_stage.clear();
    } catch (...) {
        finish_manifest("failed:" + failed_stage);
        throw;
    }
    finish_manifest("complete");
    return report_path;
}

std::string run_pipeline_file(const std::string& config_path, bool force, const std::set<std::string>& skip_stages) {
    PipelineConfig cfg = parse_pipeline_config(read_file(config_path));
    return run_pipeline(cfg, force, skip_stages);
}

CompareResult compare_runs(const std::vector<std::string>& runs, const std::vector<std::string>& names,
                           const std::string& qrels_path, const std::string& metric, double alpha) {
    if (runs.size() < 2) {
        throw_data("compare needs at least two runs");
    }
    if (!names.empty() && names.size() != runs.size()) {
        throw_data("compare: name count must match run count");
    }
    Qrels qrels = load_qrels(qrels_path);
    std::vector<MetricReport> reports;
    std::vector<std::string> labels;
    for (size_t i = 0; i < runs.size(); ++i) {
        std::string path = runs[i];
        if (fs::is_directory(path)) {
            path = (fs::path(path) / "search" / "run.trec").string();
        }
        reports.push_back(compute_metric(metric, load_run(path), qrels));
        labels.push_back(names.empty() ? runs[i] : names[i]);
    }
    SignificanceMatrix m = paired_ttest_bonferroni(reports, alpha, labels);
    CompareResult out;
    out.table = significance_table(m, metric);
    out.json = significance_to_json(m, metric);
    return out;
}

}  // namespace scratchir
