// latent-states: batch pipeline turning in-home location events into
// per-participant latent-state vectors and prediction reports.

#include <cstdio>
#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "latent/config.hpp"
#include "latent/core.hpp"
#include "latent/pipeline.hpp"

namespace {

using latent::Config;

// exit codes: 0 ok, 2 config/usage, 3 input parsing, 4 numeric/domain, 1 other
constexpr int kOtherError = 1;
constexpr int kConfigError = 2;
constexpr int kParseError = 3;
constexpr int kDomainError = 4;

/// Binds CLI flags to config keys; only flags the user actually passed
/// override the config file.
class StageArgs {
public:
    explicit StageArgs(CLI::App* cmd) : cmd_(cmd) {
        cmd_->add_option("--config", config_path_, "config file; flags override its values");
        cmd_->add_option("--out", out_, "output directory")->required();
    }

    void map(const std::string& flag, const std::string& key, const std::string& desc = "") {
        auto slot = std::make_shared<std::string>();
        cmd_->add_option(flag, *slot, desc);
        entries_.push_back(Entry{flag, key, slot});
    }

    /// Required positional-style inputs (file paths) that are not config keys.
    std::string* input(const std::string& flag, const std::string& desc) {
        auto slot = std::make_shared<std::string>();
        cmd_->add_option(flag, *slot, desc)->required();
        inputs_.push_back(slot);
        return slot.get();
    }

    Config config() const {
        Config cfg = config_path_.empty() ? Config{} : Config::from_file(config_path_);
        for (const auto& e : entries_) {
            if (cmd_->count(e.flag) > 0) cfg.set(e.key, *e.value);
        }
        cfg.validate_known_keys();
        return cfg;
    }

    const std::string& out() const { return out_; }

private:
    struct Entry {
        std::string flag;
        std::string key;
        std::shared_ptr<std::string> value;
    };

    CLI::App* cmd_;
    std::string config_path_;
    std::string out_;
    std::vector<Entry> entries_;
    std::vector<std::shared_ptr<std::string>> inputs_;
};

void add_seed_flags(StageArgs& args, const std::string& stage) {
    args.map("--seed", stage + ".seed", "stage seed (default: derived from root seed)");
    args.map("--root-seed", "root_seed", "root seed all stage seeds derive from");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent-states: latent behavioral state extraction pipeline"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort with planted archetypes");
    auto synth_args = std::make_shared<StageArgs>(synth);
    synth_args->map("--participants", "synth.participants");
    synth_args->map("--days", "synth.days", "days per participant");
    synth_args->map("--archetypes", "synth.archetypes", "archetype JSON path or 'default3'");
    synth_args->map("--start-date", "synth.start_date", "first generated date (YYYY-MM-DD)");
    add_seed_flags(*synth_args, "synth");
    synth->callback(
        [synth_args] { latent::run_synth_stage(synth_args->config(), synth_args->out()); });

    // ---- ingest ----
    auto* ingest = app.add_subcommand("ingest", "parse and segment raw events + clinical records");
    auto ingest_args = std::make_shared<StageArgs>(ingest);
    auto* ingest_events = ingest_args->input("--events", "events CSV/JSONL path");
    auto* ingest_clinical = ingest_args->input("--clinical", "clinical CSV path");
    ingest_args->map("--tz-offset", "ingest.tz_offset", "cohort UTC offset, e.g. +01:00");
    ingest_args->map("--format", "ingest.format", "events format: csv or jsonl");
    ingest_args->map("--vocabulary", "ingest.vocabulary", "comma-separated room tokens");
    ingest_args->map("--lenient", "ingest.lenient", "skip bad rows instead of aborting");
    ingest->callback([ingest_args, ingest_events, ingest_clinical] {
        latent::run_ingest_stage(ingest_args->config(), *ingest_events, *ingest_clinical,
                                 ingest_args->out());
    });

    // ---- preprocess ----
    auto* preprocess = app.add_subcommand("preprocess", "rectify days into fixed slot sequences");
    auto preprocess_args = std::make_shared<StageArgs>(preprocess);
    auto* cohort_dir = preprocess_args->input("--cohort", "ingest output directory");
    preprocess_args->map("--window-min", "preprocess.window_min", "slot width in minutes");
    preprocess_args->map("--vocabulary", "ingest.vocabulary");
    preprocess->callback([preprocess_args, cohort_dir] {
        latent::run_preprocess_stage(preprocess_args->config(), *cohort_dir,
                                     preprocess_args->out());
    });

    // ---- embed ----
    auto* embed = app.add_subcommand("embed", "embed rectified days as vectors");
    auto embed_args = std::make_shared<StageArgs>(embed);
    auto* embed_days = embed_args->input("--days", "preprocess days.jsonl");
    embed_args->map("--builtin-d", "embed.dim", "builtin embedder dimension");
    embed_args->map("--import", "embed.import_path", "import an external embeddings CSV");
    embed_args->map("--mode", "embed.mode", "builtin (default) or import");
    embed_args->map("--vocabulary", "ingest.vocabulary");
    embed->callback([embed_args, embed_days] {
        Config cfg = embed_args->config();
        if (cfg.has("embed.import_path") && !cfg.has("embed.mode")) cfg.set("embed.mode", "import");
        latent::run_embed_stage(cfg, *embed_days, embed_args->out());
    });

    // ---- triplets ----
    auto* triplets = app.add_subcommand("triplets", "select triplets and score embeddings");
    auto triplets_args = std::make_shared<StageArgs>(triplets);
    auto* triplets_days = triplets_args->input("--days", "preprocess days.jsonl");
    auto* triplets_emb = triplets_args->input("--embeddings", "embeddings CSV");
    triplets_args->map("--window-days", "triplets.window_days");
    triplets_args->map("--n", "triplets.n", "number of triplets to sample");
    triplets_args->map("--margin", "triplets.margin");
    triplets_args->map("--vocabulary", "ingest.vocabulary");
    add_seed_flags(*triplets_args, "triplets");
    triplets->callback([triplets_args, triplets_days, triplets_emb] {
        latent::run_triplets_stage(triplets_args->config(), *triplets_days, *triplets_emb,
                                   triplets_args->out());
    });

    // ---- reduce ----
    auto* reduce = app.add_subcommand("reduce", "exact t-SNE of the embedding corpus");
    auto reduce_args = std::make_shared<StageArgs>(reduce);
    auto* reduce_emb = reduce_args->input("--embeddings", "embeddings CSV");
    reduce_args->map("--perplexity", "reduce.perplexity");
    reduce_args->map("--iters", "reduce.iterations");
    reduce_args->map("--learning-rate", "reduce.learning_rate");
    reduce_args->map("--early-exaggeration", "reduce.early_exaggeration");
    reduce_args->map("--exaggeration-iters", "reduce.exaggeration_iters");
    reduce_args->map("--kl-log-every", "reduce.kl_log_every");
    add_seed_flags(*reduce_args, "reduce");
    reduce->callback([reduce_args, reduce_emb] {
        latent::run_reduce_stage(reduce_args->config(), *reduce_emb, reduce_args->out());
    });

    // ---- cluster ----
    auto* cluster = app.add_subcommand("cluster", "k-means over points with optional k selection");
    auto cluster_args = std::make_shared<StageArgs>(cluster);
    auto* cluster_points = cluster_args->input("--points", "points or embeddings CSV");
    cluster_args->map("--k", "cluster.k", "fixed cluster count");
    auto select_k_range = std::make_shared<std::string>();
    cluster->add_option("--select-k", *select_k_range, "silhouette-select k from LO:HI");
    cluster_args->map("--restarts", "cluster.restarts");
    add_seed_flags(*cluster_args, "cluster");
    cluster->callback([cluster_args, cluster_points, select_k_range, cluster] {
        Config cfg = cluster_args->config();
        if (cluster->count("--select-k") > 0) {
            auto pos = select_k_range->find(':');
            if (pos == std::string::npos) {
                throw latent::ConfigError("--select-k expects LO:HI, e.g. 4:7");
            }
            cfg.set("cluster.select_k_lo", select_k_range->substr(0, pos));
            cfg.set("cluster.select_k_hi", select_k_range->substr(pos + 1));
        }
        latent::run_cluster_stage(cfg, *cluster_points, cluster_args->out());
    });

    // ---- states ----
    auto* states = app.add_subcommand("states", "transition matrices and PageRank state vectors");
    auto states_args = std::make_shared<StageArgs>(states);
    auto* states_points = states_args->input("--points", "2-D points CSV");
    auto* states_labels = states_args->input("--labels", "cluster labels CSV");
    states_args->map("--k", "states.k", "number of latent states");
    states_args->map("--alpha", "states.alpha", "PageRank damping factor");
    states_args->map("--threshold-quantile", "states.threshold_quantile");
    states_args->map("--threshold", "states.threshold", "absolute distance threshold");
    states_args->map("--mode", "states.mode", "proximity or temporal");
    states_args->map("--period-months", "states.period_months");
    states_args->map("--period-start", "states.period_start", "grid origin (YYYY-MM-DD)");
    states->callback([states_args, states_points, states_labels] {
        latent::run_states_stage(states_args->config(), *states_points, *states_labels,
                                 states_args->out());
    });

    // ---- analyze ----
    auto* analyze = app.add_subcommand("analyze", "period grids, similarities, correlations");
    auto analyze_args = std::make_shared<StageArgs>(analyze);
    auto* analyze_states = analyze_args->input("--states", "state vectors CSV");
    auto* analyze_clinical = analyze_args->input("--clinical", "clinical CSV or JSONL");
    analyze_args->map("--period-months", "analyze.period_months");
    analyze_args->map("--k-lo", "analyze.k_lo");
    analyze_args->map("--k-hi", "analyze.k_hi");
    add_seed_flags(*analyze_args, "analyze");
    analyze->callback([analyze_args, analyze_states, analyze_clinical] {
        latent::run_analyze_stage(analyze_args->config(), *analyze_states, *analyze_clinical,
                                  analyze_args->out());
    });

    // ---- predict ----
    auto* predict = app.add_subcommand("predict", "ridge + LOOCV over the feature-set grid");
    auto predict_args = std::make_shared<StageArgs>(predict);
    auto* predict_days = predict_args->input("--days", "preprocess days.jsonl");
    auto* predict_states = predict_args->input("--states", "state vectors CSV");
    auto* predict_clinical = predict_args->input("--clinical", "clinical CSV or JSONL");
    predict_args->map("--sets", "predict.sets", "comma list, '+' unions blocks");
    predict_args->map("--targets", "predict.targets");
    predict_args->map("--windows", "predict.windows", "analysis windows in days");
    predict_args->map("--lambda", "predict.lambda", "fixed ridge penalty");
    predict_args->map("--lambda-grid", "predict.lambda_grid", "inner-LOOCV grid");
    predict_args->map("--bootstrap", "predict.bootstrap", "bootstrap resamples");
    predict_args->map("--vocabulary", "ingest.vocabulary");
    add_seed_flags(*predict_args, "predict");
    predict->callback([predict_args, predict_days, predict_states, predict_clinical] {
        latent::run_predict_stage(predict_args->config(), *predict_days, *predict_states,
                                  *predict_clinical, predict_args->out());
    });

    // ---- pipeline ----
    auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
    auto pipeline_args = std::make_shared<StageArgs>(pipeline);
    auto manifest_path = std::make_shared<std::string>();
    pipeline->add_option("--manifest", *manifest_path,
                         "replay a previous run from its manifest");
    pipeline_args->map("--root-seed", "root_seed");
    pipeline->callback([pipeline_args, manifest_path, pipeline] {
        if (pipeline->count("--manifest") > 0) {
            latent::run_pipeline_from_manifest(*manifest_path, pipeline_args->out());
        } else {
            latent::run_pipeline(pipeline_args->config(), pipeline_args->out());
        }
    });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    } catch (const latent::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const latent::ParseError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kParseError;
    } catch (const latent::DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kDomainError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kOtherError;
    }
}
