#include "latent/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "latent/analyze.hpp"
#include "latent/cluster.hpp"
#include "latent/csv.hpp"
#include "latent/embed.hpp"
#include "latent/formats.hpp"
#include "latent/ingest.hpp"
#include "latent/manifest.hpp"
#include "latent/predict.hpp"
#include "latent/preprocess.hpp"
#include "latent/synth.hpp"
#include "latent/transition.hpp"
#include "latent/tsne.hpp"

namespace latent {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t stage_seed(const Config& cfg, const std::string& stage) {
    if (cfg.has(stage + ".seed")) return cfg.get_u64(stage + ".seed", 0);
    return derive_seed(cfg.get_u64("root_seed", 42), stage);
}

namespace {

void emit_manifest(const Config& cfg, const std::string& subcommand,
                   const std::map<std::string, std::string>& inputs,
                   const std::vector<std::string>& outputs, const std::string& out_dir) {
    RunManifest m;
    m.subcommand = subcommand;
    m.config = cfg.entries();
    for (const auto& [label, path] : inputs) {
        m.input_digests[label + ":" + path] = file_digest(path);
    }
    m.outputs = outputs;
    m.created_utc = utc_timestamp_now();
    write_manifest(m, out_dir + "/manifest.json");
}

Vocabulary vocab_from(const Config& cfg) {
    if (cfg.has("ingest.vocabulary")) {
        return Vocabulary::from_csv_list(cfg.get_string("ingest.vocabulary", ""));
    }
    return Vocabulary::defaults();
}

std::vector<ClinicalRecord> load_clinical_any(const std::string& path) {
    if (path.size() > 6 && path.substr(path.size() - 6) == ".jsonl") {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open " + path);
        std::vector<ClinicalRecord> out;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                throw ParseError("line " + std::to_string(line_no) + ": invalid JSON in " + path);
            }
            ClinicalRecord r;
            r.participant_id = j.at("participant_id").get<std::string>();
            auto date = parse_date(j.at("assessment_date").get<std::string>());
            if (!date) throw ParseError("line " + std::to_string(line_no) + ": invalid date");
            r.assessment_date = *date;
            r.mmse = j.at("mmse").get<int>();
            r.adas_cog = j.at("adas_cog").get<double>();
            r.hads_depression = j.at("hads_depression").get<int>();
            r.hads_anxiety = j.at("hads_anxiety").get<int>();
            r.age = j.at("age").get<double>();
            r.gender = j.at("gender").get<std::string>();
            r.lives_alone = j.at("lives_alone").get<bool>();
            r.diagnosis = j.at("diagnosis").get<std::string>();
            if (j.contains("delta_mmse")) r.delta_mmse = j["delta_mmse"].get<double>();
            if (j.contains("delta_adas")) r.delta_adas = j["delta_adas"].get<double>();
            out.push_back(std::move(r));
        }
        return out;
    }
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return parse_clinical(in, false);
}

Date month_floor(Date d) {
    auto c = civil_of(d);
    return make_date(c.year, c.month, 1);
}

}  // namespace

void run_synth_stage(const Config& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    int participants = cfg.get_int("synth.participants", 30);
    int days = cfg.get_int("synth.days", 180);
    std::string arch_spec = cfg.get_string("synth.archetypes", "default3");
    Vocabulary vocab = vocab_from(cfg);
    std::vector<ArchetypeSpec> archetypes;
    std::map<std::string, std::string> inputs;
    if (arch_spec == "default3") {
        archetypes = default_archetypes();
    } else {
        archetypes = load_archetypes(arch_spec, vocab);
        inputs["archetypes"] = arch_spec;
    }
    Date start = make_date(2024, 1, 1);
    if (cfg.has("synth.start_date")) {
        auto parsed = parse_date(cfg.get_string("synth.start_date", ""));
        if (!parsed) throw ConfigError("synth.start_date must be YYYY-MM-DD");
        start = *parsed;
    }
    SynthCohort cohort =
        generate_cohort(participants, archetypes, days, stage_seed(cfg, "synth"), start);
    write_cohort_files(cohort, out_dir);
    write_archetypes(archetypes, out_dir + "/archetypes.json");
    emit_manifest(cfg, "synth", inputs,
                  {"events.csv", "clinical.csv", "truth.csv", "archetypes.json"}, out_dir);
}

void run_ingest_stage(const Config& cfg, const std::string& events_path,
                      const std::string& clinical_path, const std::string& out_dir) {
    fs::create_directories(out_dir);
    Vocabulary vocab = vocab_from(cfg);
    bool lenient = cfg.get_bool("ingest.lenient", false);
    int tz = parse_tz_offset(cfg.get_string("ingest.tz_offset", "+00:00"));

    std::string fmt = cfg.get_string("ingest.format", "");
    EventFormat format;
    if (fmt.empty()) {
        format = events_path.size() > 6 && events_path.substr(events_path.size() - 6) == ".jsonl"
                     ? EventFormat::jsonl
                     : EventFormat::csv;
    } else if (fmt == "csv") {
        format = EventFormat::csv;
    } else if (fmt == "jsonl") {
        format = EventFormat::jsonl;
    } else {
        throw ConfigError("ingest.format must be csv or jsonl");
    }

    std::ifstream events_in(events_path);
    if (!events_in) throw ParseError("cannot open " + events_path);
    ParseStats event_stats;
    auto events = parse_events(events_in, format, vocab, lenient, &event_stats);

    std::ifstream clinical_in(clinical_path);
    if (!clinical_in) throw ParseError("cannot open " + clinical_path);
    ParseStats clinical_stats;
    auto clinical = parse_clinical(clinical_in, lenient, &clinical_stats);

    CohortIndex index = segment_days(std::move(events), std::move(clinical), tz);
    index.events_skipped = event_stats.skipped;
    index.clinical_skipped = clinical_stats.skipped;
    write_cohort(index, out_dir);
    emit_manifest(cfg, "ingest", {{"events", events_path}, {"clinical", clinical_path}},
                  {"days.jsonl", "clinical.jsonl", "summary.json"}, out_dir);
}

void run_preprocess_stage(const Config& cfg, const std::string& cohort_dir,
                          const std::string& out_dir) {
    fs::create_directories(out_dir);
    Vocabulary vocab = vocab_from(cfg);
    int window_min = cfg.get_int("preprocess.window_min", 20);
    if (window_min <= 0 || 1440 % window_min != 0) {
        throw ConfigError("preprocess.window_min must divide 1440");
    }
    if (slots_per_day(window_min) > 256) {
        throw ConfigError("preprocess.window_min yields more than 256 tokens per day");
    }
    CohortIndex cohort = read_cohort(cohort_dir);
    std::vector<DailyActivitySequence> days;
    days.reserve(cohort.days.size());
    for (const auto& d : cohort.days) {
        days.push_back(rectify_day(d, vocab, window_min, cohort.tz_offset_seconds));
    }
    write_days(days, out_dir + "/days.jsonl");
    emit_manifest(cfg, "preprocess", {{"days", cohort_dir + "/days.jsonl"}}, {"days.jsonl"},
                  out_dir);
}

void run_embed_stage(const Config& cfg, const std::string& days_path, const std::string& out_dir) {
    fs::create_directories(out_dir);
    Vocabulary vocab = vocab_from(cfg);
    std::string mode = cfg.get_string("embed.mode", "builtin");
    std::vector<EmbeddingVector> vecs;
    std::map<std::string, std::string> inputs{{"days", days_path}};
    std::size_t zero_vectors = 0;
    if (mode == "builtin") {
        int dim = cfg.get_int("embed.dim", 384);
        auto days = read_days(days_path, vocab);
        vecs.reserve(days.size());
        for (const auto& d : days) {
            EmbeddingVector v;
            v.participant_id = d.participant_id;
            v.date = d.date;
            v.values = builtin_embed(d, vocab, dim);
            if (l2_norm(v.values) == 0.0) ++zero_vectors;
            vecs.push_back(std::move(v));
        }
    } else if (mode == "import") {
        std::string import_path = cfg.require_string("embed.import_path");
        inputs["import"] = import_path;
        vecs = import_embeddings(import_path);
    } else {
        throw ConfigError("embed.mode must be builtin or import");
    }
    write_embeddings(vecs, out_dir + "/embeddings.csv");
    json report;
    report["days"] = vecs.size();
    report["dim"] = vecs.empty() ? 0 : vecs.front().values.size();
    report["zero_vectors"] = zero_vectors;
    report["mode"] = mode;
    write_file_atomic(out_dir + "/embed_report.json", report.dump(2) + "\n");
    emit_manifest(cfg, "embed", inputs, {"embeddings.csv", "embed_report.json"}, out_dir);
}

void run_triplets_stage(const Config& cfg, const std::string& days_path,
                        const std::string& embeddings_path, const std::string& out_dir) {
    fs::create_directories(out_dir);
    Vocabulary vocab = vocab_from(cfg);
    int window_days = cfg.get_int("triplets.window_days", 30);
    auto n = static_cast<std::size_t>(cfg.get_int("triplets.n", 50000));
    double margin = cfg.get_double("triplets.margin", 1.0);
    int k_lo = cfg.get_int("triplets.onehot_k_lo", 4);
    int k_hi = cfg.get_int("triplets.onehot_k_hi", 7);
    std::uint64_t seed = stage_seed(cfg, "triplets");

    auto days = read_days(days_path, vocab);
    if (days.empty()) throw DomainError("triplets: empty day corpus");

    // one-hot pre-clustering, k chosen by silhouette
    const std::size_t onehot_dim = days.front().slots.size() * vocab.slot_tokens().size();
    Matrix onehot(days.size(), onehot_dim);
    for (std::size_t i = 0; i < days.size(); ++i) {
        OneHotDay oh = one_hot_encode(days[i], vocab);
        for (std::size_t j = 0; j < onehot_dim; ++j) onehot(i, j) = oh.vec[j];
    }
    KSelection sel = select_k(onehot, k_lo, k_hi, derive_seed(seed, "onehot"));
    ClusterModel model =
        kmeans(onehot, sel.k_star, derive_seed(seed, "onehot-select-k-" +
                                                          std::to_string(sel.k_star)));

    std::vector<DayRef> refs;
    refs.reserve(days.size());
    for (const auto& d : days) refs.push_back(DayRef{d.participant_id, d.date});
    TripletSelection selection = select_triplets(refs, model.assignments, window_days, n, seed);

    // exhaustive audit of the selection criteria
    std::size_t bad_positives = 0, bad_negatives = 0;
    for (const auto& t : selection.triplets) {
        auto ok_positive = [&](std::size_t p) {
            return refs[p].participant_id == refs[t.anchor].participant_id &&
                   std::abs(refs[p].date.days - refs[t.anchor].date.days) <= window_days &&
                   refs[p].date != refs[t.anchor].date &&
                   model.assignments[p] == model.assignments[t.anchor];
        };
        if (!ok_positive(t.positive)) ++bad_positives;
        if (ok_positive(t.negative)) ++bad_negatives;
    }
    if (bad_positives || bad_negatives) {
        throw DomainError("triplet selection violated its criteria (" +
                          std::to_string(bad_positives) + " positives, " +
                          std::to_string(bad_negatives) + " negatives)");
    }

    auto embeddings = import_embeddings(embeddings_path);
    std::map<std::pair<std::string, std::int32_t>, const std::vector<double>*> by_key;
    for (const auto& e : embeddings) by_key[{e.participant_id, e.date.days}] = &e.values;
    std::vector<std::vector<double>> vectors(days.size());
    for (std::size_t i = 0; i < days.size(); ++i) {
        auto it = by_key.find({refs[i].participant_id, refs[i].date.days});
        if (it == by_key.end()) {
            throw DomainError("no embedding for day " + refs[i].participant_id + "/" +
                              to_string(refs[i].date));
        }
        vectors[i] = *it->second;
    }
    double mean_loss =
        selection.triplets.empty() ? 0.0 : corpus_loss(selection.triplets, vectors, margin);

    json report;
    report["requested"] = n;
    report["generated"] = selection.triplets.size();
    report["skipped_anchors"] = selection.skipped_anchors;
    report["onehot_k"] = sel.k_star;
    json sil = json::array();
    for (auto& [k, s] : sel.silhouettes) sil.push_back(json{{"k", k}, {"silhouette", s}});
    report["onehot_silhouettes"] = std::move(sil);
    report["window_days"] = window_days;
    report["margin"] = margin;
    report["mean_loss"] = mean_loss;
    report["criteria_violations"] = 0;
    write_file_atomic(out_dir + "/triplet_report.json", report.dump(2) + "\n");
    emit_manifest(cfg, "triplets", {{"days", days_path}, {"embeddings", embeddings_path}},
                  {"triplet_report.json"}, out_dir);
}

void run_reduce_stage(const Config& cfg, const std::string& embeddings_path,
                      const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto embeddings = import_embeddings(embeddings_path);
    if (embeddings.size() < 4) throw DomainError("reduce: need at least 4 embedded days");
    const std::size_t dim = embeddings.front().values.size();
    Matrix x(embeddings.size(), dim);
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) x(i, j) = embeddings[i].values[j];
    }
    TsneConfig tc;
    tc.perplexity = cfg.get_double("reduce.perplexity", 30.0);
    tc.iterations = cfg.get_int("reduce.iterations", 1000);
    tc.learning_rate = cfg.get_double("reduce.learning_rate", 200.0);
    tc.early_exaggeration = cfg.get_double("reduce.early_exaggeration", 12.0);
    tc.exaggeration_iters = cfg.get_int("reduce.exaggeration_iters", 250);
    tc.kl_log_every = cfg.get_int("reduce.kl_log_every", 25);
    tc.seed = stage_seed(cfg, "reduce");
    TsneResult result = tsne(x, tc);

    std::vector<PointRow> rows;
    rows.reserve(embeddings.size());
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        rows.push_back(PointRow{embeddings[i].participant_id, embeddings[i].date,
                                {result.layout(i, 0), result.layout(i, 1)}});
    }
    write_points_csv(rows, out_dir + "/points.csv");
    write_kl_trace_csv(result.kl_trace, out_dir + "/kl_trace.csv");
    emit_manifest(cfg, "reduce", {{"embeddings", embeddings_path}},
                  {"points.csv", "kl_trace.csv"}, out_dir);
}

void run_cluster_stage(const Config& cfg, const std::string& points_path,
                       const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto rows = read_point_rows(points_path);
    if (rows.empty()) throw DomainError("cluster: empty points file");
    const std::size_t dim = rows.front().values.size();
    Matrix points(rows.size(), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) points(i, j) = rows[i].values[j];
    }
    int restarts = cfg.get_int("cluster.restarts", 10);
    int max_iter = cfg.get_int("cluster.max_iter", 300);
    double tol = cfg.get_double("cluster.tol", 1e-6);
    std::uint64_t seed = stage_seed(cfg, "cluster");

    json model_dump;
    ClusterModel model;
    if (cfg.has("cluster.k")) {
        int k = cfg.get_int("cluster.k", 5);
        model = kmeans(points, k, derive_seed(seed, "select-k-" + std::to_string(k)), max_iter,
                       tol, restarts);
        model_dump["selection"] = "fixed";
        if (points.rows > static_cast<std::size_t>(k)) {
            model_dump["silhouette"] = silhouette(points, model.assignments);
        }
    } else {
        int k_lo = cfg.get_int("cluster.select_k_lo", 4);
        int k_hi = cfg.get_int("cluster.select_k_hi", 7);
        KSelection sel = select_k(points, k_lo, k_hi, seed, max_iter, tol, restarts);
        model = kmeans(points, sel.k_star,
                       derive_seed(seed, "select-k-" + std::to_string(sel.k_star)), max_iter, tol,
                       restarts);
        model_dump["selection"] = "silhouette";
        json sil = json::array();
        for (auto& [k, s] : sel.silhouettes) sil.push_back(json{{"k", k}, {"silhouette", s}});
        model_dump["silhouettes"] = std::move(sil);
        model_dump["silhouette"] = silhouette(points, model.assignments);
    }

    std::vector<LabelRow> labels;
    labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        labels.push_back(LabelRow{rows[i].participant_id, rows[i].date, model.assignments[i]});
    }
    write_labels_csv(labels, out_dir + "/labels.csv");

    model_dump["k"] = model.k;
    model_dump["inertia"] = model.inertia;
    json centroids = json::array();
    for (std::size_t c = 0; c < model.centroids.rows; ++c) {
        json row = json::array();
        for (std::size_t j = 0; j < model.centroids.cols; ++j) row.push_back(model.centroids(c, j));
        centroids.push_back(std::move(row));
    }
    model_dump["centroids"] = std::move(centroids);
    write_file_atomic(out_dir + "/model.json", model_dump.dump(2) + "\n");
    emit_manifest(cfg, "cluster", {{"points", points_path}}, {"labels.csv", "model.json"},
                  out_dir);
}

void run_states_stage(const Config& cfg, const std::string& points_path,
                      const std::string& labels_path, const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto points = read_point_rows(points_path);
    auto labels = read_labels_csv(labels_path);
    std::map<std::pair<std::string, std::int32_t>, int> label_by_key;
    int max_label = -1;
    for (const auto& l : labels) {
        label_by_key[{l.participant_id, l.date.days}] = l.cluster;
        max_label = std::max(max_label, l.cluster);
    }

    StateVectorOptions opts;
    opts.k = cfg.get_int("states.k", max_label + 1);
    if (opts.k <= max_label) {
        throw ConfigError("states.k is smaller than the largest cluster label");
    }
    opts.alpha = cfg.get_double("states.alpha", 0.85);
    opts.mode = transition_mode_from(cfg.get_string("states.mode", "proximity"));
    opts.threshold_quantile = cfg.get_double("states.threshold_quantile", 0.10);
    if (cfg.has("states.threshold")) {
        opts.threshold_absolute = cfg.get_double("states.threshold", 0.0);
    }
    opts.max_iter = cfg.get_int("states.max_iter", 100);
    opts.tol = cfg.get_double("states.tol", 1e-8);
    int period_months = cfg.get_int("states.period_months", 3);
    if (period_months < 1) throw ConfigError("states.period_months must be positive");

    if (points.empty()) throw DomainError("states: empty points file");
    Date min_date = points.front().date, max_date = points.front().date;
    for (const auto& p : points) {
        if (p.values.size() != 2) throw DomainError("states: points must be 2-D");
        min_date = std::min(min_date, p.date);
        max_date = std::max(max_date, p.date);
    }
    Date origin = month_floor(min_date);
    if (cfg.has("states.period_start")) {
        auto parsed = parse_date(cfg.get_string("states.period_start", ""));
        if (!parsed) throw ConfigError("states.period_start must be YYYY-MM-DD");
        origin = *parsed;
        if (origin > min_date) {
            throw ConfigError("states.period_start lies after the first recorded day");
        }
    }
    std::vector<std::pair<Date, Date>> periods;
    for (Date cursor = origin; cursor <= max_date;) {
        Date next = add_months(cursor, period_months);
        periods.emplace_back(cursor, next);
        cursor = next;
    }

    // (participant, period) -> labeled cloud
    std::map<std::pair<std::string, std::size_t>, std::vector<LabeledPoint>> clouds;
    for (const auto& p : points) {
        auto it = label_by_key.find({p.participant_id, p.date.days});
        if (it == label_by_key.end()) {
            throw DomainError("states: no cluster label for " + p.participant_id + "/" +
                              to_string(p.date));
        }
        std::size_t period = periods.size();
        for (std::size_t i = 0; i < periods.size(); ++i) {
            if (p.date >= periods[i].first && p.date < periods[i].second) {
                period = i;
                break;
            }
        }
        if (period == periods.size()) throw DomainError("states: date outside period grid");
        clouds[{p.participant_id, period}].push_back(
            LabeledPoint{p.date, p.values[0], p.values[1], it->second});
    }

    std::vector<StateVector> rows;
    json transitions = json::array();
    for (const auto& [key, cloud] : clouds) {
        Matrix t;
        StateVector sv = participant_state_vector(key.first, periods[key.second].first,
                                                  periods[key.second].second, cloud, opts, &t);
        json entry;
        entry["participant_id"] = key.first;
        entry["period_start"] = to_string(sv.period_start);
        entry["period_end"] = to_string(sv.period_end);
        entry["threshold"] = sv.threshold;
        entry["days"] = cloud.size();
        json matrix = json::array();
        for (std::size_t i = 0; i < t.rows; ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < t.cols; ++j) row.push_back(t(i, j));
            matrix.push_back(std::move(row));
        }
        entry["transition"] = std::move(matrix);
        transitions.push_back(std::move(entry));
        rows.push_back(std::move(sv));
    }
    write_state_vectors_csv(rows, out_dir + "/state_vectors.csv");
    write_file_atomic(out_dir + "/transitions.json", transitions.dump(2) + "\n");
    emit_manifest(cfg, "states", {{"points", points_path}, {"labels", labels_path}},
                  {"state_vectors.csv", "transitions.json"}, out_dir);
}

void run_analyze_stage(const Config& cfg, const std::string& states_path,
                       const std::string& clinical_path, const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto state_rows = read_state_vectors_csv(states_path);
    auto clinical = load_clinical_any(clinical_path);
    int period_months = cfg.get_int("analyze.period_months", 3);
    PeriodGrid grid = build_period_grid(state_rows, period_months);

    std::vector<std::string> outputs;

    // present cells, wide layout
    {
        std::string body = "participant_id,period_index,period_start,period_end";
        for (int s = 1; s <= grid.k; ++s) body += ",state" + std::to_string(s);
        body += '\n';
        for (std::size_t i = 0; i < grid.participants.size(); ++i) {
            for (std::size_t p = 0; p < grid.periods.size(); ++p) {
                const auto* cell = grid.cell(i, p);
                if (!cell) continue;
                body += csv_escape(grid.participants[i]) + ',' + std::to_string(p) + ',' +
                        to_string(grid.periods[p].first) + ',' + to_string(grid.periods[p].second);
                for (double v : *cell) {
                    body += ',';
                    body += fmt_double(v);
                }
                body += '\n';
            }
        }
        write_file_atomic(out_dir + "/grid_cells.csv", body);
        outputs.push_back("grid_cells.csv");
    }

    // full long layout (absent cells keep an empty value column)
    {
        std::string body = "period_index,participant_id,state,value\n";
        for (std::size_t p = 0; p < grid.periods.size(); ++p) {
            for (std::size_t i = 0; i < grid.participants.size(); ++i) {
                const auto* cell = grid.cell(i, p);
                for (int s = 1; s <= grid.k; ++s) {
                    body += std::to_string(p) + ',' + csv_escape(grid.participants[i]) + ',' +
                            std::to_string(s) + ',';
                    if (cell) body += fmt_double((*cell)[static_cast<std::size_t>(s - 1)]);
                    body += '\n';
                }
            }
        }
        write_file_atomic(out_dir + "/state_period_long.csv", body);
        outputs.push_back("state_period_long.csv");
    }

    // per-period similarity matrices plus the long tidy form
    {
        std::string long_body = "period_index,participant_i,participant_j,similarity\n";
        for (std::size_t p = 0; p < grid.periods.size(); ++p) {
            std::size_t present = 0;
            for (std::size_t i = 0; i < grid.participants.size(); ++i) {
                if (grid.cell(i, p)) ++present;
            }
            std::map<std::string, std::map<std::string, double>> values;
            if (present >= 2) {
                PeriodSimilarity sim = cosine_similarity_matrix(grid, p);
                std::string body = "participant_id";
                for (const auto& id : sim.participants) body += ',' + csv_escape(id);
                body += '\n';
                for (std::size_t i = 0; i < sim.participants.size(); ++i) {
                    body += csv_escape(sim.participants[i]);
                    for (std::size_t j = 0; j < sim.participants.size(); ++j) {
                        body += ',';
                        body += fmt_double(sim.matrix(i, j));
                        values[sim.participants[i]][sim.participants[j]] = sim.matrix(i, j);
                    }
                    body += '\n';
                }
                std::string name = "similarity_period_" + std::to_string(p) + ".csv";
                write_file_atomic(out_dir + "/" + name, body);
                outputs.push_back(name);
            }
            for (const auto& a : grid.participants) {
                for (const auto& b : grid.participants) {
                    long_body += std::to_string(p) + ',' + csv_escape(a) + ',' + csv_escape(b) + ',';
                    auto ia = values.find(a);
                    if (ia != values.end()) {
                        auto ib = ia->second.find(b);
                        if (ib != ia->second.end()) long_body += fmt_double(ib->second);
                    }
                    long_body += '\n';
                }
            }
        }
        write_file_atomic(out_dir + "/similarity_long.csv", long_body);
        outputs.push_back("similarity_long.csv");
    }

    // state x clinical-metric correlations
    {
        auto cells = correlate_states_clinical(grid, clinical);
        std::string body = "state,metric,r,p,n,note\n";
        for (const auto& c : cells) {
            body += std::to_string(c.state) + ',' + c.metric + ',';
            if (c.r) body += fmt_double(*c.r);
            body += ',';
            if (c.p) body += fmt_double(*c.p);
            body += ',' + std::to_string(c.n) + ',' + csv_escape(c.note) + '\n';
        }
        write_file_atomic(out_dir + "/correlations.csv", body);
        outputs.push_back("correlations.csv");
    }

    // participant coverage
    {
        std::string body = "participant_id,periods_present,total_periods\n";
        for (std::size_t i = 0; i < grid.participants.size(); ++i) {
            std::size_t present = 0;
            for (std::size_t p = 0; p < grid.periods.size(); ++p) {
                if (grid.cell(i, p)) ++present;
            }
            body += csv_escape(grid.participants[i]) + ',' + std::to_string(present) + ',' +
                    std::to_string(grid.periods.size()) + '\n';
        }
        write_file_atomic(out_dir + "/coverage.csv", body);
        outputs.push_back("coverage.csv");
    }

    // re-clustering of participant state vectors
    {
        int k_lo = cfg.get_int("analyze.k_lo", 2);
        int k_hi = cfg.get_int("analyze.k_hi", 5);
        auto states = participant_mean_states(grid);
        int max_feasible = static_cast<int>(states.size()) - 1;
        k_hi = std::min(k_hi, max_feasible);
        if (k_hi >= 2 && k_hi >= k_lo) {
            StateClusterReport report =
                cluster_state_vectors(grid, clinical, k_lo, k_hi, stage_seed(cfg, "analyze"));
            std::string body = "participant_id,cluster\n";
            for (std::size_t i = 0; i < report.participants.size(); ++i) {
                body += csv_escape(report.participants[i]) + ',' +
                        std::to_string(report.labels[i]) + '\n';
            }
            write_file_atomic(out_dir + "/state_clusters.csv", body);
            outputs.push_back("state_clusters.csv");

            std::string metrics = "cluster,metric,mean,std,n\n";
            for (const auto& m : report.metrics) {
                metrics += std::to_string(m.cluster) + ',' + m.metric + ',' +
                           fmt_double(m.mean) + ',' + fmt_double(m.stddev) + ',' +
                           std::to_string(m.n) + '\n';
            }
            write_file_atomic(out_dir + "/state_cluster_metrics.csv", metrics);
            outputs.push_back("state_cluster_metrics.csv");
        }
    }

    emit_manifest(cfg, "analyze", {{"states", states_path}, {"clinical", clinical_path}}, outputs,
                  out_dir);
}

void run_predict_stage(const Config& cfg, const std::string& days_path,
                       const std::string& states_path, const std::string& clinical_path,
                       const std::string& out_dir) {
    fs::create_directories(out_dir);
    Vocabulary vocab = vocab_from(cfg);
    auto days = read_days(days_path, vocab);
    auto state_rows = read_state_vectors_csv(states_path);
    auto clinical = load_clinical_any(clinical_path);

    // mean state vector per participant, renormalized
    std::map<std::string, std::vector<double>> state_vectors;
    {
        std::map<std::string, std::pair<std::vector<double>, std::size_t>> acc;
        for (const auto& r : state_rows) {
            auto& slot = acc[r.participant_id];
            if (slot.first.empty()) slot.first.assign(r.values.size(), 0.0);
            if (slot.first.size() != r.values.size()) {
                throw DomainError("state vectors disagree on k for " + r.participant_id);
            }
            for (std::size_t i = 0; i < r.values.size(); ++i) slot.first[i] += r.values[i];
            ++slot.second;
        }
        for (auto& [pid, slot] : acc) {
            double total = 0.0;
            for (double v : slot.first) total += v;
            if (total > 0.0) {
                for (double& v : slot.first) v /= total;
            }
            state_vectors.emplace(pid, std::move(slot.first));
        }
    }

    ExperimentRequest request;
    for (auto& s : split(cfg.get_string("predict.sets",
                                        "baseline,proportion,randomword,state,characteristics,"
                                        "state+characteristics"),
                         ',')) {
        std::string name{trim(s)};
        if (!name.empty()) request.set_names.push_back(name);
    }
    for (auto& t : split(cfg.get_string("predict.targets", "mmse,adascog"), ',')) {
        std::string name{trim(t)};
        if (!name.empty()) request.targets.push_back(target_from(name));
    }
    request.windows.clear();
    for (auto& w : split(cfg.get_string("predict.windows", "7,15,30,90,180"), ',')) {
        std::string v{trim(w)};
        if (v.empty()) continue;
        int days_w = std::stoi(v);
        if (days_w < 1) throw ConfigError("predict.windows entries must be positive");
        request.windows.push_back(days_w);
    }
    if (cfg.has("predict.lambda")) {
        request.lambda_grid = {cfg.get_double("predict.lambda", 1.0)};
    } else if (cfg.has("predict.lambda_grid")) {
        request.lambda_grid.clear();
        for (auto& l : split(cfg.get_string("predict.lambda_grid", ""), ',')) {
            request.lambda_grid.push_back(std::stod(std::string(trim(l))));
        }
        if (request.lambda_grid.empty()) throw ConfigError("predict.lambda_grid is empty");
    }
    request.bootstrap_resamples = cfg.get_int("predict.bootstrap", 1000);
    request.seed = stage_seed(cfg, "predict");

    ExperimentReport report =
        run_experiment_grid(days, state_vectors, clinical, vocab, request);
    write_report_csv(report, out_dir + "/report.csv");
    write_report_json(report, out_dir + "/report.json");
    write_predictions_csv(report, out_dir + "/predictions.csv");
    emit_manifest(cfg, "predict",
                  {{"days", days_path}, {"states", states_path}, {"clinical", clinical_path}},
                  {"report.csv", "report.json", "predictions.csv"}, out_dir);
}

void run_pipeline(const Config& cfg, const std::string& out_root) {
    cfg.validate_known_keys();
    fs::create_directories(out_root);

    auto stage = [&](const std::string& name, auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            throw ConfigError("stage " + name + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError("stage " + name + ": " + e.what());
        } catch (const std::exception& e) {
            throw DomainError("stage " + name + ": " + e.what());
        }
    };

    std::string events_path, clinical_path;
    bool use_synth = cfg.get_int("synth.participants", 0) > 0;
    if (use_synth) {
        stage("synth", [&] { run_synth_stage(cfg, out_root + "/synth"); });
        events_path = out_root + "/synth/events.csv";
        clinical_path = out_root + "/synth/clinical.csv";
    } else {
        events_path = cfg.require_string("ingest.events");
        clinical_path = cfg.require_string("ingest.clinical");
    }

    stage("ingest",
          [&] { run_ingest_stage(cfg, events_path, clinical_path, out_root + "/ingest"); });
    stage("preprocess",
          [&] { run_preprocess_stage(cfg, out_root + "/ingest", out_root + "/preprocess"); });
    stage("embed", [&] {
        run_embed_stage(cfg, out_root + "/preprocess/days.jsonl", out_root + "/embed");
    });
    stage("reduce", [&] {
        run_reduce_stage(cfg, out_root + "/embed/embeddings.csv", out_root + "/reduce");
    });
    stage("cluster", [&] {
        run_cluster_stage(cfg, out_root + "/reduce/points.csv", out_root + "/cluster");
    });
    stage("states", [&] {
        run_states_stage(cfg, out_root + "/reduce/points.csv", out_root + "/cluster/labels.csv",
                         out_root + "/states");
    });
    stage("analyze", [&] {
        run_analyze_stage(cfg, out_root + "/states/state_vectors.csv",
                          out_root + "/ingest/clinical.jsonl", out_root + "/analyze");
    });
    stage("predict", [&] {
        run_predict_stage(cfg, out_root + "/preprocess/days.jsonl",
                          out_root + "/states/state_vectors.csv",
                          out_root + "/ingest/clinical.jsonl", out_root + "/predict");
    });

    RunManifest m;
    m.subcommand = "pipeline";
    m.config = cfg.entries();
    if (!use_synth) {
        m.input_digests["events:" + events_path] = file_digest(events_path);
        m.input_digests["clinical:" + clinical_path] = file_digest(clinical_path);
    }
    for (const char* stage_dir : {"synth", "ingest", "preprocess", "embed", "reduce", "cluster",
                                  "states", "analyze", "predict"}) {
        fs::path dir = fs::path(out_root) / stage_dir;
        if (!fs::exists(dir)) continue;
        for (const auto& entry : fs::directory_iterator(dir)) {
            m.outputs.push_back(std::string(stage_dir) + "/" +
                                entry.path().filename().string());
        }
    }
    std::sort(m.outputs.begin(), m.outputs.end());
    m.created_utc = utc_timestamp_now();
    write_manifest(m, out_root + "/manifest.json");
}

void run_pipeline_from_manifest(const std::string& manifest_path, const std::string& out_root) {
    RunManifest m = read_manifest(manifest_path);
    if (m.subcommand != "pipeline") {
        throw ConfigError("manifest does not describe a pipeline run: " + manifest_path);
    }
    Config cfg;
    for (const auto& [k, v] : m.config) cfg.set(k, v);
    run_pipeline(cfg, out_root);
}

}  // namespace latent
