#pragma once

#include <string>

#include "latent/config.hpp"

namespace latent {

// Stage drivers shared by the CLI subcommands and the pipeline orchestrator.
// Every stage reads files, writes its outputs plus a manifest into out_dir,
// and never touches paths outside out_dir.

void run_synth_stage(const Config& cfg, const std::string& out_dir);
void run_ingest_stage(const Config& cfg, const std::string& events_path,
                      const std::string& clinical_path, const std::string& out_dir);
void run_preprocess_stage(const Config& cfg, const std::string& cohort_dir,
                          const std::string& out_dir);
void run_embed_stage(const Config& cfg, const std::string& days_path, const std::string& out_dir);
void run_triplets_stage(const Config& cfg, const std::string& days_path,
                        const std::string& embeddings_path, const std::string& out_dir);
void run_reduce_stage(const Config& cfg, const std::string& embeddings_path,
                      const std::string& out_dir);
void run_cluster_stage(const Config& cfg, const std::string& points_path,
                       const std::string& out_dir);
void run_states_stage(const Config& cfg, const std::string& points_path,
                      const std::string& labels_path, const std::string& out_dir);
void run_analyze_stage(const Config& cfg, const std::string& states_path,
                       const std::string& clinical_path, const std::string& out_dir);
void run_predict_stage(const Config& cfg, const std::string& days_path,
                       const std::string& states_path, const std::string& clinical_path,
                       const std::string& out_dir);

/// synth (when configured) -> ingest -> preprocess -> embed -> reduce ->
/// cluster -> states -> analyze -> predict, each stage reading the previous
/// stage's files under out_root. A failing stage aborts with its name.
void run_pipeline(const Config& cfg, const std::string& out_root);

/// Re-runs a pipeline from a stored manifest; outputs land in out_root.
void run_pipeline_from_manifest(const std::string& manifest_path, const std::string& out_root);

/// Stage seed: explicit <stage>.seed when configured, else derived from
/// root_seed and the stage name.
std::uint64_t stage_seed(const Config& cfg, const std::string& stage);

}  // namespace latent
