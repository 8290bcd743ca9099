#pragma once

#include <string>
#include <vector>

#include "relab/config.hpp"
#include "relab/metrics.hpp"

namespace relab {

// Orchestration behind the CLI subcommands. Every run writes a manifest
// (config, config hash, seed, artifact format versions) into its output
// directory, holds a lock file while running, and marks the directory
// incomplete until it finishes. Reruns with identical config and seed are
// byte-identical.

struct EvalSummary {
    MetricsRow row;
    std::string checkpoint;
};

// Generates the synthetic train set and writes it as interchange JSONL.
void run_gen_data(const ExperimentConfig& cfg);

// The three-stage pipeline over a JSONL input: ingest -> difficulty-aware
// sampling with a probe policy -> undersampling to the tier targets.
// probe_checkpoint may be empty, which uses the zero (uniform) policy.
void run_sample_data(const ExperimentConfig& cfg, const std::string& input_path,
                     const std::string& probe_checkpoint, int k_rollouts);

// Trains the configured variant; emits trace files and checkpoints.
void run_train(const ExperimentConfig& cfg);

// Greedy-decodes the checkpoint on a held-out world and writes eval.json.
// Refuses a checkpoint whose stamped config hash disagrees with cfg.
EvalSummary run_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path);

// Trains + evals one run per sweep value under output_dir/<prefix>_<value>,
// then writes a comparison table. Per-run seeds derive from (root seed,
// sweep value).
void run_sweep_tau(const ExperimentConfig& cfg, const std::vector<double>& taus);
void run_sweep_lambda(const ExperimentConfig& cfg, const std::vector<double>& lambdas);

// Renders summary tables and per-metric curve files from a run directory.
void run_report(const std::string& run_dir);

// Held-out evaluation world (seed derived from the train world seed).
std::vector<Instance> make_eval_world(const ExperimentConfig& cfg);

// Loads the train set: data_path when set (features required), otherwise
// the generated synthetic world.
std::vector<Instance> load_train_set(const ExperimentConfig& cfg);

// Greedy-decode evaluation used by eval and the sweeps.
MetricsRow evaluate_policy(const PolicyParams& params, const std::vector<Instance>& eval_set);

}  // namespace relab
