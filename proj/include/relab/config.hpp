#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relab/engine.hpp"
#include "relab/world.hpp"

namespace relab {

enum class ExperimentVariant : int {
    OUTCOME_GRPO = 0,
    GRPO_PR = 1,
    GRPO_RRS = 2,
    AGRL_FG = 3,
    AGRL_STATIC = 4,
    AGRL = 5,
};

std::string_view variant_name(ExperimentVariant v);
std::optional<ExperimentVariant> variant_from_name(std::string_view name);

struct ConfigError : std::runtime_error {
    std::string field;
    int line = 0;
    ConfigError(std::string field_, int line_, const std::string& reason)
        : std::runtime_error(field_ + (line_ > 0 ? " (line " + std::to_string(line_) + ")" : "") +
                             ": " + reason),
          field(std::move(field_)),
          line(line_) {}
};

// Replay overrides; unset values fall back to the variant defaults
// (tau_trigger = grpo.replay_tau, tau_dim = 0.5, dims from diagnosis).
struct ReplayOverrides {
    std::optional<double> tau_trigger;
    std::optional<double> tau_dim;
    std::optional<std::vector<GuidedDim>> fixed_dims;
    std::optional<bool> ratio_on_original_prompt;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    ExperimentVariant variant = ExperimentVariant::AGRL;
    std::string output_dir = "runs/out";
    std::string data_path;  // empty: generate the train set from world.*
    int checkpoint_every = 0;
    int eval_n = 2000;
    WorldConfig world;
    GRPOConfig grpo;
    SamplerConfig sampler;
    RewardConfig reward;
    std::optional<RewardVariant> reward_variant_override;
    ReplayOverrides replay;
};

// Line-based "key=value" with section prefixes (world., grpo., reward.,
// replay.); '#' comments and blank lines ignored. Unknown keys and
// malformed values raise ConfigError with the field name and line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Full round-trippable rendering with a fixed key order.
std::string serialize_config(const ExperimentConfig& cfg);

// FNV-1a hash of the canonical rendering, hex string.
std::string config_hash(const ExperimentConfig& cfg);

// Applies the variant's consistency rules (which reward variant is in
// force, whether replay runs, forced guidance dims) and produces the
// options the engine consumes. Throws ConfigError on contradictions, e.g.
// a replay override under a no-replay variant.
TrainOptions resolve_train_options(const ExperimentConfig& cfg);

// Convenience used by the CLI: "--set key=value" style single override.
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

}  // namespace relab
