#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relab/guidance.hpp"
#include "relab/policy.hpp"
#include "relab/reward.hpp"
#include "relab/world.hpp"

namespace relab {

struct GRPOConfig {
    int group_size = 16;
    double clip_eps = 0.2;
    double kl_beta = 0.04;
    double adv_clip = 2.0;
    // open interval on the group correctness fraction; outside it a group
    // contributes no gradient
    double band_low = 0.01;
    double band_high = 0.9;
    double replay_tau = 0.1;
    double learning_rate = 1e-6;
    int grad_accum_steps = 16;
    int batch_size = 64;
    int max_steps = 200;

    void validate() const;  // throws std::invalid_argument
};

enum class FilterStatus : int {
    kept = 0,
    dropped_all_wrong = 1,
    dropped_too_easy = 2,
    degenerate_zero_std = 3,
};

std::string_view filter_status_name(FilterStatus s);

// G trajectories for one instance, the unit of relative advantage
// computation.
struct Group {
    std::string instance_id;
    int instance_index = -1;
    std::vector<double> obs;  // rollout observation (features ++ guidance)
    std::vector<Trajectory> trajectories;
    std::vector<RewardBreakdown> rewards;
    std::vector<double> advantages;  // clipped; empty unless kept
    double adv_mean_preclip = 0.0;
    double adv_std_preclip = 0.0;
    bool guided = false;
    std::optional<GuidanceSpec> guidance;
    FilterStatus filter_status = FilterStatus::dropped_all_wrong;

    double mean_total() const;
    // fraction of trajectories with r_rele = 1 and r_format = 1 (the
    // is-equivalent predicate of the difficulty filter)
    double correct_fraction() const;
    double reward_std() const;  // population std of totals
};

Group rollout_group(const Instance& inst, const PolicyParams& policy, const GRPOConfig& cfg,
                    const RewardConfig& reward_cfg, const SamplerConfig& sampler,
                    std::uint64_t seed, const GuidanceSpec* guidance = nullptr);

// Correctness fraction strictly inside (band_low, band_high) keeps the
// group; f <= band_low is the all-wrong side, f >= band_high the too-easy
// side; kept groups with zero reward spread are degenerate and excluded
// from the gradient.
FilterStatus filter_group(const Group& group, const GRPOConfig& cfg);

// Group-normalized scalar advantages (population statistics, epsilon-guarded
// denominator, clipped to +-adv_clip); also records the pre-clip mean/std.
// Returns false without touching advantages when the group is degenerate.
bool compute_advantages(Group& group, const GRPOConfig& cfg);

struct LossGrad {
    double loss = 0.0;       // negative objective
    double surrogate = 0.0;  // clipped-ratio term, token- and group-averaged
    double kl = 0.0;         // exact per-slot KL to the reference policy
    int kept_groups = 0;
    PolicyGrad grad;  // ascent direction of the objective
};

// Clipped-ratio objective over the kept groups of a batch:
// mean over kept groups of (1/G) sum_i (1/|o_i|) sum_t
//   [ min(rho*A, clip(rho,1-eps,1+eps)*A) - kl_beta * KL_t(policy||ref) ]
// with rho computed against policy_old and per-token KL evaluated exactly
// at the visited contexts. When ratio_on_original_prompt is set, guided
// groups are re-scored under their unguided observation (ablation).
LossGrad step_loss_and_grad(const std::vector<Group>& groups, const PolicyParams& policy,
                            const PolicyParams& policy_old, const PolicyParams& policy_ref,
                            const GRPOConfig& cfg, bool ratio_on_original_prompt = false);

struct ReplaySettings {
    bool enabled = false;
    bool force_trigger = false;  // static-guidance ablation
    std::optional<std::vector<GuidedDim>> fixed_dims;
    double tau_trigger = 0.1;
    double tau_dim = 0.3;
    bool ratio_on_original_prompt = false;
};

struct TrainOptions {
    GRPOConfig grpo;
    RewardConfig reward;
    SamplerConfig sampler;
    ReplaySettings replay;
    std::uint64_t seed = 0;
    std::string variant_label = "agrl";
    int checkpoint_every = 0;       // 0: final checkpoint only
    std::string output_dir;         // empty: keep everything in memory
    std::string config_hash = "0";  // stamped into checkpoints
};

// One row of the training trace; columns are fixed.
struct StepMetrics {
    int step = 0;
    std::string variant;
    double mean_reward_unguided = 0.0;
    double mean_reward_replayed = 0.0;
    double reward_delta = 0.0;
    double kept_ratio = 0.0;
    double entropy = 0.0;
    double rar = 0.0;
    double kl = 0.0;
    double loss = 0.0;
};

struct ReplayEvent {
    int step = 0;
    std::string instance_id;
    double mean_reward_before = 0.0;
    std::vector<GuidedDim> dims;
    double mean_reward_after = 0.0;
};

struct TrainResult {
    PolicyParams params;
    std::vector<StepMetrics> trace;
    std::vector<ReplayEvent> replay_events;
};

// Called after each step with the final (possibly replayed) groups.
using StepObserver = std::function<void(int step, const std::vector<Group>& groups)>;

// The full loop: snapshot the old policy, roll out unguided groups, let the
// replay controller regenerate low-reward groups, filter, normalize
// advantages, accumulate gradients over grad_accum_steps chunks, apply one
// ascent update, append one metrics row. Deterministic for a fixed seed.
TrainResult train(const std::vector<Instance>& dataset, const TrainOptions& opt,
                  const StepObserver& observer = nullptr);

}  // namespace relab
