#pragma once

#include "relab/trajectory.hpp"
#include "relab/world.hpp"

namespace relab {

enum class RewardVariant : int { AGRL = 0, GRPO_PR = 1, OUTCOME_ONLY = 2 };

std::string_view reward_variant_name(RewardVariant v);

struct RewardConfig {
    RewardVariant variant = RewardVariant::AGRL;
    double w_cate = 0.4;
    double w_attr = 0.4;
    double w_reason = 0.2;
    // 0 = hard gate, 1 = no gate; a failed gate attenuates by this factor
    double gating_lambda = 0.0;
    // weight of rule adherence vs self-consistency inside r_reason
    double reason_mix = 0.5;

    void validate() const;  // throws std::invalid_argument
};

// All components of one scored trajectory. For the gated composite variant,
// total = gate * (w_cate*r_cate + w_attr*r_attr + w_reason*r_reason) with
// gate = 1 iff (r_rele and r_format), else gating_lambda. Malformed output
// zeroes every component, so soft gating cannot leak reward through an
// unparseable trajectory.
struct RewardBreakdown {
    int r_cate = 0;
    int r_attr = 0;
    int r_rele = 0;
    int r_adherence = 0;
    int r_consistency = 0;
    double r_reason = 0.0;
    int r_format = 0;
    double gate = 0.0;
    double total = 0.0;
};

// Gated composite reward (the AGRL variant formula); the breakdown's total
// honors cfg.variant so the same call site scores every baseline.
RewardBreakdown score(const Trajectory& traj, const Instance& gold, const RewardConfig& cfg);

// Ungated process-reward baseline: 0.4*r_rele + 0.3*r_cate + 0.3*r_attr,
// 0 for malformed output.
double score_grpo_pr(const Trajectory& traj, const Instance& gold);

// Outcome-only baseline: 1 iff well-formed and the header label is correct.
double score_outcome(const Trajectory& traj, const Instance& gold);

}  // namespace relab
