#include "relab/reward.hpp"

#include <cmath>
#include <stdexcept>

#include "relab/rules.hpp"

namespace relab {

std::string_view reward_variant_name(RewardVariant v) {
    switch (v) {
        case RewardVariant::AGRL:         return "agrl";
        case RewardVariant::GRPO_PR:      return "grpo_pr";
        case RewardVariant::OUTCOME_ONLY: return "outcome_only";
    }
    return "agrl";
}

void RewardConfig::validate() const {
    if (w_cate < 0.0 || w_attr < 0.0 || w_reason < 0.0) {
        throw std::invalid_argument("reward: component weights must be >= 0");
    }
    if (variant == RewardVariant::AGRL &&
        std::abs(w_cate + w_attr + w_reason - 1.0) > 1e-9) {
        throw std::invalid_argument("reward: w_cate + w_attr + w_reason must equal 1");
    }
    if (gating_lambda < 0.0 || gating_lambda > 1.0) {
        throw std::invalid_argument("reward: gating_lambda must be in [0,1]");
    }
    if (reason_mix < 0.0 || reason_mix > 1.0) {
        throw std::invalid_argument("reward: reason_mix must be in [0,1]");
    }
}

RewardBreakdown score(const Trajectory& traj, const Instance& gold, const RewardConfig& cfg) {
    cfg.validate();
    RewardBreakdown b;
    b.r_format = traj.format_valid ? 1 : 0;
    if (traj.format_valid) {
        b.r_cate = traj.category_tier() == gold.gold_category ? 1 : 0;
        b.r_attr = traj.attribute_tier() == gold.gold_attribute ? 1 : 0;
        b.r_rele = traj.initial_label() == gold.gold_relevance ? 1 : 0;
        b.r_adherence = check_rule_adherence(traj) ? 1 : 0;
        b.r_consistency = check_self_consistency(traj) ? 1 : 0;
        b.r_reason = cfg.reason_mix * b.r_adherence + (1.0 - cfg.reason_mix) * b.r_consistency;
    }
    b.gate = (b.r_rele == 1 && b.r_format == 1) ? 1.0 : cfg.gating_lambda;

    switch (cfg.variant) {
        case RewardVariant::AGRL:
            b.total = b.gate * (cfg.w_cate * b.r_cate + cfg.w_attr * b.r_attr +
                                cfg.w_reason * b.r_reason);
            break;
        case RewardVariant::GRPO_PR:
            b.total = traj.format_valid
                          ? 0.4 * b.r_rele + 0.3 * b.r_cate + 0.3 * b.r_attr
                          : 0.0;
            break;
        case RewardVariant::OUTCOME_ONLY:
            b.total = (b.r_rele == 1 && b.r_format == 1) ? 1.0 : 0.0;
            break;
    }
    return b;
}

double score_grpo_pr(const Trajectory& traj, const Instance& gold) {
    RewardConfig cfg;
    cfg.variant = RewardVariant::GRPO_PR;
    return score(traj, gold, cfg).total;
}

double score_outcome(const Trajectory& traj, const Instance& gold) {
    RewardConfig cfg;
    cfg.variant = RewardVariant::OUTCOME_ONLY;
    return score(traj, gold, cfg).total;
}

}  // namespace relab
