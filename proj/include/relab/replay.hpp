#pragma once

#include "relab/engine.hpp"

namespace relab {

// Guide-when: a group is replayed when its mean unguided reward does not
// exceed tau. At tau = 0 this fires only on exactly-zero means; the train
// loop additionally treats tau = 0 as replay-off so that configuration
// reduces exactly to the no-replay variant.
bool should_replay(const Group& group, double tau);

// Guide-what: in-batch average accuracy of each reasoning dimension over
// all trajectories of all unguided groups. Throws std::invalid_argument on
// an empty batch.
DimDiagnosis diagnose(const std::vector<Group>& unguided_groups);

struct ReplayDecision {
    bool trigger = false;
    DimDiagnosis diagnosed;
    std::optional<GuidanceSpec> spec;  // present iff trigger
};

// Regenerates the whole group from the augmented observation; rewards are
// rescored, guided provenance recorded, instance identity preserved. The
// policy is never mutated.
Group replay_group(const Group& original, const GuidanceSpec& spec, const Instance& inst,
                   const PolicyParams& policy, const GRPOConfig& cfg,
                   const RewardConfig& reward_cfg, const SamplerConfig& sampler,
                   std::uint64_t seed);

}  // namespace relab
