#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "relab/engine.hpp"
#include "relab/tier.hpp"
#include "relab/trajectory.hpp"

namespace relab {

// 4x4 counts over relevance tiers, indexed (gold, predicted); malformed
// predictions are tracked per gold class and count as wrong everywhere.
class ConfusionMatrix {
public:
    void add(Tier gold, Tier predicted);
    void add_malformed(Tier gold);

    std::size_t count(Tier gold, Tier predicted) const;
    std::size_t malformed(Tier gold) const;
    std::size_t gold_total(Tier gold) const;       // includes malformed rows
    std::size_t predicted_total(Tier predicted) const;
    std::size_t total() const;
    std::size_t malformed_total() const;

private:
    std::array<std::array<std::size_t, 4>, 4> counts_{};
    std::array<std::size_t, 4> malformed_{};
};

struct ClassificationMetrics {
    std::array<double, 4> per_class_f1{};  // index = tier_index
    double macro_f1 = 0.0;
    double good_f1 = 0.0;  // tiers {3,4} collapsed into one positive class
    double accuracy = 0.0;
};

// Standard F1 (0 when undefined), unweighted macro mean, binary Good F1 on
// the {Related, Excellent} collapse, accuracy = trace/total. Throws
// std::invalid_argument on an empty matrix.
ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

// Fraction of trajectories whose derived label is consistent with their own
// category/attribute conclusions under the derivation rules; malformed
// trajectories count in the denominator as non-adherent. Throws on an empty
// list.
double rule_adherence_rate(const std::vector<Trajectory>& trajectories);

// Share of groups that survived the difficulty filter with nonzero reward
// spread (the ones that actually produce gradient).
double gradient_contributing_ratio(const std::vector<Group>& groups);

// Mean replayed-minus-unguided reward over the given replay events; 0 when
// none occurred.
double reward_delta(const std::vector<ReplayEvent>& events);

// Summary row of an evaluation run.
struct MetricsRow {
    int step = 0;
    std::array<double, 4> per_class_f1{};
    double macro_f1 = 0.0;
    double good_f1 = 0.0;
    double accuracy = 0.0;
    double rar = 0.0;
    double kept_ratio = 0.0;
    double reward_delta = 0.0;
    double entropy = 0.0;
    double kl = 0.0;
    double mean_reward_unguided = 0.0;
    double mean_reward_replayed = 0.0;
};

}  // namespace relab
