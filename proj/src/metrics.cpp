#include "relab/metrics.hpp"

#include <stdexcept>

#include "relab/rules.hpp"

namespace relab {

void ConfusionMatrix::add(Tier gold, Tier predicted) {
    ++counts_[static_cast<std::size_t>(tier_index(gold))]
             [static_cast<std::size_t>(tier_index(predicted))];
}

void ConfusionMatrix::add_malformed(Tier gold) {
    ++malformed_[static_cast<std::size_t>(tier_index(gold))];
}

std::size_t ConfusionMatrix::count(Tier gold, Tier predicted) const {
    return counts_[static_cast<std::size_t>(tier_index(gold))]
                  [static_cast<std::size_t>(tier_index(predicted))];
}

std::size_t ConfusionMatrix::malformed(Tier gold) const {
    return malformed_[static_cast<std::size_t>(tier_index(gold))];
}

std::size_t ConfusionMatrix::gold_total(Tier gold) const {
    std::size_t n = malformed(gold);
    for (Tier p : kAllTiers) {
        n += count(gold, p);
    }
    return n;
}

std::size_t ConfusionMatrix::predicted_total(Tier predicted) const {
    std::size_t n = 0;
    for (Tier g : kAllTiers) {
        n += count(g, predicted);
    }
    return n;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (Tier g : kAllTiers) {
        n += gold_total(g);
    }
    return n;
}

std::size_t ConfusionMatrix::malformed_total() const {
    std::size_t n = 0;
    for (Tier g : kAllTiers) {
        n += malformed(g);
    }
    return n;
}

namespace {

double f1_from_counts(double tp, double predicted, double gold) {
    const double precision = predicted > 0.0 ? tp / predicted : 0.0;
    const double recall = gold > 0.0 ? tp / gold : 0.0;
    if (precision + recall <= 0.0) {
        return 0.0;
    }
    return 2.0 * precision * recall / (precision + recall);
}

bool is_good(Tier t) { return t == Tier::Related || t == Tier::Excellent; }

}  // namespace

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (total == 0) {
        throw std::invalid_argument("classification_metrics: empty confusion matrix");
    }
    ClassificationMetrics m;
    double trace = 0.0;
    double macro = 0.0;
    for (Tier t : kAllTiers) {
        const double tp = static_cast<double>(cm.count(t, t));
        const double f1 = f1_from_counts(tp, static_cast<double>(cm.predicted_total(t)),
                                         static_cast<double>(cm.gold_total(t)));
        m.per_class_f1[static_cast<std::size_t>(tier_index(t))] = f1;
        macro += f1;
        trace += tp;
    }
    m.macro_f1 = macro / 4.0;
    m.accuracy = trace / static_cast<double>(total);

    double good_tp = 0.0, good_pred = 0.0, good_gold = 0.0;
    for (Tier g : kAllTiers) {
        for (Tier p : kAllTiers) {
            const double c = static_cast<double>(cm.count(g, p));
            if (is_good(g) && is_good(p)) {
                good_tp += c;
            }
            if (is_good(p)) {
                good_pred += c;
            }
        }
        if (is_good(g)) {
            good_gold += static_cast<double>(cm.gold_total(g));
        }
    }
    m.good_f1 = f1_from_counts(good_tp, good_pred, good_gold);
    return m;
}

double rule_adherence_rate(const std::vector<Trajectory>& trajectories) {
    if (trajectories.empty()) {
        throw std::invalid_argument("rule_adherence_rate: empty trajectory list");
    }
    std::size_t adherent = 0;
    for (const Trajectory& t : trajectories) {
        if (t.format_valid && check_rule_adherence(t)) {
            ++adherent;
        }
    }
    return static_cast<double>(adherent) / static_cast<double>(trajectories.size());
}

double gradient_contributing_ratio(const std::vector<Group>& groups) {
    if (groups.empty()) {
        return 0.0;
    }
    std::size_t contributing = 0;
    for (const Group& g : groups) {
        if (g.filter_status == FilterStatus::kept && g.reward_std() > 0.0) {
            ++contributing;
        }
    }
    return static_cast<double>(contributing) / static_cast<double>(groups.size());
}

double reward_delta(const std::vector<ReplayEvent>& events) {
    if (events.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const ReplayEvent& e : events) {
        sum += e.mean_reward_after - e.mean_reward_before;
    }
    return sum / static_cast<double>(events.size());
}

}  // namespace relab
