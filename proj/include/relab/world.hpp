#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "relab/tier.hpp"

namespace relab {

enum class QueryClass : int { negation = 0, alternative = 1, qa = 2, knowledge = 3 };
enum class DifficultyTag : int { easy = 0, medium = 1, hard = 2 };

std::string_view query_class_name(QueryClass c);
std::string_view difficulty_name(DifficultyTag d);

// Feature vector layout. The category/attribute blocks carry a (noisy)
// one-hot of the gold tier; the evidence/mode dims carry the raw attribute
// evidence and rule type, which encode the attribute tier only through the
// asymmetric threshold-vs-presence rule; the distractor block is pure noise.
inline constexpr int kCategoryBlock = 0;    // 4 dims
inline constexpr int kAttributeBlock = 4;   // 4 dims
inline constexpr int kEvidenceDim = 8;      // raw evidence level in [0,1]
inline constexpr int kModeDim = 9;          // 1 = threshold rule, 0 = presence rule
inline constexpr int kDistractorBlock = 10; // 4 dims
inline constexpr int kFeatureDim = 14;

// A synthetic query-item pair with gold tiers.
struct Instance {
    std::string id;
    std::vector<double> features;  // kFeatureDim
    Tier gold_category = Tier::Irrelevant;
    Tier gold_attribute = Tier::Irrelevant;
    Tier gold_relevance = Tier::Irrelevant;
    DifficultyTag difficulty_tag = DifficultyTag::medium;
    QueryClass query_class = QueryClass::qa;
};

struct WorldConfig {
    std::uint64_t seed = 1;
    int n_instances = 2000;
    // negation, alternative, qa, knowledge
    std::array<double, 4> class_mix{0.25, 0.25, 0.25, 0.25};
    // fraction of threshold-type attributes ("content >= 50%"); the rest are
    // presence-type ("mere presence suffices")
    double threshold_fraction = 0.5;
    double noise_scale = 1.0;
    // target shares of gold relevance tiers 1..4
    std::array<double, 4> tier_targets{0.25, 0.25, 0.25, 0.25};
    // evidence bands for threshold-mode attributes
    double band_excellent = 0.5;
    double band_related = 0.25;

    void validate() const;  // throws std::invalid_argument
};

// Deterministic for a fixed config; instances are immutable after creation.
std::vector<Instance> generate_world(const WorldConfig& cfg);

// Stored feature vector, stable across calls.
const std::vector<double>& features_of(const Instance& inst);

// Maps raw evidence to an attribute tier under the given rule type.
// threshold: Excellent >= band_excellent, Related >= band_related,
// Mismatch > 0, Irrelevant = 0. presence: Excellent > 0, Irrelevant = 0.
Tier attribute_tier_from_evidence(double evidence, bool threshold_mode,
                                  double band_excellent, double band_related);

}  // namespace relab
