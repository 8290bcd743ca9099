#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "relab/tier.hpp"

namespace relab {

// Slot layout of a "respond-then-think" trajectory. The final relevance
// label is emitted first, then the category conclusion, the attribute
// conclusion, the derived label, and finally a format token that decides
// whether the rendering is well-formed or corrupted.
enum Slot : int {
    kSlotInitial   = 0,
    kSlotCategory  = 1,
    kSlotAttribute = 2,
    kSlotDerived   = 3,
    kSlotFormat    = 4,
};

inline constexpr int kNumSlots = 5;
inline constexpr std::array<int, kNumSlots> kSlotSizes{4, 4, 4, 4, 2};

// format-slot alphabet
inline constexpr int kFormatCorrupted = 0;
inline constexpr int kFormatWellFormed = 1;

// One parsed or sampled trajectory. Tokens are always present (the policy
// needs them for log-probabilities); the tier accessors are only defined
// when format_valid is true.
struct Trajectory {
    std::array<int, kNumSlots> tokens{};
    // Natural-log probabilities under the generating policy (untruncated,
    // temperature 1), one per token; 0.0 for trajectories parsed from text.
    std::array<double, kNumSlots> token_logps{};
    bool format_valid = false;
    bool guided = false;

    Tier initial_label() const   { return tier_at(kSlotInitial); }
    Tier category_tier() const   { return tier_at(kSlotCategory); }
    Tier attribute_tier() const  { return tier_at(kSlotAttribute); }
    Tier derived_label() const   { return tier_at(kSlotDerived); }

private:
    Tier tier_at(int slot) const {
        if (!format_valid) {
            throw std::logic_error("tier fields of a malformed trajectory are undefined");
        }
        return static_cast<Tier>(tokens[static_cast<std::size_t>(slot)] + 1);
    }
};

// Builds a well-formed trajectory from tier fields (token_logps zeroed).
Trajectory make_trajectory(Tier initial, Tier category, Tier attribute, Tier derived);

inline Trajectory make_trajectory(Tier initial, Tier category, Tier attribute, Tier derived) {
    Trajectory t;
    t.tokens = {tier_index(initial), tier_index(category), tier_index(attribute),
                tier_index(derived), kFormatWellFormed};
    t.format_valid = true;
    return t;
}

}  // namespace relab
