#include "relab/tier.hpp"

namespace relab {

std::string_view tier_name(Tier t) {
    switch (t) {
        case Tier::Irrelevant: return "Irrelevant";
        case Tier::Mismatch:   return "Mismatch";
        case Tier::Related:    return "Related";
        case Tier::Excellent:  return "Excellent";
    }
    return "Irrelevant";  // unreachable for valid tiers
}

std::optional<Tier> tier_from_ordinal(int ordinal) {
    if (ordinal < 1 || ordinal > 4) {
        return std::nullopt;
    }
    return static_cast<Tier>(ordinal);
}

std::optional<Tier> tier_from_name(std::string_view name) {
    for (Tier t : kAllTiers) {
        if (tier_name(t) == name) {
            return t;
        }
    }
    return std::nullopt;
}

std::string tier_label(Tier t) {
    return std::to_string(ordinal(t)) + "-" + std::string(tier_name(t));
}

}  // namespace relab
