#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace relab {

// Four-level ordinal relevance scale, shared by category match, attribute
// match and final relevance. Total order: Irrelevant < Mismatch < Related
// < Excellent.
enum class Tier : int {
    Irrelevant = 1,
    Mismatch   = 2,
    Related    = 3,
    Excellent  = 4,
};

inline constexpr std::array<Tier, 4> kAllTiers{
    Tier::Irrelevant, Tier::Mismatch, Tier::Related, Tier::Excellent};

inline constexpr int ordinal(Tier t) { return static_cast<int>(t); }

// 0-based index, convenient for arrays and one-hot encodings.
inline constexpr int tier_index(Tier t) { return static_cast<int>(t) - 1; }

std::string_view tier_name(Tier t);

// ordinal in {1,2,3,4}; anything else is std::nullopt.
std::optional<Tier> tier_from_ordinal(int ordinal);

// Case-sensitive match against the four canonical names.
std::optional<Tier> tier_from_name(std::string_view name);

inline constexpr bool operator<(Tier a, Tier b) {
    return static_cast<int>(a) < static_cast<int>(b);
}

inline Tier tier_min(Tier a, Tier b) { return a < b ? a : b; }

// "2-Mismatch" style label used in trajectory headers and judgements.
std::string tier_label(Tier t);

}  // namespace relab
