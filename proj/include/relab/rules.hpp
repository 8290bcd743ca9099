#pragma once

#include <array>
#include <string>

#include "relab/tier.hpp"
#include "relab/trajectory.hpp"

namespace relab {

// The 4x4 relevance derivation rules: (category tier, attribute tier) ->
// final relevance tier. Stored as an explicit 16-entry table rather than
// computed as min(category, attribute); the min equivalence is asserted by
// tests, and rule variants can be loaded from a config file.
class DerivationTable {
public:
    // Built-in production rules.
    static DerivationTable standard();

    // Loads 16 lines of "category,attribute,relevance" (canonical tier
    // names, '#' comments and blank lines ignored). Throws
    // std::runtime_error if the table is not total or a line is invalid.
    static DerivationTable load(const std::string& path);

    Tier derive(Tier category, Tier attribute) const;

private:
    // indexed [category][attribute], 0-based
    std::array<std::array<Tier, 4>, 4> entries_{};
};

// Table lookup on the standard rules.
Tier derive_relevance(Tier category, Tier attribute);

// True iff the trajectory's derived label agrees with the rules applied to
// its own category/attribute conclusions. Adherence is undefined on
// malformed output; callers that want "malformed counts as zero" handle
// that in the reward layer.
bool check_rule_adherence(const Trajectory& traj, const DerivationTable& table);
bool check_rule_adherence(const Trajectory& traj);

// True iff the header label matches the derived label. Same malformed
// semantics as check_rule_adherence.
bool check_self_consistency(const Trajectory& traj);

}  // namespace relab
