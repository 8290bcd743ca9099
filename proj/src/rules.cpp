#include "relab/rules.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace relab {

namespace {

const Tier E = Tier::Excellent;
const Tier R = Tier::Related;
const Tier M = Tier::Mismatch;
const Tier I = Tier::Irrelevant;

void require_valid_trajectory(const Trajectory& traj, const char* op) {
    if (!traj.format_valid) {
        throw std::invalid_argument(std::string(op) + " is undefined on a malformed trajectory");
    }
}

}  // namespace

DerivationTable DerivationTable::standard() {
    DerivationTable t;
    // rows: category Excellent, Related, Mismatch, Irrelevant
    // cols: attribute Excellent, Related, Mismatch, Irrelevant
    const std::array<std::array<Tier, 4>, 4> rows{{
        {{E, R, M, I}},  // category Excellent
        {{R, R, M, I}},  // category Related
        {{M, M, M, I}},  // category Mismatch
        {{I, I, I, I}},  // category Irrelevant
    }};
    for (Tier cat : kAllTiers) {
        for (Tier attr : kAllTiers) {
            // rows/cols above are ordered Excellent..Irrelevant
            t.entries_[tier_index(cat)][tier_index(attr)] =
                rows[4 - ordinal(cat)][4 - ordinal(attr)];
        }
    }
    return t;
}

DerivationTable DerivationTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open derivation table: " + path);
    }
    DerivationTable t;
    std::array<std::array<bool, 4>, 4> seen{};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        std::string cat_s, attr_s, rel_s;
        if (!std::getline(ls, cat_s, ',') || !std::getline(ls, attr_s, ',') ||
            !std::getline(ls, rel_s)) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected category,attribute,relevance");
        }
        auto cat = tier_from_name(cat_s);
        auto attr = tier_from_name(attr_s);
        auto rel = tier_from_name(rel_s);
        if (!cat || !attr || !rel) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": unknown tier name in \"" + line + "\"");
        }
        if (seen[tier_index(*cat)][tier_index(*attr)]) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": duplicate entry for (" + cat_s + "," + attr_s + ")");
        }
        seen[tier_index(*cat)][tier_index(*attr)] = true;
        t.entries_[tier_index(*cat)][tier_index(*attr)] = *rel;
    }
    for (Tier cat : kAllTiers) {
        for (Tier attr : kAllTiers) {
            if (!seen[tier_index(cat)][tier_index(attr)]) {
                throw std::runtime_error(path + ": table is not total, missing (" +
                                         std::string(tier_name(cat)) + "," +
                                         std::string(tier_name(attr)) + ")");
            }
        }
    }
    return t;
}

Tier DerivationTable::derive(Tier category, Tier attribute) const {
    return entries_[tier_index(category)][tier_index(attribute)];
}

Tier derive_relevance(Tier category, Tier attribute) {
    static const DerivationTable table = DerivationTable::standard();
    return table.derive(category, attribute);
}

bool check_rule_adherence(const Trajectory& traj, const DerivationTable& table) {
    require_valid_trajectory(traj, "check_rule_adherence");
    return traj.derived_label() == table.derive(traj.category_tier(), traj.attribute_tier());
}

bool check_rule_adherence(const Trajectory& traj) {
    require_valid_trajectory(traj, "check_rule_adherence");
    return traj.derived_label() == derive_relevance(traj.category_tier(), traj.attribute_tier());
}

bool check_self_consistency(const Trajectory& traj) {
    require_valid_trajectory(traj, "check_self_consistency");
    return traj.initial_label() == traj.derived_label();
}

}  // namespace relab
