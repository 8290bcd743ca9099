#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "relab/rules.hpp"

using namespace relab;

TEST_CASE("tier ordinal/name mapping is lossless both ways") {
    for (Tier t : kAllTiers) {
        CHECK(tier_from_ordinal(ordinal(t)) == t);
        CHECK(tier_from_name(tier_name(t)) == t);
    }
    CHECK(tier_from_ordinal(0) == std::nullopt);
    CHECK(tier_from_ordinal(5) == std::nullopt);
    CHECK(tier_from_name("excellent") == std::nullopt);  // case-sensitive
    CHECK(tier_from_name("") == std::nullopt);
    CHECK(tier_label(Tier::Mismatch) == "2-Mismatch");
}

TEST_CASE("tier order") {
    CHECK(Tier::Irrelevant < Tier::Mismatch);
    CHECK(Tier::Mismatch < Tier::Related);
    CHECK(Tier::Related < Tier::Excellent);
    CHECK(tier_min(Tier::Related, Tier::Excellent) == Tier::Related);
}

TEST_CASE("derivation table spot values") {
    CHECK(derive_relevance(Tier::Related, Tier::Excellent) == Tier::Related);
    CHECK(derive_relevance(Tier::Irrelevant, Tier::Excellent) == Tier::Irrelevant);
    CHECK(derive_relevance(Tier::Excellent, Tier::Excellent) == Tier::Excellent);
    CHECK(derive_relevance(Tier::Excellent, Tier::Mismatch) == Tier::Mismatch);
    CHECK(derive_relevance(Tier::Mismatch, Tier::Related) == Tier::Mismatch);
    CHECK(derive_relevance(Tier::Related, Tier::Irrelevant) == Tier::Irrelevant);
}

TEST_CASE("all 16 entries equal min under the tier order") {
    for (Tier c : kAllTiers) {
        for (Tier a : kAllTiers) {
            CHECK(derive_relevance(c, a) == tier_min(c, a));
        }
    }
}

TEST_CASE("derivation is symmetric") {
    for (Tier c : kAllTiers) {
        for (Tier a : kAllTiers) {
            CHECK(derive_relevance(c, a) == derive_relevance(a, c));
        }
    }
}

TEST_CASE("rule adherence checks the derived label against the table") {
    // category Related, attribute Irrelevant derives Irrelevant
    CHECK(check_rule_adherence(
        make_trajectory(Tier::Irrelevant, Tier::Related, Tier::Irrelevant, Tier::Irrelevant)));
    // contradicts the Excellent/Excellent corner
    CHECK_FALSE(check_rule_adherence(
        make_trajectory(Tier::Mismatch, Tier::Excellent, Tier::Excellent, Tier::Mismatch)));
    // hand-enumerated: (Mismatch, Related) -> Mismatch
    CHECK(check_rule_adherence(
        make_trajectory(Tier::Mismatch, Tier::Mismatch, Tier::Related, Tier::Mismatch)));
}

TEST_CASE("self consistency compares header and derived labels") {
    CHECK(check_self_consistency(
        make_trajectory(Tier::Mismatch, Tier::Excellent, Tier::Mismatch, Tier::Mismatch)));
    // confident header with a derivation that lands elsewhere
    CHECK_FALSE(check_self_consistency(
        make_trajectory(Tier::Excellent, Tier::Excellent, Tier::Mismatch, Tier::Mismatch)));
    CHECK_FALSE(check_self_consistency(
        make_trajectory(Tier::Related, Tier::Excellent, Tier::Excellent, Tier::Excellent)));
}

TEST_CASE("adherence and consistency reject malformed trajectories") {
    Trajectory t = make_trajectory(Tier::Related, Tier::Related, Tier::Related, Tier::Related);
    t.format_valid = false;
    CHECK_THROWS_AS(check_rule_adherence(t), std::invalid_argument);
    CHECK_THROWS_AS(check_self_consistency(t), std::invalid_argument);
}

TEST_CASE("adherence ignores the header; consistency ignores the conclusions") {
    for (Tier initial : kAllTiers) {
        const Trajectory t =
            make_trajectory(initial, Tier::Related, Tier::Excellent, Tier::Related);
        CHECK(check_rule_adherence(t));
    }
    for (Tier c : kAllTiers) {
        for (Tier a : kAllTiers) {
            const Trajectory t = make_trajectory(Tier::Mismatch, c, a, Tier::Mismatch);
            CHECK(check_self_consistency(t));
        }
    }
}

TEST_CASE("table loads from a plain-text rule config") {
    const std::string path = "rules_roundtrip.csv";
    {
        std::ofstream out(path);
        out << "# rule variant: always Excellent on the diagonal, otherwise standard\n";
        for (Tier c : kAllTiers) {
            for (Tier a : kAllTiers) {
                out << tier_name(c) << ',' << tier_name(a) << ','
                    << tier_name(derive_relevance(c, a)) << '\n';
            }
        }
    }
    const DerivationTable loaded = DerivationTable::load(path);
    for (Tier c : kAllTiers) {
        for (Tier a : kAllTiers) {
            CHECK(loaded.derive(c, a) == derive_relevance(c, a));
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("table load rejects partial and malformed files") {
    const std::string path = "rules_bad.csv";
    {
        std::ofstream out(path);
        out << "Excellent,Excellent,Excellent\n";
    }
    CHECK_THROWS_AS(DerivationTable::load(path), std::runtime_error);
    {
        std::ofstream out(path);
        out << "Excellent,Excellent\n";
    }
    CHECK_THROWS_AS(DerivationTable::load(path), std::runtime_error);
    CHECK_THROWS_AS(DerivationTable::load("does_not_exist.csv"), std::runtime_error);
    std::remove(path.c_str());
}
