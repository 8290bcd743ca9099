#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "relab/pipeline.hpp"
#include "relab/rng.hpp"
#include "relab/rules.hpp"
#include "test_support.hpp"

using namespace relab;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path(name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

std::string valid_line(int cat, int attr, const std::string& extra = "") {
    const Tier c = *tier_from_ordinal(cat);
    const Tier a = *tier_from_ordinal(attr);
    return R"({"query":"q","item":"i","label_category":)" + std::to_string(cat) +
           R"(,"label_attribution":)" + std::to_string(attr) + R"(,"label_relevance":)" +
           std::to_string(ordinal(derive_relevance(c, a))) + extra + "}";
}

}  // namespace

TEST_CASE("ingest keeps valid records and quarantines violations") {
    TempFile f("ingest_test.jsonl");
    {
        std::ofstream out(f.path);
        out << valid_line(3, 4) << "\n";
        out << valid_line(2, 2) << "\n";
        out << valid_line(1, 1) << "\n";
    }
    SamplingReport report;
    const auto records = ingest(f.path, report);
    CHECK(records.size() == 3);
    CHECK(report.quarantine.empty());
    CHECK(report.stages.size() == 1);
    CHECK(report.stages[0].in == 3);
    CHECK(report.stages[0].out == 3);
    CHECK(records[0].label_relevance == Tier::Related);
}

TEST_CASE("rule-inconsistent labels are quarantined, not fixed") {
    TempFile f("ingest_bad.jsonl");
    {
        std::ofstream out(f.path);
        // category Irrelevant with attribute Excellent cannot be Excellent
        out << R"({"query":"q","item":"i","label_category":1,"label_attribution":4,"label_relevance":4})"
            << "\n";
        out << "this is not json\n";
        out << R"({"query":"q","item":"i","label_category":9,"label_attribution":4,"label_relevance":4})"
            << "\n";
        out << valid_line(4, 4) << "\n";
    }
    SamplingReport report;
    const auto records = ingest(f.path, report);
    CHECK(records.size() == 1);
    REQUIRE(report.quarantine.size() == 3);
    CHECK(report.quarantine[0].line == 1);
    CHECK(report.quarantine[0].reason == "labels contradict the derivation rules");
    CHECK(report.quarantine[1].reason == "invalid json");
}

TEST_CASE("empty file ingests to an empty list") {
    TempFile f("ingest_empty.jsonl");
    { std::ofstream out(f.path); }
    SamplingReport report;
    CHECK(ingest(f.path, report).empty());
    CHECK(report.stages[0].in == 0);
    SamplingReport unused;
    CHECK_THROWS_AS(ingest("no_such_file.jsonl", unused), std::runtime_error);
}

TEST_CASE("interchange round trip with the synthetic world") {
    WorldConfig cfg;
    cfg.seed = 9;
    cfg.n_instances = 50;
    const auto world = generate_world(cfg);
    std::vector<DatasetRecord> records;
    for (const Instance& inst : world) {
        records.push_back(record_from_instance(inst));
    }
    TempFile f("interchange.jsonl");
    write_jsonl(records, f.path);
    SamplingReport report;
    const auto back = ingest(f.path, report);
    REQUIRE(back.size() == world.size());
    CHECK(report.quarantine.empty());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].label_relevance == world[i].gold_relevance);
        REQUIRE(back[i].features.has_value());
        CHECK(back[i].features->size() == world[i].features.size());
        const Instance inst = instance_from_record(back[i], static_cast<int>(i));
        CHECK(inst.features == world[i].features);
        CHECK(inst.gold_category == world[i].gold_category);
    }
}

TEST_CASE("difficulty sampling drops the always-right and always-wrong ends") {
    // saturated probe: answers the min-decode of the feature blocks
    const PolicyParams probe = testsupport::make_probe_policy(30.0);
    WorldConfig cfg;
    cfg.seed = 10;
    cfg.n_instances = 300;
    cfg.noise_scale = 1.2;
    const auto world = generate_world(cfg);
    std::vector<DatasetRecord> records;
    for (const Instance& inst : world) {
        records.push_back(record_from_instance(inst));
    }
    SamplingReport report;
    SamplerConfig sampler;
    const auto kept = difficulty_sample(records, probe, 16, 0.0, 1.0, sampler, 123, report);
    REQUIRE(report.accuracy_estimates.size() == records.size());
    CHECK(kept.size() < records.size());
    CHECK(!kept.empty());
    std::size_t interior = 0;
    for (double a : report.accuracy_estimates) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
        if (a > 0.0 && a < 1.0) {
            ++interior;
        }
    }
    CHECK(interior == kept.size());
    CHECK_THROWS_AS(difficulty_sample(records, probe, 1, 0.0, 1.0, sampler, 1, report),
                    std::invalid_argument);

    std::vector<DatasetRecord> featureless = {records[0]};
    featureless[0].features.reset();
    CHECK_THROWS_AS(difficulty_sample(featureless, probe, 4, 0.0, 1.0, sampler, 1, report),
                    std::invalid_argument);
}

TEST_CASE("difficulty sampling is deterministic for a fixed seed") {
    const PolicyParams probe = testsupport::make_probe_policy();
    WorldConfig cfg;
    cfg.seed = 12;
    cfg.n_instances = 60;
    std::vector<DatasetRecord> records;
    for (const Instance& inst : generate_world(cfg)) {
        records.push_back(record_from_instance(inst));
    }
    SamplingReport r1, r2;
    const auto a = difficulty_sample(records, probe, 8, 0.0, 1.0, SamplerConfig{}, 7, r1);
    const auto b = difficulty_sample(records, probe, 8, 0.0, 1.0, SamplerConfig{}, 7, r2);
    CHECK(a.size() == b.size());
    CHECK(r1.accuracy_estimates == r2.accuracy_estimates);
}

TEST_CASE("undersampling balances a 70/10/10/10 split to the uniform target") {
    Rng rng(13);
    std::vector<DatasetRecord> records;
    auto add = [&](Tier rel, int count) {
        for (int i = 0; i < count; ++i) {
            DatasetRecord r;
            r.query = "q" + std::to_string(records.size());
            r.item = "i";
            r.label_category = rel;
            r.label_attribution = Tier::Excellent;
            r.label_relevance = derive_relevance(rel, Tier::Excellent);
            records.push_back(r);
        }
    };
    add(Tier::Irrelevant, 700);
    add(Tier::Mismatch, 100);
    add(Tier::Related, 100);
    add(Tier::Excellent, 100);

    SamplingReport report;
    const std::array<double, 4> uniform{0.25, 0.25, 0.25, 0.25};
    const auto balanced = undersample_balance(records, uniform, 5, report);
    REQUIRE(balanced.size() == 400);
    std::array<int, 4> counts{};
    for (const DatasetRecord& r : balanced) {
        ++counts[static_cast<std::size_t>(tier_index(r.label_relevance))];
    }
    for (int c = 0; c < 4; ++c) {
        const double share = counts[static_cast<std::size_t>(c)] / 400.0;
        CHECK(std::abs(share - 0.25) <= 0.01);
    }
    // minority classes pass through untouched
    CHECK(counts[1] == 100);
    CHECK(counts[2] == 100);
    CHECK(counts[3] == 100);

    const auto again = undersample_balance(records, uniform, 5, report);
    REQUIRE(again.size() == balanced.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
        CHECK(again[i].query == balanced[i].query);
    }
    const auto other_seed = undersample_balance(records, uniform, 6, report);
    bool differs = false;
    for (std::size_t i = 0; i < other_seed.size(); ++i) {
        differs = differs || other_seed[i].query != balanced[i].query;
    }
    CHECK(differs);
}

TEST_CASE("already balanced input passes through unchanged") {
    std::vector<DatasetRecord> records;
    for (Tier t : kAllTiers) {
        for (int i = 0; i < 25; ++i) {
            DatasetRecord r;
            r.query = std::string(tier_name(t)) + std::to_string(i);
            r.item = "i";
            r.label_category = t;
            r.label_attribution = Tier::Excellent;
            r.label_relevance = derive_relevance(t, Tier::Excellent);
            records.push_back(r);
        }
    }
    SamplingReport report;
    const auto out =
        undersample_balance(records, {0.25, 0.25, 0.25, 0.25}, 9, report);
    REQUIRE(out.size() == records.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].query == records[i].query);
    }
    CHECK_THROWS_AS(undersample_balance({}, {0.25, 0.25, 0.25, 0.25}, 1, report),
                    std::invalid_argument);
    CHECK_THROWS_AS(undersample_balance(records, {0.5, 0.5, 0.5, 0.5}, 1, report),
                    std::invalid_argument);
}

TEST_CASE("three-stage funnel shrinks monotonically and keeps rule consistency") {
    WorldConfig cfg;
    cfg.seed = 14;
    cfg.n_instances = 800;
    cfg.noise_scale = 1.2;
    cfg.tier_targets = {0.4, 0.3, 0.2, 0.1};  // skew so balancing has work to do
    std::vector<DatasetRecord> records;
    for (const Instance& inst : generate_world(cfg)) {
        records.push_back(record_from_instance(inst));
    }
    TempFile f("funnel.jsonl");
    write_jsonl(records, f.path);

    SamplingReport report;
    auto stage1 = ingest(f.path, report);
    const PolicyParams probe = testsupport::make_probe_policy();
    auto stage2 = difficulty_sample(stage1, probe, 8, 0.0, 1.0, SamplerConfig{}, 3, report);
    auto stage3 = undersample_balance(stage2, {0.25, 0.25, 0.25, 0.25}, 3, report);

    CHECK(stage1.size() <= records.size());
    CHECK(stage2.size() < stage1.size());
    CHECK(stage3.size() <= stage2.size());
    for (const DatasetRecord& r : stage3) {
        CHECK(derive_relevance(r.label_category, r.label_attribution) == r.label_relevance);
    }
    for (const auto& stage : report.stages) {
        CHECK(stage.out <= stage.in);
    }
    CHECK(!report.to_json_string().empty());
}
