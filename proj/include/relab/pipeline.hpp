#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relab/policy.hpp"
#include "relab/tier.hpp"
#include "relab/world.hpp"

namespace relab {

// One annotated query-item record, the JSONL interchange schema:
// {"query": str, "item": str, "label_category": 1..4, "label_attribution":
//  1..4, "label_relevance": 1..4, "features": [..] (optional),
//  "query_class": "negation|alternative|qa|knowledge" (optional)}
struct DatasetRecord {
    std::string query;
    std::string item;
    Tier label_category = Tier::Irrelevant;
    Tier label_attribution = Tier::Irrelevant;
    Tier label_relevance = Tier::Irrelevant;
    std::optional<std::vector<double>> features;
    std::optional<QueryClass> query_class;
};

struct QuarantineEntry {
    std::size_t line = 0;
    std::string reason;
};

struct SamplingReport {
    struct Stage {
        std::string name;
        std::size_t in = 0;
        std::size_t out = 0;
    };
    std::vector<Stage> stages;
    std::array<std::size_t, 4> class_before{};  // relevance histogram at ingest
    std::array<std::size_t, 4> class_after{};   // after the latest stage
    std::vector<double> accuracy_estimates;     // difficulty stage, input order
    std::vector<QuarantineEntry> quarantine;

    std::string to_json_string() const;
};

// Reads JSONL records; schema violations and labels contradicting the
// derivation rules are quarantined with line numbers, never silently fixed.
// Throws std::runtime_error only when the file cannot be read.
std::vector<DatasetRecord> ingest(const std::string& path, SamplingReport& report);

// Keeps records whose probe accuracy over k rollouts lies strictly inside
// (band_low, band_high); the default (0,1) band drops always-right and
// always-wrong records. Records must carry features. Throws on k < 2.
std::vector<DatasetRecord> difficulty_sample(const std::vector<DatasetRecord>& records,
                                             const PolicyParams& probe, int k_rollouts,
                                             double band_low, double band_high,
                                             const SamplerConfig& sampler, std::uint64_t seed,
                                             SamplingReport& report);

// Seeded undersampling of high-frequency relevance classes toward the
// target shares; never up-samples, minority classes pass through.
// Throws on empty input or a non-distribution target.
std::vector<DatasetRecord> undersample_balance(const std::vector<DatasetRecord>& records,
                                               const std::array<double, 4>& targets,
                                               std::uint64_t seed, SamplingReport& report);

// Synthetic <-> interchange conversions.
DatasetRecord record_from_instance(const Instance& inst);
Instance instance_from_record(const DatasetRecord& rec, int index);

void write_jsonl(const std::vector<DatasetRecord>& records, const std::string& path);

}  // namespace relab
