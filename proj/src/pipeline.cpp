#include "relab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "relab/guidance.hpp"
#include "relab/rng.hpp"
#include "relab/rules.hpp"

namespace relab {

namespace {

using json = nlohmann::ordered_json;

std::optional<QueryClass> query_class_from_name(const std::string& s) {
    for (QueryClass c : {QueryClass::negation, QueryClass::alternative, QueryClass::qa,
                         QueryClass::knowledge}) {
        if (query_class_name(c) == s) {
            return c;
        }
    }
    return std::nullopt;
}

std::optional<Tier> tier_field(const json& j, const char* key, std::string& err) {
    if (!j.contains(key)) {
        err = std::string("missing field ") + key;
        return std::nullopt;
    }
    if (!j[key].is_number_integer()) {
        err = std::string(key) + " must be an integer tier ordinal";
        return std::nullopt;
    }
    auto t = tier_from_ordinal(j[key].get<int>());
    if (!t) {
        err = std::string(key) + " must be in 1..4";
        return std::nullopt;
    }
    return t;
}

}  // namespace

std::string SamplingReport::to_json_string() const {
    json j;
    json stages_j = json::array();
    for (const Stage& s : stages) {
        json sj;
        sj["name"] = s.name;
        sj["in"] = s.in;
        sj["out"] = s.out;
        stages_j.push_back(std::move(sj));
    }
    j["stages"] = std::move(stages_j);
    j["class_before"] = class_before;
    j["class_after"] = class_after;
    j["accuracy_estimates"] = accuracy_estimates;
    json q = json::array();
    for (const QuarantineEntry& e : quarantine) {
        json ej;
        ej["line"] = e.line;
        ej["reason"] = e.reason;
        q.push_back(std::move(ej));
    }
    j["quarantine"] = std::move(q);
    return j.dump(1, '\t');
}

std::vector<DatasetRecord> ingest(const std::string& path, SamplingReport& report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open dataset: " + path);
    }
    std::vector<DatasetRecord> records;
    SamplingReport::Stage stage;
    stage.name = "ingest";
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        ++stage.in;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            report.quarantine.push_back({line_no, "invalid json"});
            continue;
        }
        DatasetRecord rec;
        std::string err;
        if (!j.contains("query") || !j["query"].is_string() || !j.contains("item") ||
            !j["item"].is_string()) {
            report.quarantine.push_back({line_no, "missing query/item"});
            continue;
        }
        rec.query = j["query"].get<std::string>();
        rec.item = j["item"].get<std::string>();
        auto cat = tier_field(j, "label_category", err);
        auto attr = cat ? tier_field(j, "label_attribution", err) : std::nullopt;
        auto rel = attr ? tier_field(j, "label_relevance", err) : std::nullopt;
        if (!rel) {
            report.quarantine.push_back({line_no, err});
            continue;
        }
        rec.label_category = *cat;
        rec.label_attribution = *attr;
        rec.label_relevance = *rel;
        if (j.contains("features")) {
            if (!j["features"].is_array()) {
                report.quarantine.push_back({line_no, "features must be an array"});
                continue;
            }
            std::vector<double> f;
            bool bad = false;
            for (const auto& v : j["features"]) {
                if (!v.is_number() || !std::isfinite(v.get<double>())) {
                    bad = true;
                    break;
                }
                f.push_back(v.get<double>());
            }
            if (bad) {
                report.quarantine.push_back({line_no, "features must be finite numbers"});
                continue;
            }
            rec.features = std::move(f);
        }
        if (j.contains("query_class")) {
            if (!j["query_class"].is_string()) {
                report.quarantine.push_back({line_no, "query_class must be a string"});
                continue;
            }
            auto qc = query_class_from_name(j["query_class"].get<std::string>());
            if (!qc) {
                report.quarantine.push_back({line_no, "unknown query_class"});
                continue;
            }
            rec.query_class = qc;
        }
        if (derive_relevance(rec.label_category, rec.label_attribution) != rec.label_relevance) {
            report.quarantine.push_back({line_no, "labels contradict the derivation rules"});
            continue;
        }
        ++report.class_before[static_cast<std::size_t>(tier_index(rec.label_relevance))];
        records.push_back(std::move(rec));
    }
    stage.out = records.size();
    report.stages.push_back(stage);
    report.class_after = report.class_before;
    return records;
}

std::vector<DatasetRecord> difficulty_sample(const std::vector<DatasetRecord>& records,
                                             const PolicyParams& probe, int k_rollouts,
                                             double band_low, double band_high,
                                             const SamplerConfig& sampler, std::uint64_t seed,
                                             SamplingReport& report) {
    if (k_rollouts < 2) {
        throw std::invalid_argument("difficulty_sample: need at least 2 rollouts per record");
    }
    if (!(band_low >= 0.0 && band_high <= 1.0 && band_low < band_high)) {
        throw std::invalid_argument("difficulty_sample: bad accuracy band");
    }
    SamplingReport::Stage stage;
    stage.name = "difficulty_sample";
    stage.in = records.size();
    report.accuracy_estimates.clear();
    report.accuracy_estimates.reserve(records.size());
    report.class_after = {};

    std::vector<DatasetRecord> retained;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const DatasetRecord& rec = records[i];
        if (!rec.features.has_value()) {
            throw std::invalid_argument("difficulty_sample: record without features (line " +
                                        std::to_string(i) + ")");
        }
        const Instance inst = instance_from_record(rec, static_cast<int>(i));
        const std::vector<double> obs = make_observation(inst, nullptr);
        int equivalent = 0;
        for (int k = 0; k < k_rollouts; ++k) {
            SamplerConfig roll = sampler;
            roll.seed = mix_seed(seed, 0xD1FFu, static_cast<std::uint64_t>(i),
                                 static_cast<std::uint64_t>(k));
            const Trajectory traj = sample(probe, obs, roll);
            if (traj.format_valid && traj.initial_label() == rec.label_relevance) {
                ++equivalent;
            }
        }
        const double accuracy =
            static_cast<double>(equivalent) / static_cast<double>(k_rollouts);
        report.accuracy_estimates.push_back(accuracy);
        if (accuracy > band_low && accuracy < band_high) {
            ++report.class_after[static_cast<std::size_t>(tier_index(rec.label_relevance))];
            retained.push_back(rec);
        }
    }
    stage.out = retained.size();
    report.stages.push_back(stage);
    return retained;
}

std::vector<DatasetRecord> undersample_balance(const std::vector<DatasetRecord>& records,
                                               const std::array<double, 4>& targets,
                                               std::uint64_t seed, SamplingReport& report) {
    if (records.empty()) {
        throw std::invalid_argument("undersample_balance: empty input");
    }
    double target_sum = 0.0;
    for (double t : targets) {
        if (t < 0.0) {
            throw std::invalid_argument("undersample_balance: negative target share");
        }
        target_sum += t;
    }
    if (std::abs(target_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("undersample_balance: targets must sum to 1");
    }

    std::array<std::vector<std::size_t>, 4> by_class;
    for (std::size_t i = 0; i < records.size(); ++i) {
        by_class[static_cast<std::size_t>(tier_index(records[i].label_relevance))].push_back(i);
    }

    // the largest total consistent with the targets and availability
    double scale = static_cast<double>(records.size());
    for (int c = 0; c < 4; ++c) {
        if (targets[static_cast<std::size_t>(c)] > 0.0) {
            scale = std::min(scale, static_cast<double>(by_class[static_cast<std::size_t>(c)].size()) /
                                        targets[static_cast<std::size_t>(c)]);
        }
    }

    SamplingReport::Stage stage;
    stage.name = "undersample_balance";
    stage.in = records.size();
    report.class_after = {};

    std::vector<std::size_t> picked;
    Rng rng(mix_seed(seed, 0xBA1Au));
    for (int c = 0; c < 4; ++c) {
        auto& idx = by_class[static_cast<std::size_t>(c)];
        const std::size_t want = std::min(
            idx.size(),
            static_cast<std::size_t>(std::floor(targets[static_cast<std::size_t>(c)] * scale + 1e-9)));
        // partial Fisher-Yates: a seeded uniform subset, order restored below
        for (std::size_t i = 0; i < want; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(rng.uniform_int(static_cast<int>(idx.size() - i)));
            std::swap(idx[i], idx[j]);
        }
        for (std::size_t i = 0; i < want; ++i) {
            picked.push_back(idx[i]);
        }
        report.class_after[static_cast<std::size_t>(c)] = want;
    }
    std::sort(picked.begin(), picked.end());

    std::vector<DatasetRecord> out;
    out.reserve(picked.size());
    for (std::size_t i : picked) {
        out.push_back(records[i]);
    }
    stage.out = out.size();
    report.stages.push_back(stage);
    return out;
}

DatasetRecord record_from_instance(const Instance& inst) {
    DatasetRecord rec;
    rec.query = "q:" + inst.id;
    rec.item = "item:" + inst.id;
    rec.label_category = inst.gold_category;
    rec.label_attribution = inst.gold_attribute;
    rec.label_relevance = inst.gold_relevance;
    rec.features = inst.features;
    rec.query_class = inst.query_class;
    return rec;
}

Instance instance_from_record(const DatasetRecord& rec, int index) {
    if (!rec.features.has_value()) {
        throw std::invalid_argument("record without features cannot drive the toy policy");
    }
    Instance inst;
    inst.id = rec.query.rfind("q:", 0) == 0 ? rec.query.substr(2)
                                            : "rec-" + std::to_string(index);
    inst.features = *rec.features;
    inst.gold_category = rec.label_category;
    inst.gold_attribute = rec.label_attribution;
    inst.gold_relevance = rec.label_relevance;
    inst.query_class = rec.query_class.value_or(QueryClass::qa);
    return inst;
}

void write_jsonl(const std::vector<DatasetRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write dataset: " + path);
    }
    for (const DatasetRecord& rec : records) {
        json j;
        j["query"] = rec.query;
        j["item"] = rec.item;
        j["label_category"] = ordinal(rec.label_category);
        j["label_attribution"] = ordinal(rec.label_attribution);
        j["label_relevance"] = ordinal(rec.label_relevance);
        if (rec.features.has_value()) {
            j["features"] = *rec.features;
        }
        if (rec.query_class.has_value()) {
            j["query_class"] = std::string(query_class_name(*rec.query_class));
        }
        out << j.dump() << '\n';
    }
}

}  // namespace relab
