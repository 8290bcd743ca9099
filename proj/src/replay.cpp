#include "relab/replay.hpp"

#include <stdexcept>

namespace relab {

std::string_view guided_dim_name(GuidedDim d) {
    switch (d) {
        case GuidedDim::category:  return "category";
        case GuidedDim::attribute: return "attribute";
        case GuidedDim::relevance: return "relevance";
    }
    return "relevance";
}

namespace {

Tier gold_tier(const Instance& inst, GuidedDim d) {
    switch (d) {
        case GuidedDim::category:  return inst.gold_category;
        case GuidedDim::attribute: return inst.gold_attribute;
        case GuidedDim::relevance: return inst.gold_relevance;
    }
    return inst.gold_relevance;
}

std::string display_dim_name(GuidedDim d) {
    switch (d) {
        case GuidedDim::category:  return "Category";
        case GuidedDim::attribute: return "Attribute";
        case GuidedDim::relevance: return "Relevance";
    }
    return "Relevance";
}

// "Category as Related and Attribute and Relevance as Mismatch": dims
// sharing a tier are grouped, in first-occurrence order.
std::string render_guidance(const std::vector<std::pair<GuidedDim, Tier>>& dims) {
    std::vector<std::pair<Tier, std::string>> segments;
    for (const auto& [dim, tier] : dims) {
        bool merged = false;
        for (auto& [seg_tier, names] : segments) {
            if (seg_tier == tier) {
                names += " and " + display_dim_name(dim);
                merged = true;
                break;
            }
        }
        if (!merged) {
            segments.emplace_back(tier, display_dim_name(dim));
        }
    }
    std::string clause;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) {
            clause += " and ";
        }
        clause += segments[i].second + " as " + std::string(tier_name(segments[i].first));
    }
    return "Guidance: Perform relevance reasoning per the guidance below, with " + clause + ".";
}

}  // namespace

GuidanceSpec make_guidance(const Instance& inst, const std::vector<GuidedDim>& dims) {
    if (dims.empty()) {
        throw std::invalid_argument("guidance requires at least one dimension");
    }
    GuidanceSpec spec;
    spec.feature_encoding.assign(kGuidanceDim, 0.0);
    for (GuidedDim d : dims) {
        const Tier tier = gold_tier(inst, d);
        spec.dims.emplace_back(d, tier);
        const int offset = d == GuidedDim::category    ? kGuidanceCategory
                           : d == GuidedDim::attribute ? kGuidanceAttribute
                                                       : kGuidanceRelevance;
        spec.feature_encoding[static_cast<std::size_t>(offset + tier_index(tier))] = 1.0;
    }
    spec.rendered_text = render_guidance(spec.dims);
    return spec;
}

GuidanceSpec build_guidance(const Instance& inst, const DimDiagnosis& diagnosis, double tau) {
    std::vector<GuidedDim> dims;
    for (GuidedDim d : {GuidedDim::category, GuidedDim::attribute, GuidedDim::relevance}) {
        if (diagnosis.get(d) < tau) {
            dims.push_back(d);
        }
    }
    if (dims.empty()) {
        dims.push_back(GuidedDim::relevance);
    }
    return make_guidance(inst, dims);
}

std::vector<double> make_observation(const Instance& inst, const GuidanceSpec* guidance) {
    std::vector<double> obs(inst.features.size() + kGuidanceDim, 0.0);
    std::copy(inst.features.begin(), inst.features.end(), obs.begin());
    if (guidance != nullptr) {
        std::copy(guidance->feature_encoding.begin(), guidance->feature_encoding.end(),
                  obs.begin() + static_cast<std::ptrdiff_t>(inst.features.size()));
    }
    return obs;
}

bool should_replay(const Group& group, double tau) {
    return group.mean_total() <= tau;
}

DimDiagnosis diagnose(const std::vector<Group>& unguided_groups) {
    std::size_t n = 0;
    DimDiagnosis d;
    for (const Group& g : unguided_groups) {
        if (g.guided) {
            continue;
        }
        for (const RewardBreakdown& r : g.rewards) {
            d.category += r.r_cate;
            d.attribute += r.r_attr;
            d.relevance += r.r_rele;
            ++n;
        }
    }
    if (n == 0) {
        throw std::invalid_argument("diagnose: no unguided trajectories in batch");
    }
    d.category /= static_cast<double>(n);
    d.attribute /= static_cast<double>(n);
    d.relevance /= static_cast<double>(n);
    return d;
}

Group replay_group(const Group& original, const GuidanceSpec& spec, const Instance& inst,
                   const PolicyParams& policy, const GRPOConfig& cfg,
                   const RewardConfig& reward_cfg, const SamplerConfig& sampler,
                   std::uint64_t seed) {
    Group g = rollout_group(inst, policy, cfg, reward_cfg, sampler, seed, &spec);
    g.instance_id = original.instance_id;
    g.instance_index = original.instance_index;
    return g;
}

}  // namespace relab
