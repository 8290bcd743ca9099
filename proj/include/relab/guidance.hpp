#pragma once

#include <string>
#include <vector>

#include "relab/policy.hpp"
#include "relab/world.hpp"

namespace relab {

// Reasoning dimensions that guidance can reveal.
enum class GuidedDim : int { category = 0, attribute = 1, relevance = 2 };

std::string_view guided_dim_name(GuidedDim d);

// Targeted ground-truth guidance for one instance: which dimensions are
// revealed and the gold tier of each. rendered_text is the prompt clause
// used in fixtures and logs; feature_encoding is what the policy consumes
// (zero outside the blocks of included dims).
struct GuidanceSpec {
    std::vector<std::pair<GuidedDim, Tier>> dims;
    std::string rendered_text;
    std::vector<double> feature_encoding;  // kGuidanceDim
};

// In-batch average accuracy per reasoning dimension.
struct DimDiagnosis {
    double category = 0.0;
    double attribute = 0.0;
    double relevance = 0.0;

    double get(GuidedDim d) const {
        switch (d) {
            case GuidedDim::category:  return category;
            case GuidedDim::attribute: return attribute;
            case GuidedDim::relevance: return relevance;
        }
        return 0.0;
    }
};

// Guidance with an explicit dimension set (gold tiers from the instance).
GuidanceSpec make_guidance(const Instance& inst, const std::vector<GuidedDim>& dims);

// Minimal sufficient guidance: include exactly the dimensions whose
// in-batch accuracy falls below tau; when that set is empty despite the
// group-level failure, fall back to the relevance dimension alone so a
// triggered replay always carries some guidance.
GuidanceSpec build_guidance(const Instance& inst, const DimDiagnosis& diagnosis, double tau);

// Policy observation: instance features ++ guidance encoding (zeros when
// unguided).
std::vector<double> make_observation(const Instance& inst, const GuidanceSpec* guidance);

}  // namespace relab
