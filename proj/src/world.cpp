#include "relab/world.hpp"

#include <cmath>
#include <stdexcept>

#include "relab/rng.hpp"
#include "relab/rules.hpp"

namespace relab {

namespace {

// Per-class noise multipliers on the (category, attribute) blocks. Each
// query class corrupts a different part of the evidence, which gives the
// per-class difficulty spread.
constexpr double kClassNoise[4][2] = {
    {1.3, 0.7},  // negation: category evidence is the weak spot
    {0.7, 1.3},  // alternative: attribute evidence is the weak spot
    {1.0, 1.0},  // qa
    {1.5, 1.5},  // knowledge: hardest overall
};

// Base scale translating noise_scale=1 into one-hot corruption strength.
constexpr double kBlockNoise = 0.55;

// Difficulty tag cut-points on the worst-block margin.
constexpr double kEasyMargin = 0.60;
constexpr double kMediumMargin = 0.15;

int sample_from_shares(Rng& rng, const std::array<double, 4>& shares) {
    double total = 0.0;
    for (double s : shares) {
        total += s;
    }
    double r = rng.uniform() * total;
    for (int i = 0; i < 3; ++i) {
        r -= shares[static_cast<std::size_t>(i)];
        if (r < 0.0) {
            return i;
        }
    }
    return 3;
}

double block_margin(const std::vector<double>& f, int offset, Tier gold) {
    const double own = f[static_cast<std::size_t>(offset + tier_index(gold))];
    double best_other = -1e300;
    for (int j = 0; j < 4; ++j) {
        if (j == tier_index(gold)) {
            continue;
        }
        best_other = std::max(best_other, f[static_cast<std::size_t>(offset + j)]);
    }
    return own - best_other;
}

}  // namespace

std::string_view query_class_name(QueryClass c) {
    switch (c) {
        case QueryClass::negation:    return "negation";
        case QueryClass::alternative: return "alternative";
        case QueryClass::qa:          return "qa";
        case QueryClass::knowledge:   return "knowledge";
    }
    return "qa";
}

std::string_view difficulty_name(DifficultyTag d) {
    switch (d) {
        case DifficultyTag::easy:   return "easy";
        case DifficultyTag::medium: return "medium";
        case DifficultyTag::hard:   return "hard";
    }
    return "medium";
}

void WorldConfig::validate() const {
    if (n_instances < 0) {
        throw std::invalid_argument("world: n_instances must be >= 0");
    }
    auto check_shares = [](const std::array<double, 4>& v, const char* name) {
        double total = 0.0;
        for (double s : v) {
            if (s < 0.0) {
                throw std::invalid_argument(std::string("world: ") + name +
                                            " entries must be >= 0");
            }
            total += s;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw std::invalid_argument(std::string("world: ") + name + " must sum to 1");
        }
    };
    check_shares(class_mix, "class_mix");
    check_shares(tier_targets, "tier_targets");
    if (threshold_fraction < 0.0 || threshold_fraction > 1.0) {
        throw std::invalid_argument("world: threshold_fraction must be in [0,1]");
    }
    if (noise_scale < 0.0) {
        throw std::invalid_argument("world: noise_scale must be >= 0");
    }
    if (!(0.0 < band_related && band_related < band_excellent && band_excellent <= 1.0)) {
        throw std::invalid_argument("world: require 0 < band_related < band_excellent <= 1");
    }
}

Tier attribute_tier_from_evidence(double evidence, bool threshold_mode,
                                  double band_excellent, double band_related) {
    if (evidence <= 0.0) {
        return Tier::Irrelevant;
    }
    if (!threshold_mode) {
        return Tier::Excellent;
    }
    if (evidence >= band_excellent) {
        return Tier::Excellent;
    }
    if (evidence >= band_related) {
        return Tier::Related;
    }
    return Tier::Mismatch;
}

std::vector<Instance> generate_world(const WorldConfig& cfg) {
    cfg.validate();
    std::vector<Instance> out;
    out.reserve(static_cast<std::size_t>(cfg.n_instances));

    for (int i = 0; i < cfg.n_instances; ++i) {
        Rng rng(mix_seed(cfg.seed, 0x5EEDu, static_cast<std::uint64_t>(i)));
        Instance inst;
        {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "w%llu-%06d",
                          static_cast<unsigned long long>(cfg.seed), i);
            inst.id = buf;
        }

        // Draw the gold relevance tier from the targets, then a (category,
        // attribute) pair uniformly among the pairs deriving to it. Sampling
        // category/attribute independently cannot honor relevance targets,
        // so the draw is inverted and the derivation invariant holds by
        // construction (and is still checked downstream).
        const Tier relevance = kAllTiers[static_cast<std::size_t>(
            sample_from_shares(rng, cfg.tier_targets))];
        std::vector<std::pair<Tier, Tier>> pairs;
        for (Tier c : kAllTiers) {
            for (Tier a : kAllTiers) {
                if (derive_relevance(c, a) == relevance) {
                    pairs.emplace_back(c, a);
                }
            }
        }
        const auto [category, attribute] = pairs[static_cast<std::size_t>(
            rng.uniform_int(static_cast<int>(pairs.size())))];

        inst.gold_category = category;
        inst.gold_attribute = attribute;
        inst.gold_relevance = relevance;
        inst.query_class = static_cast<QueryClass>(sample_from_shares(rng, cfg.class_mix));

        // Attribute rule type. Related/Mismatch tiers only exist under the
        // threshold rule, so those force threshold mode.
        bool threshold_mode = rng.uniform() < cfg.threshold_fraction;
        if (attribute == Tier::Related || attribute == Tier::Mismatch) {
            threshold_mode = true;
        }

        // Evidence level consistent with the gold attribute tier.
        double evidence = 0.0;
        const double u = rng.uniform();
        switch (attribute) {
            case Tier::Excellent:
                evidence = threshold_mode
                               ? cfg.band_excellent + u * (1.0 - cfg.band_excellent)
                               : 0.02 + 0.98 * u;
                break;
            case Tier::Related:
                evidence = cfg.band_related + u * (cfg.band_excellent - cfg.band_related) * 0.999;
                break;
            case Tier::Mismatch:
                evidence = cfg.band_related * (0.05 + 0.94 * u);
                break;
            case Tier::Irrelevant:
                evidence = 0.0;
                break;
        }

        const auto& mult = kClassNoise[static_cast<int>(inst.query_class)];
        const double sigma_cat = cfg.noise_scale * kBlockNoise * mult[0];
        const double sigma_attr = cfg.noise_scale * kBlockNoise * mult[1];

        auto& f = inst.features;
        f.assign(kFeatureDim, 0.0);
        for (int j = 0; j < 4; ++j) {
            f[static_cast<std::size_t>(kCategoryBlock + j)] =
                (j == tier_index(category) ? 1.0 : 0.0) + sigma_cat * rng.normal();
        }
        for (int j = 0; j < 4; ++j) {
            f[static_cast<std::size_t>(kAttributeBlock + j)] =
                (j == tier_index(attribute) ? 1.0 : 0.0) + sigma_attr * rng.normal();
        }
        f[kEvidenceDim] = evidence;
        f[kModeDim] = threshold_mode ? 1.0 : 0.0;
        for (int j = 0; j < 4; ++j) {
            f[static_cast<std::size_t>(kDistractorBlock + j)] = cfg.noise_scale * rng.normal();
        }

        const double margin = std::min(block_margin(f, kCategoryBlock, category),
                                       block_margin(f, kAttributeBlock, attribute));
        inst.difficulty_tag = margin >= kEasyMargin    ? DifficultyTag::easy
                              : margin >= kMediumMargin ? DifficultyTag::medium
                                                        : DifficultyTag::hard;
        out.push_back(std::move(inst));
    }
    return out;
}

const std::vector<double>& features_of(const Instance& inst) {
    return inst.features;
}

}  // namespace relab
