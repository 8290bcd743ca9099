#include "relab/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace relab {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_shares(const std::array<double, 4>& v) {
    std::string s;
    for (int i = 0; i < 4; ++i) {
        if (i > 0) {
            s += ',';
        }
        s += fmt_double(v[static_cast<std::size_t>(i)]);
    }
    return s;
}

double parse_double(const std::string& key, int line, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size() || !std::isfinite(v)) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, line, "expected a real number, got \"" + value + "\"");
    }
}

long long parse_int(const std::string& key, int line, const std::string& value) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError(key, line, "expected an integer, got \"" + value + "\"");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, int line, const std::string& value) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError(key, line, "expected an unsigned integer, got \"" + value + "\"");
    }
    return v;
}

bool parse_bool(const std::string& key, int line, const std::string& value) {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw ConfigError(key, line, "expected true/false, got \"" + value + "\"");
}

std::array<double, 4> parse_shares(const std::string& key, int line, const std::string& value) {
    std::array<double, 4> out{};
    std::stringstream ss(value);
    std::string part;
    int i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 4) {
            throw ConfigError(key, line, "expected exactly 4 comma-separated shares");
        }
        out[static_cast<std::size_t>(i++)] = parse_double(key, line, part);
    }
    if (i != 4) {
        throw ConfigError(key, line, "expected exactly 4 comma-separated shares");
    }
    return out;
}

std::vector<GuidedDim> parse_dims(const std::string& key, int line, const std::string& value) {
    std::vector<GuidedDim> dims;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part == "category") {
            dims.push_back(GuidedDim::category);
        } else if (part == "attribute") {
            dims.push_back(GuidedDim::attribute);
        } else if (part == "relevance") {
            dims.push_back(GuidedDim::relevance);
        } else {
            throw ConfigError(key, line, "unknown guidance dimension \"" + part + "\"");
        }
    }
    if (dims.empty()) {
        throw ConfigError(key, line, "expected at least one dimension");
    }
    return dims;
}

std::string dims_to_string(const std::vector<GuidedDim>& dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i > 0) {
            s += ',';
        }
        s += std::string(guided_dim_name(dims[i]));
    }
    return s;
}

RewardVariant parse_reward_variant(const std::string& key, int line, const std::string& value) {
    if (value == "agrl") {
        return RewardVariant::AGRL;
    }
    if (value == "grpo_pr") {
        return RewardVariant::GRPO_PR;
    }
    if (value == "outcome_only") {
        return RewardVariant::OUTCOME_ONLY;
    }
    throw ConfigError(key, line, "unknown reward variant \"" + value + "\"");
}

constexpr double kDefaultTauDim = 0.5;

}  // namespace

std::string_view variant_name(ExperimentVariant v) {
    switch (v) {
        case ExperimentVariant::OUTCOME_GRPO: return "outcome_grpo";
        case ExperimentVariant::GRPO_PR:      return "grpo_pr";
        case ExperimentVariant::GRPO_RRS:     return "grpo_rrs";
        case ExperimentVariant::AGRL_FG:      return "agrl_fg";
        case ExperimentVariant::AGRL_STATIC:  return "agrl_static";
        case ExperimentVariant::AGRL:         return "agrl";
    }
    return "agrl";
}

std::optional<ExperimentVariant> variant_from_name(std::string_view name) {
    for (ExperimentVariant v :
         {ExperimentVariant::OUTCOME_GRPO, ExperimentVariant::GRPO_PR, ExperimentVariant::GRPO_RRS,
          ExperimentVariant::AGRL_FG, ExperimentVariant::AGRL_STATIC, ExperimentVariant::AGRL}) {
        if (variant_name(v) == name) {
            return v;
        }
    }
    return std::nullopt;
}

namespace {

void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value, int line) {
    if (key == "seed") {
        cfg.seed = parse_u64(key, line, value);
    } else if (key == "variant") {
        auto v = variant_from_name(value);
        if (!v) {
            throw ConfigError(key, line, "unknown variant \"" + value + "\"");
        }
        cfg.variant = *v;
    } else if (key == "output_dir") {
        cfg.output_dir = value;
    } else if (key == "data_path") {
        cfg.data_path = value;
    } else if (key == "checkpoint_every") {
        cfg.checkpoint_every = static_cast<int>(parse_int(key, line, value));
    } else if (key == "eval_n") {
        cfg.eval_n = static_cast<int>(parse_int(key, line, value));
    } else if (key == "world.seed") {
        cfg.world.seed = parse_u64(key, line, value);
    } else if (key == "world.n_instances") {
        cfg.world.n_instances = static_cast<int>(parse_int(key, line, value));
    } else if (key == "world.class_mix") {
        cfg.world.class_mix = parse_shares(key, line, value);
    } else if (key == "world.threshold_fraction") {
        cfg.world.threshold_fraction = parse_double(key, line, value);
    } else if (key == "world.noise_scale") {
        cfg.world.noise_scale = parse_double(key, line, value);
    } else if (key == "world.tier_targets") {
        cfg.world.tier_targets = parse_shares(key, line, value);
    } else if (key == "world.band_excellent") {
        cfg.world.band_excellent = parse_double(key, line, value);
    } else if (key == "world.band_related") {
        cfg.world.band_related = parse_double(key, line, value);
    } else if (key == "grpo.group_size") {
        cfg.grpo.group_size = static_cast<int>(parse_int(key, line, value));
    } else if (key == "grpo.clip_eps") {
        cfg.grpo.clip_eps = parse_double(key, line, value);
    } else if (key == "grpo.kl_beta") {
        cfg.grpo.kl_beta = parse_double(key, line, value);
    } else if (key == "grpo.adv_clip") {
        cfg.grpo.adv_clip = parse_double(key, line, value);
    } else if (key == "grpo.band_low") {
        cfg.grpo.band_low = parse_double(key, line, value);
    } else if (key == "grpo.band_high") {
        cfg.grpo.band_high = parse_double(key, line, value);
    } else if (key == "grpo.replay_tau") {
        cfg.grpo.replay_tau = parse_double(key, line, value);
    } else if (key == "grpo.learning_rate") {
        cfg.grpo.learning_rate = parse_double(key, line, value);
    } else if (key == "grpo.grad_accum_steps") {
        cfg.grpo.grad_accum_steps = static_cast<int>(parse_int(key, line, value));
    } else if (key == "grpo.batch_size") {
        cfg.grpo.batch_size = static_cast<int>(parse_int(key, line, value));
    } else if (key == "grpo.max_steps") {
        cfg.grpo.max_steps = static_cast<int>(parse_int(key, line, value));
    } else if (key == "grpo.temperature") {
        cfg.sampler.temperature = parse_double(key, line, value);
    } else if (key == "grpo.top_k") {
        cfg.sampler.top_k = static_cast<int>(parse_int(key, line, value));
    } else if (key == "reward.variant") {
        cfg.reward_variant_override = parse_reward_variant(key, line, value);
    } else if (key == "reward.w_cate") {
        cfg.reward.w_cate = parse_double(key, line, value);
    } else if (key == "reward.w_attr") {
        cfg.reward.w_attr = parse_double(key, line, value);
    } else if (key == "reward.w_reason") {
        cfg.reward.w_reason = parse_double(key, line, value);
    } else if (key == "reward.gating_lambda") {
        cfg.reward.gating_lambda = parse_double(key, line, value);
    } else if (key == "reward.reason_mix") {
        cfg.reward.reason_mix = parse_double(key, line, value);
    } else if (key == "replay.tau_trigger") {
        if (!value.empty()) {
            cfg.replay.tau_trigger = parse_double(key, line, value);
        }
    } else if (key == "replay.tau_dim") {
        if (!value.empty()) {
            cfg.replay.tau_dim = parse_double(key, line, value);
        }
    } else if (key == "replay.fixed_dims") {
        if (!value.empty()) {
            cfg.replay.fixed_dims = parse_dims(key, line, value);
        }
    } else if (key == "replay.ratio_on_original_prompt") {
        if (!value.empty()) {
            cfg.replay.ratio_on_original_prompt = parse_bool(key, line, value);
        }
    } else {
        throw ConfigError(key, line, "unknown configuration key");
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        // trim
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t");
        line = line.substr(first, last - first + 1);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(line, line_no, "expected key=value");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        set_key(cfg, key, value, line_no);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(path, 0, "cannot open config file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "seed=" << cfg.seed << '\n';
    out << "variant=" << variant_name(cfg.variant) << '\n';
    out << "output_dir=" << cfg.output_dir << '\n';
    out << "data_path=" << cfg.data_path << '\n';
    out << "checkpoint_every=" << cfg.checkpoint_every << '\n';
    out << "eval_n=" << cfg.eval_n << '\n';
    out << "world.seed=" << cfg.world.seed << '\n';
    out << "world.n_instances=" << cfg.world.n_instances << '\n';
    out << "world.class_mix=" << fmt_shares(cfg.world.class_mix) << '\n';
    out << "world.threshold_fraction=" << fmt_double(cfg.world.threshold_fraction) << '\n';
    out << "world.noise_scale=" << fmt_double(cfg.world.noise_scale) << '\n';
    out << "world.tier_targets=" << fmt_shares(cfg.world.tier_targets) << '\n';
    out << "world.band_excellent=" << fmt_double(cfg.world.band_excellent) << '\n';
    out << "world.band_related=" << fmt_double(cfg.world.band_related) << '\n';
    out << "grpo.group_size=" << cfg.grpo.group_size << '\n';
    out << "grpo.clip_eps=" << fmt_double(cfg.grpo.clip_eps) << '\n';
    out << "grpo.kl_beta=" << fmt_double(cfg.grpo.kl_beta) << '\n';
    out << "grpo.adv_clip=" << fmt_double(cfg.grpo.adv_clip) << '\n';
    out << "grpo.band_low=" << fmt_double(cfg.grpo.band_low) << '\n';
    out << "grpo.band_high=" << fmt_double(cfg.grpo.band_high) << '\n';
    out << "grpo.replay_tau=" << fmt_double(cfg.grpo.replay_tau) << '\n';
    out << "grpo.learning_rate=" << fmt_double(cfg.grpo.learning_rate) << '\n';
    out << "grpo.grad_accum_steps=" << cfg.grpo.grad_accum_steps << '\n';
    out << "grpo.batch_size=" << cfg.grpo.batch_size << '\n';
    out << "grpo.max_steps=" << cfg.grpo.max_steps << '\n';
    out << "grpo.temperature=" << fmt_double(cfg.sampler.temperature) << '\n';
    out << "grpo.top_k=" << cfg.sampler.top_k << '\n';
    out << "reward.variant="
        << (cfg.reward_variant_override ? reward_variant_name(*cfg.reward_variant_override) : "")
        << '\n';
    out << "reward.w_cate=" << fmt_double(cfg.reward.w_cate) << '\n';
    out << "reward.w_attr=" << fmt_double(cfg.reward.w_attr) << '\n';
    out << "reward.w_reason=" << fmt_double(cfg.reward.w_reason) << '\n';
    out << "reward.gating_lambda=" << fmt_double(cfg.reward.gating_lambda) << '\n';
    out << "reward.reason_mix=" << fmt_double(cfg.reward.reason_mix) << '\n';
    out << "replay.tau_trigger="
        << (cfg.replay.tau_trigger ? fmt_double(*cfg.replay.tau_trigger) : "") << '\n';
    out << "replay.tau_dim=" << (cfg.replay.tau_dim ? fmt_double(*cfg.replay.tau_dim) : "")
        << '\n';
    out << "replay.fixed_dims="
        << (cfg.replay.fixed_dims ? dims_to_string(*cfg.replay.fixed_dims) : "") << '\n';
    out << "replay.ratio_on_original_prompt="
        << (cfg.replay.ratio_on_original_prompt
                ? (*cfg.replay.ratio_on_original_prompt ? "true" : "false")
                : "")
        << '\n';
    return out.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
    // the hash identifies the experiment, not where its artifacts land
    ExperimentConfig keyed = cfg;
    keyed.output_dir.clear();
    const std::string text = serialize_config(keyed);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

TrainOptions resolve_train_options(const ExperimentConfig& cfg) {
    TrainOptions opt;
    opt.grpo = cfg.grpo;
    opt.reward = cfg.reward;
    opt.sampler = cfg.sampler;
    opt.seed = cfg.seed;
    opt.variant_label = std::string(variant_name(cfg.variant));
    opt.checkpoint_every = cfg.checkpoint_every;
    opt.config_hash = config_hash(cfg);

    const bool replay_variant = cfg.variant == ExperimentVariant::AGRL ||
                                cfg.variant == ExperimentVariant::AGRL_FG ||
                                cfg.variant == ExperimentVariant::AGRL_STATIC;
    if (!replay_variant) {
        if (cfg.replay.tau_trigger || cfg.replay.tau_dim || cfg.replay.fixed_dims ||
            cfg.replay.ratio_on_original_prompt) {
            throw ConfigError("replay", 0, "variant " + std::string(variant_name(cfg.variant)) +
                                               " does not run guided replay");
        }
    }

    switch (cfg.variant) {
        case ExperimentVariant::OUTCOME_GRPO:
            if (cfg.reward_variant_override &&
                *cfg.reward_variant_override != RewardVariant::OUTCOME_ONLY) {
                throw ConfigError("reward.variant", 0,
                                  "variant outcome_grpo fixes the outcome-only reward");
            }
            opt.reward.variant = RewardVariant::OUTCOME_ONLY;
            break;
        case ExperimentVariant::GRPO_PR:
            if (cfg.reward_variant_override &&
                *cfg.reward_variant_override != RewardVariant::GRPO_PR) {
                throw ConfigError("reward.variant", 0,
                                  "variant grpo_pr fixes the process-reward baseline");
            }
            opt.reward.variant = RewardVariant::GRPO_PR;
            break;
        case ExperimentVariant::GRPO_RRS:
            opt.reward.variant = cfg.reward_variant_override.value_or(RewardVariant::AGRL);
            break;
        case ExperimentVariant::AGRL_FG:
        case ExperimentVariant::AGRL_STATIC:
        case ExperimentVariant::AGRL:
            opt.reward.variant = cfg.reward_variant_override.value_or(RewardVariant::AGRL);
            break;
    }

    if (replay_variant) {
        opt.replay.enabled = true;
        opt.replay.tau_trigger = cfg.replay.tau_trigger.value_or(cfg.grpo.replay_tau);
        opt.replay.tau_dim = cfg.replay.tau_dim.value_or(kDefaultTauDim);
        opt.replay.ratio_on_original_prompt =
            cfg.replay.ratio_on_original_prompt.value_or(false);
        if (cfg.variant == ExperimentVariant::AGRL_FG ||
            cfg.variant == ExperimentVariant::AGRL_STATIC) {
            const std::vector<GuidedDim> relevance_only{GuidedDim::relevance};
            if (cfg.replay.fixed_dims && *cfg.replay.fixed_dims != relevance_only) {
                throw ConfigError("replay.fixed_dims", 0,
                                  "this variant fixes guidance to the relevance label");
            }
            opt.replay.fixed_dims = relevance_only;
        } else {
            opt.replay.fixed_dims = cfg.replay.fixed_dims;
        }
        opt.replay.force_trigger = cfg.variant == ExperimentVariant::AGRL_STATIC;
    }
    return opt;
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    set_key(cfg, key, value, 0);
}

}  // namespace relab
