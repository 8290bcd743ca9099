#include "relab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "relab/metrics.hpp"
#include "relab/replay.hpp"
#include "relab/rng.hpp"

namespace relab {

namespace {

using json = nlohmann::ordered_json;

constexpr double kLogProbFloor = -80.0;
constexpr double kStdEps = 1e-8;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void GRPOConfig::validate() const {
    if (group_size < 2) {
        throw std::invalid_argument("grpo: group_size must be >= 2");
    }
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) {
        throw std::invalid_argument("grpo: clip_eps must be in (0,1)");
    }
    if (kl_beta < 0.0) {
        throw std::invalid_argument("grpo: kl_beta must be >= 0");
    }
    if (!(adv_clip > 0.0)) {
        throw std::invalid_argument("grpo: adv_clip must be > 0");
    }
    if (!(band_low >= 0.0 && band_high <= 1.0 && band_low < band_high)) {
        throw std::invalid_argument("grpo: difficulty band must satisfy 0 <= low < high <= 1");
    }
    if (replay_tau < 0.0 || replay_tau > 1.0) {
        throw std::invalid_argument("grpo: replay_tau must be in [0,1]");
    }
    if (grad_accum_steps < 1) {
        throw std::invalid_argument("grpo: grad_accum_steps must be >= 1");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("grpo: batch_size must be >= 1");
    }
    if (max_steps < 0) {
        throw std::invalid_argument("grpo: max_steps must be >= 0");
    }
}

std::string_view filter_status_name(FilterStatus s) {
    switch (s) {
        case FilterStatus::kept:                return "kept";
        case FilterStatus::dropped_all_wrong:   return "dropped_all_wrong";
        case FilterStatus::dropped_too_easy:    return "dropped_too_easy";
        case FilterStatus::degenerate_zero_std: return "degenerate_zero_std";
    }
    return "kept";
}

double Group::mean_total() const {
    if (rewards.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const RewardBreakdown& r : rewards) {
        sum += r.total;
    }
    return sum / static_cast<double>(rewards.size());
}

double Group::correct_fraction() const {
    if (rewards.empty()) {
        return 0.0;
    }
    std::size_t n = 0;
    for (const RewardBreakdown& r : rewards) {
        if (r.r_rele == 1 && r.r_format == 1) {
            ++n;
        }
    }
    return static_cast<double>(n) / static_cast<double>(rewards.size());
}

double Group::reward_std() const {
    if (rewards.empty()) {
        return 0.0;
    }
    const double mean = mean_total();
    double var = 0.0;
    for (const RewardBreakdown& r : rewards) {
        const double d = r.total - mean;
        var += d * d;
    }
    return std::sqrt(var / static_cast<double>(rewards.size()));
}

Group rollout_group(const Instance& inst, const PolicyParams& policy, const GRPOConfig& cfg,
                    const RewardConfig& reward_cfg, const SamplerConfig& sampler,
                    std::uint64_t seed, const GuidanceSpec* guidance) {
    Group g;
    g.instance_id = inst.id;
    g.guided = guidance != nullptr;
    if (guidance != nullptr) {
        g.guidance = *guidance;
    }
    g.obs = make_observation(inst, guidance);
    g.trajectories.reserve(static_cast<std::size_t>(cfg.group_size));
    g.rewards.reserve(static_cast<std::size_t>(cfg.group_size));
    for (int i = 0; i < cfg.group_size; ++i) {
        SamplerConfig member = sampler;
        member.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        Trajectory traj = sample(policy, g.obs, member);
        traj.guided = g.guided;
        g.rewards.push_back(score(traj, inst, reward_cfg));
        g.trajectories.push_back(std::move(traj));
    }
    return g;
}

FilterStatus filter_group(const Group& group, const GRPOConfig& cfg) {
    const double f = group.correct_fraction();
    if (f <= cfg.band_low) {
        return FilterStatus::dropped_all_wrong;
    }
    if (f >= cfg.band_high) {
        return FilterStatus::dropped_too_easy;
    }
    if (group.reward_std() <= 1e-12) {
        return FilterStatus::degenerate_zero_std;
    }
    return FilterStatus::kept;
}

bool compute_advantages(Group& group, const GRPOConfig& cfg) {
    const std::size_t n = group.rewards.size();
    const double mean = group.mean_total();
    const double std = group.reward_std();
    if (std <= 1e-12) {
        return false;
    }
    const double denom = std::max(std, kStdEps);
    group.advantages.resize(n);
    double adv_sum = 0.0;
    double adv_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = (group.rewards[i].total - mean) / denom;
        adv_sum += a;
        adv_sq += a * a;
        group.advantages[i] = std::clamp(a, -cfg.adv_clip, cfg.adv_clip);
    }
    group.adv_mean_preclip = adv_sum / static_cast<double>(n);
    const double var = adv_sq / static_cast<double>(n) -
                       group.adv_mean_preclip * group.adv_mean_preclip;
    group.adv_std_preclip = std::sqrt(std::max(var, 0.0));
    return true;
}

namespace {

// Unnormalized accumulation over kept groups; merged across accumulation
// chunks, then divided once by the kept-group count.
struct LossParts {
    double surrogate_sum = 0.0;
    double kl_sum = 0.0;
    int kept_groups = 0;
    PolicyGrad grad_sum;

    explicit LossParts(const PolicyParams& shape) : grad_sum(PolicyGrad::zeros_like(shape)) {}

    void merge(const LossParts& other) {
        surrogate_sum += other.surrogate_sum;
        kl_sum += other.kl_sum;
        kept_groups += other.kept_groups;
        grad_sum.add_scaled(other.grad_sum, 1.0);
    }
};

void accumulate_group(LossParts& parts, const Group& group, const PolicyParams& policy,
                      const PolicyParams& policy_old, const PolicyParams& policy_ref,
                      const GRPOConfig& cfg, bool ratio_on_original_prompt,
                      std::vector<double>& obs_scratch, std::vector<double>& input_scratch) {
    if (group.filter_status != FilterStatus::kept) {
        return;
    }
    const std::vector<double>* obs = &group.obs;
    if (ratio_on_original_prompt && group.guided) {
        // ablation: score the guided tokens as if conditioned on the
        // original, unguided prompt
        obs_scratch = group.obs;
        const std::size_t guidance_at = obs_scratch.size() - kGuidanceDim;
        std::fill(obs_scratch.begin() + static_cast<std::ptrdiff_t>(guidance_at),
                  obs_scratch.end(), 0.0);
        obs = &obs_scratch;
    }

    const double g_count = static_cast<double>(group.trajectories.size());
    const double token_w = 1.0 / (g_count * static_cast<double>(kNumSlots));
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        const Trajectory& traj = group.trajectories[i];
        const double adv = group.advantages[i];
        for (int s = 0; s < kNumSlots; ++s) {
            assemble_input(*obs, traj.tokens.data(), s, input_scratch);
            const SlotDist d_new = slot_dist(policy, s, input_scratch);
            const SlotDist d_old = slot_dist(policy_old, s, input_scratch);
            const SlotDist d_ref = slot_dist(policy_ref, s, input_scratch);
            const int tok = traj.tokens[static_cast<std::size_t>(s)];

            const double lp_new = std::max(d_new.logps[static_cast<std::size_t>(tok)], kLogProbFloor);
            const double lp_old = std::max(d_old.logps[static_cast<std::size_t>(tok)], kLogProbFloor);
            const double rho = std::exp(lp_new - lp_old);
            const double unclipped = rho * adv;
            const double clipped =
                std::clamp(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;

            double kl_t = 0.0;
            for (int j = 0; j < d_new.size; ++j) {
                kl_t += d_new.probs[static_cast<std::size_t>(j)] *
                        (d_new.logps[static_cast<std::size_t>(j)] -
                         d_ref.logps[static_cast<std::size_t>(j)]);
            }

            double surr_coef = 0.0;  // d surrogate / d logp(tok)
            if (unclipped <= clipped) {
                parts.surrogate_sum += token_w * unclipped;
                surr_coef = rho * adv;
            } else {
                parts.surrogate_sum += token_w * clipped;  // saturated clip, no gradient
            }
            parts.kl_sum += token_w * kl_t;

            Matrix& gm = parts.grad_sum.slots[static_cast<std::size_t>(s)];
            for (int r = 0; r < gm.rows; ++r) {
                const double p_r = d_new.probs[static_cast<std::size_t>(r)];
                // surrogate: coef * (onehot - p); KL penalty (ascent of
                // -beta*KL): -beta * p * ((logp - logref) - kl)
                double coef = surr_coef * ((r == tok ? 1.0 : 0.0) - p_r);
                if (cfg.kl_beta != 0.0) {
                    coef -= cfg.kl_beta * p_r *
                            ((d_new.logps[static_cast<std::size_t>(r)] -
                              d_ref.logps[static_cast<std::size_t>(r)]) -
                             kl_t);
                }
                if (coef != 0.0) {
                    const double w = token_w * coef;
                    double* row = &gm.a[static_cast<std::size_t>(r) * gm.cols];
                    for (int c = 0; c < gm.cols; ++c) {
                        row[c] += w * input_scratch[static_cast<std::size_t>(c)];
                    }
                }
            }
        }
    }
    ++parts.kept_groups;
}

LossGrad finalize_parts(const LossParts& parts, const GRPOConfig& cfg,
                        const PolicyParams& shape) {
    LossGrad out;
    out.grad = PolicyGrad::zeros_like(shape);
    out.kept_groups = parts.kept_groups;
    if (parts.kept_groups == 0) {
        return out;
    }
    const double inv = 1.0 / static_cast<double>(parts.kept_groups);
    out.surrogate = parts.surrogate_sum * inv;
    out.kl = parts.kl_sum * inv;
    out.loss = -(out.surrogate - cfg.kl_beta * out.kl);
    out.grad.add_scaled(parts.grad_sum, inv);
    return out;
}

}  // namespace

LossGrad step_loss_and_grad(const std::vector<Group>& groups, const PolicyParams& policy,
                            const PolicyParams& policy_old, const PolicyParams& policy_ref,
                            const GRPOConfig& cfg, bool ratio_on_original_prompt) {
    cfg.validate();
    LossParts parts(policy);
    std::vector<double> obs_scratch, input_scratch;
    for (const Group& g : groups) {
        accumulate_group(parts, g, policy, policy_old, policy_ref, cfg,
                         ratio_on_original_prompt, obs_scratch, input_scratch);
    }
    return finalize_parts(parts, cfg, policy);
}

namespace {

struct TraceFiles {
    std::ofstream csv;
    std::ofstream jsonl;
    std::ofstream replay_log;
    std::ofstream groups_log;
    bool enabled = false;
};

void open_traces(TraceFiles& files, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    files.csv.open(dir + "/trace.csv", std::ios::binary);
    files.jsonl.open(dir + "/trace.jsonl", std::ios::binary);
    files.replay_log.open(dir + "/replay_log.jsonl", std::ios::binary);
    files.groups_log.open(dir + "/groups.jsonl", std::ios::binary);
    if (!files.csv || !files.jsonl || !files.replay_log || !files.groups_log) {
        throw std::runtime_error("cannot open trace files under " + dir);
    }
    files.csv << "step,variant,mean_reward_unguided,mean_reward_replayed,reward_delta,"
                 "kept_ratio,entropy,rar,kl,loss\n";
    files.enabled = true;
}

void write_step(TraceFiles& files, const StepMetrics& row) {
    if (!files.enabled) {
        return;
    }
    files.csv << row.step << ',' << row.variant << ',' << fmt_double(row.mean_reward_unguided)
              << ',' << fmt_double(row.mean_reward_replayed) << ','
              << fmt_double(row.reward_delta) << ',' << fmt_double(row.kept_ratio) << ','
              << fmt_double(row.entropy) << ',' << fmt_double(row.rar) << ','
              << fmt_double(row.kl) << ',' << fmt_double(row.loss) << '\n';
    json j;
    j["step"] = row.step;
    j["variant"] = row.variant;
    j["mean_reward_unguided"] = row.mean_reward_unguided;
    j["mean_reward_replayed"] = row.mean_reward_replayed;
    j["reward_delta"] = row.reward_delta;
    j["kept_ratio"] = row.kept_ratio;
    j["entropy"] = row.entropy;
    j["rar"] = row.rar;
    j["kl"] = row.kl;
    j["loss"] = row.loss;
    files.jsonl << j.dump() << '\n';
}

void write_replay_event(TraceFiles& files, const ReplayEvent& ev) {
    if (!files.enabled) {
        return;
    }
    json j;
    j["step"] = ev.step;
    j["instance_id"] = ev.instance_id;
    j["mean_reward_before"] = ev.mean_reward_before;
    json dims = json::array();
    for (GuidedDim d : ev.dims) {
        dims.push_back(std::string(guided_dim_name(d)));
    }
    j["dims"] = std::move(dims);
    j["mean_reward_after"] = ev.mean_reward_after;
    files.replay_log << j.dump() << '\n';
}

void write_group_audit(TraceFiles& files, int step, const Group& g) {
    if (!files.enabled) {
        return;
    }
    json j;
    j["step"] = step;
    j["instance_id"] = g.instance_id;
    j["guided"] = g.guided;
    j["f"] = g.correct_fraction();
    j["status"] = std::string(filter_status_name(g.filter_status));
    j["mean_total"] = g.mean_total();
    j["adv_mean_preclip"] = g.adv_mean_preclip;
    j["adv_std_preclip"] = g.adv_std_preclip;
    // group means of every reward component
    double cate = 0, attr = 0, rele = 0, adh = 0, cons = 0, reason = 0, format = 0, gate = 0;
    for (const RewardBreakdown& r : g.rewards) {
        cate += r.r_cate;
        attr += r.r_attr;
        rele += r.r_rele;
        adh += r.r_adherence;
        cons += r.r_consistency;
        reason += r.r_reason;
        format += r.r_format;
        gate += r.gate;
    }
    const double inv = g.rewards.empty() ? 0.0 : 1.0 / static_cast<double>(g.rewards.size());
    j["r_cate"] = cate * inv;
    j["r_attr"] = attr * inv;
    j["r_rele"] = rele * inv;
    j["r_adherence"] = adh * inv;
    j["r_consistency"] = cons * inv;
    j["r_reason"] = reason * inv;
    j["r_format"] = format * inv;
    j["gate"] = gate * inv;
    files.groups_log << j.dump() << '\n';
}

}  // namespace

TrainResult train(const std::vector<Instance>& dataset, const TrainOptions& opt,
                  const StepObserver& observer) {
    opt.grpo.validate();
    opt.reward.validate();
    opt.sampler.validate();
    if (dataset.empty()) {
        throw std::invalid_argument("train: dataset is empty");
    }
    const int feat_dim = static_cast<int>(dataset.front().features.size());
    for (const Instance& inst : dataset) {
        if (static_cast<int>(inst.features.size()) != feat_dim) {
            throw std::invalid_argument("train: inconsistent feature dimensions in dataset");
        }
    }

    // tau = 0 (and no forced trigger) means the replay path is off entirely,
    // so the run reduces exactly to the no-replay variant.
    const bool replay_active =
        opt.replay.enabled && (opt.replay.force_trigger || opt.replay.tau_trigger > 0.0);

    TrainResult result;
    result.params = PolicyParams(feat_dim + kGuidanceDim);
    const PolicyParams policy_ref = result.params.snapshot();

    TraceFiles files;
    if (!opt.output_dir.empty()) {
        open_traces(files, opt.output_dir);
    }

    const std::size_t n = dataset.size();
    const std::size_t batch_size = std::min<std::size_t>(n, static_cast<std::size_t>(opt.grpo.batch_size));

    std::vector<int> indices(n);
    for (std::size_t i = 0; i < n; ++i) {
        indices[i] = static_cast<int>(i);
    }

    for (int step = 1; step <= opt.grpo.max_steps; ++step) {
        // seeded per-step shuffle; the batch is the prefix
        Rng shuffle_rng(mix_seed(opt.seed, 0xBA7C4ULL, static_cast<std::uint64_t>(step)));
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j =
                static_cast<std::size_t>(shuffle_rng.uniform_int(static_cast<int>(i + 1)));
            std::swap(indices[i], indices[j]);
        }

        const PolicyParams policy_old = result.params.snapshot();

        std::vector<Group> groups;
        groups.reserve(batch_size);
        for (std::size_t b = 0; b < batch_size; ++b) {
            const int idx = indices[b];
            const std::uint64_t seed =
                mix_seed(opt.seed, 0x9011ULL, static_cast<std::uint64_t>(step),
                         static_cast<std::uint64_t>(idx), 0ULL);
            Group g = rollout_group(dataset[static_cast<std::size_t>(idx)], policy_old,
                                    opt.grpo, opt.reward, opt.sampler, seed);
            g.instance_index = idx;
            groups.push_back(std::move(g));
        }

        double unguided_sum = 0.0;
        for (const Group& g : groups) {
            unguided_sum += g.mean_total();
        }

        std::vector<ReplayEvent> step_events;
        if (replay_active) {
            const DimDiagnosis diag = diagnose(groups);
            for (Group& g : groups) {
                const bool trigger =
                    opt.replay.force_trigger || should_replay(g, opt.replay.tau_trigger);
                if (!trigger) {
                    continue;
                }
                const Instance& inst = dataset[static_cast<std::size_t>(g.instance_index)];
                const GuidanceSpec spec =
                    opt.replay.fixed_dims.has_value()
                        ? make_guidance(inst, *opt.replay.fixed_dims)
                        : build_guidance(inst, diag, opt.replay.tau_dim);
                const std::uint64_t seed =
                    mix_seed(opt.seed, 0x9011ULL, static_cast<std::uint64_t>(step),
                             static_cast<std::uint64_t>(g.instance_index), 1ULL);
                Group replayed = replay_group(g, spec, inst, policy_old, opt.grpo,
                                              opt.reward, opt.sampler, seed);
                ReplayEvent ev;
                ev.step = step;
                ev.instance_id = g.instance_id;
                ev.mean_reward_before = g.mean_total();
                for (const auto& [dim, tier] : spec.dims) {
                    (void)tier;
                    ev.dims.push_back(dim);
                }
                ev.mean_reward_after = replayed.mean_total();
                step_events.push_back(ev);
                g = std::move(replayed);  // the unguided rewards survive only in the trace
            }
        }

        for (Group& g : groups) {
            g.filter_status = filter_group(g, opt.grpo);
            if (g.filter_status == FilterStatus::kept) {
                compute_advantages(g, opt.grpo);
            }
        }

        // gradient accumulation: contiguous chunks, merged then normalized
        // once, which matches the single-pass batch gradient
        LossParts parts(result.params);
        std::vector<double> obs_scratch, input_scratch;
        const std::size_t chunks = static_cast<std::size_t>(opt.grpo.grad_accum_steps);
        const std::size_t chunk_len = (groups.size() + chunks - 1) / chunks;
        for (std::size_t start = 0; start < groups.size(); start += chunk_len) {
            LossParts chunk_parts(result.params);
            const std::size_t end = std::min(groups.size(), start + chunk_len);
            for (std::size_t i = start; i < end; ++i) {
                accumulate_group(chunk_parts, groups[i], result.params, policy_old, policy_ref,
                                 opt.grpo, opt.replay.ratio_on_original_prompt, obs_scratch,
                                 input_scratch);
            }
            parts.merge(chunk_parts);
        }
        const LossGrad lg = finalize_parts(parts, opt.grpo, result.params);
        if (lg.kept_groups > 0) {
            apply_update(result.params, lg.grad, opt.grpo.learning_rate);
        }

        // policy entropy of the generating snapshot at the rollout inputs
        double entropy_sum = 0.0;
        for (const Group& g : groups) {
            entropy_sum += entropy(policy_old, g.obs);
        }
        std::vector<Trajectory> step_trajs;
        step_trajs.reserve(groups.size() * static_cast<std::size_t>(opt.grpo.group_size));
        double replayed_sum = 0.0;
        std::size_t replayed_groups = 0;
        for (const Group& g : groups) {
            for (const Trajectory& t : g.trajectories) {
                step_trajs.push_back(t);
            }
            if (g.guided) {
                replayed_sum += g.mean_total();
                ++replayed_groups;
            }
        }

        StepMetrics row;
        row.step = step;
        row.variant = opt.variant_label;
        row.mean_reward_unguided = unguided_sum / static_cast<double>(groups.size());
        row.mean_reward_replayed =
            replayed_groups > 0 ? replayed_sum / static_cast<double>(replayed_groups) : 0.0;
        row.reward_delta = reward_delta(step_events);
        row.kept_ratio = gradient_contributing_ratio(groups);
        row.entropy = entropy_sum / static_cast<double>(groups.size());
        row.rar = rule_adherence_rate(step_trajs);
        row.kl = lg.kl;
        row.loss = lg.loss;

        write_step(files, row);
        for (const ReplayEvent& ev : step_events) {
            write_replay_event(files, ev);
            result.replay_events.push_back(ev);
        }
        for (const Group& g : groups) {
            write_group_audit(files, step, g);
        }
        result.trace.push_back(row);

        if (files.enabled && opt.checkpoint_every > 0 && step % opt.checkpoint_every == 0) {
            char name[48];
            std::snprintf(name, sizeof(name), "/ckpt_step_%06d.json", step);
            save_checkpoint(result.params, opt.output_dir + name, opt.config_hash);
        }

        if (observer) {
            observer(step, groups);
        }
    }

    if (files.enabled) {
        save_checkpoint(result.params, opt.output_dir + "/ckpt_final.json", opt.config_hash);
    }
    return result;
}

}  // namespace relab
