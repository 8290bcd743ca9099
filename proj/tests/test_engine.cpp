#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relab/engine.hpp"
#include "relab/metrics.hpp"
#include "relab/rng.hpp"
#include "relab/rules.hpp"
#include "test_support.hpp"

using namespace relab;

namespace {

Instance instance_from_seed(std::uint64_t seed, double noise = 1.0) {
    WorldConfig cfg;
    cfg.seed = seed;
    cfg.n_instances = 1;
    cfg.noise_scale = noise;
    return generate_world(cfg).front();
}

Group group_with_totals(const std::vector<double>& totals, double f = 0.5) {
    Group g;
    g.instance_id = "x";
    const std::size_t n_correct =
        static_cast<std::size_t>(std::llround(f * static_cast<double>(totals.size())));
    for (std::size_t i = 0; i < totals.size(); ++i) {
        RewardBreakdown b;
        b.total = totals[i];
        if (i < n_correct) {
            b.r_rele = 1;
            b.r_format = 1;
        }
        g.rewards.push_back(b);
        g.trajectories.push_back(
            make_trajectory(Tier::Related, Tier::Related, Tier::Related, Tier::Related));
    }
    return g;
}

PolicyParams random_policy(Rng& rng, double scale = 0.4) {
    PolicyParams p(kFeatureDim + kGuidanceDim);
    for (int s = 0; s < kNumSlots; ++s) {
        for (double& v : p.slot(s).a) {
            v = scale * rng.normal();
        }
    }
    return p;
}

double expected_reward(const PolicyParams& policy, const std::vector<double>& obs,
                       const Instance& inst, const RewardConfig& cfg) {
    double value = 0.0;
    for_each_trajectory(policy, obs, [&](const Trajectory& t, double prob) {
        value += prob * score(t, inst, cfg).total;
    });
    return value;
}

}  // namespace

TEST_CASE("rollout groups are deterministic and carry provenance") {
    Rng rng(1);
    const PolicyParams policy = random_policy(rng);
    const Instance inst = instance_from_seed(11);
    GRPOConfig cfg;
    const Group a = rollout_group(inst, policy, cfg, RewardConfig{}, SamplerConfig{}, 99);
    const Group b = rollout_group(inst, policy, cfg, RewardConfig{}, SamplerConfig{}, 99);
    REQUIRE(a.trajectories.size() == 16);
    CHECK_FALSE(a.guided);
    CHECK_FALSE(a.guidance.has_value());
    CHECK(a.instance_id == inst.id);
    for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
        CHECK(a.trajectories[i].tokens == b.trajectories[i].tokens);
        CHECK(a.rewards[i].total == b.rewards[i].total);
    }
    const Group c = rollout_group(inst, policy, cfg, RewardConfig{}, SamplerConfig{}, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
        any_diff = any_diff || a.trajectories[i].tokens != c.trajectories[i].tokens;
    }
    CHECK(any_diff);
}

TEST_CASE("filter semantics over the correctness fraction") {
    GRPOConfig cfg;  // band (0.01, 0.9)
    CHECK(filter_group(group_with_totals(std::vector<double>(16, 1.0), 1.0), cfg) ==
          FilterStatus::dropped_too_easy);
    CHECK(filter_group(group_with_totals(std::vector<double>(16, 0.0), 0.0), cfg) ==
          FilterStatus::dropped_all_wrong);
    {
        std::vector<double> totals(16, 0.0);
        for (int i = 0; i < 8; ++i) {
            totals[static_cast<std::size_t>(i)] = 1.0;
        }
        CHECK(filter_group(group_with_totals(totals, 0.5), cfg) == FilterStatus::kept);
    }
    {
        // 15/16 = 0.9375 correct lands above the 0.9 edge
        std::vector<double> totals(16, 1.0);
        totals[15] = 0.0;
        CHECK(filter_group(group_with_totals(totals, 15.0 / 16.0), cfg) ==
              FilterStatus::dropped_too_easy);
    }
    {
        // interior fraction but all totals identical: no usable signal
        CHECK(filter_group(group_with_totals(std::vector<double>(16, 0.0), 0.5), cfg) ==
              FilterStatus::degenerate_zero_std);
    }
}

TEST_CASE("raising the band's upper edge weakly grows the kept set") {
    Rng rng(21);
    const PolicyParams policy = random_policy(rng);
    GRPOConfig cfg;
    std::vector<Group> groups;
    for (std::uint64_t i = 0; i < 40; ++i) {
        groups.push_back(rollout_group(instance_from_seed(300 + i), policy, cfg, RewardConfig{},
                                       SamplerConfig{}, 900 + i));
    }
    std::size_t prev = 0;
    for (double high : {0.3, 0.5, 0.7, 0.9, 0.99}) {
        GRPOConfig band = cfg;
        band.band_high = high;
        std::size_t kept = 0;
        for (const Group& g : groups) {
            kept += filter_group(g, band) == FilterStatus::kept ? 1 : 0;
        }
        CHECK(kept >= prev);
        prev = kept;
    }
}

TEST_CASE("advantage normalization matches hand arithmetic") {
    GRPOConfig cfg;
    {
        Group g = group_with_totals({1.0, 0.0, 0.0, 1.0});
        REQUIRE(compute_advantages(g, cfg));
        CHECK(g.advantages[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(g.advantages[1] == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(g.advantages[2] == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(g.advantages[3] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(g.adv_mean_preclip) < 1e-9);
        CHECK(std::abs(g.adv_std_preclip - 1.0) < 1e-6);
    }
    {
        Group g = group_with_totals({1.0, 0.0, 0.0, 0.0});
        REQUIRE(compute_advantages(g, cfg));
        CHECK(g.advantages[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-9));
        CHECK(g.advantages[1] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-9));
        // clip at 2.0 leaves sqrt(3) untouched
        CHECK(g.advantages[0] < cfg.adv_clip);
    }
    {
        GRPOConfig tight = cfg;
        tight.adv_clip = 1.5;
        Group g = group_with_totals({1.0, 0.0, 0.0, 0.0});
        REQUIRE(compute_advantages(g, tight));
        CHECK(g.advantages[0] == doctest::Approx(1.5));
        CHECK(g.adv_std_preclip == doctest::Approx(1.0).epsilon(1e-9));
    }
    {
        Group g = group_with_totals({0.4, 0.4, 0.4, 0.4});
        CHECK_FALSE(compute_advantages(g, cfg));
        CHECK(g.advantages.empty());
    }
}

namespace {

// Shared setup for the objective tests: one kept group rolled out from a
// random policy.
struct ObjectiveFixture {
    PolicyParams policy;
    Instance inst;
    GRPOConfig cfg;
    RewardConfig reward;
    std::vector<Group> groups;

    explicit ObjectiveFixture(std::uint64_t seed, double noise = 0.8) : inst(instance_from_seed(seed, noise)) {
        Rng rng(seed);
        policy = random_policy(rng);
        cfg.kl_beta = 0.0;
        for (std::uint64_t attempt = 0; attempt < 200; ++attempt) {
            Group g = rollout_group(inst, policy, cfg, reward, SamplerConfig{},
                                    mix_seed(seed, attempt));
            g.filter_status = filter_group(g, cfg);
            if (g.filter_status == FilterStatus::kept) {
                compute_advantages(g, cfg);
                groups = {std::move(g)};
                return;
            }
        }
        REQUIRE(false);
    }
};

}  // namespace

TEST_CASE("at the snapshot the gradient is the vanilla policy gradient") {
    ObjectiveFixture fx(7);
    const LossGrad lg = step_loss_and_grad(fx.groups, fx.policy, fx.policy, fx.policy, fx.cfg);
    REQUIRE(lg.kept_groups == 1);

    const Group& g = fx.groups[0];
    PolicyGrad expected = PolicyGrad::zeros_like(fx.policy);
    const double w = 1.0 / (static_cast<double>(g.trajectories.size()) * kNumSlots);
    double surr = 0.0;
    for (std::size_t i = 0; i < g.trajectories.size(); ++i) {
        const PolicyGrad gi = grad_log_prob(fx.policy, g.obs, g.trajectories[i]);
        expected.add_scaled(gi, w * g.advantages[i]);
        surr += g.advantages[i] * static_cast<double>(kNumSlots) * w;  // rho = 1 everywhere
    }
    CHECK(lg.surrogate == doctest::Approx(surr).epsilon(1e-9));
    for (int s = 0; s < kNumSlots; ++s) {
        const Matrix& a = lg.grad.slots[static_cast<std::size_t>(s)];
        const Matrix& b = expected.slots[static_cast<std::size_t>(s)];
        for (std::size_t i = 0; i < a.a.size(); ++i) {
            CHECK(a.a[i] == doctest::Approx(b.a[i]).epsilon(1e-9));
        }
    }
    CHECK(lg.kl == doctest::Approx(0.0));
    CHECK(lg.loss == doctest::Approx(-lg.surrogate));
}

TEST_CASE("clip arithmetic: ratios outside the window contribute the clipped value") {
    GRPOConfig cfg;
    cfg.clip_eps = 0.2;
    // min(1.5*A, 1.2*A) with A > 0 is the clipped branch
    const double adv = 0.7;
    const double rho = 1.5;
    const double clipped = std::clamp(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
    CHECK(std::min(rho * adv, clipped) == doctest::Approx(1.2 * adv));
}

TEST_CASE("objective gradient matches finite differences away from the snapshot") {
    ObjectiveFixture fx(8);
    Rng rng(88);
    // old/new policies differ, beta > 0, reference differs as well
    PolicyParams policy = fx.policy.snapshot();
    for (int s = 0; s < kNumSlots; ++s) {
        for (double& v : policy.slot(s).a) {
            v += 0.05 * rng.normal();
        }
    }
    PolicyParams reference = random_policy(rng, 0.2);
    GRPOConfig cfg = fx.cfg;
    cfg.kl_beta = 0.07;

    const LossGrad lg = step_loss_and_grad(fx.groups, policy, fx.policy, reference, cfg);
    const double h = 1e-6;
    double max_err = 0.0;
    for (int probe = 0; probe < 40; ++probe) {
        const int s = rng.uniform_int(kNumSlots);
        const int idx = rng.uniform_int(static_cast<int>(policy.slot(s).a.size()));
        const double saved = policy.slot(s).a[static_cast<std::size_t>(idx)];
        policy.slot(s).a[static_cast<std::size_t>(idx)] = saved + h;
        const LossGrad up = step_loss_and_grad(fx.groups, policy, fx.policy, reference, cfg);
        policy.slot(s).a[static_cast<std::size_t>(idx)] = saved - h;
        const LossGrad down = step_loss_and_grad(fx.groups, policy, fx.policy, reference, cfg);
        policy.slot(s).a[static_cast<std::size_t>(idx)] = saved;
        const double obj_up = up.surrogate - cfg.kl_beta * up.kl;
        const double obj_down = down.surrogate - cfg.kl_beta * down.kl;
        const double fd = (obj_up - obj_down) / (2.0 * h);
        const double an = lg.grad.slots[static_cast<std::size_t>(s)].a[static_cast<std::size_t>(idx)];
        max_err = std::max(max_err,
                           std::abs(an - fd) / std::max(1e-4, std::abs(an) + std::abs(fd)));
    }
    CHECK(max_err < 1e-3);
}

TEST_CASE("exact KL is nonnegative and zero only for identical policies") {
    ObjectiveFixture fx(9);
    GRPOConfig cfg = fx.cfg;
    cfg.kl_beta = 0.04;
    const LossGrad self = step_loss_and_grad(fx.groups, fx.policy, fx.policy, fx.policy, cfg);
    CHECK(self.kl == doctest::Approx(0.0));
    Rng rng(99);
    const PolicyParams other = random_policy(rng, 0.5);
    const LossGrad moved = step_loss_and_grad(fx.groups, fx.policy, fx.policy, other, cfg);
    CHECK(moved.kl > 0.0);
}

TEST_CASE("gradient accumulation equals the concatenated batch") {
    GRPOConfig cfg;
    cfg.kl_beta = 0.04;
    Rng rng(10);
    const PolicyParams policy = random_policy(rng);
    const PolicyParams reference = random_policy(rng, 0.1);
    std::vector<Group> all;
    for (std::uint64_t i = 0; i < 6; ++i) {
        const Instance inst = instance_from_seed(40 + i);
        Group g = rollout_group(inst, policy, cfg, RewardConfig{}, SamplerConfig{}, 500 + i);
        g.filter_status = filter_group(g, cfg);
        if (g.filter_status == FilterStatus::kept) {
            compute_advantages(g, cfg);
        }
        all.push_back(std::move(g));
    }
    const LossGrad whole = step_loss_and_grad(all, policy, policy, reference, cfg);
    REQUIRE(whole.kept_groups >= 2);

    const std::vector<Group> first(all.begin(), all.begin() + 3);
    const std::vector<Group> second(all.begin() + 3, all.end());
    const LossGrad a = step_loss_and_grad(first, policy, policy, reference, cfg);
    const LossGrad b = step_loss_and_grad(second, policy, policy, reference, cfg);
    const double ka = a.kept_groups, kb = b.kept_groups;
    REQUIRE(ka + kb == whole.kept_groups);

    PolicyGrad merged = PolicyGrad::zeros_like(policy);
    merged.add_scaled(a.grad, ka / (ka + kb));
    merged.add_scaled(b.grad, kb / (ka + kb));
    for (int s = 0; s < kNumSlots; ++s) {
        const Matrix& m = merged.slots[static_cast<std::size_t>(s)];
        const Matrix& w = whole.grad.slots[static_cast<std::size_t>(s)];
        for (std::size_t i = 0; i < m.a.size(); ++i) {
            CHECK(std::abs(m.a[i] - w.a[i]) <= 1e-10);
        }
    }
    CHECK(std::abs((a.surrogate * ka + b.surrogate * kb) / (ka + kb) - whole.surrogate) <= 1e-10);
}

TEST_CASE("one ascent step on a kept group raises its exact expected reward") {
    int improved = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        ObjectiveFixture fx(200 + static_cast<std::uint64_t>(t));
        const double before =
            expected_reward(fx.policy, fx.groups[0].obs, fx.inst, fx.reward);
        const LossGrad lg =
            step_loss_and_grad(fx.groups, fx.policy, fx.policy, fx.policy, fx.cfg);
        PolicyParams updated = fx.policy.snapshot();
        apply_update(updated, lg.grad, 0.02);
        const double after = expected_reward(updated, fx.groups[0].obs, fx.inst, fx.reward);
        improved += after > before ? 1 : 0;
    }
    CHECK(improved >= 19);
}

TEST_CASE("short training runs: trace shape, determinism, variant reductions") {
    WorldConfig wcfg;
    wcfg.seed = 77;
    wcfg.n_instances = 48;
    wcfg.noise_scale = 1.2;
    const std::vector<Instance> dataset = generate_world(wcfg);

    TrainOptions opt;
    opt.grpo.max_steps = 6;
    opt.grpo.batch_size = 16;
    opt.grpo.learning_rate = 0.3;
    opt.grpo.kl_beta = 0.01;
    opt.seed = 5;
    opt.reward = RewardConfig{};
    opt.replay.enabled = true;
    opt.replay.tau_trigger = 0.1;
    opt.replay.tau_dim = 0.3;
    opt.variant_label = "agrl";

    const TrainResult a = train(dataset, opt);
    CHECK(a.trace.size() == 6);
    for (const StepMetrics& row : a.trace) {
        CHECK(row.kept_ratio >= 0.0);
        CHECK(row.kept_ratio <= 1.0);
        CHECK(row.rar >= 0.0);
        CHECK(row.rar <= 1.0);
        CHECK(row.entropy >= 0.0);
        CHECK(std::isfinite(row.loss));
    }
    // uniform start on a noisy world triggers replays immediately
    CHECK_FALSE(a.replay_events.empty());

    const TrainResult b = train(dataset, opt);
    REQUIRE(b.trace.size() == a.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].mean_reward_unguided == b.trace[i].mean_reward_unguided);
        CHECK(a.trace[i].loss == b.trace[i].loss);
        CHECK(a.trace[i].entropy == b.trace[i].entropy);
    }

    // tau = 0 shuts replay off and reduces to the plain shaped-reward run
    TrainOptions tau0 = opt;
    tau0.replay.tau_trigger = 0.0;
    TrainOptions rrs = opt;
    rrs.replay.enabled = false;
    rrs.variant_label = "grpo_rrs";
    const TrainResult at0 = train(dataset, tau0);
    const TrainResult rr = train(dataset, rrs);
    CHECK(at0.replay_events.empty());
    for (std::size_t i = 0; i < at0.trace.size(); ++i) {
        CHECK(at0.trace[i].mean_reward_unguided == rr.trace[i].mean_reward_unguided);
        CHECK(at0.trace[i].loss == rr.trace[i].loss);
        CHECK(at0.trace[i].kept_ratio == rr.trace[i].kept_ratio);
    }

    // baselines run end to end
    TrainOptions outcome = rrs;
    outcome.reward.variant = RewardVariant::OUTCOME_ONLY;
    outcome.variant_label = "outcome_grpo";
    CHECK(train(dataset, outcome).trace.size() == 6);
    TrainOptions pr = rrs;
    pr.reward.variant = RewardVariant::GRPO_PR;
    pr.variant_label = "grpo_pr";
    CHECK(train(dataset, pr).trace.size() == 6);
}

TEST_CASE("static replay forces guidance onto every group") {
    WorldConfig wcfg;
    wcfg.seed = 78;
    wcfg.n_instances = 8;
    const std::vector<Instance> dataset = generate_world(wcfg);
    TrainOptions opt;
    opt.grpo.max_steps = 2;
    opt.grpo.batch_size = 8;
    opt.replay.enabled = true;
    opt.replay.force_trigger = true;
    opt.replay.fixed_dims = std::vector<GuidedDim>{GuidedDim::relevance};
    int guided_groups = 0, total_groups = 0;
    train(dataset, opt, [&](int, const std::vector<Group>& groups) {
        for (const Group& g : groups) {
            ++total_groups;
            guided_groups += g.guided ? 1 : 0;
            if (g.guided) {
                REQUIRE(g.guidance.has_value());
                CHECK(g.guidance->dims.size() == 1);
            }
        }
    });
    CHECK(total_groups == 16);
    CHECK(guided_groups == total_groups);
}

TEST_CASE("train rejects bad inputs") {
    TrainOptions opt;
    CHECK_THROWS_AS(train({}, opt), std::invalid_argument);
    WorldConfig wcfg;
    wcfg.n_instances = 4;
    const std::vector<Instance> dataset = generate_world(wcfg);
    opt.grpo.group_size = 1;
    CHECK_THROWS_AS(train(dataset, opt), std::invalid_argument);
}
