#include "relab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "relab/rng.hpp"

namespace relab {

namespace {

using json = nlohmann::ordered_json;

constexpr int kPrefixSlotOffset[4] = {0, 4, 8, 12};

void check_obs(const PolicyParams& params, const std::vector<double>& obs) {
    if (static_cast<int>(obs.size()) != params.obs_dim()) {
        throw std::invalid_argument("observation dimension " + std::to_string(obs.size()) +
                                    " does not match policy obs_dim " +
                                    std::to_string(params.obs_dim()));
    }
}

void check_tokens(const Trajectory& traj) {
    for (int s = 0; s < kNumSlots; ++s) {
        const int tok = traj.tokens[static_cast<std::size_t>(s)];
        if (tok < 0 || tok >= kSlotSizes[static_cast<std::size_t>(s)]) {
            throw std::out_of_range("token " + std::to_string(tok) +
                                    " outside slot " + std::to_string(s) + " alphabet");
        }
    }
}

}  // namespace

PolicyParams::PolicyParams(int obs_dim) : obs_dim_(obs_dim) {
    if (obs_dim <= 0) {
        throw std::invalid_argument("policy obs_dim must be positive");
    }
    for (int s = 0; s < kNumSlots; ++s) {
        slots_[static_cast<std::size_t>(s)] =
            Matrix(kSlotSizes[static_cast<std::size_t>(s)], input_dim());
    }
}

int PolicyParams::param_count() const {
    int n = 0;
    for (const Matrix& m : slots_) {
        n += m.rows * m.cols;
    }
    return n;
}

PolicyGrad PolicyGrad::zeros_like(const PolicyParams& p) {
    PolicyGrad g;
    for (int s = 0; s < kNumSlots; ++s) {
        g.slots[static_cast<std::size_t>(s)] = Matrix(p.slot(s).rows, p.slot(s).cols);
    }
    return g;
}

void PolicyGrad::add_scaled(const PolicyGrad& g, double alpha) {
    for (int s = 0; s < kNumSlots; ++s) {
        auto& dst = slots[static_cast<std::size_t>(s)].a;
        const auto& src = g.slots[static_cast<std::size_t>(s)].a;
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] += alpha * src[i];
        }
    }
}

void PolicyGrad::scale(double alpha) {
    for (Matrix& m : slots) {
        for (double& v : m.a) {
            v *= alpha;
        }
    }
}

double PolicyGrad::max_abs() const {
    double m = 0.0;
    for (const Matrix& mat : slots) {
        for (double v : mat.a) {
            m = std::max(m, std::abs(v));
        }
    }
    return m;
}

void apply_update(PolicyParams& params, const PolicyGrad& grad, double alpha) {
    for (int s = 0; s < kNumSlots; ++s) {
        auto& dst = params.slot(s).a;
        const auto& src = grad.slots[static_cast<std::size_t>(s)].a;
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] += alpha * src[i];
        }
    }
}

void SamplerConfig::validate() const {
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("sampler: temperature must be > 0");
    }
    if (top_k < 1) {
        throw std::invalid_argument("sampler: top_k must be >= 1");
    }
}

void assemble_input(const std::vector<double>& obs, const int* tokens, int slot,
                    std::vector<double>& input) {
    input.assign(obs.size() + kPrefixDim, 0.0);
    std::copy(obs.begin(), obs.end(), input.begin());
    const int n_prefix = std::min(slot, 4);  // only the four tier slots are encoded
    for (int s = 0; s < n_prefix; ++s) {
        input[obs.size() + static_cast<std::size_t>(kPrefixSlotOffset[s] + tokens[s])] = 1.0;
    }
}

SlotDist slot_dist(const PolicyParams& params, int slot, const std::vector<double>& input) {
    const Matrix& w = params.slot(slot);
    SlotDist d;
    d.size = w.rows;
    std::array<double, 4> z{};
    double zmax = -1e300;
    for (int r = 0; r < w.rows; ++r) {
        double acc = 0.0;
        const double* row = &w.a[static_cast<std::size_t>(r) * w.cols];
        for (int c = 0; c < w.cols; ++c) {
            acc += row[c] * input[static_cast<std::size_t>(c)];
        }
        z[static_cast<std::size_t>(r)] = acc;
        zmax = std::max(zmax, acc);
    }
    double sum = 0.0;
    for (int r = 0; r < d.size; ++r) {
        const double e = std::exp(z[static_cast<std::size_t>(r)] - zmax);
        d.probs[static_cast<std::size_t>(r)] = e;
        sum += e;
    }
    const double log_sum = std::log(sum);
    for (int r = 0; r < d.size; ++r) {
        d.probs[static_cast<std::size_t>(r)] /= sum;
        d.logps[static_cast<std::size_t>(r)] = z[static_cast<std::size_t>(r)] - zmax - log_sum;
    }
    return d;
}

namespace {

// logits recomputed at temperature for the truncated sampling distribution
int draw_token(const PolicyParams& params, int slot, const std::vector<double>& input,
               const SamplerConfig& cfg, Rng& rng, double* logp_out) {
    const SlotDist ref = slot_dist(params, slot, input);
    const int size = ref.size;
    const int k = std::min(cfg.top_k, size);

    // order by untruncated probability, ties to the lower index
    std::array<int, 4> order{};
    for (int i = 0; i < size; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    std::stable_sort(order.begin(), order.begin() + size, [&](int a, int b) {
        return ref.logps[static_cast<std::size_t>(a)] > ref.logps[static_cast<std::size_t>(b)];
    });

    std::vector<double> weights(static_cast<std::size_t>(k));
    double wmax = -1e300;
    for (int i = 0; i < k; ++i) {
        wmax = std::max(wmax, ref.logps[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
    }
    for (int i = 0; i < k; ++i) {
        const double lp = ref.logps[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        weights[static_cast<std::size_t>(i)] = std::exp((lp - wmax) / cfg.temperature);
    }
    const int pick = rng.categorical(weights);
    const int token = order[static_cast<std::size_t>(pick)];
    *logp_out = ref.logps[static_cast<std::size_t>(token)];
    return token;
}

}  // namespace

Trajectory sample(const PolicyParams& params, const std::vector<double>& obs,
                  const SamplerConfig& cfg) {
    cfg.validate();
    check_obs(params, obs);
    Rng rng(cfg.seed);
    Trajectory traj;
    std::vector<double> input;
    for (int s = 0; s < kNumSlots; ++s) {
        assemble_input(obs, traj.tokens.data(), s, input);
        double logp = 0.0;
        traj.tokens[static_cast<std::size_t>(s)] = draw_token(params, s, input, cfg, rng, &logp);
        traj.token_logps[static_cast<std::size_t>(s)] = logp;
    }
    traj.format_valid = traj.tokens[kSlotFormat] == kFormatWellFormed;
    return traj;
}

Trajectory sample_greedy(const PolicyParams& params, const std::vector<double>& obs) {
    check_obs(params, obs);
    Trajectory traj;
    std::vector<double> input;
    for (int s = 0; s < kNumSlots; ++s) {
        assemble_input(obs, traj.tokens.data(), s, input);
        const SlotDist d = slot_dist(params, s, input);
        int best = 0;
        for (int i = 1; i < d.size; ++i) {
            if (d.logps[static_cast<std::size_t>(i)] > d.logps[static_cast<std::size_t>(best)]) {
                best = i;
            }
        }
        traj.tokens[static_cast<std::size_t>(s)] = best;
        traj.token_logps[static_cast<std::size_t>(s)] = d.logps[static_cast<std::size_t>(best)];
    }
    traj.format_valid = traj.tokens[kSlotFormat] == kFormatWellFormed;
    return traj;
}

LogProbResult log_prob(const PolicyParams& params, const std::vector<double>& obs,
                       const Trajectory& traj) {
    check_obs(params, obs);
    check_tokens(traj);
    LogProbResult r;
    std::vector<double> input;
    for (int s = 0; s < kNumSlots; ++s) {
        assemble_input(obs, traj.tokens.data(), s, input);
        const SlotDist d = slot_dist(params, s, input);
        const double lp = d.logps[static_cast<std::size_t>(traj.tokens[static_cast<std::size_t>(s)])];
        r.per_token[static_cast<std::size_t>(s)] = lp;
        r.total += lp;
    }
    return r;
}

PolicyGrad grad_log_prob(const PolicyParams& params, const std::vector<double>& obs,
                         const Trajectory& traj) {
    check_obs(params, obs);
    check_tokens(traj);
    PolicyGrad g = PolicyGrad::zeros_like(params);
    std::vector<double> input;
    for (int s = 0; s < kNumSlots; ++s) {
        assemble_input(obs, traj.tokens.data(), s, input);
        const SlotDist d = slot_dist(params, s, input);
        Matrix& gm = g.slots[static_cast<std::size_t>(s)];
        const int tok = traj.tokens[static_cast<std::size_t>(s)];
        for (int r = 0; r < gm.rows; ++r) {
            const double coef = (r == tok ? 1.0 : 0.0) - d.probs[static_cast<std::size_t>(r)];
            double* row = &gm.a[static_cast<std::size_t>(r) * gm.cols];
            for (int c = 0; c < gm.cols; ++c) {
                row[c] += coef * input[static_cast<std::size_t>(c)];
            }
        }
    }
    return g;
}

namespace {

double entropy_rec(const PolicyParams& params, const std::vector<double>& obs, int slot,
                   int* tokens, double p_prefix, std::vector<double>& input) {
    assemble_input(obs, tokens, slot, input);
    const SlotDist d = slot_dist(params, slot, input);
    double h = 0.0;
    for (int t = 0; t < d.size; ++t) {
        const double p = d.probs[static_cast<std::size_t>(t)];
        if (p > 0.0) {
            h -= p_prefix * p * d.logps[static_cast<std::size_t>(t)];
        }
    }
    if (slot + 1 < kNumSlots) {
        for (int t = 0; t < d.size; ++t) {
            tokens[slot] = t;
            h += entropy_rec(params, obs, slot + 1, tokens,
                             p_prefix * d.probs[static_cast<std::size_t>(t)], input);
        }
        tokens[slot] = 0;
    }
    return h;
}

}  // namespace

double entropy(const PolicyParams& params, const std::vector<double>& obs) {
    check_obs(params, obs);
    int tokens[kNumSlots] = {0, 0, 0, 0, 0};
    std::vector<double> input;
    return entropy_rec(params, obs, 0, tokens, 1.0, input);
}

void for_each_trajectory(const PolicyParams& params, const std::vector<double>& obs,
                         const std::function<void(const Trajectory&, double)>& fn) {
    check_obs(params, obs);
    std::vector<double> input;
    Trajectory traj;
    // iterative odometer over the slot product space
    std::array<SlotDist, kNumSlots> dists;
    auto refresh_from = [&](int slot) {
        for (int s = slot; s < kNumSlots; ++s) {
            assemble_input(obs, traj.tokens.data(), s, input);
            dists[static_cast<std::size_t>(s)] = slot_dist(params, s, input);
        }
    };
    traj.tokens = {0, 0, 0, 0, 0};
    refresh_from(0);
    while (true) {
        double p = 1.0;
        for (int s = 0; s < kNumSlots; ++s) {
            const auto& d = dists[static_cast<std::size_t>(s)];
            p *= d.probs[static_cast<std::size_t>(traj.tokens[static_cast<std::size_t>(s)])];
            traj.token_logps[static_cast<std::size_t>(s)] =
                d.logps[static_cast<std::size_t>(traj.tokens[static_cast<std::size_t>(s)])];
        }
        traj.format_valid = traj.tokens[kSlotFormat] == kFormatWellFormed;
        fn(traj, p);

        int s = kNumSlots - 1;
        while (s >= 0 &&
               traj.tokens[static_cast<std::size_t>(s)] + 1 >= kSlotSizes[static_cast<std::size_t>(s)]) {
            traj.tokens[static_cast<std::size_t>(s)] = 0;
            --s;
        }
        if (s < 0) {
            break;
        }
        ++traj.tokens[static_cast<std::size_t>(s)];
        refresh_from(s + 1);  // distributions of later slots depend on this prefix
    }
}

void save_checkpoint(const PolicyParams& params, const std::string& path,
                     const std::string& config_hash) {
    json j;
    j["format"] = "relab-policy-v1";
    j["config_hash"] = config_hash;
    j["obs_dim"] = params.obs_dim();
    json slots = json::array();
    for (int s = 0; s < kNumSlots; ++s) {
        const Matrix& m = params.slot(s);
        json sj;
        sj["rows"] = m.rows;
        sj["cols"] = m.cols;
        sj["data"] = m.a;
        slots.push_back(std::move(sj));
    }
    j["slots"] = std::move(slots);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write checkpoint: " + path);
    }
    out << j.dump(1, '\t') << "\n";
}

PolicyParams load_checkpoint(const std::string& path, std::string* config_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read checkpoint: " + path);
    }
    json j = json::parse(in);
    if (j.at("format").get<std::string>() != "relab-policy-v1") {
        throw std::runtime_error(path + ": unsupported checkpoint format");
    }
    if (config_hash != nullptr) {
        *config_hash = j.at("config_hash").get<std::string>();
    }
    PolicyParams params(j.at("obs_dim").get<int>());
    const json& slots = j.at("slots");
    if (slots.size() != kNumSlots) {
        throw std::runtime_error(path + ": bad slot count");
    }
    for (int s = 0; s < kNumSlots; ++s) {
        const json& sj = slots[static_cast<std::size_t>(s)];
        Matrix& m = params.slot(s);
        if (sj.at("rows").get<int>() != m.rows || sj.at("cols").get<int>() != m.cols) {
            throw std::runtime_error(path + ": slot shape mismatch");
        }
        m.a = sj.at("data").get<std::vector<double>>();
    }
    return params;
}

}  // namespace relab
