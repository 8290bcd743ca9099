#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "relab/trajectory.hpp"

namespace relab {

// Dense row-major matrix, just enough linear algebra for the slot heads.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

// Guidance feature block: one gold-tier one-hot per guided reasoning
// dimension (category, attribute, relevance), zero when not guided.
inline constexpr int kGuidanceDim = 12;
inline constexpr int kGuidanceCategory = 0;
inline constexpr int kGuidanceAttribute = 4;
inline constexpr int kGuidanceRelevance = 8;

// One-hot blocks of previously emitted tier slots, appended to the input.
inline constexpr int kPrefixDim = 16;

// Slot-factorized autoregressive softmax policy: one linear head per slot
// over [instance features ++ guidance features ++ prefix one-hots]. Zero
// initialization gives the maximum-entropy (uniform) policy.
class PolicyParams {
public:
    PolicyParams() = default;
    explicit PolicyParams(int obs_dim);

    int obs_dim() const { return obs_dim_; }
    int input_dim() const { return obs_dim_ + kPrefixDim; }
    int param_count() const;

    Matrix& slot(int s) { return slots_[static_cast<std::size_t>(s)]; }
    const Matrix& slot(int s) const { return slots_[static_cast<std::size_t>(s)]; }

    // Deep immutable copy; the reference and old-policy snapshots of the
    // training loop are taken through this.
    PolicyParams snapshot() const { return *this; }

private:
    int obs_dim_ = 0;
    std::array<Matrix, kNumSlots> slots_{};
};

// Gradient (or any tangent) with the same shape as PolicyParams.
struct PolicyGrad {
    std::array<Matrix, kNumSlots> slots{};

    static PolicyGrad zeros_like(const PolicyParams& p);
    void add_scaled(const PolicyGrad& g, double alpha);
    void scale(double alpha);
    double max_abs() const;
};

// params += alpha * grad
void apply_update(PolicyParams& params, const PolicyGrad& grad, double alpha);

struct SamplerConfig {
    double temperature = 0.99;
    int top_k = 100;  // clamped to the slot size, a no-op for these alphabets
    std::uint64_t seed = 0;

    void validate() const;
};

struct LogProbResult {
    std::array<double, kNumSlots> per_token{};
    double total = 0.0;
};

struct SlotDist {
    std::array<double, 4> probs{};
    std::array<double, 4> logps{};
    int size = 0;
};

// obs ++ guidance is the caller-assembled observation (size obs_dim);
// prefix one-hots are filled from the tokens of slots < slot.
void assemble_input(const std::vector<double>& obs, const int* tokens, int slot,
                    std::vector<double>& input);

// Temperature-1, untruncated distribution of one slot at the given input.
SlotDist slot_dist(const PolicyParams& params, int slot, const std::vector<double>& input);

// Ancestral sampling: draws from the temperature-scaled, top-k truncated,
// renormalized softmax, while token_logps record the untruncated
// temperature-1 distribution (the one log_prob and the importance ratios
// use). Deterministic for a fixed cfg.seed.
Trajectory sample(const PolicyParams& params, const std::vector<double>& obs,
                  const SamplerConfig& cfg);

// Greedy argmax decode (ties to the lower token index).
Trajectory sample_greedy(const PolicyParams& params, const std::vector<double>& obs);

// Exact per-token log-probabilities under the full softmax at temperature 1.
LogProbResult log_prob(const PolicyParams& params, const std::vector<double>& obs,
                       const Trajectory& traj);

// Analytic gradient of the total log-probability:
// per slot, (one_hot(token) - softmax(logits)) outer input.
PolicyGrad grad_log_prob(const PolicyParams& params, const std::vector<double>& obs,
                         const Trajectory& traj);

// Exact entropy of the joint trajectory distribution, by chain rule over
// the 4*4*4*4*2 slot product space.
double entropy(const PolicyParams& params, const std::vector<double>& obs);

// Enumerates all 512 trajectories with their exact probabilities.
void for_each_trajectory(const PolicyParams& params, const std::vector<double>& obs,
                         const std::function<void(const Trajectory&, double)>& fn);

// Versioned JSON checkpoint; byte-stable for fixed contents.
void save_checkpoint(const PolicyParams& params, const std::string& path,
                     const std::string& config_hash);
PolicyParams load_checkpoint(const std::string& path, std::string* config_hash = nullptr);

}  // namespace relab
