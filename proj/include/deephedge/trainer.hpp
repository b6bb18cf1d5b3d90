#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "deephedge/cliquet.hpp"
#include "deephedge/heston.hpp"
#include "deephedge/network.hpp"

namespace deephedge {

struct TrainConfig {
    int batch_size = 20;
    long steps = 5300;
    double gamma = 1000.0;
    bool use_tda = true;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    int window_size = 15;
    int episode_steps = 240;
    HestonParams heston;
    double dt = 1.0 / 240.0;
    CliquetSpec cliquet;

    // Runtime knobs; not part of the config JSON schema.
    unsigned threads = 1;
    double clip_norm = 0.0;  // 0 disables global-norm clipping
    int width = kDefaultWidth;
    int cells = kDefaultCells;

    int feature_dim() const { return use_tda ? kTdaFeatureDim : kCoreFeatureDim; }
    void validate() const;
};

nlohmann::json config_to_json(const TrainConfig& config);
/// Requires exactly the documented keys; runtime knobs keep their defaults.
TrainConfig config_from_json(const nlohmann::json& doc);
TrainConfig load_config(const std::string& file);

/// Row t = (S_t, v_t, psi_t[, l1_t, l2_t]) for t = 0 .. T-1, where the series
/// have length T + 1. Each row only uses data up to its own step.
RowMatrix build_features(std::span<const double> spot, std::span<const double> variance,
                         const CliquetSpec& spec, bool use_tda, int window_size);

/// Self-financing gains sum_t delta_t (S_{t+1} - S_t).
double hedge_pnl(std::span<const double> spot, std::span<const double> actions);

/// gamma * population variance of the errors.
double variance_loss(std::span<const double> errors, double gamma);
/// d loss / d error_i = 2 gamma (e_i - mean) / N.
std::vector<double> variance_loss_gradient(std::span<const double> errors, double gamma);

struct HedgeOutcome {
    std::vector<double> pnl;
    std::vector<double> liability;
    std::vector<double> error;
};

/// Everything computed by running a policy over a set of paths.
struct Rollout {
    HedgeOutcome outcome;
    double mean_abs_trade = 0.0;  // mean |delta_t| over paths and steps
    double turnover = 0.0;        // mean |delta_t - delta_{t-1}|, delta_{-1} = 0
    double loss = 0.0;            // only when a gamma was supplied
    std::optional<PolicyParams> gradient;
};

struct RolloutOptions {
    bool use_tda = true;
    int window_size = 15;
    unsigned threads = 1;
    std::optional<double> gamma;  // set to compute the loss
    bool with_gradient = false;   // requires gamma
};

/// Paths are processed in fixed-size chunks whose gradients are summed in
/// chunk order, so results do not depend on `threads`.
Rollout rollout(const PolicyParams& params, const PathSet& paths, const CliquetSpec& spec,
                const RolloutOptions& options);

inline constexpr Eigen::Index kRolloutChunk = 64;

struct AdamMoments {
    PolicyParams first;
    PolicyParams second;

    static AdamMoments zeros_like(const PolicyParams& params);
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// Bias-corrected Adam step; step_index starts at 1.
void adam_update(PolicyParams& params, const PolicyParams& grads, AdamMoments& moments,
                 long step_index, double learning_rate);

struct StepMetrics {
    long step = 0;
    double loss = 0.0;
    double mean_abs_trade = 0.0;
};

struct TrainState {
    PolicyParams params;
    AdamMoments moments;
    long completed_steps = 0;
};

TrainState initial_state(const TrainConfig& config);

/// Seed of the batch simulated for training step `step_index`.
std::uint64_t batch_seed(const TrainConfig& config, long step_index);

/// Simulates a fresh batch, backpropagates the variance loss and applies one
/// Adam update. Throws DivergenceError on a non-finite loss or gradient.
StepMetrics train_step(TrainState& state, const TrainConfig& config);

struct TrainResult {
    TrainState state;
    std::vector<StepMetrics> log;
};

using CheckpointHook = std::function<void(const TrainState&)>;

/// Runs until config.steps steps are complete, continuing from `resume` when given.
/// `on_checkpoint` fires every `checkpoint_every` steps (0 disables it).
TrainResult train(const TrainConfig& config, std::optional<TrainState> resume = std::nullopt,
                  long checkpoint_every = 0, const CheckpointHook& on_checkpoint = {});

void write_train_log_csv(std::span<const StepMetrics> log, std::ostream& out);
std::vector<StepMetrics> read_train_log_csv(std::istream& in);

nlohmann::json train_state_to_json(const TrainState& state);
TrainState train_state_from_json(const nlohmann::json& doc);

}  // namespace deephedge
