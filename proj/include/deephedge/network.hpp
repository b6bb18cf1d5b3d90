#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace deephedge {

inline constexpr int kCoreFeatureDim = 3;
inline constexpr int kTdaFeatureDim = 5;
inline constexpr int kDefaultWidth = 32;
inline constexpr int kDefaultCells = 4;

struct LstmCellParams {
    // Rows are gate blocks [input; forget; candidate; output], each `width` tall.
    // Columns [0, W) act on the cell input, [W, 2W) on the previous hidden state.
    Eigen::MatrixXd weight;  // 4W x 2W
    Eigen::MatrixXd bias;    // 4W x 1
};

/// Weights of the hedging policy:
///   encoded = tanh(feature_dense(x_t) + action_dense(a_{t-1}))
///   -> `cells` stacked LSTM cells of width `width` -> head (scalar position).
/// Every tensor is an Eigen::MatrixXd so optimizers and serializers can treat
/// them uniformly; biases are column matrices.
struct PolicyParams {
    int feature_dim = kCoreFeatureDim;
    int width = kDefaultWidth;
    int cells = kDefaultCells;

    Eigen::MatrixXd feature_weight;  // W x F
    Eigen::MatrixXd feature_bias;    // W x 1
    Eigen::MatrixXd action_weight;   // W x 1
    Eigen::MatrixXd action_bias;     // W x 1
    std::vector<LstmCellParams> lstm;
    Eigen::MatrixXd head_weight;  // 1 x W
    Eigen::MatrixXd head_bias;    // 1 x 1

    /// All tensors zero, with shapes for the given architecture.
    static PolicyParams zeros(int feature_dim, int width = kDefaultWidth,
                              int cells = kDefaultCells);

    /// Named views in a fixed order (used for checkpoints, Adam, gradient checks).
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> tensors();
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> tensors() const;

    Eigen::Index parameter_count() const;
    bool same_shape(const PolicyParams& other) const;
    bool all_finite() const;

    PolicyParams& operator+=(const PolicyParams& other);
    PolicyParams& operator*=(double scale);
};

bool operator==(const PolicyParams& a, const PolicyParams& b);

/// Glorot-uniform weights, zero biases, forget-gate bias 1. feature_dim must be 3 or 5.
PolicyParams init_params(int feature_dim, std::uint64_t seed, int width = kDefaultWidth,
                         int cells = kDefaultCells);

/// Recurrent state for a batch of episodes (one column per episode).
struct PolicyState {
    std::vector<Eigen::MatrixXd> hidden;  // per cell, W x B
    std::vector<Eigen::MatrixXd> cell;    // per cell, W x B

    static PolicyState zeros(const PolicyParams& params, Eigen::Index batch = 1);
};

/// One decision for a single episode. Throws ShapeError or NumericError.
double policy_step(const PolicyParams& params, const Eigen::VectorXd& features,
                   double prev_action, PolicyState& state);

/// Actions for one episode; `features` has one row per decision time.
Eigen::VectorXd unroll_episode(const PolicyParams& params, const Eigen::MatrixXd& features,
                               double initial_action = 0.0);

/// Activations of a batched unroll, kept for the backward pass.
struct UnrollTrace {
    std::vector<Eigen::MatrixXd> inputs;                // [t] F x B
    Eigen::MatrixXd prev_actions;                       // T x B
    std::vector<Eigen::MatrixXd> encoded;               // [t] W x B
    std::vector<std::vector<Eigen::MatrixXd>> gates;    // [t][cell] 4W x B, post-activation
    std::vector<std::vector<Eigen::MatrixXd>> cell;     // [t][cell] W x B
    std::vector<std::vector<Eigen::MatrixXd>> hidden;   // [t][cell] W x B
};

/// Batched unroll from zero state. inputs[t] is F x B; returns actions T x B.
/// When `trace` is non-null it receives everything backprop needs.
Eigen::MatrixXd unroll_batch(const PolicyParams& params, const std::vector<Eigen::MatrixXd>& inputs,
                             double initial_action, UnrollTrace* trace = nullptr);

/// Reverse-mode gradient through a traced unroll. `action_grad(t, b)` is the
/// direct derivative of the loss w.r.t. action t of episode b; the dependence
/// of later steps on earlier actions is added internally.
PolicyParams backprop_batch(const PolicyParams& params, const UnrollTrace& trace,
                            const Eigen::MatrixXd& action_grad);

nlohmann::json params_to_json(const PolicyParams& params);
PolicyParams params_from_json(const nlohmann::json& doc);

void save_checkpoint(const PolicyParams& params, const std::string& file);
PolicyParams load_checkpoint(const std::string& file);

}  // namespace deephedge
