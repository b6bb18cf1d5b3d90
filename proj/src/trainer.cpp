#include "deephedge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "deephedge/errors.hpp"
#include "deephedge/parallel.hpp"
#include "deephedge/rng.hpp"
#include "deephedge/tda.hpp"
#include "text.hpp"

namespace deephedge {

using Eigen::Index;
using Eigen::MatrixXd;

void TrainConfig::validate() const {
    if (batch_size < 2) throw ConfigError("batch_size must be at least 2 (variance needs two samples)");
    if (steps < 0) throw ConfigError("steps must be non-negative");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be positive");
    if (window_size < 2) throw ConfigError("window_size must be at least 2");
    if (episode_steps < 1) throw ConfigError("episode_steps must be at least 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (clip_norm < 0.0) throw ConfigError("clip_norm must be non-negative");
    if (width < 1 || cells < 1) throw ConfigError("network width and cell count must be positive");
    heston.validate();
    cliquet.validate_for(episode_steps);
}

nlohmann::json config_to_json(const TrainConfig& c) {
    return {
        {"batch_size", c.batch_size},
        {"steps", c.steps},
        {"gamma", c.gamma},
        {"use_tda", c.use_tda},
        {"learning_rate", c.learning_rate},
        {"seed", c.seed},
        {"window_size", c.window_size},
        {"episode_steps", c.episode_steps},
        {"heston",
         {{"mu", c.heston.mu},
          {"v0", c.heston.v0},
          {"kappa", c.heston.kappa},
          {"theta", c.heston.theta},
          {"xi", c.heston.xi},
          {"rho", c.heston.rho},
          {"s0", c.heston.s0},
          {"dt", c.dt}}},
        {"cliquet", {{"cap", c.cliquet.cap}, {"period", c.cliquet.period}}},
    };
}

namespace {

void require_keys(const nlohmann::json& obj, const std::set<std::string>& keys,
                  const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& key : keys) {
        if (!obj.contains(key)) throw ConfigError(where + " is missing key '" + key + "'");
    }
    for (const auto& item : obj.items()) {
        if (!keys.contains(item.key()))
            throw ConfigError(where + " has unknown key '" + item.key() + "'");
    }
}

}  // namespace

TrainConfig config_from_json(const nlohmann::json& doc) {
    TrainConfig c;
    try {
        require_keys(doc,
                     {"batch_size", "steps", "gamma", "use_tda", "learning_rate", "seed",
                      "window_size", "episode_steps", "heston", "cliquet"},
                     "config");
        const auto& h = doc.at("heston");
        require_keys(h, {"mu", "v0", "kappa", "theta", "xi", "rho", "s0", "dt"}, "config.heston");
        const auto& q = doc.at("cliquet");
        require_keys(q, {"cap", "period"}, "config.cliquet");

        c.batch_size = doc.at("batch_size").get<int>();
        c.steps = doc.at("steps").get<long>();
        c.gamma = doc.at("gamma").get<double>();
        c.use_tda = doc.at("use_tda").get<bool>();
        c.learning_rate = doc.at("learning_rate").get<double>();
        c.seed = doc.at("seed").get<std::uint64_t>();
        c.window_size = doc.at("window_size").get<int>();
        c.episode_steps = doc.at("episode_steps").get<int>();
        c.heston.mu = h.at("mu").get<double>();
        c.heston.v0 = h.at("v0").get<double>();
        c.heston.kappa = h.at("kappa").get<double>();
        c.heston.theta = h.at("theta").get<double>();
        c.heston.xi = h.at("xi").get<double>();
        c.heston.rho = h.at("rho").get<double>();
        c.heston.s0 = h.at("s0").get<double>();
        c.dt = h.at("dt").get<double>();
        c.cliquet.cap = q.at("cap").get<double>();
        c.cliquet.period = q.at("period").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

TrainConfig load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config " + file);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + file + " is not valid JSON: " + e.what());
    }
    return config_from_json(doc);
}

namespace {

struct PreparedPath {
    RowMatrix features;
    double liability = 0.0;
};

PreparedPath prepare_path(std::span<const double> spot, std::span<const double> variance,
                          const CliquetSpec& spec, bool use_tda, int window_size) {
    if (spot.size() != variance.size())
        throw ShapeError("spot and variance series must share one length");
    if (spot.size() < 2) throw ShapeError("an episode needs at least two observations");
    const auto payout = payout_series(spot, spec);
    const auto steps = static_cast<Index>(spot.size()) - 1;
    PreparedPath out;
    out.features.resize(steps, use_tda ? kTdaFeatureDim : kCoreFeatureDim);
    for (Index t = 0; t < steps; ++t) {
        out.features(t, 0) = spot[t];
        out.features(t, 1) = variance[t];
        out.features(t, 2) = payout[t];
    }
    if (use_tda) {
        TdaOptions options;
        options.window_size = window_size;
        const auto tda = rolling_tda_features(spot, variance, payout, options);
        for (Index t = 0; t < steps; ++t) {
            out.features(t, 3) = tda.l1[t];
            out.features(t, 4) = tda.l2[t];
        }
    }
    if (!out.features.allFinite()) throw NumericError("non-finite feature values");
    out.liability = payout.back();
    return out;
}

}  // namespace

RowMatrix build_features(std::span<const double> spot, std::span<const double> variance,
                         const CliquetSpec& spec, bool use_tda, int window_size) {
    return prepare_path(spot, variance, spec, use_tda, window_size).features;
}

double hedge_pnl(std::span<const double> spot, std::span<const double> actions) {
    if (spot.size() != actions.size() + 1)
        throw ShapeError("hedge_pnl needs exactly one action per price increment");
    double pnl = 0.0;
    for (std::size_t t = 0; t < actions.size(); ++t) pnl += actions[t] * (spot[t + 1] - spot[t]);
    return pnl;
}

namespace {

double mean_of(std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

void require_batch(std::span<const double> errors) {
    if (errors.size() < 2)
        throw DegenerateBatchError("variance loss needs at least two errors, got " +
                                   std::to_string(errors.size()));
}

}  // namespace

double variance_loss(std::span<const double> errors, double gamma) {
    require_batch(errors);
    const double mean = mean_of(errors);
    double sum_sq = 0.0;
    for (double e : errors) sum_sq += (e - mean) * (e - mean);
    return gamma * sum_sq / static_cast<double>(errors.size());
}

std::vector<double> variance_loss_gradient(std::span<const double> errors, double gamma) {
    require_batch(errors);
    const double mean = mean_of(errors);
    const double scale = 2.0 * gamma / static_cast<double>(errors.size());
    std::vector<double> grad(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) grad[i] = scale * (errors[i] - mean);
    return grad;
}

Rollout rollout(const PolicyParams& params, const PathSet& paths, const CliquetSpec& spec,
                const RolloutOptions& options) {
    const int expected_dim = options.use_tda ? kTdaFeatureDim : kCoreFeatureDim;
    if (params.feature_dim != expected_dim)
        throw ConfigError("policy expects " + std::to_string(params.feature_dim) +
                          " features but the run is configured for " + std::to_string(expected_dim));
    if (options.with_gradient && !options.gamma)
        throw ConfigError("a gradient rollout needs gamma");
    const Index n_paths = paths.n_paths();
    const Index steps = paths.n_steps();
    if (n_paths < 1) throw EmptyInputError("rollout over an empty path set");
    if (steps < 1) throw ShapeError("rollout needs at least one step per path");
    spec.validate();

    const Index n_chunks = (n_paths + kRolloutChunk - 1) / kRolloutChunk;
    struct Chunk {
        Index first = 0;
        Index size = 0;
        MatrixXd actions;  // steps x size
        UnrollTrace trace;
        std::optional<PolicyParams> gradient;
    };
    std::vector<Chunk> chunks(n_chunks);
    Rollout out;
    out.outcome.pnl.resize(n_paths);
    out.outcome.liability.resize(n_paths);
    out.outcome.error.resize(n_paths);

    auto spot_row = [&](Index p) {
        return std::span<const double>(paths.spot.row(p).data(), static_cast<std::size_t>(steps + 1));
    };

    parallel_for(static_cast<std::size_t>(n_chunks), options.threads, [&](std::size_t k) {
        Chunk& chunk = chunks[k];
        chunk.first = static_cast<Index>(k) * kRolloutChunk;
        chunk.size = std::min(kRolloutChunk, n_paths - chunk.first);
        std::vector<MatrixXd> inputs(steps, MatrixXd(expected_dim, chunk.size));
        for (Index b = 0; b < chunk.size; ++b) {
            const Index p = chunk.first + b;
            const std::span<const double> variance(paths.variance.row(p).data(),
                                                   static_cast<std::size_t>(steps + 1));
            const auto prepared =
                prepare_path(spot_row(p), variance, spec, options.use_tda, options.window_size);
            for (Index t = 0; t < steps; ++t) inputs[t].col(b) = prepared.features.row(t).transpose();
            out.outcome.liability[p] = prepared.liability;
        }
        chunk.actions =
            unroll_batch(params, inputs, 0.0, options.with_gradient ? &chunk.trace : nullptr);
        for (Index b = 0; b < chunk.size; ++b) {
            const Index p = chunk.first + b;
            const std::span<const double> actions(chunk.actions.col(b).data(),
                                                  static_cast<std::size_t>(steps));
            out.outcome.pnl[p] = hedge_pnl(spot_row(p), actions);
            out.outcome.error[p] = out.outcome.pnl[p] - out.outcome.liability[p];
        }
    });

    double abs_sum = 0.0;
    double turnover_sum = 0.0;
    for (const auto& chunk : chunks) {
        for (Index b = 0; b < chunk.size; ++b) {
            double prev = 0.0;
            for (Index t = 0; t < steps; ++t) {
                const double a = chunk.actions(t, b);
                abs_sum += std::abs(a);
                turnover_sum += std::abs(a - prev);
                prev = a;
            }
        }
    }
    const double denom = static_cast<double>(n_paths) * static_cast<double>(steps);
    out.mean_abs_trade = abs_sum / denom;
    out.turnover = turnover_sum / denom;

    if (!options.gamma) return out;
    out.loss = variance_loss(out.outcome.error, *options.gamma);
    if (!options.with_gradient) return out;

    const auto error_grad = variance_loss_gradient(out.outcome.error, *options.gamma);
    parallel_for(static_cast<std::size_t>(n_chunks), options.threads, [&](std::size_t k) {
        Chunk& chunk = chunks[k];
        MatrixXd action_grad(steps, chunk.size);
        for (Index b = 0; b < chunk.size; ++b) {
            const Index p = chunk.first + b;
            for (Index t = 0; t < steps; ++t)
                action_grad(t, b) = error_grad[p] * (paths.spot(p, t + 1) - paths.spot(p, t));
        }
        chunk.gradient = backprop_batch(params, chunk.trace, action_grad);
        chunk.trace = UnrollTrace{};
    });
    out.gradient = std::move(*chunks.front().gradient);
    for (std::size_t k = 1; k < chunks.size(); ++k) *out.gradient += *chunks[k].gradient;
    return out;
}

AdamMoments AdamMoments::zeros_like(const PolicyParams& params) {
    return {PolicyParams::zeros(params.feature_dim, params.width, params.cells),
            PolicyParams::zeros(params.feature_dim, params.width, params.cells)};
}

void adam_update(PolicyParams& params, const PolicyParams& grads, AdamMoments& moments,
                 long step_index, double learning_rate) {
    if (!params.same_shape(grads) || !params.same_shape(moments.first) ||
        !params.same_shape(moments.second))
        throw ShapeError("Adam update with mismatched tensor shapes");
    if (step_index < 1) throw ParameterError("Adam step index starts at 1");
    const double correction1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step_index));
    const double correction2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step_index));
    auto p = params.tensors();
    const auto g = grads.tensors();
    auto m = moments.first.tensors();
    auto v = moments.second.tensors();
    for (std::size_t k = 0; k < p.size(); ++k) {
        auto& mk = *m[k].second;
        auto& vk = *v[k].second;
        const auto& gk = *g[k].second;
        mk = kAdamBeta1 * mk + (1.0 - kAdamBeta1) * gk;
        vk = kAdamBeta2 * vk + (1.0 - kAdamBeta2) * gk.cwiseAbs2();
        p[k].second->array() -= learning_rate * (mk.array() / correction1) /
                                ((vk.array() / correction2).sqrt() + kAdamEpsilon);
    }
}

TrainState initial_state(const TrainConfig& config) {
    config.validate();
    TrainState state{init_params(config.feature_dim(), config.seed, config.width, config.cells), {}, 0};
    state.moments = AdamMoments::zeros_like(state.params);
    return state;
}

std::uint64_t batch_seed(const TrainConfig& config, long step_index) {
    return stream_seed(domain_seed(config.seed, SeedDomain::TrainingBatch),
                       static_cast<std::uint64_t>(step_index));
}

StepMetrics train_step(TrainState& state, const TrainConfig& config) {
    const long step = state.completed_steps + 1;
    const PathSet batch = simulate_paths(config.heston, config.batch_size, config.episode_steps,
                                         config.dt, batch_seed(config, step), config.threads);
    RolloutOptions options;
    options.use_tda = config.use_tda;
    options.window_size = config.window_size;
    options.threads = config.threads;
    options.gamma = config.gamma;
    options.with_gradient = true;
    Rollout result = rollout(state.params, batch, config.cliquet, options);

    if (!std::isfinite(result.loss)) throw DivergenceError("non-finite loss", step);
    PolicyParams& grad = *result.gradient;
    if (!grad.all_finite()) throw DivergenceError("non-finite gradient", step);
    if (config.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& [name, t] : grad.tensors()) sq += t->squaredNorm();
        const double norm = std::sqrt(sq);
        if (norm > config.clip_norm) grad *= config.clip_norm / norm;
    }
    adam_update(state.params, grad, state.moments, step, config.learning_rate);
    if (!state.params.all_finite()) throw DivergenceError("non-finite parameters", step);
    state.completed_steps = step;
    return {step, result.loss, result.mean_abs_trade};
}

TrainResult train(const TrainConfig& config, std::optional<TrainState> resume,
                  long checkpoint_every, const CheckpointHook& on_checkpoint) {
    config.validate();
    TrainResult result{resume ? std::move(*resume) : initial_state(config), {}};
    auto& state = result.state;
    if (state.params.feature_dim != config.feature_dim())
        throw ConfigError("resumed policy feature_dim does not match use_tda");
    if (state.completed_steps > config.steps)
        throw ConfigError("resumed state is already past the configured step count");
    while (state.completed_steps < config.steps) {
        result.log.push_back(train_step(state, config));
        if (checkpoint_every > 0 && on_checkpoint && state.completed_steps % checkpoint_every == 0)
            on_checkpoint(state);
    }
    return result;
}

void write_train_log_csv(std::span<const StepMetrics> log, std::ostream& out) {
    out << "step,loss,mean_abs_trade\n";
    for (const auto& row : log) {
        out << row.step << ',' << text::format_double(row.loss) << ','
            << text::format_double(row.mean_abs_trade) << '\n';
    }
    if (!out) throw IoError("failed writing training log");
}

std::vector<StepMetrics> read_train_log_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw EmptyInputError("training log is empty");
    text::strip_cr(line);
    if (line != "step,loss,mean_abs_trade") throw IoError("unexpected training log header: " + line);
    std::vector<StepMetrics> log;
    while (std::getline(in, line)) {
        text::strip_cr(line);
        if (line.empty()) continue;
        const auto fields = text::split(line, ',');
        if (fields.size() != 3) throw IoError("training log rows need 3 fields: " + line);
        log.push_back({text::parse<long>(fields[0]), text::parse<double>(fields[1]),
                       text::parse<double>(fields[2])});
    }
    return log;
}

nlohmann::json train_state_to_json(const TrainState& state) {
    return {{"completed_steps", state.completed_steps},
            {"params", params_to_json(state.params)},
            {"adam_first", params_to_json(state.moments.first)},
            {"adam_second", params_to_json(state.moments.second)}};
}

TrainState train_state_from_json(const nlohmann::json& doc) {
    try {
        TrainState state{params_from_json(doc.at("params")),
                         {params_from_json(doc.at("adam_first")),
                          params_from_json(doc.at("adam_second"))},
                         doc.at("completed_steps").get<long>()};
        if (!state.params.same_shape(state.moments.first) ||
            !state.params.same_shape(state.moments.second))
            throw ShapeError("training state moments do not match the policy shape");
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed training state: ") + e.what());
    }
}

}  // namespace deephedge
