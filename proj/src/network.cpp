#include "deephedge/network.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "deephedge/errors.hpp"
#include "deephedge/rng.hpp"

namespace deephedge {

using Eigen::Index;
using Eigen::MatrixXd;

PolicyParams PolicyParams::zeros(int feature_dim, int width, int cells) {
    if (feature_dim < 1 || width < 1 || cells < 1)
        throw ConfigError("policy dimensions must be positive");
    PolicyParams p;
    p.feature_dim = feature_dim;
    p.width = width;
    p.cells = cells;
    p.feature_weight = MatrixXd::Zero(width, feature_dim);
    p.feature_bias = MatrixXd::Zero(width, 1);
    p.action_weight = MatrixXd::Zero(width, 1);
    p.action_bias = MatrixXd::Zero(width, 1);
    p.lstm.resize(cells);
    for (auto& c : p.lstm) {
        c.weight = MatrixXd::Zero(4 * width, 2 * width);
        c.bias = MatrixXd::Zero(4 * width, 1);
    }
    p.head_weight = MatrixXd::Zero(1, width);
    p.head_bias = MatrixXd::Zero(1, 1);
    return p;
}

namespace {

template <typename Params, typename Tensor>
std::vector<std::pair<std::string, Tensor*>> collect_tensors(Params& p) {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.emplace_back("feature_dense.weight", &p.feature_weight);
    out.emplace_back("feature_dense.bias", &p.feature_bias);
    out.emplace_back("action_dense.weight", &p.action_weight);
    out.emplace_back("action_dense.bias", &p.action_bias);
    for (std::size_t i = 0; i < p.lstm.size(); ++i) {
        const std::string prefix = "lstm." + std::to_string(i) + ".";
        out.emplace_back(prefix + "weight", &p.lstm[i].weight);
        out.emplace_back(prefix + "bias", &p.lstm[i].bias);
    }
    out.emplace_back("head.weight", &p.head_weight);
    out.emplace_back("head.bias", &p.head_bias);
    return out;
}

}  // namespace

std::vector<std::pair<std::string, MatrixXd*>> PolicyParams::tensors() {
    return collect_tensors<PolicyParams, MatrixXd>(*this);
}

std::vector<std::pair<std::string, const MatrixXd*>> PolicyParams::tensors() const {
    return collect_tensors<const PolicyParams, const MatrixXd>(*this);
}

Index PolicyParams::parameter_count() const {
    Index n = 0;
    for (const auto& [name, t] : tensors()) n += t->size();
    return n;
}

bool PolicyParams::same_shape(const PolicyParams& other) const {
    if (feature_dim != other.feature_dim || width != other.width || cells != other.cells)
        return false;
    const auto a = tensors();
    const auto b = other.tensors();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].second->rows() != b[i].second->rows() || a[i].second->cols() != b[i].second->cols())
            return false;
    }
    return true;
}

bool PolicyParams::all_finite() const {
    for (const auto& [name, t] : tensors()) {
        if (!t->allFinite()) return false;
    }
    return true;
}

PolicyParams& PolicyParams::operator+=(const PolicyParams& other) {
    if (!same_shape(other)) throw ShapeError("adding policy tensors of different shapes");
    auto mine = tensors();
    const auto theirs = other.tensors();
    for (std::size_t i = 0; i < mine.size(); ++i) *mine[i].second += *theirs[i].second;
    return *this;
}

PolicyParams& PolicyParams::operator*=(double scale) {
    for (auto& [name, t] : tensors()) *t *= scale;
    return *this;
}

bool operator==(const PolicyParams& a, const PolicyParams& b) {
    if (!a.same_shape(b)) return false;
    const auto x = a.tensors();
    const auto y = b.tensors();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (*x[i].second != *y[i].second) return false;
    }
    return true;
}

PolicyParams init_params(int feature_dim, std::uint64_t seed, int width, int cells) {
    if (feature_dim != kCoreFeatureDim && feature_dim != kTdaFeatureDim)
        throw ConfigError("feature_dim must be 3 (core) or 5 (with TDA), got " +
                          std::to_string(feature_dim));
    PolicyParams p = PolicyParams::zeros(feature_dim, width, cells);
    std::mt19937_64 engine(domain_seed(seed, SeedDomain::PolicyInit));
    auto glorot = [&engine](auto&& w) {
        const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Index j = 0; j < w.cols(); ++j)
            for (Index i = 0; i < w.rows(); ++i) w(i, j) = dist(engine);
    };
    glorot(p.feature_weight);
    glorot(p.action_weight);
    for (auto& c : p.lstm) {
        // Input and recurrent kernels are initialized as separate 4W x W maps.
        glorot(c.weight.leftCols(width));
        glorot(c.weight.rightCols(width));
        c.bias.middleRows(width, width).setOnes();
    }
    glorot(p.head_weight);
    return p;
}

PolicyState PolicyState::zeros(const PolicyParams& params, Index batch) {
    PolicyState s;
    s.hidden.assign(params.cells, MatrixXd::Zero(params.width, batch));
    s.cell.assign(params.cells, MatrixXd::Zero(params.width, batch));
    return s;
}

namespace {

// Both squashes go through exp, which Eigen vectorizes for double (tanh it does not).
template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
    return (1.0 + (-x).exp()).inverse();
}

template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& x) {
    return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
}

// One time step for a batch; updates `state` in place and returns actions (1 x B).
// Optional outputs receive the activations of this step.
MatrixXd step_batch(const PolicyParams& p, const MatrixXd& inputs, const MatrixXd& prev_action,
                    PolicyState& state, MatrixXd* encoded_out, std::vector<MatrixXd>* gates_out) {
    const Index w = p.width;
    MatrixXd pre = p.feature_weight * inputs + p.action_weight * prev_action;
    pre.colwise() += (p.feature_bias + p.action_bias).col(0);
    MatrixXd stacked(2 * w, inputs.cols());
    stacked.topRows(w) = fast_tanh(pre.array()).matrix();
    if (encoded_out) *encoded_out = stacked.topRows(w);

    MatrixXd g(4 * w, inputs.cols());
    for (int l = 0; l < p.cells; ++l) {
        const auto& cell = p.lstm[l];
        stacked.bottomRows(w) = state.hidden[l];
        g.noalias() = cell.weight * stacked;
        g.colwise() += cell.bias.col(0);
        g.topRows(2 * w) = sigmoid(g.topRows(2 * w).array()).matrix();
        g.middleRows(2 * w, w) = fast_tanh(g.middleRows(2 * w, w).array()).matrix();
        g.bottomRows(w) = sigmoid(g.bottomRows(w).array()).matrix();

        const auto in_gate = g.topRows(w).array();
        const auto forget_gate = g.middleRows(w, w).array();
        const auto candidate = g.middleRows(2 * w, w).array();
        const auto out_gate = g.bottomRows(w).array();
        state.cell[l] = (forget_gate * state.cell[l].array() + in_gate * candidate).matrix();
        state.hidden[l] = (out_gate * fast_tanh(state.cell[l].array())).matrix();
        stacked.topRows(w) = state.hidden[l];
        if (gates_out) (*gates_out)[l] = g;
    }
    MatrixXd action = p.head_weight * state.hidden[p.cells - 1];
    action.array() += p.head_bias(0, 0);
    return action;
}

}  // namespace

double policy_step(const PolicyParams& params, const Eigen::VectorXd& features, double prev_action,
                   PolicyState& state) {
    if (features.size() != params.feature_dim)
        throw ShapeError("policy_step expects " + std::to_string(params.feature_dim) +
                         " features, got " + std::to_string(features.size()));
    if (static_cast<int>(state.hidden.size()) != params.cells ||
        static_cast<int>(state.cell.size()) != params.cells)
        throw ShapeError("policy state has the wrong number of cells");
    for (int l = 0; l < params.cells; ++l) {
        if (state.hidden[l].rows() != params.width || state.hidden[l].cols() != 1 ||
            state.cell[l].rows() != params.width || state.cell[l].cols() != 1)
            throw ShapeError("policy state has the wrong shape");
    }
    if (!features.allFinite() || !std::isfinite(prev_action))
        throw NumericError("non-finite policy input");
    const MatrixXd prev = MatrixXd::Constant(1, 1, prev_action);
    return step_batch(params, features, prev, state, nullptr, nullptr)(0, 0);
}

Eigen::VectorXd unroll_episode(const PolicyParams& params, const MatrixXd& features,
                               double initial_action) {
    if (features.cols() != params.feature_dim)
        throw ShapeError("feature matrix has " + std::to_string(features.cols()) +
                         " columns, policy expects " + std::to_string(params.feature_dim));
    if (!features.allFinite()) throw NumericError("non-finite feature matrix");
    std::vector<MatrixXd> inputs(features.rows());
    for (Index t = 0; t < features.rows(); ++t) inputs[t] = features.row(t).transpose();
    return unroll_batch(params, inputs, initial_action).col(0);
}

MatrixXd unroll_batch(const PolicyParams& params, const std::vector<MatrixXd>& inputs,
                      double initial_action, UnrollTrace* trace) {
    const auto steps = static_cast<Index>(inputs.size());
    const Index batch = steps > 0 ? inputs.front().cols() : 0;
    for (const auto& x : inputs) {
        if (x.rows() != params.feature_dim || x.cols() != batch)
            throw ShapeError("batched inputs must all be feature_dim x batch");
    }
    MatrixXd actions(steps, batch);
    PolicyState state = PolicyState::zeros(params, batch);
    MatrixXd prev = MatrixXd::Constant(1, batch, initial_action);

    if (trace) {
        trace->inputs = inputs;
        trace->prev_actions.resize(steps, batch);
        trace->encoded.assign(steps, MatrixXd());
        trace->gates.assign(steps, std::vector<MatrixXd>(params.cells));
        trace->cell.assign(steps, std::vector<MatrixXd>(params.cells));
        trace->hidden.assign(steps, std::vector<MatrixXd>(params.cells));
    }
    for (Index t = 0; t < steps; ++t) {
        if (trace) trace->prev_actions.row(t) = prev;
        MatrixXd a = step_batch(params, inputs[t], prev, state, trace ? &trace->encoded[t] : nullptr,
                                trace ? &trace->gates[t] : nullptr);
        if (trace) {
            trace->cell[t] = state.cell;
            trace->hidden[t] = state.hidden;
        }
        actions.row(t) = a;
        prev = std::move(a);
    }
    return actions;
}

PolicyParams backprop_batch(const PolicyParams& p, const UnrollTrace& trace,
                            const MatrixXd& action_grad) {
    const auto steps = static_cast<Index>(trace.inputs.size());
    const Index w = p.width;
    const Index batch = steps > 0 ? trace.inputs.front().cols() : 0;
    if (action_grad.rows() != steps || action_grad.cols() != batch)
        throw ShapeError("action gradient must be steps x batch");

    PolicyParams grad = PolicyParams::zeros(p.feature_dim, p.width, p.cells);
    std::vector<MatrixXd> dh_next(p.cells, MatrixXd::Zero(w, batch));
    std::vector<MatrixXd> dc_next(p.cells, MatrixXd::Zero(w, batch));
    MatrixXd da_next = MatrixXd::Zero(1, batch);
    MatrixXd d_gates(4 * w, batch);
    MatrixXd stacked(2 * w, batch);
    MatrixXd d_stacked(2 * w, batch);

    for (Index t = steps - 1; t >= 0; --t) {
        const MatrixXd da = action_grad.row(t) + da_next;
        const auto& top_hidden = trace.hidden[t][p.cells - 1];
        grad.head_weight.noalias() += da * top_hidden.transpose();
        grad.head_bias(0, 0) += da.sum();
        MatrixXd dh = p.head_weight.transpose() * da;

        for (int l = p.cells - 1; l >= 0; --l) {
            dh += dh_next[l];
            const auto& g = trace.gates[t][l];
            const auto in_gate = g.topRows(w).array();
            const auto forget_gate = g.middleRows(w, w).array();
            const auto candidate = g.middleRows(2 * w, w).array();
            const auto out_gate = g.bottomRows(w).array();
            const Eigen::ArrayXXd c_tanh = fast_tanh(trace.cell[t][l].array());

            Eigen::ArrayXXd dc = dh.array() * out_gate * (1.0 - c_tanh.square()) + dc_next[l].array();
            d_gates.topRows(w) = (dc * candidate * in_gate * (1.0 - in_gate)).matrix();
            if (t > 0) {
                d_gates.middleRows(w, w) =
                    (dc * trace.cell[t - 1][l].array() * forget_gate * (1.0 - forget_gate)).matrix();
            } else {
                d_gates.middleRows(w, w).setZero();
            }
            d_gates.middleRows(2 * w, w) = (dc * in_gate * (1.0 - candidate.square())).matrix();
            d_gates.bottomRows(w) = (dh.array() * c_tanh * out_gate * (1.0 - out_gate)).matrix();
            dc_next[l] = (dc * forget_gate).matrix();

            stacked.topRows(w) = l == 0 ? trace.encoded[t] : trace.hidden[t][l - 1];
            if (t > 0) stacked.bottomRows(w) = trace.hidden[t - 1][l];
            else stacked.bottomRows(w).setZero();
            auto& cg = grad.lstm[l];
            cg.weight.noalias() += d_gates * stacked.transpose();
            cg.bias += d_gates.rowwise().sum();
            d_stacked.noalias() = p.lstm[l].weight.transpose() * d_gates;
            dh = d_stacked.topRows(w);
            dh_next[l] = d_stacked.bottomRows(w);
        }

        const MatrixXd d_pre =
            (dh.array() * (1.0 - trace.encoded[t].array().square())).matrix();
        grad.feature_weight.noalias() += d_pre * trace.inputs[t].transpose();
        const Eigen::VectorXd d_bias = d_pre.rowwise().sum();
        grad.feature_bias += d_bias;
        grad.action_bias += d_bias;
        grad.action_weight.noalias() += d_pre * trace.prev_actions.row(t).transpose();
        da_next.noalias() = p.action_weight.transpose() * d_pre;
    }
    return grad;
}

nlohmann::json params_to_json(const PolicyParams& params) {
    nlohmann::json doc;
    doc["feature_dim"] = params.feature_dim;
    doc["width"] = params.width;
    doc["cells"] = params.cells;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& [name, t] : params.tensors()) {
        nlohmann::json values = nlohmann::json::array();
        for (Index i = 0; i < t->rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (Index j = 0; j < t->cols(); ++j) row.push_back((*t)(i, j));
            values.push_back(std::move(row));
        }
        tensors.push_back({{"name", name}, {"shape", {t->rows(), t->cols()}}, {"values", values}});
    }
    doc["tensors"] = std::move(tensors);
    return doc;
}

PolicyParams params_from_json(const nlohmann::json& doc) {
    PolicyParams p;
    try {
        p = PolicyParams::zeros(doc.at("feature_dim").get<int>(), doc.at("width").get<int>(),
                                doc.at("cells").get<int>());
        const auto& tensors = doc.at("tensors");
        auto expected = p.tensors();
        if (tensors.size() != expected.size())
            throw ConfigError("checkpoint has " + std::to_string(tensors.size()) +
                              " tensors, expected " + std::to_string(expected.size()));
        for (std::size_t k = 0; k < expected.size(); ++k) {
            auto& [name, t] = expected[k];
            const auto& entry = tensors[k];
            if (entry.at("name").get<std::string>() != name)
                throw ConfigError("checkpoint tensor " + std::to_string(k) + " should be " + name);
            const auto shape = entry.at("shape").get<std::vector<Index>>();
            if (shape.size() != 2 || shape[0] != t->rows() || shape[1] != t->cols())
                throw ShapeError("checkpoint tensor " + name + " has the wrong shape");
            const auto& values = entry.at("values");
            if (static_cast<Index>(values.size()) != t->rows())
                throw ShapeError("checkpoint tensor " + name + " has the wrong row count");
            for (Index i = 0; i < t->rows(); ++i) {
                const auto& row = values[i];
                if (static_cast<Index>(row.size()) != t->cols())
                    throw ShapeError("checkpoint tensor " + name + " has a ragged row");
                for (Index j = 0; j < t->cols(); ++j) (*t)(i, j) = row[j].get<double>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
    if (!p.all_finite()) throw NumericError("checkpoint contains non-finite parameters");
    return p;
}

void save_checkpoint(const PolicyParams& params, const std::string& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot open " + file + " for writing");
    out << params_to_json(params).dump() << '\n';
    if (!out) throw IoError("failed writing " + file);
}

PolicyParams load_checkpoint(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("checkpoint " + file + " is not valid JSON: " + e.what());
    }
    return params_from_json(doc);
}

}  // namespace deephedge
