#include "deephedge/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "deephedge/errors.hpp"
#include "deephedge/evaluator.hpp"
#include "deephedge/heston.hpp"
#include "deephedge/plot.hpp"
#include "deephedge/trainer.hpp"

namespace deephedge::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
public:
    using Error::Error;
};

std::ofstream open_output(const std::string& file, std::ios::openmode mode = std::ios::trunc) {
    const fs::path path(file);
    if (path.has_parent_path() && !fs::exists(path.parent_path()))
        throw IoError("directory " + path.parent_path().string() + " does not exist");
    std::ofstream out(path, std::ios::binary | std::ios::out | mode);
    if (!out) throw IoError("cannot open " + file + " for writing");
    return out;
}

std::ifstream open_input(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file);
    return in;
}

void write_text(const std::string& file, const std::string& content) {
    auto out = open_output(file);
    out << content;
    if (!out) throw IoError("failed writing " + file);
}

bool parse_switch(const std::string& value) {
    if (value == "on") return true;
    if (value == "off") return false;
    throw UsageError("expected 'on' or 'off', got '" + value + "'");
}

struct SimulateArgs {
    std::string config;
    std::string out;
    long paths = 0;
    std::uint64_t seed = 0;
    bool force = false;
    unsigned threads = 1;
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const TrainConfig config = load_config(a.config);
    config.heston.validate();
    if (a.paths < 1) throw UsageError("--paths must be at least 1");
    if (fs::exists(a.out) && !a.force)
        throw IoError(a.out + " exists; pass --force to overwrite");
    const PathSet paths =
        simulate_paths(config.heston, a.paths, config.episode_steps, config.dt, a.seed, a.threads);
    auto file = open_output(a.out);
    write_paths_csv(paths, file);
    out << "wrote " << a.paths << " paths x " << config.episode_steps + 1 << " steps to " << a.out
        << '\n';
}

struct TrainArgs {
    std::string config;
    std::optional<std::string> tda;
    std::optional<int> batch;
    std::optional<long> steps;
    std::string out_model;
    std::string log;
    std::optional<std::string> resume;
    long checkpoint_every = 0;
    double clip_norm = 0.0;
    unsigned threads = 1;
};

std::string state_file(const std::string& model) { return model + ".state.json"; }

void cmd_train(const TrainArgs& a, std::ostream& out) {
    TrainConfig config = load_config(a.config);
    if (a.tda) config.use_tda = parse_switch(*a.tda);
    if (a.batch) config.batch_size = *a.batch;
    if (a.steps) config.steps = *a.steps;
    config.threads = a.threads;
    config.clip_norm = a.clip_norm;
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }

    std::optional<TrainState> resume;
    if (a.resume) {
        auto in = open_input(*a.resume);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("resume state is not valid JSON: ") + e.what());
        }
        resume = train_state_from_json(doc);
    }
    // Appending keeps one continuous log across resumed runs.
    const bool append = a.resume.has_value() && fs::exists(a.log);
    auto log = open_output(a.log, append ? std::ios::app : std::ios::trunc);

    auto save_state = [&](const TrainState& state) {
        save_checkpoint(state.params, a.out_model);
        write_text(state_file(a.out_model), train_state_to_json(state).dump() + "\n");
    };
    const TrainResult result = train(config, std::move(resume), a.checkpoint_every, save_state);
    std::ostringstream rows;
    write_train_log_csv(result.log, rows);
    std::string text = rows.str();
    if (append) text.erase(0, text.find('\n') + 1);
    log << text;
    if (!log) throw IoError("failed writing " + a.log);

    save_checkpoint(result.state.params, a.out_model);
    if (a.checkpoint_every > 0) save_state(result.state);
    out << "trained " << result.state.completed_steps << " steps (feature_dim "
        << result.state.params.feature_dim << ", batch " << config.batch_size << ") -> "
        << a.out_model << '\n';
    if (!result.log.empty()) out << "final loss " << result.log.back().loss << '\n';
}

struct EvalArgs {
    std::string model;
    std::string paths;
    std::string report;
    std::optional<std::string> per_path;
    std::optional<std::string> hist;
    std::optional<std::string> config;
    unsigned threads = 1;
};

void write_report_files(const EvalReport& report, const std::string& report_file,
                        const std::optional<std::string>& per_path,
                        const std::optional<std::string>& hist) {
    write_text(report_file, report_to_json(report).dump(2) + "\n");
    if (per_path) {
        auto f = open_output(*per_path);
        write_per_path_csv(report, f);
    }
    if (hist) {
        auto f = open_output(*hist);
        write_histogram_csv(report.histogram, f);
    }
}

void cmd_eval(const EvalArgs& a, std::ostream& out) {
    const TrainConfig config = a.config ? load_config(*a.config) : TrainConfig{};
    const PolicyParams params = load_checkpoint(a.model);
    const PathSet paths = load_paths_csv(a.paths, config.dt);
    EvalOptions options;
    options.use_tda = params.feature_dim == kTdaFeatureDim;
    options.window_size = config.window_size;
    options.threads = a.threads;
    const EvalReport report = evaluate(params, paths, config.cliquet, options);
    write_report_files(report, a.report, a.per_path, a.hist);
    out << "evaluated " << report.n_paths << " paths: pnl_std " << report.pnl_std << ", pnl_min "
        << report.pnl_min << '\n';
}

struct PlotArgs {
    std::optional<std::string> hist;
    std::optional<std::string> log;
    int window = 50;
    std::string out;
};

void cmd_plot(const PlotArgs& a, std::ostream& out) {
    if (a.hist.has_value() == a.log.has_value())
        throw UsageError("plot needs exactly one of --hist or --log");
    std::string svg;
    if (a.hist) {
        auto in = open_input(*a.hist);
        Histogram h;
        try {
            h = read_histogram_csv(in);
        } catch (const EmptyInputError& e) {
            throw UsageError(e.what());
        }
        svg = histogram_svg(h);
    } else {
        if (a.window < 1) throw UsageError("--window must be at least 1");
        auto in = open_input(*a.log);
        std::vector<StepMetrics> log;
        try {
            log = read_train_log_csv(in);
        } catch (const EmptyInputError& e) {
            throw UsageError(e.what());
        }
        if (log.empty()) throw UsageError("training log has no rows");
        std::vector<double> trade(log.size());
        for (std::size_t i = 0; i < log.size(); ++i) trade[i] = log[i].mean_abs_trade;
        svg = line_svg(rolling_mean(trade, a.window),
                       "Average trade size (rolling window " + std::to_string(a.window) + ")");
    }
    write_text(a.out, svg);
    out << "wrote " << a.out << '\n';
}

struct ReproArgs {
    std::string config;
    std::string out_dir;
    std::vector<int> batches{20, 1000};
    std::optional<long> steps;
    long test_paths = 50000;
    std::uint64_t test_seed = 7;
    unsigned threads = 1;
};

void cmd_repro(const ReproArgs& a, std::ostream& out, std::ostream& err) {
    TrainConfig base = load_config(a.config);
    if (a.steps) base.steps = *a.steps;
    base.threads = a.threads;
    if (a.test_paths < 1) throw UsageError("--test-paths must be at least 1");
    if (!fs::is_directory(a.out_dir)) throw IoError(a.out_dir + " is not a directory");
    const fs::path dir(a.out_dir);

    const PathSet test = simulate_paths(base.heston, a.test_paths, base.episode_steps, base.dt,
                                        a.test_seed, a.threads);
    std::vector<EvalReport> reports;
    std::vector<std::string> labels;
    for (int batch : a.batches) {
        for (bool tda : {false, true}) {
            TrainConfig config = base;
            config.batch_size = batch;
            config.use_tda = tda;
            try {
                config.validate();
            } catch (const ConfigError& e) {
                throw UsageError(e.what());
            }
            const std::string label = std::string(tda ? "tda" : "no_tda") + "_b" + std::to_string(batch);
            err << "training " << label << " for " << config.steps << " steps\n";
            const TrainResult result = train(config);
            save_checkpoint(result.state.params, (dir / (label + ".model.json")).string());
            {
                auto log = open_output((dir / (label + ".log.csv")).string());
                write_train_log_csv(result.log, log);
            }
            EvalOptions options;
            options.use_tda = tda;
            options.window_size = config.window_size;
            options.threads = a.threads;
            reports.push_back(evaluate(result.state.params, test, config.cliquet, options));
            write_report_files(reports.back(), (dir / (label + ".report.json")).string(),
                               std::nullopt, (dir / (label + ".hist.csv")).string());
            labels.push_back(label);
        }
    }
    std::ostringstream table;
    write_comparison_table(compare_models(reports, labels), table);
    write_text((dir / "comparison.txt").string(), table.str());
    out << table.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Deep hedging of a Heston cliquet with topological features", "deephedge"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate Heston paths to CSV");
    simulate->add_option("--config", sim.config, "Config JSON")->required();
    simulate->add_option("--out", sim.out, "Output CSV")->required();
    simulate->add_option("--paths", sim.paths, "Number of paths")->required();
    simulate->add_option("--seed", sim.seed, "RNG seed")->required();
    simulate->add_flag("--force", sim.force, "Overwrite an existing output");
    simulate->add_option("--threads", sim.threads, "Worker threads")->check(CLI::PositiveNumber);

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train a hedging policy");
    train_cmd->add_option("--config", tr.config, "Config JSON")->required();
    train_cmd->add_option("--tda", tr.tda, "Topological features: on|off");
    train_cmd->add_option("--batch", tr.batch, "Batch size");
    train_cmd->add_option("--steps", tr.steps, "Gradient steps");
    train_cmd->add_option("--out-model", tr.out_model, "Checkpoint JSON")->required();
    train_cmd->add_option("--log", tr.log, "Training log CSV")->required();
    train_cmd->add_option("--resume", tr.resume, "Training state JSON to continue from");
    train_cmd->add_option("--checkpoint-every", tr.checkpoint_every,
                          "Write checkpoint and state every N steps");
    train_cmd->add_option("--clip-norm", tr.clip_norm, "Global gradient norm clip (0 = off)");
    train_cmd->add_option("--threads", tr.threads, "Worker threads")->check(CLI::PositiveNumber);

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "Evaluate a policy on a path CSV");
    eval->add_option("--model", ev.model, "Checkpoint JSON")->required();
    eval->add_option("--paths", ev.paths, "Path CSV")->required();
    eval->add_option("--report", ev.report, "Report JSON")->required();
    eval->add_option("--per-path", ev.per_path, "Per-path CSV");
    eval->add_option("--hist", ev.hist, "Histogram CSV");
    eval->add_option("--config", ev.config, "Config JSON (cliquet, window, dt)");
    eval->add_option("--threads", ev.threads, "Worker threads")->check(CLI::PositiveNumber);

    PlotArgs pl;
    auto* plot = app.add_subcommand("plot", "Render a histogram or trade-size curve as SVG");
    plot->add_option("--hist", pl.hist, "Histogram CSV");
    plot->add_option("--log", pl.log, "Training log CSV");
    plot->add_option("--window", pl.window, "Rolling window for --log");
    plot->add_option("--out", pl.out, "Output SVG")->required();

    ReproArgs rp;
    auto* repro = app.add_subcommand("repro", "Train and compare the four model configurations");
    repro->add_option("--config", rp.config, "Config JSON")->required();
    repro->add_option("--out-dir", rp.out_dir, "Output directory")->required();
    repro->add_option("--batches", rp.batches, "Batch sizes")->delimiter(',');
    repro->add_option("--steps", rp.steps, "Gradient steps per model");
    repro->add_option("--test-paths", rp.test_paths, "Shared test paths");
    repro->add_option("--test-seed", rp.test_seed, "Test set seed");
    repro->add_option("--threads", rp.threads, "Worker threads")->check(CLI::PositiveNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n' << app.help();
        return kUsageError;
    }

    try {
        if (simulate->parsed()) cmd_simulate(sim, out);
        else if (train_cmd->parsed()) cmd_train(tr, out);
        else if (eval->parsed()) cmd_eval(ev, out);
        else if (plot->parsed()) cmd_plot(pl, out);
        else if (repro->parsed()) cmd_repro(rp, out, err);
        return kSuccess;
    } catch (const NumericError& e) {
        err << "numeric divergence: " << e.what() << '\n';
        return kNumericDivergence;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIoError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
}

}  // namespace deephedge::cli
