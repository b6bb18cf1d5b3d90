#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "deephedge/cli.hpp"
#include "deephedge/evaluator.hpp"
#include "deephedge/network.hpp"
#include "deephedge/trainer.hpp"

namespace fs = std::filesystem;
using namespace deephedge;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("deephedge_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        TrainConfig c;
        c.steps = 2;
        c.batch_size = 4;
        c.episode_steps = 60;
        std::ofstream(path("config.json")) << config_to_json(c).dump(2);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "deephedge");
        out_.str("");
        err_.str("");
        return cli::run(args, out_, err_);
    }

    static std::string slurp(const std::string& file) {
        std::ifstream in(file, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    static long line_count(const std::string& file) {
        const auto text = slurp(file);
        return std::count(text.begin(), text.end(), '\n');
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, SimulateIsByteIdenticalForOneSeed) {
    ASSERT_EQ(run({"simulate", "--config", path("config.json"), "--out", path("a.csv"), "--paths", "5", "--seed", "3"}), 0);
    ASSERT_EQ(run({"simulate", "--config", path("config.json"), "--out", path("b.csv"), "--paths", "5", "--seed", "3",
                   "--threads", "3"}),
              0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(line_count(path("a.csv")), 1 + 5 * 61);
    ASSERT_EQ(run({"simulate", "--config", path("config.json"), "--out", path("c.csv"), "--paths", "5", "--seed", "4"}), 0);
    EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
}

TEST_F(CliTest, SimulateRefusesToOverwrite) {
    const std::vector<std::string> args{"simulate", "--config", path("config.json"), "--out", path("a.csv"),
                                        "--paths", "2", "--seed", "1"};
    ASSERT_EQ(run(args), 0);
    EXPECT_EQ(run(args), cli::kIoError);
    auto forced = args;
    forced.push_back("--force");
    EXPECT_EQ(run(forced), 0);
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(run({"simulate", "--out", path("a.csv"), "--paths", "2", "--seed", "1"}), cli::kUsageError);
    EXPECT_EQ(run({}), cli::kUsageError);
    EXPECT_EQ(run({"fly"}), cli::kUsageError);
    EXPECT_EQ(run({"train", "--config", path("config.json"), "--batch", "1", "--out-model", path("m.json"), "--log",
                   path("log.csv")}),
              cli::kUsageError);
    EXPECT_EQ(run({"train", "--config", path("config.json"), "--tda", "maybe", "--out-model", path("m.json"), "--log",
                   path("log.csv")}),
              cli::kUsageError);
}

TEST_F(CliTest, MissingFilesAreIoErrors) {
    EXPECT_EQ(run({"simulate", "--config", path("nope.json"), "--out", path("a.csv"), "--paths", "2", "--seed", "1"}),
              cli::kIoError);
    EXPECT_EQ(run({"simulate", "--config", path("config.json"), "--out", path("no/such/dir/a.csv"), "--paths", "2",
                   "--seed", "1"}),
              cli::kIoError);
}

TEST_F(CliTest, TrainZeroStepsWritesInitialisation) {
    ASSERT_EQ(run({"train", "--config", path("config.json"), "--tda", "on", "--steps", "0", "--out-model",
                   path("m.json"), "--log", path("log.csv")}),
              0);
    const auto p = load_checkpoint(path("m.json"));
    EXPECT_EQ(p.feature_dim, 5);
    EXPECT_TRUE(p == init_params(5, 0));
    EXPECT_EQ(line_count(path("log.csv")), 1);
}

TEST_F(CliTest, TrainEvalPlotPipeline) {
    ASSERT_EQ(run({"train", "--config", path("config.json"), "--tda", "off", "--batch", "6", "--steps", "3",
                   "--out-model", path("m.json"), "--log", path("log.csv")}),
              0);
    EXPECT_EQ(load_checkpoint(path("m.json")).feature_dim, 3);
    EXPECT_EQ(line_count(path("log.csv")), 4);

    ASSERT_EQ(run({"simulate", "--config", path("config.json"), "--out", path("test.csv"), "--paths", "40", "--seed",
                   "9"}),
              0);
    const std::vector<std::string> eval{"eval",      "--model", path("m.json"), "--paths", path("test.csv"),
                                        "--config",  path("config.json"), "--report", path("r1.json"),
                                        "--per-path", path("pp.csv"), "--hist", path("h.csv")};
    ASSERT_EQ(run(eval), 0);
    auto again = eval;
    again[8] = path("r2.json");
    ASSERT_EQ(run(again), 0);
    EXPECT_EQ(slurp(path("r1.json")), slurp(path("r2.json")));
    EXPECT_EQ(line_count(path("pp.csv")), 41);

    ASSERT_EQ(run({"plot", "--hist", path("h.csv"), "--out", path("h.svg")}), 0);
    const auto svg = slurp(path("h.svg"));
    std::ifstream hin(path("h.csv"));
    const auto hist = read_histogram_csv(hin);
    const std::regex bar("class=\"bar\"");
    EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), bar), std::sregex_iterator()),
              static_cast<long>(hist.counts.size()));

    ASSERT_EQ(run({"plot", "--log", path("log.csv"), "--window", "2", "--out", path("c.svg")}), 0);
    const auto curve = slurp(path("c.svg"));
    std::smatch m;
    ASSERT_TRUE(std::regex_search(curve, m, std::regex("data-values=\"([^\"]*)\"")));
    std::ifstream lin(path("log.csv"));
    const auto log = read_train_log_csv(lin);
    std::vector<double> trade;
    for (const auto& row : log) trade.push_back(row.mean_abs_trade);
    const auto expected = rolling_mean(trade, 2);
    std::vector<double> drawn;
    std::stringstream values(m[1].str());
    for (double v; values >> v;) drawn.push_back(v);
    ASSERT_EQ(drawn.size(), expected.size());
    for (std::size_t i = 0; i < drawn.size(); ++i) EXPECT_DOUBLE_EQ(drawn[i], expected[i]);
}

TEST_F(CliTest, EvalRejectsMismatchedModel) {
    save_checkpoint(init_params(5, 1), path("m.json"));
    ASSERT_EQ(run({"simulate", "--config", path("config.json"), "--out", path("p.csv"), "--paths", "3", "--seed", "1"}),
              0);
    std::ofstream(path("bad.csv")) << "path_id,step,spot,variance\n0,0,1.0\n";
    EXPECT_NE(run({"eval", "--model", path("m.json"), "--paths", path("bad.csv"), "--report", path("r.json")}), 0);
}

TEST_F(CliTest, PlotOfEmptyInputIsUsageError) {
    std::ofstream(path("empty.csv")).close();
    EXPECT_EQ(run({"plot", "--hist", path("empty.csv"), "--out", path("x.svg")}), cli::kUsageError);
    std::ofstream(path("header.csv")) << "step,loss,mean_abs_trade\n";
    EXPECT_EQ(run({"plot", "--log", path("header.csv"), "--out", path("x.svg")}), cli::kUsageError);
    EXPECT_EQ(run({"plot", "--out", path("x.svg")}), cli::kUsageError);
}

TEST_F(CliTest, ResumeAppendsToTheLog) {
    const std::vector<std::string> base{"train", "--config", path("config.json"), "--tda", "off", "--out-model",
                                        path("m.json"), "--log", path("log.csv"), "--checkpoint-every", "1"};
    auto first = base;
    first.insert(first.end(), {"--steps", "2"});
    ASSERT_EQ(run(first), 0);
    auto second = base;
    second.insert(second.end(), {"--steps", "4", "--resume", path("m.json.state.json")});
    ASSERT_EQ(run(second), 0);
    std::ifstream in(path("log.csv"));
    const auto log = read_train_log_csv(in);
    ASSERT_EQ(log.size(), 4u);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(log[i].step, i + 1);
}

TEST_F(CliTest, LargeSimulationRowCount) {
    TrainConfig c;
    std::ofstream(path("full.json")) << config_to_json(c).dump();
    ASSERT_EQ(run({"simulate", "--config", path("full.json"), "--out", path("big.csv"), "--paths", "50000", "--seed",
                   "1", "--threads", "4"}),
              0);
    EXPECT_EQ(line_count(path("big.csv")), 1 + 50000L * 241);
}
