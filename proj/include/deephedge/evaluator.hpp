#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "deephedge/cliquet.hpp"
#include "deephedge/heston.hpp"
#include "deephedge/network.hpp"

namespace deephedge {

inline constexpr int kHistogramBins = 100;

struct Histogram {
    std::vector<double> edges;  // bins + 1 ascending edges
    std::vector<long> counts;
};

/// Uniform bins over [min, max] of the sample; the last bin is closed on the right.
Histogram make_histogram(std::span<const double> values, int bins = kHistogramBins);

/// Out-of-sample statistics of the hedging error Omega(T) - psi(x, T).
struct EvalReport {
    long n_paths = 0;
    double pnl_mean = 0.0;
    double pnl_std = 0.0;  // population
    double pnl_min = 0.0;
    double pnl_max = 0.0;
    Histogram histogram;
    double mean_abs_trade = 0.0;
    double turnover = 0.0;

    // Per-path detail, written to the per-path CSV.
    std::vector<double> pnl;
    std::vector<double> liability;
    std::vector<double> error;
};

struct EvalOptions {
    bool use_tda = true;
    int window_size = 15;
    unsigned threads = 1;
};

EvalReport evaluate(const PolicyParams& params, const PathSet& paths, const CliquetSpec& spec,
                    const EvalOptions& options);

/// Element t is the mean of the last min(t + 1, window) values.
std::vector<double> rolling_mean(std::span<const double> series, int window);

struct ComparisonRow {
    std::string label;
    double pnl_std = 0.0;
    double pnl_min = 0.0;
    double mean_abs_trade = 0.0;
};

/// Rows sorted by ascending pnl_std (stable for ties). Needs at least two reports.
std::vector<ComparisonRow> compare_models(std::span<const EvalReport> reports,
                                          std::span<const std::string> labels);

void write_comparison_table(std::span<const ComparisonRow> rows, std::ostream& out);

/// Summary fields plus histogram; per-path vectors are left to the CSV.
nlohmann::json report_to_json(const EvalReport& report);
void write_per_path_csv(const EvalReport& report, std::ostream& out);
void write_histogram_csv(const Histogram& histogram, std::ostream& out);
Histogram read_histogram_csv(std::istream& in);

}  // namespace deephedge
