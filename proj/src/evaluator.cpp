#include "deephedge/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>

#include "deephedge/errors.hpp"
#include "deephedge/trainer.hpp"
#include "text.hpp"

namespace deephedge {

Histogram make_histogram(std::span<const double> values, int bins) {
    if (bins < 1) throw ParameterError("histogram needs at least one bin");
    if (values.empty()) throw EmptyInputError("histogram of an empty sample");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    Histogram h;
    h.edges.resize(bins + 1);
    h.counts.assign(bins, 0);
    const double width = (hi - lo) / bins;
    for (int i = 0; i <= bins; ++i) h.edges[i] = lo + width * i;
    h.edges.back() = hi;
    for (double v : values) {
        int bin = width > 0.0 ? static_cast<int>((v - lo) / width) : 0;
        bin = std::clamp(bin, 0, bins - 1);
        // Keep each value inside [edges[bin], edges[bin + 1]) despite rounding in the division.
        while (bin > 0 && v < h.edges[bin]) --bin;
        while (bin < bins - 1 && v >= h.edges[bin + 1]) ++bin;
        ++h.counts[bin];
    }
    return h;
}

EvalReport evaluate(const PolicyParams& params, const PathSet& paths, const CliquetSpec& spec,
                    const EvalOptions& options) {
    RolloutOptions ro;
    ro.use_tda = options.use_tda;
    ro.window_size = options.window_size;
    ro.threads = options.threads;
    Rollout result = rollout(params, paths, spec, ro);

    EvalReport r;
    r.n_paths = static_cast<long>(result.outcome.error.size());
    const auto& err = result.outcome.error;
    r.pnl_mean = std::accumulate(err.begin(), err.end(), 0.0) / static_cast<double>(r.n_paths);
    double sq = 0.0;
    for (double e : err) sq += (e - r.pnl_mean) * (e - r.pnl_mean);
    r.pnl_std = std::sqrt(sq / static_cast<double>(r.n_paths));
    const auto [lo, hi] = std::minmax_element(err.begin(), err.end());
    r.pnl_min = *lo;
    r.pnl_max = *hi;
    // Guard the ordering invariant against rounding of the mean.
    r.pnl_mean = std::clamp(r.pnl_mean, r.pnl_min, r.pnl_max);
    r.histogram = make_histogram(err);
    r.mean_abs_trade = result.mean_abs_trade;
    r.turnover = result.turnover;
    r.pnl = std::move(result.outcome.pnl);
    r.liability = std::move(result.outcome.liability);
    r.error = std::move(result.outcome.error);
    return r;
}

std::vector<double> rolling_mean(std::span<const double> series, int window) {
    if (window < 1) throw ParameterError("rolling window must be at least 1");
    std::vector<double> out(series.size());
    const auto w = static_cast<std::size_t>(window);
    for (std::size_t t = 0; t < series.size(); ++t) {
        const std::size_t first = t + 1 >= w ? t + 1 - w : 0;
        double sum = 0.0;
        for (std::size_t k = first; k <= t; ++k) sum += series[k];
        out[t] = sum / static_cast<double>(t + 1 - first);
    }
    return out;
}

std::vector<ComparisonRow> compare_models(std::span<const EvalReport> reports,
                                          std::span<const std::string> labels) {
    if (reports.size() < 2) throw ParameterError("comparison needs at least two reports");
    if (labels.size() != reports.size()) throw ShapeError("one label per report is required");
    std::vector<ComparisonRow> rows;
    for (std::size_t i = 0; i < reports.size(); ++i)
        rows.push_back({labels[i], reports[i].pnl_std, reports[i].pnl_min, reports[i].mean_abs_trade});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.pnl_std < b.pnl_std; });
    return rows;
}

void write_comparison_table(std::span<const ComparisonRow> rows, std::ostream& out) {
    std::size_t label_width = 5;
    for (const auto& r : rows) label_width = std::max(label_width, r.label.size());
    const auto flags = out.flags();
    out << std::left << std::setw(static_cast<int>(label_width)) << "model" << "  " << std::right
        << std::setw(12) << "pnl_std" << std::setw(12) << "pnl_min" << std::setw(16)
        << "mean_abs_trade" << '\n';
    out << std::scientific << std::setprecision(4);
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(label_width)) << r.label << "  "
            << std::right << std::setw(12) << r.pnl_std << std::setw(12) << r.pnl_min
            << std::setw(16) << r.mean_abs_trade << '\n';
    }
    out.flags(flags);
}

nlohmann::json report_to_json(const EvalReport& r) {
    return {{"n_paths", r.n_paths},
            {"pnl_mean", r.pnl_mean},
            {"pnl_std", r.pnl_std},
            {"pnl_min", r.pnl_min},
            {"pnl_max", r.pnl_max},
            {"histogram", {{"edges", r.histogram.edges}, {"counts", r.histogram.counts}}},
            {"mean_abs_trade", r.mean_abs_trade},
            {"turnover", r.turnover}};
}

void write_per_path_csv(const EvalReport& r, std::ostream& out) {
    out << "path_id,pnl,liability,error\n";
    for (std::size_t p = 0; p < r.error.size(); ++p) {
        out << p << ',' << text::format_double(r.pnl[p]) << ','
            << text::format_double(r.liability[p]) << ',' << text::format_double(r.error[p])
            << '\n';
    }
    if (!out) throw IoError("failed writing per-path CSV");
}

void write_histogram_csv(const Histogram& h, std::ostream& out) {
    out << "bin_left,bin_right,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        out << text::format_double(h.edges[i]) << ',' << text::format_double(h.edges[i + 1]) << ','
            << h.counts[i] << '\n';
    }
    if (!out) throw IoError("failed writing histogram CSV");
}

Histogram read_histogram_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw EmptyInputError("histogram CSV is empty");
    text::strip_cr(line);
    if (line != "bin_left,bin_right,count") throw IoError("unexpected histogram header: " + line);
    Histogram h;
    while (std::getline(in, line)) {
        text::strip_cr(line);
        if (line.empty()) continue;
        const auto f = text::split(line, ',');
        if (f.size() != 3) throw IoError("histogram rows need 3 fields: " + line);
        const double left = text::parse<double>(f[0]);
        const double right = text::parse<double>(f[1]);
        if (h.edges.empty()) h.edges.push_back(left);
        else if (left != h.edges.back()) throw IoError("histogram bins are not contiguous");
        if (right < left) throw IoError("histogram bin has right edge below left edge");
        h.edges.push_back(right);
        h.counts.push_back(text::parse<long>(f[2]));
        if (h.counts.back() < 0) throw IoError("negative histogram count");
    }
    if (h.counts.empty()) throw EmptyInputError("histogram CSV has no bins");
    return h;
}

}  // namespace deephedge
