#include "deephedge/cliquet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deephedge/errors.hpp"

namespace deephedge {

void CliquetSpec::validate() const {
    if (!(cap > 0.0) || !std::isfinite(cap)) throw ParameterError("cliquet cap must be positive");
    if (period < 1) throw ParameterError("cliquet period must be at least 1");
}

void CliquetSpec::validate_for(long episode_steps) const {
    validate();
    if (episode_steps % period != 0)
        throw ParameterError("cliquet period " + std::to_string(period) +
                             " does not divide episode length " + std::to_string(episode_steps));
}

namespace {

double period_return(std::span<const double> x, long end, const CliquetSpec& spec) {
    return std::min(x[end] / x[end - spec.period] - 1.0, spec.cap);
}

// Neumaier-compensated running sum of capped period returns.
class PeriodSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        compensation_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

double floored(double sum, const CliquetSpec& spec) {
    return spec.floor_at_zero ? std::max(sum, 0.0) : sum;
}

}  // namespace

double cliquet_payout(std::span<const double> spot_path, long t, const CliquetSpec& spec) {
    spec.validate();
    if (t < 0 || t >= static_cast<long>(spot_path.size()))
        throw IndexError("step " + std::to_string(t) + " outside path of length " +
                         std::to_string(spot_path.size()));
    PeriodSum sum;
    for (long i = spec.period; i <= t; i += spec.period) sum.add(period_return(spot_path, i, spec));
    return floored(sum.value(), spec);
}

std::vector<double> payout_series(std::span<const double> spot_path, const CliquetSpec& spec) {
    spec.validate();
    std::vector<double> out(spot_path.size(), 0.0);
    PeriodSum sum;
    double current = floored(0.0, spec);
    for (long t = 0; t < static_cast<long>(spot_path.size()); ++t) {
        if (t > 0 && t % spec.period == 0) {
            sum.add(period_return(spot_path, t, spec));
            current = floored(sum.value(), spec);
        }
        out[t] = current;
    }
    return out;
}

}  // namespace deephedge
