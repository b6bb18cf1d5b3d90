#pragma once

#include <span>
#include <vector>

namespace deephedge {

/// Capped cumulative cliquet. Each completed period contributes
/// min(x_end / x_start - 1, cap); the running sum is floored at zero.
struct CliquetSpec {
    double cap = 0.035;
    int period = 20;
    bool floor_at_zero = true;

    void validate() const;
    /// Also checks that `period` divides `episode_steps`.
    void validate_for(long episode_steps) const;
};

/// Payout at step t counting only periods completed by t.
double cliquet_payout(std::span<const double> spot_path, long t, const CliquetSpec& spec);

/// Running payout for t = 0 .. spot_path.size() - 1.
std::vector<double> payout_series(std::span<const double> spot_path, const CliquetSpec& spec);

}  // namespace deephedge
