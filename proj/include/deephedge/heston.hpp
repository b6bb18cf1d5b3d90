#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include <Eigen/Core>

#include "deephedge/rng.hpp"

namespace deephedge {

/// Heston coefficients. Drift is under the simulation (physical) measure.
struct HestonParams {
    double mu = 0.02;
    double v0 = 0.025;
    double kappa = 2.5;
    double theta = 0.02;
    double xi = 0.6;
    double rho = -0.5;
    double s0 = 1.0;

    /// Throws ParameterError when any field is outside its domain.
    void validate() const;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Simulated trajectories, one row per path and one column per step (n_steps + 1 columns).
///
/// `variance` holds the full-truncation state variable, which may dip below zero;
/// every use inside a square root or drift goes through max(v, 0).
struct PathSet {
    RowMatrix spot;
    RowMatrix variance;
    double dt = 0.0;
    std::uint64_t seed = 0;

    Eigen::Index n_paths() const { return spot.rows(); }
    Eigen::Index n_steps() const { return spot.cols() - 1; }
};

/// Log-Euler spot, full-truncation Euler variance. Path p draws from its own
/// stream seeded by (seed, p), so the result does not depend on `threads`.
PathSet simulate_paths(const HestonParams& params, Eigen::Index n_paths, Eigen::Index n_steps,
                       double dt, std::uint64_t seed, unsigned threads = 1);

/// CSV with header `path_id,step,spot,variance`; doubles use shortest round-trip form.
void write_paths_csv(const PathSet& paths, std::ostream& out);
void save_paths_csv(const PathSet& paths, const std::filesystem::path& file);

/// The CSV does not carry dt or seed; the caller supplies dt and seed is set to 0.
PathSet read_paths_csv(std::istream& in, double dt);
PathSet load_paths_csv(const std::filesystem::path& file, double dt);

}  // namespace deephedge
