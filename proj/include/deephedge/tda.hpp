#pragma once

#include <array>
#include <span>
#include <vector>

namespace deephedge {

using Point3 = std::array<double, 3>;

/// 0-dimensional Vietoris-Rips diagram. Births are all zero, so only the
/// finite, strictly positive deaths are stored (ascending). The essential
/// class is omitted.
struct PersistenceDiagram {
    std::vector<double> deaths;
};

struct DiagramNorms {
    double l1 = 0.0;
    double l2 = 0.0;
};

/// Merge radii of connected components as the Rips scale grows, i.e. the
/// Euclidean MST edge weights. Zero-length merges (duplicate points) are dropped.
PersistenceDiagram rips_persistence_0d(std::span<const Point3> window);

DiagramNorms diagram_norms(const PersistenceDiagram& diagram);

struct TdaSeries {
    std::vector<double> l1;
    std::vector<double> l2;
};

struct TdaOptions {
    int window_size = 15;
    // Per-coordinate multipliers applied to (spot, variance, payout) before
    // distances are measured. Identity by default.
    Point3 coordinate_scale{1.0, 1.0, 1.0};
};

/// Norms of the diagram of points [t - window + 1, t] for every t; zero while
/// fewer than window_size points are available.
TdaSeries rolling_tda_features(std::span<const double> spot, std::span<const double> variance,
                               std::span<const double> payout, const TdaOptions& options = {});

}  // namespace deephedge
