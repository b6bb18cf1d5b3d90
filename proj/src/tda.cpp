#include "deephedge/tda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deephedge/errors.hpp"

namespace deephedge {

namespace {

struct Edge {
    double length;
    int a;
    int b;
};

class DisjointSets {
public:
    explicit DisjointSets(int n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }

private:
    std::vector<int> parent_;
    std::vector<int> rank_;
};

double distance(const Point3& p, const Point3& q) {
    const double dx = p[0] - q[0];
    const double dy = p[1] - q[1];
    const double dz = p[2] - q[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

PersistenceDiagram rips_persistence_0d(std::span<const Point3> window) {
    if (window.empty()) throw EmptyInputError("persistence of an empty window");
    const int n = static_cast<int>(window.size());
    // Rolling features call this once per step per path; reuse the edge buffer.
    thread_local std::vector<Edge> edges;
    edges.clear();
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = distance(window[i], window[j]);
            if (!std::isfinite(d)) throw NumericError("non-finite coordinate in persistence window");
            edges.push_back({d, i, j});
        }
    }
    std::sort(edges.begin(), edges.end(),
              [](const Edge& x, const Edge& y) { return x.length < y.length; });

    PersistenceDiagram diagram;
    diagram.deaths.reserve(n - 1);
    DisjointSets components(n);
    int merges = 0;
    for (const auto& e : edges) {
        if (merges == n - 1) break;
        if (!components.unite(e.a, e.b)) continue;
        ++merges;
        if (e.length > 0.0) diagram.deaths.push_back(e.length);
    }
    return diagram;
}

DiagramNorms diagram_norms(const PersistenceDiagram& diagram) {
    DiagramNorms norms;
    double squares = 0.0;
    for (double d : diagram.deaths) {
        norms.l1 += d;
        squares += d * d;
    }
    norms.l2 = std::sqrt(squares);
    return norms;
}

TdaSeries rolling_tda_features(std::span<const double> spot, std::span<const double> variance,
                               std::span<const double> payout, const TdaOptions& options) {
    if (spot.size() != variance.size() || spot.size() != payout.size())
        throw ShapeError("spot, variance and payout series must share one length");
    if (options.window_size < 2) throw ParameterError("TDA window size must be at least 2");

    const std::size_t n = spot.size();
    const auto window = static_cast<std::size_t>(options.window_size);
    const auto& scale = options.coordinate_scale;
    TdaSeries out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    std::vector<Point3> points(window);
    for (std::size_t t = window - 1; t < n; ++t) {
        for (std::size_t k = 0; k < window; ++k) {
            const std::size_t s = t + 1 - window + k;
            points[k] = {scale[0] * spot[s], scale[1] * variance[s], scale[2] * payout[s]};
        }
        const auto norms = diagram_norms(rips_persistence_0d(points));
        out.l1[t] = norms.l1;
        out.l2[t] = norms.l2;
    }
    return out;
}

}  // namespace deephedge
