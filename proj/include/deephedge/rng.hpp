#pragma once

#include <cstdint>
#include <random>
#include <utility>

namespace deephedge {

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed of stream `index` under `seed`. Pure function of its arguments.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(mix64(seed) ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

// Domain tags keep seeds for different purposes (init, training batches) apart.
enum class SeedDomain : std::uint64_t {
    PolicyInit = 0x1A17,
    TrainingBatch = 0x7BA7,
};

constexpr std::uint64_t domain_seed(std::uint64_t seed, SeedDomain domain) noexcept {
    return stream_seed(seed, static_cast<std::uint64_t>(domain) << 48);
}

class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double operator()() { return dist_(engine_); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_;
};

struct NormalPair {
    double spot;
    double variance;
};

// z_v = rho * z_s + sqrt(1 - rho^2) * z_perp. Throws ParameterError if |rho| > 1.
NormalPair correlated_normals(NormalStream& stream, double rho);

}  // namespace deephedge
