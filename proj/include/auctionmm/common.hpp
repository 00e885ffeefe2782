#pragma once

// Shared vocabulary for the session simulator: tick arithmetic, phase tags,
// error types and a couple of numeric helpers everything else builds on.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace auctionmm {

using Shares = std::int64_t;
using Tick = std::int64_t;
using Currency = double;

// A trading session runs a continuous limit-order-book phase first and a
// closing auction afterwards; `cleared` marks the post-clearing terminal step.
enum class Phase : std::uint8_t { continuous, auction, cleared };

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::continuous: return "continuous";
        case Phase::auction: return "auction";
        case Phase::cleared: return "cleared";
    }
    return "?";
}

// Supply curves are linear in price around a reference; the one-sided clamp
// keeps the curve at zero below its reference (used by the benchmark's
// dump-the-rest auction order, which only ever sells).
enum class Clamp : std::uint8_t { two_sided, sell_only };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InadmissibleAction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Volumes round half away from zero so that .5 boundaries never bias the
// generated order sizes toward zero.
inline std::int64_t round_half_away(double x) {
    return static_cast<std::int64_t>(x < 0.0 ? std::ceil(x - 0.5) : std::floor(x + 0.5));
}

// Price discretisation plus the hard bounds every generated quantity must
// respect. alpha is the tick size; slopes offered in the auction live on a
// coarser grid {0, beta, ..., beta * max_slope_steps}.
struct TickGrid {
    double alpha = 0.01;
    double beta = 3.33;
    Tick max_price_ticks = 1'000'000;  // prices live in alpha * [0, max_price_ticks]
    std::int64_t max_slope_steps = 10;
    Shares max_volume = 1000;     // bound on any single volume the system handles
    std::int64_t max_depth = 10;  // book levels kept per side
    std::int64_t max_participants = 64;

    void validate() const {
        if (!(alpha > 0.0)) throw ConfigError("TickGrid: alpha must be positive");
        if (!(beta > 0.0)) throw ConfigError("TickGrid: beta must be positive");
        if (max_price_ticks <= 0) throw ConfigError("TickGrid: max_price_ticks must be positive");
        if (max_slope_steps <= 0) throw ConfigError("TickGrid: max_slope_steps must be positive");
        if (max_volume <= 0) throw ConfigError("TickGrid: max_volume must be positive");
        if (max_depth <= 0) throw ConfigError("TickGrid: max_depth must be positive");
        if (max_participants <= 0) throw ConfigError("TickGrid: max_participants must be positive");
    }

    double max_price() const { return alpha * static_cast<double>(max_price_ticks); }

    Tick price_to_tick(double price) const { return round_half_away(price / alpha); }

    double tick_to_price(Tick k) const { return alpha * static_cast<double>(k); }

    // Nearest on-grid price, clamped into [0, max_price].
    double snap_price(double price) const {
        Tick k = price_to_tick(price);
        if (k < 0) k = 0;
        if (k > max_price_ticks) k = max_price_ticks;
        return tick_to_price(k);
    }

    bool tick_in_range(Tick k) const { return k >= 0 && k <= max_price_ticks; }
};

// Deterministic sub-stream derivation: every consumer (price path, order
// flow, exploration, shuffling, ...) gets its own generator derived from the
// root seed, so adding a consumer never perturbs the draws of another.
// splitmix64 is the usual way to spread structured seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (2 * stream + 1) + 0xbf58476d1ce4e5b9ULL * index;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return std::mt19937_64(mix_seed(seed, stream, index));
}

}  // namespace auctionmm
