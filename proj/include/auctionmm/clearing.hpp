#pragma once

// Auction clearing: find the price at which aggregate excess supply --
// exogenous maker curves + the agent's live orders + net market-order volume
// -- crosses zero. Three routes, cheapest first:
//   * all curves linear            -> closed form
//   * otherwise, no live agent slope -> bisection on the monotone aggregate
//   * otherwise                     -> damped-free fixed point, with a
//                                      bisection fallback when it cannot
//                                      certify a contraction.
// The same header carries the continuous-phase estimator that rebuilds a
// fictitious auction from the standing book each step and smooths the
// resulting price.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "auctionmm/common.hpp"
#include "auctionmm/core.hpp"

namespace auctionmm {

struct ClearingProblem {
    std::vector<SupplyCurve> exo_curves;
    AuctionAgentHistory agent{0};
    double net_market_volume = 0.0;  // sell market orders minus buy market orders

    double aggregate(double price) const {
        double total = net_market_volume;
        for (const auto& c : exo_curves) total += eval_supply(c, price);
        total += agent.supply_at(price);
        return total;
    }

    bool all_two_sided() const {
        for (const auto& c : exo_curves)
            if (c.clamp != Clamp::two_sided) return false;
        for (std::size_t s = 0; s < agent.placed; ++s)
            if (!agent.ledger.theta[s] && agent.clamps[s] != Clamp::two_sided) return false;
        return true;
    }

    double total_linear_slope() const {
        double total = agent.live_linear_slope();
        for (const auto& c : exo_curves)
            if (c.clamp == Clamp::two_sided) total += c.slope;
        return total;
    }
};

enum class ClearingMethod : std::uint8_t { closed_form, monotone_root, fixed_point, held };

inline const char* to_string(ClearingMethod m) {
    switch (m) {
        case ClearingMethod::closed_form: return "closed_form";
        case ClearingMethod::monotone_root: return "monotone_root";
        case ClearingMethod::fixed_point: return "fixed_point";
        case ClearingMethod::held: return "held";
    }
    return "?";
}

struct ClearingSolution {
    double price = 0.0;
    double residual = 0.0;  // aggregate excess supply at `price`, in shares
    int iterations = 0;
    ClearingMethod method = ClearingMethod::closed_form;
};

// Closed form for an all-linear book: the clearing price is the slope-weighted
// mean of the reference prices, shifted by the net market-order volume.
inline ClearingSolution solve_linear(const ClearingProblem& problem) {
    if (!problem.all_two_sided())
        throw SolverError("solve_linear: book contains a one-sided curve");
    double slope_sum = 0.0;
    double weighted_refs = 0.0;
    for (const auto& c : problem.exo_curves) {
        slope_sum += c.slope;
        weighted_refs += c.slope * c.ref_price;
    }
    const auto& agent = problem.agent;
    for (std::size_t s = 0; s < agent.placed; ++s) {
        if (agent.ledger.theta[s]) continue;
        slope_sum += agent.slopes[s];
        weighted_refs += agent.slopes[s] * agent.ref_prices[s];
    }
    if (!(slope_sum > 0.0))
        throw SolverError("solve_linear: degenerate book, total slope is zero");
    const double price = (weighted_refs - problem.net_market_volume) / slope_sum;
    return ClearingSolution{price, problem.aggregate(price), 1, ClearingMethod::closed_form};
}

// Bisection on a nondecreasing aggregate. The bracket starts at [lo, hi] and
// the upper end is doubled (up to 8 times) while it still shows no sign
// change; a missing crossing is an error. After bisection a couple of secant
// polish steps sharpen the root -- exact for the piecewise-linear aggregates
// this system produces -- as long as they keep improving the residual.
inline ClearingSolution solve_monotone_root(const std::function<double(double)>& aggregate,
                                            double lo,
                                            double hi,
                                            double tol_shares = 1e-9,
                                            double width_floor = 0.01 / 65536.0) {
    if (!(hi > lo)) throw SolverError("solve_monotone_root: empty bracket");
    double flo = aggregate(lo);
    double fhi = aggregate(hi);
    int iterations = 0;
    for (int expand = 0; flo * fhi > 0.0 && expand < 8; ++expand) {
        hi = lo + (hi - lo) * 2.0;
        fhi = aggregate(hi);
        ++iterations;
    }
    if (flo > 0.0 || fhi < 0.0)
        throw SolverError("solve_monotone_root: no sign change over the expanded bracket");

    double mid = lo;
    double fmid = flo;
    while (hi - lo > width_floor) {
        mid = 0.5 * (lo + hi);
        fmid = aggregate(mid);
        ++iterations;
        if (std::abs(fmid) <= tol_shares) break;
        if (fmid < 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
            fhi = fmid;
        }
    }

    double best = mid;
    double best_f = fmid;
    if (std::abs(flo) < std::abs(best_f)) best = lo, best_f = flo;
    if (std::abs(fhi) < std::abs(best_f)) best = hi, best_f = fhi;

    // Secant polish within the final bracket.
    double a = lo, fa = flo, b = hi, fb = fhi;
    for (int k = 0; k < 3 && std::abs(best_f) > 0.0; ++k) {
        const double denom = fb - fa;
        if (denom == 0.0) break;
        const double cand = a - fa * (b - a) / denom;
        if (!(cand >= a && cand <= b)) break;
        const double fc = aggregate(cand);
        ++iterations;
        if (std::abs(fc) >= std::abs(best_f)) break;
        best = cand;
        best_f = fc;
        if (fc < 0.0) a = cand, fa = fc;
        else b = cand, fb = fc;
    }
    return ClearingSolution{best, best_f, iterations, ClearingMethod::monotone_root};
}

// Upper bound on the contraction factor of the fixed-point map: the worst
// exogenous curve steepness times (number of curves / live agent slope).
// Values below one certify geometric convergence.
inline double contraction_margin(const ClearingProblem& problem,
                                 std::optional<double> lipschitz = std::nullopt) {
    const double agent_slope = problem.agent.live_linear_slope();
    if (!(agent_slope > 0.0))
        throw SolverError("contraction_margin: agent has no live linear slope");
    double L = 0.0;
    if (lipschitz) {
        L = *lipschitz;
    } else {
        for (const auto& c : problem.exo_curves) L = std::max(L, std::abs(c.slope));
        for (std::size_t s = 0; s < problem.agent.placed; ++s)
            if (!problem.agent.ledger.theta[s] && problem.agent.clamps[s] != Clamp::two_sided)
                L = std::max(L, std::abs(problem.agent.slopes[s]));
    }
    const double lambda = static_cast<double>(problem.exo_curves.size()) / agent_slope;
    return L * lambda;
}

// Fixed-point iteration p <- f(p), where f isolates the price from the live
// agent slope and evaluates the rest of the book at the previous iterate.
// `last_ratio` records the final observed per-step contraction.
struct FixedPointSolution : ClearingSolution {
    double last_ratio = 0.0;
};

inline FixedPointSolution solve_fixed_point(const ClearingProblem& problem,
                                            double initial_price,
                                            double tol = 1e-9,
                                            int max_iter = 10000) {
    const auto& agent = problem.agent;
    const double agent_slope = agent.live_linear_slope();
    if (!(agent_slope > 0.0))
        throw SolverError("solve_fixed_point: agent has no live linear slope");

    double agent_weighted_refs = 0.0;
    for (std::size_t s = 0; s < agent.placed; ++s)
        if (!agent.ledger.theta[s] && agent.clamps[s] == Clamp::two_sided)
            agent_weighted_refs += agent.slopes[s] * agent.ref_prices[s];

    auto rest = [&](double p) {
        double total = problem.net_market_volume;
        for (const auto& c : problem.exo_curves) total += eval_supply(c, p);
        for (std::size_t s = 0; s < agent.placed; ++s)
            if (!agent.ledger.theta[s] && agent.clamps[s] != Clamp::two_sided)
                total += eval_supply(agent.order(s), p);
        return total;
    };

    FixedPointSolution out;
    out.method = ClearingMethod::fixed_point;
    double p = initial_price;
    double prev_delta = 0.0;
    for (int k = 1; k <= max_iter; ++k) {
        const double next = (agent_weighted_refs - rest(p)) / agent_slope;
        const double delta = std::abs(next - p);
        if (k > 1 && prev_delta > 0.0) out.last_ratio = delta / prev_delta;
        prev_delta = delta;
        p = next;
        out.iterations = k;
        if (delta <= tol) {
            out.price = p;
            out.residual = problem.aggregate(p);
            return out;
        }
    }
    throw SolverError("solve_fixed_point: no convergence within the iteration budget");
}

// -------------------------------------------------------------------------
// Continuous-phase estimator
// -------------------------------------------------------------------------

// Per-level running statistics over the standing books seen so far. From the
// mean and mean-square of each level's resting volume the estimator backs out
// a linear supply slope per level, prices the fictitious auction in closed
// form and smooths the result.
struct ClearingStats {
    double smoothing = 0.95;       // weight of the newest price in the update
    double current = 100.0;        // smoothed fictitious clearing price
    std::int64_t step_count = 0;
    std::map<Tick, double> volume_sums;
    std::map<Tick, double> square_sums;

    ClearingStats() = default;
    ClearingStats(double smoothing_weight, double initial_price)
        : smoothing(smoothing_weight), current(initial_price) {
        if (!(smoothing_weight > 0.0 && smoothing_weight <= 1.0))
            throw ConfigError("ClearingStats: smoothing weight must lie in (0, 1]");
    }

    double mean_volume(Tick level) const {
        auto it = volume_sums.find(level);
        if (it == volume_sums.end() || step_count == 0) return 0.0;
        return it->second / static_cast<double>(step_count);
    }

    double mean_square(Tick level) const {
        auto it = square_sums.find(level);
        if (it == square_sums.end() || step_count == 0) return 0.0;
        return it->second / static_cast<double>(step_count);
    }
};

struct StandingOrder {
    Tick level = 0;
    double volume = 0.0;
};

struct HypotheticalPrice {
    double smoothed = 0.0;  // estimate after smoothing
    double raw = 0.0;       // this step's fictitious clearing price
    bool held = false;      // true when the book gave nothing to price
};

// One estimator step: fold the standing book into the running statistics,
// calibrate per-level slopes, clear the fictitious auction and smooth.
// Levels whose statistics imply a non-positive slope are dropped; if nothing
// usable remains the previous estimate is held.
inline HypotheticalPrice hypothetical_step(ClearingStats& stats,
                                           std::span<const StandingOrder> standing,
                                           const TickGrid& grid) {
    stats.step_count += 1;

    // Total volume per level for this step (several orders may share a level).
    std::map<Tick, double> level_volume;
    for (const auto& o : standing) {
        if (o.volume < 0.0) throw std::invalid_argument("hypothetical_step: negative standing volume");
        if (o.volume == 0.0) continue;
        level_volume[o.level] += o.volume;
    }
    for (const auto& [level, volume] : level_volume) {
        stats.volume_sums[level] += volume;
        stats.square_sums[level] += volume * volume;
    }

    double slope_sum = 0.0;
    double weighted = 0.0;
    const double n = static_cast<double>(stats.step_count);
    for (const auto& [level, _] : level_volume) {
        const double mean = stats.volume_sums[level] / n;
        const double mean_sq = stats.square_sums[level] / n;
        if (!(mean > 0.0)) continue;
        const double slope = (2.0 * mean - mean_sq / mean) / grid.alpha;
        if (slope <= 0.0) continue;  // too dispersed to read as a supply slope
        slope_sum += slope;
        weighted += slope * grid.tick_to_price(level);
    }

    HypotheticalPrice out;
    if (!(slope_sum > 0.0)) {
        out.smoothed = stats.current;
        out.raw = stats.current;
        out.held = true;
        return out;
    }
    out.raw = weighted / slope_sum;
    stats.current += stats.smoothing * (out.raw - stats.current);
    out.smoothed = stats.current;
    return out;
}

// -------------------------------------------------------------------------
// Auction-phase estimator
// -------------------------------------------------------------------------

struct EstimateSettings {
    double tol_shares = 1e-9;
    double fixed_point_tol = 1e-9;
    int max_iter = 10000;
    double bisect_width_floor = 0.01 / 65536.0;
};

// Prices the auction book as it stands. Routing: closed form when everything
// is linear, bisection when the agent carries no live linear slope, fixed
// point otherwise (falling back to bisection when the contraction cannot be
// certified or the iteration stalls). A book that offers no way to cross --
// no slope at all, or no root at a nonnegative price -- keeps the previous
// estimate and reports `held`.
inline ClearingSolution estimate_clearing(const ClearingProblem& problem,
                                          double previous_estimate,
                                          const TickGrid& grid,
                                          const EstimateSettings& settings = {}) {
    auto held = [&]() {
        return ClearingSolution{previous_estimate, problem.aggregate(previous_estimate), 0,
                                ClearingMethod::held};
    };

    const bool linear = problem.all_two_sided();
    const double linear_slope = problem.total_linear_slope();
    const double agent_slope = problem.agent.live_linear_slope();

    if (linear) {
        if (!(linear_slope > 0.0)) return held();
        ClearingSolution sol = solve_linear(problem);
        if (sol.price < 0.0 || sol.price > grid.max_price()) return held();
        return sol;
    }

    auto aggregate = [&](double p) { return problem.aggregate(p); };
    auto bisect = [&]() -> ClearingSolution {
        try {
            ClearingSolution sol = solve_monotone_root(aggregate, 0.0, grid.max_price(),
                                                       settings.tol_shares,
                                                       settings.bisect_width_floor);
            if (sol.price < 0.0 || sol.price > grid.max_price() * 256.0) return held();
            return sol;
        } catch (const SolverError&) {
            return held();
        }
    };

    if (!(agent_slope > 0.0)) return bisect();

    const double margin = contraction_margin(problem);
    if (margin < 1.0) {
        try {
            return solve_fixed_point(problem, previous_estimate, settings.fixed_point_tol,
                                     settings.max_iter);
        } catch (const SolverError&) {
            return bisect();
        }
    }
    return bisect();
}

}  // namespace auctionmm
