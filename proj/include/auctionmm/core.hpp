#pragma once

// Order-book and auction-side value types: supply curves, book ladders,
// the agent's auction order history and its cancellation ledger, plus the
// execution rule for the agent's standing limit order in the continuous phase.

#include <cstdint>
#include <span>
#include <vector>

#include "auctionmm/common.hpp"

namespace auctionmm {

// Linear supply around ref_price. Positive values are shares offered for
// sale at price p, negative values are shares demanded.
struct SupplyCurve {
    double slope = 0.0;         // shares per unit of currency
    double ref_price = 0.0;     // price at which the curve crosses zero
    Clamp clamp = Clamp::two_sided;
};

inline double eval_supply(const SupplyCurve& c, double price) {
    const double raw = c.slope * (price - c.ref_price);
    if (c.clamp == Clamp::sell_only && raw < 0.0) return 0.0;
    return raw;
}

// One side of the visible book, stored dense from the touch outwards.
// volumes[0] is the first level away from the mid; entries past the first
// empty level are zero by construction.
struct LobLadder {
    std::vector<Shares> volumes;

    // Volume at 1-based level j, zero beyond the stored range.
    Shares level(std::int64_t j) const {
        if (j < 1 || j > static_cast<std::int64_t>(volumes.size())) return 0;
        return volumes[static_cast<std::size_t>(j - 1)];
    }

    // First level with no resting volume.
    std::int64_t depth() const {
        for (std::size_t i = 0; i < volumes.size(); ++i)
            if (volumes[i] == 0) return static_cast<std::int64_t>(i + 1);
        return static_cast<std::int64_t>(volumes.size() + 1);
    }

    Shares total() const {
        Shares s = 0;
        for (Shares v : volumes) s += v;
        return s;
    }
};

// Shares executed on the agent's sell order during one continuous-phase step.
// Incoming buy flow first consumes the `levels_ahead` book levels queued in
// front of the agent; the agent has priority at her own level, so only
// strictly better-priced book volume blocks her.
inline Shares executed_shares(Shares posted_volume,
                              std::int64_t levels_ahead,
                              Shares incoming_buy_volume,
                              const LobLadder& ask_ladder,
                              const TickGrid& grid) {
    if (posted_volume < 0) throw std::invalid_argument("executed_shares: negative posted volume");
    if (incoming_buy_volume < 0) throw std::invalid_argument("executed_shares: negative incoming volume");
    if (levels_ahead < 0) throw std::invalid_argument("executed_shares: negative level offset");
    if (levels_ahead > grid.max_depth)
        throw std::invalid_argument("executed_shares: level offset beyond book depth bound");

    Shares blocking = 0;
    const auto n = static_cast<std::int64_t>(ask_ladder.volumes.size());
    for (std::int64_t j = 0; j < levels_ahead && j < n; ++j)
        blocking += ask_ladder.volumes[static_cast<std::size_t>(j)];

    const Shares through = incoming_buy_volume - blocking;
    if (through <= 0) return 0;
    return through < posted_volume ? through : posted_volume;
}

// Which of the agent's past auction orders have been cancelled. One bit per
// auction trading step; bits only ever flip 0 -> 1.
struct CancellationLedger {
    std::vector<std::uint8_t> theta;
    double unit_cost = 0.1;  // fee charged per cancelled order

    explicit CancellationLedger(std::size_t slots = 0, double cost = 0.1)
        : theta(slots, 0), unit_cost(cost) {}

    std::int64_t live_count(std::size_t past) const {
        std::int64_t n = 0;
        for (std::size_t s = 0; s < past && s < theta.size(); ++s)
            if (!theta[s]) ++n;
        return n;
    }

    std::int64_t total_cancelled() const {
        std::int64_t n = 0;
        for (auto b : theta) n += b;
        return n;
    }
};

struct CancelResult {
    CancellationLedger ledger;
    std::int64_t count = 0;  // number of orders cancelled by this request
};

// Applies a cancellation request on top of the ledger. `past_slots` is the
// number of auction orders already placed; requests may only touch those.
inline CancelResult apply_cancellations(const CancellationLedger& ledger,
                                        std::span<const std::uint8_t> request,
                                        std::size_t past_slots) {
    if (request.size() != ledger.theta.size())
        throw InadmissibleAction("apply_cancellations: request length does not match ledger");
    CancelResult out{ledger, 0};
    for (std::size_t s = 0; s < request.size(); ++s) {
        if (!request[s]) continue;
        if (request[s] != 1)
            throw InadmissibleAction("apply_cancellations: request bits must be 0 or 1");
        if (s >= past_slots)
            throw InadmissibleAction("apply_cancellations: cannot cancel the current or a future order");
        if (ledger.theta[s])
            throw InadmissibleAction("apply_cancellations: order already cancelled");
        out.ledger.theta[s] = 1;
        ++out.count;
    }
    return out;
}

// Everything the agent has submitted to the auction so far. Slots are fixed
// ahead of time (one per auction trading step plus a spare zero tail entry);
// `placed` counts the slots filled so far.
struct AuctionAgentHistory {
    std::vector<double> slopes;
    std::vector<double> ref_prices;
    std::vector<Clamp> clamps;
    CancellationLedger ledger;
    std::size_t placed = 0;

    explicit AuctionAgentHistory(std::size_t trading_steps = 0, double cancel_cost = 0.1)
        : slopes(trading_steps + (trading_steps ? 1 : 0), 0.0),
          ref_prices(trading_steps + (trading_steps ? 1 : 0), 0.0),
          clamps(trading_steps + (trading_steps ? 1 : 0), Clamp::two_sided),
          ledger(trading_steps, cancel_cost) {}

    std::size_t trading_steps() const { return ledger.theta.size(); }

    bool live(std::size_t s) const { return s < placed && !ledger.theta[s]; }

    SupplyCurve order(std::size_t s) const { return SupplyCurve{slopes[s], ref_prices[s], clamps[s]}; }

    void place(double slope, double ref_price, Clamp clamp = Clamp::two_sided) {
        if (placed >= trading_steps())
            throw InadmissibleAction("AuctionAgentHistory: no auction trading step left");
        slopes[placed] = slope;
        ref_prices[placed] = ref_price;
        clamps[placed] = clamp;
        ++placed;
    }

    // Aggregate supply the live orders contribute at a candidate price.
    double supply_at(double price) const {
        double total = 0.0;
        for (std::size_t s = 0; s < placed; ++s)
            if (!ledger.theta[s]) total += eval_supply(order(s), price);
        return total;
    }

    // Sum of live two-sided slopes; the contraction argument for the
    // fixed-point solver divides by this.
    double live_linear_slope() const {
        double total = 0.0;
        for (std::size_t s = 0; s < placed; ++s)
            if (!ledger.theta[s] && clamps[s] == Clamp::two_sided) total += slopes[s];
        return total;
    }

    // Checks that a slot obeys the offered-slope grid; the learned policies
    // only ever emit on-grid orders, benchmark overrides are looser.
    bool slot_on_grid(std::size_t s, const TickGrid& grid, double tol = 1e-9) const {
        if (clamps[s] != Clamp::two_sided) return false;
        const double steps = slopes[s] / grid.beta;
        if (steps < -tol || steps > static_cast<double>(grid.max_slope_steps) + tol) return false;
        if (std::abs(steps - std::round(steps)) > tol) return false;
        const double ticks = ref_prices[s] / grid.alpha;
        return std::abs(ticks - std::round(ticks)) <= tol * (std::abs(ticks) + 1.0);
    }
};

// Net shares the agent sells if the auction clears at `price` (negative when
// her live orders would net-buy there).
inline double agent_cleared_volume(const AuctionAgentHistory& history, double price) {
    return history.supply_at(price);
}

}  // namespace auctionmm
