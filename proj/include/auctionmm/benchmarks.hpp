#pragma once

// Reference liquidation strategies: closed-form risk-neutral market-making
// quotes, a TWAP schedule, and the shared auction heuristic both use once the
// book closes (post the remaining inventory as one steep one-sided curve).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "auctionmm/common.hpp"
#include "auctionmm/mdp.hpp"

namespace auctionmm {

struct AsParams {
    double A = 0.4;        // fill intensity scale
    double k = 1.0;        // intensity decay per price unit
    double alpha = 0.01;   // tick size
    std::int64_t T = 119;  // last continuous step
    std::int64_t Q = 100;  // inventory cap of the value table

    void validate() const {
        if (!(A > 0.0) || !(k > 0.0)) throw ConfigError("AsParams: A and k must be positive");
        if (!(alpha > 0.0)) throw ConfigError("AsParams: alpha must be positive");
        if (T < 0 || Q < 0) throw ConfigError("AsParams: T and Q must be nonnegative");
    }
};

// Value-function term v_q(t) = sum_{j<=q} (A e^-1 (T-t))^j / j!, evaluated
// with a running-term product so large q stays stable.
inline double as_value(std::int64_t q, double t, const AsParams& params) {
    const double eta = params.A * std::exp(-1.0) * (static_cast<double>(params.T) - t);
    double term = 1.0;
    double sum = 1.0;
    for (std::int64_t j = 1; j <= q; ++j) {
        term *= eta / static_cast<double>(j);
        sum += term;
    }
    return sum;
}

// Optimal ask distance in ticks: (1/(alpha k)) [1 + ln(v_q / v_{q-1})],
// rounded to the nearest tick and floored at zero. With no inventory the
// formula degenerates to (alpha k)^{-1}.
inline Tick as_quote(std::int64_t q, double t, const AsParams& params) {
    const double unit = 1.0 / (params.alpha * params.k);
    double quote = unit;
    if (q >= 1) {
        const double ratio = as_value(q, t, params) / as_value(q - 1, t, params);
        quote = unit * (1.0 + std::log(ratio));
    }
    return std::max<Tick>(0, round_half_away(quote));
}

// Post the leftover inventory as a single steep sell curve anchored halfway
// between the mean and the best fill price of the continuous phase (last mid
// when nothing filled). Submitted once at the auction open, never cancelled.
inline AgentAction auction_heuristic(const SessionState& state, const EpisodeView& view,
                                     double z) {
    AgentAction a;
    if (state.placed_orders > 0) {
        a.auction_price = view.config->grid.snap_price(state.clearing_estimate);
        return a;  // later steps: zero-slope no-op
    }
    double anchor = state.mid;
    if (!view.fills.empty()) {
        double sum = 0.0;
        double top = view.fills.front().price;
        for (const Fill& f : view.fills) {
            sum += f.price;
            top = std::max(top, f.price);
        }
        anchor = (sum / static_cast<double>(view.fills.size()) + top) / 2.0;
    }
    a.auction_slope = z * state.inventory;
    a.auction_price = view.config->grid.snap_price(anchor);
    a.auction_clamp = Clamp::sell_only;
    return a;
}

// Full-inventory exposure at the closed-form quote distance.
class AsPolicy : public Policy {
  public:
    AsPolicy(const AsParams& params, double auction_z = 10.0)
        : params_(params), auction_z_(auction_z) {
        params_.validate();
    }

    PolicyDecision decide(const SessionState& state, const EpisodeView& view) override {
        if (state.phase != Phase::continuous)
            return {auction_heuristic(state, view, auction_z_), -1};
        AgentAction a;
        const auto q = static_cast<std::int64_t>(state.inventory);
        const std::int64_t capped = std::min(q, params_.Q);
        a.lob_volume = static_cast<Shares>(q);
        a.lob_level = view.config->grid.price_to_tick(state.mid) +
                      as_quote(capped, static_cast<double>(state.t), params_);
        return {a, -1};
    }

  private:
    AsParams params_;
    double auction_z_;
};

// Uniform residual liquidation: ceil(q / periods-left) shares, one tick above
// the mid, every continuous step.
class TwapPolicy : public Policy {
  public:
    explicit TwapPolicy(std::int64_t last_continuous_step, double auction_z = 10.0)
        : T_(last_continuous_step), auction_z_(auction_z) {}

    PolicyDecision decide(const SessionState& state, const EpisodeView& view) override {
        if (state.phase != Phase::continuous)
            return {auction_heuristic(state, view, auction_z_), -1};
        AgentAction a;
        const double remaining = static_cast<double>(T_ - state.t + 1);
        a.lob_volume = static_cast<Shares>(std::ceil(state.inventory / remaining));
        a.lob_level = view.config->grid.price_to_tick(state.mid) + 1;
        return {a, -1};
    }

  private:
    std::int64_t T_;
    double auction_z_;
};

}  // namespace auctionmm
