#pragma once

// The liquidation session as a decision process. One episode runs the
// continuous book phase (post a sell order, collect fills against incoming
// buy flow) into the auction phase (submit supply curves, optionally cancel
// older ones) and ends at the clearing step, where the live curves execute
// at the auction price and leftover inventory is penalised quadratically.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "auctionmm/clearing.hpp"
#include "auctionmm/common.hpp"
#include "auctionmm/core.hpp"
#include "auctionmm/market_sim.hpp"

namespace auctionmm {

// ---------------------------------------------------------------------------
// Rewards
// ---------------------------------------------------------------------------

struct RewardParams {
    double inventory_penalty = 0.5;   // weight on squared terminal inventory
    double wrong_side_removal = 1.0;  // fraction of a negative fictive gain removed
    std::int64_t price_window = 1000; // continuous-phase reward window, in ticks
    double cancel_cost = 0.1;         // fee per cancelled auction order
    double discount = 0.99;

    void validate() const {
        if (!(inventory_penalty >= 0.0)) throw ConfigError("RewardParams: negative inventory penalty");
        if (!(wrong_side_removal >= 0.0)) throw ConfigError("RewardParams: negative wrong-side removal");
        if (price_window <= 0) throw ConfigError("RewardParams: price window must be positive");
        if (!(cancel_cost >= 0.0)) throw ConfigError("RewardParams: negative cancel cost");
        if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("RewardParams: discount must lie in (0, 1]");
    }
};

// Fills earn the sale price per share, scaled down linearly the further the
// sale sits below the running clearing estimate; the factor hits zero one
// price window below the estimate and keeps growing above it.
inline double reward_continuous(double fill_price, Shares executed, double clearing_estimate,
                                const RewardParams& params, const TickGrid& grid) {
    const double window = grid.alpha * static_cast<double>(params.price_window);
    const double margin = window - (clearing_estimate - fill_price);
    const double factor = margin > 0.0 ? margin / window : 0.0;
    return fill_price * static_cast<double>(executed) * factor;
}

// Fictive gain of an auction order were the auction to clear right now at
// `estimate`: the shares the curve would trade, valued at that price. A
// negative gain (buying back above the estimate, or selling below it) is
// removed in proportion to `wrong_side_removal`. Cancellations cost a fee.
inline double reward_auction(const SupplyCurve& order, double estimate,
                             std::int64_t cancelled_count, const RewardParams& params) {
    const double gain = estimate * eval_supply(order, estimate);
    const double removal = params.wrong_side_removal * std::max(-gain, 0.0);
    return gain + removal - params.cancel_cost * static_cast<double>(cancelled_count);
}

// Terminal reward at the clearing step: realised gain of every live order at
// the clearing price (wrong sides removed order by order) minus the quadratic
// penalty on whatever inventory is left.
inline double reward_terminal(const AuctionAgentHistory& history, double clearing_price,
                              double final_inventory, const RewardParams& params) {
    double total = 0.0;
    for (std::size_t s = 0; s < history.placed; ++s) {
        if (history.ledger.theta[s]) continue;
        const double gain = clearing_price * eval_supply(history.order(s), clearing_price);
        total += gain + params.wrong_side_removal * std::max(-gain, 0.0);
    }
    return total - params.inventory_penalty * final_inventory * final_inventory;
}

// ---------------------------------------------------------------------------
// State and actions
// ---------------------------------------------------------------------------

struct SessionState {
    std::int64_t t = 0;
    Phase phase = Phase::continuous;

    double inventory = 0.0;
    double cleared_volume = 0.0;       // set at the clearing step only
    double clearing_estimate = 0.0;    // running fictitious / auction clearing price
    std::int64_t ask_depth = 0;        // first empty level per side (continuous phase)
    std::int64_t bid_depth = 0;
    std::int64_t n_exo_curves = 0;     // auction phase
    std::int64_t n_takers_sell = 0;
    std::int64_t n_takers_buy = 0;
    std::vector<std::uint8_t> cancellations;  // agent's ledger bits
    std::int64_t placed_orders = 0;    // auction orders submitted so far
    double mid = 0.0;                  // frozen at the last continuous mid in the auction

    std::vector<Shares> taker_sell_volumes;  // fixed length: participant bound
    std::vector<Shares> taker_buy_volumes;
    std::vector<Shares> ask_ladder;          // fixed length: depth bound
    std::vector<Shares> bid_ladder;
    std::vector<double> exo_slopes;          // fixed length: participant bound
    std::vector<double> exo_refs;
    std::vector<double> agent_refs;          // fixed length: auction steps + 1
    std::vector<double> agent_slopes;

    std::int64_t theta_count() const {
        std::int64_t n = 0;
        for (auto b : cancellations) n += b;
        return n;
    }
};

struct AgentAction {
    // continuous phase
    Shares lob_volume = 0;
    Tick lob_level = 0;
    // auction phase
    double auction_slope = 0.0;
    double auction_price = 0.0;
    Clamp auction_clamp = Clamp::two_sided;
    std::vector<std::uint8_t> cancel;  // empty means no cancellation
};

// The finite action menu the learned policies pick from.
//   continuous: volume in {0, ceil(I/4), ceil(I/2), I} x level offset {0..4}
//   auction:    slope in {0, beta, ..., beta*10} x ref in {H -+ 5 ticks}
//               x {keep, cancel oldest live}
struct ActionGrid {
    std::int64_t n_volume_fracs = 4;
    std::int64_t n_level_offsets = 5;
    std::int64_t n_slope_steps = 10;     // slope index 0..n_slope_steps
    std::int64_t price_halfwidth = 5;    // ref offset -halfwidth..+halfwidth

    std::int64_t n_continuous() const { return n_volume_fracs * n_level_offsets; }
    std::int64_t n_auction() const {
        return (n_slope_steps + 1) * (2 * price_halfwidth + 1) * 2;
    }
    std::int64_t n_actions(Phase phase) const {
        return phase == Phase::continuous ? n_continuous() : n_auction();
    }

    Shares volume_for(std::int64_t frac_index, double inventory) const {
        const auto inv = static_cast<double>(inventory);
        switch (frac_index) {
            case 0: return 0;
            case 1: return static_cast<Shares>(std::ceil(inv / 4.0));
            case 2: return static_cast<Shares>(std::ceil(inv / 2.0));
            default: return static_cast<Shares>(inv);
        }
    }

    // Oldest past order still live, or -1.
    static std::int64_t oldest_live_slot(const SessionState& state, std::int64_t past_slots) {
        for (std::int64_t s = 0; s < past_slots; ++s)
            if (!state.cancellations[static_cast<std::size_t>(s)]) return s;
        return -1;
    }

    AgentAction resolve(Phase phase, std::int64_t index, const SessionState& state,
                        const TickGrid& grid) const {
        AgentAction a;
        if (phase == Phase::continuous) {
            if (index < 0 || index >= n_continuous())
                throw std::invalid_argument("ActionGrid: continuous action index out of range");
            const std::int64_t frac = index / n_level_offsets;
            const std::int64_t offset = index % n_level_offsets;
            a.lob_volume = volume_for(frac, state.inventory);
            a.lob_level = grid.price_to_tick(state.mid) + offset;
            return a;
        }
        if (index < 0 || index >= n_auction())
            throw std::invalid_argument("ActionGrid: auction action index out of range");
        const std::int64_t cancel_bit = index % 2;
        const std::int64_t rest = index / 2;
        const std::int64_t n_offsets = 2 * price_halfwidth + 1;
        const std::int64_t slope_idx = rest / n_offsets;
        const std::int64_t offset = rest % n_offsets - price_halfwidth;
        a.auction_slope = grid.beta * static_cast<double>(slope_idx);
        Tick ref = grid.price_to_tick(state.clearing_estimate) + offset;
        ref = std::clamp<Tick>(ref, 0, grid.max_price_ticks);
        a.auction_price = grid.tick_to_price(ref);
        if (cancel_bit) {
            const std::int64_t victim = oldest_live_slot(state, state.placed_orders);
            if (victim < 0)
                throw InadmissibleAction("ActionGrid: no live past order to cancel");
            a.cancel.assign(state.cancellations.size(), 0);
            a.cancel[static_cast<std::size_t>(victim)] = 1;
        }
        return a;
    }
};

// True per grid action when the resolved action satisfies the admissibility
// constraints: volume within inventory, quote at or above the mid, and
// cancellations touching only live past orders.
inline std::vector<std::uint8_t> admissible_mask(const SessionState& state, const ActionGrid& grid,
                                                 const TickGrid& ticks) {
    std::vector<std::uint8_t> mask;
    if (state.phase == Phase::continuous) {
        mask.assign(static_cast<std::size_t>(grid.n_continuous()), 0);
        const Tick mid_tick = ticks.price_to_tick(state.mid);
        for (std::int64_t i = 0; i < grid.n_continuous(); ++i) {
            const std::int64_t frac = i / grid.n_level_offsets;
            const std::int64_t offset = i % grid.n_level_offsets;
            const Shares v = grid.volume_for(frac, state.inventory);
            const Tick level = mid_tick + offset;
            mask[static_cast<std::size_t>(i)] =
                v >= 0 && static_cast<double>(v) <= state.inventory && v <= ticks.max_volume &&
                level >= mid_tick && ticks.tick_in_range(level);
        }
        return mask;
    }
    if (state.phase == Phase::auction) {
        mask.assign(static_cast<std::size_t>(grid.n_auction()), 0);
        const bool can_cancel =
            ActionGrid::oldest_live_slot(state, state.placed_orders) >= 0;
        for (std::int64_t i = 0; i < grid.n_auction(); ++i)
            mask[static_cast<std::size_t>(i)] = (i % 2 == 0) || can_cancel;
        return mask;
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

// Divisors that bring every feature to unit scale; recorded in checkpoints so
// a trained net is only ever fed what it saw in training.
struct FeatureScaling {
    double price_scale = 100.0;
    double volume_scale = 30.0;
    double count_scale = 64.0;
    double inventory_scale = 100.0;
    double depth_scale = 10.0;
    double theta_scale = 30.0;
};

inline constexpr std::size_t kContinuousFeatures = 7;
inline constexpr std::size_t kAuctionFeatures = 8;

inline std::size_t feature_width(Phase phase) {
    return phase == Phase::continuous ? kContinuousFeatures : kAuctionFeatures;
}

// Compact per-phase observation: the handful of attributes that move the
// value function, each divided by its scale.
inline std::vector<double> pruned_features(const SessionState& state, const FeatureScaling& fs) {
    std::vector<double> f;
    if (state.phase == Phase::continuous) {
        f.reserve(kContinuousFeatures);
        f.push_back(state.inventory / fs.inventory_scale);
        f.push_back(state.clearing_estimate / fs.price_scale);
        f.push_back(static_cast<double>(state.ask_depth) / fs.depth_scale);
        f.push_back(static_cast<double>(state.bid_depth) / fs.depth_scale);
        f.push_back(state.mid / fs.price_scale);
        f.push_back(static_cast<double>(state.ask_ladder.empty() ? 0 : state.ask_ladder[0]) /
                    fs.volume_scale);
        f.push_back(static_cast<double>(state.bid_ladder.empty() ? 0 : state.bid_ladder[0]) /
                    fs.volume_scale);
        return f;
    }
    if (state.phase == Phase::auction || state.phase == Phase::cleared) {
        f.reserve(kAuctionFeatures);
        f.push_back(state.inventory / fs.inventory_scale);
        f.push_back(state.cleared_volume / fs.inventory_scale);
        f.push_back(state.clearing_estimate / fs.price_scale);
        f.push_back(static_cast<double>(state.n_exo_curves) / fs.count_scale);
        f.push_back(static_cast<double>(state.n_takers_sell) / fs.count_scale);
        f.push_back(static_cast<double>(state.n_takers_buy) / fs.count_scale);
        f.push_back(static_cast<double>(state.theta_count()) / fs.theta_scale);
        f.push_back(state.mid / fs.price_scale);
        return f;
    }
    return f;
}

// ---------------------------------------------------------------------------
// Session configuration and mid-price models
// ---------------------------------------------------------------------------

struct SessionConfig {
    TickGrid grid;
    GenerativeParams gen;
    RewardParams reward;
    double smoothing = 0.95;        // weight of the newest fictitious price
    double initial_estimate = 100.0;
    bool own_order_in_estimate = true;  // include the agent's resting order
    ActionGrid action_grid;
    FeatureScaling scaling;
    EstimateSettings estimate;

    void validate() const {
        grid.validate();
        gen.validate();
        reward.validate();
        if (!(smoothing > 0.0 && smoothing <= 1.0))
            throw ConfigError("SessionConfig: smoothing must lie in (0, 1]");
        if (!(initial_estimate >= 0.0))
            throw ConfigError("SessionConfig: initial estimate must be nonnegative");
    }
};

// Source of the continuous-phase mid path (one value per continuous step).
struct MidModel {
    virtual ~MidModel() = default;
    virtual std::vector<double> path(std::uint64_t episode_seed) const = 0;
};

namespace seed_stream {
constexpr std::uint64_t mid_path = 1;
constexpr std::uint64_t order_flow = 2;
constexpr std::uint64_t exploration = 3;
constexpr std::uint64_t shuffle = 4;
constexpr std::uint64_t net_init = 5;
constexpr std::uint64_t benchmark = 6;
}  // namespace seed_stream

struct RoughHestonMidModel : MidModel {
    RoughHestonParams params;
    std::int64_t n_steps;

    RoughHestonMidModel(const RoughHestonParams& p, std::int64_t steps)
        : params(p), n_steps(steps) {}

    std::vector<double> path(std::uint64_t episode_seed) const override {
        auto rng = make_rng(episode_seed, seed_stream::mid_path);
        auto prices = simulate_rough_heston(params, n_steps, rng);
        prices.resize(static_cast<std::size_t>(n_steps));  // one mid per continuous step
        return prices;
    }
};

// Replays the same resampled historical path every episode.
struct HistoricalMidModel : MidModel {
    std::vector<double> mids;

    explicit HistoricalMidModel(std::vector<double> values) : mids(std::move(values)) {}

    std::vector<double> path(std::uint64_t) const override { return mids; }
};

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

struct Fill {
    double price = 0.0;
    Shares volume = 0;
};

struct StepOutcome {
    double reward = 0.0;            // reward of the step just taken
    double terminal_reward = 0.0;   // set on the final step only
    bool terminal = false;
    Shares executed = 0;
    double fill_price = 0.0;
};

class Environment {
  public:
    Environment(const SessionConfig& config, MarketEventStream stream)
        : cfg_(config),
          stream_(std::move(stream)),
          stats_(config.smoothing, config.initial_estimate),
          history_(static_cast<std::size_t>(config.gen.auction_steps()),
                   config.reward.cancel_cost) {
        cfg_.validate();
        inventory_ = static_cast<double>(cfg_.gen.initial_inventory);
        estimate_ = cfg_.initial_estimate;
        refresh_state();
    }

    const SessionState& state() const { return state_; }
    bool done() const { return phase_ == Phase::cleared; }
    std::span<const Fill> fills() const { return fills_; }
    double clearing_price() const { return clearing_price_; }
    double cleared_volume() const { return cleared_volume_; }
    double inventory_at_open() const { return inventory_at_open_; }
    const AuctionAgentHistory& history() const { return history_; }

    StepOutcome step(const AgentAction& action) {
        if (done()) throw std::logic_error("Environment: episode already cleared");
        return phase_ == Phase::continuous ? step_continuous(action) : step_auction(action);
    }

  private:
    StepOutcome step_continuous(const AgentAction& action) {
        validate_continuous(action);
        const auto i = static_cast<std::size_t>(t_);
        const Shares incoming = stream_.buy_flow[i].total();
        const Tick mid_tick = cfg_.grid.price_to_tick(stream_.mid[i]);
        // Quotes may sit far above the book; levels past the depth bound hold
        // no volume, so the blocking sum saturates there.
        const std::int64_t levels_ahead = std::min(
            std::max<std::int64_t>(0, action.lob_level - mid_tick - 1), cfg_.grid.max_depth);
        const Shares executed = executed_shares(action.lob_volume, levels_ahead, incoming,
                                                stream_.ask_ladders[i], cfg_.grid);

        StepOutcome out;
        out.executed = executed;
        out.fill_price = cfg_.grid.tick_to_price(action.lob_level);
        out.reward = reward_continuous(out.fill_price, executed, estimate_, cfg_.reward, cfg_.grid);

        inventory_ -= static_cast<double>(executed);
        if (executed > 0) fills_.push_back(Fill{out.fill_price, executed});
        residual_level_ = action.lob_level;
        residual_volume_ = action.lob_volume - executed;

        ++t_;
        if (t_ < cfg_.gen.tau_op) {
            update_estimate_from_book();
        } else {
            // The book estimate carries into the auction unchanged; the first
            // uncrossing-based update happens once auction orders exist.
            phase_ = Phase::auction;
            inventory_at_open_ = inventory_;
        }
        refresh_state();
        return out;
    }

    StepOutcome step_auction(const AgentAction& action) {
        validate_auction(action);
        const auto slot = static_cast<std::size_t>(t_ - cfg_.gen.tau_op);

        std::int64_t cancelled = 0;
        if (!action.cancel.empty()) {
            auto result = apply_cancellations(history_.ledger, action.cancel, slot);
            history_.ledger = std::move(result.ledger);
            cancelled = result.count;
        }
        const double ref = cfg_.grid.snap_price(action.auction_price);
        history_.place(action.auction_slope, ref, action.auction_clamp);

        // The step's exogenous arrivals land after the agent's order; the
        // snapshot already includes them. One uncrossing estimate per step,
        // with the agent's own standing curves in the book, prices the step.
        const AuctionBook& book = stream_.auction[slot].book;
        ClearingProblem problem{book.curves, history_, book.net_market_volume()};
        const ClearingSolution sol =
            estimate_clearing(problem, estimate_, cfg_.grid, cfg_.estimate);
        estimate_ = sol.price;

        StepOutcome out;
        out.reward = reward_auction(SupplyCurve{action.auction_slope, ref, action.auction_clamp},
                                    estimate_, cancelled, cfg_.reward);

        ++t_;
        if (t_ >= cfg_.gen.tau_cl) {
            // The final step's estimate and the terminal uncrossing price the
            // same book, so the solve is shared.
            clear_session(sol);
            out.terminal = true;
            out.terminal_reward = terminal_reward_;
        }
        refresh_state();
        return out;
    }

    void validate_continuous(const AgentAction& action) const {
        if (action.lob_volume < 0)
            throw InadmissibleAction("Environment: negative order volume");
        if (static_cast<double>(action.lob_volume) > inventory_)
            throw InadmissibleAction("Environment: order volume exceeds inventory");
        if (action.lob_volume > cfg_.grid.max_volume)
            throw InadmissibleAction("Environment: order volume exceeds the volume bound");
        const Tick mid_tick = cfg_.grid.price_to_tick(stream_.mid[static_cast<std::size_t>(t_)]);
        if (action.lob_level < mid_tick)
            throw InadmissibleAction("Environment: sell order quoted below the mid");
        if (!cfg_.grid.tick_in_range(action.lob_level))
            throw InadmissibleAction("Environment: quote outside the price grid");
        for (auto b : action.cancel)
            if (b) throw InadmissibleAction("Environment: cancellations are auction-only");
    }

    void validate_auction(const AgentAction& action) const {
        if (!(action.auction_slope >= 0.0))
            throw InadmissibleAction("Environment: auction slope must be nonnegative");
        if (!(action.auction_price >= 0.0) || action.auction_price > cfg_.grid.max_price())
            throw InadmissibleAction("Environment: auction reference price out of range");
    }

    // Fictitious auction over the refreshed book (and the agent's resting
    // remainder): feed it to the running estimator.
    void update_estimate_from_book() {
        const auto i = static_cast<std::size_t>(t_);
        const Tick mid_tick = cfg_.grid.price_to_tick(stream_.mid[i]);
        standing_.clear();
        const auto& ask = stream_.ask_ladders[i].volumes;
        for (std::size_t j = 0; j < ask.size(); ++j)
            if (ask[j] > 0)
                standing_.push_back({mid_tick + static_cast<Tick>(j) + 1,
                                     static_cast<double>(ask[j])});
        const auto& bid = stream_.bid_ladders[i].volumes;
        for (std::size_t j = 0; j < bid.size(); ++j)
            if (bid[j] > 0)
                standing_.push_back({mid_tick - static_cast<Tick>(j) - 1,
                                     static_cast<double>(bid[j])});
        if (cfg_.own_order_in_estimate && residual_volume_ > 0)
            standing_.push_back({residual_level_, static_cast<double>(residual_volume_)});
        estimate_ = hypothetical_step(stats_, standing_, cfg_.grid).smoothed;
    }

    // Final uncrossing: execute the live curves at the solved price and
    // charge the leftover inventory. A book with no crossing trades nothing.
    void clear_session(const ClearingSolution& sol) {
        clearing_price_ = sol.price;
        if (sol.method == ClearingMethod::held) {
            cleared_volume_ = 0.0;
            terminal_reward_ = -cfg_.reward.inventory_penalty * inventory_ * inventory_;
        } else {
            cleared_volume_ = agent_cleared_volume(history_, sol.price);
            inventory_ -= cleared_volume_;
            terminal_reward_ = reward_terminal(history_, sol.price, inventory_, cfg_.reward);
        }
        phase_ = Phase::cleared;
    }

    void refresh_state() {
        auto& st = state_;
        st.t = t_;
        st.phase = phase_;
        st.inventory = inventory_;
        st.cleared_volume = phase_ == Phase::cleared ? cleared_volume_ : 0.0;
        st.clearing_estimate = estimate_;
        st.cancellations = history_.ledger.theta;
        st.placed_orders = static_cast<std::int64_t>(history_.placed);
        st.agent_refs = history_.ref_prices;
        st.agent_slopes = history_.slopes;

        const auto depth_cap = static_cast<std::size_t>(cfg_.grid.max_depth);
        const auto part_cap = static_cast<std::size_t>(cfg_.grid.max_participants);
        st.ask_ladder.assign(depth_cap, 0);
        st.bid_ladder.assign(depth_cap, 0);
        st.taker_sell_volumes.assign(part_cap, 0);
        st.taker_buy_volumes.assign(part_cap, 0);
        st.exo_slopes.assign(part_cap, 0.0);
        st.exo_refs.assign(part_cap, 0.0);

        if (phase_ == Phase::continuous) {
            const auto i = static_cast<std::size_t>(t_);
            st.mid = stream_.mid[i];
            const auto& ask = stream_.ask_ladders[i];
            const auto& bid = stream_.bid_ladders[i];
            std::copy(ask.volumes.begin(), ask.volumes.end(), st.ask_ladder.begin());
            std::copy(bid.volumes.begin(), bid.volumes.end(), st.bid_ladder.begin());
            st.ask_depth = ask.depth();
            st.bid_depth = bid.depth();
            st.n_exo_curves = 0;
            st.n_takers_sell = 0;
            st.n_takers_buy = 0;
            return;
        }

        st.mid = stream_.mid_at_open;
        st.ask_depth = 0;
        st.bid_depth = 0;
        // Observable book at decision time: the exogenous arrivals of the
        // step being decided have not landed yet.
        const std::int64_t past = t_ - cfg_.gen.tau_op - 1;
        if (past < 0) {
            st.n_exo_curves = 0;
            st.n_takers_sell = 0;
            st.n_takers_buy = 0;
            return;
        }
        const auto slot =
            std::min(static_cast<std::size_t>(past), stream_.auction.size() - 1);
        const AuctionBook& book = stream_.auction[slot].book;
        st.n_exo_curves = static_cast<std::int64_t>(book.curves.size());
        st.n_takers_sell = static_cast<std::int64_t>(book.taker_sell.size());
        st.n_takers_buy = static_cast<std::int64_t>(book.taker_buy.size());
        for (std::size_t i = 0; i < book.curves.size() && i < part_cap; ++i) {
            st.exo_slopes[i] = book.curves[i].slope;
            st.exo_refs[i] = book.curves[i].ref_price;
        }
        std::copy(book.taker_sell.begin(),
                  book.taker_sell.begin() +
                      std::min(book.taker_sell.size(), st.taker_sell_volumes.size()),
                  st.taker_sell_volumes.begin());
        std::copy(book.taker_buy.begin(),
                  book.taker_buy.begin() +
                      std::min(book.taker_buy.size(), st.taker_buy_volumes.size()),
                  st.taker_buy_volumes.begin());
    }

    SessionConfig cfg_;
    MarketEventStream stream_;
    ClearingStats stats_;
    AuctionAgentHistory history_;
    SessionState state_;
    std::vector<Fill> fills_;
    std::vector<StandingOrder> standing_;

    std::int64_t t_ = 0;
    Phase phase_ = Phase::continuous;
    double inventory_ = 0.0;
    double inventory_at_open_ = 0.0;
    double estimate_ = 0.0;
    Tick residual_level_ = 0;
    Shares residual_volume_ = 0;
    double clearing_price_ = 0.0;
    double cleared_volume_ = 0.0;
    double terminal_reward_ = 0.0;
};

// ---------------------------------------------------------------------------
// Policies and episodes
// ---------------------------------------------------------------------------

struct EpisodeView {
    std::span<const Fill> fills;
    const SessionConfig* config = nullptr;
};

struct PolicyDecision {
    AgentAction action;
    std::int64_t grid_index = -1;  // set when the action came off the ActionGrid
};

class Policy {
  public:
    virtual ~Policy() = default;
    virtual void begin_episode(std::uint64_t /*episode_seed*/) {}
    virtual PolicyDecision decide(const SessionState& state, const EpisodeView& view) = 0;
};

// Does nothing: empty order at the mid, zero-slope auction curve.
class NullPolicy : public Policy {
  public:
    PolicyDecision decide(const SessionState& state, const EpisodeView& view) override {
        AgentAction a;
        if (state.phase == Phase::continuous) {
            a.lob_level = view.config->grid.price_to_tick(state.mid);
        } else {
            a.auction_price = view.config->grid.snap_price(state.clearing_estimate);
        }
        return {a, -1};
    }
};

// Uniform draw over the admissible grid actions.
class RandomGridPolicy : public Policy {
  public:
    void begin_episode(std::uint64_t episode_seed) override {
        rng_ = make_rng(episode_seed, seed_stream::exploration);
    }

    PolicyDecision decide(const SessionState& state, const EpisodeView& view) override {
        const auto& grid = view.config->action_grid;
        const auto mask = admissible_mask(state, grid, view.config->grid);
        std::vector<std::int64_t> allowed;
        allowed.reserve(mask.size());
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) allowed.push_back(static_cast<std::int64_t>(i));
        if (allowed.empty()) throw std::logic_error("RandomGridPolicy: no admissible action");
        std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
        const std::int64_t index = allowed[pick(rng_)];
        return {grid.resolve(state.phase, index, state, view.config->grid), index};
    }

  private:
    std::mt19937_64 rng_;
};

// One (features, action, reward, next) tuple for fitted Q iteration. The
// final auction step folds the discounted terminal reward into its own, so a
// terminal tuple needs no successor.
struct Transition {
    Phase phase = Phase::continuous;
    Phase next_phase = Phase::continuous;
    bool terminal = false;
    std::int64_t action = -1;
    double reward = 0.0;
    std::vector<double> features;
    std::vector<double> next_features;
    std::vector<std::uint8_t> next_admissible;
};

struct TraceRow {
    std::int64_t t = 0;
    Phase phase = Phase::continuous;
    double inventory = 0.0;
    double mid = 0.0;
    double estimate = 0.0;
    Shares lob_volume = 0;
    Tick lob_level = 0;
    double auction_slope = 0.0;
    double auction_price = 0.0;
    std::int64_t cancelled = 0;
    double reward = 0.0;
};

struct EpisodeResult {
    std::vector<double> rewards;  // one per step, clearing step included
    double continuous_reward = 0.0;
    double auction_reward = 0.0;
    double terminal_reward = 0.0;
    double total_reward = 0.0;
    double discounted_return = 0.0;
    double final_inventory = 0.0;
    double inventory_at_open = 0.0;
    double clearing_price = 0.0;
    double cleared_volume = 0.0;
    std::vector<Transition> transitions;
    std::vector<TraceRow> trace;
};

struct EpisodeOptions {
    bool record_transitions = false;
    bool record_trace = false;
};

inline EpisodeResult run_episode(Policy& policy, const SessionConfig& cfg, const MidModel& model,
                                 std::uint64_t episode_seed, const EpisodeOptions& options = {}) {
    auto flow_rng = make_rng(episode_seed, seed_stream::order_flow);
    MarketEventStream stream =
        generate_stream(cfg.gen, cfg.grid, model.path(episode_seed), flow_rng);
    Environment env(cfg, std::move(stream));
    policy.begin_episode(episode_seed);

    EpisodeResult out;
    out.rewards.reserve(static_cast<std::size_t>(cfg.gen.tau_cl) + 1);
    const double chi = cfg.reward.discount;
    double weight = 1.0;

    while (!env.done()) {
        const SessionState& state = env.state();
        const Phase phase = state.phase;
        const EpisodeView view{env.fills(), &cfg};
        const PolicyDecision decision = policy.decide(state, view);

        Transition tr;
        if (options.record_transitions) {
            tr.phase = phase;
            tr.action = decision.grid_index;
            tr.features = pruned_features(state, cfg.scaling);
        }
        TraceRow trow;
        if (options.record_trace) {
            // `state` is a live reference; capture what the policy saw before
            // the step mutates it.
            trow.t = state.t;
            trow.phase = phase;
            trow.inventory = state.inventory;
            trow.mid = state.mid;
            trow.estimate = state.clearing_estimate;
        }

        const StepOutcome outcome = env.step(decision.action);
        out.rewards.push_back(outcome.reward);
        (phase == Phase::continuous ? out.continuous_reward : out.auction_reward) += outcome.reward;
        out.discounted_return += weight * outcome.reward;
        weight *= chi;
        if (outcome.terminal) {
            out.rewards.push_back(outcome.terminal_reward);
            out.terminal_reward = outcome.terminal_reward;
            out.discounted_return += weight * outcome.terminal_reward;
        }

        if (options.record_transitions) {
            tr.reward = outcome.reward;
            tr.terminal = outcome.terminal;
            tr.next_phase = env.state().phase;
            if (outcome.terminal) {
                tr.reward += chi * outcome.terminal_reward;
            } else {
                tr.next_features = pruned_features(env.state(), cfg.scaling);
                tr.next_admissible = admissible_mask(env.state(), cfg.action_grid, cfg.grid);
            }
            out.transitions.push_back(std::move(tr));
        }
        if (options.record_trace) {
            trow.lob_volume = decision.action.lob_volume;
            trow.lob_level = decision.action.lob_level;
            trow.auction_slope = decision.action.auction_slope;
            trow.auction_price = decision.action.auction_price;
            trow.cancelled = static_cast<std::int64_t>(std::count(
                decision.action.cancel.begin(), decision.action.cancel.end(), 1));
            trow.reward = outcome.reward;
            out.trace.push_back(std::move(trow));
        }
    }

    out.total_reward = out.continuous_reward + out.auction_reward + out.terminal_reward;
    out.final_inventory = env.state().inventory;
    out.inventory_at_open = env.inventory_at_open();
    out.clearing_price = env.clearing_price();
    out.cleared_volume = env.cleared_volume();
    return out;
}

// Cumulative gap between a benchmark's value estimates and the learner's,
// episode by episode.
inline std::vector<double> pseudo_regret(std::span<const double> benchmark_values,
                                         std::span<const double> learned_values) {
    if (benchmark_values.size() != learned_values.size())
        throw std::invalid_argument("pseudo_regret: series lengths differ");
    std::vector<double> out(benchmark_values.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < benchmark_values.size(); ++i) {
        acc += benchmark_values[i] - learned_values[i];
        out[i] = acc;
    }
    return out;
}

}  // namespace auctionmm
