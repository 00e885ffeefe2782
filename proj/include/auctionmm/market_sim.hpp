#pragma once

// Market generation for one trading session: Poisson taker flow and the event
// grid it induces, freshly sampled book ladders per continuous step, the
// auction-phase maker/taker event process, a rough-volatility mid-price model,
// historical mid ingestion, and the calibration of the closed-form benchmark
// strategy from the same generative assumptions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "auctionmm/common.hpp"
#include "auctionmm/core.hpp"

namespace auctionmm {

struct GenerativeParams {
    // session shape
    std::int64_t tau_op = 120;   // first auction step (number of continuous steps)
    std::int64_t tau_cl = 150;   // clearing step (auction trades on [tau_op, tau_cl))
    Shares initial_inventory = 100;

    // taker flow
    double lambda0 = 1.0;   // Poisson intensity per side, continuous phase
    double v_m = 2.0;       // Pareto scale of order sizes
    double gamma_m = 2.5;   // Pareto tail of order sizes
    Shares order_volume_cap = 30;

    // book ladders
    double V_inf = 15.0;    // scale of the touch volume
    double beta_a = 2.0;    // Beta shape parameters for the touch volume
    double beta_b = 5.0;
    double decay = 0.5;     // per-level multiplicative volume decay

    // auction event probabilities and maker-curve supports
    double U1 = 0.1;        // slope ~ U[U1, U2]
    double U2 = 2.0;
    std::int64_t M1 = 10;   // price offset ~ U{M2, ..., M1} ticks around the last mid
    std::int64_t M2 = -10;
    double p1 = 0.3;        // new maker curve
    double p2 = 0.2;        // cancel one maker curve
    double p3 = 0.3;        // new taker per side
    double p4 = 0.1;        // cancel one taker order

    std::int64_t auction_steps() const { return tau_cl - tau_op; }

    void validate() const {
        if (tau_op < 1 || tau_cl <= tau_op)
            throw ConfigError("GenerativeParams: need 1 <= tau_op < tau_cl");
        if (initial_inventory < 0) throw ConfigError("GenerativeParams: negative inventory");
        if (!(lambda0 > 0.0)) throw ConfigError("GenerativeParams: lambda0 must be positive");
        if (!(v_m > 0.0) || !(gamma_m > 1.0))
            throw ConfigError("GenerativeParams: order sizes need v_m > 0 and gamma_m > 1");
        if (order_volume_cap < 1) throw ConfigError("GenerativeParams: order_volume_cap must be >= 1");
        if (!(V_inf >= 0.0) || !(beta_a > 0.0) || !(beta_b > 0.0))
            throw ConfigError("GenerativeParams: bad ladder shape parameters");
        if (!(decay >= 0.0 && decay <= 1.0))
            throw ConfigError("GenerativeParams: decay must lie in [0, 1]");
        if (!(U1 > 0.0 && U2 >= U1)) throw ConfigError("GenerativeParams: need 0 < U1 <= U2");
        if (M2 > M1) throw ConfigError("GenerativeParams: need M2 <= M1");
        for (double p : {p1, p2, p3, p4})
            if (!(p >= 0.0 && p <= 1.0))
                throw ConfigError("GenerativeParams: event probabilities must lie in [0, 1]");
    }
};

// ---------------------------------------------------------------------------
// Taker flow and the event grid
// ---------------------------------------------------------------------------

// Poisson arrival times on [0, horizon): i.i.d. exponential gaps.
inline std::vector<double> sample_poisson_flow(double intensity, double horizon,
                                               std::mt19937_64& rng) {
    if (!(intensity > 0.0) || !(horizon > 0.0))
        throw std::invalid_argument("sample_poisson_flow: intensity and horizon must be positive");
    std::exponential_distribution<double> gap(intensity);
    std::vector<double> times;
    double t = gap(rng);
    while (t < horizon) {
        times.push_back(t);
        t += gap(rng);
    }
    return times;
}

// Decision-time grid for the continuous phase: starts at 0, advances at least
// one unit per step but no further than the first time both sides have traded
// again, and saturates at tau_op - 1 once arrivals run out. Exactly tau_op
// entries come back.
inline std::vector<double> build_time_grid(std::span<const double> buy_arrivals,
                                           std::span<const double> sell_arrivals,
                                           std::int64_t tau_op) {
    if (tau_op < 1) throw std::invalid_argument("build_time_grid: tau_op must be >= 1");
    const double last = static_cast<double>(tau_op - 1);

    auto next_after = [](std::span<const double> arrivals, double t) {
        auto it = std::upper_bound(arrivals.begin(), arrivals.end(), t);
        return it == arrivals.end() ? std::numeric_limits<double>::infinity() : *it;
    };

    std::vector<double> grid(static_cast<std::size_t>(tau_op), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double prev = grid[i - 1];
        if (prev >= last) {
            grid[i] = last;  // clamped tail: nothing left to wait for
            continue;
        }
        const double both = std::max(next_after(buy_arrivals, prev), next_after(sell_arrivals, prev));
        grid[i] = std::min(std::max(prev + 1.0, both), last);
    }
    return grid;
}

// One taker order size: Pareto-tailed, capped, and rounded to a whole number
// of shares (at least one).
inline Shares sample_order_volume(const GenerativeParams& params, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    if (u <= 0.0) u = std::numeric_limits<double>::min();
    const double raw = params.v_m * std::pow(u, -1.0 / params.gamma_m);
    const double capped = std::min(raw, static_cast<double>(params.order_volume_cap));
    return std::max<Shares>(1, round_half_away(capped));
}

// ---------------------------------------------------------------------------
// Book ladders
// ---------------------------------------------------------------------------

inline double sample_beta(double a, double b, std::mt19937_64& rng) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    const double s = x + y;
    return s > 0.0 ? x / s : 0.0;
}

// Fresh one-sided ladder: Beta-distributed touch volume, geometric decay per
// level (applied to the continuous value, rounded per level), cut at the
// first empty level or at the book depth bound.
inline LobLadder sample_lob_ladder(const GenerativeParams& params, const TickGrid& grid,
                                   std::mt19937_64& rng) {
    LobLadder ladder;
    ladder.volumes.assign(static_cast<std::size_t>(grid.max_depth), 0);
    double c = params.V_inf * sample_beta(params.beta_a, params.beta_b, rng);
    for (std::size_t j = 0; j < ladder.volumes.size(); ++j) {
        const Shares v = round_half_away(c);
        if (v <= 0) break;
        ladder.volumes[j] = std::min(v, grid.max_volume);
        c *= params.decay;
    }
    return ladder;
}

// ---------------------------------------------------------------------------
// Auction-phase events
// ---------------------------------------------------------------------------

// Exogenous auction book. Cancelled taker orders keep their slot with volume
// zero, so arrival indices stay stable; cancelled maker curves are removed.
struct AuctionBook {
    std::vector<SupplyCurve> curves;
    std::vector<Shares> taker_sell;  // market orders selling into the auction
    std::vector<Shares> taker_buy;

    double net_market_volume() const {
        double net = 0.0;
        for (Shares v : taker_sell) net += static_cast<double>(v);
        for (Shares v : taker_buy) net -= static_cast<double>(v);
        return net;
    }

    double total_slope() const {
        double s = 0.0;
        for (const auto& c : curves) s += c.slope;
        return s;
    }
};

struct AuctionEvent {
    enum class Kind : std::uint8_t {
        maker_add,
        maker_cancel,
        taker_sell,
        taker_buy,
        taker_cancel_sell,
        taker_cancel_buy,
    };
    Kind kind;
    double slope = 0.0;      // maker_add
    double ref_price = 0.0;  // maker_add
    Shares volume = 0;       // taker arrivals
    std::int64_t index = -1; // cancellations: victim slot
};

// One auction step of exogenous activity, applied in a fixed order so the
// stream is reproducible draw for draw: maker arrival, maker cancel, taker
// arrival per side (sell first), taker cancel.
inline std::vector<AuctionEvent> step_auction_flow(const GenerativeParams& params,
                                                   const TickGrid& grid,
                                                   AuctionBook& book,
                                                   double mid_at_open,
                                                   std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<AuctionEvent> events;

    if (unif(rng) < params.p1 &&
        static_cast<std::int64_t>(book.curves.size()) < grid.max_participants) {
        std::uniform_real_distribution<double> slope_dist(params.U1, params.U2);
        std::uniform_int_distribution<std::int64_t> offset(params.M2, params.M1);
        const double slope = slope_dist(rng);
        const double ref = grid.snap_price(mid_at_open + grid.alpha * static_cast<double>(offset(rng)));
        book.curves.push_back(SupplyCurve{slope, ref, Clamp::two_sided});
        events.push_back({AuctionEvent::Kind::maker_add, slope, ref, 0, -1});
    }

    if (unif(rng) < params.p2 && !book.curves.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, book.curves.size() - 1);
        const std::size_t victim = pick(rng);
        book.curves.erase(book.curves.begin() + static_cast<std::ptrdiff_t>(victim));
        events.push_back({AuctionEvent::Kind::maker_cancel, 0.0, 0.0, 0,
                          static_cast<std::int64_t>(victim)});
    }

    auto taker_side = [&](std::vector<Shares>& side, AuctionEvent::Kind kind) {
        if (unif(rng) < params.p3 &&
            static_cast<std::int64_t>(side.size()) < grid.max_participants) {
            const Shares v = sample_order_volume(params, rng);
            side.push_back(v);
            events.push_back({kind, 0.0, 0.0, v, -1});
        }
    };
    taker_side(book.taker_sell, AuctionEvent::Kind::taker_sell);
    taker_side(book.taker_buy, AuctionEvent::Kind::taker_buy);

    if (unif(rng) < params.p4) {
        // Cancel one live taker order, uniformly across both sides.
        std::vector<std::pair<bool, std::size_t>> live;  // (is_sell, slot)
        for (std::size_t i = 0; i < book.taker_sell.size(); ++i)
            if (book.taker_sell[i] > 0) live.emplace_back(true, i);
        for (std::size_t i = 0; i < book.taker_buy.size(); ++i)
            if (book.taker_buy[i] > 0) live.emplace_back(false, i);
        if (!live.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
            const auto [is_sell, slot] = live[pick(rng)];
            if (is_sell) {
                book.taker_sell[slot] = 0;
                events.push_back({AuctionEvent::Kind::taker_cancel_sell, 0.0, 0.0, 0,
                                  static_cast<std::int64_t>(slot)});
            } else {
                book.taker_buy[slot] = 0;
                events.push_back({AuctionEvent::Kind::taker_cancel_buy, 0.0, 0.0, 0,
                                  static_cast<std::int64_t>(slot)});
            }
        }
    }
    return events;
}

// ---------------------------------------------------------------------------
// Mid-price models
// ---------------------------------------------------------------------------

struct RoughHestonParams {
    double S0 = 100.0;
    double V0 = 0.02;      // annualised
    double theta = 0.04;
    double lambda = 0.3;
    double nu = 0.3;
    double hurst = 0.1;
    double rho = -0.7;
    double seconds_per_step = 1.0;

    // Annualised parameters against a step expressed as a fraction of the
    // trading year (252 days of 6.5 hours).
    double dt_years() const { return seconds_per_step / (252.0 * 6.5 * 3600.0); }

    void validate() const {
        if (!(S0 > 0.0)) throw ConfigError("RoughHestonParams: S0 must be positive");
        if (!(V0 >= 0.0) || !(theta >= 0.0))
            throw ConfigError("RoughHestonParams: variance levels must be nonnegative");
        if (!(nu >= 0.0)) throw ConfigError("RoughHestonParams: nu must be nonnegative");
        if (!(hurst > 0.0 && hurst < 0.5))
            throw ConfigError("RoughHestonParams: hurst must lie in (0, 0.5)");
        if (!(rho >= -1.0 && rho <= 1.0))
            throw ConfigError("RoughHestonParams: rho must lie in [-1, 1]");
        if (!(seconds_per_step > 0.0))
            throw ConfigError("RoughHestonParams: seconds_per_step must be positive");
    }
};

// Euler scheme for a rough-volatility log price: the spot variance is a
// power-kernel moving average of its own past innovations (floored at zero
// wherever it enters a square root or drift), the log price diffuses with
// correlated noise. Returns n_steps + 1 prices.
inline std::vector<double> simulate_rough_heston(const RoughHestonParams& params,
                                                 std::int64_t n_steps,
                                                 std::mt19937_64& rng) {
    params.validate();
    if (n_steps < 1) throw std::invalid_argument("simulate_rough_heston: need at least one step");
    const double dt = params.dt_years();
    const double sqrt_dt = std::sqrt(dt);
    const double rho_perp = std::sqrt(1.0 - params.rho * params.rho);

    const auto n = static_cast<std::size_t>(n_steps);
    std::vector<double> kernel(n + 1, 0.0);
    const double gamma_h = std::tgamma(params.hurst + 0.5);
    for (std::size_t j = 1; j <= n; ++j)
        kernel[j] = std::pow(static_cast<double>(j) * dt, params.hurst - 0.5) / gamma_h;

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> prices(n + 1, 0.0);
    std::vector<double> shocks(n, 0.0);  // variance innovations, one per step
    prices[0] = params.S0;

    double y = std::log(params.S0);
    double v = params.V0;
    for (std::size_t k = 0; k < n; ++k) {
        const double v_plus = std::max(v, 0.0);
        const double vol = std::sqrt(v_plus);
        const double db = sqrt_dt * gauss(rng);
        const double db_perp = sqrt_dt * gauss(rng);

        y += -0.5 * v_plus * dt + vol * (params.rho * db + rho_perp * db_perp);
        prices[k + 1] = std::exp(y);

        shocks[k] = (params.theta - params.lambda * v_plus) * dt + params.nu * vol * db;
        double acc = params.V0;
        for (std::size_t i = 0; i <= k; ++i)
            if (shocks[i] != 0.0) acc += kernel[k + 1 - i] * shocks[i];
        v = acc;
    }
    return prices;
}

// Raw (timestamp, mid) rows from a "timestamp,mid" CSV; timestamps must be
// nondecreasing and mids positive. Errors carry the offending row number.
inline std::vector<std::pair<double, double>> load_mid_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("load_historical_mid: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw IngestError("load_historical_mid: empty file " + path);
    auto strip = [](std::string s) {
        s.erase(s.find_last_not_of(" \t\r\n") + 1);
        s.erase(0, s.find_first_not_of(" \t\r\n"));
        return s;
    };
    if (strip(line) != "timestamp,mid")
        throw IngestError("load_historical_mid: expected header 'timestamp,mid', got '" + strip(line) + "'");

    std::vector<std::pair<double, double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        std::istringstream ls(line);
        std::string ts_str, mid_str;
        if (!std::getline(ls, ts_str, ',') || !std::getline(ls, mid_str))
            throw IngestError("load_historical_mid: malformed row " + std::to_string(line_no));
        double ts = 0.0;
        double mid = 0.0;
        try {
            std::size_t used = 0;
            ts = std::stod(strip(ts_str), &used);
            mid = std::stod(strip(mid_str), &used);
        } catch (const std::exception&) {
            throw IngestError("load_historical_mid: non-numeric value at row " + std::to_string(line_no));
        }
        if (!rows.empty() && ts < rows.back().first)
            throw IngestError("load_historical_mid: timestamps decrease at row " + std::to_string(line_no));
        if (!(mid > 0.0))
            throw IngestError("load_historical_mid: nonpositive mid at row " + std::to_string(line_no));
        rows.emplace_back(ts, mid);
    }
    if (rows.empty()) throw IngestError("load_historical_mid: no data rows in " + path);
    return rows;
}

// Historical mids carried forward onto the requested grid times and snapped
// to the price grid.
inline std::vector<double> load_historical_mid(const std::string& path,
                                               std::span<const double> grid_times,
                                               const TickGrid& grid) {
    const auto rows = load_mid_rows(path);
    std::vector<double> out;
    out.reserve(grid_times.size());
    for (double t : grid_times) {
        if (t < rows.front().first)
            throw IngestError("load_historical_mid: grid time before first observation");
        auto it = std::upper_bound(rows.begin(), rows.end(), t,
                                   [](double v, const auto& r) { return v < r.first; });
        out.push_back(grid.snap_price((it - 1)->second));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pre-generated per-episode stream
// ---------------------------------------------------------------------------

struct TakerBatch {
    std::vector<Shares> volumes;
    Shares total() const {
        Shares s = 0;
        for (Shares v : volumes) s += v;
        return s;
    }
};

struct AuctionSnapshot {
    AuctionBook book;
    std::vector<AuctionEvent> events;  // what happened entering this step
};

// Everything random about one episode, generated up front in a fixed draw
// order so a seed pins the session bit for bit. The mid path is supplied by
// the price model (simulated or historical) and is part of the stream.
struct MarketEventStream {
    std::vector<double> grid;                 // decision times, size tau_op
    std::vector<TakerBatch> buy_flow;         // per continuous step, hits the asks
    std::vector<TakerBatch> sell_flow;        // per continuous step, hits the bids
    std::vector<LobLadder> ask_ladders;       // per continuous step
    std::vector<LobLadder> bid_ladders;
    std::vector<double> mid;                  // on-grid mid per continuous step
    std::vector<AuctionSnapshot> auction;     // per auction trading step
    double mid_at_open = 0.0;                 // last continuous mid, the auction anchor
};

// `mid_path` must provide at least tau_op values (one per continuous step).
inline MarketEventStream generate_stream(const GenerativeParams& params, const TickGrid& grid,
                                         std::span<const double> mid_path,
                                         std::mt19937_64& rng) {
    params.validate();
    grid.validate();
    if (static_cast<std::int64_t>(mid_path.size()) < params.tau_op)
        throw std::invalid_argument("generate_stream: mid path shorter than the continuous phase");

    MarketEventStream s;
    const auto horizon = static_cast<double>(params.tau_op);
    const std::vector<double> buy_times = sample_poisson_flow(params.lambda0, horizon, rng);
    const std::vector<double> sell_times = sample_poisson_flow(params.lambda0, horizon, rng);
    s.grid = build_time_grid(buy_times, sell_times, params.tau_op);

    auto batch_volumes = [&](const std::vector<double>& times) {
        std::vector<TakerBatch> batches(s.grid.size());
        std::size_t next = 0;
        for (std::size_t i = 0; i < s.grid.size(); ++i) {
            const double from = i == 0 ? -1.0 : s.grid[i - 1];
            const double to = s.grid[i];
            while (next < times.size() && times[next] <= to) {
                if (times[next] > from) batches[i].volumes.push_back(sample_order_volume(params, rng));
                ++next;
            }
        }
        return batches;
    };
    s.buy_flow = batch_volumes(buy_times);
    s.sell_flow = batch_volumes(sell_times);

    const auto steps = static_cast<std::size_t>(params.tau_op);
    s.ask_ladders.reserve(steps);
    s.bid_ladders.reserve(steps);
    s.mid.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        s.ask_ladders.push_back(sample_lob_ladder(params, grid, rng));
        s.bid_ladders.push_back(sample_lob_ladder(params, grid, rng));
        s.mid.push_back(grid.snap_price(mid_path[i]));
    }
    s.mid_at_open = s.mid.back();

    AuctionBook book;
    s.auction.reserve(static_cast<std::size_t>(params.auction_steps()));
    for (std::int64_t j = 0; j < params.auction_steps(); ++j) {
        auto events = step_auction_flow(params, grid, book, s.mid_at_open, rng);
        s.auction.push_back(AuctionSnapshot{book, std::move(events)});
    }
    return s;
}

// ---------------------------------------------------------------------------
// Benchmark calibration
// ---------------------------------------------------------------------------

struct AsCalibration {
    double A = 0.0;      // fill intensity at the touch
    double K = 0.0;      // impact coefficient: K * (price move) = ln(order size)
    double k = 0.0;      // intensity decay per unit of currency (alpha * K)
    double sigma = 0.0;  // std dev of one-step mid increments
};

// Impact regression: sample ladders, walk simulated order sizes through them
// and regress ln(size) on the induced best-price move (no intercept). The
// fill intensity comes straight from the flow and size parameters.
inline AsCalibration calibrate_as(const GenerativeParams& params, const TickGrid& grid,
                                  std::int64_t n_samples, std::span<const double> mid_path,
                                  std::mt19937_64& rng) {
    if (n_samples < 1) throw std::invalid_argument("calibrate_as: need at least one sample");
    double num = 0.0;
    double den = 0.0;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        const LobLadder ladder = sample_lob_ladder(params, grid, rng);
        const Shares q = sample_order_volume(params, rng);
        const std::int64_t depth = ladder.depth();  // first empty level
        if (depth <= 1) continue;                   // empty book, no impact reading
        Shares remaining = q;
        std::int64_t new_best = depth;              // if the walk clears the book
        for (std::int64_t lvl = 1; lvl < depth; ++lvl) {
            remaining -= ladder.level(lvl);
            if (remaining < 0) {
                new_best = lvl;  // partial fill leaves this level standing
                break;
            }
            if (remaining == 0) {
                new_best = lvl + 1;
                break;
            }
        }
        const double dp = grid.alpha * static_cast<double>(new_best - 1);
        const double lq = std::log(static_cast<double>(q));
        num += dp * lq;
        den += dp * dp;
    }
    if (!(den > 0.0))
        throw CalibrationError("calibrate_as: no sampled order ever moved the best price");

    AsCalibration out;
    out.A = params.lambda0 / params.gamma_m;
    out.K = num / den;
    out.k = grid.alpha * out.K;

    if (mid_path.size() >= 2) {
        double mean = 0.0;
        const std::size_t n = mid_path.size() - 1;
        std::vector<double> inc(n);
        for (std::size_t i = 0; i < n; ++i) {
            inc[i] = mid_path[i + 1] - mid_path[i];
            mean += inc[i];
        }
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double d : inc) ss += (d - mean) * (d - mean);
        out.sigma = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    }
    return out;
}

}  // namespace auctionmm
