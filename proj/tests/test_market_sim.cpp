#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "auctionmm/market_sim.hpp"

using namespace auctionmm;

namespace {

struct TempCsv {
    std::string path;
    explicit TempCsv(const std::string& name, const std::string& content)
        : path("mktsim_" + name + ".csv") {
        std::ofstream out(path);
        out << content;
    }
    ~TempCsv() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("poisson taker flow") {
    std::mt19937_64 rng(11);

    SECTION("paths are strictly increasing inside the horizon") {
        for (int i = 0; i < 50; ++i) {
            const auto times = sample_poisson_flow(1.0, 120.0, rng);
            for (std::size_t j = 0; j < times.size(); ++j) {
                REQUIRE(times[j] > 0.0);
                REQUIRE(times[j] < 120.0);
                if (j) REQUIRE(times[j] > times[j - 1]);
            }
        }
    }

    SECTION("count matches the intensity") {
        double total = 0.0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) total += static_cast<double>(sample_poisson_flow(1.0, 120.0, rng).size());
        const double mean = total / n;
        const double three_sigma = 3.0 * std::sqrt(120.0 / n);
        CHECK(std::abs(mean - 120.0) < three_sigma);
    }

    SECTION("vanishing intensity gives an empty path") {
        CHECK(sample_poisson_flow(1e-9, 120.0, rng).empty());
    }

    SECTION("invalid parameters throw") {
        CHECK_THROWS_AS(sample_poisson_flow(0.0, 120.0, rng), std::invalid_argument);
        CHECK_THROWS_AS(sample_poisson_flow(1.0, 0.0, rng), std::invalid_argument);
    }
}

TEST_CASE("decision-time grid") {
    SECTION("dense two-sided arrivals advance one unit per step") {
        std::vector<double> arr;
        for (int i = 0; i < 120; ++i) arr.push_back(i + 0.5);
        const auto grid = build_time_grid(arr, arr, 120);
        REQUIRE(grid.size() == 120);
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK(grid[i] == Catch::Approx(static_cast<double>(i)));
    }

    SECTION("exhausted arrivals clamp to the final step time") {
        const std::vector<double> arr = {0.5};
        const auto grid = build_time_grid(arr, arr, 120);
        REQUIRE(grid.size() == 120);
        CHECK(grid[0] == 0.0);
        CHECK(grid[1] == 1.0);  // the lone arrival feeds one more step
        for (std::size_t i = 2; i < grid.size(); ++i) CHECK(grid[i] == 119.0);
    }

    SECTION("grid is nondecreasing and ends at the last step time") {
        std::mt19937_64 rng(5);
        for (int i = 0; i < 100; ++i) {
            const auto buys = sample_poisson_flow(1.0, 120.0, rng);
            const auto sells = sample_poisson_flow(1.0, 120.0, rng);
            const auto grid = build_time_grid(buys, sells, 120);
            REQUIRE(grid.size() == 120);
            REQUIRE(grid.back() == 119.0);
            for (std::size_t j = 1; j < grid.size(); ++j) REQUIRE(grid[j] >= grid[j - 1]);
        }
    }
}

TEST_CASE("taker order sizes") {
    GenerativeParams params;
    std::mt19937_64 rng(17);

    SECTION("support is the capped integer range") {
        for (int i = 0; i < 10000; ++i) {
            const Shares v = sample_order_volume(params, rng);
            REQUIRE(v >= 2);  // scale parameter 2 rounds no lower
            REQUIRE(v <= 30);
        }
    }

    SECTION("empirical mean matches the exact rounded-tail sum") {
        // After capping at V and rounding, the size distribution is discrete;
        // its mean follows from the Pareto tail P(Z > x) = (v_m/x)^gamma.
        auto cdf = [&](double x) { return 1.0 - std::pow(params.v_m / x, params.gamma_m); };
        double oracle = 2.0 * cdf(2.5);
        for (int k = 3; k <= 29; ++k)
            oracle += static_cast<double>(k) * (cdf(k + 0.5) - cdf(k - 0.5));
        oracle += 30.0 * (1.0 - cdf(29.5));

        double total = 0.0;
        const int n = 1000000;
        for (int i = 0; i < n; ++i) total += static_cast<double>(sample_order_volume(params, rng));
        const double mean = total / n;
        CHECK(std::abs(mean - oracle) / oracle < 0.01);
    }

    SECTION("a cap at the scale parameter collapses the distribution") {
        GenerativeParams tight = params;
        tight.order_volume_cap = 2;
        for (int i = 0; i < 1000; ++i) REQUIRE(sample_order_volume(tight, rng) == 2);
    }
}

TEST_CASE("book ladders") {
    GenerativeParams params;
    TickGrid grid;
    std::mt19937_64 rng(23);

    SECTION("nonincreasing, bounded, and cut at the first empty level") {
        for (int i = 0; i < 2000; ++i) {
            const LobLadder ladder = sample_lob_ladder(params, grid, rng);
            REQUIRE(ladder.volumes.size() == static_cast<std::size_t>(grid.max_depth));
            bool dead = false;
            for (std::size_t j = 0; j < ladder.volumes.size(); ++j) {
                REQUIRE(ladder.volumes[j] >= 0);
                REQUIRE(ladder.volumes[j] <= 15);  // touch scale bounds every level
                if (j) REQUIRE(ladder.volumes[j] <= ladder.volumes[j - 1]);
                if (dead) REQUIRE(ladder.volumes[j] == 0);
                if (ladder.volumes[j] == 0) dead = true;
            }
        }
    }

    SECTION("geometric decay halves even levels exactly") {
        // With decay 1/2 the continuous value behind an even rounded volume
        // sits within a quarter share of it, so the next level rounds to half.
        for (int i = 0; i < 2000; ++i) {
            const LobLadder ladder = sample_lob_ladder(params, grid, rng);
            for (std::size_t j = 0; j + 1 < ladder.volumes.size(); ++j) {
                const Shares v = ladder.volumes[j];
                if (v > 0 && v % 2 == 0) REQUIRE(ladder.volumes[j + 1] == v / 2);
            }
        }
    }

    SECTION("no decay keeps the ladder flat") {
        GenerativeParams flat = params;
        flat.decay = 1.0;
        for (int i = 0; i < 200; ++i) {
            const LobLadder ladder = sample_lob_ladder(flat, grid, rng);
            for (std::size_t j = 1; j < ladder.volumes.size(); ++j)
                REQUIRE(ladder.volumes[j] == ladder.volumes[0]);
        }
    }
}

TEST_CASE("auction event flow") {
    GenerativeParams params;
    TickGrid grid;
    std::mt19937_64 rng(31);
    const double mid = 100.0;

    SECTION("zero probabilities leave the book untouched") {
        GenerativeParams off = params;
        off.p1 = off.p2 = off.p3 = off.p4 = 0.0;
        AuctionBook book;
        book.curves.push_back({1.0, 100.0, Clamp::two_sided});
        const auto events = step_auction_flow(off, grid, book, mid, rng);
        CHECK(events.empty());
        CHECK(book.curves.size() == 1);
        CHECK(book.taker_sell.empty());
    }

    SECTION("forced maker cancel removes the standing curve") {
        GenerativeParams forced = params;
        forced.p1 = forced.p3 = forced.p4 = 0.0;
        forced.p2 = 1.0;
        AuctionBook book;
        book.curves.push_back({1.0, 100.0, Clamp::two_sided});
        const auto events = step_auction_flow(forced, grid, book, mid, rng);
        REQUIRE(events.size() == 1);
        CHECK(events[0].kind == AuctionEvent::Kind::maker_cancel);
        CHECK(book.curves.empty());
    }

    SECTION("forced arrivals come back in a fixed order with bounded quotes") {
        GenerativeParams forced = params;
        forced.p1 = forced.p3 = 1.0;
        forced.p2 = forced.p4 = 0.0;
        AuctionBook book;
        for (int i = 0; i < 50; ++i) {
            const auto events = step_auction_flow(forced, grid, book, mid, rng);
            REQUIRE(events.size() == 3);
            CHECK(events[0].kind == AuctionEvent::Kind::maker_add);
            CHECK(events[1].kind == AuctionEvent::Kind::taker_sell);
            CHECK(events[2].kind == AuctionEvent::Kind::taker_buy);
            CHECK(std::abs(events[0].ref_price - mid) <= 10.0 * grid.alpha + 1e-12);
            CHECK(events[0].ref_price == grid.snap_price(events[0].ref_price));
            CHECK(events[0].slope >= 0.1);
            CHECK(events[0].slope <= 2.0);
        }
        CHECK(book.curves.size() == 50);
        CHECK(book.taker_sell.size() == 50);
    }

    SECTION("taker cancellation zeroes the volume but keeps the slot") {
        GenerativeParams forced = params;
        forced.p1 = forced.p2 = forced.p4 = 0.0;
        forced.p3 = 1.0;
        AuctionBook book;
        for (int i = 0; i < 3; ++i) step_auction_flow(forced, grid, book, mid, rng);
        REQUIRE(book.taker_sell.size() == 3);
        REQUIRE(book.taker_buy.size() == 3);

        forced.p3 = 0.0;
        forced.p4 = 1.0;
        step_auction_flow(forced, grid, book, mid, rng);
        CHECK(book.taker_sell.size() == 3);
        CHECK(book.taker_buy.size() == 3);
        int zeros = 0;
        for (Shares v : book.taker_sell) zeros += v == 0;
        for (Shares v : book.taker_buy) zeros += v == 0;
        CHECK(zeros == 1);
    }
}

TEST_CASE("rough volatility mid-price model") {
    SECTION("path shape") {
        RoughHestonParams params;
        params.seconds_per_step = 195.0;
        std::mt19937_64 rng(41);
        const auto prices = simulate_rough_heston(params, 500, rng);
        REQUIRE(prices.size() == 501);
        CHECK(prices[0] == 100.0);
        for (double p : prices) REQUIRE(p > 0.0);
    }

    SECTION("degenerate variance gives i.i.d. Gaussian log-returns") {
        RoughHestonParams params;
        params.nu = 0.0;
        params.theta = params.lambda * params.V0;  // drift balances exactly
        params.seconds_per_step = 195.0;
        std::mt19937_64 rng(43);
        const int n = 20000;
        const auto prices = simulate_rough_heston(params, n, rng);
        double mean = 0.0;
        std::vector<double> lr(n);
        for (int i = 0; i < n; ++i) {
            lr[i] = std::log(prices[i + 1] / prices[i]);
            mean += lr[i];
        }
        mean /= n;
        double var = 0.0;
        for (double x : lr) var += (x - mean) * (x - mean);
        var /= n - 1;
        const double expected = params.V0 * params.dt_years();
        CHECK(std::abs(var - expected) / expected < 0.05);
    }

    SECTION("parameter validation") {
        RoughHestonParams params;
        params.hurst = 0.5;
        CHECK_THROWS_AS(params.validate(), ConfigError);
        params = {};
        params.rho = -1.5;
        CHECK_THROWS_AS(params.validate(), ConfigError);
        params = {};
        std::mt19937_64 rng(1);
        CHECK_THROWS_AS(simulate_rough_heston(params, 0, rng), std::invalid_argument);
    }
}

TEST_CASE("historical mid ingestion") {
    TickGrid grid;

    SECTION("carry-forward onto the grid with tick snapping") {
        TempCsv csv("locf", "timestamp,mid\n0,100\n10,101\n");
        std::vector<double> times;
        for (int t = 0; t <= 20; ++t) times.push_back(t);
        const auto mids = load_historical_mid(csv.path, times, grid);
        REQUIRE(mids.size() == 21);
        for (int t = 0; t <= 20; ++t) {
            const double expected = t < 10 ? 100.0 : 101.0;
            CHECK(mids[static_cast<std::size_t>(t)] == Catch::Approx(expected));
            CHECK(grid.price_to_tick(mids[static_cast<std::size_t>(t)]) ==
                  (t < 10 ? 10000 : 10100));
        }
    }

    SECTION("prices snap to the nearest tick") {
        TempCsv csv("snap", "timestamp,mid\n0,100.004\n");
        const std::vector<double> times = {0.0};
        const auto mids = load_historical_mid(csv.path, times, grid);
        CHECK(grid.price_to_tick(mids[0]) == 10000);
    }

    SECTION("ingestion errors carry the offending row") {
        TempCsv bad_header("hdr", "time,price\n0,100\n");
        CHECK_THROWS_AS(load_mid_rows(bad_header.path), IngestError);

        TempCsv decreasing("dec", "timestamp,mid\n0,100\n10,101\n5,102\n");
        CHECK_THROWS_WITH(load_mid_rows(decreasing.path),
                          Catch::Matchers::ContainsSubstring("row 4"));

        TempCsv nonpositive("neg", "timestamp,mid\n0,100\n1,0\n");
        CHECK_THROWS_AS(load_mid_rows(nonpositive.path), IngestError);

        TempCsv empty("empty", "");
        CHECK_THROWS_AS(load_mid_rows(empty.path), IngestError);

        TempCsv header_only("hdronly", "timestamp,mid\n");
        CHECK_THROWS_AS(load_mid_rows(header_only.path), IngestError);

        TempCsv malformed("mal", "timestamp,mid\n0\n");
        CHECK_THROWS_AS(load_mid_rows(malformed.path), IngestError);

        CHECK_THROWS_AS(load_mid_rows("does_not_exist_anywhere.csv"), IngestError);
    }

    SECTION("grid times before the first observation are errors") {
        TempCsv csv("early", "timestamp,mid\n10,100\n");
        const std::vector<double> times = {0.0};
        CHECK_THROWS_AS(load_historical_mid(csv.path, times, grid), IngestError);
    }
}

TEST_CASE("full event streams") {
    GenerativeParams params;
    TickGrid grid;
    const std::vector<double> mid_path(static_cast<std::size_t>(params.tau_op), 100.0);

    SECTION("shape, bounds, and the taker presence property") {
        std::mt19937_64 rng(53);
        const double last = static_cast<double>(params.tau_op - 1);
        for (int s = 0; s < 1000; ++s) {
            const auto stream = generate_stream(params, grid, mid_path, rng);
            REQUIRE(stream.grid.size() == 120);
            REQUIRE(stream.buy_flow.size() == 120);
            REQUIRE(stream.sell_flow.size() == 120);
            REQUIRE(stream.ask_ladders.size() == 120);
            REQUIRE(stream.bid_ladders.size() == 120);
            REQUIRE(stream.mid.size() == 120);
            REQUIRE(stream.auction.size() == 30);
            REQUIRE(stream.mid_at_open == stream.mid.back());

            for (std::size_t i = 1; i < stream.grid.size(); ++i) {
                if (stream.grid[i] < last) {
                    REQUIRE_FALSE(stream.buy_flow[i].volumes.empty());
                    REQUIRE_FALSE(stream.sell_flow[i].volumes.empty());
                }
            }
            for (const auto& flow : {stream.buy_flow, stream.sell_flow})
                for (const auto& batch : flow)
                    for (Shares v : batch.volumes) {
                        REQUIRE(v >= 1);
                        REQUIRE(v <= params.order_volume_cap);
                    }
            for (const auto& snap : stream.auction) {
                REQUIRE(static_cast<std::int64_t>(snap.book.curves.size()) <=
                        grid.max_participants);
                for (const auto& c : snap.book.curves) {
                    REQUIRE(c.ref_price >= 0.0);
                    REQUIRE(c.ref_price <= grid.max_price());
                }
                for (Shares v : snap.book.taker_sell) REQUIRE(v >= 0);
                for (Shares v : snap.book.taker_buy) REQUIRE(v >= 0);
            }
        }
    }

    SECTION("identical seeds give identical streams") {
        std::mt19937_64 a(97), b(97);
        const auto s1 = generate_stream(params, grid, mid_path, a);
        const auto s2 = generate_stream(params, grid, mid_path, b);
        REQUIRE(s1.grid == s2.grid);
        REQUIRE(s1.mid == s2.mid);
        REQUIRE(s1.auction.size() == s2.auction.size());
        for (std::size_t i = 0; i < s1.ask_ladders.size(); ++i) {
            REQUIRE(s1.ask_ladders[i].volumes == s2.ask_ladders[i].volumes);
            REQUIRE(s1.bid_ladders[i].volumes == s2.bid_ladders[i].volumes);
            REQUIRE(s1.buy_flow[i].volumes == s2.buy_flow[i].volumes);
            REQUIRE(s1.sell_flow[i].volumes == s2.sell_flow[i].volumes);
        }
        for (std::size_t j = 0; j < s1.auction.size(); ++j) {
            const auto& b1 = s1.auction[j].book;
            const auto& b2 = s2.auction[j].book;
            REQUIRE(b1.taker_sell == b2.taker_sell);
            REQUIRE(b1.taker_buy == b2.taker_buy);
            REQUIRE(b1.curves.size() == b2.curves.size());
            for (std::size_t c = 0; c < b1.curves.size(); ++c) {
                REQUIRE(b1.curves[c].slope == b2.curves[c].slope);
                REQUIRE(b1.curves[c].ref_price == b2.curves[c].ref_price);
            }
        }
    }
}

TEST_CASE("benchmark constant calibration") {
    GenerativeParams params;
    TickGrid grid;

    SECTION("fill intensity is flow over tail, impact scales by the tick") {
        std::mt19937_64 rng(61);
        const auto cal = calibrate_as(params, grid, 5000, {}, rng);
        CHECK(cal.A == Catch::Approx(0.4));
        CHECK(cal.k == Catch::Approx(grid.alpha * cal.K));
        CHECK(cal.K > 0.0);
        CHECK(cal.sigma == 0.0);  // no mid path supplied
    }

    SECTION("regression reproduced by an independent refit on the same draws") {
        std::mt19937_64 rng(67);
        const auto cal = calibrate_as(params, grid, 2000, {}, rng);

        std::mt19937_64 replay(67);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < 2000; ++i) {
            const LobLadder ladder = sample_lob_ladder(params, grid, replay);
            const Shares q = sample_order_volume(params, replay);
            if (ladder.depth() <= 1) continue;
            // walk the ladder: the new best ask is the first level the order
            // fails to exhaust (one past the last consumed on an exact fill)
            Shares left = q;
            std::int64_t best = ladder.depth();
            for (std::int64_t lvl = 1; lvl < ladder.depth(); ++lvl) {
                left -= ladder.level(lvl);
                if (left <= 0) {
                    best = left < 0 ? lvl : lvl + 1;
                    break;
                }
            }
            const double dp = grid.alpha * static_cast<double>(best - 1);
            num += dp * std::log(static_cast<double>(q));
            den += dp * dp;
        }
        REQUIRE(den > 0.0);
        CHECK(cal.K == Catch::Approx(num / den).epsilon(1e-12));
    }

    SECTION("mid-path dispersion") {
        std::mt19937_64 rng(71);
        const std::vector<double> flat = {100.0, 100.0, 100.0};
        CHECK(calibrate_as(params, grid, 1000, flat, rng).sigma == 0.0);

        const std::vector<double> moving = {100.0, 101.0, 101.0};
        const auto cal = calibrate_as(params, grid, 1000, moving, rng);
        CHECK(cal.sigma == Catch::Approx(std::sqrt(0.5)));
    }

    SECTION("books that never move the best price cannot calibrate") {
        GenerativeParams empty = params;
        empty.V_inf = 0.0;
        std::mt19937_64 rng(73);
        CHECK_THROWS_AS(calibrate_as(empty, grid, 1000, {}, rng), CalibrationError);
    }

    SECTION("identical seeds give identical constants") {
        std::mt19937_64 a(79), b(79);
        const auto c1 = calibrate_as(params, grid, 1000, {}, a);
        const auto c2 = calibrate_as(params, grid, 1000, {}, b);
        CHECK(c1.K == c2.K);
        CHECK(c1.A == c2.A);
    }
}
