#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "auctionmm/core.hpp"

using namespace auctionmm;

TEST_CASE("round_half_away rounds .5 boundaries away from zero") {
    CHECK(round_half_away(0.5) == 1);
    CHECK(round_half_away(-0.5) == -1);
    CHECK(round_half_away(2.4) == 2);
    CHECK(round_half_away(2.5) == 3);
    CHECK(round_half_away(-2.5) == -3);
    CHECK(round_half_away(0.0) == 0);
}

TEST_CASE("tick grid arithmetic") {
    TickGrid g;
    g.validate();
    CHECK(g.price_to_tick(100.004) == 10000);
    CHECK(g.price_to_tick(100.005) == 10001);  // half away from zero
    CHECK(g.tick_to_price(10000) == Catch::Approx(100.0));
    CHECK(g.snap_price(-3.0) == 0.0);
    CHECK(g.snap_price(1e9) == Catch::Approx(g.max_price()));
    CHECK(g.tick_in_range(0));
    CHECK_FALSE(g.tick_in_range(-1));
    CHECK_FALSE(g.tick_in_range(g.max_price_ticks + 1));

    TickGrid bad = g;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("mix_seed separates streams and is deterministic") {
    CHECK(mix_seed(1, 2, 3) == mix_seed(1, 2, 3));
    CHECK(mix_seed(1, 2, 3) != mix_seed(1, 2, 4));
    CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 3));
    CHECK(mix_seed(1, 2, 3) != mix_seed(2, 2, 3));
}

TEST_CASE("supply curve evaluation") {
    CHECK(eval_supply({2.0, 10.0, Clamp::two_sided}, 13.0) == Catch::Approx(6.0));
    CHECK(eval_supply({2.0, 10.0, Clamp::two_sided}, 7.0) == Catch::Approx(-6.0));
    CHECK(eval_supply({2.0, 10.0, Clamp::sell_only}, 7.0) == 0.0);
    CHECK(eval_supply({2.0, 10.0, Clamp::sell_only}, 13.0) == Catch::Approx(6.0));
    CHECK(eval_supply({0.0, 5.0, Clamp::two_sided}, 42.0) == 0.0);

    // Two-sided evaluation is exactly linear.
    const SupplyCurve c{1.7, 12.25, Clamp::two_sided};
    const double p1 = 9.5, p2 = 31.0;
    CHECK(eval_supply(c, p1) + eval_supply(c, p2) - 2.0 * eval_supply(c, 0.5 * (p1 + p2)) ==
          Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("ladder levels, depth and totals") {
    LobLadder ladder{{4, 2, 0, 7}};
    CHECK(ladder.level(1) == 4);
    CHECK(ladder.level(2) == 2);
    CHECK(ladder.level(5) == 0);   // beyond the stored range
    CHECK(ladder.level(0) == 0);   // levels are 1-based
    CHECK(ladder.depth() == 3);    // first empty level
    CHECK(ladder.total() == 13);

    LobLadder full{{1, 1, 1}};
    CHECK(full.depth() == 4);      // no empty level stored: one past the end
    CHECK(LobLadder{}.depth() == 1);
}

TEST_CASE("executed shares formula") {
    TickGrid g;
    const LobLadder ladder{{4, 2, 0, 0}};

    SECTION("frozen substitutions") {
        // Two levels queue 4+2 = 6 shares ahead; 10 incoming leaves 4 for us.
        CHECK(executed_shares(5, 2, 10, ladder, g) == 4);
        CHECK(executed_shares(5, 0, 0, ladder, g) == 0);
        CHECK(executed_shares(3, 1, 100, LobLadder{{4}}, g) == 3);  // capped at posted
        CHECK(executed_shares(5, 2, 6, ladder, g) == 0);            // exactly absorbed
        CHECK(executed_shares(5, 0, 3, ladder, g) == 3);            // at the touch
    }

    SECTION("offsets past the stored ladder block on everything listed") {
        CHECK(executed_shares(5, 10, 20, ladder, g) == 5);  // 20 - 6 = 14, capped
        CHECK(executed_shares(5, 10, 6, ladder, g) == 0);
    }

    SECTION("input validation") {
        CHECK_THROWS_AS(executed_shares(-1, 0, 0, ladder, g), std::invalid_argument);
        CHECK_THROWS_AS(executed_shares(1, -1, 0, ladder, g), std::invalid_argument);
        CHECK_THROWS_AS(executed_shares(1, 0, -1, ladder, g), std::invalid_argument);
        CHECK_THROWS_AS(executed_shares(1, g.max_depth + 1, 0, ladder, g),
                        std::invalid_argument);
    }

    SECTION("monotonicity and range properties") {
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<Shares> vol(0, 40);
        std::uniform_int_distribution<std::int64_t> off(0, 9);
        for (int i = 0; i < 2000; ++i) {
            LobLadder lad;
            std::uniform_int_distribution<int> len(0, 8);
            const int n = len(rng);
            for (int j = 0; j < n; ++j) lad.volumes.push_back(vol(rng) % 12);
            const Shares v = vol(rng);
            const std::int64_t d = off(rng);
            const Shares inc = vol(rng);
            const Shares e = executed_shares(v, d, inc, lad, g);
            REQUIRE(e >= 0);
            REQUIRE(e <= v);
            // nondecreasing in incoming flow
            REQUIRE(executed_shares(v, d, inc + 5, lad, g) >= e);
            // nonincreasing in the level offset
            if (d > 0) REQUIRE(executed_shares(v, d - 1, inc, lad, g) >= e);
        }
    }
}

TEST_CASE("cancellation ledger transitions") {
    CancellationLedger ledger(4);
    REQUIRE(ledger.theta == std::vector<std::uint8_t>{0, 0, 0, 0});

    SECTION("single flip") {
        const std::vector<std::uint8_t> c{0, 1, 0, 0};
        const auto out = apply_cancellations(ledger, c, 4);
        CHECK(out.ledger.theta == std::vector<std::uint8_t>{0, 1, 0, 0});
        CHECK(out.count == 1);
    }

    SECTION("double cancellation is inadmissible") {
        ledger.theta = {0, 1, 0, 0};
        const std::vector<std::uint8_t> c{0, 1, 0, 0};
        CHECK_THROWS_AS(apply_cancellations(ledger, c, 4), InadmissibleAction);
    }

    SECTION("componentwise addition") {
        ledger.theta = {0, 1, 0, 0};
        const std::vector<std::uint8_t> c{1, 0, 0, 1};
        const auto out = apply_cancellations(ledger, c, 4);
        CHECK(out.ledger.theta == std::vector<std::uint8_t>{1, 1, 0, 1});
        CHECK(out.count == 2);
    }

    SECTION("future orders cannot be cancelled") {
        const std::vector<std::uint8_t> c{0, 0, 1, 0};
        CHECK_THROWS_AS(apply_cancellations(ledger, c, 2), InadmissibleAction);
    }

    SECTION("length and bit validation") {
        const std::vector<std::uint8_t> wrong_len{0, 0, 0};
        CHECK_THROWS_AS(apply_cancellations(ledger, wrong_len, 4), InadmissibleAction);
        const std::vector<std::uint8_t> bad_bit{0, 2, 0, 0};
        CHECK_THROWS_AS(apply_cancellations(ledger, bad_bit, 4), InadmissibleAction);
    }

    SECTION("live count looks at past slots only") {
        ledger.theta = {0, 1, 0, 0};
        CHECK(ledger.live_count(3) == 2);
        CHECK(ledger.live_count(0) == 0);
        CHECK(ledger.total_cancelled() == 1);
    }
}

TEST_CASE("auction order history") {
    AuctionAgentHistory h(3);
    REQUIRE(h.trading_steps() == 3);
    REQUIRE(h.slopes.size() == 4);  // fixed length with a zero tail entry

    h.place(2.0, 10.0);
    h.place(1.0, 12.0);
    CHECK(h.placed == 2);
    CHECK(h.live(0));
    CHECK(h.live(1));
    CHECK_FALSE(h.live(2));  // not yet placed

    CHECK(h.supply_at(13.0) == Catch::Approx(2.0 * 3.0 + 1.0 * 1.0));
    CHECK(h.live_linear_slope() == Catch::Approx(3.0));

    h.ledger.theta[0] = 1;
    CHECK_FALSE(h.live(0));
    CHECK(h.supply_at(13.0) == Catch::Approx(1.0));

    h.place(0.0, 11.0);
    CHECK_THROWS_AS(h.place(1.0, 9.0), InadmissibleAction);  // no slot left
}

TEST_CASE("cleared volume of the agent") {
    AuctionAgentHistory h(2);
    h.place(2.0, 10.0);
    CHECK(agent_cleared_volume(h, 13.0) == Catch::Approx(6.0));

    SECTION("cancelled orders drop out") {
        h.place(3.0, 20.0);
        h.ledger.theta[1] = 1;
        CHECK(agent_cleared_volume(h, 8.0) ==
              Catch::Approx(2.0 * (8.0 - 10.0)));  // only the live order
    }

    SECTION("everything cancelled clears nothing") {
        h.ledger.theta[0] = 1;
        CHECK(agent_cleared_volume(h, 42.0) == 0.0);
    }

    SECTION("worked example: one live unit-slope order, one cancelled") {
        AuctionAgentHistory g(2);
        g.place(1.0, 10.0);
        g.place(3.0, 20.0);
        g.ledger.theta[1] = 1;
        CHECK(agent_cleared_volume(g, 8.0) == Catch::Approx(-2.0));
    }
}

TEST_CASE("slope grid check distinguishes learned and benchmark orders") {
    TickGrid g;
    AuctionAgentHistory h(2);
    h.place(2.0 * g.beta, 100.0);                      // on-grid
    h.place(170.0, 100.25, Clamp::sell_only);          // benchmark-style
    CHECK(h.slot_on_grid(0, g));
    CHECK_FALSE(h.slot_on_grid(1, g));
}
