#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "auctionmm/benchmarks.hpp"
#include "auctionmm/eval.hpp"

using namespace auctionmm;
using Catch::Matchers::ContainsSubstring;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("eval_" + name + ".txt") {}
    ~TempFile() { std::remove(path.c_str()); }
};

EvalReport sample_report() {
    EvalReport r;
    r.n_episodes = 100;
    r.seed = 42;
    r.symbol = "SPY";
    r.sigma_hat = 1.25e-4;
    PolicyStats a;
    a.name = "twap";
    a.mean_return = 4592.5;
    a.std_return = 12.75;
    a.median_return = 4600.0;
    a.mean_final_inventory = 3.5;
    a.mean_clob_reward = 4000.0;
    a.mean_auction_reward = 592.5;
    a.mean_terminal_reward = 0.0;
    a.mean_discounted_return = 1203.625;
    PolicyStats b;
    b.name = "nfq";
    b.mean_return = 12169.2;
    b.std_return = -0.0;
    b.median_return = 12170.0;
    b.mean_final_inventory = -1.25;
    b.mean_clob_reward = 12000.0;
    b.mean_auction_reward = 100.2;
    b.mean_terminal_reward = 69.0;
    b.mean_discounted_return = 3301.5;
    r.policies = {a, b};
    return r;
}

}  // namespace

TEST_CASE("relative improvement") {
    CHECK(relative_improvement(12169.2, 9411.1) == Catch::Approx(29.3).margin(0.05));
    CHECK(relative_improvement(12169.2, 4592.5) == Catch::Approx(165.0).margin(0.05));
    CHECK(relative_improvement(7.5, 7.5) == 0.0);
    CHECK(relative_improvement(-5.0, -10.0) == Catch::Approx(50.0));  // abs denominator
}

TEST_CASE("relative volatility of a mid path") {
    SECTION("hand-computed two-increment path") {
        const std::vector<double> mids = {100.0, 101.0, 101.0};
        // increments {0.01, 0}: sample std = 0.01 / sqrt(2)
        CHECK(relative_volatility(mids) == Catch::Approx(0.01 / std::sqrt(2.0)));
    }
    SECTION("degenerate paths") {
        CHECK(relative_volatility(std::vector<double>{}) == 0.0);
        CHECK(relative_volatility(std::vector<double>{100.0}) == 0.0);
        CHECK(relative_volatility(std::vector<double>(50, 100.0)) == 0.0);  // flat
        const std::vector<double> with_zero = {0.0, 100.0, 101.0};
        CHECK(relative_volatility(with_zero) == 0.0);  // zero mid skipped, one left
    }
}

TEST_CASE("report files") {
    SECTION("round trip preserves every field") {
        const EvalReport r = sample_report();
        TempFile file("roundtrip");
        write_report(file.path, r);
        const EvalReport back = read_report(file.path);
        CHECK(back.n_episodes == r.n_episodes);
        CHECK(back.seed == r.seed);
        CHECK(back.symbol == r.symbol);
        CHECK(back.sigma_hat == r.sigma_hat);
        REQUIRE(back.policies.size() == r.policies.size());
        for (std::size_t i = 0; i < r.policies.size(); ++i) {
            const PolicyStats& want = r.policies[i];
            const PolicyStats& got = back.policies[i];
            CHECK(got.name == want.name);
            CHECK(got.mean_return == want.mean_return);
            CHECK(got.std_return == want.std_return);
            CHECK(got.median_return == want.median_return);
            CHECK(got.mean_final_inventory == want.mean_final_inventory);
            CHECK(got.mean_clob_reward == want.mean_clob_reward);
            CHECK(got.mean_auction_reward == want.mean_auction_reward);
            CHECK(got.mean_terminal_reward == want.mean_terminal_reward);
            CHECK(got.mean_discounted_return == want.mean_discounted_return);
        }
    }

    SECTION("an empty symbol writes and reads as a dash") {
        EvalReport r = sample_report();
        r.symbol.clear();
        TempFile file("nosymbol");
        write_report(file.path, r);
        CHECK(read_report(file.path).symbol.empty());
    }

    SECTION("ingestion failures") {
        CHECK_THROWS_AS(read_report("eval_missing_file.txt"), IngestError);

        TempFile junk("junk");
        std::ofstream(junk.path) << "not a report\n";
        CHECK_THROWS_AS(read_report(junk.path), IngestError);

        TempFile truncated("truncated");
        std::ofstream(truncated.path) << "auctionmm-eval-report v1\nn_episodes 5\n";
        CHECK_THROWS_AS(read_report(truncated.path), IngestError);

        TempFile empty_rows("norows");
        write_report(empty_rows.path, EvalReport{});
        CHECK_THROWS_AS(read_report(empty_rows.path), IngestError);

        TempFile malformed("malformed");
        {
            EvalReport r = sample_report();
            write_report(malformed.path, r);
            std::ofstream app(malformed.path, std::ios::app);
            app << "broken not-a-number\n";
        }
        CHECK_THROWS_AS(read_report(malformed.path), IngestError);
    }
}

TEST_CASE("common-random-number evaluation") {
    SessionConfig session;
    const HistoricalMidModel model(std::vector<double>(120, 100.0));

    SECTION("the null policy collapses to the inventory penalty") {
        NullPolicy null;
        std::vector<std::pair<std::string, Policy*>> ps = {{"null", &null}};
        const EvalReport r = evaluate(ps, session, model, 5, 11);
        REQUIRE(r.policies.size() == 1);
        const PolicyStats& s = r.policies[0];
        CHECK(s.mean_return == Catch::Approx(-5000.0));
        CHECK(s.median_return == Catch::Approx(-5000.0));
        CHECK(s.std_return == Catch::Approx(0.0).margin(1e-9));
        CHECK(s.mean_final_inventory == Catch::Approx(100.0));
        CHECK(s.mean_clob_reward == 0.0);
        CHECK(s.mean_auction_reward == 0.0);
        CHECK(s.mean_terminal_reward == Catch::Approx(-5000.0));
        CHECK(s.mean_discounted_return ==
              Catch::Approx(-5000.0 * std::pow(0.99, 150)));
    }

    SECTION("the same policy listed twice gets identical statistics") {
        TwapPolicy t1(119), t2(119);
        std::vector<std::pair<std::string, Policy*>> ps = {{"a", &t1}, {"b", &t2}};
        const EvalReport r = evaluate(ps, session, model, 4, 29);
        REQUIRE(r.policies.size() == 2);
        CHECK(r.policies[0].mean_return == r.policies[1].mean_return);
        CHECK(r.policies[0].std_return == r.policies[1].std_return);
        CHECK(r.policies[0].median_return == r.policies[1].median_return);
        CHECK(r.policies[0].mean_final_inventory == r.policies[1].mean_final_inventory);
    }

    SECTION("separate runs with one seed agree and the reward split adds up") {
        AsParams params;
        AsPolicy as1(params), as2(params);
        RandomGridPolicy rnd;
        std::vector<std::pair<std::string, Policy*>> first = {{"as", &as1}, {"rnd", &rnd}};
        std::vector<std::pair<std::string, Policy*>> second = {{"as", &as2}};
        const EvalReport ra = evaluate(first, session, model, 4, 99);
        const EvalReport rb = evaluate(second, session, model, 4, 99);
        CHECK(ra.policies[0].mean_return == rb.policies[0].mean_return);  // CRN contract
        for (const PolicyStats& p : ra.policies)
            CHECK(p.mean_clob_reward + p.mean_auction_reward + p.mean_terminal_reward ==
                  Catch::Approx(p.mean_return).margin(1e-9));
    }

    SECTION("at least one episode is required") {
        NullPolicy null;
        std::vector<std::pair<std::string, Policy*>> ps = {{"null", &null}};
        CHECK_THROWS_AS(evaluate(ps, session, model, 0, 1), ConfigError);
    }
}

TEST_CASE("pairwise comparison table") {
    const EvalReport r = sample_report();
    const std::string table = compare_table(r);

    CHECK_THAT(table, ContainsSubstring("Metric\ttwap\tnfq"));
    CHECK_THAT(table, ContainsSubstring("Mean Return\t4592.5\t12169.2"));
    CHECK_THAT(table, ContainsSubstring("Relative Improvements (Mean Return)"));
    CHECK_THAT(table, ContainsSubstring("+165.0%"));  // nfq over twap
    // the auction column folds the clearing step in: 100.2 + 69.0
    CHECK_THAT(table, ContainsSubstring("Mean Auction Reward\t592.5\t169.2"));
    CHECK_THAT(table, ContainsSubstring("Mean Final Inventory\t3.5\t-1.2"));

    SECTION("equal means read as zero improvement") {
        EvalReport same = r;
        same.policies[1].mean_return = same.policies[0].mean_return;
        CHECK_THAT(compare_table(same), ContainsSubstring("+0.0%"));
    }
}

TEST_CASE("per-symbol comparison table") {
    EvalReport spy = sample_report();
    PolicyStats as;
    as.name = "as";
    as.mean_return = 9411.1;
    spy.policies.insert(spy.policies.begin(), as);  // as, twap, nfq(last)

    EvalReport qqq = spy;
    qqq.symbol = "QQQ";
    qqq.sigma_hat = 3.5e-4;
    for (auto& p : qqq.policies) p.mean_return *= 0.5;

    const std::vector<EvalReport> reports = {spy, qqq};
    const std::string table = compare_symbols_table(reports);

    CHECK_THAT(table, ContainsSubstring("Symbol\tsigma_hat\tas\ttwap\tnfq\t"
                                        "Imp. vs as\tImp. vs twap"));
    CHECK_THAT(table, ContainsSubstring("SPY\t1.25e-04"));
    CHECK_THAT(table, ContainsSubstring("QQQ\t3.50e-04"));
    CHECK_THAT(table, ContainsSubstring("+29.3%"));   // last policy vs as
    CHECK_THAT(table, ContainsSubstring("+165.0%"));  // last policy vs twap
    CHECK_THAT(table, ContainsSubstring("Mean\t"));   // aggregate row for >1 symbols

    SECTION("missing baselines print placeholders") {
        EvalReport bare = sample_report();  // no "as" policy
        const std::vector<EvalReport> one = {bare};
        const std::string t = compare_symbols_table(one);
        CHECK_THAT(t, ContainsSubstring("\t-\t"));
        CHECK_THAT(t, !ContainsSubstring("Mean\t"));  // single report: no mean row
    }
}
