#pragma once

// Evaluation reports: run a set of policies over common-random-number
// episodes, summarize returns per policy, round-trip the summaries through
// plain text files, and lay out the pairwise-improvement and per-symbol
// comparison tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "auctionmm/common.hpp"
#include "auctionmm/mdp.hpp"

namespace auctionmm {

namespace seed_stream_eval {
constexpr std::uint64_t episodes = 7;
}

struct PolicyStats {
    std::string name;
    double mean_return = 0.0;      // undiscounted: clob + auction + terminal
    double std_return = 0.0;
    double median_return = 0.0;
    double mean_final_inventory = 0.0;
    double mean_clob_reward = 0.0;
    double mean_auction_reward = 0.0;   // auction trading steps only
    double mean_terminal_reward = 0.0;  // clearing step
    double mean_discounted_return = 0.0;
};

struct EvalReport {
    std::int64_t n_episodes = 0;
    std::uint64_t seed = 0;
    std::string symbol;      // optional tag for per-symbol tables
    double sigma_hat = 0.0;  // per-step relative mid volatility (historical runs)
    std::vector<PolicyStats> policies;

    const PolicyStats* find(const std::string& name) const {
        for (const auto& p : policies)
            if (p.name == name) return &p;
        return nullptr;
    }
};

inline double relative_improvement(double mean_a, double mean_b) {
    return (mean_a - mean_b) / std::abs(mean_b) * 100.0;
}

// Per-step relative increments of a mid path; the sigma-hat column of the
// per-symbol table.
inline double relative_volatility(std::span<const double> mids) {
    if (mids.size() < 2) return 0.0;
    std::vector<double> rel;
    rel.reserve(mids.size() - 1);
    for (std::size_t i = 0; i + 1 < mids.size(); ++i) {
        if (mids[i] == 0.0) continue;
        rel.push_back((mids[i + 1] - mids[i]) / mids[i]);
    }
    if (rel.size() < 2) return 0.0;
    double mean = 0.0;
    for (double r : rel) mean += r;
    mean /= static_cast<double>(rel.size());
    double ss = 0.0;
    for (double r : rel) ss += (r - mean) * (r - mean);
    return std::sqrt(ss / static_cast<double>(rel.size() - 1));
}

// Evaluate every policy on the identical episode seeds (the e-th episode of
// each policy replays the same market stream).
inline EvalReport evaluate(std::span<const std::pair<std::string, Policy*>> policies,
                           const SessionConfig& session, const MidModel& model,
                           std::int64_t n_episodes, std::uint64_t seed) {
    if (n_episodes < 1) throw ConfigError("evaluate: need at least one episode");
    EvalReport report;
    report.n_episodes = n_episodes;
    report.seed = seed;
    report.policies.reserve(policies.size());

    std::vector<std::uint64_t> episode_seeds(static_cast<std::size_t>(n_episodes));
    for (std::int64_t e = 0; e < n_episodes; ++e)
        episode_seeds[static_cast<std::size_t>(e)] =
            mix_seed(seed, seed_stream_eval::episodes, static_cast<std::uint64_t>(e));

    for (const auto& [name, policy] : policies) {
        PolicyStats stats;
        stats.name = name;
        std::vector<double> returns;
        returns.reserve(episode_seeds.size());
        for (const std::uint64_t es : episode_seeds) {
            const EpisodeResult r = run_episode(*policy, session, model, es);
            returns.push_back(r.total_reward);
            stats.mean_return += r.total_reward;
            stats.mean_final_inventory += r.final_inventory;
            stats.mean_clob_reward += r.continuous_reward;
            stats.mean_auction_reward += r.auction_reward;
            stats.mean_terminal_reward += r.terminal_reward;
            stats.mean_discounted_return += r.discounted_return;
        }
        const double n = static_cast<double>(returns.size());
        stats.mean_return /= n;
        stats.mean_final_inventory /= n;
        stats.mean_clob_reward /= n;
        stats.mean_auction_reward /= n;
        stats.mean_terminal_reward /= n;
        stats.mean_discounted_return /= n;
        if (returns.size() > 1) {
            double ss = 0.0;
            for (double r : returns) ss += (r - stats.mean_return) * (r - stats.mean_return);
            stats.std_return = std::sqrt(ss / (n - 1.0));
        }
        std::sort(returns.begin(), returns.end());
        const std::size_t mid = returns.size() / 2;
        stats.median_return = returns.size() % 2 == 1
                                  ? returns[mid]
                                  : 0.5 * (returns[mid - 1] + returns[mid]);
        report.policies.push_back(std::move(stats));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report files (space-delimited, dot decimals, fixed column order)
// ---------------------------------------------------------------------------

inline void write_report(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw IngestError("write_report: cannot open " + path);
    out << "auctionmm-eval-report v1\n";
    out << "n_episodes " << report.n_episodes << "\n";
    out << "seed " << report.seed << "\n";
    out << "symbol " << (report.symbol.empty() ? "-" : report.symbol) << "\n";
    out << std::setprecision(17);
    out << "sigma_hat " << report.sigma_hat << "\n";
    out << "columns name mean_return std_return median_return mean_final_inventory"
           " mean_clob_reward mean_auction_reward mean_terminal_reward"
           " mean_discounted_return\n";
    for (const auto& p : report.policies) {
        out << p.name << ' ' << p.mean_return << ' ' << p.std_return << ' ' << p.median_return
            << ' ' << p.mean_final_inventory << ' ' << p.mean_clob_reward << ' '
            << p.mean_auction_reward << ' ' << p.mean_terminal_reward << ' '
            << p.mean_discounted_return << "\n";
    }
}

inline EvalReport read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("read_report: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "auctionmm-eval-report v1")
        throw IngestError("read_report: not an eval report: " + path);
    EvalReport report;
    auto expect = [&](const std::string& key) {
        if (!std::getline(in, line)) throw IngestError("read_report: truncated: " + path);
        std::istringstream ls(line);
        std::string k;
        ls >> k;
        if (k != key) throw IngestError("read_report: expected '" + key + "', got '" + k + "'");
        return ls;
    };
    { auto ls = expect("n_episodes"); ls >> report.n_episodes; }
    { auto ls = expect("seed"); ls >> report.seed; }
    {
        auto ls = expect("symbol");
        ls >> report.symbol;
        if (report.symbol == "-") report.symbol.clear();
    }
    { auto ls = expect("sigma_hat"); ls >> report.sigma_hat; }
    if (!std::getline(in, line) || line.rfind("columns ", 0) != 0)
        throw IngestError("read_report: missing columns line in " + path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        PolicyStats p;
        ls >> p.name >> p.mean_return >> p.std_return >> p.median_return >>
            p.mean_final_inventory >> p.mean_clob_reward >> p.mean_auction_reward >>
            p.mean_terminal_reward >> p.mean_discounted_return;
        if (!ls) throw IngestError("read_report: malformed policy row: " + line);
        report.policies.push_back(std::move(p));
    }
    if (report.policies.empty()) throw IngestError("read_report: no policy rows in " + path);
    return report;
}

// ---------------------------------------------------------------------------
// Comparison tables
// ---------------------------------------------------------------------------

namespace detail_eval {
inline std::string fmt1(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << v;
    return s.str();
}
inline std::string fmt_signed_pct(double v) {
    std::ostringstream s;
    s << (v >= 0 ? "+" : "") << std::fixed << std::setprecision(1) << v << "%";
    return s.str();
}
}  // namespace detail_eval

// Metric block plus the pairwise mean-return improvement matrix. The auction
// column folds the clearing step in, so CLOB + Auction = Mean Return.
inline std::string compare_table(const EvalReport& report) {
    using detail_eval::fmt1;
    using detail_eval::fmt_signed_pct;
    std::ostringstream out;
    const auto& ps = report.policies;

    auto row = [&](const std::string& label, auto getter) {
        out << label;
        for (const auto& p : ps) out << '\t' << fmt1(getter(p));
        out << '\n';
    };
    out << "Metric";
    for (const auto& p : ps) out << '\t' << p.name;
    out << '\n';
    row("Mean Return", [](const PolicyStats& p) { return p.mean_return; });
    row("Std Return", [](const PolicyStats& p) { return p.std_return; });
    row("Median Return", [](const PolicyStats& p) { return p.median_return; });
    row("Mean Final Inventory",
        [](const PolicyStats& p) { return p.mean_final_inventory; });
    row("Mean CLOB Reward", [](const PolicyStats& p) { return p.mean_clob_reward; });
    row("Mean Auction Reward",
        [](const PolicyStats& p) { return p.mean_auction_reward + p.mean_terminal_reward; });

    out << "Relative Improvements (Mean Return)\n";
    for (std::size_t b = 0; b + 1 < ps.size(); ++b) {
        out << "vs " << ps[b].name;
        for (std::size_t a = 0; a < ps.size(); ++a) {
            out << '\t';
            if (a > b)
                out << fmt_signed_pct(relative_improvement(ps[a].mean_return, ps[b].mean_return));
        }
        out << '\n';
    }
    return out.str();
}

// Per-symbol layout: one row per report, improvements of the last policy
// against "as" and "twap" columns when present.
inline std::string compare_symbols_table(std::span<const EvalReport> reports) {
    using detail_eval::fmt1;
    using detail_eval::fmt_signed_pct;
    std::ostringstream out;
    out << "Symbol\tsigma_hat";
    if (!reports.empty())
        for (const auto& p : reports.front().policies) out << '\t' << p.name;
    out << "\tImp. vs as\tImp. vs twap\n";

    double sums[2] = {0.0, 0.0};
    std::vector<double> mean_sums(reports.empty() ? 0 : reports.front().policies.size(), 0.0);
    for (const auto& r : reports) {
        out << (r.symbol.empty() ? "-" : r.symbol) << '\t' << std::scientific
            << std::setprecision(2) << r.sigma_hat << std::defaultfloat;
        for (std::size_t i = 0; i < r.policies.size(); ++i) {
            out << '\t' << fmt1(r.policies[i].mean_return);
            if (i < mean_sums.size()) mean_sums[i] += r.policies[i].mean_return;
        }
        const PolicyStats& last = r.policies.back();
        const PolicyStats* as = r.find("as");
        const PolicyStats* twap = r.find("twap");
        if (as) {
            const double imp = relative_improvement(last.mean_return, as->mean_return);
            sums[0] += imp;
            out << '\t' << fmt_signed_pct(imp);
        } else {
            out << "\t-";
        }
        if (twap) {
            const double imp = relative_improvement(last.mean_return, twap->mean_return);
            sums[1] += imp;
            out << '\t' << fmt_signed_pct(imp);
        } else {
            out << "\t-";
        }
        out << '\n';
    }
    if (reports.size() > 1) {
        const double n = static_cast<double>(reports.size());
        out << "Mean\t";
        for (double s : mean_sums) out << '\t' << fmt1(s / n);
        out << '\t' << fmt_signed_pct(sums[0] / n) << '\t' << fmt_signed_pct(sums[1] / n)
            << '\n';
    }
    return out.str();
}

}  // namespace auctionmm
