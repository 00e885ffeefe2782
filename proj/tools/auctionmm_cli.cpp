// Command-line front end: simulate | train | eval | compare | calibrate.
// Every run is pinned by a single seed; file formats are documented in the
// README.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "auctionmm/benchmarks.hpp"
#include "auctionmm/config.hpp"
#include "auctionmm/eval.hpp"
#include "auctionmm/nfq.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace auctionmm;

namespace {

// Seed precedence: --seed flag, else the config's `seed` key, else 1.
std::uint64_t resolve_seed(const Config& cfg, bool flag_set, std::uint64_t flag_value) {
    if (flag_set) return flag_value;
    return static_cast<std::uint64_t>(cfg.get_int("seed", 1));
}

struct LoadedRun {
    Config cfg;
    RunSetup run;
    std::uint64_t seed = 0;
};

LoadedRun load(const std::string& config_path, bool seed_set, std::uint64_t seed_flag) {
    LoadedRun out;
    out.cfg = Config::from_file(config_path);
    out.run = build_run(out.cfg);
    out.seed = resolve_seed(out.cfg, seed_set, seed_flag);
    return out;
}

AsParams calibrated_as_params(const LoadedRun& lr) {
    const SessionConfig& s = lr.run.session;
    const auto samples = lr.cfg.get_int("calib_samples", 5000);
    auto rng = make_rng(lr.seed, seed_stream::benchmark, 0xCA11B);
    const AsCalibration calib = calibrate_as(s.gen, s.grid, samples, {}, rng);
    AsParams p;
    p.A = calib.A;
    p.k = calib.k;
    p.alpha = s.grid.alpha;
    p.T = s.gen.tau_op - 1;
    p.Q = s.gen.initial_inventory;
    p.validate();
    return p;
}

// Net-backed policy that owns its networks (NfqPolicy only borrows them).
class OwnedNetPolicy : public Policy {
  public:
    OwnedNetPolicy(QNet cont, QNet auc)
        : cont_(std::move(cont)), auc_(std::move(auc)), inner_(cont_, auc_) {}
    void begin_episode(std::uint64_t s) override { inner_.begin_episode(s); }
    PolicyDecision decide(const SessionState& st, const EpisodeView& v) override {
        return inner_.decide(st, v);
    }

  private:
    QNet cont_, auc_;
    NfqPolicy inner_;
};

std::unique_ptr<Policy> fresh_net_policy(const SessionConfig& s, std::uint64_t seed) {
    QNet cont(static_cast<std::int64_t>(kContinuousFeatures), s.action_grid.n_continuous());
    QNet auc(static_cast<std::int64_t>(kAuctionFeatures), s.action_grid.n_auction());
    auto rng_c = make_rng(seed, seed_stream::net_init, 0);
    auto rng_a = make_rng(seed, seed_stream::net_init, 1);
    cont.init(rng_c);
    auc.init(rng_a);
    return std::make_unique<OwnedNetPolicy>(std::move(cont), std::move(auc));
}

std::unique_ptr<Policy> checkpoint_policy(const SessionConfig& s, const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.action_grid.n_continuous() != s.action_grid.n_continuous() ||
        ckpt.action_grid.n_auction() != s.action_grid.n_auction())
        throw ConfigError("checkpoint '" + path + "' was trained on a different action grid");
    return std::make_unique<OwnedNetPolicy>(std::move(ckpt.continuous_net),
                                            std::move(ckpt.auction_net));
}

std::unique_ptr<Policy> make_policy(const std::string& name, const LoadedRun& lr) {
    const SessionConfig& s = lr.run.session;
    const double z = lr.cfg.get_double("auction_z", 10.0);
    if (name == "null") return std::make_unique<NullPolicy>();
    if (name == "random") return std::make_unique<RandomGridPolicy>();
    if (name == "twap") return std::make_unique<TwapPolicy>(s.gen.tau_op - 1, z);
    if (name == "as") return std::make_unique<AsPolicy>(calibrated_as_params(lr), z);
    if (name == "initial-nfq") return fresh_net_policy(s, lr.seed);
    if (fs::exists(name)) return checkpoint_policy(s, name);  // checkpoint path
    throw ConfigError("unknown policy '" + name +
                      "' (expected null|random|twap|as|initial-nfq or a checkpoint path)");
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::continuous: return "continuous";
        case Phase::auction: return "auction";
        default: return "cleared";
    }
}

const char* event_kind_name(AuctionEvent::Kind k) {
    switch (k) {
        case AuctionEvent::Kind::maker_add: return "maker_add";
        case AuctionEvent::Kind::maker_cancel: return "maker_cancel";
        case AuctionEvent::Kind::taker_sell: return "taker_sell";
        case AuctionEvent::Kind::taker_buy: return "taker_buy";
        case AuctionEvent::Kind::taker_cancel_sell: return "taker_cancel_sell";
        default: return "taker_cancel_buy";
    }
}

// ---------------------------------------------------------------------------
// simulate: roll episodes under a policy, dump the agent trace and the raw
// market stream.
// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, bool seed_set, std::uint64_t seed_flag,
                 const std::string& out_dir, const std::string& policy_name,
                 std::int64_t episodes) {
    LoadedRun lr = load(config_path, seed_set, seed_flag);
    auto policy = make_policy(policy_name, lr);
    fs::create_directories(out_dir);

    std::ofstream trace(fs::path(out_dir) / "trace.csv");
    std::ofstream events(fs::path(out_dir) / "events.jsonl");
    if (!trace || !events) throw IngestError("simulate: cannot write into " + out_dir);
    trace << "episode,t,phase,inventory,mid,estimate,lob_volume,lob_level,"
             "auction_slope,auction_price,cancelled,reward\n";
    trace << std::setprecision(17);

    EpisodeOptions opts;
    opts.record_trace = true;
    for (std::int64_t e = 0; e < episodes; ++e) {
        const std::uint64_t es =
            mix_seed(lr.seed, seed_stream_eval::episodes, static_cast<std::uint64_t>(e));
        const EpisodeResult r = run_episode(*policy, lr.run.session, *lr.run.model, es, opts);
        for (const TraceRow& row : r.trace) {
            trace << e << ',' << row.t << ',' << phase_name(row.phase) << ',' << row.inventory
                  << ',' << row.mid << ',' << row.estimate << ',' << row.lob_volume << ','
                  << row.lob_level << ',' << row.auction_slope << ',' << row.auction_price << ','
                  << row.cancelled << ',' << row.reward << '\n';
        }

        // Regenerate the market stream exactly as run_episode saw it.
        auto flow_rng = make_rng(es, seed_stream::order_flow);
        const MarketEventStream stream = generate_stream(
            lr.run.session.gen, lr.run.session.grid, lr.run.model->path(es), flow_rng);
        for (std::size_t t = 0; t < stream.mid.size(); ++t) {
            json j;
            j["episode"] = e;
            j["t"] = t;
            j["phase"] = "continuous";
            j["mid"] = stream.mid[t];
            j["buy_volume"] = stream.buy_flow[t].total();
            j["sell_volume"] = stream.sell_flow[t].total();
            j["ask_ladder"] = stream.ask_ladders[t].volumes;
            j["bid_ladder"] = stream.bid_ladders[t].volumes;
            events << j.dump() << '\n';
        }
        for (std::size_t a = 0; a < stream.auction.size(); ++a) {
            json j;
            j["episode"] = e;
            j["t"] = stream.mid.size() + a;
            j["phase"] = "auction";
            json evs = json::array();
            for (const AuctionEvent& ev : stream.auction[a].events) {
                json je;
                je["kind"] = event_kind_name(ev.kind);
                switch (ev.kind) {
                    case AuctionEvent::Kind::maker_add:
                        je["slope"] = ev.slope;
                        je["ref_price"] = ev.ref_price;
                        break;
                    case AuctionEvent::Kind::taker_sell:
                    case AuctionEvent::Kind::taker_buy:
                        je["volume"] = ev.volume;
                        break;
                    default:
                        je["index"] = ev.index;
                }
                evs.push_back(std::move(je));
            }
            j["events"] = std::move(evs);
            j["n_curves"] = stream.auction[a].book.curves.size();
            j["net_market_volume"] = stream.auction[a].book.net_market_volume();
            events << j.dump() << '\n';
        }
        json jc;
        jc["episode"] = e;
        jc["t"] = stream.mid.size() + stream.auction.size();
        jc["phase"] = "clearing";
        jc["price"] = r.clearing_price;
        jc["agent_volume"] = r.cleared_volume;
        jc["final_inventory"] = r.final_inventory;
        jc["total_reward"] = r.total_reward;
        events << jc.dump() << '\n';

        std::cout << "episode " << e << ": total reward " << r.total_reward
                  << ", final inventory " << r.final_inventory << "\n";
    }
    std::cout << "wrote " << (fs::path(out_dir) / "trace.csv").string() << " and "
              << (fs::path(out_dir) / "events.jsonl").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train: fitted Q iteration against the calibrated closed-form benchmark.
// ---------------------------------------------------------------------------

void write_curves(const fs::path& path, const std::vector<CurveRow>& curves) {
    std::ofstream out(path);
    if (!out) throw IngestError("train: cannot write " + path.string());
    out << "episode,clob_loss,auction_loss,pseudo_regret\n";
    out << std::setprecision(17);
    for (const CurveRow& row : curves)
        out << row.episode << ',' << row.clob_loss << ',' << row.auction_loss << ','
            << row.pseudo_regret << '\n';
}

int cmd_train(const std::string& config_path, bool seed_set, std::uint64_t seed_flag,
              const std::string& out_dir) {
    LoadedRun lr = load(config_path, seed_set, seed_flag);
    const TrainConfig tc = load_train(lr.cfg);
    AsPolicy benchmark(calibrated_as_params(lr), lr.cfg.get_double("auction_z", 10.0));
    fs::create_directories(out_dir);

    const TrainResult result = train(lr.run.session, *lr.run.model, tc, benchmark, lr.seed);
    write_curves(fs::path(out_dir) / "curves.csv", result.curves);

    Checkpoint ckpt{result.continuous_net, result.auction_net, lr.run.session.action_grid,
                    lr.run.session.scaling};
    if (result.aborted) {
        const auto diag = fs::path(out_dir) / "checkpoint-abort.bin";
        save_checkpoint(diag.string(), ckpt);
        std::cerr << "training aborted: " << result.abort_reason << "\n"
                  << "diagnostic state in " << diag.string() << "\n";
        return 1;
    }
    save_checkpoint((fs::path(out_dir) / "checkpoint.bin").string(), ckpt);
    std::cout << "trained " << tc.episodes << " episodes; wrote "
              << (fs::path(out_dir) / "curves.csv").string() << " and "
              << (fs::path(out_dir) / "checkpoint.bin").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval: common-random-number evaluation of the standard policy set.
// ---------------------------------------------------------------------------

int cmd_eval(const std::string& config_path, bool seed_set, std::uint64_t seed_flag,
             const std::string& out_file, const std::string& checkpoint,
             std::int64_t episodes_flag, const std::string& symbol) {
    LoadedRun lr = load(config_path, seed_set, seed_flag);
    const std::int64_t n =
        episodes_flag > 0 ? episodes_flag : lr.cfg.get_int("n_eval", 100);

    std::vector<std::pair<std::string, std::unique_ptr<Policy>>> owned;
    for (const char* name : {"null", "random", "initial-nfq", "as", "twap"})
        owned.emplace_back(name, make_policy(name, lr));
    if (!checkpoint.empty())
        owned.emplace_back("final-nfq", checkpoint_policy(lr.run.session, checkpoint));

    std::vector<std::pair<std::string, Policy*>> policies;
    policies.reserve(owned.size());
    for (auto& [name, p] : owned) policies.emplace_back(name, p.get());

    EvalReport report = evaluate(policies, lr.run.session, *lr.run.model, n, lr.seed);
    report.symbol = symbol;
    if (lr.run.historical)
        report.sigma_hat = relative_volatility(lr.run.historical_mids);
    else
        report.sigma_hat =
            relative_volatility(lr.run.model->path(mix_seed(lr.seed, seed_stream::mid_path, 0)));

    if (!out_file.empty()) {
        if (fs::path(out_file).has_parent_path())
            fs::create_directories(fs::path(out_file).parent_path());
        write_report(out_file, report);
        std::cout << "wrote " << out_file << "\n";
    }
    std::cout << compare_table(report);
    return 0;
}

// ---------------------------------------------------------------------------
// compare: tabulate saved reports.
// ---------------------------------------------------------------------------

int cmd_compare(const std::vector<std::string>& report_files, const std::string& out_file) {
    std::vector<EvalReport> reports;
    reports.reserve(report_files.size());
    for (const auto& f : report_files) reports.push_back(read_report(f));
    for (std::size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].seed != reports[0].seed || reports[i].n_episodes != reports[0].n_episodes)
            std::cerr << "warning: " << report_files[i]
                      << " used a different seed or episode count; returns are not"
                         " common-random-number comparable\n";
    }
    const std::string table =
        reports.size() == 1 ? compare_table(reports[0]) : compare_symbols_table(reports);
    if (!out_file.empty()) {
        std::ofstream out(out_file);
        if (!out) throw IngestError("compare: cannot write " + out_file);
        out << table;
        std::cout << "wrote " << out_file << "\n";
    }
    std::cout << table;
    return 0;
}

// ---------------------------------------------------------------------------
// calibrate: print the benchmark parameters implied by the configured market.
// ---------------------------------------------------------------------------

int cmd_calibrate(const std::string& config_path, bool seed_set, std::uint64_t seed_flag,
                  const std::string& out_file) {
    LoadedRun lr = load(config_path, seed_set, seed_flag);
    const SessionConfig& s = lr.run.session;
    const auto samples = lr.cfg.get_int("calib_samples", 5000);
    const std::vector<double> mids =
        lr.run.model->path(mix_seed(lr.seed, seed_stream::mid_path, 0));
    auto rng = make_rng(lr.seed, seed_stream::benchmark, 0xCA11B);
    const AsCalibration calib = calibrate_as(s.gen, s.grid, samples, mids, rng);
    const double sigma_hat = relative_volatility(mids);

    std::ostringstream text;
    text << std::setprecision(17);
    text << "A " << calib.A << "\n"
         << "K " << calib.K << "\n"
         << "k " << calib.k << "\n"
         << "sigma " << calib.sigma << "\n"
         << "sigma_hat " << sigma_hat << "\n"
         << "samples " << samples << "\n";
    if (!out_file.empty()) {
        std::ofstream out(out_file);
        if (!out) throw IngestError("calibrate: cannot write " + out_file);
        out << text.str();
        std::cout << "wrote " << out_file << "\n";
    }
    std::cout << text.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"auctionmm: market making across a continuous book and a terminal auction"};
    app.require_subcommand(1);

    std::string config_path, out_path, policy_name = "null", checkpoint, symbol;
    std::uint64_t seed_flag = 0;
    std::int64_t episodes = 1, eval_episodes = 0;
    std::vector<std::string> report_files;

    auto add_common = [&](CLI::App* sub, bool need_out) {
        sub->add_option("--config", config_path, "configuration file")->required();
        sub->add_option("--seed", seed_flag, "root seed (overrides the config's `seed`)");
        auto* out = sub->add_option("--out", out_path, "output path");
        if (need_out) out->required();
        return sub;
    };

    auto* sim = add_common(app.add_subcommand("simulate", "roll episodes and dump traces"), true);
    sim->add_option("--policy", policy_name,
                    "null|random|twap|as|initial-nfq or a checkpoint path");
    sim->add_option("--episodes", episodes, "number of episodes")->check(CLI::PositiveNumber);

    auto* trn = add_common(
        app.add_subcommand("train", "fitted Q iteration; writes curves and checkpoint"), true);

    auto* ev = add_common(app.add_subcommand("eval", "common-seed policy comparison"), true);
    ev->add_option("--checkpoint", checkpoint, "trained checkpoint to evaluate as final-nfq");
    ev->add_option("--episodes", eval_episodes, "evaluation episodes (default: config n_eval)");
    ev->add_option("--symbol", symbol, "label stored in the report");

    auto* cmp = app.add_subcommand("compare", "tabulate saved eval reports");
    cmp->add_option("reports", report_files, "eval report files")->required()->expected(-1);
    cmp->add_option("--out", out_path, "write the table here as well");

    auto* cal =
        add_common(app.add_subcommand("calibrate", "print calibrated benchmark parameters"),
                   false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmp->parsed()) return cmd_compare(report_files, out_path);
        CLI::App* active = sim->parsed() ? sim : trn->parsed() ? trn : ev->parsed() ? ev : cal;
        const bool seed_set = active->count("--seed") > 0;
        if (active == sim)
            return cmd_simulate(config_path, seed_set, seed_flag, out_path, policy_name,
                                episodes);
        if (active == trn) return cmd_train(config_path, seed_set, seed_flag, out_path);
        if (active == ev)
            return cmd_eval(config_path, seed_set, seed_flag, out_path, checkpoint,
                            eval_episodes, symbol);
        return cmd_calibrate(config_path, seed_set, seed_flag, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
