#pragma once

// Flat key=value run configuration: one file pins every parameter of a run.
// Lines are `key = value`; '#' starts a comment. Readers for the domain
// structs live here so the CLI and tests assemble runs the same way.

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "auctionmm/common.hpp"
#include "auctionmm/market_sim.hpp"
#include "auctionmm/mdp.hpp"
#include "auctionmm/nfq.hpp"

namespace auctionmm {

class Config {
  public:
    static Config from_string(const std::string& text, const std::string& origin = "<string>") {
        Config cfg;
        cfg.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            const std::string stripped = trim(line);
            if (stripped.empty()) continue;
            const auto eq = stripped.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": expected 'key = value', got '" + stripped + "'");
            const std::string key = trim(stripped.substr(0, eq));
            const std::string value = trim(stripped.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open " + path);
        std::ostringstream text;
        text << in.rdbuf();
        return from_string(text.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    const std::string& get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end())
            throw ConfigError(origin_ + ": missing required key '" + key + "'");
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    std::int64_t get_int(const std::string& key) const {
        return parse_int(key, get_string(key));
    }
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string& v = get_string(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError(origin_ + ": key '" + key + "' must be a boolean, got '" + v + "'");
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    static std::string trim(const std::string& s) {
        const auto first = s.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) return {};
        const auto last = s.find_last_not_of(" \t\r\n");
        return s.substr(first, last - first + 1);
    }

    double parse_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key '" + key + "' must be a number, got '" + v + "'");
        }
    }

    std::int64_t parse_int(const std::string& key, const std::string& v) const {
        try {
            std::size_t used = 0;
            const long long x = std::stoll(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return static_cast<std::int64_t>(x);
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key '" + key + "' must be an integer, got '" + v +
                              "'");
        }
    }

    std::map<std::string, std::string> values_;
    std::string origin_ = "<none>";
};

// ---------------------------------------------------------------------------
// Domain-struct readers (defaults mirror the struct defaults)
// ---------------------------------------------------------------------------

inline TickGrid load_tick_grid(const Config& cfg) {
    TickGrid g;
    g.alpha = cfg.get_double("alpha", g.alpha);
    g.beta = cfg.get_double("beta", g.beta);
    g.max_price_ticks = cfg.get_int("max_price_ticks", g.max_price_ticks);
    g.max_slope_steps = cfg.get_int("max_slope_steps", g.max_slope_steps);
    g.max_volume = cfg.get_int("max_volume", g.max_volume);
    g.max_depth = cfg.get_int("max_depth", g.max_depth);
    g.max_participants = cfg.get_int("max_participants", g.max_participants);
    g.validate();
    return g;
}

inline GenerativeParams load_generative(const Config& cfg) {
    GenerativeParams p;
    p.tau_op = cfg.get_int("tau_op", p.tau_op);
    p.tau_cl = cfg.get_int("tau_cl", p.tau_cl);
    p.initial_inventory = cfg.get_int("initial_inventory", p.initial_inventory);
    p.lambda0 = cfg.get_double("lambda0", p.lambda0);
    p.v_m = cfg.get_double("v_m", p.v_m);
    p.gamma_m = cfg.get_double("gamma_m", p.gamma_m);
    p.order_volume_cap = cfg.get_int("order_volume_cap", p.order_volume_cap);
    p.V_inf = cfg.get_double("V_inf", p.V_inf);
    p.beta_a = cfg.get_double("beta_a", p.beta_a);
    p.beta_b = cfg.get_double("beta_b", p.beta_b);
    p.decay = cfg.get_double("decay", p.decay);
    p.U1 = cfg.get_double("U1", p.U1);
    p.U2 = cfg.get_double("U2", p.U2);
    p.M1 = cfg.get_int("M1", p.M1);
    p.M2 = cfg.get_int("M2", p.M2);
    p.p1 = cfg.get_double("p1", p.p1);
    p.p2 = cfg.get_double("p2", p.p2);
    p.p3 = cfg.get_double("p3", p.p3);
    p.p4 = cfg.get_double("p4", p.p4);
    p.validate();
    return p;
}

inline RewardParams load_reward(const Config& cfg) {
    RewardParams r;
    r.inventory_penalty = cfg.get_double("inventory_penalty", r.inventory_penalty);
    r.wrong_side_removal = cfg.get_double("wrong_side_penalty", r.wrong_side_removal);
    r.price_window = cfg.get_int("price_window", r.price_window);
    r.cancel_cost = cfg.get_double("cancel_cost", r.cancel_cost);
    r.discount = cfg.get_double("discount", r.discount);
    r.validate();
    return r;
}

inline RoughHestonParams load_rough_heston(const Config& cfg) {
    RoughHestonParams p;
    p.S0 = cfg.get_double("rh_S0", p.S0);
    p.V0 = cfg.get_double("rh_V0", p.V0);
    p.theta = cfg.get_double("rh_theta", p.theta);
    p.lambda = cfg.get_double("rh_lambda", p.lambda);
    p.nu = cfg.get_double("rh_nu", p.nu);
    p.hurst = cfg.get_double("rh_hurst", p.hurst);
    p.rho = cfg.get_double("rh_rho", p.rho);
    p.seconds_per_step = cfg.get_double("seconds_per_step", p.seconds_per_step);
    p.validate();
    return p;
}

inline TrainConfig load_train(const Config& cfg) {
    TrainConfig t;
    t.eta = cfg.get_double("eta", t.eta);
    t.epochs_per_episode =
        static_cast<std::size_t>(cfg.get_int("epochs_per_episode",
                                             static_cast<std::int64_t>(t.epochs_per_episode)));
    t.batch = static_cast<std::size_t>(cfg.get_int("batch", static_cast<std::int64_t>(t.batch)));
    t.episodes = cfg.get_int("episodes", t.episodes);
    t.eps_warmup = cfg.get_int("eps_warmup", t.eps_warmup);
    t.eps_start = cfg.get_double("eps_start", t.eps_start);
    t.eps_end = cfg.get_double("eps_end", t.eps_end);
    t.buffer_capacity = static_cast<std::size_t>(
        cfg.get_int("buffer_capacity", static_cast<std::int64_t>(t.buffer_capacity)));
    t.buffer_min_fill = static_cast<std::size_t>(
        cfg.get_int("buffer_min_fill", static_cast<std::int64_t>(t.buffer_min_fill)));
    t.regret_rollouts = cfg.get_int("regret_rollouts", t.regret_rollouts);
    t.validate();
    return t;
}

// A fully assembled run: the session plus the mid-price source. The feature
// price scale follows the model (initial simulated price or first historical
// mid) so trained nets see unit-scale inputs under either source.
struct RunSetup {
    SessionConfig session;
    std::unique_ptr<MidModel> model;
    bool historical = false;
    std::vector<double> historical_mids;  // empty for simulated runs
};

inline RunSetup build_run(const Config& cfg) {
    RunSetup run;
    run.session.grid = load_tick_grid(cfg);
    run.session.gen = load_generative(cfg);
    run.session.reward = load_reward(cfg);
    run.session.smoothing = cfg.get_double("smoothing", run.session.smoothing);
    run.session.initial_estimate =
        cfg.get_double("initial_estimate", run.session.initial_estimate);
    run.session.own_order_in_estimate =
        cfg.get_bool("own_order_in_estimate", run.session.own_order_in_estimate);

    const std::string kind = cfg.get_string("mid_model");
    if (kind == "rough_heston") {
        const RoughHestonParams rh = load_rough_heston(cfg);
        run.model = std::make_unique<RoughHestonMidModel>(rh, run.session.gen.tau_op);
        run.session.scaling.price_scale = rh.S0;
    } else if (kind == "historical") {
        const std::string path = cfg.get_string("historical_file");
        // Spread the file's time span evenly over the continuous phase.
        const auto rows = load_mid_rows(path);
        const double t_first = rows.front().first;
        const double t_last = rows.back().first;
        const auto steps = static_cast<std::size_t>(run.session.gen.tau_op);
        std::vector<double> grid_times(steps, t_first);
        if (steps > 1) {
            const double spacing = (t_last - t_first) / static_cast<double>(steps - 1);
            for (std::size_t i = 0; i < steps; ++i)
                grid_times[i] = t_first + spacing * static_cast<double>(i);
        }
        run.historical = true;
        run.historical_mids = load_historical_mid(path, grid_times, run.session.grid);
        run.model = std::make_unique<HistoricalMidModel>(run.historical_mids);
        run.session.scaling.price_scale = run.historical_mids.front();
    } else {
        throw ConfigError("config: mid_model must be 'rough_heston' or 'historical', got '" +
                          kind + "'");
    }

    run.session.scaling.volume_scale = static_cast<double>(run.session.gen.order_volume_cap);
    run.session.scaling.count_scale = static_cast<double>(run.session.grid.max_participants);
    run.session.scaling.inventory_scale =
        std::max(1.0, static_cast<double>(run.session.gen.initial_inventory));
    run.session.scaling.depth_scale = static_cast<double>(run.session.grid.max_depth);
    run.session.scaling.theta_scale = static_cast<double>(run.session.gen.auction_steps());
    run.session.validate();
    return run;
}

}  // namespace auctionmm
