#pragma once

// Neural-fitted Q-learning with two phase-specific networks. Everything is
// double precision and hand-rolled: batched forward/backward passes, Huber
// TD loss on the taken action's output, FIFO replay buffers, frozen target
// networks refreshed once per episode, and an exponential epsilon schedule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "auctionmm/common.hpp"
#include "auctionmm/mdp.hpp"

namespace auctionmm {

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

struct QNet {
    std::vector<std::int64_t> dims;         // {in, h1, h2, h3, out}
    std::vector<std::vector<double>> weights;  // row-major [out x in] per layer
    std::vector<std::vector<double>> biases;

    QNet() = default;
    QNet(std::int64_t in, std::int64_t out) : dims{in, 16, 16, 16, out} { allocate(); }

    std::size_t layer_count() const { return dims.size() - 1; }
    std::int64_t input_width() const { return dims.front(); }
    std::int64_t output_width() const { return dims.back(); }

    void allocate() {
        weights.assign(layer_count(), {});
        biases.assign(layer_count(), {});
        for (std::size_t l = 0; l < layer_count(); ++l) {
            weights[l].assign(static_cast<std::size_t>(dims[l + 1] * dims[l]), 0.0);
            biases[l].assign(static_cast<std::size_t>(dims[l + 1]), 0.0);
        }
    }

    void init(std::mt19937_64& rng) {
        for (std::size_t l = 0; l < layer_count(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
            std::uniform_real_distribution<double> u(-bound, bound);
            for (double& w : weights[l]) w = u(rng);
            for (double& b : biases[l]) b = u(rng);
        }
    }

    bool finite() const {
        for (const auto& layer : weights)
            for (double w : layer)
                if (!std::isfinite(w)) return false;
        for (const auto& layer : biases)
            for (double b : layer)
                if (!std::isfinite(b)) return false;
        return true;
    }
};

// Full forward pass for one input; used for action selection and targets.
inline void forward(const QNet& net, std::span<const double> x, std::vector<double>& out,
                    std::vector<double>& scratch) {
    if (static_cast<std::int64_t>(x.size()) != net.input_width())
        throw std::invalid_argument("forward: feature width mismatch");
    out.assign(x.begin(), x.end());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto n_in = static_cast<std::size_t>(net.dims[l]);
        const auto n_out = static_cast<std::size_t>(net.dims[l + 1]);
        scratch.assign(n_out, 0.0);
        const double* w = net.weights[l].data();
        for (std::size_t o = 0; o < n_out; ++o) {
            double acc = net.biases[l][o];
            const double* row = w + o * n_in;
            for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * out[i];
            scratch[o] = acc;
        }
        const bool hidden = l + 1 < net.layer_count();
        if (hidden)
            for (double& v : scratch) v = v > 0.0 ? v : 0.0;
        out.swap(scratch);
    }
}

inline std::vector<double> forward(const QNet& net, std::span<const double> x) {
    std::vector<double> out, scratch;
    forward(net, x, out, scratch);
    return out;
}

// Huber loss and derivative: quadratic within the unit band, linear outside.
inline double huber(double u) {
    const double a = std::abs(u);
    return a <= 1.0 ? 0.5 * u * u : a - 0.5;
}

inline double huber_grad(double u) { return u > 1.0 ? 1.0 : (u < -1.0 ? -1.0 : u); }

// Argmax over admissible outputs; ties resolve to the lowest index.
inline std::int64_t argmax_admissible(std::span<const double> q,
                                      std::span<const std::uint8_t> mask) {
    std::int64_t best = -1;
    double best_q = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!mask[i]) continue;
        if (best < 0 || q[i] > best_q) {
            best = static_cast<std::int64_t>(i);
            best_q = q[i];
        }
    }
    if (best < 0) throw std::logic_error("argmax_admissible: empty admissible set");
    return best;
}

inline double max_admissible(std::span<const double> q, std::span<const std::uint8_t> mask) {
    return q[static_cast<std::size_t>(argmax_admissible(q, mask))];
}

// ---------------------------------------------------------------------------
// Replay buffer
// ---------------------------------------------------------------------------

class ReplayBuffer {
  public:
    ReplayBuffer(std::size_t capacity, std::size_t min_fill)
        : capacity_(capacity), min_fill_(min_fill) {
        if (capacity == 0 || min_fill > capacity)
            throw ConfigError("ReplayBuffer: need 0 < min_fill <= capacity");
    }

    void push(Transition t) {
        if (store_.size() < capacity_) {
            store_.push_back(std::move(t));
        } else {
            store_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return store_.size(); }
    bool ready() const { return store_.size() >= min_fill_; }
    std::span<const Transition> data() const { return store_; }

  private:
    std::size_t capacity_;
    std::size_t min_fill_;
    std::size_t head_ = 0;
    std::vector<Transition> store_;
};

// ---------------------------------------------------------------------------
// Targets and SGD
// ---------------------------------------------------------------------------

// One-step targets y = r + chi * max_admissible Q_target(next), routed by the
// next state's phase; terminal transitions already carry the folded-in
// clearing reward, so y = r.
inline std::vector<double> compute_targets(std::span<const Transition> batch,
                                           const QNet& target_continuous,
                                           const QNet& target_auction, double chi) {
    std::vector<double> targets(batch.size(), 0.0);
    std::vector<double> q, scratch;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = batch[i];
        double y = t.reward;
        if (!t.terminal) {
            const QNet& net =
                t.next_phase == Phase::continuous ? target_continuous : target_auction;
            forward(net, t.next_features, q, scratch);
            y += chi * max_admissible(q, t.next_admissible);
        }
        targets[i] = y;
    }
    return targets;
}

// Reusable scratch for batched passes; sized lazily per (net, batch).
struct SgdWorkspace {
    std::vector<std::size_t> order;
    std::vector<std::vector<double>> acts;    // [layer][batch x width], acts[0] = inputs
    std::vector<double> q_taken;              // [batch]
    std::vector<double> dq;                   // [batch]
    std::vector<std::vector<double>> deltas;  // [hidden layer][batch x width]
    std::vector<std::vector<double>> grad_w;
    std::vector<std::vector<double>> grad_b;
};

// One pass over the whole buffer in shuffled mini-batches. The loss gradient
// flows only through the taken action's output, so the output layer is
// handled sparsely. Returns the mean Huber loss over all samples.
inline double sgd_epoch(QNet& net, std::span<const Transition> data,
                        std::span<const double> targets, double eta, std::size_t batch_size,
                        std::mt19937_64& rng, SgdWorkspace& ws) {
    if (data.empty()) return 0.0;
    if (targets.size() != data.size())
        throw std::invalid_argument("sgd_epoch: targets misaligned with buffer");
    const std::size_t n_layers = net.layer_count();
    const auto in_w = static_cast<std::size_t>(net.input_width());

    ws.order.resize(data.size());
    std::iota(ws.order.begin(), ws.order.end(), std::size_t{0});
    std::shuffle(ws.order.begin(), ws.order.end(), rng);

    ws.acts.assign(n_layers, {});  // acts[l] holds layer-l ReLU outputs; acts[0] via inputs
    ws.deltas.assign(n_layers, {});
    ws.grad_w.assign(n_layers, {});
    ws.grad_b.assign(n_layers, {});
    std::vector<double> inputs;

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        const std::size_t bsz = std::min(batch_size, data.size() - start);

        inputs.assign(bsz * in_w, 0.0);
        for (std::size_t j = 0; j < bsz; ++j) {
            const Transition& t = data[ws.order[start + j]];
            if (t.features.size() != in_w)
                throw std::invalid_argument("sgd_epoch: feature width mismatch");
            std::copy(t.features.begin(), t.features.end(), inputs.begin() + j * in_w);
        }

        // forward through the hidden stack
        const double* prev = inputs.data();
        std::size_t prev_w = in_w;
        for (std::size_t l = 0; l + 1 < n_layers; ++l) {
            const auto n_out = static_cast<std::size_t>(net.dims[l + 1]);
            ws.acts[l].assign(bsz * n_out, 0.0);
            const double* w = net.weights[l].data();
            const double* b = net.biases[l].data();
            for (std::size_t j = 0; j < bsz; ++j) {
                const double* x = prev + j * prev_w;
                double* a = ws.acts[l].data() + j * n_out;
                for (std::size_t o = 0; o < n_out; ++o) {
                    double acc = b[o];
                    const double* row = w + o * prev_w;
                    for (std::size_t i = 0; i < prev_w; ++i) acc += row[i] * x[i];
                    a[o] = acc > 0.0 ? acc : 0.0;
                }
            }
            prev = ws.acts[l].data();
            prev_w = n_out;
        }

        // output layer: only the taken action's Q-value
        const std::size_t out_l = n_layers - 1;
        const auto out_w = static_cast<std::size_t>(net.dims.back());
        ws.q_taken.assign(bsz, 0.0);
        ws.dq.assign(bsz, 0.0);
        for (std::size_t j = 0; j < bsz; ++j) {
            const Transition& t = data[ws.order[start + j]];
            const auto a_idx = static_cast<std::size_t>(t.action);
            if (t.action < 0 || a_idx >= out_w)
                throw std::invalid_argument("sgd_epoch: action index out of range");
            const double* row = net.weights[out_l].data() + a_idx * prev_w;
            const double* x = prev + j * prev_w;
            double acc = net.biases[out_l][a_idx];
            for (std::size_t i = 0; i < prev_w; ++i) acc += row[i] * x[i];
            ws.q_taken[j] = acc;
            const double u = acc - targets[ws.order[start + j]];
            loss_sum += huber(u);
            ws.dq[j] = huber_grad(u) / static_cast<double>(bsz);
        }

        // gradients
        for (std::size_t l = 0; l < n_layers; ++l) {
            ws.grad_w[l].assign(net.weights[l].size(), 0.0);
            ws.grad_b[l].assign(net.biases[l].size(), 0.0);
        }
        ws.deltas[out_l - 1].assign(bsz * prev_w, 0.0);  // gradient wrt last hidden acts
        for (std::size_t j = 0; j < bsz; ++j) {
            const double g = ws.dq[j];
            if (g == 0.0) continue;
            const Transition& t = data[ws.order[start + j]];
            const auto a_idx = static_cast<std::size_t>(t.action);
            const double* x = prev + j * prev_w;
            double* gw = ws.grad_w[out_l].data() + a_idx * prev_w;
            const double* row = net.weights[out_l].data() + a_idx * prev_w;
            double* dh = ws.deltas[out_l - 1].data() + j * prev_w;
            for (std::size_t i = 0; i < prev_w; ++i) {
                gw[i] += g * x[i];
                dh[i] += g * row[i];
            }
            ws.grad_b[out_l][a_idx] += g;
        }

        // backpropagate through hidden layers
        for (std::size_t l = out_l; l-- > 0;) {
            const auto n_out = static_cast<std::size_t>(net.dims[l + 1]);
            const std::size_t n_in = l == 0 ? in_w : static_cast<std::size_t>(net.dims[l]);
            const double* below = l == 0 ? inputs.data() : ws.acts[l - 1].data();
            if (l > 0) ws.deltas[l - 1].assign(bsz * n_in, 0.0);
            const double* w = net.weights[l].data();
            for (std::size_t j = 0; j < bsz; ++j) {
                const double* act = ws.acts[l].data() + j * n_out;
                double* delta = ws.deltas[l].data() + j * n_out;
                const double* x = below + j * n_in;
                double* dlow = l > 0 ? ws.deltas[l - 1].data() + j * n_in : nullptr;
                for (std::size_t o = 0; o < n_out; ++o) {
                    if (act[o] <= 0.0) continue;  // ReLU gate
                    const double g = delta[o];
                    if (g == 0.0) continue;
                    double* gw = ws.grad_w[l].data() + o * n_in;
                    const double* row = w + o * n_in;
                    for (std::size_t i = 0; i < n_in; ++i) {
                        gw[i] += g * x[i];
                        if (dlow) dlow[i] += g * row[i];
                    }
                    ws.grad_b[l][o] += g;
                }
            }
        }

        // constant-rate descent step
        for (std::size_t l = 0; l < n_layers; ++l) {
            double* w = net.weights[l].data();
            const double* gw = ws.grad_w[l].data();
            for (std::size_t i = 0; i < net.weights[l].size(); ++i) w[i] -= eta * gw[i];
            double* b = net.biases[l].data();
            const double* gb = ws.grad_b[l].data();
            for (std::size_t i = 0; i < net.biases[l].size(); ++i) b[i] -= eta * gb[i];
        }
    }
    return loss_sum / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Exploration schedule and action selection
// ---------------------------------------------------------------------------

struct TrainConfig {
    double eta = 3e-4;
    std::size_t epochs_per_episode = 3;
    std::size_t batch = 128;
    std::int64_t episodes = 2000;
    std::int64_t eps_warmup = 100;
    double eps_start = 1.0;
    double eps_end = 0.01;
    std::size_t buffer_capacity = 50000;
    std::size_t buffer_min_fill = 5000;
    std::int64_t regret_rollouts = 16;

    void validate() const {
        if (!(eta > 0.0)) throw ConfigError("TrainConfig: eta must be positive");
        if (epochs_per_episode == 0 || batch == 0)
            throw ConfigError("TrainConfig: epochs and batch must be positive");
        if (episodes < 1) throw ConfigError("TrainConfig: episodes must be >= 1");
        if (eps_warmup < 0) throw ConfigError("TrainConfig: eps_warmup must be >= 0");
        if (!(eps_start >= eps_end && eps_end > 0.0))
            throw ConfigError("TrainConfig: need eps_start >= eps_end > 0");
        if (buffer_min_fill > buffer_capacity || buffer_capacity == 0)
            throw ConfigError("TrainConfig: need 0 < min_fill <= capacity");
        if (regret_rollouts < 1) throw ConfigError("TrainConfig: regret_rollouts must be >= 1");
    }
};

// Flat during the warm-up, then exponential decay hitting eps_end exactly at
// the last episode.
inline double epsilon(std::int64_t episode, const TrainConfig& cfg) {
    if (episode <= cfg.eps_warmup || cfg.episodes <= cfg.eps_warmup) return cfg.eps_start;
    if (cfg.eps_start == cfg.eps_end) return cfg.eps_end;
    const double span = static_cast<double>(cfg.episodes - cfg.eps_warmup);
    const double kappa = std::log(cfg.eps_start / cfg.eps_end) / span;
    const double e = cfg.eps_start *
                     std::exp(-kappa * static_cast<double>(episode - cfg.eps_warmup));
    return std::max(cfg.eps_end, e);
}

// Epsilon-greedy over the admissible set only.
inline std::int64_t select_action(const QNet& net, std::span<const double> features,
                                  std::span<const std::uint8_t> mask, double eps,
                                  std::mt19937_64& rng, std::vector<double>& q_scratch,
                                  std::vector<double>& fwd_scratch) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < eps) {
        std::int64_t n_allowed = 0;
        for (auto b : mask) n_allowed += b;
        if (n_allowed == 0) throw std::logic_error("select_action: empty admissible set");
        std::uniform_int_distribution<std::int64_t> pick(0, n_allowed - 1);
        std::int64_t k = pick(rng);
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask[i]) continue;
            if (k-- == 0) return static_cast<std::int64_t>(i);
        }
    }
    forward(net, features, q_scratch, fwd_scratch);
    return argmax_admissible(q_scratch, mask);
}

// Greedy (or epsilon-greedy) policy backed by the two phase networks.
class NfqPolicy : public Policy {
  public:
    NfqPolicy(const QNet& continuous_net, const QNet& auction_net, double eps = 0.0)
        : cont_(&continuous_net), auc_(&auction_net), eps_(eps) {}

    void set_epsilon(double eps) { eps_ = eps; }

    void begin_episode(std::uint64_t episode_seed) override {
        rng_ = make_rng(episode_seed, seed_stream::exploration);
    }

    PolicyDecision decide(const SessionState& state, const EpisodeView& view) override {
        const SessionConfig& cfg = *view.config;
        features_ = pruned_features(state, cfg.scaling);
        mask_ = admissible_mask(state, cfg.action_grid, cfg.grid);
        const QNet& net = state.phase == Phase::continuous ? *cont_ : *auc_;
        const std::int64_t index =
            select_action(net, features_, mask_, eps_, rng_, q_, scratch_);
        return {cfg.action_grid.resolve(state.phase, index, state, cfg.grid), index};
    }

  private:
    const QNet* cont_;
    const QNet* auc_;
    double eps_;
    std::mt19937_64 rng_;
    std::vector<double> features_, q_, scratch_;
    std::vector<std::uint8_t> mask_;
};

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct CurveRow {
    std::int64_t episode = 0;
    double clob_loss = 0.0;
    double auction_loss = 0.0;
    double pseudo_regret = 0.0;
};

struct TrainResult {
    QNet continuous_net;
    QNet auction_net;
    std::vector<CurveRow> curves;
    bool aborted = false;
    std::string abort_reason;
};

// Per episode: roll out epsilon-greedy, push transitions into the phase
// buffers, fit each network for M epochs against targets from the frozen
// target pair, hard-update the targets, and append the loss/regret curve row.
// The benchmark policy's value per episode is a Monte Carlo mean over
// common-seed rollouts, the first of which replays the training episode's
// market exactly.
inline TrainResult train(const SessionConfig& session, const MidModel& model,
                         const TrainConfig& cfg, Policy& benchmark, std::uint64_t seed) {
    session.validate();
    cfg.validate();
    const double chi = session.reward.discount;

    TrainResult result;
    {
        auto rng_c = make_rng(seed, seed_stream::net_init, 0);
        auto rng_a = make_rng(seed, seed_stream::net_init, 1);
        result.continuous_net = QNet(static_cast<std::int64_t>(kContinuousFeatures),
                                     session.action_grid.n_continuous());
        result.auction_net =
            QNet(static_cast<std::int64_t>(kAuctionFeatures), session.action_grid.n_auction());
        result.continuous_net.init(rng_c);
        result.auction_net.init(rng_a);
    }
    QNet target_cont = result.continuous_net;
    QNet target_auc = result.auction_net;

    ReplayBuffer buf_cont(cfg.buffer_capacity, cfg.buffer_min_fill);
    ReplayBuffer buf_auc(cfg.buffer_capacity, cfg.buffer_min_fill);
    NfqPolicy actor(result.continuous_net, result.auction_net);
    SgdWorkspace ws;
    EpisodeOptions opts;
    opts.record_transitions = true;

    double cumulative_regret = 0.0;
    result.curves.reserve(static_cast<std::size_t>(cfg.episodes));

    for (std::int64_t e = 1; e <= cfg.episodes; ++e) {
        actor.set_epsilon(epsilon(e, cfg));
        const std::uint64_t episode_seed = mix_seed(seed, seed_stream::benchmark,
                                                    static_cast<std::uint64_t>(e) << 8);
        EpisodeResult rollout = run_episode(actor, session, model, episode_seed, opts);
        for (Transition& t : rollout.transitions)
            (t.phase == Phase::continuous ? buf_cont : buf_auc).push(std::move(t));

        CurveRow row;
        row.episode = e;
        auto shuffle_rng = make_rng(seed, seed_stream::shuffle, static_cast<std::uint64_t>(e));
        if (buf_cont.ready()) {
            const auto targets =
                compute_targets(buf_cont.data(), target_cont, target_auc, chi);
            double loss = 0.0;
            for (std::size_t m = 0; m < cfg.epochs_per_episode; ++m)
                loss += sgd_epoch(result.continuous_net, buf_cont.data(), targets, cfg.eta,
                                  cfg.batch, shuffle_rng, ws);
            row.clob_loss = loss / static_cast<double>(cfg.epochs_per_episode);
        }
        if (buf_auc.ready()) {
            const auto targets = compute_targets(buf_auc.data(), target_cont, target_auc, chi);
            double loss = 0.0;
            for (std::size_t m = 0; m < cfg.epochs_per_episode; ++m)
                loss += sgd_epoch(result.auction_net, buf_auc.data(), targets, cfg.eta,
                                  cfg.batch, shuffle_rng, ws);
            row.auction_loss = loss / static_cast<double>(cfg.epochs_per_episode);
        }
        target_cont = result.continuous_net;
        target_auc = result.auction_net;

        if (!std::isfinite(row.clob_loss) || !std::isfinite(row.auction_loss) ||
            !result.continuous_net.finite() || !result.auction_net.finite()) {
            result.curves.push_back(row);
            result.aborted = true;
            result.abort_reason = "non-finite loss or parameters at episode " + std::to_string(e);
            return result;
        }

        double benchmark_value = 0.0;
        for (std::int64_t r = 0; r < cfg.regret_rollouts; ++r) {
            const std::uint64_t bench_seed =
                mix_seed(seed, seed_stream::benchmark,
                         (static_cast<std::uint64_t>(e) << 8) + static_cast<std::uint64_t>(r));
            benchmark_value +=
                run_episode(benchmark, session, model, bench_seed).discounted_return;
        }
        benchmark_value /= static_cast<double>(cfg.regret_rollouts);
        cumulative_regret += benchmark_value - rollout.discounted_return;
        row.pseudo_regret = cumulative_regret;
        result.curves.push_back(row);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

struct Checkpoint {
    QNet continuous_net;
    QNet auction_net;
    ActionGrid action_grid;
    FeatureScaling scaling;
};

namespace detail {
inline void write_i64(std::FILE* f, std::int64_t v) { std::fwrite(&v, sizeof(v), 1, f); }
inline void write_f64(std::FILE* f, double v) { std::fwrite(&v, sizeof(v), 1, f); }
inline std::int64_t read_i64(std::FILE* f) {
    std::int64_t v;
    if (std::fread(&v, sizeof(v), 1, f) != 1) throw IngestError("checkpoint: truncated file");
    return v;
}
inline double read_f64(std::FILE* f) {
    double v;
    if (std::fread(&v, sizeof(v), 1, f) != 1) throw IngestError("checkpoint: truncated file");
    return v;
}
inline void write_net(std::FILE* f, const QNet& net) {
    write_i64(f, static_cast<std::int64_t>(net.dims.size()));
    for (auto d : net.dims) write_i64(f, d);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        std::fwrite(net.weights[l].data(), sizeof(double), net.weights[l].size(), f);
        std::fwrite(net.biases[l].data(), sizeof(double), net.biases[l].size(), f);
    }
}
inline QNet read_net(std::FILE* f) {
    QNet net;
    const std::int64_t n_dims = read_i64(f);
    if (n_dims < 2 || n_dims > 16) throw IngestError("checkpoint: implausible layer count");
    net.dims.resize(static_cast<std::size_t>(n_dims));
    for (auto& d : net.dims) {
        d = read_i64(f);
        if (d < 1 || d > 100000) throw IngestError("checkpoint: implausible layer width");
    }
    net.allocate();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        if (std::fread(net.weights[l].data(), sizeof(double), net.weights[l].size(), f) !=
            net.weights[l].size())
            throw IngestError("checkpoint: truncated weights");
        if (std::fread(net.biases[l].data(), sizeof(double), net.biases[l].size(), f) !=
            net.biases[l].size())
            throw IngestError("checkpoint: truncated biases");
    }
    return net;
}
}  // namespace detail

inline constexpr char kCheckpointMagic[8] = {'A', 'M', 'M', 'Q', 'N', 'E', 'T', '1'};

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IngestError("checkpoint: cannot open for writing: " + path);
    std::fwrite(kCheckpointMagic, 1, sizeof(kCheckpointMagic), f);
    detail::write_i64(f, ckpt.action_grid.n_volume_fracs);
    detail::write_i64(f, ckpt.action_grid.n_level_offsets);
    detail::write_i64(f, ckpt.action_grid.n_slope_steps);
    detail::write_i64(f, ckpt.action_grid.price_halfwidth);
    detail::write_f64(f, ckpt.scaling.price_scale);
    detail::write_f64(f, ckpt.scaling.volume_scale);
    detail::write_f64(f, ckpt.scaling.count_scale);
    detail::write_f64(f, ckpt.scaling.inventory_scale);
    detail::write_f64(f, ckpt.scaling.depth_scale);
    detail::write_f64(f, ckpt.scaling.theta_scale);
    detail::write_net(f, ckpt.continuous_net);
    detail::write_net(f, ckpt.auction_net);
    std::fclose(f);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IngestError("checkpoint: cannot open: " + path);
    struct Closer {
        std::FILE* f;
        ~Closer() { std::fclose(f); }
    } closer{f};

    char magic[8];
    if (std::fread(magic, 1, sizeof(magic), f) != sizeof(magic) ||
        std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw IngestError("checkpoint: bad magic (wrong or corrupt file)");
    Checkpoint ckpt;
    ckpt.action_grid.n_volume_fracs = detail::read_i64(f);
    ckpt.action_grid.n_level_offsets = detail::read_i64(f);
    ckpt.action_grid.n_slope_steps = detail::read_i64(f);
    ckpt.action_grid.price_halfwidth = detail::read_i64(f);
    ckpt.scaling.price_scale = detail::read_f64(f);
    ckpt.scaling.volume_scale = detail::read_f64(f);
    ckpt.scaling.count_scale = detail::read_f64(f);
    ckpt.scaling.inventory_scale = detail::read_f64(f);
    ckpt.scaling.depth_scale = detail::read_f64(f);
    ckpt.scaling.theta_scale = detail::read_f64(f);
    ckpt.continuous_net = detail::read_net(f);
    ckpt.auction_net = detail::read_net(f);
    if (ckpt.continuous_net.output_width() != ckpt.action_grid.n_continuous())
        throw IngestError("checkpoint: continuous head width does not match the action grid");
    if (ckpt.auction_net.output_width() != ckpt.action_grid.n_auction())
        throw IngestError("checkpoint: auction head width does not match the action grid");
    return ckpt;
}

// ---------------------------------------------------------------------------
// Tabular fallback (classical Q-learning, used by tests as an oracle hook)
// ---------------------------------------------------------------------------

class TabularQ {
  public:
    TabularQ(std::size_t n_states, std::size_t n_actions, double chi)
        : n_actions_(n_actions), chi_(chi), q_(n_states * n_actions, 0.0),
          visits_(n_states * n_actions, 0) {}

    double value(std::size_t s, std::size_t a) const { return q_[s * n_actions_ + a]; }

    double state_max(std::size_t s) const {
        double best = q_[s * n_actions_];
        for (std::size_t a = 1; a < n_actions_; ++a)
            best = std::max(best, q_[s * n_actions_ + a]);
        return best;
    }

    // Robbins-Monro update with eta = 1 / visit count.
    void update(std::size_t s, std::size_t a, double r, std::size_t next_s, bool terminal) {
        const std::size_t idx = s * n_actions_ + a;
        visits_[idx] += 1;
        const double eta = 1.0 / static_cast<double>(visits_[idx]);
        const double target = r + (terminal ? 0.0 : chi_ * state_max(next_s));
        q_[idx] += eta * (target - q_[idx]);
    }

  private:
    std::size_t n_actions_;
    double chi_;
    std::vector<double> q_;
    std::vector<std::int64_t> visits_;
};

}  // namespace auctionmm
