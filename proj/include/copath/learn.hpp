#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "copath/core.hpp"
#include "copath/model.hpp"
#include "copath/policy.hpp"
#include "copath/reward.hpp"
#include "copath/rng.hpp"

namespace copath {

/// One reasoning instance: two graphs, the last utterance, and its reference.
struct Instance {
    SemanticGraph graph_v;
    SemanticGraph graph_u;
    Tokens utterance;
    Reference reference;
};

// ---- losses and gradients ----

/// L_pg = -Re * (sum_t log p_v + sum_t log p_u). Requires an on-policy (sampled) trace.
inline double episode_loss(const EpisodeTrace& trace, double reward) {
    if (trace.mode != DecodeKind::sample) input_error("policy-gradient loss needs a sampled trace");
    return -reward * (trace[Modality::video].log_prob_sum() + trace[Modality::context].log_prob_sum());
}

namespace detail {
inline void require_finite(const Vector& v, const char* what, int step) {
    if (!v.allFinite()) numeric_error(std::string("non-finite ") + what + " at step " + std::to_string(step + 1));
}
}  // namespace detail

/// Adds scale * d(loss)/d(params) into `grads`, where loss = -(reward - baseline) * sum log p
/// over the trace's actions. Reward is a constant (score-function estimator).
inline void backward_into(const EpisodeTrace& trace, double reward, const EpisodeGraphs& graphs,
                          const ModelParams& params, GradientSet& grads, double scale = 1.0, double baseline = 0.0) {
    if (trace.mode != DecodeKind::sample) input_error("policy-gradient backward needs a sampled trace");
    const auto& cfg = params.config;
    const double coef = -(reward - baseline) * scale;
    if (coef == 0.0 || trace.horizon < 2) return;

    EpisodeCache cache;
    replay_episode(trace, graphs, params, &cache);

    const int steps = trace.horizon - 1;
    const int d = cfg.dim;
    const int n_comm = static_cast<int>(params.comms.size());
    // dh_at[k][t]: gradient reaching h_t of communicator k directly from the policies.
    std::vector<std::vector<Vector>> dh_at(n_comm, std::vector<Vector>(steps + 1, Vector::Zero(cfg.d_h)));

    for (int t = 0; t < steps; ++t) {
        for (Modality m : kModalities) {
            const int a = static_cast<int>(m);
            const auto& slot = cache.agent_steps[t][a];
            if (!slot) continue;
            const AgentStepCache& s = *slot;
            const BoundGraph& g = graphs[m];
            const AgentParams& agent = params.agents[a];
            AgentParams& gagent = grads.agents[a];
            Matrix& g_ent = grads.entities[a];
            Matrix& g_rel = grads.relations[a];

            const auto n = static_cast<Eigen::Index>(s.probs.size());
            Vector ds(n);
            for (Eigen::Index k = 0; k < n; ++k) ds[k] = coef * ((k == s.chosen ? 1.0 : 0.0) - s.probs[k]);

            Matrix dx;  // per-edge feature gradients
            if (cfg.scorer == ScorerKind::linear) {
                const auto w = agent.weight.row(0);
                const int dx_w = cfg.edge_feature_width();
                const double total = ds.sum();
                gagent.weight.row(0).head(cfg.d_h) += total * s.h_prev.transpose();
                gagent.weight.row(0).segment(cfg.d_h, d) += total * s.e_emb.transpose();
                gagent.weight.row(0).tail(dx_w) += ds.transpose() * s.features;
                dh_at[s.comm][t] += total * w.head(cfg.d_h).transpose();
                g_ent.row(g.entity_row[s.entity]) += total * w.segment(cfg.d_h, d);
                dx = ds * w.tail(dx_w);
            } else {
                const Vector dq = s.features.transpose() * ds;
                Vector z(cfg.d_h + d);
                z << s.h_prev, s.e_emb;
                gagent.weight.noalias() += dq * z.transpose();
                gagent.bias += dq;
                const Vector dz = agent.weight.transpose() * dq;
                dh_at[s.comm][t] += dz.head(cfg.d_h);
                g_ent.row(g.entity_row[s.entity]) += dz.tail(d).transpose();
                dx = ds * s.q.transpose();
            }
            for (Eigen::Index k = 0; k < n; ++k) {
                const Edge& e = s.edges[static_cast<std::size_t>(k)];
                g_rel.row(g.relation_row[e.rel]) += dx.row(k).head(d);
                if (cfg.score_target) g_ent.row(g.entity_row[e.dst]) += dx.row(k).tail(d);
            }
            detail::require_finite(dh_at[s.comm][t], "policy gradient", t);
        }
    }

    // Backpropagation through time. h_{T-1} feeds no policy, so the last cell step is skipped.
    std::vector<Vector> carry_h(n_comm, Vector::Zero(cfg.d_h));
    std::vector<Vector> carry_c(n_comm, Vector::Zero(cfg.d_h));
    for (int t = steps - 2; t >= 0; --t) {
        for (int k = 0; k < n_comm; ++k) {
            const CommStepCache& cs = cache.comm_steps[t][k];
            const CommParams& comm = params.comms[k];
            CommParams& gcomm = grads.comms[k];
            const Vector dh = dh_at[k][t + 1] + carry_h[k];
            const CellGrad cg = comm_step_backward(cs.cell, dh, carry_c[k], comm, gcomm);
            detail::require_finite(cg.d_input, "communicator gradient", t);
            gcomm.proj.noalias() += cg.d_input * cs.concat.transpose();
            const Vector dconcat = comm.proj.transpose() * cg.d_input;
            auto scatter = [&](Modality m, int offset) {
                const int a = static_cast<int>(m);
                if (!cfg.agent_enabled(m)) return;
                const BoundGraph& g = graphs[m];
                grads.relations[a].row(g.relation_row[cs.moves[a].rel]) += dconcat.segment(offset, d).transpose();
                grads.entities[a].row(g.entity_row[cs.moves[a].src]) += dconcat.segment(offset + d, d).transpose();
            };
            if (cfg.mode == AblationMode::no_comm) {
                scatter(static_cast<Modality>(k), 0);
            } else {
                scatter(Modality::video, 0);
                scatter(Modality::context, 2 * d);
            }
            carry_h[k] = cg.dh_prev;
            carry_c[k] = cg.dc_prev;
        }
    }
}

inline GradientSet backward(const EpisodeTrace& trace, double reward, const EpisodeGraphs& graphs,
                            const ModelParams& params, double baseline = 0.0) {
    GradientSet g = params.zero_gradients();
    backward_into(trace, reward, graphs, params, g, 1.0, baseline);
    if (!g.all_finite()) numeric_error("non-finite gradient");
    return g;
}

/// Sum of the trace's log-probabilities recomputed under `params`; the function
/// whose gradient backward() returns (times -reward).
inline double replay_log_prob(const EpisodeTrace& trace, const EpisodeGraphs& graphs, const ModelParams& params) {
    const EpisodeTrace r = replay_episode(trace, graphs, params);
    return r[Modality::video].log_prob_sum() + r[Modality::context].log_prob_sum();
}

// ---- optimizer ----

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<std::vector<double>> m, v;
    long step = 0;
};

/// One Adam update with bias-corrected moments.
inline void adam_step(ModelParams& params, GradientSet& grads, AdamState& state, double lr,
                      const AdamConfig& cfg = {}) {
    auto p = params.tensors();
    auto g = grads.tensors();
    if (p.size() != g.size()) input_error("gradient set does not match parameters");
    if (state.m.empty()) {
        for (const auto& t : p) {
            state.m.emplace_back(static_cast<std::size_t>(t.size()), 0.0);
            state.v.emplace_back(static_cast<std::size_t>(t.size()), 0.0);
        }
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i].size() != g[i].size() || static_cast<std::size_t>(p[i].size()) != state.m[i].size())
            input_error("shape mismatch in optimizer for " + p[i].name);
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (Eigen::Index j = 0; j < p[i].size(); ++j) {
            const double gj = g[i].data[j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
            p[i].data[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.eps);
        }
    }
}

// ---- training ----

enum class DecaySchedule { linear, constant };

struct TrainConfig {
    int horizon = 2;
    int batch_size = 8;
    double learning_rate = 0.001;
    int total_steps = 5000;
    DecaySchedule decay = DecaySchedule::linear;
    std::uint64_t seed = 0;
    std::optional<double> baseline_beta;  // moving-average reward baseline when set
    bool freeze_embeddings = false;
    int patience = 5;
    int eval_every = 100;
    RougeVariant rouge = RougeVariant::f1;

    void validate() const {
        if (horizon < 1) input_error("horizon T must be >= 1");
        if (batch_size < 1) input_error("batch size must be >= 1");
        if (!(learning_rate > 0.0)) input_error("learning rate must be > 0");
        if (total_steps < 0) input_error("total steps must be >= 0");
        if (patience < 1) input_error("patience must be >= 1");
        if (eval_every < 1) input_error("eval_every must be >= 1");
        if (baseline_beta && !(*baseline_beta >= 0.0 && *baseline_beta < 1.0)) input_error("baseline beta must lie in [0,1)");
    }
};

/// lr at optimizer step k (0-based) of K.
inline double scheduled_lr(const TrainConfig& cfg, int k) {
    if (cfg.decay == DecaySchedule::constant || cfg.total_steps == 0) return cfg.learning_rate;
    return cfg.learning_rate * (1.0 - static_cast<double>(k) / static_cast<double>(cfg.total_steps));
}

/// Result of running the reasoning module on one instance.
struct EpisodeResult {
    std::pair<EntityId, EntityId> start;
    EpisodeTrace trace;
    Tokens path_v;
    Tokens path_u;
    double reward = 0.0;
};

inline EpisodeResult run_instance(const ModelParams& params, const Instance& inst, const EpisodeGraphs& graphs,
                                  const Vector& query, int horizon, const DecodeMode& decode,
                                  RougeVariant rouge = RougeVariant::f1) {
    EpisodeResult r;
    r.start = {select_query_entity(graphs.video, params.emb, query), select_query_entity(graphs.context, params.emb, query)};
    r.trace = rollout_episode(graphs, r.start, params, horizon, decode);
    r.path_v = serialize_path(r.trace[Modality::video], inst.graph_v);
    r.path_u = serialize_path(r.trace[Modality::context], inst.graph_u);
    r.reward = compute_reward(r.path_v, r.path_u, inst.reference, rouge);
    return r;
}

struct LogRecord {
    int step = 0;
    double mean_reward = 0.0;
    double loss = 0.0;
    double lr = 0.0;
    std::optional<double> val_reward;
};

inline nlohmann::json to_json(const LogRecord& r) {
    nlohmann::json j{{"step", r.step}, {"mean_reward", r.mean_reward}, {"loss", r.loss}, {"lr", r.lr}};
    // Where a response-generator MLE phase would interleave with this policy-gradient step.
    j["next_phase"] = "mle";
    if (r.val_reward) j["val_reward"] = *r.val_reward;
    return j;
}

struct TrainResult {
    ModelParams params;
    std::vector<LogRecord> log;
    int steps_run = 0;
    int best_step = 0;
    bool early_stopped = false;
};

/// Instances bound once against a fixed vocabulary.
struct PreparedSet {
    const std::vector<Instance>* instances = nullptr;
    std::vector<EpisodeGraphs> graphs;
    std::vector<Vector> queries;
};

inline PreparedSet prepare(const ModelParams& params, const std::vector<Instance>& instances, const WordVectors& vectors) {
    PreparedSet p{&instances, {}, {}};
    for (const auto& inst : instances) {
        p.graphs.push_back(bind_pair(params, inst.graph_v, inst.graph_u));
        Vector q = embed_utterance(inst.utterance, vectors);
        if (q.size() != params.config.dim) q = Vector::Zero(params.config.dim);
        p.queries.push_back(std::move(q));
    }
    return p;
}

inline double mean_greedy_reward(const ModelParams& params, const PreparedSet& set, int horizon, RougeVariant rouge) {
    if (set.graphs.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < set.graphs.size(); ++i)
        acc += run_instance(params, (*set.instances)[i], set.graphs[i], set.queries[i], horizon, DecodeMode::greedy(), rouge).reward;
    return acc / static_cast<double>(set.graphs.size());
}

/// Initial parameters covering every graph in `instances`.
inline ModelParams initial_model(const ModelConfig& model_cfg, const std::vector<const std::vector<Instance>*>& sets,
                                 const WordVectors& vectors, std::uint64_t seed) {
    ModelParams params = init_model(model_cfg, seed);
    for (const auto* s : sets)
        for (const auto& inst : *s) extend_model(params, inst.graph_v, inst.graph_u, vectors, seed);
    return params;
}

/// REINFORCE training with Adam, linear lr decay, and greedy-reward early stopping
/// on the validation split. Returns the best validation parameters (or the final
/// ones when there is no validation split).
inline TrainResult train(const std::vector<Instance>& train_set, const std::vector<Instance>& val_set,
                         const WordVectors& vectors, const ModelConfig& model_cfg, const TrainConfig& cfg,
                         const std::function<void(const LogRecord&)>& on_log = {}) {
    cfg.validate();
    if (train_set.empty()) input_error("training set is empty");

    TrainResult result;
    result.params = initial_model(model_cfg, {&train_set, &val_set}, vectors, cfg.seed);
    ModelParams& params = result.params;
    const PreparedSet train_p = prepare(params, train_set, vectors);
    const PreparedSet val_p = prepare(params, val_set, vectors);

    AdamState adam;
    std::optional<ModelParams> best;
    double best_val = -std::numeric_limits<double>::infinity();
    int bad_evals = 0;
    double baseline = 0.0;

    // Episode stream: a fresh seeded permutation of the training set per epoch.
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    std::uint64_t epoch = 0;
    auto next_index = [&]() {
        if (cursor == order.size()) {
            order.resize(train_set.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            Engine rng(derive_seed(cfg.seed, 0xE90C0000ULL + epoch++));
            shuffle(order, rng);
            cursor = 0;
        }
        return order[cursor++];
    };

    std::uint64_t episode = 0;
    GradientSet grads = params.zero_gradients();
    for (int k = 0; k < cfg.total_steps; ++k) {
        grads.set_zero();
        double reward_sum = 0.0, loss_sum = 0.0;
        const double inv_b = 1.0 / cfg.batch_size;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const std::size_t i = next_index();
            const DecodeMode mode = DecodeMode::sample(derive_seed(cfg.seed, episode++));
            const EpisodeResult r = run_instance(params, train_set[i], train_p.graphs[i], train_p.queries[i],
                                                 cfg.horizon, mode, cfg.rouge);
            const double b0 = cfg.baseline_beta ? baseline : 0.0;
            backward_into(r.trace, r.reward, train_p.graphs[i], params, grads, inv_b, b0);
            reward_sum += r.reward;
            loss_sum += episode_loss(r.trace, r.reward - b0);
        }
        if (!grads.all_finite()) numeric_error("non-finite gradient at optimizer step " + std::to_string(k));
        if (cfg.freeze_embeddings) {
            for (int m = 0; m < 2; ++m) grads.entities[m].setZero(), grads.relations[m].setZero();
        }
        const double lr = scheduled_lr(cfg, k);
        adam_step(params, grads, adam, lr);
        if (cfg.baseline_beta) baseline = *cfg.baseline_beta * baseline + (1.0 - *cfg.baseline_beta) * reward_sum * inv_b;

        LogRecord rec{k + 1, reward_sum * inv_b, loss_sum * inv_b, lr, std::nullopt};
        result.steps_run = k + 1;
        const bool eval_now = !val_set.empty() && ((k + 1) % cfg.eval_every == 0 || k + 1 == cfg.total_steps);
        if (eval_now) {
            const double val = mean_greedy_reward(params, val_p, cfg.horizon, cfg.rouge);
            rec.val_reward = val;
            if (val > best_val) {
                best_val = val;
                best = params;
                result.best_step = k + 1;
                bad_evals = 0;
            } else {
                ++bad_evals;
            }
        }
        result.log.push_back(rec);
        if (on_log) on_log(rec);
        if (eval_now && bad_evals >= cfg.patience) {
            result.early_stopped = true;
            break;
        }
    }
    if (best) params = std::move(*best);
    else result.best_step = result.steps_run;
    return result;
}

}  // namespace copath
