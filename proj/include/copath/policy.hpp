#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "copath/core.hpp"
#include "copath/model.hpp"
#include "copath/rng.hpp"

namespace copath {

struct EpisodeGraphs {
    BoundGraph video;
    BoundGraph context;

    const BoundGraph& operator[](Modality m) const { return m == Modality::video ? video : context; }
};

inline EpisodeGraphs bind_pair(const ModelParams& params, const SemanticGraph& graph_v, const SemanticGraph& graph_u) {
    return {bind(params.emb, graph_v, Modality::video), bind(params.emb, graph_u, Modality::context)};
}

inline constexpr std::array<Modality, 2> kModalities{Modality::video, Modality::context};

/// Edge feature row x_r: the relation embedding, optionally followed by the destination entity embedding.
inline Vector edge_features(const Edge& e, const BoundGraph& g, const EmbeddingSet& emb, bool score_target) {
    const auto& t = emb[g.modality];
    if (!score_target) return t.relations.row(g.relation_row[e.rel]).transpose();
    Vector x(2 * emb.dim);
    x << t.relations.row(g.relation_row[e.rel]).transpose(), t.entities.row(g.entity_row[e.dst]).transpose();
    return x;
}

/// One score per outgoing edge. For the linear scorer the score depends on the
/// edge only through its relation (and destination when score_target is set).
inline std::vector<double> edge_scores(const Vector& h_prev, EntityId entity, std::span<const Edge> edges,
                                       const BoundGraph& g, const EmbeddingSet& emb, const AgentParams& agent,
                                       const ModelConfig& config) {
    if (edges.empty()) input_error("empty action set at entity " + std::to_string(entity));
    const int dh = static_cast<int>(h_prev.size());
    const int d = emb.dim;
    const Vector e_emb = emb[g.modality].entities.row(g.entity_row.at(entity)).transpose();
    std::vector<double> scores;
    scores.reserve(edges.size());
    if (config.scorer == ScorerKind::linear) {
        const auto w = agent.weight.row(0);
        if (w.size() != dh + d + config.edge_feature_width()) input_error("linear scorer width mismatch");
        const double shared = w.head(dh).dot(h_prev.transpose()) + w.segment(dh, d).dot(e_emb.transpose());
        for (const Edge& e : edges)
            scores.push_back(shared + w.tail(config.edge_feature_width()).dot(edge_features(e, g, emb, config.score_target).transpose()));
    } else {
        Vector z(dh + d);
        z << h_prev, e_emb;
        const Vector q = agent.weight * z + agent.bias;
        for (const Edge& e : edges) scores.push_back(edge_features(e, g, emb, config.score_target).dot(q));
    }
    return scores;
}

/// Softmax with max subtraction.
inline std::vector<double> policy_distribution(std::span<const double> scores) {
    if (scores.empty()) input_error("policy over an empty action set");
    const double mx = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) z += (p[i] = std::exp(scores[i] - mx));
    for (double& v : p) v /= z;
    return p;
}

inline std::vector<double> log_policy_distribution(std::span<const double> scores) {
    const double mx = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - mx);
    const double lse = mx + std::log(z);
    std::vector<double> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] - lse;
    return out;
}

struct StepRecord {
    EntityId entity;  // location before the move
    int edge_index;   // into outgoing_edges(entity)
    Edge edge;
    double prob;
    double log_prob;
};

struct AgentTrace {
    bool enabled = true;
    EntityId start = 0;
    std::vector<StepRecord> steps;

    std::vector<EntityId> entities() const {
        std::vector<EntityId> out{start};
        for (const auto& s : steps) out.push_back(s.edge.dst);
        return out;
    }
    std::vector<RelationId> relations() const {
        std::vector<RelationId> out;
        for (const auto& s : steps) out.push_back(s.edge.rel);
        return out;
    }
    double log_prob_sum() const {
        double acc = 0.0;
        for (const auto& s : steps) acc += s.log_prob;
        return acc;
    }
};

enum class DecodeKind { sample, greedy, beam };

struct DecodeMode {
    DecodeKind kind = DecodeKind::greedy;
    std::uint64_t seed = 0;  // sample
    int beam_width = 1;      // beam

    static DecodeMode greedy() { return {DecodeKind::greedy, 0, 1}; }
    static DecodeMode sample(std::uint64_t seed) { return {DecodeKind::sample, seed, 1}; }
    static DecodeMode beam(int width) { return {DecodeKind::beam, 0, width}; }
};

struct EpisodeTrace {
    int horizon = 1;
    DecodeKind mode = DecodeKind::greedy;
    std::array<AgentTrace, 2> agents;
    std::vector<std::vector<CommState>> comm_states;  // per communicator: h_0 .. h_{T-1}

    AgentTrace& operator[](Modality m) { return agents[static_cast<int>(m)]; }
    const AgentTrace& operator[](Modality m) const { return agents[static_cast<int>(m)]; }
};

// ---- forward machinery shared by rollout, replay and backward ----

struct AgentStepCache {
    int comm = 0;
    EntityId entity = 0;
    std::vector<Edge> edges;
    Matrix features;  // one row per edge
    Vector h_prev;
    Vector e_emb;
    Vector q;  // bilinear: W [h; E(e)] + b
    std::vector<double> probs;
    int chosen = 0;
};

struct CommStepCache {
    Vector concat;
    CellCache cell;
    std::array<Edge, 2> moves{};  // chosen edges, indexed by modality
};

struct EpisodeCache {
    std::vector<std::array<std::optional<AgentStepCache>, 2>> agent_steps;  // [t][modality]
    std::vector<std::vector<CommStepCache>> comm_steps;                     // [t][comm]
};

namespace detail {

inline AgentStepCache score_step(const Vector& h_prev, int comm, EntityId entity, const BoundGraph& g,
                                 const ModelParams& params, const AgentParams& agent) {
    const auto& cfg = params.config;
    AgentStepCache s;
    s.comm = comm;
    s.entity = entity;
    auto out = g.graph->outgoing_edges(entity);
    s.edges.assign(out.begin(), out.end());
    if (s.edges.empty()) input_error("empty action set at entity " + std::to_string(entity));
    const int dx = cfg.edge_feature_width();
    s.features.resize(static_cast<Eigen::Index>(s.edges.size()), dx);
    for (std::size_t k = 0; k < s.edges.size(); ++k)
        s.features.row(static_cast<Eigen::Index>(k)) = edge_features(s.edges[k], g, params.emb, cfg.score_target).transpose();
    s.h_prev = h_prev;
    s.e_emb = params.emb[g.modality].entities.row(g.entity_row[entity]).transpose();
    Vector scores;
    if (cfg.scorer == ScorerKind::linear) {
        const auto w = agent.weight.row(0);
        const int dh = cfg.d_h, d = cfg.dim;
        const double shared = w.head(dh).dot(h_prev.transpose()) + w.segment(dh, d).dot(s.e_emb.transpose());
        scores = (s.features * w.tail(dx).transpose()).array() + shared;
    } else {
        Vector z(cfg.d_h + cfg.dim);
        z << h_prev, s.e_emb;
        s.q = agent.weight * z + agent.bias;
        scores = s.features * s.q;
    }
    if (!scores.allFinite()) numeric_error("non-finite edge score at entity " + std::to_string(entity));
    s.probs = policy_distribution(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())));
    return s;
}

inline int greedy_choice(const std::vector<double>& probs) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(probs.size()); ++k)
        if (probs[k] > probs[best]) best = k;
    return best;
}

inline int sample_choice(const std::vector<double>& probs, Engine& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (int k = 0; k < static_cast<int>(probs.size()); ++k) {
        acc += probs[k];
        if (u < acc) return k;
    }
    // Rounding can leave acc marginally below 1; fall back to the last positive-mass edge.
    for (int k = static_cast<int>(probs.size()) - 1; k >= 0; --k)
        if (probs[k] > 0.0) return k;
    return 0;
}

inline StepRecord make_record(const AgentStepCache& s) {
    const double p = s.probs[s.chosen];
    return {s.entity, s.chosen, s.edges[s.chosen], p, std::log(p)};
}

/// Communicator update after both agents moved at step t.
inline std::vector<CommState> advance_comms(const std::vector<CommState>& states, const std::array<Edge, 2>& moves,
                                            const EpisodeGraphs& graphs, const ModelParams& params,
                                            std::vector<CommStepCache>* caches) {
    const auto& cfg = params.config;
    std::vector<CommState> next(states.size());
    if (caches) caches->assign(states.size(), {});
    auto run = [&](int k, Vector concat) {
        CellCache cell;
        const Vector input = comm_project(concat, params.comms[k]);
        next[k] = comm_step(states[k], input, params.comms[k], caches ? &cell : nullptr);
        if (caches) (*caches)[k] = {std::move(concat), std::move(cell), moves};
    };
    if (cfg.mode == AblationMode::no_comm) {
        for (Modality m : kModalities) {
            const int k = static_cast<int>(m);
            const auto& g = graphs[m];
            const auto& t = params.emb[m];
            Vector concat(2 * cfg.dim);
            concat << t.relations.row(g.relation_row[moves[k].rel]).transpose(),
                t.entities.row(g.entity_row[moves[k].src]).transpose();
            run(k, std::move(concat));
        }
    } else {
        run(0, comm_input_concat(moves[0].rel, moves[0].src, moves[1].rel, moves[1].src, graphs.video, graphs.context, params));
    }
    return next;
}

/// Chooser: (modality, step index, probs) -> edge index.
template <class Chooser>
EpisodeTrace run_episode(const EpisodeGraphs& graphs, std::pair<EntityId, EntityId> start, const ModelParams& params,
                         int horizon, DecodeKind kind, Chooser&& choose, EpisodeCache* cache) {
    const auto& cfg = params.config;
    if (horizon < 1) input_error("horizon T must be >= 1");
    if (!graphs.video.graph->has_entity(start.first)) input_error("invalid video start entity " + std::to_string(start.first));
    if (!graphs.context.graph->has_entity(start.second)) input_error("invalid context start entity " + std::to_string(start.second));

    EpisodeTrace trace;
    trace.horizon = horizon;
    trace.mode = kind;
    trace[Modality::video] = {cfg.agent_enabled(Modality::video), start.first, {}};
    trace[Modality::context] = {cfg.agent_enabled(Modality::context), start.second, {}};

    std::vector<CommState> states(params.comms.size(), CommState::zero(cfg.d_h));
    trace.comm_states.assign(params.comms.size(), {});
    for (std::size_t k = 0; k < states.size(); ++k) trace.comm_states[k].push_back(states[k]);
    std::array<EntityId, 2> at{start.first, start.second};

    if (cache) {
        cache->agent_steps.assign(static_cast<std::size_t>(horizon - 1), {});
        cache->comm_steps.assign(static_cast<std::size_t>(horizon - 1), {});
    }
    for (int t = 0; t + 1 < horizon; ++t) {
        std::array<Edge, 2> moves{};
        for (Modality m : kModalities) {
            const int a = static_cast<int>(m);
            moves[a] = {at[a], 0, at[a]};
            if (!trace.agents[a].enabled) continue;
            const int comm = cfg.mode == AblationMode::no_comm ? a : 0;
            AgentStepCache s = score_step(states[comm].h, comm, at[a], graphs[m], params, params.agents[a]);
            s.chosen = choose(m, t, s.probs);
            trace.agents[a].steps.push_back(make_record(s));
            moves[a] = s.edges[s.chosen];
            at[a] = moves[a].dst;
            if (cache) cache->agent_steps[t][a] = std::move(s);
        }
        states = advance_comms(states, moves, graphs, params, cache ? &cache->comm_steps[t] : nullptr);
        for (std::size_t k = 0; k < states.size(); ++k) trace.comm_states[k].push_back(states[k]);
    }
    return trace;
}

}  // namespace detail

inline EpisodeTrace beam_episode(const EpisodeGraphs& graphs, std::pair<EntityId, EntityId> start,
                                 const ModelParams& params, int horizon, int width);

/// Rolls both agents forward for T-1 steps. Each step: both agents score their
/// outgoing edges against h_{t-1} and move; then the communicator ingests (a_t, o_t).
inline EpisodeTrace rollout_episode(const EpisodeGraphs& graphs, std::pair<EntityId, EntityId> start,
                                    const ModelParams& params, int horizon, const DecodeMode& mode) {
    switch (mode.kind) {
        case DecodeKind::greedy:
            return detail::run_episode(graphs, start, params, horizon, DecodeKind::greedy,
                                       [](Modality, int, const std::vector<double>& p) { return detail::greedy_choice(p); }, nullptr);
        case DecodeKind::sample: {
            Engine rng(mode.seed);
            return detail::run_episode(
                graphs, start, params, horizon, DecodeKind::sample,
                [&rng](Modality, int, const std::vector<double>& p) { return detail::sample_choice(p, rng); }, nullptr);
        }
        case DecodeKind::beam:
            return beam_episode(graphs, start, params, horizon, mode.beam_width);
    }
    return {};
}

/// Re-runs a recorded trace's actions under `params`, filling `cache` if given.
inline EpisodeTrace replay_episode(const EpisodeTrace& trace, const EpisodeGraphs& graphs, const ModelParams& params,
                                   EpisodeCache* cache = nullptr) {
    return detail::run_episode(
        graphs, {trace[Modality::video].start, trace[Modality::context].start}, params, trace.horizon, trace.mode,
        [&trace](Modality m, int t, const std::vector<double>& p) {
            const int k = trace[m].steps.at(static_cast<std::size_t>(t)).edge_index;
            if (k < 0 || k >= static_cast<int>(p.size())) input_error("trace does not match the graph");
            return k;
        },
        cache);
}

/// Joint beam over both agents' edges, ranked by the summed log-probability.
inline EpisodeTrace beam_episode(const EpisodeGraphs& graphs, std::pair<EntityId, EntityId> start,
                                 const ModelParams& params, int horizon, int width) {
    if (width < 1) input_error("beam width must be >= 1");
    const auto& cfg = params.config;
    struct Hyp {
        EpisodeTrace trace;
        std::vector<CommState> states;
        std::array<EntityId, 2> at;
        double score;
    };
    // Seed hypothesis: a zero-step trace from the start entities.
    EpisodeTrace seed = detail::run_episode(graphs, start, params, 1, DecodeKind::beam,
                                            [](Modality, int, const std::vector<double>&) { return 0; }, nullptr);
    seed.horizon = horizon;
    std::vector<Hyp> beam{{seed, std::vector<CommState>(params.comms.size(), CommState::zero(cfg.d_h)), {start.first, start.second}, 0.0}};

    for (int t = 0; t + 1 < horizon; ++t) {
        struct Cand {
            int hyp;
            std::array<std::optional<AgentStepCache>, 2> steps;
            std::array<int, 2> choice;
            double score;
        };
        std::vector<Cand> cands;
        for (int h = 0; h < static_cast<int>(beam.size()); ++h) {
            std::array<std::optional<AgentStepCache>, 2> steps;
            for (Modality m : kModalities) {
                const int a = static_cast<int>(m);
                if (!beam[h].trace.agents[a].enabled) continue;
                const int comm = cfg.mode == AblationMode::no_comm ? a : 0;
                steps[a] = detail::score_step(beam[h].states[comm].h, comm, beam[h].at[a], graphs[m], params, params.agents[a]);
            }
            const int nv = steps[0] ? static_cast<int>(steps[0]->probs.size()) : 1;
            const int nu = steps[1] ? static_cast<int>(steps[1]->probs.size()) : 1;
            for (int i = 0; i < nv; ++i)
                for (int j = 0; j < nu; ++j) {
                    double s = beam[h].score;
                    if (steps[0]) s += std::log(steps[0]->probs[i]);
                    if (steps[1]) s += std::log(steps[1]->probs[j]);
                    cands.push_back({h, steps, {i, j}, s});
                }
        }
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.score > b.score; });
        if (static_cast<int>(cands.size()) > width) cands.resize(static_cast<std::size_t>(width));

        std::vector<Hyp> next;
        for (auto& c : cands) {
            Hyp h = beam[c.hyp];
            std::array<Edge, 2> moves{};
            for (int a = 0; a < 2; ++a) {
                moves[a] = {h.at[a], 0, h.at[a]};
                if (!c.steps[a]) continue;
                c.steps[a]->chosen = c.choice[a];
                h.trace.agents[a].steps.push_back(detail::make_record(*c.steps[a]));
                moves[a] = c.steps[a]->edges[c.choice[a]];
                h.at[a] = moves[a].dst;
            }
            h.states = detail::advance_comms(h.states, moves, graphs, params, nullptr);
            for (std::size_t k = 0; k < h.states.size(); ++k) h.trace.comm_states[k].push_back(h.states[k]);
            h.score = c.score;
            next.push_back(std::move(h));
        }
        beam = std::move(next);
    }
    return beam.front().trace;
}

/// Entity and relation name tokens in path order. A STAY step adds nothing.
inline Tokens serialize_path(const AgentTrace& path, const SemanticGraph& graph) {
    Tokens out;
    if (!path.enabled) return out;
    auto append = [&out](const Tokens& t) { out.insert(out.end(), t.begin(), t.end()); };
    append(graph.entity_name(path.start));
    for (const auto& s : path.steps) {
        if (graph.is_stay(s.edge.rel)) continue;
        append(graph.relation_name(s.edge.rel));
        append(graph.entity_name(s.edge.dst));
    }
    return out;
}

}  // namespace copath
