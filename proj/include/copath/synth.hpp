#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "copath/core.hpp"
#include "copath/learn.hpp"
#include "copath/reward.hpp"
#include "copath/rng.hpp"
#include "copath/semgraph.hpp"

namespace copath {

/// A walk on one graph: start entity plus the edges taken (STAY edges included).
struct Walk {
    EntityId start = 0;
    std::vector<Edge> edges;

    friend bool operator==(const Walk&, const Walk&) = default;
};

inline Tokens serialize_walk(const Walk& w, const SemanticGraph& g) {
    AgentTrace t{true, w.start, {}};
    for (const auto& e : w.edges) t.steps.push_back({e.src, 0, e, 1.0, 0.0});
    return serialize_path(t, g);
}

inline Walk walk_of(const AgentTrace& t) {
    Walk w{t.start, {}};
    for (const auto& s : t.steps) w.edges.push_back(s.edge);
    return w;
}

/// One start pair of a task: its utterance, reference and planted walks.
struct TaskVariant {
    EntityId start_v = 0;
    EntityId start_u = 0;
    Tokens utterance;
    Reference reference;
    std::array<Walk, 2> planted;
};

struct SyntheticTask {
    Instance instance;
    std::array<Walk, 2> planted;  // indexed by modality
    std::vector<TaskVariant> variants;  // all start pairs of the design; variants[drawn] is the instance
    int drawn = 0;
    int horizon = 2;
    nlohmann::json metadata;
};

struct GenConfig {
    int nodes = 30;
    int branching = 3;
    int horizon = 2;
    int vocab = 120;                 // entity-token pool size per modality
    int answer_relations = 8;        // relation tokens used on planted paths
    int distractor_relations = 24;   // relation tokens used elsewhere
    bool distractors = true;
    bool perturb_utterance = false;
    int start_pairs = 2;             // coordination: start options per graph (1 or 2)
    int key_tokens = 4;              // coordination: tokens per start family
    int branch_name_tokens = 4;      // coordination: name length of branch targets
    int dim = 100;

    void validate(bool coordination) const {
        if (nodes < 2) input_error("synthetic graphs need at least 2 nodes");
        if (branching < 1) input_error("branching must be >= 1");
        if (branching > nodes - 1) input_error("infeasible config: branching exceeds nodes - 1");
        if (horizon < 1) input_error("horizon must be >= 1");
        if (horizon > nodes) input_error("infeasible config: planted walk longer than the node count");
        if (vocab < nodes) input_error("infeasible config: entity vocabulary smaller than the node count");
        if (answer_relations < 1 || distractor_relations < 1) input_error("relation vocabularies must be non-empty");
        if (coordination && start_pairs == 2) {
            if (horizon != 3) input_error("coordination tasks with two start pairs need horizon 3");
            if (branching < 2) input_error("coordination tasks need branching >= 2");
            if (key_tokens < 1 || branch_name_tokens < 1) input_error("coordination name sizes must be positive");
            if (nodes < 2 * (3 + 1)) input_error("coordination tasks need at least 8 nodes");
            if (vocab < nodes * branch_name_tokens) input_error("infeasible config: vocabulary too small for branch names");
        }
        if (start_pairs != 1 && start_pairs != 2) input_error("start_pairs must be 1 or 2");
    }

    nlohmann::json to_json() const {
        return {{"nodes", nodes}, {"branching", branching}, {"horizon", horizon}, {"vocab", vocab},
                {"answer_relations", answer_relations}, {"distractor_relations", distractor_relations},
                {"distractors", distractors}, {"perturb_utterance", perturb_utterance}, {"start_pairs", start_pairs},
                {"key_tokens", key_tokens}, {"branch_name_tokens", branch_name_tokens}, {"dim", dim}};
    }
};

/// Deterministic unit vector for a synthetic token; independent draws in 100
/// dimensions are nearly orthogonal, so entity merging never fires by accident.
inline Vector synthetic_vector(const std::string& token, int dim) {
    Engine rng(derive_seed(0x5EEDC0DEULL, hash_string(token)));
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = standard_normal(rng);
    return v / v.norm();
}

/// Word vectors for every token appearing in the tasks' graphs.
inline WordVectors synthetic_word_vectors(const std::vector<SyntheticTask>& tasks, int dim) {
    std::set<std::string> tokens;
    for (const auto& t : tasks)
        for (const SemanticGraph* g : {&t.instance.graph_v, &t.instance.graph_u}) {
            for (const auto& n : g->entity_names()) tokens.insert(n.begin(), n.end());
            for (RelationId r = 0; r < static_cast<RelationId>(g->num_relations()); ++r)
                if (!g->is_stay(r)) tokens.insert(g->relation_name(r).begin(), g->relation_name(r).end());
        }
    WordVectors wv(dim);
    for (const auto& tok : tokens) wv.add(tok, synthetic_vector(tok, dim));
    return wv;
}

// ---- oracle ----

inline constexpr std::size_t kMaxOracleWalks = 1'000'000;

/// Every walk of T-1 steps from `start`, in lexicographic order of edge indices.
inline std::vector<Walk> enumerate_walks(const SemanticGraph& g, EntityId start, int horizon) {
    if (!g.has_entity(start)) input_error("oracle start entity does not exist");
    std::vector<Walk> out;
    Walk cur{start, {}};
    auto rec = [&](auto&& self, EntityId at, int left) -> void {
        if (left == 0) {
            if (out.size() >= kMaxOracleWalks) input_error("oracle search space exceeds 1e6 walks");
            out.push_back(cur);
            return;
        }
        for (const Edge& e : g.outgoing_edges(at)) {
            cur.edges.push_back(e);
            self(self, e.dst, left - 1);
            cur.edges.pop_back();
        }
    };
    rec(rec, start, horizon - 1);
    return out;
}

struct OracleResult {
    double max_reward = 0.0;
    std::array<Walk, 2> argmax;
};

/// Exhaustive search over horizon-T walk pairs. The reward is a sum of one term
/// per graph, so each side is maximized independently; ties keep the walk with
/// the lowest lexicographic edge indices.
inline OracleResult brute_force_oracle(const SemanticGraph& graph_v, const SemanticGraph& graph_u,
                                       std::pair<EntityId, EntityId> start, const Reference& ref, int horizon,
                                       RougeVariant rouge = RougeVariant::f1) {
    if (horizon < 1) input_error("horizon must be >= 1");
    OracleResult res;
    const std::array<const SemanticGraph*, 2> graphs{&graph_v, &graph_u};
    const std::array<EntityId, 2> starts{start.first, start.second};
    for (int a = 0; a < 2; ++a) {
        const auto walks = enumerate_walks(*graphs[a], starts[a], horizon);
        double best = -1.0;
        for (const auto& w : walks) {
            const double s = path_rouge(serialize_walk(w, *graphs[a]), ref, rouge);
            if (s > best) best = s, res.argmax[a] = w;
        }
        res.max_reward += best;
    }
    return res;
}

inline OracleResult brute_force_oracle(const SyntheticTask& task, int horizon, RougeVariant rouge = RougeVariant::f1) {
    const auto& v = task.variants.at(static_cast<std::size_t>(task.drawn));
    return brute_force_oracle(task.instance.graph_v, task.instance.graph_u, {v.start_v, v.start_u}, v.reference,
                              horizon, rouge);
}

/// Best expected reward over the task's start pairs (uniform) for agents that
/// each see only their own start: per agent, max over walks from its own start
/// of the mean ROUGE across the other agent's possible starts.
inline double independence_ceiling(const SyntheticTask& task, int horizon, RougeVariant rouge = RougeVariant::f1) {
    const std::array<const SemanticGraph*, 2> graphs{&task.instance.graph_v, &task.instance.graph_u};
    double total = 0.0;
    for (int a = 0; a < 2; ++a) {
        std::map<EntityId, std::vector<const TaskVariant*>> by_own;
        for (const auto& v : task.variants) by_own[a == 0 ? v.start_v : v.start_u].push_back(&v);
        double agent_value = 0.0;
        for (const auto& [own, group] : by_own) {
            double best = 0.0;
            for (const auto& w : enumerate_walks(*graphs[a], own, horizon)) {
                const Tokens toks = serialize_walk(w, *graphs[a]);
                double acc = 0.0;
                for (const auto* v : group) acc += path_rouge(toks, v->reference, rouge);
                best = std::max(best, acc / static_cast<double>(group.size()));
            }
            agent_value += best * static_cast<double>(group.size());
        }
        total += agent_value / static_cast<double>(task.variants.size());
    }
    return total;
}

/// Best expected reward when each agent may condition on both starts.
inline double coordinated_max(const SyntheticTask& task, int horizon, RougeVariant rouge = RougeVariant::f1) {
    double acc = 0.0;
    for (const auto& v : task.variants)
        acc += brute_force_oracle(task.instance.graph_v, task.instance.graph_u, {v.start_v, v.start_u}, v.reference,
                                  horizon, rouge).max_reward;
    return acc / static_cast<double>(task.variants.size());
}

// ---- generators ----

namespace detail {

inline const char* prefix(int modality) { return modality == 0 ? "v" : "u"; }

/// Draws `count` distinct indices from [0, n).
inline std::vector<int> draw_distinct(Engine& rng, int n, int count) {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    shuffle(all, rng);
    all.resize(static_cast<std::size_t>(count));
    return all;
}

struct RawEdge {
    int src;
    Tokens rel;
    int dst;
};

inline Walk find_walk(const SemanticGraph& g, const std::vector<Tokens>& names, const std::vector<RawEdge>& raw_path,
                      int start) {
    Walk w{*g.find_entity(names[static_cast<std::size_t>(start)]), {}};
    for (const auto& re : raw_path) {
        const EntityId s = *g.find_entity(names[static_cast<std::size_t>(re.src)]);
        const EntityId d = *g.find_entity(names[static_cast<std::size_t>(re.dst)]);
        for (const Edge& e : g.outgoing_edges(s))
            if (e.dst == d && g.relation_name(e.rel) == re.rel) w.edges.push_back(e);
    }
    return w;
}

inline SemanticGraph graph_from_raw(const std::vector<Tokens>& names, std::vector<RawEdge> edges, Engine& rng) {
    shuffle(edges, rng);  // record order decides ids; keep it uninformative
    std::vector<TripletRecord> records;
    for (const auto& e : edges)
        records.push_back({names[static_cast<std::size_t>(e.src)], e.rel, names[static_cast<std::size_t>(e.dst)], std::nullopt});
    // Isolated nodes still need to exist; a self-contained record set covers only endpoints.
    std::set<int> covered;
    for (const auto& e : edges) covered.insert(e.src), covered.insert(e.dst);
    SemanticGraph g = records.empty() ? SemanticGraph({names[0]}, {}, {}) : build_graph(records);
    if (covered.size() == names.size()) return g;
    std::vector<Tokens> ents = g.entity_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (!covered.count(static_cast<int>(i)) && !g.find_entity(names[i])) ents.push_back(names[i]);
    std::vector<Tokens> rels(g.relation_names().begin(), g.relation_names().end() - 1);
    std::vector<Edge> labeled(g.edges().begin(), g.edges().begin() + static_cast<std::ptrdiff_t>(g.num_labeled_edges()));
    return SemanticGraph(std::move(ents), std::move(rels), std::move(labeled));
}

/// Fills every node up to `branching` non-STAY edges with distractor relations.
inline void add_distractors(std::vector<RawEdge>& edges, int nodes, int branching, const std::string& rel_prefix,
                            int rel_vocab, Engine& rng) {
    std::vector<std::set<int>> targets(static_cast<std::size_t>(nodes));
    for (const auto& e : edges) targets[static_cast<std::size_t>(e.src)].insert(e.dst);
    for (int u = 0; u < nodes; ++u) {
        auto& tu = targets[static_cast<std::size_t>(u)];
        while (static_cast<int>(tu.size()) < branching) {
            const int v = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(nodes)));
            if (v == u || tu.count(v)) continue;
            tu.insert(v);
            edges.push_back({u, {rel_prefix + std::to_string(uniform_index(rng, static_cast<std::size_t>(rel_vocab)))}, v});
        }
    }
}

inline Reference reference_from(const std::array<Walk, 2>& planted, const SemanticGraph& gv, const SemanticGraph& gu) {
    return {{serialize_walk(planted[0], gv), serialize_walk(planted[1], gu)}, {}};
}

}  // namespace detail

/// Two random graphs, each with one planted walk of the configured horizon from
/// a designated start. Planted edges use "answer" relation tokens, all other
/// edges "distractor" tokens. The utterance names both starts and the reference
/// holds both planted paths' serialized tokens.
inline SyntheticTask gen_task(std::uint64_t seed, const GenConfig& cfg) {
    cfg.validate(false);
    SyntheticTask task;
    task.horizon = cfg.horizon;
    std::array<std::vector<Tokens>, 2> names;
    std::array<std::vector<detail::RawEdge>, 2> planted_raw;
    std::array<SemanticGraph, 2> graphs;
    Tokens utterance, noise;
    for (int m = 0; m < 2; ++m) {
        const std::string p = detail::prefix(m);
        Engine rng(derive_seed(seed, 0xA11CE0ULL + static_cast<std::uint64_t>(m)));
        for (int k : detail::draw_distinct(rng, cfg.vocab, cfg.nodes)) names[m].push_back({p + "e" + std::to_string(k)});
        // Planted walk over distinct nodes starting at node 0.
        std::vector<int> path{0};
        const auto rest = detail::draw_distinct(rng, cfg.nodes - 1, cfg.horizon - 1);
        for (int k : rest) path.push_back(k + 1);
        std::vector<detail::RawEdge> edges;
        for (std::size_t i = 0; i + 1 < path.size(); ++i)
            edges.push_back({path[i], {p + "a" + std::to_string(uniform_index(rng, static_cast<std::size_t>(cfg.answer_relations)))}, path[i + 1]});
        planted_raw[m] = edges;
        if (cfg.distractors) detail::add_distractors(edges, cfg.nodes, cfg.branching, p + "d", cfg.distractor_relations, rng);
        graphs[m] = detail::graph_from_raw(names[m], edges, rng);
        task.planted[m] = detail::find_walk(graphs[m], names[m], planted_raw[m], 0);
        utterance.insert(utterance.end(), names[m][0].begin(), names[m][0].end());
        if (cfg.perturb_utterance) noise.push_back(names[m][1 + uniform_index(rng, static_cast<std::size_t>(cfg.nodes - 1))][0]);
    }
    if (cfg.perturb_utterance) {
        // Starts appear twice, one other entity per graph once: query selection still prefers the starts.
        Tokens twice = utterance;
        twice.insert(twice.end(), utterance.begin(), utterance.end());
        twice.insert(twice.end(), noise.begin(), noise.end());
        utterance = std::move(twice);
    }
    task.instance = {std::move(graphs[0]), std::move(graphs[1]), std::move(utterance), {}};
    task.instance.reference = detail::reference_from(task.planted, task.instance.graph_v, task.instance.graph_u);
    task.variants = {{task.planted[0].start, task.planted[1].start, task.instance.utterance, task.instance.reference, task.planted}};
    task.drawn = 0;
    task.metadata = {{"kind", "task"}, {"seed", seed}, {"config", cfg.to_json()}};

    // For small search spaces, confirm the planted pair is the unique reward maximum.
    std::size_t space = 1;
    for (int i = 1; i < cfg.horizon; ++i) space *= static_cast<std::size_t>(cfg.branching + 1);
    if (space <= 4096) {
        for (int m = 0; m < 2; ++m) {
            const SemanticGraph& g = m == 0 ? task.instance.graph_v : task.instance.graph_u;
            int at_max = 0;
            for (const auto& w : enumerate_walks(g, task.planted[m].start, cfg.horizon))
                if (path_rouge(serialize_walk(w, g), task.instance.reference) >= 1.0 - 1e-12) ++at_max;
            if (at_max != 1) input_error("generated task has a non-unique optimum; adjust the vocabulary sizes");
        }
    }
    return task;
}

/// Coordination variant: each graph has two candidate starts whose names come
/// from two token families. After one shared link step, each agent must pick
/// between an X branch and a Y branch, and the rewarded branch is decided by
/// the family of the OTHER agent's start. Only the communicator carries that.
inline SyntheticTask gen_coordination_task(std::uint64_t seed, const GenConfig& cfg) {
    if (cfg.start_pairs == 1) {
        SyntheticTask t = gen_task(seed, cfg);
        t.metadata["kind"] = "coordination";
        return t;
    }
    cfg.validate(true);
    SyntheticTask task;
    task.horizon = cfg.horizon;
    Engine pair_rng(derive_seed(seed, 0xD4A3ULL));
    const int drawn_v = static_cast<int>(uniform_index(pair_rng, 2));
    const int drawn_u = static_cast<int>(uniform_index(pair_rng, 2));

    struct Layout {
        std::vector<Tokens> names;
        std::array<int, 2> start, mid, x, y;
        std::vector<detail::RawEdge> edges;
        std::array<Tokens, 2> link_rel, x_rel, y_rel;
    };
    std::array<Layout, 2> lay;
    std::array<SemanticGraph, 2> graphs;
    for (int m = 0; m < 2; ++m) {
        const std::string p = detail::prefix(m);
        Engine rng(derive_seed(seed, 0xC00DULL + static_cast<std::uint64_t>(m)));
        Layout& L = lay[m];
        auto pool = detail::draw_distinct(rng, cfg.vocab, cfg.vocab);
        std::size_t next_tok = 0;
        auto fresh = [&](int n) {
            Tokens t;
            for (int i = 0; i < n; ++i) t.push_back(p + "e" + std::to_string(pool[next_tok++]));
            return t;
        };
        for (int i = 0; i < 2; ++i) {
            L.start[i] = static_cast<int>(L.names.size());
            L.names.push_back({p + "k" + std::to_string(i) + "_" + std::to_string(uniform_index(rng, static_cast<std::size_t>(cfg.key_tokens)))});
            L.mid[i] = static_cast<int>(L.names.size());
            L.names.push_back(fresh(1));
            L.x[i] = static_cast<int>(L.names.size());
            L.names.push_back(fresh(cfg.branch_name_tokens));
            L.y[i] = static_cast<int>(L.names.size());
            L.names.push_back(fresh(cfg.branch_name_tokens));
            L.link_rel[i] = {p + "l" + std::to_string(uniform_index(rng, static_cast<std::size_t>(cfg.answer_relations)))};
            L.x_rel[i] = {p + "x" + std::to_string(uniform_index(rng, static_cast<std::size_t>(cfg.answer_relations)))};
            L.y_rel[i] = {p + "y" + std::to_string(uniform_index(rng, static_cast<std::size_t>(cfg.answer_relations)))};
            L.edges.push_back({L.start[i], L.link_rel[i], L.mid[i]});
            L.edges.push_back({L.mid[i], L.x_rel[i], L.x[i]});
            L.edges.push_back({L.mid[i], L.y_rel[i], L.y[i]});
        }
        while (static_cast<int>(L.names.size()) < cfg.nodes) L.names.push_back(fresh(1));
        if (cfg.distractors) detail::add_distractors(L.edges, cfg.nodes, cfg.branching, p + "d", cfg.distractor_relations, rng);
        graphs[m] = detail::graph_from_raw(L.names, L.edges, rng);
    }

    // Agent m starting at family i, partner at family j: link, then X when j == 0 else Y.
    auto planted_walk = [&](int m, int own, int partner) {
        const Layout& L = lay[m];
        const int target = partner == 0 ? L.x[own] : L.y[own];
        const Tokens& rel = partner == 0 ? L.x_rel[own] : L.y_rel[own];
        return detail::find_walk(graphs[m], L.names, {{L.start[own], L.link_rel[own], L.mid[own]}, {L.mid[own], rel, target}},
                                 L.start[own]);
    };
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const std::array<Walk, 2> pw{planted_walk(0, i, j), planted_walk(1, j, i)};
            Tokens utt = lay[0].names[static_cast<std::size_t>(lay[0].start[i])];
            const Tokens& su = lay[1].names[static_cast<std::size_t>(lay[1].start[j])];
            utt.insert(utt.end(), su.begin(), su.end());
            task.variants.push_back({pw[0].start, pw[1].start, std::move(utt), detail::reference_from(pw, graphs[0], graphs[1]), pw});
            if (i == drawn_v && j == drawn_u) {
                task.planted = pw;
                task.drawn = static_cast<int>(task.variants.size()) - 1;
            }
        }
    const TaskVariant& dv = task.variants[static_cast<std::size_t>(task.drawn)];
    task.instance = {std::move(graphs[0]), std::move(graphs[1]), dv.utterance, dv.reference};
    task.metadata = {{"kind", "coordination"}, {"seed", seed}, {"pair", {drawn_v, drawn_u}}, {"config", cfg.to_json()}};
    return task;
}

// ---- task files ----

inline constexpr int kTaskFormatVersion = 1;

inline nlohmann::json reference_to_json(const Reference& r) { return {{"triplets", r.triplets}, {"fallback", r.fallback}}; }

inline Reference reference_from_json(const nlohmann::json& j) {
    return {j.at("triplets").get<std::vector<Tokens>>(), j.value("fallback", Tokens{})};
}

inline nlohmann::json walk_to_json(const Walk& w) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : w.edges) edges.push_back({e.src, e.rel, e.dst});
    return {{"start", w.start}, {"edges", edges}};
}

inline Walk walk_from_json(const nlohmann::json& j) {
    Walk w{j.at("start").get<EntityId>(), {}};
    for (const auto& e : j.at("edges")) w.edges.push_back({e.at(0).get<EntityId>(), e.at(1).get<RelationId>(), e.at(2).get<EntityId>()});
    return w;
}

inline nlohmann::json task_to_json(const SyntheticTask& t) {
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& v : t.variants)
        variants.push_back({{"start_v", v.start_v},
                            {"start_u", v.start_u},
                            {"utterance", v.utterance},
                            {"reference", reference_to_json(v.reference)},
                            {"planted", {{"video", walk_to_json(v.planted[0])}, {"context", walk_to_json(v.planted[1])}}}});
    return {{"format", "copath.task"},
            {"version", kTaskFormatVersion},
            {"graph_v", graph_to_json(t.instance.graph_v)},
            {"graph_u", graph_to_json(t.instance.graph_u)},
            {"utterance", t.instance.utterance},
            {"reference", reference_to_json(t.instance.reference)},
            {"horizon", t.horizon},
            {"planted", {{"video", walk_to_json(t.planted[0])}, {"context", walk_to_json(t.planted[1])}}},
            {"variants", variants},
            {"drawn", t.drawn},
            {"metadata", t.metadata}};
}

inline SyntheticTask task_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "copath.task") input_error("not a task manifest");
        if (j.at("version").get<int>() != kTaskFormatVersion) input_error("unsupported task manifest version");
        SyntheticTask t;
        t.instance = {graph_from_json(j.at("graph_v")), graph_from_json(j.at("graph_u")),
                      j.at("utterance").get<Tokens>(), reference_from_json(j.at("reference"))};
        t.horizon = j.at("horizon").get<int>();
        t.planted = {walk_from_json(j.at("planted").at("video")), walk_from_json(j.at("planted").at("context"))};
        for (const auto& v : j.at("variants"))
            t.variants.push_back({v.at("start_v").get<EntityId>(),
                                  v.at("start_u").get<EntityId>(),
                                  v.at("utterance").get<Tokens>(),
                                  reference_from_json(v.at("reference")),
                                  {walk_from_json(v.at("planted").at("video")), walk_from_json(v.at("planted").at("context"))}});
        t.drawn = j.at("drawn").get<int>();
        if (t.variants.empty() || t.drawn < 0 || t.drawn >= static_cast<int>(t.variants.size()))
            input_error("task manifest has an invalid drawn variant");
        t.metadata = j.value("metadata", nlohmann::json::object());
        return t;
    } catch (const nlohmann::json::exception& e) {
        input_error(std::string("malformed task manifest: ") + e.what());
    }
}

/// One task manifest per line.
inline void save_tasks(const std::vector<SyntheticTask>& tasks, const std::string& path) {
    std::ofstream out(path);
    if (!out) input_error("cannot write " + path);
    for (const auto& t : tasks) out << task_to_json(t).dump() << '\n';
}

inline std::vector<SyntheticTask> load_tasks(const std::string& path) {
    std::ifstream in(path);
    if (!in) input_error("cannot open task file " + path);
    std::vector<SyntheticTask> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(task_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            input_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            input_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

/// One task per start-pair variant, sharing the graphs.
inline std::vector<SyntheticTask> expand_variants(const std::vector<SyntheticTask>& tasks) {
    std::vector<SyntheticTask> out;
    for (const auto& t : tasks)
        for (std::size_t k = 0; k < t.variants.size(); ++k) {
            SyntheticTask v = t;
            const TaskVariant& tv = t.variants[k];
            v.drawn = static_cast<int>(k);
            v.instance.utterance = tv.utterance;
            v.instance.reference = tv.reference;
            v.planted = tv.planted;
            out.push_back(std::move(v));
        }
    return out;
}

inline std::vector<Instance> instances_of(const std::vector<SyntheticTask>& tasks) {
    std::vector<Instance> out;
    out.reserve(tasks.size());
    for (const auto& t : tasks) out.push_back(t.instance);
    return out;
}

}  // namespace copath
