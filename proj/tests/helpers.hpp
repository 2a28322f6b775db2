#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "copath/learn.hpp"
#include "copath/rng.hpp"
#include "copath/semgraph.hpp"
#include "copath/word_vectors.hpp"

namespace copath::testing {

inline TripletRecord triplet(const std::string& s, const std::string& p, const std::string& o,
                             std::optional<double> conf = std::nullopt) {
    return {tokenize(s), tokenize(p), tokenize(o), conf};
}

/// Random labeled graph: `nodes` entities named prefix+"n"+i, up to `max_out`
/// labeled out-edges per node over `relations` relation names.
inline SemanticGraph random_graph(Engine& rng, int nodes, int max_out, int relations, const std::string& prefix) {
    std::vector<Tokens> ents, rels;
    for (int i = 0; i < nodes; ++i) ents.push_back({prefix + "n" + std::to_string(i)});
    for (int r = 0; r < relations; ++r) rels.push_back({prefix + "r" + std::to_string(r)});
    std::vector<Edge> edges;
    for (int u = 0; u < nodes; ++u) {
        const auto k = uniform_index(rng, static_cast<std::size_t>(max_out) + 1);
        for (std::size_t j = 0; j < k; ++j)
            edges.push_back({u, static_cast<RelationId>(uniform_index(rng, static_cast<std::size_t>(relations))),
                             static_cast<EntityId>(uniform_index(rng, static_cast<std::size_t>(nodes)))});
    }
    return SemanticGraph(std::move(ents), std::move(rels), std::move(edges));
}

/// Gaussian word vectors for every token of both graphs.
inline WordVectors vectors_for(const std::vector<const SemanticGraph*>& graphs, int dim, std::uint64_t seed) {
    WordVectors wv(dim);
    Engine rng(seed);
    auto add = [&](const Tokens& name) {
        for (const auto& t : name)
            if (!wv.contains(t)) {
                Vector v(dim);
                for (int i = 0; i < dim; ++i) v[i] = standard_normal(rng);
                wv.add(t, v);
            }
    };
    for (const auto* g : graphs) {
        for (const auto& n : g->entity_names()) add(n);
        for (std::size_t r = 0; r + 1 < g->num_relations(); ++r) add(g->relation_name(static_cast<RelationId>(r)));
    }
    return wv;
}

/// Parameters for two graphs with every weight drawn from [-scale, scale].
inline ModelParams random_model(const ModelConfig& cfg, const SemanticGraph& gv, const SemanticGraph& gu,
                                std::uint64_t seed, double scale = 0.5) {
    const WordVectors wv = vectors_for({&gv, &gu}, cfg.dim, seed ^ 0x5eedULL);
    ModelParams p = init_model(cfg, seed);
    extend_model(p, gv, gu, wv, seed);
    Engine rng(derive_seed(seed, 77));
    for (auto& t : p.tensors())
        for (Eigen::Index j = 0; j < t.size(); ++j) t.data[j] = uniform(rng, -scale, scale);
    return p;
}

struct FdReport {
    std::size_t checked = 0;
    std::size_t failed = 0;
    double worst_rel = 0.0;
    std::string worst_name;
};

/// Compares backward() against central differences of -(R - b) * sum log p.
inline FdReport finite_difference_check(const EpisodeTrace& trace, double reward, double baseline,
                                        const SemanticGraph& gv, const SemanticGraph& gu, const ModelParams& params,
                                        double step = 1e-5, double rel_tol = 1e-4, double abs_floor = 1e-7) {
    const EpisodeGraphs graphs = bind_pair(params, gv, gu);
    GradientSet g = backward(trace, reward, graphs, params, baseline);
    ModelParams work = params;
    auto p = work.tensors();
    auto a = g.tensors();
    FdReport rep;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (Eigen::Index j = 0; j < p[i].size(); ++j) {
            const double orig = p[i].data[j];
            p[i].data[j] = orig + step;
            const double up = -(reward - baseline) * replay_log_prob(trace, graphs, work);
            p[i].data[j] = orig - step;
            const double down = -(reward - baseline) * replay_log_prob(trace, graphs, work);
            p[i].data[j] = orig;
            const double num = (up - down) / (2.0 * step);
            const double ana = a[i].data[j];
            const double err = std::abs(num - ana);
            const double scale = std::max(std::abs(num), std::abs(ana));
            ++rep.checked;
            const bool ok = err <= abs_floor || err <= rel_tol * scale;
            if (!ok) {
                ++rep.failed;
                const double rel = err / std::max(scale, 1e-300);
                if (rel > rep.worst_rel) rep.worst_rel = rel, rep.worst_name = p[i].name + "[" + std::to_string(j) + "]";
            }
        }
    return rep;
}

}  // namespace copath::testing
