#pragma once

#include <array>
#include <string>
#include <vector>

#include "copath/comms.hpp"
#include "copath/core.hpp"
#include "copath/lexicon.hpp"
#include "copath/rng.hpp"

namespace copath {

enum class AblationMode { full, no_comm, no_vgraph, no_ugraph };

enum class ScorerKind {
    linear,    // g = W_a [h; E(e); x_r], W_a a single row
    bilinear,  // g = x_r^T (W_a [h; E(e)] + b)
};

inline std::string to_string(AblationMode m) {
    switch (m) {
        case AblationMode::full: return "full";
        case AblationMode::no_comm: return "no-comm";
        case AblationMode::no_vgraph: return "no-vgraph";
        case AblationMode::no_ugraph: return "no-ugraph";
    }
    return "?";
}

inline AblationMode parse_ablation(const std::string& s) {
    if (s == "full") return AblationMode::full;
    if (s == "no-comm" || s == "no-communicator") return AblationMode::no_comm;
    if (s == "no-vgraph" || s == "no-video-graph") return AblationMode::no_vgraph;
    if (s == "no-ugraph" || s == "no-context-graph") return AblationMode::no_ugraph;
    input_error("unknown ablation mode '" + s + "'");
}

inline std::string to_string(ScorerKind k) { return k == ScorerKind::linear ? "linear" : "bilinear"; }

inline ScorerKind parse_scorer(const std::string& s) {
    if (s == "linear") return ScorerKind::linear;
    if (s == "bilinear") return ScorerKind::bilinear;
    input_error("unknown scorer '" + s + "'");
}

struct ModelConfig {
    int dim = 100;  // entity/relation/word-vector width
    int d_h = 200;  // communicator hidden size
    int d_in = 200; // W_c output width
    AblationMode mode = AblationMode::full;
    ScorerKind scorer = ScorerKind::linear;
    bool score_target = false;  // append the destination entity embedding to the edge features
    double init_scale = 0.1;
    double embedding_noise = 0.01;

    int edge_feature_width() const { return score_target ? 2 * dim : dim; }
    bool agent_enabled(Modality m) const {
        return !(m == Modality::video && mode == AblationMode::no_vgraph) &&
               !(m == Modality::context && mode == AblationMode::no_ugraph);
    }
    int num_comms() const { return mode == AblationMode::no_comm ? 2 : 1; }
    int comm_input_width() const { return mode == AblationMode::no_comm ? 2 * dim : 4 * dim; }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Private per-agent edge scorer (psi). `bias` is empty for the linear scorer.
struct AgentParams {
    Matrix weight;
    Vector bias;

    static AgentParams zeros(const ModelConfig& c) {
        if (c.scorer == ScorerKind::linear) return {Matrix::Zero(1, c.d_h + c.dim + c.edge_feature_width()), Vector()};
        return {Matrix::Zero(c.edge_feature_width(), c.d_h + c.dim), Vector::Zero(c.edge_feature_width())};
    }
};

/// A flat view of one parameter tensor; ModelParams and GradientSet list theirs in the same order.
struct TensorRef {
    std::string name;
    double* data;
    Eigen::Index rows;
    Eigen::Index cols;
    Eigen::Index size() const { return rows * cols; }
};

namespace detail {
template <class M>
TensorRef ref(std::string name, M& m) {
    return {std::move(name), m.data(), m.rows(), m.cols()};
}
}  // namespace detail

/// Gradient buffers shape-matched to a ModelParams.
struct GradientSet {
    std::array<Matrix, 2> entities;
    std::array<Matrix, 2> relations;
    std::vector<CommParams> comms;
    std::array<AgentParams, 2> agents;

    std::vector<TensorRef> tensors() {
        std::vector<TensorRef> out;
        for (int m = 0; m < 2; ++m) {
            out.push_back(detail::ref("emb." + std::to_string(m) + ".entities", entities[m]));
            out.push_back(detail::ref("emb." + std::to_string(m) + ".relations", relations[m]));
        }
        for (std::size_t k = 0; k < comms.size(); ++k)
            comms[k].for_each([&](const char* n, auto& t) { out.push_back(detail::ref("comm." + std::to_string(k) + "." + n, t)); });
        for (int a = 0; a < 2; ++a) {
            out.push_back(detail::ref("agent." + std::to_string(a) + ".weight", agents[a].weight));
            out.push_back(detail::ref("agent." + std::to_string(a) + ".bias", agents[a].bias));
        }
        return out;
    }

    void set_zero() {
        for (auto& t : tensors()) std::fill(t.data, t.data + t.size(), 0.0);
    }

    GradientSet& operator+=(const GradientSet& o) {
        auto a = tensors();
        auto b = const_cast<GradientSet&>(o).tensors();
        for (std::size_t i = 0; i < a.size(); ++i)
            for (Eigen::Index j = 0; j < a[i].size(); ++j) a[i].data[j] += b[i].data[j];
        return *this;
    }

    GradientSet& operator*=(double s) {
        for (auto& t : tensors())
            for (Eigen::Index j = 0; j < t.size(); ++j) t.data[j] *= s;
        return *this;
    }

    bool all_finite() {
        for (auto& t : tensors())
            for (Eigen::Index j = 0; j < t.size(); ++j)
                if (!std::isfinite(t.data[j])) return false;
        return true;
    }
};

/// All trainable state: embedding tables, communicator(s), and both agent scorers.
struct ModelParams {
    ModelConfig config;
    EmbeddingSet emb;
    std::vector<CommParams> comms;
    std::array<AgentParams, 2> agents;

    const CommParams& comm_for(Modality m) const {
        return comms[config.mode == AblationMode::no_comm ? static_cast<int>(m) : 0];
    }
    const AgentParams& agent(Modality m) const { return agents[static_cast<int>(m)]; }

    std::vector<TensorRef> tensors() {
        std::vector<TensorRef> out;
        for (int m = 0; m < 2; ++m) {
            out.push_back(detail::ref("emb." + std::to_string(m) + ".entities", emb.tables[m].entities));
            out.push_back(detail::ref("emb." + std::to_string(m) + ".relations", emb.tables[m].relations));
        }
        for (std::size_t k = 0; k < comms.size(); ++k)
            comms[k].for_each([&](const char* n, auto& t) { out.push_back(detail::ref("comm." + std::to_string(k) + "." + n, t)); });
        for (int a = 0; a < 2; ++a) {
            out.push_back(detail::ref("agent." + std::to_string(a) + ".weight", agents[a].weight));
            out.push_back(detail::ref("agent." + std::to_string(a) + ".bias", agents[a].bias));
        }
        return out;
    }

    GradientSet zero_gradients() const {
        GradientSet g;
        for (int m = 0; m < 2; ++m) {
            g.entities[m] = Matrix::Zero(emb.tables[m].entities.rows(), emb.dim);
            g.relations[m] = Matrix::Zero(emb.tables[m].relations.rows(), emb.dim);
        }
        for (const auto& c : comms) g.comms.push_back(CommParams::zeros(c.input_width(), c.d_in(), c.d_h()));
        for (int a = 0; a < 2; ++a) g.agents[a] = {Matrix::Zero(agents[a].weight.rows(), agents[a].weight.cols()), Vector::Zero(agents[a].bias.size())};
        return g;
    }

    void validate_shapes() const {
        const auto& c = config;
        if (emb.dim != c.dim) input_error("embedding width does not match the model configuration");
        if (static_cast<int>(comms.size()) != c.num_comms()) input_error("communicator count does not match ablation mode");
        for (const auto& k : comms) {
            if (k.input_width() != c.comm_input_width() || k.d_in() != c.d_in || k.d_h() != c.d_h ||
                k.gates.cols() != c.d_in + c.d_h || k.bias.size() != 4 * c.d_h)
                input_error("communicator shape does not match the model configuration");
        }
        const AgentParams want = AgentParams::zeros(c);
        for (const auto& a : agents)
            if (a.weight.rows() != want.weight.rows() || a.weight.cols() != want.weight.cols() ||
                a.bias.size() != want.bias.size())
                input_error("agent scorer shape does not match the model configuration");
        for (int m = 0; m < 2; ++m) {
            const auto& t = emb.tables[m];
            if (t.entities.rows() != static_cast<Eigen::Index>(t.entity_vocab.size()) ||
                t.relations.rows() != static_cast<Eigen::Index>(t.relation_vocab.size()))
                input_error("embedding rows do not match vocabulary size");
        }
    }
};

/// Fresh parameters: comm and scorer weights uniform in [-init_scale, init_scale],
/// forget-gate bias 1. Embedding rows are added later via extend_embeddings.
inline ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
    if (config.dim < 1 || config.d_h < 1 || config.d_in < 1) input_error("model dimensions must be positive");
    ModelParams p;
    p.config = config;
    p.emb.dim = config.dim;
    for (auto& t : p.emb.tables) {
        t.entities.resize(0, config.dim);
        t.relations.resize(0, config.dim);
    }
    Engine rng(derive_seed(seed, 0xC0111));
    for (int k = 0; k < config.num_comms(); ++k)
        p.comms.push_back(CommParams::random(config.comm_input_width(), config.d_in, config.d_h, rng, config.init_scale));
    for (auto& a : p.agents) {
        a = AgentParams::zeros(config);
        for (Eigen::Index i = 0; i < a.weight.size(); ++i) a.weight.data()[i] = uniform(rng, -config.init_scale, config.init_scale);
    }
    return p;
}

inline void extend_model(ModelParams& p, const SemanticGraph& graph_v, const SemanticGraph& graph_u,
                         const WordVectors& vectors, std::uint64_t seed) {
    const EmbeddingInit init{seed, p.config.embedding_noise};
    extend_embeddings(p.emb, graph_v, Modality::video, vectors, init);
    extend_embeddings(p.emb, graph_u, Modality::context, vectors, init);
}

/// W_c [E^v(r^v); E^v(e^v); E^u(r^u); E^u(e^u)] for the shared communicator.
/// A disabled agent contributes zero blocks.
inline Vector comm_input_concat(RelationId action_v, EntityId obs_v, RelationId action_u, EntityId obs_u,
                                const BoundGraph& graph_v, const BoundGraph& graph_u, const ModelParams& params) {
    if (graph_v.modality != Modality::video || graph_u.modality != Modality::context)
        input_error("communicator input expects a video graph then a context graph");
    const int d = params.config.dim;
    Vector concat = Vector::Zero(4 * d);
    auto fill = [&](const BoundGraph& g, RelationId r, EntityId e, int offset) {
        if (!params.config.agent_enabled(g.modality)) return;
        if (r < 0 || static_cast<std::size_t>(r) >= g.relation_row.size())
            input_error(std::string("relation id ") + std::to_string(r) + " is not a " + to_string(g.modality) + " relation");
        if (e < 0 || static_cast<std::size_t>(e) >= g.entity_row.size())
            input_error(std::string("entity id ") + std::to_string(e) + " is not a " + to_string(g.modality) + " entity");
        const auto& t = params.emb[g.modality];
        concat.segment(offset, d) = t.relations.row(g.relation_row[r]).transpose();
        concat.segment(offset + d, d) = t.entities.row(g.entity_row[e]).transpose();
    };
    fill(graph_v, action_v, obs_v, 0);
    fill(graph_u, action_u, obs_u, 2 * d);
    return concat;
}

inline Vector comm_input(RelationId action_v, EntityId obs_v, RelationId action_u, EntityId obs_u,
                         const BoundGraph& graph_v, const BoundGraph& graph_u, const ModelParams& params) {
    if (params.config.mode == AblationMode::no_comm) input_error("no shared communicator in no-comm mode");
    return comm_project(comm_input_concat(action_v, obs_v, action_u, obs_u, graph_v, graph_u, params), params.comms[0]);
}

}  // namespace copath
