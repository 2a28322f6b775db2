#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "copath/core.hpp"
#include "copath/rng.hpp"
#include "copath/semgraph.hpp"
#include "copath/word_vectors.hpp"

namespace copath {

enum class Modality : int { video = 0, context = 1 };

inline const char* to_string(Modality m) { return m == Modality::video ? "video" : "context"; }

/// Name key -> row index. Keys are space-joined name tokens; rows are never removed.
class Vocabulary {
public:
    std::size_t size() const noexcept { return keys_.size(); }
    const std::vector<std::string>& keys() const noexcept { return keys_; }

    std::optional<int> find(const std::string& key) const {
        auto it = index_.find(key);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    int add(const std::string& key) {
        auto [it, inserted] = index_.emplace(key, static_cast<int>(keys_.size()));
        if (inserted) keys_.push_back(key);
        return it->second;
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.keys_ == b.keys_; }

private:
    std::vector<std::string> keys_;
    std::map<std::string, int> index_;
};

/// Learnable entity/relation tables for one modality.
struct ModalityTables {
    Vocabulary entity_vocab;
    Vocabulary relation_vocab;
    Matrix entities;   // entity_vocab.size() x d
    Matrix relations;  // relation_vocab.size() x d
};

/// Embedding tables for both modalities. Rows are keyed by names rather than
/// per-graph ids so one set of parameters serves every graph it has seen.
struct EmbeddingSet {
    int dim = 0;
    std::array<ModalityTables, 2> tables;

    ModalityTables& operator[](Modality m) { return tables[static_cast<int>(m)]; }
    const ModalityTables& operator[](Modality m) const { return tables[static_cast<int>(m)]; }
};

/// A graph resolved against an EmbeddingSet: local id -> table row.
struct BoundGraph {
    const SemanticGraph* graph = nullptr;
    Modality modality = Modality::video;
    std::vector<int> entity_row;
    std::vector<int> relation_row;
};

struct EmbeddingInit {
    std::uint64_t seed = 0;
    double noise = 0.01;
};

namespace detail {
inline Vector init_row(const WordVectors& vectors, int dim, const Tokens& name, bool is_stay, Modality m,
                       const char* kind, const EmbeddingInit& init) {
    Vector row = Vector::Zero(dim);
    if (!is_stay && vectors.dim() == dim) row = vectors.mean(name);
    const std::string salt = std::string(to_string(m)) + '|' + kind + '|' + join(name);
    Engine rng(derive_seed(init.seed, hash_string(salt)));
    for (int i = 0; i < dim; ++i) row[i] += uniform(rng, -init.noise, init.noise);
    return row;
}

inline void append_row(Matrix& table, const Vector& row) {
    const Eigen::Index r = table.rows();
    table.conservativeResize(r + 1, row.size());
    table.row(r) = row.transpose();
}
}  // namespace detail

/// Adds a row for every entity/relation of `graph` not yet in the tables. Each
/// new row is the mean of its name's word vectors plus uniform noise seeded
/// from (seed, modality, name); the reserved STAY relation gets noise only.
inline void extend_embeddings(EmbeddingSet& emb, const SemanticGraph& graph, Modality m, const WordVectors& vectors,
                              const EmbeddingInit& init) {
    if (vectors.dim() != 0 && vectors.dim() != emb.dim)
        input_error("word vectors have dimension " + std::to_string(vectors.dim()) + " but embeddings use " +
                    std::to_string(emb.dim));
    auto& t = emb[m];
    if (t.entities.cols() != emb.dim) t.entities.resize(0, emb.dim);
    if (t.relations.cols() != emb.dim) t.relations.resize(0, emb.dim);
    for (const auto& name : graph.entity_names()) {
        const std::string key = join(name);
        if (t.entity_vocab.find(key)) continue;
        t.entity_vocab.add(key);
        detail::append_row(t.entities, detail::init_row(vectors, emb.dim, name, false, m, "entity", init));
    }
    for (std::size_t r = 0; r < graph.num_relations(); ++r) {
        const Tokens& name = graph.relation_name(static_cast<RelationId>(r));
        const std::string key = join(name);
        if (t.relation_vocab.find(key)) continue;
        t.relation_vocab.add(key);
        const bool stay = graph.is_stay(static_cast<RelationId>(r));
        detail::append_row(t.relations, detail::init_row(vectors, emb.dim, name, stay, m, "relation", init));
    }
}

inline EmbeddingSet init_embeddings(const SemanticGraph& graph_v, const SemanticGraph& graph_u,
                                    const WordVectors& vectors, int dim, const EmbeddingInit& init) {
    EmbeddingSet emb;
    emb.dim = dim;
    extend_embeddings(emb, graph_v, Modality::video, vectors, init);
    extend_embeddings(emb, graph_u, Modality::context, vectors, init);
    return emb;
}

inline BoundGraph bind(const EmbeddingSet& emb, const SemanticGraph& graph, Modality m) {
    const auto& t = emb[m];
    BoundGraph b{&graph, m, {}, {}};
    b.entity_row.reserve(graph.num_entities());
    for (const auto& name : graph.entity_names()) {
        auto row = t.entity_vocab.find(join(name));
        if (!row) input_error(std::string("no ") + to_string(m) + " embedding for entity '" + join(name) + "'");
        b.entity_row.push_back(*row);
    }
    for (const auto& name : graph.relation_names()) {
        auto row = t.relation_vocab.find(join(name));
        if (!row) input_error(std::string("no ") + to_string(m) + " embedding for relation '" + join(name) + "'");
        b.relation_row.push_back(*row);
    }
    return b;
}

/// Mean word vector of the in-vocabulary tokens; zero when every token is OOV.
inline Vector embed_utterance(const Tokens& tokens, const WordVectors& vectors) {
    if (tokens.empty()) input_error("cannot embed an empty utterance");
    return vectors.mean(tokens);
}

/// argmax_e E(e)^T query, lowest entity id on ties.
inline EntityId select_query_entity(const BoundGraph& g, const EmbeddingSet& emb, const Vector& query) {
    const auto& table = emb[g.modality].entities;
    if (query.size() != emb.dim)
        input_error("utterance embedding has dimension " + std::to_string(query.size()) + ", expected " +
                    std::to_string(emb.dim));
    EntityId best = 0;
    double best_score = table.row(g.entity_row[0]).dot(query);
    for (std::size_t e = 1; e < g.entity_row.size(); ++e) {
        const double s = table.row(g.entity_row[e]).dot(query);
        if (s > best_score) best_score = s, best = static_cast<EntityId>(e);
    }
    return best;
}

inline std::pair<EntityId, EntityId> select_query_entities(const BoundGraph& graph_v, const BoundGraph& graph_u,
                                                           const Tokens& utterance, const EmbeddingSet& emb,
                                                           const WordVectors& vectors) {
    const Vector query = embed_utterance(utterance, vectors);
    return {select_query_entity(graph_v, emb, query), select_query_entity(graph_u, emb, query)};
}

}  // namespace copath
