#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "copath/core.hpp"
#include "copath/word_vectors.hpp"

namespace copath {

using json = nlohmann::json;

/// Lowercase, split on whitespace and underscores.
inline Tokens tokenize(std::string_view text) {
    Tokens out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c) || ch == '_') {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

struct TripletRecord {
    Tokens subject;
    Tokens predicate;
    Tokens object;
    std::optional<double> confidence;

    friend bool operator==(const TripletRecord&, const TripletRecord&) = default;
};

inline void validate(const TripletRecord& r) {
    if (r.subject.empty() || r.predicate.empty() || r.object.empty())
        input_error("triplet has an empty subject, predicate or object");
    if (r.confidence && !(*r.confidence >= 0.0 && *r.confidence <= 1.0))
        input_error("triplet confidence " + std::to_string(*r.confidence) + " outside [0,1]");
}

/// One JSON object per line: {"subject", "predicate", "object", optional "confidence"}.
inline std::vector<TripletRecord> read_triplets(std::istream& in, const std::string& origin = "<stream>") {
    std::vector<TripletRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = origin + ":" + std::to_string(lineno) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            input_error(where + "malformed record (" + e.what() + ")");
        }
        if (!j.is_object()) input_error(where + "record is not an object");
        TripletRecord r;
        for (const auto& [key, value] : j.items()) {
            if (key == "subject" || key == "predicate" || key == "object") {
                if (!value.is_string()) input_error(where + "field '" + key + "' must be a string");
                Tokens toks = tokenize(value.get<std::string>());
                (key == "subject" ? r.subject : key == "predicate" ? r.predicate : r.object) = std::move(toks);
            } else if (key == "confidence") {
                if (!value.is_number()) input_error(where + "field 'confidence' must be a number");
                r.confidence = value.get<double>();
            } else {
                input_error(where + "unknown field '" + key + "'");
            }
        }
        try {
            validate(r);
        } catch (const Error& e) {
            input_error(where + e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<TripletRecord> load_triplets(const std::string& path) {
    std::ifstream in(path);
    if (!in) input_error("cannot open triplet file " + path);
    return read_triplets(in, path);
}

/// Keeps records whose confidence is strictly above `threshold`, preserving order.
inline std::vector<TripletRecord> filter_video_triplets(const std::vector<TripletRecord>& records,
                                                        double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) input_error("confidence threshold must lie in [0,1]");
    std::vector<TripletRecord> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.confidence) input_error("video record " + std::to_string(i + 1) + " has no confidence");
        if (*r.confidence > threshold) out.push_back(r);
    }
    return out;
}

/// Surface form -> canonical surface form. Canonical forms map to themselves.
using MergeMap = std::map<std::string, std::string>;

struct MergeResult {
    std::vector<TripletRecord> records;
    MergeMap merge_map;
    std::vector<std::string> oov_entities;  // left unmerged: no token has a vector
};

namespace detail {
struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a), b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};
}  // namespace detail

/// Clusters entity surface forms whose mean-word-vector cosine is >= tau
/// (transitive closure) and rewrites records to each cluster's canonical name:
/// the most frequent surface form, ties broken lexicographically.
inline MergeResult merge_similar_entities(const std::vector<TripletRecord>& records, const WordVectors& vectors,
                                          double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) input_error("merge threshold tau must lie in (0,1]");

    std::map<std::string, Tokens> names;
    std::map<std::string, int> freq;
    for (const auto& r : records) {
        for (const Tokens* t : {&r.subject, &r.object}) {
            const std::string key = join(*t);
            names.emplace(key, *t);
            ++freq[key];
        }
    }

    std::vector<std::string> keys;
    for (const auto& [k, _] : names) keys.push_back(k);
    const std::size_t n = keys.size();

    MergeResult result;
    std::vector<Vector> unit(n);
    std::vector<bool> has_vec(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        int found = 0;
        Vector v = vectors.mean(names[keys[i]], &found);
        const double norm = v.norm();
        if (found == 0 || norm == 0.0) {
            result.oov_entities.push_back(keys[i]);
            continue;
        }
        unit[i] = v / norm;
        has_vec[i] = true;
    }

    detail::UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!has_vec[i]) continue;
        for (std::size_t j = i + 1; j < n; ++j)
            if (has_vec[j] && unit[i].dot(unit[j]) >= tau) uf.unite(i, j);
    }

    std::map<std::size_t, std::size_t> best;  // root -> index of canonical key
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = uf.find(i);
        auto it = best.find(root);
        if (it == best.end()) {
            best.emplace(root, i);
            continue;
        }
        const std::size_t cur = it->second;
        // keys are sorted, so on equal frequency the earlier index wins.
        if (freq[keys[i]] > freq[keys[cur]]) it->second = i;
    }
    for (std::size_t i = 0; i < n; ++i) result.merge_map[keys[i]] = keys[best[uf.find(i)]];

    result.records.reserve(records.size());
    for (const auto& r : records) {
        TripletRecord out = r;
        out.subject = names[result.merge_map[join(r.subject)]];
        out.object = names[result.merge_map[join(r.object)]];
        result.records.push_back(std::move(out));
    }
    return result;
}

struct Edge {
    EntityId src;
    RelationId rel;
    EntityId dst;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline const Tokens& stay_name() {
    static const Tokens name{"STAY"};
    return name;
}

/// Labeled directed multigraph, immutable after construction. Every node has a
/// STAY self-loop whose relation id is the last one, so out-adjacency (ordered
/// by relation id, then destination) always lists it after the real edges.
class SemanticGraph {
public:
    SemanticGraph() = default;

    SemanticGraph(std::vector<Tokens> entities, std::vector<Tokens> relations, std::vector<Edge> labeled_edges)
        : entities_(std::move(entities)), relations_(std::move(relations)) {
        if (entities_.empty()) input_error("empty graph: a semantic graph needs at least one entity");
        const auto n_ent = static_cast<EntityId>(entities_.size());
        const auto n_rel = static_cast<RelationId>(relations_.size());
        for (const auto& e : labeled_edges) {
            if (e.src < 0 || e.src >= n_ent || e.dst < 0 || e.dst >= n_ent || e.rel < 0 || e.rel >= n_rel)
                input_error("edge references an unknown entity or relation");
        }
        stay_ = n_rel;
        relations_.push_back(stay_name());
        std::sort(labeled_edges.begin(), labeled_edges.end());
        labeled_edges.erase(std::unique(labeled_edges.begin(), labeled_edges.end()), labeled_edges.end());
        edges_ = std::move(labeled_edges);
        num_labeled_ = edges_.size();
        for (EntityId e = 0; e < n_ent; ++e) edges_.push_back({e, stay_, e});

        adjacency_.assign(entities_.size(), {});
        for (const auto& e : edges_) adjacency_[e.src].push_back(e);
        for (auto& adj : adjacency_)
            std::sort(adj.begin(), adj.end(),
                      [](const Edge& a, const Edge& b) { return std::tie(a.rel, a.dst) < std::tie(b.rel, b.dst); });
        for (EntityId e = 0; e < n_ent; ++e) index_.emplace(join(entities_[e]), e);
    }

    std::size_t num_entities() const noexcept { return entities_.size(); }
    std::size_t num_relations() const noexcept { return relations_.size(); }
    std::size_t num_labeled_edges() const noexcept { return num_labeled_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    RelationId stay_relation() const noexcept { return stay_; }
    bool is_stay(RelationId r) const noexcept { return r == stay_; }

    const Tokens& entity_name(EntityId e) const { return entities_.at(check_entity(e)); }
    const Tokens& relation_name(RelationId r) const {
        if (r < 0 || static_cast<std::size_t>(r) >= relations_.size())
            input_error("unknown relation id " + std::to_string(r));
        return relations_[r];
    }
    const std::vector<Tokens>& entity_names() const noexcept { return entities_; }
    const std::vector<Tokens>& relation_names() const noexcept { return relations_; }

    bool has_entity(EntityId e) const noexcept { return e >= 0 && static_cast<std::size_t>(e) < entities_.size(); }

    std::optional<EntityId> find_entity(const Tokens& name) const {
        auto it = index_.find(join(name));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// Deterministic, never empty.
    std::span<const Edge> outgoing_edges(EntityId e) const { return adjacency_[check_entity(e)]; }

private:
    std::size_t check_entity(EntityId e) const {
        if (!has_entity(e)) input_error("unknown entity id " + std::to_string(e));
        return static_cast<std::size_t>(e);
    }

    std::vector<Tokens> entities_;
    std::vector<Tokens> relations_;
    std::vector<Edge> edges_;
    std::size_t num_labeled_ = 0;
    RelationId stay_ = 0;
    std::vector<std::vector<Edge>> adjacency_;
    std::map<std::string, EntityId> index_;
};

inline std::span<const Edge> outgoing_edges(const SemanticGraph& g, EntityId e) { return g.outgoing_edges(e); }

/// Entities and relations get ids in order of first appearance (subject before object).
inline SemanticGraph build_graph(const std::vector<TripletRecord>& records) {
    if (records.empty()) input_error("empty graph: no triplet records");
    std::vector<Tokens> entities, relations;
    std::map<std::string, EntityId> ent_ids;
    std::map<std::string, RelationId> rel_ids;
    auto intern = [](auto& ids, auto& names, const Tokens& name) {
        auto [it, inserted] = ids.emplace(join(name), static_cast<std::int32_t>(names.size()));
        if (inserted) names.push_back(name);
        return it->second;
    };
    std::vector<Edge> edges;
    for (const auto& r : records) {
        validate(r);
        const EntityId s = intern(ent_ids, entities, r.subject);
        const RelationId p = intern(rel_ids, relations, r.predicate);
        const EntityId o = intern(ent_ids, entities, r.object);
        edges.push_back({s, p, o});
    }
    return SemanticGraph(std::move(entities), std::move(relations), std::move(edges));
}

// ---- graph checkpoint ----

inline constexpr int kGraphFormatVersion = 1;

inline json graph_to_json(const SemanticGraph& g) {
    json edges = json::array();
    for (std::size_t i = 0; i < g.num_labeled_edges(); ++i) {
        const Edge& e = g.edges()[i];
        edges.push_back({e.src, e.rel, e.dst});
    }
    std::vector<Tokens> rels(g.relation_names().begin(), g.relation_names().end() - 1);
    return json{{"format", "copath.graph"},
                {"version", kGraphFormatVersion},
                {"entities", g.entity_names()},
                {"relations", rels},
                {"edges", std::move(edges)}};
}

inline SemanticGraph graph_from_json(const json& j) {
    try {
        if (j.at("format") != "copath.graph") input_error("not a graph checkpoint");
        const int version = j.at("version").get<int>();
        if (version != kGraphFormatVersion)
            input_error("unsupported graph checkpoint version " + std::to_string(version));
        auto entities = j.at("entities").get<std::vector<Tokens>>();
        auto relations = j.at("relations").get<std::vector<Tokens>>();
        std::vector<Edge> edges;
        for (const auto& e : j.at("edges")) edges.push_back({e.at(0).get<EntityId>(), e.at(1).get<RelationId>(), e.at(2).get<EntityId>()});
        return SemanticGraph(std::move(entities), std::move(relations), std::move(edges));
    } catch (const json::exception& e) {
        input_error(std::string("malformed graph checkpoint: ") + e.what());
    }
}

inline void save_graph(const SemanticGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) input_error("cannot write " + path);
    out << graph_to_json(g).dump(1) << '\n';
}

inline SemanticGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) input_error("cannot open graph file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        input_error(path + ": " + e.what());
    }
    return graph_from_json(j);
}

}  // namespace copath
