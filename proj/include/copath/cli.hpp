#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "copath/checkpoint.hpp"
#include "copath/core.hpp"
#include "copath/learn.hpp"
#include "copath/semgraph.hpp"
#include "copath/synth.hpp"

namespace copath {

// ---- generation-input assembly ----

inline constexpr const char* kSep = "[SEP]";

/// `<p_v tokens> [SEP] <p_u tokens> [SEP] <u_n tokens>`, single spaces. An empty
/// segment leaves two separators adjacent.
inline std::string assemble(const Tokens& p_v, const Tokens& p_u, const Tokens& u_n) {
    std::string out;
    auto put = [&out](const std::string& tok) {
        if (!out.empty()) out += ' ';
        out += tok;
    };
    for (const auto& t : p_v) put(t);
    put(kSep);
    for (const auto& t : p_u) put(t);
    put(kSep);
    for (const auto& t : u_n) put(t);
    return out;
}

/// Inverse of assemble: the three token segments.
inline std::array<Tokens, 3> split_assembly(const std::string& line) {
    std::array<Tokens, 3> seg;
    std::istringstream ss(line);
    std::string tok;
    int k = 0;
    while (ss >> tok) {
        if (tok == kSep) {
            if (++k > 2) input_error("assembly line has more than two separators");
            continue;
        }
        seg[k].push_back(tok);
    }
    if (k != 2) input_error("assembly line needs exactly two separators");
    return seg;
}

// ---- run configuration ----

struct RunConfig {
    std::string tasks;
    std::string vectors;
    int held_out = 0;
    double val_fraction = 0.2;
    bool expand_variants = false;  // every start pair of each task becomes its own instance
    ModelConfig model;
    TrainConfig train;
    DecodeMode decode = DecodeMode::greedy();
    std::string out = "out";
};

inline std::string decode_to_string(const DecodeMode& d) {
    switch (d.kind) {
        case DecodeKind::greedy: return "greedy";
        case DecodeKind::sample: return "sample";
        case DecodeKind::beam: return "beam:" + std::to_string(d.beam_width);
    }
    return "?";
}

inline DecodeMode parse_decode(const std::string& s, std::uint64_t seed = 0) {
    if (s == "greedy") return DecodeMode::greedy();
    if (s == "sample") return DecodeMode::sample(seed);
    if (s.rfind("beam:", 0) == 0) {
        try {
            std::size_t used = 0;
            const int k = std::stoi(s.substr(5), &used);
            if (used == s.size() - 5 && k >= 1) return DecodeMode::beam(k);
        } catch (const std::exception&) {
        }
    }
    input_error("unknown decode mode '" + s + "' (expected greedy, sample or beam:k)");
}

inline nlohmann::json to_json(const RunConfig& c) {
    const auto& t = c.train;
    nlohmann::json j = model_config_to_json(c.model);
    j.update({{"tasks", c.tasks},
              {"vectors", c.vectors},
              {"held_out", c.held_out},
              {"val_fraction", c.val_fraction},
              {"expand_variants", c.expand_variants},
              {"horizon", t.horizon},
              {"batch_size", t.batch_size},
              {"learning_rate", t.learning_rate},
              {"total_steps", t.total_steps},
              {"decay", t.decay == DecaySchedule::linear ? "linear" : "constant"},
              {"seed", t.seed},
              {"baseline", t.baseline_beta ? nlohmann::json(*t.baseline_beta) : nlohmann::json(nullptr)},
              {"freeze_embeddings", t.freeze_embeddings},
              {"patience", t.patience},
              {"eval_every", t.eval_every},
              {"rouge", t.rouge == RougeVariant::f1 ? "f1" : "recall"},
              {"decode", decode_to_string(c.decode)},
              {"out", c.out}});
    return j;
}

/// Explicit keys only; anything unknown is rejected.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) input_error("config must be a JSON object");
    RunConfig c;
    auto& t = c.train;
    auto& m = c.model;
    std::string decode = "greedy";
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "tasks") c.tasks = v.get<std::string>();
            else if (key == "vectors") c.vectors = v.get<std::string>();
            else if (key == "held_out") c.held_out = v.get<int>();
            else if (key == "val_fraction") c.val_fraction = v.get<double>();
            else if (key == "expand_variants") c.expand_variants = v.get<bool>();
            else if (key == "horizon") t.horizon = v.get<int>();
            else if (key == "batch_size") t.batch_size = v.get<int>();
            else if (key == "learning_rate") t.learning_rate = v.get<double>();
            else if (key == "total_steps") t.total_steps = v.get<int>();
            else if (key == "decay") {
                const auto s = v.get<std::string>();
                if (s == "linear") t.decay = DecaySchedule::linear;
                else if (s == "constant") t.decay = DecaySchedule::constant;
                else input_error("unknown decay '" + s + "'");
            } else if (key == "seed") t.seed = v.get<std::uint64_t>();
            else if (key == "baseline") {
                if (v.is_null()) t.baseline_beta.reset();
                else t.baseline_beta = v.get<double>();
            } else if (key == "freeze_embeddings") t.freeze_embeddings = v.get<bool>();
            else if (key == "patience") t.patience = v.get<int>();
            else if (key == "eval_every") t.eval_every = v.get<int>();
            else if (key == "rouge") {
                const auto s = v.get<std::string>();
                if (s == "f1") t.rouge = RougeVariant::f1;
                else if (s == "recall") t.rouge = RougeVariant::recall;
                else input_error("unknown rouge variant '" + s + "'");
            } else if (key == "decode") decode = v.get<std::string>();
            else if (key == "out") c.out = v.get<std::string>();
            else if (key == "dim") m.dim = v.get<int>();
            else if (key == "d_h") m.d_h = v.get<int>();
            else if (key == "d_in") m.d_in = v.get<int>();
            else if (key == "mode") m.mode = parse_ablation(v.get<std::string>());
            else if (key == "scorer") m.scorer = parse_scorer(v.get<std::string>());
            else if (key == "score_target") m.score_target = v.get<bool>();
            else if (key == "init_scale") m.init_scale = v.get<double>();
            else if (key == "embedding_noise") m.embedding_noise = v.get<double>();
            else input_error("unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        input_error(std::string("bad config value: ") + e.what());
    }
    c.decode = parse_decode(decode, t.seed);
    t.validate();
    if (c.held_out < 0) input_error("held_out must be >= 0");
    if (!(c.val_fraction >= 0.0 && c.val_fraction < 1.0)) input_error("val_fraction must lie in [0,1)");
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) input_error("cannot open config " + path);
    try {
        return run_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        input_error(path + ": " + e.what());
    }
}

struct Split {
    std::vector<SyntheticTask> train, val, test;
};

/// The last `held_out` tasks are the test split; of the rest, the last
/// floor(val_fraction * n) are validation.
inline Split split_tasks(const std::vector<SyntheticTask>& tasks, int held_out, double val_fraction) {
    if (held_out > static_cast<int>(tasks.size())) input_error("held_out exceeds the number of tasks");
    const std::size_t n_rest = tasks.size() - static_cast<std::size_t>(held_out);
    const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n_rest)));
    Split s;
    s.train.assign(tasks.begin(), tasks.begin() + static_cast<std::ptrdiff_t>(n_rest - n_val));
    s.val.assign(tasks.begin() + static_cast<std::ptrdiff_t>(n_rest - n_val), tasks.begin() + static_cast<std::ptrdiff_t>(n_rest));
    s.test.assign(tasks.begin() + static_cast<std::ptrdiff_t>(n_rest), tasks.end());
    return s;
}

// ---- evaluation ----

struct InstanceEval {
    double reward = 0.0;
    double oracle_max = 0.0;
    double oracle_ratio = 1.0;
    bool recovered = false;
    bool query_ok = false;
};

struct EvalReport {
    std::string config_hash;
    std::string mode;
    int horizon = 0;
    std::string decode;
    std::vector<InstanceEval> instances;
    double mean_reward = 0.0;
    double mean_oracle_ratio = 0.0;
    double recovery_rate = 0.0;
    double query_accuracy = 0.0;
};

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& i : r.instances)
        per.push_back({{"reward", i.reward}, {"oracle_max", i.oracle_max}, {"oracle_ratio", i.oracle_ratio},
                       {"recovered", i.recovered}, {"query_ok", i.query_ok}});
    return {{"config_hash", r.config_hash}, {"mode", r.mode}, {"horizon", r.horizon}, {"decode", r.decode},
            {"instances", r.instances.size()}, {"mean_reward", r.mean_reward},
            {"mean_oracle_ratio", r.mean_oracle_ratio}, {"recovery_rate", r.recovery_rate},
            {"query_accuracy", r.query_accuracy}, {"per_instance", per}};
}

/// Copy of `params` with rows for any names it has not seen (word-vector init).
inline ModelParams with_vocabulary_for(const ModelParams& params, const std::vector<SyntheticTask>& tasks,
                                       const WordVectors& vectors, std::uint64_t seed) {
    ModelParams p = params;
    for (const auto& t : tasks) extend_model(p, t.instance.graph_v, t.instance.graph_u, vectors, seed);
    return p;
}

/// Greedy (or configured) decoding on every task: reward, oracle ratio,
/// exact planted-walk recovery of every enabled agent, and query-entity accuracy.
inline EvalReport evaluate(const ModelParams& params_in, const std::vector<SyntheticTask>& tasks,
                           const WordVectors& vectors, int horizon, const DecodeMode& decode, std::uint64_t seed,
                           RougeVariant rouge = RougeVariant::f1) {
    const ModelParams params = with_vocabulary_for(params_in, tasks, vectors, seed);
    EvalReport rep;
    rep.mode = to_string(params.config.mode);
    rep.horizon = horizon;
    rep.decode = decode_to_string(decode);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& task = tasks[i];
        const EpisodeGraphs graphs = bind_pair(params, task.instance.graph_v, task.instance.graph_u);
        Vector q = embed_utterance(task.instance.utterance, vectors);
        DecodeMode d = decode;
        if (d.kind == DecodeKind::sample) d.seed = derive_seed(decode.seed, i);
        const EpisodeResult r = run_instance(params, task.instance, graphs, q, horizon, d, rouge);
        InstanceEval ie;
        ie.reward = r.reward;
        ie.oracle_max = brute_force_oracle(task, horizon, rouge).max_reward;
        ie.oracle_ratio = ie.oracle_max > 0.0 ? ie.reward / ie.oracle_max : (ie.reward == 0.0 ? 1.0 : 0.0);
        const auto& drawn = task.variants[static_cast<std::size_t>(task.drawn)];
        ie.query_ok = r.start.first == drawn.start_v && r.start.second == drawn.start_u;
        ie.recovered = true;
        for (Modality m : kModalities)
            if (r.trace[m].enabled && !(walk_of(r.trace[m]) == task.planted[static_cast<int>(m)])) ie.recovered = false;
        rep.instances.push_back(ie);
    }
    const double n = std::max<double>(1.0, static_cast<double>(tasks.size()));
    for (const auto& ie : rep.instances) {
        rep.mean_reward += ie.reward / n;
        rep.mean_oracle_ratio += ie.oracle_ratio / n;
        rep.recovery_rate += (ie.recovered ? 1.0 : 0.0) / n;
        rep.query_accuracy += (ie.query_ok ? 1.0 : 0.0) / n;
    }
    return rep;
}

// ---- commands ----

struct Workspace {
    std::vector<SyntheticTask> tasks;
    WordVectors vectors;
    Split split;
};

inline Workspace load_workspace(const RunConfig& c) {
    if (c.tasks.empty()) input_error("config has no 'tasks' file");
    Workspace w;
    w.tasks = load_tasks(c.tasks);
    if (w.tasks.empty()) input_error("task file " + c.tasks + " is empty");
    if (c.vectors.empty()) input_error("config has no 'vectors' file");
    w.vectors = load_word_vectors(c.vectors);
    if (w.vectors.dim() != c.model.dim)
        input_error("word vectors have dimension " + std::to_string(w.vectors.dim()) + " but dim is " + std::to_string(c.model.dim));
    w.split = split_tasks(w.tasks, c.held_out, c.val_fraction);
    if (c.expand_variants) {
        // Split first so that no graph appears on both sides.
        w.split.train = expand_variants(w.split.train);
        w.split.val = expand_variants(w.split.val);
        w.split.test = expand_variants(w.split.test);
        w.tasks = expand_variants(w.tasks);
    }
    return w;
}

struct BuildGraphResult {
    SemanticGraph graph;
    MergeResult merge;
};

/// Video mode: confidence filter, then merging, then build. Context mode skips the filter.
inline BuildGraphResult cmd_build_graph(const std::vector<TripletRecord>& records, Modality mode,
                                        const WordVectors& vectors, double tau, double threshold) {
    std::vector<TripletRecord> kept = mode == Modality::video ? filter_video_triplets(records, threshold) : records;
    if (kept.empty()) input_error("empty graph: no triplet survived filtering");
    MergeResult merged = merge_similar_entities(kept, vectors, tau);
    SemanticGraph g = build_graph(merged.records);
    return {std::move(g), std::move(merged)};
}

inline nlohmann::json merge_report(const BuildGraphResult& r) {
    nlohmann::json map = nlohmann::json::object();
    for (const auto& [from, to] : r.merge.merge_map) map[from] = {{"canonical", to}, {"entity_id", *r.graph.find_entity(tokenize(to))}};
    return {{"entities", r.graph.num_entities()}, {"relations", r.graph.num_relations() - 1},
            {"labeled_edges", r.graph.num_labeled_edges()}, {"merge_map", map}, {"oov_unmerged", r.merge.oov_entities}};
}

struct TrainOutput {
    TrainResult result;
    std::string checkpoint_path;
    std::string log_path;
};

inline TrainOutput cmd_train(const RunConfig& c, const Workspace& w) {
    const auto train_i = instances_of(w.split.train);
    const auto val_i = instances_of(w.split.val);
    TrainOutput out;
    out.result = train(train_i, val_i, w.vectors, c.model, c.train);
    std::filesystem::create_directories(c.out);
    out.checkpoint_path = (std::filesystem::path(c.out) / "model.ckpt").string();
    out.log_path = (std::filesystem::path(c.out) / "train_log.jsonl").string();
    save_checkpoint(out.checkpoint_path, out.result.params, to_json(c));
    std::ofstream log(out.log_path);
    if (!log) input_error("cannot write " + out.log_path);
    for (const auto& rec : out.result.log) log << to_json(rec).dump() << '\n';
    return out;
}

inline const std::vector<SyntheticTask>& eval_tasks(const Workspace& w) {
    return w.split.test.empty() ? w.tasks : w.split.test;
}

inline EvalReport cmd_eval(const RunConfig& c, const Workspace& w, const Checkpoint& ck) {
    EvalReport r = evaluate(ck.params, eval_tasks(w), w.vectors, c.train.horizon, c.decode, c.train.seed, c.train.rouge);
    r.config_hash = ck.config_hash;
    return r;
}

/// Untrained parameters for a config, hashed like a checkpoint would be.
inline Checkpoint untrained_checkpoint(const RunConfig& c, const Workspace& w) {
    const auto train_i = instances_of(w.split.train);
    const auto val_i = instances_of(w.split.val);
    return {initial_model(c.model, {&train_i, &val_i}, w.vectors, c.train.seed), to_json(c), config_hash(to_json(c))};
}

inline nlohmann::json cmd_reason(const RunConfig& c, const Workspace& w, const Checkpoint& ck, std::size_t index) {
    if (index >= w.tasks.size()) input_error("task index " + std::to_string(index) + " out of range");
    const auto& task = w.tasks[index];
    const ModelParams params = with_vocabulary_for(ck.params, {task}, w.vectors, c.train.seed);
    const EpisodeGraphs graphs = bind_pair(params, task.instance.graph_v, task.instance.graph_u);
    const EpisodeResult r = run_instance(params, task.instance, graphs, embed_utterance(task.instance.utterance, w.vectors),
                                         c.train.horizon, c.decode, c.train.rouge);
    nlohmann::json steps = nlohmann::json::object();
    for (Modality m : kModalities) {
        const SemanticGraph& g = m == Modality::video ? task.instance.graph_v : task.instance.graph_u;
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& s : r.trace[m].steps)
            arr.push_back({{"from", join(g.entity_name(s.edge.src))}, {"relation", join(g.relation_name(s.edge.rel))},
                           {"to", join(g.entity_name(s.edge.dst))}, {"edge", {s.edge.src, s.edge.rel, s.edge.dst}},
                           {"prob", s.prob}, {"log_prob", s.log_prob}});
        steps[to_string(m)] = {{"enabled", r.trace[m].enabled}, {"start", join(g.entity_name(r.trace[m].start))}, {"steps", arr}};
    }
    return {{"task", index},
            {"config_hash", ck.config_hash},
            {"decode", decode_to_string(c.decode)},
            {"path_v", r.path_v},
            {"path_u", r.path_u},
            {"reward", r.reward},
            {"agents", steps},
            {"assembly", assemble(r.path_v, r.path_u, task.instance.utterance)}};
}

struct SweepRow {
    int horizon = 0;
    double mean_reward = 0.0;
    double recovery = 0.0;
    double oracle_ratio = 0.0;
};

/// Trains and evaluates once per horizon with the same seed and data.
inline std::vector<SweepRow> cmd_sweep_T(const RunConfig& c, const Workspace& w, const std::vector<int>& horizons) {
    std::vector<SweepRow> rows;
    for (int T : horizons) {
        if (T < 1) input_error("sweep horizons must be >= 1");
        RunConfig rc = c;
        rc.train.horizon = T;
        const auto train_i = instances_of(w.split.train);
        const auto val_i = instances_of(w.split.val);
        const TrainResult tr = train(train_i, val_i, w.vectors, rc.model, rc.train);
        const EvalReport rep = evaluate(tr.params, eval_tasks(w), w.vectors, T, rc.decode, rc.train.seed, rc.train.rouge);
        rows.push_back({T, rep.mean_reward, rep.recovery_rate, rep.mean_oracle_ratio});
    }
    return rows;
}

inline std::string format_sweep(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(4) << "T" << std::setw(14) << "mean_reward" << std::setw(12) << "recovery"
       << "oracle_ratio\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& r : rows)
        os << std::left << std::setw(4) << r.horizon << std::setw(14) << r.mean_reward << std::setw(12) << r.recovery
           << r.oracle_ratio << '\n';
    return os.str();
}

}  // namespace copath
