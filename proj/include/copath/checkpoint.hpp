#pragma once

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "copath/core.hpp"
#include "copath/model.hpp"
#include "copath/rng.hpp"

namespace copath {

// Layout: magic line, one-line JSON header, then every tensor as little-endian
// float64 in header order.
inline constexpr const char* kCheckpointMagic = "COPATH-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
    return {{"dim", c.dim},
            {"d_h", c.d_h},
            {"d_in", c.d_in},
            {"mode", to_string(c.mode)},
            {"scorer", to_string(c.scorer)},
            {"score_target", c.score_target},
            {"init_scale", c.init_scale},
            {"embedding_noise", c.embedding_noise}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.dim = j.at("dim").get<int>();
    c.d_h = j.at("d_h").get<int>();
    c.d_in = j.at("d_in").get<int>();
    c.mode = parse_ablation(j.at("mode").get<std::string>());
    c.scorer = parse_scorer(j.at("scorer").get<std::string>());
    c.score_target = j.at("score_target").get<bool>();
    c.init_scale = j.at("init_scale").get<double>();
    c.embedding_noise = j.at("embedding_noise").get<double>();
    return c;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string config_hash(const nlohmann::json& config) { return hex64(hash_string(config.dump())); }

struct Checkpoint {
    ModelParams params;
    nlohmann::json run_config;  // the configuration that produced the parameters
    std::string config_hash;
};

inline void write_checkpoint(std::ostream& out, const ModelParams& params_in, const nlohmann::json& run_config) {
    ModelParams& params = const_cast<ModelParams&>(params_in);
    params.validate_shapes();
    nlohmann::json vocab;
    for (Modality m : {Modality::video, Modality::context})
        vocab[to_string(m)] = {{"entities", params.emb[m].entity_vocab.keys()}, {"relations", params.emb[m].relation_vocab.keys()}};
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : params.tensors()) tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
    const nlohmann::json header{{"format", "copath.model"},
                                {"version", kCheckpointVersion},
                                {"model", model_config_to_json(params.config)},
                                {"run_config", run_config},
                                {"config_hash", config_hash(run_config)},
                                {"vocab", vocab},
                                {"tensors", tensors}};
    out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n' << header.dump() << '\n';
    for (const auto& t : params.tensors())
        out.write(reinterpret_cast<const char*>(t.data), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!out) input_error("failed writing checkpoint");
}

inline Checkpoint read_checkpoint(std::istream& in) {
    std::string magic_line;
    std::getline(in, magic_line);
    std::istringstream ms(magic_line);
    std::string magic;
    int version = 0;
    ms >> magic >> version;
    if (magic != kCheckpointMagic) input_error("not a model checkpoint");
    if (version != kCheckpointVersion)
        input_error("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
    std::string header_line;
    std::getline(in, header_line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::parse_error& e) {
        input_error(std::string("malformed checkpoint header: ") + e.what());
    }

    Checkpoint ck;
    try {
        ModelParams& p = ck.params;
        p = init_model(model_config_from_json(header.at("model")), 0);
        for (Modality m : {Modality::video, Modality::context}) {
            const auto& v = header.at("vocab").at(to_string(m));
            auto& t = p.emb[m];
            for (const auto& k : v.at("entities")) t.entity_vocab.add(k.get<std::string>());
            for (const auto& k : v.at("relations")) t.relation_vocab.add(k.get<std::string>());
            t.entities = Matrix::Zero(static_cast<Eigen::Index>(t.entity_vocab.size()), p.config.dim);
            t.relations = Matrix::Zero(static_cast<Eigen::Index>(t.relation_vocab.size()), p.config.dim);
        }
        auto refs = p.tensors();
        const auto& declared = header.at("tensors");
        if (declared.size() != refs.size()) input_error("checkpoint tensor count does not match its model configuration");
        for (std::size_t i = 0; i < refs.size(); ++i) {
            if (declared[i].at("name") != refs[i].name || declared[i].at("rows").get<Eigen::Index>() != refs[i].rows ||
                declared[i].at("cols").get<Eigen::Index>() != refs[i].cols)
                input_error("checkpoint tensor '" + refs[i].name + "' has a shape that does not match its configuration");
            in.read(reinterpret_cast<char*>(refs[i].data), static_cast<std::streamsize>(refs[i].size() * sizeof(double)));
            if (!in) input_error("checkpoint truncated in tensor '" + refs[i].name + "'");
        }
        ck.run_config = header.at("run_config");
        ck.config_hash = header.at("config_hash").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        input_error(std::string("malformed checkpoint header: ") + e.what());
    }
    ck.params.validate_shapes();
    return ck;
}

inline void save_checkpoint(const std::string& path, const ModelParams& params, const nlohmann::json& run_config) {
    std::ofstream out(path, std::ios::binary);
    if (!out) input_error("cannot write checkpoint " + path);
    write_checkpoint(out, params, run_config);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) input_error("cannot open checkpoint " + path);
    return read_checkpoint(in);
}

}  // namespace copath
