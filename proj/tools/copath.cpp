// copath command-line driver.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "copath/checkpoint.hpp"
#include "copath/cli.hpp"
#include "copath/synth.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<int> horizon;
    std::optional<std::string> decode;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Overrides& o, bool needs_config = true) {
    auto* c = cmd->add_option("--config", o.config, "run configuration (JSON)");
    if (needs_config) c->required();
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--mode", o.mode, "full, no-comm, no-vgraph or no-ugraph");
    cmd->add_option("--horizon", o.horizon, "path length T");
    cmd->add_option("--decode", o.decode, "greedy, sample or beam:k");
    cmd->add_option("--out", o.out, "output directory");
}

copath::RunConfig resolve(const Overrides& o) {
    nlohmann::json j = copath::to_json(copath::load_run_config(o.config));
    if (o.seed) j["seed"] = *o.seed;
    if (o.mode) j["mode"] = copath::to_string(copath::parse_ablation(*o.mode));
    if (o.horizon) j["horizon"] = *o.horizon;
    if (o.decode) j["decode"] = *o.decode;
    if (o.out) j["out"] = *o.out;
    return copath::run_config_from_json(j);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) copath::input_error("cannot write " + path);
    f << text;
}

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    for (std::string w; ss >> w;) out.push_back(w);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-agent path reasoning over video and context semantic graphs"};
    app.require_subcommand(1);

    // build-graph
    std::string bg_triplets, bg_mode = "video", bg_vectors, bg_out;
    double bg_tau = 0.9, bg_threshold = 0.5;
    auto* build = app.add_subcommand("build-graph", "triplets -> semantic graph + merge report");
    build->add_option("triplets", bg_triplets, "JSONL triplet file")->required();
    build->add_option("--kind", bg_mode, "video or context")->check(CLI::IsMember({"video", "context"}));
    build->add_option("--vectors", bg_vectors, "word-vector text file")->required();
    build->add_option("--tau", bg_tau, "merge threshold on cosine similarity");
    build->add_option("--threshold", bg_threshold, "video confidence threshold");
    build->add_option("--out", bg_out, "output graph file")->required();

    // assemble
    std::string as_v, as_u, as_n;
    auto* assemble = app.add_subcommand("assemble", "print the generator input line");
    assemble->add_option("--video-path", as_v, "serialized video path tokens");
    assemble->add_option("--context-path", as_u, "serialized context path tokens");
    assemble->add_option("--utterance", as_n, "last utterance tokens")->required();

    // gen
    std::string gen_kind = "path", gen_out;
    int gen_count = 200;
    std::uint64_t gen_seed = 0;
    copath::GenConfig gen_cfg;
    auto* gen = app.add_subcommand("gen", "write synthetic tasks and their word vectors");
    gen->add_option("--kind", gen_kind, "path or coordination")->check(CLI::IsMember({"path", "coordination"}));
    gen->add_option("--count", gen_count, "number of tasks");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--nodes", gen_cfg.nodes);
    gen->add_option("--branching", gen_cfg.branching);
    gen->add_option("--horizon", gen_cfg.horizon);
    gen->add_option("--vocab", gen_cfg.vocab);
    gen->add_option("--dim", gen_cfg.dim);
    gen->add_option("--out", gen_out, "output directory")->required();

    Overrides o;
    auto* trn = app.add_subcommand("train", "train and write model.ckpt + train_log.jsonl");
    add_common(trn, o);

    std::vector<std::string> ev_ckpts;
    bool ev_untrained = false;
    auto* ev = app.add_subcommand("eval", "evaluate checkpoints on the held-out tasks");
    add_common(ev, o);
    ev->add_option("--checkpoint", ev_ckpts, "checkpoint(s); several give a side-by-side comparison");
    ev->add_flag("--untrained", ev_untrained, "evaluate freshly initialized parameters");

    std::string rs_ckpt;
    std::size_t rs_task = 0;
    auto* rs = app.add_subcommand("reason", "print the reasoning paths for one task");
    add_common(rs, o);
    rs->add_option("--checkpoint", rs_ckpt)->required();
    rs->add_option("--task", rs_task, "task index");

    std::vector<int> sw_T;
    auto* sw = app.add_subcommand("sweep", "train and evaluate for each horizon T");
    add_common(sw, o);
    sw->add_option("--T", sw_T, "horizons")->required()->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build) {
            const auto kind = bg_mode == "video" ? copath::Modality::video : copath::Modality::context;
            const auto r = copath::cmd_build_graph(copath::load_triplets(bg_triplets), kind,
                                                   copath::load_word_vectors(bg_vectors), bg_tau, bg_threshold);
            copath::save_graph(r.graph, bg_out);
            write_text(bg_out + ".merge.json", copath::merge_report(r).dump(2) + "\n");
            std::cout << r.graph.num_entities() << " entities, " << r.graph.num_labeled_edges() << " edges\n";
        } else if (*assemble) {
            std::cout << copath::assemble(split_words(as_v), split_words(as_u), split_words(as_n)) << '\n';
        } else if (*gen) {
            std::vector<copath::SyntheticTask> tasks;
            for (int i = 0; i < gen_count; ++i) {
                const auto s = copath::derive_seed(gen_seed, static_cast<std::uint64_t>(i));
                tasks.push_back(gen_kind == "path" ? copath::gen_task(s, gen_cfg) : copath::gen_coordination_task(s, gen_cfg));
            }
            std::filesystem::create_directories(gen_out);
            const auto dir = std::filesystem::path(gen_out);
            copath::save_tasks(tasks, (dir / "tasks.jsonl").string());
            copath::save_word_vectors(copath::synthetic_word_vectors(tasks, gen_cfg.dim), (dir / "vectors.txt").string());
            std::cout << tasks.size() << " tasks written to " << gen_out << '\n';
        } else if (*trn) {
            const auto cfg = resolve(o);
            const auto w = copath::load_workspace(cfg);
            const auto r = copath::cmd_train(cfg, w);
            std::cout << "steps " << r.result.steps_run << ", best step " << r.result.best_step << ", checkpoint "
                      << r.checkpoint_path << '\n';
        } else if (*ev) {
            const auto cfg = resolve(o);
            const auto w = copath::load_workspace(cfg);
            nlohmann::json out = nlohmann::json::array();
            if (ev_untrained || ev_ckpts.empty()) {
                auto rep = copath::to_json(copath::cmd_eval(cfg, w, copath::untrained_checkpoint(cfg, w)));
                rep["checkpoint"] = "untrained";
                out.push_back(rep);
            }
            for (const auto& p : ev_ckpts) {
                auto rep = copath::to_json(copath::cmd_eval(cfg, w, copath::load_checkpoint(p)));
                rep["checkpoint"] = p;
                out.push_back(rep);
            }
            nlohmann::json report = out.size() == 1 ? out[0] : nlohmann::json{{"comparison", out}};
            std::cout << report.dump(2) << '\n';
        } else if (*rs) {
            const auto cfg = resolve(o);
            const auto w = copath::load_workspace(cfg);
            std::cout << copath::cmd_reason(cfg, w, copath::load_checkpoint(rs_ckpt), rs_task).dump(2) << '\n';
        } else if (*sw) {
            const auto cfg = resolve(o);
            const auto w = copath::load_workspace(cfg);
            std::cout << copath::format_sweep(copath::cmd_sweep_T(cfg, w, sw_T));
        }
    } catch (const copath::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == copath::ErrorKind::numeric ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
