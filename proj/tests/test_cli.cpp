#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "copath/cli.hpp"
#include "helpers.hpp"

using namespace copath;
namespace fs = std::filesystem;

namespace {

std::string fixture(const char* name) { return std::string(COPATH_FIXTURES) + "/" + name; }

/// A scratch directory removed at scope exit.
struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("copath_test_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

GenConfig small_gen(int horizon = 2, int branching = 3) {
    GenConfig g;
    g.nodes = 10, g.vocab = 40, g.dim = 16, g.horizon = horizon, g.branching = branching;
    return g;
}

RunConfig write_workspace(const ScratchDir& dir, const GenConfig& g, int n, int held_out) {
    std::vector<SyntheticTask> tasks;
    for (int i = 0; i < n; ++i) tasks.push_back(gen_task(derive_seed(1, static_cast<std::uint64_t>(i)), g));
    save_tasks(tasks, dir / "tasks.jsonl");
    save_word_vectors(synthetic_word_vectors(tasks, g.dim), dir / "vectors.txt");
    RunConfig c;
    c.tasks = dir / "tasks.jsonl";
    c.vectors = dir / "vectors.txt";
    c.held_out = held_out;
    c.model.dim = g.dim, c.model.d_h = 8, c.model.d_in = 8;
    c.train.horizon = g.horizon;
    c.train.total_steps = 60;
    c.train.eval_every = 20;
    c.train.learning_rate = 0.01;
    c.out = dir / "out";
    return c;
}

}  // namespace

TEST(Assemble, GoldenStrings) {
    EXPECT_EQ(assemble({"a", "r", "b"}, {"c", "s", "d"}, {"hi"}), "a r b [SEP] c s d [SEP] hi");
    EXPECT_EQ(assemble({}, {}, {"hi"}), "[SEP] [SEP] hi");
    EXPECT_EQ(assemble({}, {"c", "s", "d"}, {"hi"}), "[SEP] c s d [SEP] hi");
    EXPECT_EQ(assemble({"a", "r", "b"}, {}, {"hi", "there"}), "a r b [SEP] [SEP] hi there");
    EXPECT_EQ(assemble({}, {}, {}), "[SEP] [SEP]");
}

TEST(Assemble, SplitRoundTrip) {
    const Tokens v{"man", "holds", "cup"}, u{"cup"}, n{"what", "is", "he", "holding"};
    const auto seg = split_assembly(assemble(v, u, n));
    EXPECT_EQ(seg[0], v);
    EXPECT_EQ(seg[1], u);
    EXPECT_EQ(seg[2], n);
    const auto empty = split_assembly("[SEP] [SEP] hi");
    EXPECT_TRUE(empty[0].empty() && empty[1].empty());
    EXPECT_THROW(split_assembly("a [SEP] b"), Error);
    EXPECT_THROW(split_assembly("a [SEP] b [SEP] c [SEP] d"), Error);
}

TEST(RunConfig, RoundTripAndStrictKeys) {
    RunConfig c;
    c.tasks = "t.jsonl", c.vectors = "v.txt", c.held_out = 3;
    c.model.scorer = ScorerKind::bilinear;
    c.model.mode = AblationMode::no_comm;
    c.train.baseline_beta = 0.9;
    c.train.horizon = 3;
    c.decode = DecodeMode::beam(4);
    const auto j = to_json(c);
    EXPECT_EQ(to_json(run_config_from_json(j)), j);
    auto bad = j;
    bad["learning_rat"] = 0.1;
    try {
        run_config_from_json(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("learning_rat"), std::string::npos);
    }
    bad = j;
    bad["horizon"] = "two";
    EXPECT_THROW(run_config_from_json(bad), Error);
    bad = j;
    bad["decode"] = "beam:0";
    EXPECT_THROW(run_config_from_json(bad), Error);
    bad = j;
    bad["mode"] = "half";
    EXPECT_THROW(run_config_from_json(bad), Error);
}

TEST(RunConfig, DecodeParsing) {
    EXPECT_EQ(parse_decode("beam:3").beam_width, 3);
    EXPECT_EQ(parse_decode("sample", 5).seed, 5u);
    EXPECT_EQ(decode_to_string(parse_decode("greedy")), "greedy");
    EXPECT_THROW(parse_decode("beam:x"), Error);
}

TEST(Split, Sizes) {
    std::vector<SyntheticTask> tasks(20);
    const auto s = split_tasks(tasks, 5, 0.2);
    EXPECT_EQ(s.train.size(), 12u);
    EXPECT_EQ(s.val.size(), 3u);
    EXPECT_EQ(s.test.size(), 5u);
    EXPECT_THROW(split_tasks(tasks, 21, 0.2), Error);
}

TEST(BuildGraphCommand, Examples) {
    const auto wv = load_word_vectors(fixture("vectors8.txt"));
    const auto one = cmd_build_graph(load_triplets(fixture("one_triplet.jsonl")), Modality::video, wv, 0.9, 0.5);
    EXPECT_EQ(one.graph.num_entities(), 2u);
    try {
        cmd_build_graph(load_triplets(fixture("low_confidence.jsonl")), Modality::video, wv, 0.9, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("empty graph"), std::string::npos);
    }
    // context graphs skip the confidence filter
    EXPECT_EQ(cmd_build_graph(load_triplets(fixture("low_confidence.jsonl")), Modality::context, wv, 0.9, 0.5).graph.num_entities(), 4u);
    const auto ten = cmd_build_graph(load_triplets(fixture("triplets10.jsonl")), Modality::video, wv, 0.9, 0.5);
    EXPECT_EQ(ten.graph.num_entities(), 8u);
    const auto report = merge_report(ten);
    EXPECT_EQ(report.at("merge_map").at("mug").at("canonical"), "cup");
    EXPECT_EQ(report.at("entities"), 8);
}

TEST(EvalCommand, ZeroScorerRecoversEveryBranchingOneWalk) {
    // With all scores tied, greedy takes the labeled edge because STAY sorts last.
    ScratchDir dir("b1");
    GenConfig g = small_gen(3, 1);
    g.distractors = false;
    const RunConfig c = write_workspace(dir, g, 12, 0);
    const auto w = load_workspace(c);
    auto ck = untrained_checkpoint(c, w);
    for (auto& a : ck.params.agents) a.weight.setZero(), a.bias.setZero();
    const auto rep = cmd_eval(c, w, ck);
    EXPECT_DOUBLE_EQ(rep.recovery_rate, 1.0);
    EXPECT_DOUBLE_EQ(rep.mean_reward, 2.0);
}

TEST(EvalCommand, DeterministicReportAndOracleDominance) {
    ScratchDir dir("det");
    const RunConfig c = write_workspace(dir, small_gen(), 10, 5);
    const auto w = load_workspace(c);
    const auto ck = untrained_checkpoint(c, w);
    const auto a = to_json(cmd_eval(c, w, ck)).dump();
    const auto b = to_json(cmd_eval(c, w, ck)).dump();
    EXPECT_EQ(a, b);
    const auto rep = cmd_eval(c, w, ck);
    EXPECT_EQ(rep.instances.size(), 5u);
    EXPECT_EQ(rep.config_hash, config_hash(to_json(c)));
    for (const auto& i : rep.instances) {
        EXPECT_LE(i.reward, i.oracle_max + 1e-12);
        EXPECT_LE(i.oracle_ratio, 1.0 + 1e-12);
    }
}

TEST(TrainCommand, WritesCheckpointAndLog) {
    ScratchDir dir("train");
    const RunConfig c = write_workspace(dir, small_gen(), 10, 2);
    const auto w = load_workspace(c);
    const auto out = cmd_train(c, w);
    const auto ck = load_checkpoint(out.checkpoint_path);
    EXPECT_EQ(ck.config_hash, config_hash(to_json(c)));
    EXPECT_EQ(run_config_from_json(ck.run_config).train.total_steps, 60);
    std::ifstream log(out.log_path);
    int lines = 0;
    for (std::string l; std::getline(log, l);) {
        EXPECT_EQ(nlohmann::json::parse(l).at("next_phase"), "mle");
        ++lines;
    }
    EXPECT_EQ(lines, out.result.steps_run);
}

TEST(ReasonCommand, ReportsPathsAndAssembly) {
    ScratchDir dir("reason");
    const RunConfig c = write_workspace(dir, small_gen(3), 4, 0);
    const auto w = load_workspace(c);
    const auto j = cmd_reason(c, w, untrained_checkpoint(c, w), 1);
    const Tokens pv = j.at("path_v"), pu = j.at("path_u");
    EXPECT_EQ(j.at("assembly"), assemble(pv, pu, w.tasks[1].instance.utterance));
    EXPECT_EQ(j.at("agents").at("video").at("steps").size(), 2u);
    EXPECT_LE(j.at("agents").at("context").at("steps")[0].at("log_prob").get<double>(), 0.0);
    EXPECT_THROW(cmd_reason(c, w, untrained_checkpoint(c, w), 99), Error);
}

TEST(SweepCommand, HorizonOneOnStartOnlyReferences) {
    ScratchDir dir("sweep1");
    RunConfig c = write_workspace(dir, small_gen(1), 10, 4);
    c.train.total_steps = 5;
    const auto w = load_workspace(c);
    const auto rows = cmd_sweep_T(c, w, {1});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_DOUBLE_EQ(rows[0].recovery, 1.0);
    EXPECT_THROW(cmd_sweep_T(c, w, {0}), Error);
}

TEST(SweepCommand, IdenticalSeedsGiveIdenticalRows) {
    ScratchDir dir("sweep2");
    RunConfig c = write_workspace(dir, small_gen(), 10, 4);
    c.train.total_steps = 20;
    const auto w = load_workspace(c);
    const auto rows = cmd_sweep_T(c, w, {2, 2});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].mean_reward, rows[1].mean_reward);
    EXPECT_EQ(rows[0].recovery, rows[1].recovery);
    const auto table = format_sweep(rows);
    EXPECT_EQ(table.substr(0, table.find('\n')).find("mean_reward") != std::string::npos, true);
}

TEST(Workspace, DimensionMismatchRejected) {
    ScratchDir dir("dim");
    RunConfig c = write_workspace(dir, small_gen(), 3, 0);
    c.model.dim = 17;
    EXPECT_THROW(load_workspace(c), Error);
}
