#include <gtest/gtest.h>

#include <sstream>

#include "copath/semgraph.hpp"
#include "helpers.hpp"

using namespace copath;
using copath::testing::triplet;

namespace {

WordVectors two_d(std::initializer_list<std::pair<const char*, std::pair<double, double>>> items) {
    WordVectors wv(2);
    for (const auto& [k, v] : items) wv.add(k, Vector{{v.first, v.second}});
    return wv;
}

std::string fixture(const char* name) { return std::string(COPATH_FIXTURES) + "/" + name; }

}  // namespace

TEST(Tokenize, LowercasesAndSplitsOnUnderscore) {
    EXPECT_EQ(tokenize("Coffee_cup  ON"), (Tokens{"coffee", "cup", "on"}));
    EXPECT_TRUE(tokenize("  ").empty());
}

TEST(Triplets, ParsesJsonLines) {
    std::istringstream in(R"({"subject":"a man","predicate":"holds","object":"cup","confidence":0.7}

{"subject":"cup","predicate":"on","object":"table"}
)");
    const auto recs = read_triplets(in);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].subject, (Tokens{"a", "man"}));
    EXPECT_DOUBLE_EQ(*recs[0].confidence, 0.7);
    EXPECT_FALSE(recs[1].confidence);
}

TEST(Triplets, ErrorsCarryLineNumbers) {
    std::istringstream bad(R"({"subject":"a","predicate":"b","object":"c"}
{"subject":"a","predicate":"b"
)");
    try {
        read_triplets(bad, "f.jsonl");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("f.jsonl:2"), std::string::npos) << e.what();
        EXPECT_EQ(e.kind(), ErrorKind::input);
    }
    std::istringstream unknown(R"({"subject":"a","predicate":"b","object":"c","extra":1})");
    EXPECT_THROW(read_triplets(unknown), Error);
    std::istringstream range(R"({"subject":"a","predicate":"b","object":"c","confidence":1.5})");
    EXPECT_THROW(read_triplets(range), Error);
    std::istringstream empty_field(R"({"subject":"","predicate":"b","object":"c"})");
    EXPECT_THROW(read_triplets(empty_field), Error);
}

TEST(FilterVideo, EmptyAndAllKept) {
    EXPECT_TRUE(filter_video_triplets({}, 0.5).empty());
    std::vector<TripletRecord> recs{triplet("a", "r", "b", 1.0), triplet("c", "s", "d", 1.0)};
    EXPECT_EQ(filter_video_triplets(recs, 0.5), recs);
}

TEST(FilterVideo, StrictThresholdAndMissingConfidence) {
    std::vector<TripletRecord> recs{triplet("a", "r", "b", 0.5), triplet("c", "s", "d", 0.51)};
    const auto kept = filter_video_triplets(recs, 0.5);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].subject, Tokens{"c"});
    EXPECT_THROW(filter_video_triplets({triplet("a", "r", "b")}, 0.5), Error);
    EXPECT_THROW(filter_video_triplets(recs, 1.5), Error);
}

TEST(Merge, IdenticalNamesMergeAtAnyTau) {
    const auto wv = two_d({{"a", {1, 0}}, {"b", {0, 1}}});
    const auto res = merge_similar_entities({triplet("a", "r", "b"), triplet("a", "s", "b")}, wv, 1.0);
    EXPECT_EQ(build_graph(res.records).num_entities(), 2u);
}

TEST(Merge, OrthogonalNotMerged) {
    const auto wv = two_d({{"a", {1, 0}}, {"b", {0, 1}}});
    const auto res = merge_similar_entities({triplet("a", "r", "b")}, wv, 0.9);
    EXPECT_EQ(res.merge_map.at("a"), "a");
    EXPECT_EQ(res.merge_map.at("b"), "b");
}

TEST(Merge, NearDuplicateMerged) {
    // cos((1,0), (0.95,0.3122)) = 0.95 / 1.00000... ~ 0.950
    const auto wv = two_d({{"a", {1, 0}}, {"b", {0.95, 0.3122}}, {"c", {0, 1}}});
    const auto res = merge_similar_entities({triplet("a", "r", "c"), triplet("b", "r", "c"), triplet("b", "s", "c")}, wv, 0.9);
    // b appears twice, a once: b is canonical.
    EXPECT_EQ(res.merge_map.at("a"), "b");
    EXPECT_EQ(res.merge_map.at("b"), "b");
    EXPECT_EQ(res.records[0].subject, Tokens{"b"});
}

TEST(Merge, FrequencyTieIsLexicographic) {
    const auto wv = two_d({{"mug", {1, 0}}, {"cup", {0.95, 0.3122}}, {"c", {0, 1}}});
    const auto res = merge_similar_entities({triplet("mug", "r", "c"), triplet("cup", "r", "c")}, wv, 0.9);
    EXPECT_EQ(res.merge_map.at("mug"), "cup");
}

TEST(Merge, OovEntitiesStayUnmerged) {
    const auto wv = two_d({{"a", {1, 0}}});
    const auto res = merge_similar_entities({triplet("x", "r", "y"), triplet("a", "r", "y")}, wv, 0.5);
    EXPECT_EQ(res.merge_map.at("x"), "x");
    EXPECT_EQ(res.merge_map.at("y"), "y");
    EXPECT_EQ(res.oov_entities, (std::vector<std::string>{"x", "y"}));
    EXPECT_THROW(merge_similar_entities({}, wv, 0.0), Error);
}

TEST(BuildGraph, MinimalGraph) {
    const auto g = build_graph({triplet("a", "likes", "b")});
    EXPECT_EQ(g.num_entities(), 2u);
    EXPECT_EQ(g.num_labeled_edges(), 1u);
    EXPECT_EQ(g.edges().size(), 3u);  // plus two STAY loops
    EXPECT_EQ(g.relation_name(g.stay_relation()), stay_name());
    EXPECT_EQ(g.stay_relation(), 1);
}

TEST(BuildGraph, DuplicatesCollapse) {
    const auto g = build_graph({triplet("a", "r", "b"), triplet("a", "r", "b")});
    EXPECT_EQ(g.num_labeled_edges(), 1u);
}

TEST(BuildGraph, EmptyIsError) { EXPECT_THROW(build_graph({}), Error); }

TEST(BuildGraph, ChainCountsAndOrdering) {
    const auto g = build_graph({triplet("a", "r", "b"), triplet("b", "r", "c"), triplet("c", "r", "d")});
    EXPECT_EQ(g.num_entities(), 4u);
    EXPECT_EQ(g.num_labeled_edges(), 3u);
    EXPECT_EQ(g.edges().size(), 7u);
    const EntityId b = *g.find_entity({"b"});
    const auto out = g.outgoing_edges(b);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0], (Edge{b, 0, *g.find_entity({"c"})}));
    EXPECT_EQ(out[1], (Edge{b, g.stay_relation(), b}));
    // pure: a second query returns the same list
    const auto again = g.outgoing_edges(b);
    EXPECT_TRUE(std::equal(out.begin(), out.end(), again.begin(), again.end()));
}

TEST(BuildGraph, IsolatedNodeHasOnlyStay) {
    SemanticGraph g({{"a"}, {"b"}, {"z"}}, {{"r"}}, {{0, 0, 1}});
    const auto out = g.outgoing_edges(2);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_TRUE(g.is_stay(out[0].rel));
    EXPECT_EQ(out[0].dst, 2);
}

TEST(BuildGraph, OutgoingSortedByRelationThenTarget) {
    SemanticGraph g({{"a"}, {"b"}, {"c"}}, {{"r"}, {"s"}}, {{0, 1, 1}, {0, 0, 2}, {0, 0, 1}});
    const auto out = g.outgoing_edges(0);
    ASSERT_EQ(out.size(), 4u);
    EXPECT_EQ(out[0], (Edge{0, 0, 1}));
    EXPECT_EQ(out[1], (Edge{0, 0, 2}));
    EXPECT_EQ(out[2], (Edge{0, 1, 1}));
    EXPECT_TRUE(g.is_stay(out[3].rel));
}

TEST(BuildGraph, UnknownIdsRejected) {
    EXPECT_THROW(SemanticGraph({{"a"}}, {{"r"}}, {{0, 1, 0}}), Error);
    EXPECT_THROW(SemanticGraph({{"a"}}, {{"r"}}, {{0, 0, 3}}), Error);
    SemanticGraph g({{"a"}}, {{"r"}}, {});
    EXPECT_THROW(g.outgoing_edges(5), Error);
}

TEST(GraphCheckpoint, RoundTrip) {
    const auto g = build_graph({triplet("a man", "holds", "cup"), triplet("cup", "on", "table")});
    const auto h = graph_from_json(graph_to_json(g));
    EXPECT_EQ(h.entity_names(), g.entity_names());
    EXPECT_EQ(h.relation_names(), g.relation_names());
    EXPECT_EQ(h.edges(), g.edges());
}

TEST(GraphCheckpoint, VersionMismatchRejected) {
    auto j = graph_to_json(build_graph({triplet("a", "r", "b")}));
    j["version"] = 99;
    try {
        graph_from_json(j);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }
}

TEST(GraphFixture, TenTripletsMergeToEightEntities) {
    // Hand count: 9 surface forms, cup/mug cosine 0.95 >= 0.9, everything else <= 0.5.
    // cup and mug both occur twice; cup wins the tie. "cup on table" and "mug on table"
    // collapse, leaving 9 labeled edges.
    const auto recs = load_triplets(fixture("triplets10.jsonl"));
    ASSERT_EQ(recs.size(), 10u);
    const auto wv = load_word_vectors(fixture("vectors8.txt"));
    const auto merged = merge_similar_entities(filter_video_triplets(recs, 0.5), wv, 0.9);
    const auto g = build_graph(merged.records);
    EXPECT_EQ(g.num_entities(), 8u);
    EXPECT_EQ(g.num_labeled_edges(), 9u);
    EXPECT_EQ(merged.merge_map.at("mug"), "cup");
    EXPECT_FALSE(g.find_entity({"mug"}));
}
