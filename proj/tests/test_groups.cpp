#include <gtest/gtest.h>

#include <random>

#include "gw/error.hpp"
#include "gw/groups.hpp"
#include "oracle.hpp"
#include "random_data.hpp"

using namespace gw;
using gw::testing::fixture_csv;

namespace {

GroupKey key(const std::string& canonical) { return GroupKey::parse(canonical); }

std::vector<std::uint64_t> ids(std::span<const RowId> rows) {
    std::vector<std::uint64_t> out;
    for (auto r : rows) out.push_back(r.value);
    return out;
}

struct Fixture : ::testing::Test {
    Dataset ds = Dataset::ingest_csv(fixture_csv());
    GroupSet groups = generate_groups(ds, GroupConfig{});
    OverlapGraph graph = build_overlap_graph(groups);
};

}  // namespace

TEST(GroupKeyText, CanonicalRoundTrip) {
    const GroupKey k{"Country", "Bhutan", "Income"};
    EXPECT_EQ(k.canonical(), "Income|Country=Bhutan");
    EXPECT_EQ(GroupKey::parse("Income|Country=Bhutan"), k);
    EXPECT_EQ(GroupKey::parse("Income|Note=a=b").cat_value, "a=b");
    EXPECT_THROW(GroupKey::parse("Income"), Error);
    EXPECT_THROW(GroupKey::parse("Income|Country"), Error);
}

TEST(GroupKeyText, Ordering) {
    // (cat_column, num_column, cat_value)
    EXPECT_LT((GroupKey{"A", "z", "N"}), (GroupKey{"B", "a", "A"}));
    EXPECT_LT((GroupKey{"A", "z", "M"}), (GroupKey{"A", "a", "N"}));
    EXPECT_LT((GroupKey{"A", "a", "N"}), (GroupKey{"A", "b", "N"}));
}

TEST_F(Fixture, MembershipExamples) {
    EXPECT_EQ(ids(groups.rows(*groups.find(ds, key("Income|Country=Bhutan")))),
              (std::vector<std::uint64_t>{1, 2, 3, 4}));
    EXPECT_EQ(ids(groups.rows(*groups.find(ds, key("Income|Degree=BS")))),
              (std::vector<std::uint64_t>{1, 2, 4, 5, 8}));
    EXPECT_EQ(groups.group_count(), 5u);
    EXPECT_EQ(gw::testing::engine_groups(groups, ds), gw::testing::oracle_groups(ds));
}

TEST_F(Fixture, PartitionPerPair) {
    const auto a = groups.rows(*groups.find(ds, key("Income|Country=Bhutan")));
    const auto b = groups.rows(*groups.find(ds, key("Income|Country=Chad")));
    std::vector<RowId> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    EXPECT_TRUE(both.empty());
    EXPECT_EQ(a.size() + b.size(), 8u);
}

TEST_F(Fixture, SmallGroupsFlagged) {
    const auto all = groups.materialize(ds);
    for (const auto& g : all) EXPECT_EQ(g.below_min_size, g.key.cat_value == "PhD") << g.key.canonical();
}

TEST_F(Fixture, OverlapEdges) {
    const auto edges = gw::testing::engine_edges(graph, groups, ds);
    EXPECT_TRUE(edges.count({"Income|Country=Bhutan", "Income|Degree=BS"}));
    EXPECT_FALSE(edges.count({"Income|Country=Bhutan", "Income|Country=Chad"}));
    EXPECT_EQ(graph.shared_rows(*groups.find_bucket(0, "Bhutan"), *groups.find_bucket(1, "BS")), 3u);
    EXPECT_EQ(edges, gw::testing::oracle_edges(ds));
}

TEST(Overlap, SingleGroupHasNoEdges) {
    const auto ds = Dataset::ingest_csv("c,n\nx,1\nx,2\n");
    const auto groups = generate_groups(ds, GroupConfig{});
    EXPECT_TRUE(build_overlap_graph(groups).edges(groups, ds).empty());
}

TEST_F(Fixture, AffectedOneHop) {
    const std::vector<RowId> touched{RowId{3}};
    const auto got = affected_groups(graph, groups, ds, touched);
    const std::set<GroupKey> want{key("Income|Country=Bhutan"), key("Income|Degree=MS"), key("Income|Degree=BS"),
                                  key("Income|Country=Chad")};
    EXPECT_EQ(got, want);
    EXPECT_TRUE(affected_groups(graph, groups, ds, {}).empty());
    const auto all = ds.live_rows();
    EXPECT_EQ(affected_groups(graph, groups, ds, all).size(), groups.group_count());
}

TEST_F(Fixture, AffectedIsMonotone) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        std::vector<RowId> small;
        for (std::uint64_t r = 1; r <= 8; ++r) {
            if (rng() % 3 == 0) small.push_back(RowId{r});
        }
        auto big = small;
        big.push_back(RowId{1 + rng() % 8});
        std::sort(big.begin(), big.end());
        for (auto mode : {AffectedMode::OneHop, AffectedMode::ConnectedComponents}) {
            const auto a = affected_groups(graph, groups, ds, small, mode);
            const auto b = affected_groups(graph, groups, ds, big, mode);
            EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
        }
    }
}

TEST(Generate, Errors) {
    const auto nums = Dataset::ingest_csv("a,b\n1,2\n3,4\n");
    EXPECT_THROW(generate_groups(nums, GroupConfig{}), Error);
    const auto cats = Dataset::ingest_csv("a,b\nx,y\n");
    try {
        generate_groups(cats, GroupConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NoNumericColumns);
    }
    const auto ds = Dataset::ingest_csv(fixture_csv());
    try {
        generate_groups(ds, GroupConfig{{{"Income", "Country"}}, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidConfig);
    }
}

TEST(Generate, ExplicitPairs) {
    const auto ds = Dataset::ingest_csv(fixture_csv());
    const auto g = generate_groups(ds, GroupConfig{{{"Degree", "Income"}}, 2});
    EXPECT_EQ(g.group_count(), 3u);
    EXPECT_FALSE(g.find(ds, key("Income|Country=Bhutan")).has_value());
}

TEST(Generate, NullCategoryIsItsOwnGroup) {
    const auto ds = Dataset::ingest_csv("c,n\nx,1\n,2\n,3\n");
    const auto g = generate_groups(ds, GroupConfig{});
    const auto ref = g.find(ds, GroupKey{"c", std::string(kNullCategory), "n"});
    ASSERT_TRUE(ref.has_value());
    EXPECT_EQ(ids(g.rows(*ref)), (std::vector<std::uint64_t>{2, 3}));
}

TEST_F(Fixture, IncrementalDeleteRow7) {
    SnapshotDelta d;
    d.row_deletions.push_back(ds.row_image(RowId{7}));
    ds.apply_delta(d);
    const auto bhutan_before = ids(groups.rows(*groups.find(ds, key("Income|Country=Bhutan"))));
    const auto upd = update_groups_incremental(groups, graph, ds, d);
    EXPECT_FALSE(groups.find(ds, key("Income|Degree=PhD")).has_value());
    EXPECT_EQ(ids(groups.rows(*groups.find(ds, key("Income|Country=Chad")))), (std::vector<std::uint64_t>{5, 6, 8}));
    EXPECT_EQ(ids(groups.rows(*groups.find(ds, key("Income|Country=Bhutan")))), bhutan_before);
    EXPECT_EQ(upd.moved_rows, (std::vector<RowId>{RowId{7}}));
    EXPECT_EQ(gw::testing::engine_groups(groups, ds), gw::testing::oracle_groups(ds));
    EXPECT_EQ(gw::testing::engine_edges(graph, groups, ds), gw::testing::oracle_edges(ds));
}

TEST_F(Fixture, IncrementalNumericEditKeepsMembership) {
    const auto before = gw::testing::engine_edges(graph, groups, ds);
    SnapshotDelta d;
    d.cell_changes.push_back(CellChange{RowId{3}, "Income", CellValue::null(), CellValue::number(600)});
    ds.apply_delta(d);
    const auto upd = update_groups_incremental(groups, graph, ds, d);
    EXPECT_TRUE(upd.moved_rows.empty());
    EXPECT_EQ(gw::testing::engine_edges(graph, groups, ds), before);
}

TEST_F(Fixture, IncrementalCategoricalMove) {
    SnapshotDelta d;
    d.cell_changes.push_back(CellChange{RowId{1}, "Country", CellValue::text("Bhutan"), CellValue::text("Chad")});
    ds.apply_delta(d);
    update_groups_incremental(groups, graph, ds, d);
    EXPECT_EQ(ids(groups.rows(*groups.find(ds, key("Income|Country=Bhutan")))), (std::vector<std::uint64_t>{2, 3, 4}));
    EXPECT_EQ(gw::testing::engine_groups(groups, ds), gw::testing::oracle_groups(ds));
    EXPECT_EQ(gw::testing::engine_edges(graph, groups, ds), gw::testing::oracle_edges(ds));
}

// Random delta sequences (cell edits on any column, deletions, restorations
// via undo) keep the maintained groups and graph equal to a rebuild.
TEST(GroupsProperty, IncrementalEqualsScratch) {
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 60; ++round) {
        auto ds = Dataset::ingest_csv(gw::testing::random_csv(rng));
        auto groups = generate_groups(ds, GroupConfig{});
        auto graph = build_overlap_graph(groups);
        std::vector<SnapshotDelta> done;
        const auto steps = 1 + rng() % 50;
        for (std::size_t s = 0; s < steps; ++s) {
            SnapshotDelta d;
            const auto live = ds.live_rows();
            if (!done.empty() && rng() % 5 == 0) {
                d = inverse(done.back());
                done.pop_back();
            } else if (live.size() > 1 && rng() % 4 == 0) {
                d.row_deletions.push_back(ds.row_image(live[rng() % live.size()]));
                done.push_back(d);
            } else if (!live.empty()) {
                const auto r = live[rng() % live.size()];
                const auto& col = ds.columns()[rng() % ds.columns().size()];
                const auto& before = ds.get_cell(r, col.name);
                CellValue after;
                if (col.kind == ColumnKind::Categorical) {
                    after = rng() % 5 == 0 ? CellValue::null() : CellValue::text("v" + std::to_string(rng() % 7));
                } else {
                    after = CellValue::number(static_cast<double>(rng() % 100));
                }
                if (after == before) continue;
                d.cell_changes.push_back(CellChange{r, col.name, before, after});
                done.push_back(d);
            } else {
                continue;
            }
            ds.apply_delta(d);
            update_groups_incremental(groups, graph, ds, d);
            ASSERT_EQ(gw::testing::engine_groups(groups, ds), gw::testing::oracle_groups(ds)) << round << "/" << s;
            ASSERT_EQ(gw::testing::engine_edges(graph, groups, ds), gw::testing::oracle_edges(ds)) << round << "/" << s;
        }
    }
}
