#include <gtest/gtest.h>

#include <random>

#include "gw/dataset.hpp"
#include "gw/error.hpp"
#include "random_data.hpp"

using namespace gw;
using gw::testing::fixture_csv;

namespace {

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return Errc::BadRequest;
}

}  // namespace

TEST(Ingest, FixtureKinds) {
    const auto ds = Dataset::ingest_csv(fixture_csv());
    ASSERT_EQ(ds.columns().size(), 3u);
    EXPECT_EQ(ds.columns()[0].kind, ColumnKind::Categorical);
    EXPECT_EQ(ds.columns()[1].kind, ColumnKind::Categorical);
    // 6 of 7 non-null Income cells parse: 86% >= 60%.
    EXPECT_EQ(ds.columns()[2].kind, ColumnKind::Numeric);
    EXPECT_EQ(ds.live_count(), 8u);
    EXPECT_EQ(ds.issued_rows(), 8u);
}

TEST(Ingest, GetCellExamples) {
    const auto ds = Dataset::ingest_csv(fixture_csv());
    EXPECT_TRUE(ds.get_cell(RowId{3}, "Income").is_null());
    EXPECT_EQ(ds.get_cell(RowId{4}, "Income"), CellValue::text("12k"));
    EXPECT_EQ(ds.get_cell(RowId{7}, "Income"), CellValue::number(95000));
    EXPECT_EQ(code_of([&] { ds.get_cell(RowId{9}, "Income"); }), Errc::UnknownRow);
    EXPECT_EQ(code_of([&] { ds.get_cell(RowId{1}, "Salary"); }), Errc::UnknownColumn);
}

TEST(Ingest, Errors) {
    EXPECT_EQ(code_of([] { Dataset::ingest_csv("a,b\n"); }), Errc::EmptyDataset);
    EXPECT_EQ(code_of([] { Dataset::ingest_csv(""); }), Errc::EmptyDataset);
    EXPECT_EQ(code_of([] { Dataset::ingest_csv("a,a\n1,2\n"); }), Errc::MalformedCsv);
    EXPECT_EQ(code_of([] { Dataset::ingest_csv("a,b\n1,2,3\n"); }), Errc::MalformedCsv);
}

TEST(Ingest, ThresholdRule) {
    // 3 of 5 parse: exactly 60% -> Numeric; 2 of 5 -> Categorical.
    auto ds = Dataset::ingest_csv("x,y\n1,1\n2,2\na,a\nb,b\n3,c\n");
    EXPECT_EQ(ds.columns()[0].kind, ColumnKind::Numeric);
    EXPECT_EQ(ds.columns()[1].kind, ColumnKind::Categorical);
    // All-null column stays categorical.
    ds = Dataset::ingest_csv("x,y\n,1\n,2\n");
    EXPECT_EQ(ds.columns()[0].kind, ColumnKind::Categorical);
    EXPECT_EQ(ds.columns()[1].kind, ColumnKind::Numeric);
}

TEST(Ingest, Deterministic) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
        const auto csv = gw::testing::random_csv(rng);
        EXPECT_EQ(Dataset::ingest_csv(csv).columns(), Dataset::ingest_csv(csv).columns());
    }
}

TEST(ApplyDelta, ImputeTwiceIsStale) {
    auto ds = Dataset::ingest_csv(fixture_csv());
    SnapshotDelta d;
    d.cell_changes.push_back(CellChange{RowId{3}, "Income", CellValue::null(), CellValue::number(1066.67)});
    EXPECT_EQ(ds.apply_delta(d), 1u);
    EXPECT_EQ(ds.get_cell(RowId{3}, "Income"), CellValue::number(1066.67));
    EXPECT_EQ(code_of([&] { ds.apply_delta(d); }), Errc::StaleDelta);
    EXPECT_EQ(ds.version(), 1u);
    ds.apply_delta(inverse(d));
    EXPECT_TRUE(ds.same_content(Dataset::ingest_csv(fixture_csv())));
}

TEST(ApplyDelta, DeletionTombstonesAndRestores) {
    const auto original = Dataset::ingest_csv(fixture_csv());
    auto ds = original;
    SnapshotDelta d;
    d.row_deletions.push_back(ds.row_image(RowId{7}));
    ds.apply_delta(d);
    EXPECT_FALSE(ds.is_live(RowId{7}));
    EXPECT_EQ(ds.live_count(), 7u);
    EXPECT_EQ(code_of([&] { ds.get_cell(RowId{7}, "Income"); }), Errc::UnknownRow);
    EXPECT_EQ(ds.issued_rows(), 8u);
    EXPECT_EQ(code_of([&] { ds.apply_delta(d); }), Errc::StaleDelta);
    ds.apply_delta(inverse(d));
    EXPECT_TRUE(ds.same_content(original));
}

TEST(ApplyDelta, ValidationIsAtomic) {
    auto ds = Dataset::ingest_csv(fixture_csv());
    SnapshotDelta d;
    d.cell_changes.push_back(CellChange{RowId{1}, "Income", CellValue::number(1200), CellValue::number(1)});
    d.cell_changes.push_back(CellChange{RowId{2}, "Income", CellValue::number(999), CellValue::number(2)});
    EXPECT_EQ(code_of([&] { ds.apply_delta(d); }), Errc::StaleDelta);
    EXPECT_EQ(ds.get_cell(RowId{1}, "Income"), CellValue::number(1200));
    EXPECT_EQ(ds.version(), 0u);
}

TEST(ApplyDelta, InverseIsInvolution) {
    SnapshotDelta d;
    d.seq = 4;
    d.cell_changes.push_back(CellChange{RowId{1}, "a", CellValue::number(1), CellValue::text("x")});
    d.cell_changes.push_back(CellChange{RowId{2}, "a", CellValue::null(), CellValue::number(2)});
    d.row_deletions.push_back(RowImage{RowId{5}, {CellValue::text("q"), CellValue::null()}});
    EXPECT_EQ(inverse(inverse(d)), d);
    EXPECT_EQ(delta_from_json(to_json(d)), d);
}

// Random delta sequences followed by their inverses in reverse order restore
// the original dataset, and ids are never reused.
TEST(ApplyDelta, RandomSequencesInvert) {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 30; ++round) {
        const auto original = Dataset::ingest_csv(gw::testing::random_csv(rng));
        auto ds = original;
        std::vector<SnapshotDelta> applied;
        for (int step = 0; step < 25; ++step) {
            const auto live = ds.live_rows();
            if (live.size() < 2) break;
            SnapshotDelta d;
            const auto r = live[rng() % live.size()];
            if (rng() % 4 == 0) {
                d.row_deletions.push_back(ds.row_image(r));
            } else {
                const auto& col = ds.columns()[rng() % ds.columns().size()];
                const auto& before = ds.get_cell(r, col.name);
                CellValue after = rng() % 3 == 0 ? CellValue::null()
                                                 : CellValue::number(static_cast<double>(rng() % 1000));
                if (after == before) continue;
                d.cell_changes.push_back(CellChange{r, col.name, before, after});
            }
            ds.apply_delta(d);
            applied.push_back(d);
            EXPECT_EQ(ds.issued_rows(), original.issued_rows());
        }
        for (auto it = applied.rbegin(); it != applied.rend(); ++it) ds.apply_delta(inverse(*it));
        EXPECT_TRUE(ds.same_content(original));
        EXPECT_EQ(ds.export_csv(), original.export_csv());
    }
}

TEST(Export, Canonical) {
    const auto ds = Dataset::ingest_csv("b;a\n\"x;y\";1.50\n;\" 2 \"\n", IngestOptions{';', 0.6});
    EXPECT_EQ(ds.export_csv(), "b,a\nx;y,1.5\n,2\n");
    const auto single = Dataset::ingest_csv("v\n1\n\"\"\n2\n");
    EXPECT_EQ(single.export_csv(), "v\n1\n\"\"\n2\n");
}
