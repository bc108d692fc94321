#include <gtest/gtest.h>

#include <filesystem>

#include "gw/error.hpp"
#include "gw/history.hpp"
#include "gw/session.hpp"
#include "oracle.hpp"
#include "random_data.hpp"

using namespace gw;
using gw::testing::fixture_csv;

namespace {

ActionLogEntry entry(std::uint64_t seq) {
    ActionLogEntry e;
    e.seq = seq;
    e.action.target = GroupKey{"c", "x", "n"};
    e.delta.seq = seq;
    return e;
}

Errc error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::BadRequest;
}

const GroupKey kBhutan{"Country", "Bhutan", "Income"};
const GroupKey kChad{"Country", "Chad", "Income"};
const GroupKey kBS{"Degree", "BS", "Income"};

RepairAction impute_bhutan() { return {ActionKind::ImputeGroupMean, kBhutan, std::string("missing"), {}, ""}; }
RepairAction delete7() { return {ActionKind::DeleteRows, kChad, std::nullopt, {RowId{7}}, ""}; }
RepairAction convert_bs() { return {ActionKind::ConvertType, kBS, std::string("type_mismatch"), {}, ""}; }

}  // namespace

TEST(History, RecordUndoRedo) {
    History h;
    EXPECT_EQ(error_of([&] { h.undo_target(); }), Errc::NothingToUndo);
    h.record(entry(1));
    h.record(entry(2));
    EXPECT_EQ(h.undo_target().seq, 2u);
    h.step_back();
    EXPECT_EQ(h.redo_target().seq, 2u);
    EXPECT_EQ(h.effective().size(), 1u);
    h.step_forward();
    EXPECT_EQ(error_of([&] { h.redo_target(); }), Errc::NothingToRedo);
}

TEST(History, TruncatesRedoTail) {
    History h;
    for (std::uint64_t i = 1; i <= 4; ++i) h.record(entry(i));
    h.step_back();
    h.step_back();
    h.record(entry(3));
    EXPECT_EQ(h.entries().size(), 3u);
    EXPECT_EQ(h.cursor(), 3u);
    EXPECT_EQ(error_of([&] { h.redo_target(); }), Errc::NothingToRedo);
}

TEST(History, SequenceGap) {
    History h;
    h.record(entry(1));
    EXPECT_EQ(error_of([&] { h.record(entry(3)); }), Errc::SequenceGap);
    EXPECT_EQ(error_of([&] { h.record(entry(1)); }), Errc::SequenceGap);
}

TEST(History, EntryJsonRoundTrip) {
    Session s(fixture_csv());
    s.apply(impute_bhutan());
    const auto& e = s.history().entries().front();
    EXPECT_EQ(entry_from_json(to_json(e)), e);
}

TEST(LogFormat, EncodeDecode) {
    std::string bytes(kLogMagic);
    bytes += encode_record(RecordType::Baseline, {{"a", 1}});
    bytes += encode_record(RecordType::Undo, {{"seq", 3}});
    const auto d = decode_log(bytes);
    ASSERT_EQ(d.records.size(), 2u);
    EXPECT_EQ(d.records[1].type, RecordType::Undo);
    EXPECT_EQ(d.records[1].payload["seq"], 3);
    EXPECT_EQ(d.valid_bytes, bytes.size());
    EXPECT_FALSE(d.truncated_tail);

    for (std::size_t cut = 1; cut < 9; ++cut) {
        const auto t = decode_log(std::string_view(bytes).substr(0, bytes.size() - cut));
        EXPECT_EQ(t.records.size(), 1u);
        EXPECT_TRUE(t.truncated_tail);
    }
    auto flipped = bytes;
    flipped[flipped.size() - 6] ^= 0x20;
    EXPECT_EQ(decode_log(flipped).records.size(), 1u);
    EXPECT_EQ(error_of([] { decode_log("NOTLOG"); }), Errc::CorruptLog);
}

TEST(LogWriter, FlushesOnThirdUpdate) {
    auto storage = std::make_shared<MemoryLogStorage>();
    LogWriter w(storage, FlushPolicy{3});
    w.start({{"baseline", true}});
    const auto calls = storage->append_calls();
    EXPECT_FALSE(w.push(RecordType::Action, {{"n", 1}}));
    EXPECT_FALSE(w.push(RecordType::Action, {{"n", 2}}));
    EXPECT_EQ(storage->append_calls(), calls);
    EXPECT_TRUE(w.push(RecordType::Undo, {{"seq", 2}}));
    EXPECT_EQ(storage->append_calls(), calls + 1);
    EXPECT_EQ(w.pending(), 0u);
    EXPECT_EQ(decode_log(storage->read_all()).records.size(), 4u);
}

TEST(LogWriter, EmptyFlushIsNoOp) {
    auto storage = std::make_shared<MemoryLogStorage>();
    LogWriter w(storage, FlushPolicy{3});
    w.start({});
    const auto calls = storage->append_calls();
    const auto flushes = w.flushes();
    w.flush();
    EXPECT_EQ(storage->append_calls(), calls);
    EXPECT_EQ(w.flushes(), flushes);
}

TEST(LogWriter, FailureKeepsRecordsQueued) {
    auto storage = std::make_shared<MemoryLogStorage>();
    LogWriter w(storage, FlushPolicy{1});
    w.start({});
    const auto size = storage->size();
    storage->set_failing(true);
    EXPECT_EQ(error_of([&] { w.push(RecordType::Action, {{"n", 1}}); }), Errc::StorageFailure);
    EXPECT_EQ(w.pending(), 1u);
    EXPECT_EQ(storage->size(), size);
    storage->set_failing(false);
    w.push(RecordType::Action, {{"n", 2}});
    EXPECT_EQ(w.pending(), 0u);
    EXPECT_EQ(decode_log(storage->read_all()).records.size(), 3u);
}

TEST(SessionLog, StorageFailureLeavesStateIntact) {
    auto storage = std::make_shared<MemoryLogStorage>();
    SessionConfig cfg;
    cfg.flush_every = 1;
    Session s(fixture_csv(), {}, cfg);
    s.attach_storage(storage);
    storage->set_failing(true);
    const auto r = s.apply(impute_bhutan());
    ASSERT_TRUE(r.storage_error.has_value());
    EXPECT_EQ(s.dataset().get_cell(RowId{3}, "Income"), CellValue::number(600));
    EXPECT_EQ(s.history().cursor(), 1u);
    EXPECT_EQ(error_of([&] { s.flush(); }), Errc::StorageFailure);
    storage->set_failing(false);
    s.flush();
    const auto back = Session::recover(storage);
    EXPECT_EQ(back.export_csv(), s.export_csv());
}

TEST(SessionLog, RecoverAfterFlush) {
    auto storage = std::make_shared<MemoryLogStorage>();
    Session s(fixture_csv());
    s.attach_storage(storage);
    s.register_detector({"non_positive", "value <= 0", "Income"});
    s.apply(impute_bhutan());
    s.apply(delete7());
    s.undo();
    EXPECT_EQ(s.log()->pending(), 0u);
    s.redo();
    s.apply(convert_bs());
    s.flush();
    const auto back = Session::recover(storage);
    EXPECT_EQ(back.export_csv(), s.export_csv());
    EXPECT_EQ(gw::testing::to_set(back.records()), gw::testing::to_set(s.records()));
    EXPECT_EQ(back.history().cursor(), s.history().cursor());
    EXPECT_EQ(back.history().entries(), s.history().entries());
    EXPECT_TRUE(back.detectors().find("non_positive").has_value());
}

TEST(SessionLog, UnflushedTailIsLost) {
    auto storage = std::make_shared<MemoryLogStorage>();
    Session s(fixture_csv());
    s.attach_storage(storage);
    s.apply(impute_bhutan());
    s.apply(delete7());
    s.apply(convert_bs());
    const auto committed = s.export_csv();
    s.undo();
    const auto back = Session::recover(storage);
    EXPECT_EQ(back.export_csv(), committed);
}

TEST(SessionLog, TruncatedTailDropped) {
    auto storage = std::make_shared<MemoryLogStorage>();
    SessionConfig cfg;
    cfg.flush_every = 1;
    Session s(fixture_csv(), {}, cfg);
    s.attach_storage(storage);
    s.apply(impute_bhutan());
    const auto after_first = s.export_csv();
    const auto good = storage->size();
    s.apply(delete7());
    storage->truncate(storage->size() - 3);
    auto back = Session::recover(storage);
    EXPECT_EQ(back.export_csv(), after_first);
    EXPECT_EQ(storage->size(), good);
    back.apply(delete7());
    back.flush();
    const auto again = Session::recover(storage);
    EXPECT_EQ(again.export_csv(), back.export_csv());
}

TEST(SessionLog, AttachOnlyWhenFresh) {
    Session s(fixture_csv());
    s.apply(impute_bhutan());
    EXPECT_EQ(error_of([&] { s.attach_storage(std::make_shared<MemoryLogStorage>()); }), Errc::InvalidConfig);
}

TEST(SessionLog, FileStorage) {
    const auto dir = std::filesystem::temp_directory_path() / "gw_history_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto path = dir / "s.gwlog";
    {
        Session s(fixture_csv());
        s.attach_storage(std::make_shared<FileLogStorage>(path));
        s.apply(impute_bhutan());
        s.flush();
    }
    const auto back = Session::recover(std::make_shared<FileLogStorage>(path));
    EXPECT_EQ(back.dataset().get_cell(RowId{3}, "Income"), CellValue::number(600));
    auto f = FileLogStorage(path);
    const auto n = f.size();
    f.truncate(n - 1);
    EXPECT_EQ(f.size(), n - 1);
    std::filesystem::remove_all(dir);
}

TEST(SessionLog, NonUtf8Baseline) {
    const std::string csv = "c,n\n\xff\xfe,1\nx,2\nx,3\n";
    auto storage = std::make_shared<MemoryLogStorage>();
    Session s(csv);
    s.attach_storage(storage);
    s.flush();
    const auto back = Session::recover(storage);
    EXPECT_EQ(back.original_csv(), csv);
}

TEST(UndoRedo, ImputeThenUndo) {
    Session s(fixture_csv());
    const auto csv = s.export_csv();
    const auto recs = gw::testing::to_set(s.records());
    s.apply(impute_bhutan());
    s.undo();
    EXPECT_EQ(s.export_csv(), csv);
    EXPECT_EQ(gw::testing::to_set(s.records()), recs);
    EXPECT_EQ(error_of([&] { s.undo(); }), Errc::NothingToUndo);
}

TEST(UndoRedo, RedoAfterFreshActionFails) {
    Session s(fixture_csv());
    s.apply(impute_bhutan());
    s.undo();
    s.apply(delete7());
    EXPECT_EQ(error_of([&] { s.redo(); }), Errc::NothingToRedo);
}

TEST(UndoRedo, UndoThenRedoRestores) {
    Session s(fixture_csv());
    s.apply(impute_bhutan());
    s.apply(delete7());
    const auto csv = s.export_csv();
    const auto recs = gw::testing::to_set(s.records());
    s.undo();
    s.redo();
    EXPECT_EQ(s.export_csv(), csv);
    EXPECT_EQ(gw::testing::to_set(s.records()), recs);
    EXPECT_EQ(gw::testing::diff_against_scratch(s), "");
}

TEST(UndoRedo, VersionsStrictlyIncrease) {
    Session s(fixture_csv());
    std::uint64_t last = s.version();
    auto check = [&](std::uint64_t v) {
        EXPECT_GT(v, last);
        last = v;
    };
    check(s.apply(impute_bhutan()).version);
    check(s.undo().version);
    check(s.redo().version);
    s.register_detector({"neg", "value < 0", "Income"});
    check(s.version());
}
