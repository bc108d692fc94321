#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gw/delta.hpp"
#include "gw/wrangle.hpp"

namespace gw {

struct ActionLogEntry {
    std::uint64_t seq = 0;
    RepairAction action;
    SnapshotDelta delta;
    std::int64_t timestamp_ms = 0;

    friend bool operator==(const ActionLogEntry&, const ActionLogEntry&) = default;
};

nlohmann::json to_json(const ActionLogEntry& e);
ActionLogEntry entry_from_json(const nlohmann::json& j);

// Linear history: entries past the cursor form the redo tail.
class History {
public:
    std::size_t cursor() const noexcept { return cursor_; }
    const std::vector<ActionLogEntry>& entries() const noexcept { return entries_; }
    std::span<const ActionLogEntry> effective() const noexcept { return {entries_.data(), cursor_}; }

    // entry.seq must equal cursor + 1 (SequenceGap); drops the redo tail.
    void record(ActionLogEntry entry);

    const ActionLogEntry& undo_target() const;  // throws NothingToUndo
    const ActionLogEntry& redo_target() const;  // throws NothingToRedo
    void step_back();
    void step_forward();

private:
    std::vector<ActionLogEntry> entries_;
    std::size_t cursor_ = 0;
};

struct FlushPolicy {
    std::size_t every_n_updates = 3;
};

// Durable byte sink for the session log. Implementations throw
// StorageFailure on write errors and must leave earlier bytes intact.
class LogStorage {
public:
    virtual ~LogStorage() = default;
    virtual void append(std::string_view bytes) = 0;
    virtual void truncate(std::uint64_t size) = 0;
    virtual std::string read_all() const = 0;
    virtual std::uint64_t size() const = 0;
};

class MemoryLogStorage final : public LogStorage {
public:
    void append(std::string_view bytes) override;
    void truncate(std::uint64_t size) override;
    std::string read_all() const override { return data_; }
    std::uint64_t size() const override { return data_.size(); }

    // Fault injection: while set, every append throws StorageFailure.
    void set_failing(bool failing) noexcept { failing_ = failing; }
    std::size_t append_calls() const noexcept { return appends_; }

private:
    std::string data_;
    bool failing_ = false;
    std::size_t appends_ = 0;
};

class FileLogStorage final : public LogStorage {
public:
    explicit FileLogStorage(std::filesystem::path path);

    void append(std::string_view bytes) override;
    void truncate(std::uint64_t size) override;
    std::string read_all() const override;
    std::uint64_t size() const override;
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

enum class RecordType : std::uint8_t { Baseline = 1, Action = 2, Undo = 3, Redo = 4, Registration = 5 };

inline constexpr std::string_view kLogMagic = "GWLOG1";

struct LogRecord {
    RecordType type = RecordType::Baseline;
    nlohmann::json payload;
};

// u32 LE payload length, u8 type, payload, u32 LE CRC32 of payload.
std::string encode_record(RecordType type, const nlohmann::json& payload);

struct DecodedLog {
    std::vector<LogRecord> records;
    std::uint64_t valid_bytes = 0;  // prefix covering magic + whole records
    bool truncated_tail = false;
};

// Throws CorruptLog when the magic is wrong. A partial or damaged final
// record is reported as a truncated tail and dropped.
DecodedLog decode_log(std::string_view bytes);

// Buffers log records and hands them to storage every N updates.
class LogWriter {
public:
    LogWriter(std::shared_ptr<LogStorage> storage, FlushPolicy policy);

    // Writes magic + baseline immediately. Throws StorageFailure.
    void start(const nlohmann::json& baseline);
    // Continues an existing log, dropping any damaged tail.
    void resume(std::uint64_t valid_bytes);

    // Queues a record; Action/Undo/Redo count as updates and may trigger a
    // flush. Returns true when a flush ran. Throws StorageFailure (the
    // records stay queued for the next trigger).
    bool push(RecordType type, const nlohmann::json& payload);
    void flush();

    std::size_t pending() const noexcept { return pending_.size(); }
    std::size_t flushes() const noexcept { return flushes_; }
    std::uint64_t persisted_bytes() const { return storage_->size(); }
    const FlushPolicy& policy() const noexcept { return policy_; }
    LogStorage& storage() noexcept { return *storage_; }

private:
    std::shared_ptr<LogStorage> storage_;
    FlushPolicy policy_;
    std::vector<std::string> pending_;
    std::size_t updates_since_flush_ = 0;
    std::size_t flushes_ = 0;
};

}  // namespace gw
