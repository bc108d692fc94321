#include "gw/history.hpp"

#include <zlib.h>

#include <fstream>
#include <system_error>

#include "gw/error.hpp"

namespace gw {

nlohmann::json to_json(const ActionLogEntry& e) {
    return nlohmann::json{
        {"seq", e.seq}, {"action", to_json(e.action)}, {"delta", to_json(e.delta)}, {"timestamp_ms", e.timestamp_ms}};
}

ActionLogEntry entry_from_json(const nlohmann::json& j) {
    try {
        ActionLogEntry e;
        e.seq = j.at("seq").get<std::uint64_t>();
        e.action = action_from_json(j.at("action"));
        e.delta = delta_from_json(j.at("delta"));
        e.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::CorruptLog, std::string("malformed log entry: ") + ex.what());
    }
}

// ---------------------------------------------------------------- History

void History::record(ActionLogEntry entry) {
    if (entry.seq != cursor_ + 1) {
        throw Error(Errc::SequenceGap,
                    "expected seq " + std::to_string(cursor_ + 1) + ", got " + std::to_string(entry.seq));
    }
    entries_.resize(cursor_);
    entries_.push_back(std::move(entry));
    ++cursor_;
}

const ActionLogEntry& History::undo_target() const {
    if (cursor_ == 0) throw Error(Errc::NothingToUndo, "nothing to undo");
    return entries_[cursor_ - 1];
}

const ActionLogEntry& History::redo_target() const {
    if (cursor_ >= entries_.size()) throw Error(Errc::NothingToRedo, "nothing to redo");
    return entries_[cursor_];
}

void History::step_back() {
    undo_target();
    --cursor_;
}

void History::step_forward() {
    redo_target();
    ++cursor_;
}

// ---------------------------------------------------------------- storage

void MemoryLogStorage::append(std::string_view bytes) {
    ++appends_;
    if (failing_) throw Error(Errc::StorageFailure, "injected storage failure");
    data_.append(bytes);
}

void MemoryLogStorage::truncate(std::uint64_t size) {
    if (size < data_.size()) data_.resize(size);
}

FileLogStorage::FileLogStorage(std::filesystem::path path) : path_(std::move(path)) {}

void FileLogStorage::append(std::string_view bytes) {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw Error(Errc::StorageFailure, "cannot open log file " + path_.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(Errc::StorageFailure, "write to " + path_.string() + " failed");
}

void FileLogStorage::truncate(std::uint64_t size) {
    std::error_code ec;
    if (std::filesystem::exists(path_, ec) && std::filesystem::file_size(path_, ec) > size) {
        std::filesystem::resize_file(path_, size, ec);
        if (ec) throw Error(Errc::StorageFailure, "cannot truncate " + path_.string() + ": " + ec.message());
    }
}

std::string FileLogStorage::read_all() const {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return {};
    return std::string(std::istreambuf_iterator<char>(in), {});
}

std::uint64_t FileLogStorage::size() const {
    std::error_code ec;
    const auto n = std::filesystem::file_size(path_, ec);
    return ec ? 0 : n;
}

// ----------------------------------------------------------------- format

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view s, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(s[at + i])} << (8 * i);
    return v;
}

std::uint32_t crc_of(std::string_view s) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

}  // namespace

std::string encode_record(RecordType type, const nlohmann::json& payload) {
    const std::string body = payload.dump();
    std::string out;
    out.reserve(body.size() + 9);
    put_u32(out, static_cast<std::uint32_t>(body.size()));
    out.push_back(static_cast<char>(type));
    out += body;
    put_u32(out, crc_of(body));
    return out;
}

DecodedLog decode_log(std::string_view bytes) {
    DecodedLog log;
    if (bytes.size() < kLogMagic.size() || bytes.substr(0, kLogMagic.size()) != kLogMagic) {
        throw Error(Errc::CorruptLog, "log does not start with the expected magic");
    }
    std::size_t at = kLogMagic.size();
    log.valid_bytes = at;
    while (at < bytes.size()) {
        if (bytes.size() - at < 9) break;
        const auto len = get_u32(bytes, at);
        if (bytes.size() - at - 9 < len) break;
        const auto type = static_cast<std::uint8_t>(bytes[at + 4]);
        const auto body = bytes.substr(at + 5, len);
        if (get_u32(bytes, at + 5 + len) != crc_of(body) || type < 1 || type > 5) break;
        LogRecord rec;
        rec.type = static_cast<RecordType>(type);
        try {
            rec.payload = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception&) {
            break;
        }
        log.records.push_back(std::move(rec));
        at += 9 + len;
        log.valid_bytes = at;
    }
    log.truncated_tail = log.valid_bytes != bytes.size();
    return log;
}

// ----------------------------------------------------------------- writer

LogWriter::LogWriter(std::shared_ptr<LogStorage> storage, FlushPolicy policy)
    : storage_(std::move(storage)), policy_(policy) {
    if (!storage_) throw Error(Errc::InvalidConfig, "log storage is required");
    if (policy_.every_n_updates == 0) throw Error(Errc::InvalidConfig, "flush interval must be at least 1");
}

void LogWriter::start(const nlohmann::json& baseline) {
    storage_->truncate(0);
    std::string head(kLogMagic);
    head += encode_record(RecordType::Baseline, baseline);
    storage_->append(head);
}

void LogWriter::resume(std::uint64_t valid_bytes) { storage_->truncate(valid_bytes); }

bool LogWriter::push(RecordType type, const nlohmann::json& payload) {
    pending_.push_back(encode_record(type, payload));
    if (type == RecordType::Action || type == RecordType::Undo || type == RecordType::Redo) ++updates_since_flush_;
    if (updates_since_flush_ < policy_.every_n_updates) return false;
    flush();
    return true;
}

void LogWriter::flush() {
    if (pending_.empty()) return;
    std::string batch;
    for (const auto& r : pending_) batch += r;
    const auto before = storage_->size();
    try {
        storage_->append(batch);
    } catch (const Error&) {
        try {
            storage_->truncate(before);
        } catch (const Error&) {
        }
        throw;
    }
    pending_.clear();
    updates_since_flush_ = 0;
    ++flushes_;
}

}  // namespace gw
