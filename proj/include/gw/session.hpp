#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gw/dataset.hpp"
#include "gw/detect.hpp"
#include "gw/groups.hpp"
#include "gw/history.hpp"
#include "gw/sampler.hpp"
#include "gw/script.hpp"
#include "gw/wrangle.hpp"

namespace gw {

struct SessionConfig {
    double outlier_k = 2.0;
    std::size_t min_group_size = 2;
    std::size_t flush_every = 3;
    std::size_t sample_k = kDefaultSampleK;
    AffectedMode affected_mode = AffectedMode::OneHop;
    bool impute_clean_only = false;
    std::vector<std::pair<std::string, std::string>> pairs;  // empty = every pair

    void validate() const;  // throws InvalidConfig
};

nlohmann::json to_json(const SessionConfig& c);
// Fields absent from `j` keep the values of `base`. Throws InvalidConfig.
SessionConfig session_config_from_json(const nlohmann::json& j, SessionConfig base = {});

// How commits bring groups, graph and errors up to date.
enum class CommitMode : std::uint8_t {
    Incremental,  // delta-driven maintenance + affected-set re-detection
    FullRescan,   // regenerate groups, rebuild graph, detect everything
};

using ErrorSummary = std::map<GroupKey, std::map<std::string, std::size_t>>;

struct CommitResult {
    std::uint64_t version = 0;
    SnapshotDelta delta;
    RedetectReport report;
    ErrorSummary summary;                   // error counts over the affected set, after the commit
    std::optional<std::string> storage_error;  // set when the triggered flush failed
};

struct PreviewResult {
    std::uint64_t version = 0;  // unchanged by the preview
    SnapshotDelta delta;
    std::optional<GroupPayload> group_payload_after;  // absent when the target group vanishes
    ErrorSummary error_summary_after;
    std::vector<GroupKey> affected;
};

struct RankedGroup {
    GroupKey key;
    std::size_t cardinality = 0;
    std::size_t errors = 0;
    std::map<std::string, std::size_t> counts;
    std::optional<std::string> dominant_code;
};

nlohmann::json to_json(const ErrorSummary& s);
nlohmann::json to_json(const CommitResult& r);
nlohmann::json to_json(const PreviewResult& p);
nlohmann::json to_json(const RankedGroup& g);

// One dataset plus everything derived from it. Not thread-safe; callers
// serialize mutations (the service holds one mutex per session).
class Session {
public:
    Session(std::string csv, IngestOptions options = {}, SessionConfig config = {},
            CommitMode mode = CommitMode::Incremental, std::string id = "dataset");

    // Rebuilds a session from its log. Replays registrations, actions, undos
    // and redos; a damaged tail is dropped and later writes continue after
    // the last whole record.
    static Session recover(std::shared_ptr<LogStorage> storage, CommitMode mode = CommitMode::Incremental);

    // Starts logging: magic + baseline written immediately. Must be called
    // before any action or registration.
    void attach_storage(std::shared_ptr<LogStorage> storage);
    void flush();  // throws StorageFailure
    const LogWriter* log() const noexcept { return log_.get(); }

    const std::string& id() const noexcept { return dataset_.id(); }
    const Dataset& dataset() const noexcept { return dataset_; }
    const GroupSet& groups() const noexcept { return groups_; }
    const OverlapGraph& graph() const noexcept { return graph_; }
    const DetectorSet& detectors() const noexcept { return detectors_; }
    const ErrorStore& store() const noexcept { return store_; }
    const WranglerRegistry& wranglers() const noexcept { return wranglers_; }
    const History& history() const noexcept { return history_; }
    const SessionConfig& config() const noexcept { return config_; }
    const IngestOptions& ingest_options() const noexcept { return options_; }
    const std::string& original_csv() const noexcept { return csv_; }
    CommitMode mode() const noexcept { return mode_; }
    DetectConfig detect_config() const { return DetectConfig{config_.outlier_k, config_.min_group_size}; }

    // Strictly increasing across apply/undo/redo/registration.
    std::uint64_t version() const noexcept { return version_; }

    std::vector<ErrorRecord> records() const { return store_.records(dataset_, groups_, detectors_); }
    std::map<std::string, std::size_t> error_counts() const;

    SnapshotDelta plan(const RepairAction& a) const;
    CommitResult apply(const RepairAction& a);
    PreviewResult preview(const RepairAction& a);
    CommitResult undo();
    CommitResult redo();

    // Throws UnknownGroup, UnknownErrorCode, NoSuchErrorInGroup.
    std::vector<RepairSuggestion> suggest(const GroupKey& group, std::string_view code);

    CodeId register_detector(const CustomDetectorSpec& spec);
    // Not logged; embedders re-register natives after recovery.
    CodeId register_native(const std::string& code, const std::string& column, NativeDetector fn);
    std::string register_wrangler(const WranglerSpec& spec);

    std::vector<RankedGroup> ranked_groups() const;
    ChartPayload chart(std::string_view cat_column, std::string_view num_column, Sampling sampling,
                       std::optional<std::size_t> k = std::nullopt,
                       std::uint64_t seed = kDefaultSampleSeed) const;
    std::string render_script(ScriptTarget target) const;
    std::string export_csv() const { return dataset_.export_csv(); }

private:
    RedetectReport commit(const SnapshotDelta& delta);
    ErrorSummary summarize(const RedetectReport& report) const;
    void log_record(RecordType type, const nlohmann::json& payload, std::optional<std::string>* storage_error);
    nlohmann::json baseline() const;

    std::string csv_;
    IngestOptions options_;
    SessionConfig config_;
    CommitMode mode_;
    Dataset dataset_;
    GroupSet groups_;
    OverlapGraph graph_;
    DetectorSet detectors_;
    ErrorStore store_;
    WranglerRegistry wranglers_;
    History history_;
    std::unique_ptr<LogWriter> log_;
    std::uint64_t version_ = 0;
};

}  // namespace gw
