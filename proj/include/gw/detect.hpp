#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "gw/dataset.hpp"
#include "gw/expr.hpp"
#include "gw/groups.hpp"

namespace gw {

using CodeId = std::uint16_t;

inline constexpr CodeId kMissing = 0;
inline constexpr CodeId kOutlier = 1;
inline constexpr CodeId kTypeMismatch = 2;
inline constexpr CodeId kIncompleteGroup = 3;
inline constexpr CodeId kFirstCustomCode = 4;

inline constexpr std::string_view kBuiltinCodes[] = {"missing", "outlier", "type_mismatch", "incomplete_group"};

// One (row, column, code, group) tuple. `row` is absent for incomplete_group.
struct ErrorRecord {
    std::optional<RowId> row;
    std::string column;
    std::string code;
    GroupKey group;

    friend bool operator==(const ErrorRecord&, const ErrorRecord&) = default;
    friend auto operator<=>(const ErrorRecord& a, const ErrorRecord& b) {
        if (auto c = a.group <=> b.group; c != 0) return c;
        if (auto c = a.row <=> b.row; c != 0) return c;
        if (auto c = a.column <=> b.column; c != 0) return c;
        return a.code <=> b.code;
    }
};

struct ColumnStats {
    std::string column;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;

    friend bool operator==(const ColumnStats&, const ColumnStats&) = default;
};

struct DetectConfig {
    double outlier_k = 2.0;
    std::size_t min_group_size = 2;
};

// A user detector: a predicate over the target cell and its group, applied to
// one numeric column (or every numeric column when `column` is empty).
struct CustomDetectorSpec {
    std::string code;
    std::string expression;
    std::string column;
};

// In-process extension point: group + target column -> flagged row ids.
// Must depend only on the group's own rows for incremental detection to stay exact.
using NativeDetector = std::function<std::vector<RowId>(const Group&, const Dataset&, std::string_view)>;

class DetectorSet {
public:
    struct Custom {
        CodeId code = 0;
        std::optional<std::size_t> column;  // column position; nullopt = every numeric column
        std::optional<expr::Expression> expression;
        NativeDetector native;
        CustomDetectorSpec spec;
    };

    DetectorSet();

    // Throws DuplicateCode, ExpressionParseError, ExpressionTypeError, UnknownColumn, InvalidConfig.
    CodeId register_detector(const Dataset& ds, const CustomDetectorSpec& spec);
    CodeId register_native(const Dataset& ds, const std::string& code, const std::string& column, NativeDetector fn);

    std::optional<CodeId> find(std::string_view code) const;
    CodeId require(std::string_view code) const;  // throws UnknownErrorCode
    const std::string& name(CodeId code) const { return names_.at(code); }
    std::size_t code_count() const noexcept { return names_.size(); }
    const std::vector<Custom>& customs() const noexcept { return customs_; }
    std::vector<CustomDetectorSpec> expression_specs() const;

private:
    CodeId claim(const std::string& code);
    std::vector<std::string> names_;
    std::vector<Custom> customs_;
};

struct RowError {
    RowId row;
    CodeId code = 0;

    friend constexpr auto operator<=>(RowError, RowError) = default;
};

// Errors of one group, row-scoped records sorted by (row, code).
struct GroupErrors {
    std::vector<RowError> rows;
    bool incomplete = false;

    std::size_t total() const noexcept { return rows.size() + (incomplete ? 1 : 0); }
    std::size_t count(CodeId code) const;
    bool empty() const noexcept { return rows.empty() && !incomplete; }
    friend bool operator==(const GroupErrors&, const GroupErrors&) = default;
};

// Per numeric column: global stats and the outlier flag of every slot.
struct ColumnState {
    ColumnStats stats;
    std::vector<std::uint8_t> outlier;
    std::vector<std::uint8_t> builtin;  // per slot: 0 = clean, else built-in row code + 1
};

// The error-tuple mapping for one dataset version.
class ErrorStore {
public:
    const GroupErrors* find(GroupRef g) const;
    const ColumnState* column(std::size_t position) const;
    const std::unordered_map<std::uint64_t, GroupErrors>& groups() const noexcept { return by_group_; }

    std::size_t total() const;
    std::vector<ErrorRecord> records(const Dataset& ds, const GroupSet& groups, const DetectorSet& detectors) const;
    std::vector<ColumnStats> stats() const;

private:
    friend ErrorStore detect_all(const Dataset&, const GroupSet&, const DetectorSet&, const DetectConfig&);
    friend struct Redetector;

    std::unordered_map<std::uint64_t, GroupErrors> by_group_;  // keyed by GroupRef::packed
    std::vector<std::optional<ColumnState>> columns_;          // indexed by column position
};

// Stats over parseable non-null cells of a numeric column.
ColumnStats compute_column_stats(const Dataset& ds, std::size_t column);

// Mean of the Number cells of `column` over `rows`; nullopt when there are none.
std::optional<double> group_mean(const Dataset& ds, std::span<const RowId> rows, std::size_t column,
                                 const std::vector<std::uint8_t>* exclude_flags = nullptr);

// Errors of one group judged against the given column stats.
std::vector<ErrorRecord> detect_group(const Dataset& ds, const Group& group, const ColumnStats& stats,
                                      const DetectorSet& detectors, const DetectConfig& config);

ErrorStore detect_all(const Dataset& ds, const GroupSet& groups, const DetectorSet& detectors,
                      const DetectConfig& config);

struct ChangeSet {
    std::vector<RowId> touched_rows;
    std::set<std::size_t> changed_columns;  // positions of any column with a changed cell
    bool rows_added_or_removed = false;     // deletions/restorations change every column's stats
    std::set<BucketId> seed_buckets;        // buckets touched before and after the update
    std::set<BucketId> extra_buckets;       // pre-update closure, re-detected as well
};

struct GroupDiff {
    GroupKey key;
    GroupRef ref;
    GroupErrors before;
    GroupErrors after;
};

struct RedetectReport {
    std::vector<GroupKey> affected;  // ordered by GroupKey
    std::vector<GroupDiff> changed;  // groups whose error set changed, ordered by key
    std::vector<std::string> restatted_columns;
};

RedetectReport redetect_incremental(ErrorStore& store, const Dataset& ds, const GroupSet& groups,
                                    const OverlapGraph& graph, const DetectorSet& detectors,
                                    const DetectConfig& config, const ChangeSet& change, AffectedMode mode);

std::map<GroupKey, GroupErrors> keyed_errors(const ErrorStore& store, const Dataset& ds, const GroupSet& groups);

// Difference between two keyed snapshots, as a report over every group in either.
RedetectReport diff_keyed(const std::map<GroupKey, GroupErrors>& before,
                          const std::map<GroupKey, GroupErrors>& after, const GroupSet& groups, const Dataset& ds);

}  // namespace gw
