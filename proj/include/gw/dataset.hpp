#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gw/cell.hpp"
#include "gw/delta.hpp"

namespace gw {

enum class ColumnKind : std::uint8_t { Numeric, Categorical };

std::string_view to_string(ColumnKind k) noexcept;

struct ColumnMeta {
    std::string name;
    ColumnKind kind = ColumnKind::Categorical;
    std::size_t position = 0;

    friend bool operator==(const ColumnMeta&, const ColumnMeta&) = default;
};

struct IngestOptions {
    char delimiter = ',';
    // Fraction of non-null cells that must parse for a column to be Numeric.
    double numeric_threshold = 0.6;
};

// Per-row state of a numeric column as seen by the detection kernels.
enum class NumKind : std::uint8_t { Dead = 0, Number = 1, Null = 2, Text = 3 };

// The single mutable object of a session. Column-major storage; row ids are
// dense (1..issued) so a RowId maps directly to a slot. Deleted rows keep their
// slot and cells (tombstone) and are only revived by an inverted delta.
class Dataset {
public:
    static Dataset ingest_csv(std::string_view bytes, const IngestOptions& options = {},
                              std::string id = "dataset");

    const std::string& id() const noexcept { return id_; }
    const std::vector<ColumnMeta>& columns() const noexcept { return columns_; }
    const std::vector<std::size_t>& numeric_columns() const noexcept { return numeric_; }
    const std::vector<std::size_t>& categorical_columns() const noexcept { return categorical_; }

    std::optional<std::size_t> find_column(std::string_view name) const;
    std::size_t column_index(std::string_view name) const;  // throws UnknownColumn

    // Number of ids ever issued; valid ids are 1..issued_rows().
    std::uint64_t issued_rows() const noexcept { return live_.size(); }
    std::size_t live_count() const noexcept { return live_count_; }
    bool is_live(RowId row) const noexcept;
    std::vector<RowId> live_rows() const;

    const CellValue& get_cell(RowId row, std::string_view column) const;
    const CellValue& cell(RowId row, std::size_t column) const;  // unchecked
    RowImage row_image(RowId row) const;

    // Dense per-slot views of a numeric column (slot = row id - 1).
    std::span<const double> numeric_values(std::size_t column) const;
    std::span<const std::uint8_t> numeric_kinds(std::size_t column) const;

    std::uint64_t version() const noexcept { return version_; }

    // Validates the whole delta first (before-values must match), then applies
    // restorations, cell changes and deletions. Returns the new version.
    std::uint64_t apply_delta(const SnapshotDelta& delta);

    // Resets the version counter after a simulate-and-revert pair.
    void rewind_version(std::uint64_t version) noexcept { version_ = version; }

    // Canonical export: comma-delimited, header row, live rows in id order,
    // LF line endings, numbers via format_number, Null as an empty field.
    std::string export_csv() const;

    bool same_content(const Dataset& other) const;

private:
    struct NumericCache {
        std::vector<double> values;
        std::vector<std::uint8_t> kinds;
    };

    static std::size_t slot(RowId row) noexcept { return static_cast<std::size_t>(row.value - 1); }
    void require_issued(RowId row) const;
    void set_cell(std::size_t slot, std::size_t column, CellValue value);
    void set_live(std::size_t slot, bool live);

    std::string id_;
    std::vector<ColumnMeta> columns_;
    std::unordered_map<std::string, std::size_t> by_name_;
    std::vector<std::size_t> numeric_;
    std::vector<std::size_t> categorical_;
    std::vector<std::vector<CellValue>> cells_;  // [column][slot]
    std::vector<NumericCache> numeric_cache_;    // indexed by column position
    std::vector<std::uint8_t> live_;
    std::size_t live_count_ = 0;
    std::uint64_t version_ = 0;
};

}  // namespace gw
