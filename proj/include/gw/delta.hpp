#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gw/cell.hpp"

namespace gw {

struct CellChange {
    RowId row;
    std::string column;
    CellValue before;
    CellValue after;

    friend bool operator==(const CellChange&, const CellChange&) = default;
};

// Full row image, one value per column in schema order.
struct RowImage {
    RowId row;
    std::vector<CellValue> cells;

    friend bool operator==(const RowImage&, const RowImage&) = default;
};

// Cell-level before/after record of one committed change. Restorations only
// appear in inverted deltas (undoing a deletion). A row may appear in at most
// one of the three lists, and a (row, column) pair at most once.
struct SnapshotDelta {
    std::uint64_t seq = 0;
    std::vector<CellChange> cell_changes;
    std::vector<RowImage> row_deletions;
    std::vector<RowImage> row_restorations;

    bool empty() const noexcept {
        return cell_changes.empty() && row_deletions.empty() && row_restorations.empty();
    }
    std::size_t touched_cells() const noexcept;

    friend bool operator==(const SnapshotDelta&, const SnapshotDelta&) = default;
};

SnapshotDelta inverse(const SnapshotDelta& d);

nlohmann::json to_json(const SnapshotDelta& d);
SnapshotDelta delta_from_json(const nlohmann::json& j);

}  // namespace gw
