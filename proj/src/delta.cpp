#include "gw/delta.hpp"

#include <algorithm>

namespace gw {

std::size_t SnapshotDelta::touched_cells() const noexcept {
    std::size_t n = cell_changes.size();
    for (const auto& r : row_deletions) n += r.cells.size();
    for (const auto& r : row_restorations) n += r.cells.size();
    return n;
}

SnapshotDelta inverse(const SnapshotDelta& d) {
    SnapshotDelta inv;
    inv.seq = d.seq;
    inv.cell_changes.reserve(d.cell_changes.size());
    for (auto it = d.cell_changes.rbegin(); it != d.cell_changes.rend(); ++it) {
        inv.cell_changes.push_back(CellChange{it->row, it->column, it->after, it->before});
    }
    inv.row_deletions = d.row_restorations;
    inv.row_restorations = d.row_deletions;
    return inv;
}

namespace {

nlohmann::json row_image_json(const RowImage& r) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) cells.push_back(to_json(c));
    return {{"row", r.row.value}, {"cells", std::move(cells)}};
}

RowImage row_image_from_json(const nlohmann::json& j) {
    RowImage r;
    r.row = RowId{j.at("row").get<std::uint64_t>()};
    for (const auto& c : j.at("cells")) r.cells.push_back(cell_from_json(c));
    return r;
}

}  // namespace

nlohmann::json to_json(const SnapshotDelta& d) {
    nlohmann::json changes = nlohmann::json::array();
    for (const auto& c : d.cell_changes) {
        changes.push_back({{"row", c.row.value},
                           {"column", c.column},
                           {"before", to_json(c.before)},
                           {"after", to_json(c.after)}});
    }
    nlohmann::json deletions = nlohmann::json::array();
    for (const auto& r : d.row_deletions) deletions.push_back(row_image_json(r));
    nlohmann::json restorations = nlohmann::json::array();
    for (const auto& r : d.row_restorations) restorations.push_back(row_image_json(r));
    return {{"seq", d.seq},
            {"cell_changes", std::move(changes)},
            {"row_deletions", std::move(deletions)},
            {"row_restorations", std::move(restorations)}};
}

SnapshotDelta delta_from_json(const nlohmann::json& j) {
    SnapshotDelta d;
    d.seq = j.value("seq", std::uint64_t{0});
    for (const auto& c : j.at("cell_changes")) {
        d.cell_changes.push_back(CellChange{RowId{c.at("row").get<std::uint64_t>()},
                                            c.at("column").get<std::string>(),
                                            cell_from_json(c.at("before")),
                                            cell_from_json(c.at("after"))});
    }
    for (const auto& r : j.at("row_deletions")) d.row_deletions.push_back(row_image_from_json(r));
    if (j.contains("row_restorations")) {
        for (const auto& r : j.at("row_restorations")) d.row_restorations.push_back(row_image_from_json(r));
    }
    return d;
}

}  // namespace gw
