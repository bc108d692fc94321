#include "gw/dataset.hpp"

#include <set>

#include "gw/csv.hpp"
#include "gw/error.hpp"

namespace gw {

std::string_view to_string(ColumnKind k) noexcept {
    return k == ColumnKind::Numeric ? "numeric" : "categorical";
}

namespace {

NumKind classify(const CellValue& c) {
    if (c.is_number()) return NumKind::Number;
    if (c.is_null()) return NumKind::Null;
    return NumKind::Text;
}

}  // namespace

Dataset Dataset::ingest_csv(std::string_view bytes, const IngestOptions& options, std::string id) {
    auto records = csv::parse(bytes, options.delimiter);
    if (records.empty()) throw Error(Errc::EmptyDataset, "input has no header row");
    if (records.size() == 1) throw Error(Errc::EmptyDataset, "input has a header but no data rows");

    Dataset ds;
    ds.id_ = std::move(id);
    const auto& header = records.front();
    const std::size_t width = header.size();
    for (std::size_t c = 0; c < width; ++c) {
        if (!ds.by_name_.emplace(header[c], c).second) {
            throw Error(Errc::MalformedCsv, "duplicate column name '" + header[c] + "'");
        }
    }
    const std::size_t rows = records.size() - 1;
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != width) {
            throw Error(Errc::MalformedCsv, "record " + std::to_string(r + 1) + " has " +
                                                std::to_string(records[r].size()) + " fields, expected " +
                                                std::to_string(width));
        }
    }

    ds.cells_.resize(width);
    ds.numeric_cache_.resize(width);
    for (std::size_t c = 0; c < width; ++c) {
        std::size_t non_null = 0;
        std::size_t parseable = 0;
        for (std::size_t r = 1; r <= rows; ++r) {
            const auto& f = records[r][c];
            if (f.empty()) continue;
            ++non_null;
            if (parse_number(f)) ++parseable;
        }
        const bool numeric = parseable > 0 &&
                             static_cast<double>(parseable) >= options.numeric_threshold * static_cast<double>(non_null);
        ds.columns_.push_back(ColumnMeta{header[c], numeric ? ColumnKind::Numeric : ColumnKind::Categorical, c});
        (numeric ? ds.numeric_ : ds.categorical_).push_back(c);

        auto& column = ds.cells_[c];
        column.reserve(rows);
        for (std::size_t r = 1; r <= rows; ++r) {
            auto& f = records[r][c];
            if (f.empty()) {
                column.push_back(CellValue::null());
            } else if (numeric) {
                if (auto v = parse_number(f)) {
                    column.push_back(CellValue::number(*v));
                } else {
                    column.push_back(CellValue::text(std::move(f)));
                }
            } else {
                column.push_back(CellValue::text(std::move(f)));
            }
        }
        if (numeric) {
            auto& cache = ds.numeric_cache_[c];
            cache.values.resize(rows, 0.0);
            cache.kinds.resize(rows);
            for (std::size_t s = 0; s < rows; ++s) {
                cache.kinds[s] = static_cast<std::uint8_t>(classify(column[s]));
                if (column[s].is_number()) cache.values[s] = column[s].as_number();
            }
        }
    }
    ds.live_.assign(rows, 1);
    ds.live_count_ = rows;
    return ds;
}

std::optional<std::size_t> Dataset::find_column(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

std::size_t Dataset::column_index(std::string_view name) const {
    if (auto c = find_column(name)) return *c;
    throw Error(Errc::UnknownColumn, "unknown column '" + std::string(name) + "'");
}

bool Dataset::is_live(RowId row) const noexcept {
    return row.value >= 1 && row.value <= live_.size() && live_[slot(row)] != 0;
}

std::vector<RowId> Dataset::live_rows() const {
    std::vector<RowId> out;
    out.reserve(live_count_);
    for (std::size_t s = 0; s < live_.size(); ++s) {
        if (live_[s]) out.push_back(RowId{s + 1});
    }
    return out;
}

void Dataset::require_issued(RowId row) const {
    if (row.value < 1 || row.value > live_.size()) {
        throw Error(Errc::UnknownRow, "row " + std::to_string(row.value) + " was never issued");
    }
}

const CellValue& Dataset::get_cell(RowId row, std::string_view column) const {
    const auto c = column_index(column);
    if (!is_live(row)) throw Error(Errc::UnknownRow, "row " + std::to_string(row.value) + " is not live");
    return cells_[c][slot(row)];
}

const CellValue& Dataset::cell(RowId row, std::size_t column) const { return cells_[column][slot(row)]; }

RowImage Dataset::row_image(RowId row) const {
    RowImage img{row, {}};
    img.cells.reserve(columns_.size());
    for (std::size_t c = 0; c < columns_.size(); ++c) img.cells.push_back(cells_[c][slot(row)]);
    return img;
}

std::span<const double> Dataset::numeric_values(std::size_t column) const {
    return numeric_cache_[column].values;
}

std::span<const std::uint8_t> Dataset::numeric_kinds(std::size_t column) const {
    return numeric_cache_[column].kinds;
}

void Dataset::set_cell(std::size_t s, std::size_t column, CellValue value) {
    if (columns_[column].kind == ColumnKind::Numeric) {
        auto& cache = numeric_cache_[column];
        cache.values[s] = value.is_number() ? value.as_number() : 0.0;
        if (live_[s]) cache.kinds[s] = static_cast<std::uint8_t>(classify(value));
    }
    cells_[column][s] = std::move(value);
}

void Dataset::set_live(std::size_t s, bool live) {
    if (static_cast<bool>(live_[s]) == live) return;
    live_[s] = live ? 1 : 0;
    live ? ++live_count_ : --live_count_;
    for (std::size_t c : numeric_) {
        numeric_cache_[c].kinds[s] =
            static_cast<std::uint8_t>(live ? classify(cells_[c][s]) : NumKind::Dead);
    }
}

std::uint64_t Dataset::apply_delta(const SnapshotDelta& delta) {
    std::set<std::uint64_t> rows_seen;
    std::set<std::pair<std::uint64_t, std::size_t>> cells_seen;
    auto claim_row = [&](RowId r) {
        if (!rows_seen.insert(r.value).second) {
            throw Error(Errc::InvalidAction, "row " + std::to_string(r.value) + " appears twice in one delta");
        }
    };
    auto check_image = [&](const RowImage& img) {
        if (img.cells.size() != columns_.size()) {
            throw Error(Errc::StaleDelta, "row image width does not match the schema");
        }
    };

    for (const auto& img : delta.row_restorations) {
        require_issued(img.row);
        claim_row(img.row);
        check_image(img);
        if (is_live(img.row)) {
            throw Error(Errc::StaleDelta, "row " + std::to_string(img.row.value) + " is already live");
        }
    }
    std::vector<std::size_t> change_columns;
    change_columns.reserve(delta.cell_changes.size());
    std::set<std::uint64_t> changed_rows;
    for (const auto& ch : delta.cell_changes) {
        require_issued(ch.row);
        const auto c = column_index(ch.column);
        change_columns.push_back(c);
        if (rows_seen.count(ch.row.value)) {
            throw Error(Errc::InvalidAction, "row " + std::to_string(ch.row.value) + " is both changed and restored");
        }
        if (!cells_seen.emplace(ch.row.value, c).second) {
            throw Error(Errc::InvalidAction, "cell changed twice in one delta");
        }
        changed_rows.insert(ch.row.value);
        if (!is_live(ch.row)) {
            throw Error(Errc::StaleDelta, "row " + std::to_string(ch.row.value) + " is not live");
        }
        if (!(cells_[c][slot(ch.row)] == ch.before)) {
            throw Error(Errc::StaleDelta, "before-value mismatch at row " + std::to_string(ch.row.value) +
                                              ", column '" + ch.column + "'");
        }
    }
    for (const auto& img : delta.row_deletions) {
        require_issued(img.row);
        claim_row(img.row);
        check_image(img);
        if (changed_rows.count(img.row.value)) {
            throw Error(Errc::InvalidAction, "row " + std::to_string(img.row.value) + " is both changed and deleted");
        }
        if (!is_live(img.row)) {
            throw Error(Errc::StaleDelta, "row " + std::to_string(img.row.value) + " is not live");
        }
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            if (!(cells_[c][slot(img.row)] == img.cells[c])) {
                throw Error(Errc::StaleDelta, "deleted row image does not match row " + std::to_string(img.row.value));
            }
        }
    }

    for (const auto& img : delta.row_restorations) {
        const auto s = slot(img.row);
        for (std::size_t c = 0; c < columns_.size(); ++c) set_cell(s, c, img.cells[c]);
        set_live(s, true);
    }
    for (std::size_t i = 0; i < delta.cell_changes.size(); ++i) {
        set_cell(slot(delta.cell_changes[i].row), change_columns[i], delta.cell_changes[i].after);
    }
    for (const auto& img : delta.row_deletions) set_live(slot(img.row), false);
    return ++version_;
}

std::string Dataset::export_csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (c) out.push_back(',');
        out += csv::quote_field(columns_[c].name);
    }
    out.push_back('\n');
    for (std::size_t s = 0; s < live_.size(); ++s) {
        if (!live_[s]) continue;
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            if (c) out.push_back(',');
            const auto& v = cells_[c][s];
            if (v.is_null()) {
                // A lone empty field would read back as a blank line.
                if (columns_.size() == 1) out += "\"\"";
                continue;
            }
            out += csv::quote_field(v.is_number() ? format_number(v.as_number()) : v.as_text());
        }
        out.push_back('\n');
    }
    return out;
}

bool Dataset::same_content(const Dataset& other) const {
    if (columns_ != other.columns_ || live_ != other.live_) return false;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        for (std::size_t s = 0; s < live_.size(); ++s) {
            if (live_[s] && !(cells_[c][s] == other.cells_[c][s])) return false;
        }
    }
    return true;
}

}  // namespace gw
