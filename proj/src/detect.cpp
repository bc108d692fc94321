#include "gw/detect.hpp"

#include <algorithm>
#include <cmath>

#include "gw/error.hpp"
#include "gw/kernels.hpp"

namespace gw {

// ------------------------------------------------------------ DetectorSet

DetectorSet::DetectorSet() {
    for (auto code : kBuiltinCodes) names_.emplace_back(code);
}

std::optional<CodeId> DetectorSet::find(std::string_view code) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == code) return static_cast<CodeId>(i);
    }
    return std::nullopt;
}

CodeId DetectorSet::require(std::string_view code) const {
    if (auto c = find(code)) return *c;
    throw Error(Errc::UnknownErrorCode, "unknown error code '" + std::string(code) + "'");
}

CodeId DetectorSet::claim(const std::string& code) {
    if (code.empty()) throw Error(Errc::InvalidConfig, "error code must be nonempty");
    if (find(code)) throw Error(Errc::DuplicateCode, "error code '" + code + "' is already registered");
    names_.push_back(code);
    return static_cast<CodeId>(names_.size() - 1);
}

namespace {

std::optional<std::size_t> resolve_target(const Dataset& ds, const std::string& column) {
    if (column.empty()) return std::nullopt;
    const auto c = ds.column_index(column);
    if (ds.columns()[c].kind != ColumnKind::Numeric) {
        throw Error(Errc::InvalidConfig, "detector target '" + column + "' is not a numeric column");
    }
    return c;
}

}  // namespace

CodeId DetectorSet::register_detector(const Dataset& ds, const CustomDetectorSpec& spec) {
    if (spec.code.empty()) throw Error(Errc::InvalidConfig, "error code must be nonempty");
    if (find(spec.code)) throw Error(Errc::DuplicateCode, "error code '" + spec.code + "' is already registered");
    auto e = expr::Expression::parse(spec.expression);
    if (e.type() != expr::Type::Bool) {
        throw Error(Errc::ExpressionTypeError, "detector predicate must be boolean");
    }
    const auto column = resolve_target(ds, spec.column);
    Custom c;
    c.code = claim(spec.code);
    c.column = column;
    c.expression = std::move(e);
    c.spec = spec;
    customs_.push_back(std::move(c));
    return customs_.back().code;
}

CodeId DetectorSet::register_native(const Dataset& ds, const std::string& code, const std::string& column,
                                    NativeDetector fn) {
    if (!fn) throw Error(Errc::InvalidConfig, "native detector must be callable");
    if (code.empty()) throw Error(Errc::InvalidConfig, "error code must be nonempty");
    if (find(code)) throw Error(Errc::DuplicateCode, "error code '" + code + "' is already registered");
    const auto target = resolve_target(ds, column);
    Custom c;
    c.code = claim(code);
    c.column = target;
    c.native = std::move(fn);
    c.spec = CustomDetectorSpec{code, "", column};
    customs_.push_back(std::move(c));
    return customs_.back().code;
}

std::vector<CustomDetectorSpec> DetectorSet::expression_specs() const {
    std::vector<CustomDetectorSpec> out;
    for (const auto& c : customs_) {
        if (c.expression) out.push_back(c.spec);
    }
    return out;
}

// ------------------------------------------------------------ GroupErrors

std::size_t GroupErrors::count(CodeId code) const {
    if (code == kIncompleteGroup) return incomplete ? 1 : 0;
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [code](RowError e) { return e.code == code; }));
}

// -------------------------------------------------------------- ErrorStore

const GroupErrors* ErrorStore::find(GroupRef g) const {
    auto it = by_group_.find(g.packed());
    return it == by_group_.end() ? nullptr : &it->second;
}

const ColumnState* ErrorStore::column(std::size_t position) const {
    if (position >= columns_.size() || !columns_[position]) return nullptr;
    return &*columns_[position];
}

std::size_t ErrorStore::total() const {
    std::size_t n = 0;
    for (const auto& [k, e] : by_group_) n += e.total();
    return n;
}

namespace {

GroupRef unpack(std::uint64_t packed) {
    return GroupRef{static_cast<BucketId>(packed >> 32), static_cast<std::uint32_t>(packed & 0xffffffffu)};
}

void append_records(std::vector<ErrorRecord>& out, const GroupErrors& e, const GroupKey& key,
                    const DetectorSet& detectors) {
    for (const auto& r : e.rows) out.push_back(ErrorRecord{r.row, key.num_column, detectors.name(r.code), key});
    if (e.incomplete) {
        out.push_back(ErrorRecord{std::nullopt, key.num_column, detectors.name(kIncompleteGroup), key});
    }
}

}  // namespace

std::vector<ErrorRecord> ErrorStore::records(const Dataset& ds, const GroupSet& groups,
                                             const DetectorSet& detectors) const {
    std::vector<ErrorRecord> out;
    for (const auto& [packed, e] : by_group_) append_records(out, e, groups.key(ds, unpack(packed)), detectors);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ColumnStats> ErrorStore::stats() const {
    std::vector<ColumnStats> out;
    for (const auto& c : columns_) {
        if (c) out.push_back(c->stats);
    }
    return out;
}

// --------------------------------------------------------------- detection

ColumnStats compute_column_stats(const Dataset& ds, std::size_t column) {
    const auto m = kernels::active().moments(ds.numeric_values(column), ds.numeric_kinds(column));
    return ColumnStats{ds.columns()[column].name, m.mean, m.stddev, m.count};
}

std::optional<double> group_mean(const Dataset& ds, std::span<const RowId> rows, std::size_t column,
                                 const std::vector<std::uint8_t>* exclude_flags) {
    const auto values = ds.numeric_values(column);
    const auto kinds = ds.numeric_kinds(column);
    double sum = 0.0;
    std::size_t n = 0;
    for (auto r : rows) {
        const auto s = static_cast<std::size_t>(r.value - 1);
        if (kinds[s] != static_cast<std::uint8_t>(NumKind::Number)) continue;
        if (exclude_flags && (*exclude_flags)[s]) continue;
        sum += values[s];
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

namespace {

ColumnState compute_column_state(const Dataset& ds, std::size_t column, const DetectConfig& config) {
    const auto& k = kernels::active();
    const auto values = ds.numeric_values(column);
    const auto kinds = ds.numeric_kinds(column);
    const auto m = k.moments(values, kinds);
    ColumnState state;
    state.stats = ColumnStats{ds.columns()[column].name, m.mean, m.stddev, m.count};
    state.outlier.assign(values.size(), 0);
    if (m.count > 0 && m.stddev > 0.0) {
        k.outliers(values, kinds, m.mean, config.outlier_k * m.stddev, state.outlier);
    }
    state.builtin.resize(values.size());
    for (std::size_t s = 0; s < values.size(); ++s) {
        static constexpr std::uint8_t kByKind[] = {0, 0, kMissing + 1, kTypeMismatch + 1};
        state.builtin[s] = state.outlier[s] ? std::uint8_t{kOutlier + 1} : kByKind[kinds[s] & 3];
    }
    return state;
}

// Shared per-group scan; `is_outlier(slot)` decides outliers so the public
// stats-driven entry point and the flag-driven store path cannot diverge.
template <class OutlierPred>
GroupErrors scan_group(const Dataset& ds, std::span<const RowId> rows, std::size_t num_column,
                       OutlierPred&& is_outlier, const DetectorSet& detectors, const DetectConfig& config,
                       const std::function<Group()>& materialize) {
    GroupErrors out;
    out.incomplete = rows.size() < config.min_group_size;
    const auto kinds = ds.numeric_kinds(num_column);

    std::vector<const DetectorSet::Custom*> customs;
    for (const auto& c : detectors.customs()) {
        if (!c.column || *c.column == num_column) customs.push_back(&c);
    }

    out.rows.reserve(rows.size() / 8);
    if (customs.empty()) {
        for (auto r : rows) {
            const auto s = static_cast<std::size_t>(r.value - 1);
            switch (static_cast<NumKind>(kinds[s])) {
                case NumKind::Null: out.rows.push_back(RowError{r, kMissing}); break;
                case NumKind::Text: out.rows.push_back(RowError{r, kTypeMismatch}); break;
                case NumKind::Number:
                    if (is_outlier(s)) out.rows.push_back(RowError{r, kOutlier});
                    break;
                case NumKind::Dead: break;
            }
        }
        return out;
    }

    bool needs_mean = false;
    bool has_native = false;
    for (const auto* c : customs) {
        needs_mean = needs_mean || (c->expression && c->expression->uses_group_mean());
        has_native = has_native || static_cast<bool>(c->native);
    }
    expr::Context ctx;
    ctx.group_size = static_cast<double>(rows.size());
    if (needs_mean) ctx.group_mean = group_mean(ds, rows, num_column);

    for (auto r : rows) {
        const auto s = static_cast<std::size_t>(r.value - 1);
        switch (static_cast<NumKind>(kinds[s])) {
            case NumKind::Null: out.rows.push_back(RowError{r, kMissing}); break;
            case NumKind::Text: out.rows.push_back(RowError{r, kTypeMismatch}); break;
            case NumKind::Number:
                if (is_outlier(s)) out.rows.push_back(RowError{r, kOutlier});
                break;
            case NumKind::Dead: break;
        }
        ctx.value = &ds.cell(r, num_column);
        for (const auto* c : customs) {
            if (c->expression && c->expression->holds(ctx)) out.rows.push_back(RowError{r, c->code});
        }
    }
    if (has_native) {
        const Group g = materialize();
        for (const auto* c : customs) {
            if (!c->native) continue;
            for (auto r : c->native(g, ds, ds.columns()[num_column].name)) {
                if (std::binary_search(rows.begin(), rows.end(), r)) out.rows.push_back(RowError{r, c->code});
            }
        }
        std::sort(out.rows.begin(), out.rows.end());
        out.rows.erase(std::unique(out.rows.begin(), out.rows.end()), out.rows.end());
    }
    return out;
}

bool has_customs_for(const DetectorSet& detectors, std::size_t num_column) {
    for (const auto& c : detectors.customs()) {
        if (!c.column || *c.column == num_column) return true;
    }
    return false;
}

GroupErrors detect_ref(const Dataset& ds, const GroupSet& groups, GroupRef g, const ColumnState& state,
                       const DetectorSet& detectors, const DetectConfig& config) {
    const auto rows = groups.rows(g);
    if (!has_customs_for(detectors, g.num_column)) {
        // Built-ins only: one lookup per row in the precomputed code column.
        GroupErrors out;
        out.incomplete = rows.size() < config.min_group_size;
        const auto* codes = state.builtin.data();
        for (auto r : rows) {
            const auto c = codes[r.value - 1];
            if (c) out.rows.push_back(RowError{r, static_cast<CodeId>(c - 1)});
        }
        return out;
    }
    const auto& flags = state.outlier;
    return scan_group(
        ds, rows, g.num_column, [&flags](std::size_t s) { return flags[s] != 0; }, detectors, config,
        [&] { return groups.materialize(ds, g); });
}

}  // namespace

std::vector<ErrorRecord> detect_group(const Dataset& ds, const Group& group, const ColumnStats& stats,
                                      const DetectorSet& detectors, const DetectConfig& config) {
    const auto num = ds.column_index(group.key.num_column);
    const auto values = ds.numeric_values(num);
    const bool active = stats.n > 0 && stats.stddev > 0.0;
    const double threshold = config.outlier_k * stats.stddev;
    const double mean = stats.mean;
    auto errors = scan_group(
        ds, group.row_ids, num,
        [&](std::size_t s) { return active && std::fabs(values[s] - mean) > threshold; }, detectors, config,
        [&] { return group; });
    std::vector<ErrorRecord> out;
    append_records(out, errors, group.key, detectors);
    std::sort(out.begin(), out.end());
    return out;
}

ErrorStore detect_all(const Dataset& ds, const GroupSet& groups, const DetectorSet& detectors,
                      const DetectConfig& config) {
    ErrorStore store;
    store.columns_.resize(ds.columns().size());
    for (auto c : groups.numeric_columns()) store.columns_[c] = compute_column_state(ds, c, config);
    const auto& buckets = groups.buckets();
    for (BucketId b = 0; b < buckets.size(); ++b) {
        for (auto g : groups.refs_of_bucket(b)) {
            auto e = detect_ref(ds, groups, g, *store.columns_[g.num_column], detectors, config);
            if (!e.empty()) store.by_group_.emplace(g.packed(), std::move(e));
        }
    }
    return store;
}

// ------------------------------------------------------------ incremental

struct Redetector {
    static RedetectReport run(ErrorStore& store, const Dataset& ds, const GroupSet& groups, const OverlapGraph& graph,
                              const DetectorSet& detectors, const DetectConfig& config, const ChangeSet& change,
                              AffectedMode mode) {
        RedetectReport report;
        if (store.columns_.size() < ds.columns().size()) store.columns_.resize(ds.columns().size());

        // Groups re-detected in full: touched buckets, their closure, and the
        // caller's pre-update closure.
        std::set<BucketId> seeds = change.seed_buckets;
        for (auto r : change.touched_rows) {
            if (!ds.is_live(r)) continue;
            for (std::size_t ci = 0; ci < groups.categorical_columns().size(); ++ci) {
                const auto b = groups.bucket_of(ci, r);
                if (b != kNoBucket) seeds.insert(b);
            }
        }
        std::set<BucketId> full = close_buckets(graph, groups, std::move(seeds), mode);
        full.insert(change.extra_buckets.begin(), change.extra_buckets.end());

        // Column-global stats: re-derive and patch outlier codes wherever a
        // flag flipped, in groups not already slated for a full pass.
        std::map<std::uint64_t, std::vector<RowId>> patches;
        std::vector<std::size_t> flipped;
        for (auto c : groups.numeric_columns()) {
            if (!change.rows_added_or_removed && !change.changed_columns.count(c)) continue;
            auto next = compute_column_state(ds, c, config);
            report.restatted_columns.push_back(ds.columns()[c].name);
            auto& slot = store.columns_[c];
            flipped.clear();
            if (slot) {
                kernels::active().diff(slot->outlier, next.outlier, flipped);
            } else {
                for (std::size_t s = 0; s < next.outlier.size(); ++s) {
                    if (next.outlier[s]) flipped.push_back(s);
                }
            }
            slot = std::move(next);
            for (auto s : flipped) {
                const RowId row{s + 1};
                if (!ds.is_live(row)) continue;
                for (std::size_t ci = 0; ci < groups.categorical_columns().size(); ++ci) {
                    const auto b = groups.bucket_of(ci, row);
                    if (b == kNoBucket || full.count(b)) continue;
                    const auto& nums = groups.numeric_columns_for(groups.buckets()[b].cat_column);
                    if (!std::binary_search(nums.begin(), nums.end(), c)) continue;
                    patches[GroupRef{b, static_cast<std::uint32_t>(c)}.packed()].push_back(row);
                }
            }
        }

        // Callers only pass differing pairs.
        auto record = [&](GroupRef g, GroupErrors before, const GroupErrors& after) {
            report.changed.push_back(GroupDiff{groups.key(ds, g), g, std::move(before), after});
        };

        for (auto b : full) {
            const auto& bucket = groups.buckets()[b];
            for (auto n : groups.numeric_columns_for(bucket.cat_column)) {
                const GroupRef g{b, static_cast<std::uint32_t>(n)};
                auto it = store.by_group_.find(g.packed());
                report.affected.push_back(groups.key(ds, g));
                auto after = bucket.rows.empty() ? GroupErrors{}
                                                 : detect_ref(ds, groups, g, *store.columns_[n], detectors, config);
                if (it == store.by_group_.end()) {
                    if (after.empty()) continue;
                    record(g, GroupErrors{}, after);
                    store.by_group_.emplace(g.packed(), std::move(after));
                } else if (after.empty()) {
                    record(g, std::move(it->second), after);
                    store.by_group_.erase(it);
                } else if (!(it->second == after)) {
                    std::swap(it->second, after);
                    record(g, std::move(after), it->second);
                }
            }
        }

        for (auto& [packed, rows] : patches) {
            const auto g = unpack(packed);
            report.affected.push_back(groups.key(ds, g));
            const auto& flags = store.columns_[g.num_column]->outlier;
            auto it = store.by_group_.find(packed);
            GroupErrors before = it == store.by_group_.end() ? GroupErrors{} : it->second;
            GroupErrors after = before;
            for (auto row : rows) {
                const RowError e{row, kOutlier};
                auto pos = std::lower_bound(after.rows.begin(), after.rows.end(), e);
                const bool present = pos != after.rows.end() && *pos == e;
                const bool flagged = flags[static_cast<std::size_t>(row.value - 1)] != 0;
                if (flagged && !present) after.rows.insert(pos, e);
                if (!flagged && present) after.rows.erase(pos);
            }
            if (before == after) continue;
            if (after.empty()) {
                if (it != store.by_group_.end()) store.by_group_.erase(it);
            } else if (it != store.by_group_.end()) {
                it->second = after;
            } else {
                store.by_group_.emplace(packed, after);
            }
            record(g, std::move(before), after);
        }

        std::sort(report.affected.begin(), report.affected.end());
        std::sort(report.changed.begin(), report.changed.end(),
                  [](const GroupDiff& a, const GroupDiff& b) { return a.key < b.key; });
        return report;
    }
};

RedetectReport redetect_incremental(ErrorStore& store, const Dataset& ds, const GroupSet& groups,
                                    const OverlapGraph& graph, const DetectorSet& detectors,
                                    const DetectConfig& config, const ChangeSet& change, AffectedMode mode) {
    return Redetector::run(store, ds, groups, graph, detectors, config, change, mode);
}

std::map<GroupKey, GroupErrors> keyed_errors(const ErrorStore& store, const Dataset& ds, const GroupSet& groups) {
    std::map<GroupKey, GroupErrors> out;
    for (const auto& [packed, e] : store.groups()) out.emplace(groups.key(ds, unpack(packed)), e);
    return out;
}

RedetectReport diff_keyed(const std::map<GroupKey, GroupErrors>& before,
                          const std::map<GroupKey, GroupErrors>& after, const GroupSet& groups, const Dataset& ds) {
    RedetectReport report;
    for (auto g : groups.refs(ds)) report.affected.push_back(groups.key(ds, g));
    auto b = before.begin();
    auto a = after.begin();
    const GroupErrors none;
    auto ref_of = [&](const GroupKey& k) { return groups.find(ds, k).value_or(GroupRef{}); };
    while (b != before.end() || a != after.end()) {
        if (a == after.end() || (b != before.end() && b->first < a->first)) {
            report.changed.push_back(GroupDiff{b->first, ref_of(b->first), b->second, none});
            ++b;
        } else if (b == before.end() || a->first < b->first) {
            report.changed.push_back(GroupDiff{a->first, ref_of(a->first), none, a->second});
            ++a;
        } else {
            if (!(a->second == b->second)) {
                report.changed.push_back(GroupDiff{a->first, ref_of(a->first), b->second, a->second});
            }
            ++a;
            ++b;
        }
    }
    return report;
}

}  // namespace gw
