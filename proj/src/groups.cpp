#include "gw/groups.hpp"

#include <algorithm>
#include <deque>

#include "gw/error.hpp"

namespace gw {

namespace {
constexpr std::size_t kNotParticipating = static_cast<std::size_t>(-1);
const std::vector<std::size_t> kNoColumns;

// Category label without allocating for the common Text case.
std::string_view label_view(const CellValue& c, std::string& scratch) {
    if (c.is_text()) return c.as_text();
    scratch = c.category_label();
    return scratch;
}

}  // namespace

std::string_view to_string(AffectedMode m) noexcept {
    return m == AffectedMode::OneHop ? "one_hop" : "connected_components";
}

std::string GroupKey::canonical() const { return num_column + "|" + cat_column + "=" + cat_value; }

GroupKey GroupKey::parse(std::string_view s) {
    const auto bar = s.find('|');
    if (bar == std::string_view::npos) {
        throw Error(Errc::UnknownGroup, "group key '" + std::string(s) + "' lacks '|'");
    }
    const auto eq = s.find('=', bar + 1);
    if (eq == std::string_view::npos) {
        throw Error(Errc::UnknownGroup, "group key '" + std::string(s) + "' lacks '='");
    }
    return GroupKey{std::string(s.substr(bar + 1, eq - bar - 1)), std::string(s.substr(eq + 1)),
                    std::string(s.substr(0, bar))};
}

// ---------------------------------------------------------------- GroupSet

const std::vector<std::size_t>& GroupSet::numeric_columns_for(std::size_t cat_column) const {
    if (cat_column >= nums_by_column_.size()) return kNoColumns;
    return nums_by_column_[cat_column];
}

BucketId GroupSet::intern(std::size_t cat_index, std::string_view value) {
    auto& index = value_index_[cat_index];
    if (auto it = index.find(value); it != index.end()) return it->second;
    const auto id = static_cast<BucketId>(buckets_.size());
    buckets_.push_back(Bucket{cats_[cat_index], std::string(value), {}});
    index.emplace(std::string(value), id);
    return id;
}

std::optional<BucketId> GroupSet::find_bucket(std::size_t cat_column, std::string_view value) const {
    if (cat_column >= cat_index_of_column_.size()) return std::nullopt;
    const auto ci = cat_index_of_column_[cat_column];
    if (ci == kNotParticipating) return std::nullopt;
    const auto& index = value_index_[ci];
    auto it = index.find(value);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

std::optional<GroupRef> GroupSet::find(const Dataset& ds, const GroupKey& key) const {
    const auto cat = ds.find_column(key.cat_column);
    const auto num = ds.find_column(key.num_column);
    if (!cat || !num) return std::nullopt;
    const auto& nums = numeric_columns_for(*cat);
    if (std::find(nums.begin(), nums.end(), *num) == nums.end()) return std::nullopt;
    const auto b = find_bucket(*cat, key.cat_value);
    if (!b || buckets_[*b].rows.empty()) return std::nullopt;
    return GroupRef{*b, static_cast<std::uint32_t>(*num)};
}

BucketId GroupSet::bucket_of(std::size_t cat_index, RowId row) const noexcept {
    const auto& col = row_bucket_[cat_index];
    const auto s = static_cast<std::size_t>(row.value - 1);
    return s < col.size() ? col[s] : kNoBucket;
}

std::vector<BucketId> GroupSet::buckets_of(RowId row) const {
    std::vector<BucketId> out;
    out.reserve(cats_.size());
    for (std::size_t i = 0; i < cats_.size(); ++i) out.push_back(bucket_of(i, row));
    return out;
}

bool GroupSet::exists(GroupRef g) const noexcept {
    return g.bucket < buckets_.size() && !buckets_[g.bucket].rows.empty();
}

GroupKey GroupSet::key(const Dataset& ds, GroupRef g) const {
    const auto& b = buckets_[g.bucket];
    return GroupKey{ds.columns()[b.cat_column].name, b.value, ds.columns()[g.num_column].name};
}

std::vector<GroupRef> GroupSet::refs_of_bucket(BucketId b) const {
    std::vector<GroupRef> out;
    if (buckets_[b].rows.empty()) return out;
    for (std::size_t n : nums_by_column_[buckets_[b].cat_column]) {
        out.push_back(GroupRef{b, static_cast<std::uint32_t>(n)});
    }
    return out;
}

std::vector<GroupRef> GroupSet::refs(const Dataset& ds) const {
    std::vector<std::pair<GroupKey, GroupRef>> keyed;
    for (BucketId b = 0; b < buckets_.size(); ++b) {
        for (auto g : refs_of_bucket(b)) keyed.emplace_back(key(ds, g), g);
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<GroupRef> out;
    out.reserve(keyed.size());
    for (auto& [k, g] : keyed) out.push_back(g);
    return out;
}

std::size_t GroupSet::group_count() const {
    std::size_t n = 0;
    for (const auto& b : buckets_) {
        if (!b.rows.empty()) n += nums_by_column_[b.cat_column].size();
    }
    return n;
}

Group GroupSet::materialize(const Dataset& ds, GroupRef g) const {
    Group out{key(ds, g), buckets_[g.bucket].rows, false};
    out.below_min_size = out.cardinality() < config_.min_group_size;
    return out;
}

std::vector<Group> GroupSet::materialize(const Dataset& ds) const {
    std::vector<Group> out;
    for (auto g : refs(ds)) out.push_back(materialize(ds, g));
    return out;
}

std::map<GroupKey, std::vector<RowId>> GroupSet::snapshot(const Dataset& ds) const {
    std::map<GroupKey, std::vector<RowId>> out;
    for (BucketId b = 0; b < buckets_.size(); ++b) {
        for (auto g : refs_of_bucket(b)) out.emplace(key(ds, g), buckets_[b].rows);
    }
    return out;
}

GroupSet generate_groups(const Dataset& ds, const GroupConfig& config) {
    GroupSet gs;
    gs.config_ = config;
    const auto width = ds.columns().size();
    gs.nums_by_column_.assign(width, {});
    gs.cat_index_of_column_.assign(width, kNotParticipating);

    std::set<std::pair<std::size_t, std::size_t>> pairs;
    if (config.pairs.empty()) {
        if (ds.categorical_columns().empty()) {
            throw Error(Errc::NoCategoricalColumns, "dataset has no categorical column to group by");
        }
        if (ds.numeric_columns().empty()) {
            throw Error(Errc::NoNumericColumns, "dataset has no numeric column to project");
        }
        for (auto c : ds.categorical_columns()) {
            for (auto n : ds.numeric_columns()) pairs.emplace(c, n);
        }
    } else {
        for (const auto& [cat_name, num_name] : config.pairs) {
            const auto c = ds.column_index(cat_name);
            const auto n = ds.column_index(num_name);
            if (ds.columns()[c].kind != ColumnKind::Categorical) {
                throw Error(Errc::InvalidConfig, "'" + cat_name + "' is not categorical");
            }
            if (ds.columns()[n].kind != ColumnKind::Numeric) {
                throw Error(Errc::InvalidConfig, "'" + num_name + "' is not numeric");
            }
            pairs.emplace(c, n);
        }
    }
    std::set<std::size_t> nums;
    for (auto [c, n] : pairs) {
        if (gs.cat_index_of_column_[c] == kNotParticipating) {
            gs.cat_index_of_column_[c] = gs.cats_.size();
            gs.cats_.push_back(c);
        }
        gs.nums_by_column_[c].push_back(n);
        nums.insert(n);
    }
    gs.nums_.assign(nums.begin(), nums.end());
    // cats_ follows pair order, which is (column position) ordered via std::set.

    const auto slots = ds.issued_rows();
    gs.value_index_.resize(gs.cats_.size());
    gs.row_bucket_.assign(gs.cats_.size(), std::vector<BucketId>(slots, kNoBucket));
    std::string scratch;
    for (std::size_t ci = 0; ci < gs.cats_.size(); ++ci) {
        const auto col = gs.cats_[ci];
        for (std::uint64_t s = 0; s < slots; ++s) {
            const RowId row{s + 1};
            if (!ds.is_live(row)) continue;
            const auto b = gs.intern(ci, label_view(ds.cell(row, col), scratch));
            gs.buckets_[b].rows.push_back(row);
            gs.row_bucket_[ci][s] = b;
        }
    }
    return gs;
}

// ------------------------------------------------------------ OverlapGraph

void OverlapGraph::ensure(BucketId b) {
    if (b >= adj_.size()) adj_.resize(static_cast<std::size_t>(b) + 1);
}

void OverlapGraph::add_row(std::span<const BucketId> buckets) {
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        if (buckets[i] == kNoBucket) continue;
        ensure(buckets[i]);
        for (std::size_t j = i + 1; j < buckets.size(); ++j) {
            if (buckets[j] == kNoBucket) continue;
            ensure(buckets[j]);
            ++adj_[buckets[i]][buckets[j]];
            ++adj_[buckets[j]][buckets[i]];
        }
    }
}

void OverlapGraph::remove_row(std::span<const BucketId> buckets) {
    auto dec = [this](BucketId a, BucketId b) {
        auto& m = adj_[a];
        auto it = m.find(b);
        if (--it->second == 0) m.erase(it);
    };
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        if (buckets[i] == kNoBucket) continue;
        for (std::size_t j = i + 1; j < buckets.size(); ++j) {
            if (buckets[j] == kNoBucket) continue;
            dec(buckets[i], buckets[j]);
            dec(buckets[j], buckets[i]);
        }
    }
}

std::size_t OverlapGraph::shared_rows(BucketId a, BucketId b) const {
    if (a >= adj_.size()) return 0;
    auto it = adj_[a].find(b);
    return it == adj_[a].end() ? 0 : it->second;
}

const std::unordered_map<BucketId, std::uint32_t>& OverlapGraph::neighbors(BucketId b) const {
    static const std::unordered_map<BucketId, std::uint32_t> kEmpty;
    return b < adj_.size() ? adj_[b] : kEmpty;
}

std::set<std::pair<GroupKey, GroupKey>> OverlapGraph::edges(const GroupSet& groups, const Dataset& ds) const {
    std::set<std::pair<GroupKey, GroupKey>> out;
    auto add = [&](GroupKey a, GroupKey b) {
        if (b < a) std::swap(a, b);
        out.emplace(std::move(a), std::move(b));
    };
    const auto& buckets = groups.buckets();
    for (BucketId a = 0; a < buckets.size(); ++a) {
        const auto refs_a = groups.refs_of_bucket(a);
        for (std::size_t i = 0; i < refs_a.size(); ++i) {
            for (std::size_t j = i + 1; j < refs_a.size(); ++j) {
                add(groups.key(ds, refs_a[i]), groups.key(ds, refs_a[j]));
            }
        }
        for (const auto& [b, count] : neighbors(a)) {
            if (b <= a || count == 0) continue;
            for (auto ga : refs_a) {
                for (auto gb : groups.refs_of_bucket(b)) add(groups.key(ds, ga), groups.key(ds, gb));
            }
        }
    }
    return out;
}

OverlapGraph build_overlap_graph(const GroupSet& groups) {
    OverlapGraph graph;
    const auto ncat = groups.categorical_columns().size();
    // Invert bucket membership into per-row bucket lists.
    std::uint64_t max_row = 0;
    for (const auto& b : groups.buckets()) {
        if (!b.rows.empty()) max_row = std::max(max_row, b.rows.back().value);
    }
    std::vector<BucketId> row_lists(static_cast<std::size_t>(max_row) * ncat, kNoBucket);
    std::vector<std::size_t> cat_index_of(groups.categorical_columns().empty()
                                              ? 0
                                              : *std::max_element(groups.categorical_columns().begin(),
                                                                  groups.categorical_columns().end()) + 1,
                                          0);
    for (std::size_t i = 0; i < ncat; ++i) cat_index_of[groups.categorical_columns()[i]] = i;
    const auto& buckets = groups.buckets();
    for (BucketId b = 0; b < buckets.size(); ++b) {
        const auto ci = cat_index_of[buckets[b].cat_column];
        for (auto r : buckets[b].rows) row_lists[static_cast<std::size_t>(r.value - 1) * ncat + ci] = b;
    }
    for (std::size_t s = 0; s < max_row; ++s) {
        graph.add_row(std::span<const BucketId>(row_lists.data() + s * ncat, ncat));
    }
    return graph;
}

// --------------------------------------------------------- affected sets

std::set<BucketId> close_buckets(const OverlapGraph& graph, const GroupSet& groups, std::set<BucketId> seeds,
                                 AffectedMode mode) {
    (void)groups;
    if (mode == AffectedMode::OneHop) {
        std::set<BucketId> out = seeds;
        for (auto b : seeds) {
            for (const auto& [n, count] : graph.neighbors(b)) out.insert(n);
        }
        return out;
    }
    std::set<BucketId> seen = seeds;
    std::deque<BucketId> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
        const auto b = queue.front();
        queue.pop_front();
        for (const auto& [n, count] : graph.neighbors(b)) {
            if (seen.insert(n).second) queue.push_back(n);
        }
    }
    return seen;
}

std::set<BucketId> affected_buckets(const OverlapGraph& graph, const GroupSet& groups,
                                    std::span<const RowId> touched_rows, AffectedMode mode) {
    std::set<BucketId> seeds;
    for (auto r : touched_rows) {
        for (std::size_t i = 0; i < groups.categorical_columns().size(); ++i) {
            const auto b = groups.bucket_of(i, r);
            if (b != kNoBucket) seeds.insert(b);
        }
    }
    return close_buckets(graph, groups, std::move(seeds), mode);
}

std::set<GroupKey> affected_groups(const OverlapGraph& graph, const GroupSet& groups, const Dataset& ds,
                                   std::span<const RowId> touched_rows, AffectedMode mode) {
    std::set<GroupKey> out;
    for (auto b : affected_buckets(graph, groups, touched_rows, mode)) {
        for (auto g : groups.refs_of_bucket(b)) out.insert(groups.key(ds, g));
    }
    return out;
}

// ------------------------------------------------------ incremental upkeep

struct GroupMaintenance {
    static GroupUpdate run(GroupSet& gs, OverlapGraph& graph, const Dataset& ds, const SnapshotDelta& delta) {
        GroupUpdate update;
        std::set<RowId> candidates;
        for (const auto& ch : delta.cell_changes) {
            const auto c = ds.find_column(ch.column);
            if (c && *c < gs.cat_index_of_column_.size() && gs.cat_index_of_column_[*c] != kNotParticipating) {
                candidates.insert(ch.row);
            }
        }
        for (const auto& img : delta.row_deletions) candidates.insert(img.row);
        for (const auto& img : delta.row_restorations) candidates.insert(img.row);

        const auto ncat = gs.cats_.size();
        for (auto& col : gs.row_bucket_) {
            if (col.size() < ds.issued_rows()) col.resize(ds.issued_rows(), kNoBucket);
        }
        std::map<BucketId, std::vector<RowId>> removals;
        std::map<BucketId, std::vector<RowId>> insertions;
        std::vector<BucketId> before(ncat);
        std::vector<BucketId> after(ncat);
        std::string scratch;
        for (auto row : candidates) {
            const auto s = static_cast<std::size_t>(row.value - 1);
            const bool live = ds.is_live(row);
            for (std::size_t ci = 0; ci < ncat; ++ci) {
                before[ci] = gs.row_bucket_[ci][s];
                after[ci] = live ? gs.intern(ci, label_view(ds.cell(row, gs.cats_[ci]), scratch)) : kNoBucket;
            }
            if (before == after) continue;
            update.moved_rows.push_back(row);
            graph.remove_row(before);
            graph.add_row(after);
            for (std::size_t ci = 0; ci < ncat; ++ci) {
                if (before[ci] == after[ci]) continue;
                if (before[ci] != kNoBucket) {
                    removals[before[ci]].push_back(row);
                    update.buckets_before.insert(before[ci]);
                }
                if (after[ci] != kNoBucket) {
                    insertions[after[ci]].push_back(row);
                    update.buckets_after.insert(after[ci]);
                }
                gs.row_bucket_[ci][s] = after[ci];
            }
        }
        // Candidates are visited in ascending order, so each batch is sorted.
        for (auto& [b, rows] : removals) {
            auto& members = gs.buckets_[b].rows;
            std::vector<RowId> kept;
            kept.reserve(members.size() - rows.size());
            std::set_difference(members.begin(), members.end(), rows.begin(), rows.end(), std::back_inserter(kept));
            members.swap(kept);
        }
        for (auto& [b, rows] : insertions) {
            auto& members = gs.buckets_[b].rows;
            std::vector<RowId> merged;
            merged.reserve(members.size() + rows.size());
            std::merge(members.begin(), members.end(), rows.begin(), rows.end(), std::back_inserter(merged));
            members.swap(merged);
        }
        return update;
    }
};

GroupUpdate update_groups_incremental(GroupSet& groups, OverlapGraph& graph, const Dataset& ds,
                                      const SnapshotDelta& delta) {
    return GroupMaintenance::run(groups, graph, ds, delta);
}

}  // namespace gw
