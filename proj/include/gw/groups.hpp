#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gw/dataset.hpp"

namespace gw {

// {num_column | cat_column = cat_value}. Ordered by (cat_column, num_column, cat_value).
struct GroupKey {
    std::string cat_column;
    std::string cat_value;
    std::string num_column;

    // "num_column|cat_column=cat_value"
    std::string canonical() const;
    static GroupKey parse(std::string_view canonical);  // throws UnknownGroup on bad syntax

    friend bool operator==(const GroupKey&, const GroupKey&) = default;
    friend std::strong_ordering operator<=>(const GroupKey& a, const GroupKey& b) {
        if (auto c = a.cat_column <=> b.cat_column; c != 0) return c;
        if (auto c = a.num_column <=> b.num_column; c != 0) return c;
        return a.cat_value <=> b.cat_value;
    }
};

struct Group {
    GroupKey key;
    std::vector<RowId> row_ids;  // ascending
    bool below_min_size = false;  // eligible for the incompleteness detector

    std::size_t cardinality() const noexcept { return row_ids.size(); }
};

struct GroupConfig {
    // (categorical, numeric) column pairs to project; empty means all pairs.
    std::vector<std::pair<std::string, std::string>> pairs;
    std::size_t min_group_size = 2;
};

enum class AffectedMode : std::uint8_t { OneHop, ConnectedComponents };

std::string_view to_string(AffectedMode m) noexcept;

using BucketId = std::uint32_t;
inline constexpr BucketId kNoBucket = ~BucketId{0};

// Internal identity of a group: the bucket (categorical column + value) and
// the position of the numeric column projected onto it.
struct GroupRef {
    BucketId bucket = kNoBucket;
    std::uint32_t num_column = 0;

    friend constexpr auto operator<=>(GroupRef, GroupRef) = default;
    std::uint64_t packed() const noexcept { return (std::uint64_t{bucket} << 32) | num_column; }
};

// Rows sharing one categorical value. Every group over that categorical
// column has exactly this row set, whatever its numeric column.
struct Bucket {
    std::size_t cat_column = 0;  // column position
    std::string value;           // category label
    std::vector<RowId> rows;     // ascending
};

// The maintained group index: buckets per participating categorical column
// and, per slot, the bucket each live row falls into.
class GroupSet {
public:
    GroupSet() = default;

    const GroupConfig& config() const noexcept { return config_; }
    const std::vector<Bucket>& buckets() const noexcept { return buckets_; }
    const std::vector<std::size_t>& categorical_columns() const noexcept { return cats_; }
    const std::vector<std::size_t>& numeric_columns_for(std::size_t cat_column) const;
    const std::vector<std::size_t>& numeric_columns() const noexcept { return nums_; }

    std::optional<BucketId> find_bucket(std::size_t cat_column, std::string_view value) const;
    std::optional<GroupRef> find(const Dataset& ds, const GroupKey& key) const;

    // Bucket of `row` under the i-th participating categorical column.
    BucketId bucket_of(std::size_t cat_index, RowId row) const noexcept;

    // Buckets the row belongs to, one per participating categorical column.
    std::vector<BucketId> buckets_of(RowId row) const;

    bool exists(GroupRef g) const noexcept;
    GroupKey key(const Dataset& ds, GroupRef g) const;
    std::span<const RowId> rows(GroupRef g) const { return buckets_[g.bucket].rows; }

    // Every nonempty group, ordered by GroupKey.
    std::vector<GroupRef> refs(const Dataset& ds) const;
    std::vector<GroupRef> refs_of_bucket(BucketId b) const;
    std::size_t group_count() const;

    std::vector<Group> materialize(const Dataset& ds) const;
    Group materialize(const Dataset& ds, GroupRef g) const;

    // Key -> rows, for equality checks against a scratch rebuild.
    std::map<GroupKey, std::vector<RowId>> snapshot(const Dataset& ds) const;

private:
    friend GroupSet generate_groups(const Dataset&, const GroupConfig&);
    friend struct GroupMaintenance;

    struct TransparentHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
    };
    using ValueIndex = std::unordered_map<std::string, BucketId, TransparentHash, std::equal_to<>>;

    BucketId intern(std::size_t cat_index, std::string_view value);

    GroupConfig config_;
    std::vector<std::size_t> cats_;                  // participating categorical column positions
    std::vector<std::size_t> nums_;                  // participating numeric column positions
    std::vector<std::vector<std::size_t>> nums_by_column_;  // indexed by column position
    std::vector<std::size_t> cat_index_of_column_;   // column position -> index in cats_ (or npos)
    std::vector<ValueIndex> value_index_;            // per cats_ index
    std::vector<Bucket> buckets_;
    std::vector<std::vector<BucketId>> row_bucket_;  // [cats_ index][slot]
};

// Undirected overlap between groups. Stored at bucket granularity: two groups
// over different buckets overlap iff the buckets share a row; two groups over
// the same bucket (different numeric columns) always overlap.
class OverlapGraph {
public:
    void add_row(std::span<const BucketId> buckets);
    void remove_row(std::span<const BucketId> buckets);

    std::size_t shared_rows(BucketId a, BucketId b) const;
    const std::unordered_map<BucketId, std::uint32_t>& neighbors(BucketId b) const;

    // Expanded group-level edge set, each pair ordered (first < second).
    std::set<std::pair<GroupKey, GroupKey>> edges(const GroupSet& groups, const Dataset& ds) const;

    friend bool operator==(const OverlapGraph& a, const OverlapGraph& b) { return a.adj_ == b.adj_; }

private:
    void ensure(BucketId b);
    std::vector<std::unordered_map<BucketId, std::uint32_t>> adj_;
};

GroupSet generate_groups(const Dataset& ds, const GroupConfig& config);
OverlapGraph build_overlap_graph(const GroupSet& groups);

// Buckets holding any touched row (current membership) plus their closure.
std::set<BucketId> affected_buckets(const OverlapGraph& graph, const GroupSet& groups,
                                    std::span<const RowId> touched_rows, AffectedMode mode);
std::set<BucketId> close_buckets(const OverlapGraph& graph, const GroupSet& groups, std::set<BucketId> seeds,
                                 AffectedMode mode);

std::set<GroupKey> affected_groups(const OverlapGraph& graph, const GroupSet& groups, const Dataset& ds,
                                   std::span<const RowId> touched_rows, AffectedMode mode = AffectedMode::OneHop);

struct GroupUpdate {
    std::set<BucketId> buckets_before;  // buckets touched rows left
    std::set<BucketId> buckets_after;   // buckets touched rows joined
    std::vector<RowId> moved_rows;      // rows whose membership changed
};

// Brings groups and graph in line with `ds`, which already has `delta` applied.
// Only rows named by the delta are revisited.
GroupUpdate update_groups_incremental(GroupSet& groups, OverlapGraph& graph, const Dataset& ds,
                                      const SnapshotDelta& delta);

}  // namespace gw
