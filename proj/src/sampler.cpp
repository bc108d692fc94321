#include "gw/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>

#include "gw/error.hpp"

namespace gw {

std::string_view to_string(Sampling s) noexcept { return s == Sampling::ErrorFirst ? "error_first" : "distance"; }

Sampling sampling_from_string(std::string_view s) {
    if (s == "error_first") return Sampling::ErrorFirst;
    if (s == "distance") return Sampling::Distance;
    throw Error(Errc::BadRequest, "unknown sampling '" + std::string(s) + "' (expected error_first or distance)");
}

namespace {

struct Split {
    std::vector<SampledPoint> error_points;
    std::vector<RowId> clean;
};

Split split_rows(const Dataset& ds, std::span<const RowId> rows, std::size_t num_column, const GroupErrors* errors,
                 const DetectorSet& detectors) {
    Split out;
    auto e = errors ? errors->rows.begin() : std::vector<RowError>::const_iterator{};
    const auto end = errors ? errors->rows.end() : std::vector<RowError>::const_iterator{};
    for (auto r : rows) {
        while (e != end && e->row < r) ++e;
        if (e != end && e->row == r) {
            SampledPoint p{r, ds.cell(r, num_column), {}};
            for (; e != end && e->row == r; ++e) p.codes.push_back(detectors.name(e->code));
            out.error_points.push_back(std::move(p));
        } else {
            out.clean.push_back(r);
        }
    }
    return out;
}

}  // namespace

Sample sample_error_first(const Dataset& ds, std::span<const RowId> rows, std::size_t num_column,
                          const GroupErrors* errors, const DetectorSet& detectors, std::size_t k,
                          std::uint64_t seed) {
    auto split = split_rows(ds, rows, num_column, errors, detectors);
    Sample out;
    out.points = std::move(split.error_points);
    std::vector<RowId> drawn;
    std::mt19937_64 rng(seed);
    std::sample(split.clean.begin(), split.clean.end(), std::back_inserter(drawn), k, rng);
    for (auto r : drawn) out.points.push_back(SampledPoint{r, ds.cell(r, num_column), {}});
    return out;
}

Sample sample_distance_based(const Dataset& ds, std::span<const RowId> rows, std::size_t num_column,
                             const GroupErrors* errors, const DetectorSet& detectors, std::size_t k,
                             std::uint64_t seed) {
    auto split = split_rows(ds, rows, num_column, errors, detectors);
    if (split.error_points.empty() && !(errors && errors->incomplete)) {
        auto s = sample_error_first(ds, rows, num_column, errors, detectors, k, seed);
        s.no_anchor = true;
        return s;
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : split.error_points) {
        if (p.value.is_number()) {
            sum += p.value.as_number();
            ++n;
        }
    }
    std::optional<double> centroid;
    if (n > 0) {
        centroid = sum / static_cast<double>(n);
    } else {
        centroid = group_mean(ds, rows, num_column);
    }
    Sample out;
    out.points = std::move(split.error_points);

    std::vector<std::pair<double, RowId>> ranked;
    ranked.reserve(split.clean.size());
    for (auto r : split.clean) {
        const auto& c = ds.cell(r, num_column);
        // Non-numeric cells (and every cell when there is no centroid) rank last, by row id.
        const double d = c.is_number() && centroid ? std::fabs(c.as_number() - *centroid) : HUGE_VAL;
        ranked.emplace_back(d, r);
    }
    std::sort(ranked.begin(), ranked.end());
    const auto take = std::min(k, ranked.size());
    for (std::size_t i = 0; i < take; ++i) {
        out.points.push_back(SampledPoint{ranked[i].second, ds.cell(ranked[i].second, num_column), {}});
    }
    return out;
}

std::map<std::string, std::size_t> code_counts(const GroupErrors* errors, const DetectorSet& detectors) {
    std::map<std::string, std::size_t> out;
    if (!errors) return out;
    std::vector<std::size_t> by_id(detectors.code_count(), 0);
    for (const auto& r : errors->rows) ++by_id[r.code];
    if (errors->incomplete) ++by_id[kIncompleteGroup];
    for (std::size_t c = 0; c < by_id.size(); ++c) {
        if (by_id[c]) out.emplace(detectors.name(static_cast<CodeId>(c)), by_id[c]);
    }
    return out;
}

std::optional<std::string> dominant_code(const std::map<std::string, std::size_t>& counts) {
    auto priority = [](const std::string& code) {
        for (std::size_t i = 0; i < std::size(kBuiltinCodes); ++i) {
            if (kBuiltinCodes[i] == code) return i;
        }
        return std::size(kBuiltinCodes);
    };
    const std::string* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [code, n] : counts) {
        if (n == 0) continue;
        // Map order is lexicographic, so among customs the first seen wins ties.
        if (!best || n > best_count || (n == best_count && priority(code) < priority(*best))) {
            best = &code;
            best_count = n;
        }
    }
    if (!best) return std::nullopt;
    return *best;
}

GroupPayload group_payload(const Dataset& ds, const GroupSet& groups, const ErrorStore& store,
                           const DetectorSet& detectors, GroupRef g, Sampling sampling, std::size_t k,
                           std::uint64_t seed) {
    GroupPayload p;
    p.key = groups.key(ds, g);
    const auto rows = groups.rows(g);
    p.cardinality = rows.size();
    const auto* errors = store.find(g);
    p.error_counts = code_counts(errors, detectors);
    p.dominant_code = dominant_code(p.error_counts);
    p.sample = sampling == Sampling::ErrorFirst
                   ? sample_error_first(ds, rows, g.num_column, errors, detectors, k, seed)
                   : sample_distance_based(ds, rows, g.num_column, errors, detectors, k, seed);
    return p;
}

ChartPayload build_chart(const Dataset& ds, const GroupSet& groups, const ErrorStore& store,
                         const DetectorSet& detectors, std::string_view cat_column, std::string_view num_column,
                         Sampling sampling, std::size_t k, std::uint64_t seed) {
    const auto cat = ds.column_index(cat_column);
    const auto num = ds.column_index(num_column);
    const auto& cats = groups.categorical_columns();
    const auto& nums = groups.numeric_columns_for(cat);
    if (std::find(cats.begin(), cats.end(), cat) == cats.end() ||
        std::find(nums.begin(), nums.end(), num) == nums.end()) {
        throw Error(Errc::UnknownColumn,
                    "no groups for '" + std::string(num_column) + "' by '" + std::string(cat_column) + "'");
    }
    ChartPayload c;
    c.cat_column = cat_column;
    c.num_column = num_column;
    c.sampling = sampling;
    c.k = k;
    c.seed = seed;
    std::vector<std::pair<std::string_view, BucketId>> buckets;
    for (BucketId b = 0; b < groups.buckets().size(); ++b) {
        const auto& bucket = groups.buckets()[b];
        if (bucket.cat_column == cat && !bucket.rows.empty()) buckets.emplace_back(bucket.value, b);
    }
    std::sort(buckets.begin(), buckets.end());
    for (const auto& [value, b] : buckets) {
        c.groups.push_back(
            group_payload(ds, groups, store, detectors, GroupRef{b, static_cast<std::uint32_t>(num)}, sampling, k,
                          seed));
    }
    return c;
}

nlohmann::json to_json(const SampledPoint& p) {
    return nlohmann::json{{"row", p.row.value}, {"value", to_json(p.value)}, {"codes", p.codes}};
}

nlohmann::json to_json(const GroupPayload& g) {
    auto points = nlohmann::json::array();
    for (const auto& p : g.sample.points) points.push_back(to_json(p));
    return nlohmann::json{{"key", g.key.canonical()},
                          {"cat_value", g.key.cat_value},
                          {"cardinality", g.cardinality},
                          {"error_counts", g.error_counts},
                          {"dominant_code", g.dominant_code ? nlohmann::json(*g.dominant_code) : nlohmann::json()},
                          {"points", std::move(points)},
                          {"no_anchor", g.sample.no_anchor}};
}

nlohmann::json to_json(const ChartPayload& c) {
    auto groups = nlohmann::json::array();
    for (const auto& g : c.groups) groups.push_back(to_json(g));
    return nlohmann::json{{"chart", {{"cat_column", c.cat_column}, {"num_column", c.num_column}}},
                          {"sampling", to_string(c.sampling)},
                          {"k", c.k},
                          {"seed", c.seed},
                          {"groups", std::move(groups)}};
}

}  // namespace gw
