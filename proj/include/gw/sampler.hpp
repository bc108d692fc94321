#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gw/detect.hpp"

namespace gw {

enum class Sampling : std::uint8_t { ErrorFirst, Distance };

std::string_view to_string(Sampling s) noexcept;
Sampling sampling_from_string(std::string_view s);  // throws BadRequest

inline constexpr std::size_t kDefaultSampleK = 20;
inline constexpr std::uint64_t kDefaultSampleSeed = 42;

struct SampledPoint {
    RowId row;
    CellValue value;
    std::vector<std::string> codes;  // empty for clean context points

    friend bool operator==(const SampledPoint&, const SampledPoint&) = default;
};

struct Sample {
    std::vector<SampledPoint> points;  // error rows ascending, then clean rows in draw order
    bool no_anchor = false;            // distance sampling fell back to error-first

    friend bool operator==(const Sample&, const Sample&) = default;
};

// All rows carrying a row-scoped error plus up to k clean rows drawn
// uniformly without replacement (mt19937_64 seeded with `seed`).
Sample sample_error_first(const Dataset& ds, std::span<const RowId> rows, std::size_t num_column,
                          const GroupErrors* errors, const DetectorSet& detectors, std::size_t k,
                          std::uint64_t seed);

// All error rows plus the k clean rows nearest the centroid of the numeric
// anomalous values (group mean when no anomaly is numeric), ties by row id.
Sample sample_distance_based(const Dataset& ds, std::span<const RowId> rows, std::size_t num_column,
                             const GroupErrors* errors, const DetectorSet& detectors, std::size_t k,
                             std::uint64_t seed);

// Error counts by code name, incomplete_group counted once.
std::map<std::string, std::size_t> code_counts(const GroupErrors* errors, const DetectorSet& detectors);

// Most frequent code; ties by missing, outlier, type_mismatch,
// incomplete_group, then custom codes lexicographically.
std::optional<std::string> dominant_code(const std::map<std::string, std::size_t>& counts);

struct GroupPayload {
    GroupKey key;
    std::size_t cardinality = 0;
    std::map<std::string, std::size_t> error_counts;
    std::optional<std::string> dominant_code;
    Sample sample;
};

struct ChartPayload {
    std::string cat_column;
    std::string num_column;
    Sampling sampling = Sampling::ErrorFirst;
    std::size_t k = kDefaultSampleK;
    std::uint64_t seed = kDefaultSampleSeed;
    std::vector<GroupPayload> groups;  // ordered by category value
};

GroupPayload group_payload(const Dataset& ds, const GroupSet& groups, const ErrorStore& store,
                           const DetectorSet& detectors, GroupRef g, Sampling sampling, std::size_t k,
                           std::uint64_t seed);

// Throws UnknownColumn when either column is not a participating column of
// the right kind.
ChartPayload build_chart(const Dataset& ds, const GroupSet& groups, const ErrorStore& store,
                         const DetectorSet& detectors, std::string_view cat_column, std::string_view num_column,
                         Sampling sampling, std::size_t k, std::uint64_t seed);

nlohmann::json to_json(const SampledPoint& p);
nlohmann::json to_json(const GroupPayload& g);
nlohmann::json to_json(const ChartPayload& c);

}  // namespace gw
