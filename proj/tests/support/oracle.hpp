#pragma once

// Brute-force reference implementations used as test oracles. They read the
// dataset only through its public cell accessors and share no code with the
// engine's grouping, statistics or detection paths.

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gw/dataset.hpp"
#include "gw/detect.hpp"
#include "gw/session.hpp"

namespace gw::testing {

// (group canonical key, row id or 0, column, code)
using Record = std::tuple<std::string, std::uint64_t, std::string, std::string>;
using RecordSet = std::set<Record>;

RecordSet to_set(const std::vector<ErrorRecord>& records);

struct OracleStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
};

// Sequential two-pass population statistics over live Number cells.
OracleStats oracle_stats(const Dataset& ds, const std::string& column);

// canonical key -> ascending live row ids, for every (categorical, numeric) pair.
std::map<std::string, std::vector<std::uint64_t>> oracle_groups(const Dataset& ds);

// Unordered edge set between canonical keys with a shared row.
std::set<std::pair<std::string, std::string>> oracle_edges(const Dataset& ds);

struct OracleCustom {
    std::string code;
    std::string column;  // empty = every numeric column
    std::function<bool(const CellValue& value, std::size_t group_size)> predicate;
};

RecordSet oracle_detect(const Dataset& ds, double k, std::size_t min_group_size,
                        const std::vector<OracleCustom>& customs = {});

// Engine-side views normalised for comparison.
std::map<std::string, std::vector<std::uint64_t>> engine_groups(const GroupSet& g, const Dataset& ds);
std::set<std::pair<std::string, std::string>> engine_edges(const OverlapGraph& graph, const GroupSet& g,
                                                           const Dataset& ds);

// Describes the first difference between a session's maintained state and a
// from-scratch rebuild of the same dataset, or returns "" when they agree.
std::string diff_against_scratch(const Session& s);

}  // namespace gw::testing
