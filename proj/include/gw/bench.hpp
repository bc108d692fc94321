#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gw/session.hpp"

namespace gw::bench {

// Seeded synthetic table: categorical columns cycle through cardinalities
// 4, 8, 12, 20, 50; numeric columns carry injected nulls, text and outliers.
struct SyntheticSpec {
    std::size_t rows = 50000;
    std::size_t categorical = 5;
    std::size_t numeric = 10;
    std::uint64_t seed = 7;
    double null_rate = 0.02;
    double text_rate = 0.01;
    double outlier_rate = 0.01;
    double categorical_null_rate = 0.002;
};

std::string generate_csv(const SyntheticSpec& spec);

enum class OpKind : std::uint8_t { Remove, Impute };

std::string_view to_string(OpKind k) noexcept;
OpKind op_kind_from_string(std::string_view s);  // throws InvalidConfig

struct Options {
    std::size_t ops = 50;
    std::vector<OpKind> mix{OpKind::Remove, OpKind::Impute};
    std::uint64_t seed = 1;
    bool run_full = true;  // also drive the full-rescan baseline
};

struct Latency {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double p95 = 0.0;
};

Latency summarize(std::vector<double> seconds);

struct OpSample {
    OpKind kind = OpKind::Remove;
    std::string target;
    double incremental_seconds = 0.0;
    double full_seconds = 0.0;
};

struct Report {
    std::size_t rows = 0;
    std::size_t columns = 0;
    std::size_t groups = 0;
    std::size_t initial_errors = 0;
    std::string kernels;
    double setup_seconds = 0.0;
    std::vector<OpSample> samples;
    std::map<std::string, Latency> incremental;  // by op kind, plus "all"
    std::map<std::string, Latency> full;
    bool full_ran = false;
    bool equivalent = true;  // final datasets, groups and error stores agree
};

// Runs the workload on an incremental session and, in lockstep, on a
// full-rescan session. Each op is chosen from the incremental session's
// current errors: remove deletes one error row, impute fills one missing
// (or outlier) cell with its group mean.
Report run(const std::string& csv, const Options& options, const IngestOptions& ingest = {},
           const SessionConfig& config = {});

nlohmann::json to_json(const Latency& l);
nlohmann::json to_json(const Report& r);
std::string to_text(const Report& r);

}  // namespace gw::bench
