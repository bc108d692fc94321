#include "gw/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "gw/error.hpp"
#include "gw/kernels.hpp"

namespace gw::bench {

namespace {

constexpr std::size_t kCardinalities[] = {4, 8, 12, 20, 50};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string generate_csv(const SyntheticSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::string out;
    out.reserve(spec.rows * (spec.categorical * 6 + spec.numeric * 9));
    for (std::size_t c = 0; c < spec.categorical; ++c) {
        if (c) out.push_back(',');
        out += "cat" + std::to_string(c);
    }
    for (std::size_t n = 0; n < spec.numeric; ++n) {
        if (spec.categorical || n) out.push_back(',');
        out += "num" + std::to_string(n);
    }
    out.push_back('\n');

    char buf[64];
    std::vector<std::size_t> cats(spec.categorical);
    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.categorical; ++c) {
            const auto card = kCardinalities[c % std::size(kCardinalities)];
            cats[c] = static_cast<std::size_t>(rng() % card);
            if (c) out.push_back(',');
            if (u(rng) < spec.categorical_null_rate) continue;
            out += "c" + std::to_string(c) + "_" + std::to_string(cats[c]);
        }
        for (std::size_t n = 0; n < spec.numeric; ++n) {
            if (spec.categorical || n) out.push_back(',');
            const double scale = 100.0 * static_cast<double>(n + 1);
            // Mild per-category shift so groups differ.
            const double shift = spec.categorical ? 0.05 * scale * static_cast<double>(cats[n % spec.categorical] % 5) : 0.0;
            const double x = u(rng);
            if (x < spec.null_rate) continue;
            if (x < spec.null_rate + spec.text_rate) {
                std::snprintf(buf, sizeof buf, "%dk", static_cast<int>(rng() % 90) + 10);
                out += buf;
                continue;
            }
            double v = scale + shift + 0.1 * scale * noise(rng);
            if (x < spec.null_rate + spec.text_rate + spec.outlier_rate) v += (rng() & 1 ? 1 : -1) * 3.0 * scale;
            std::snprintf(buf, sizeof buf, "%.2f", v);
            out += buf;
        }
        out.push_back('\n');
    }
    return out;
}

std::string_view to_string(OpKind k) noexcept { return k == OpKind::Remove ? "remove" : "impute"; }

OpKind op_kind_from_string(std::string_view s) {
    if (s == "remove") return OpKind::Remove;
    if (s == "impute") return OpKind::Impute;
    throw Error(Errc::InvalidConfig, "unknown op kind '" + std::string(s) + "' (expected remove or impute)");
}

Latency summarize(std::vector<double> seconds) {
    Latency l;
    l.n = seconds.size();
    if (seconds.empty()) return l;
    std::sort(seconds.begin(), seconds.end());
    double sum = 0.0;
    for (double s : seconds) sum += s;
    l.mean = sum / static_cast<double>(l.n);
    l.median = l.n % 2 ? seconds[l.n / 2] : 0.5 * (seconds[l.n / 2 - 1] + seconds[l.n / 2]);
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(l.n)));
    l.p95 = seconds[std::max<std::size_t>(rank, 1) - 1];
    return l;
}

namespace {

// Picks the next action from the session's current errors, or nullopt when
// no group carries an error this op kind can repair.
std::optional<RepairAction> choose(const Session& s, OpKind kind, std::mt19937_64& rng) {
    std::vector<std::uint64_t> candidates;
    for (const auto& [packed, e] : s.store().groups()) {
        const bool ok = std::any_of(e.rows.begin(), e.rows.end(), [&](const RowError& r) {
            return kind == OpKind::Remove || r.code == kMissing || r.code == kOutlier;
        });
        if (ok) candidates.push_back(packed);
    }
    if (candidates.empty()) return std::nullopt;
    std::sort(candidates.begin(), candidates.end());
    const auto packed = candidates[rng() % candidates.size()];
    const GroupRef ref{static_cast<BucketId>(packed >> 32), static_cast<std::uint32_t>(packed & 0xffffffffu)};
    const auto& errors = s.store().find(ref)->rows;
    std::vector<RowId> rows;
    for (const auto& r : errors) {
        if (kind == OpKind::Remove || r.code == kMissing || r.code == kOutlier) rows.push_back(r.row);
    }
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    RepairAction a;
    a.kind = kind == OpKind::Remove ? ActionKind::DeleteRows : ActionKind::ImputeGroupMean;
    a.target = s.groups().key(s.dataset(), ref);
    a.scope_rows = {rows[rng() % rows.size()]};
    return a;
}

bool same_state(const Session& a, const Session& b) {
    return a.dataset().same_content(b.dataset()) &&
           a.groups().snapshot(a.dataset()) == b.groups().snapshot(b.dataset()) &&
           keyed_errors(a.store(), a.dataset(), a.groups()) == keyed_errors(b.store(), b.dataset(), b.groups());
}

}  // namespace

Report run(const std::string& csv, const Options& options, const IngestOptions& ingest, const SessionConfig& config) {
    if (options.mix.empty()) throw Error(Errc::InvalidConfig, "op mix is empty");
    Report report;
    report.kernels = std::string(kernels::active().name);

    const auto t0 = Clock::now();
    Session inc(csv, ingest, config, CommitMode::Incremental, "bench");
    report.setup_seconds = seconds_since(t0);
    std::optional<Session> full;
    if (options.run_full) full.emplace(csv, ingest, config, CommitMode::FullRescan, "bench");
    report.full_ran = options.run_full;
    report.rows = inc.dataset().live_count();
    report.columns = inc.dataset().columns().size();
    report.groups = inc.groups().group_count();
    report.initial_errors = inc.store().total();

    std::mt19937_64 rng(options.seed);
    std::map<std::string, std::vector<double>> inc_times;
    std::map<std::string, std::vector<double>> full_times;
    std::size_t attempts = 0;
    while (report.samples.size() < options.ops && attempts < options.ops * 20 + 20) {
        ++attempts;
        const auto kind = options.mix[rng() % options.mix.size()];
        auto action = choose(inc, kind, rng);
        if (!action) continue;
        OpSample sample;
        sample.kind = kind;
        sample.target = action->target.canonical();
        try {
            const auto t = Clock::now();
            inc.apply(*action);
            sample.incremental_seconds = seconds_since(t);
        } catch (const Error& e) {
            if (e.code() == Errc::InapplicableAction) continue;
            throw;
        }
        if (full) {
            const auto t = Clock::now();
            full->apply(*action);
            sample.full_seconds = seconds_since(t);
            full_times[std::string(to_string(kind))].push_back(sample.full_seconds);
            full_times["all"].push_back(sample.full_seconds);
        }
        inc_times[std::string(to_string(kind))].push_back(sample.incremental_seconds);
        inc_times["all"].push_back(sample.incremental_seconds);
        report.samples.push_back(std::move(sample));
    }
    for (auto& [k, v] : inc_times) report.incremental[k] = summarize(v);
    for (auto& [k, v] : full_times) report.full[k] = summarize(v);
    if (full) report.equivalent = same_state(inc, *full);
    return report;
}

nlohmann::json to_json(const Latency& l) {
    return nlohmann::json{{"n", l.n}, {"mean_s", l.mean}, {"median_s", l.median}, {"p95_s", l.p95}};
}

nlohmann::json to_json(const Report& r) {
    nlohmann::json inc = nlohmann::json::object();
    for (const auto& [k, l] : r.incremental) inc[k] = to_json(l);
    nlohmann::json full = nlohmann::json::object();
    for (const auto& [k, l] : r.full) full[k] = to_json(l);
    nlohmann::json speedup = nlohmann::json::object();
    for (const auto& [k, l] : r.incremental) {
        auto it = r.full.find(k);
        if (it != r.full.end() && l.mean > 0.0) speedup[k] = it->second.mean / l.mean;
    }
    return nlohmann::json{{"rows", r.rows},
                          {"columns", r.columns},
                          {"groups", r.groups},
                          {"initial_errors", r.initial_errors},
                          {"kernels", r.kernels},
                          {"setup_s", r.setup_seconds},
                          {"ops", r.samples.size()},
                          {"incremental", std::move(inc)},
                          {"full_rescan", std::move(full)},
                          {"speedup", std::move(speedup)},
                          {"full_ran", r.full_ran},
                          {"equivalent", r.equivalent}};
}

std::string to_text(const Report& r) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "dataset %zu rows x %zu columns, %zu groups, %zu errors, kernels=%s\n", r.rows,
                  r.columns, r.groups, r.initial_errors, r.kernels.c_str());
    out += line;
    std::snprintf(line, sizeof line, "%-8s %-12s %6s %11s %11s %11s\n", "op", "path", "n", "mean(ms)", "median(ms)",
                  "p95(ms)");
    out += line;
    auto row = [&](const std::string& k, const char* path, const Latency& l) {
        std::snprintf(line, sizeof line, "%-8s %-12s %6zu %11.3f %11.3f %11.3f\n", k.c_str(), path, l.n,
                      l.mean * 1e3, l.median * 1e3, l.p95 * 1e3);
        out += line;
    };
    for (const auto& [k, l] : r.incremental) {
        row(k, "incremental", l);
        if (auto it = r.full.find(k); it != r.full.end()) row(k, "full-rescan", it->second);
    }
    if (r.full_ran) out += std::string("final states equivalent: ") + (r.equivalent ? "yes" : "NO") + "\n";
    return out;
}

}  // namespace gw::bench
