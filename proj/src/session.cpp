#include "gw/session.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "gw/error.hpp"

namespace gw {

// ----------------------------------------------------------------- config

void SessionConfig::validate() const {
    if (!(outlier_k > 0.0) || !std::isfinite(outlier_k)) throw Error(Errc::InvalidConfig, "outlier_k must be positive");
    if (flush_every == 0) throw Error(Errc::InvalidConfig, "flush_every must be positive");
    if (sample_k == 0) throw Error(Errc::InvalidConfig, "sample_k must be positive");
}

nlohmann::json to_json(const SessionConfig& c) {
    auto pairs = nlohmann::json::array();
    for (const auto& [cat, num] : c.pairs) pairs.push_back(nlohmann::json::array({cat, num}));
    return nlohmann::json{{"outlier_k", c.outlier_k},
                          {"min_group_size", c.min_group_size},
                          {"flush_every", c.flush_every},
                          {"sample_k", c.sample_k},
                          {"affected_mode", to_string(c.affected_mode)},
                          {"impute_clean_only", c.impute_clean_only},
                          {"pairs", std::move(pairs)}};
}

SessionConfig session_config_from_json(const nlohmann::json& j, SessionConfig c) {
    if (!j.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "outlier_k") {
                c.outlier_k = v.get<double>();
            } else if (key == "min_group_size") {
                c.min_group_size = v.get<std::size_t>();
            } else if (key == "flush_every") {
                c.flush_every = v.get<std::size_t>();
            } else if (key == "sample_k") {
                c.sample_k = v.get<std::size_t>();
            } else if (key == "affected_mode") {
                const auto m = v.get<std::string>();
                if (m == "one_hop") {
                    c.affected_mode = AffectedMode::OneHop;
                } else if (m == "connected_components") {
                    c.affected_mode = AffectedMode::ConnectedComponents;
                } else {
                    throw Error(Errc::InvalidConfig, "affected_mode must be one_hop or connected_components");
                }
            } else if (key == "impute_clean_only") {
                c.impute_clean_only = v.get<bool>();
            } else if (key == "pairs") {
                c.pairs.clear();
                for (const auto& p : v) c.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
            } else {
                throw Error(Errc::InvalidConfig, "unknown config field '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidConfig, std::string("bad config: ") + e.what());
    }
    c.validate();
    return c;
}

// ------------------------------------------------------------------- JSON

nlohmann::json to_json(const ErrorSummary& s) {
    auto out = nlohmann::json::array();
    for (const auto& [key, counts] : s) {
        std::size_t total = 0;
        for (const auto& [code, n] : counts) total += n;
        out.push_back(nlohmann::json{{"key", key.canonical()}, {"counts", counts}, {"total", total}});
    }
    return out;
}

namespace {

nlohmann::json keys_json(const std::vector<GroupKey>& keys) {
    auto out = nlohmann::json::array();
    for (const auto& k : keys) out.push_back(k.canonical());
    return out;
}

}  // namespace

nlohmann::json to_json(const CommitResult& r) {
    auto changed = nlohmann::json::array();
    for (const auto& d : r.report.changed) changed.push_back(d.key.canonical());
    nlohmann::json out{{"version", r.version},
                       {"delta", to_json(r.delta)},
                       {"affected_groups", keys_json(r.report.affected)},
                       {"changed_groups", std::move(changed)},
                       {"restatted_columns", r.report.restatted_columns},
                       {"error_summary", to_json(r.summary)}};
    if (r.storage_error) out["storage_error"] = *r.storage_error;
    return out;
}

nlohmann::json to_json(const PreviewResult& p) {
    return nlohmann::json{
        {"version", p.version},
        {"delta", to_json(p.delta)},
        {"group_payload_after", p.group_payload_after ? to_json(*p.group_payload_after) : nlohmann::json()},
        {"error_summary_after", to_json(p.error_summary_after)},
        {"affected_groups", keys_json(p.affected)}};
}

nlohmann::json to_json(const RankedGroup& g) {
    return nlohmann::json{{"key", g.key.canonical()},
                          {"cardinality", g.cardinality},
                          {"errors", g.errors},
                          {"counts", g.counts},
                          {"dominant_code", g.dominant_code ? nlohmann::json(*g.dominant_code) : nlohmann::json()}};
}

// ---------------------------------------------------------------- session

Session::Session(std::string csv, IngestOptions options, SessionConfig config, CommitMode mode, std::string id)
    : csv_(std::move(csv)), options_(options), config_(std::move(config)), mode_(mode) {
    config_.validate();
    dataset_ = Dataset::ingest_csv(csv_, options_, std::move(id));
    groups_ = generate_groups(dataset_, GroupConfig{config_.pairs, config_.min_group_size});
    graph_ = build_overlap_graph(groups_);
    store_ = detect_all(dataset_, groups_, detectors_, detect_config());
}

std::map<std::string, std::size_t> Session::error_counts() const {
    std::map<std::string, std::size_t> out;
    for (const auto& [packed, e] : store_.groups()) {
        for (const auto& r : e.rows) ++out[detectors_.name(r.code)];
        if (e.incomplete) ++out[detectors_.name(kIncompleteGroup)];
    }
    return out;
}

RedetectReport Session::commit(const SnapshotDelta& delta) {
    if (mode_ == CommitMode::FullRescan) {
        auto before = keyed_errors(store_, dataset_, groups_);
        dataset_.apply_delta(delta);
        groups_ = generate_groups(dataset_, GroupConfig{config_.pairs, config_.min_group_size});
        graph_ = build_overlap_graph(groups_);
        store_ = detect_all(dataset_, groups_, detectors_, detect_config());
        return diff_keyed(before, keyed_errors(store_, dataset_, groups_), groups_, dataset_);
    }

    ChangeSet change;
    for (const auto& c : delta.cell_changes) {
        change.touched_rows.push_back(c.row);
        change.changed_columns.insert(dataset_.column_index(c.column));
    }
    for (const auto& d : delta.row_deletions) change.touched_rows.push_back(d.row);
    for (const auto& d : delta.row_restorations) change.touched_rows.push_back(d.row);
    std::sort(change.touched_rows.begin(), change.touched_rows.end());
    change.touched_rows.erase(std::unique(change.touched_rows.begin(), change.touched_rows.end()),
                              change.touched_rows.end());
    change.rows_added_or_removed = !delta.row_deletions.empty() || !delta.row_restorations.empty();

    std::set<BucketId> pre;
    for (auto r : change.touched_rows) {
        if (!dataset_.is_live(r)) continue;
        for (auto b : groups_.buckets_of(r)) {
            if (b != kNoBucket) pre.insert(b);
        }
    }
    change.extra_buckets = close_buckets(graph_, groups_, pre, config_.affected_mode);

    dataset_.apply_delta(delta);
    auto update = update_groups_incremental(groups_, graph_, dataset_, delta);
    change.seed_buckets = std::move(pre);
    change.seed_buckets.insert(update.buckets_before.begin(), update.buckets_before.end());
    change.seed_buckets.insert(update.buckets_after.begin(), update.buckets_after.end());
    return redetect_incremental(store_, dataset_, groups_, graph_, detectors_, detect_config(), change,
                                config_.affected_mode);
}

ErrorSummary Session::summarize(const RedetectReport& report) const {
    ErrorSummary out;
    for (const auto& key : report.affected) {
        const auto ref = groups_.find(dataset_, key);
        out[key] = code_counts(ref ? store_.find(*ref) : nullptr, detectors_);
    }
    for (const auto& d : report.changed) out[d.key] = code_counts(&d.after, detectors_);
    return out;
}

void Session::log_record(RecordType type, const nlohmann::json& payload,
                         std::optional<std::string>* storage_error) {
    if (!log_) return;
    try {
        log_->push(type, payload);
    } catch (const Error& e) {
        if (e.code() != Errc::StorageFailure || !storage_error) throw;
        *storage_error = e.what();
    }
}

SnapshotDelta Session::plan(const RepairAction& a) const {
    return plan_action(a, dataset_, groups_, store_, detectors_, wranglers_,
                       WrangleConfig{config_.impute_clean_only});
}

CommitResult Session::apply(const RepairAction& a) {
    CommitResult out;
    out.delta = plan(a);
    out.delta.seq = history_.cursor() + 1;
    out.report = commit(out.delta);
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    ActionLogEntry entry{out.delta.seq, a, out.delta, now};
    log_record(RecordType::Action, to_json(entry), &out.storage_error);
    history_.record(std::move(entry));
    out.version = ++version_;
    out.summary = summarize(out.report);
    return out;
}

PreviewResult Session::preview(const RepairAction& a) {
    PreviewResult out;
    out.version = version_;
    out.delta = plan(a);
    out.delta.seq = history_.cursor() + 1;
    const auto dataset_version = dataset_.version();
    const auto report = commit(out.delta);
    out.error_summary_after = summarize(report);
    out.affected = report.affected;
    if (const auto ref = groups_.find(dataset_, a.target)) {
        out.group_payload_after = group_payload(dataset_, groups_, store_, detectors_, *ref, Sampling::ErrorFirst,
                                                config_.sample_k, kDefaultSampleSeed);
    }
    commit(inverse(out.delta));
    dataset_.rewind_version(dataset_version);
    return out;
}

CommitResult Session::undo() {
    const auto& entry = history_.undo_target();
    CommitResult out;
    out.delta = inverse(entry.delta);
    out.report = commit(out.delta);
    log_record(RecordType::Undo, nlohmann::json{{"seq", entry.seq}}, &out.storage_error);
    history_.step_back();
    out.version = ++version_;
    out.summary = summarize(out.report);
    return out;
}

CommitResult Session::redo() {
    const auto& entry = history_.redo_target();
    CommitResult out;
    out.delta = entry.delta;
    out.report = commit(out.delta);
    log_record(RecordType::Redo, nlohmann::json{{"seq", entry.seq}}, &out.storage_error);
    history_.step_forward();
    out.version = ++version_;
    out.summary = summarize(out.report);
    return out;
}

std::vector<RepairSuggestion> Session::suggest(const GroupKey& group, std::string_view code) {
    const auto ref = groups_.find(dataset_, group);
    if (!ref) throw Error(Errc::UnknownGroup, "unknown group '" + group.canonical() + "'");
    const auto code_id = detectors_.require(code);
    auto count_in_target = [&]() -> std::size_t {
        const auto r = groups_.find(dataset_, group);
        if (!r) return 0;
        const auto* e = store_.find(*r);
        return e ? e->count(code_id) : 0;
    };
    const auto before = count_in_target();
    if (before == 0) {
        throw Error(Errc::NoSuchErrorInGroup,
                    "group '" + group.canonical() + "' has no '" + std::string(code) + "' errors");
    }

    std::vector<RepairAction> candidates;
    for (auto kind : applicable_kinds(code, detectors_)) {
        candidates.push_back(RepairAction{kind, group, std::string(code), {}, {}});
    }
    for (const auto* w : wranglers_.for_code(code)) {
        candidates.push_back(RepairAction{ActionKind::Custom, group, std::string(code), {}, w->id});
    }

    std::vector<RepairSuggestion> out;
    for (auto& a : candidates) {
        SnapshotDelta delta;
        try {
            delta = plan(a);
        } catch (const Error& e) {
            if (e.code() == Errc::InapplicableAction) continue;
            throw;
        }
        const auto dataset_version = dataset_.version();
        const auto report = commit(delta);
        RepairSuggestion s;
        s.action = std::move(a);
        const auto after = count_in_target();
        s.predicted_resolved = before > after ? before - after : 0;
        for (const auto& d : report.changed) {
            for (const auto& r : d.after.rows) {
                if (!std::binary_search(d.before.rows.begin(), d.before.rows.end(), r)) ++s.predicted_new_errors;
            }
            if (d.after.incomplete && !d.before.incomplete) ++s.predicted_new_errors;
        }
        commit(inverse(delta));
        dataset_.rewind_version(dataset_version);
        out.push_back(std::move(s));
    }
    rank_suggestions(out);
    return out;
}

CodeId Session::register_detector(const CustomDetectorSpec& spec) {
    const auto id = detectors_.register_detector(dataset_, spec);
    store_ = detect_all(dataset_, groups_, detectors_, detect_config());
    log_record(RecordType::Registration,
               nlohmann::json{{"kind", "detector"}, {"code", spec.code}, {"expression", spec.expression},
                              {"column", spec.column}},
               nullptr);
    ++version_;
    return id;
}

CodeId Session::register_native(const std::string& code, const std::string& column, NativeDetector fn) {
    const auto id = detectors_.register_native(dataset_, code, column, std::move(fn));
    store_ = detect_all(dataset_, groups_, detectors_, detect_config());
    ++version_;
    return id;
}

std::string Session::register_wrangler(const WranglerSpec& spec) {
    const auto& e = wranglers_.register_wrangler(detectors_, spec);
    log_record(RecordType::Registration,
               nlohmann::json{{"kind", "wrangler"}, {"code", spec.code}, {"rule", spec.rule}, {"name", spec.name}},
               nullptr);
    ++version_;
    return e.id;
}

std::vector<RankedGroup> Session::ranked_groups() const {
    std::vector<RankedGroup> out;
    for (auto g : groups_.refs(dataset_)) {
        RankedGroup r;
        r.key = groups_.key(dataset_, g);
        r.cardinality = groups_.rows(g).size();
        const auto* e = store_.find(g);
        r.errors = e ? e->total() : 0;
        r.counts = code_counts(e, detectors_);
        r.dominant_code = dominant_code(r.counts);
        out.push_back(std::move(r));
    }
    std::vector<std::pair<std::string, std::size_t>> order;
    for (std::size_t i = 0; i < out.size(); ++i) order.emplace_back(out[i].key.canonical(), i);
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
        if (out[a.second].errors != out[b.second].errors) return out[a.second].errors > out[b.second].errors;
        return a.first < b.first;
    });
    std::vector<RankedGroup> sorted;
    sorted.reserve(out.size());
    for (const auto& [k, i] : order) sorted.push_back(std::move(out[i]));
    return sorted;
}

ChartPayload Session::chart(std::string_view cat_column, std::string_view num_column, Sampling sampling,
                            std::optional<std::size_t> k, std::uint64_t seed) const {
    return build_chart(dataset_, groups_, store_, detectors_, cat_column, num_column, sampling,
                       k.value_or(config_.sample_k), seed);
}

std::string Session::render_script(ScriptTarget target) const {
    return gw::render_script(target, ScriptSource{csv_, options_, dataset_.columns()}, history_.effective());
}

// ------------------------------------------------------------- durability

namespace {

std::string base64(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string unbase64(std::string_view text) {
    std::string out(3 * (text.size() / 4) + 3, '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) throw Error(Errc::CorruptLog, "baseline snapshot is not valid base64");
    std::size_t len = static_cast<std::size_t>(n);
    // DecodeBlock counts padding bytes as output.
    if (text.size() >= 1 && text.back() == '=') --len;
    if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
    out.resize(len);
    return out;
}

}  // namespace

nlohmann::json Session::baseline() const {
    nlohmann::json b{{"dataset_id", dataset_.id()},
                     {"ingest", {{"delimiter", std::string(1, options_.delimiter)},
                                 {"numeric_threshold", options_.numeric_threshold}}},
                     {"config", to_json(config_)}};
    try {
        (void)nlohmann::json(csv_).dump();
        b["csv"] = csv_;
    } catch (const nlohmann::json::exception&) {
        b["csv_base64"] = base64(csv_);
    }
    return b;
}

void Session::attach_storage(std::shared_ptr<LogStorage> storage) {
    if (version_ != 0 || log_) throw Error(Errc::InvalidConfig, "storage must be attached to a fresh session");
    auto writer = std::make_unique<LogWriter>(std::move(storage), FlushPolicy{config_.flush_every});
    writer->start(baseline());
    log_ = std::move(writer);
}

void Session::flush() {
    if (log_) log_->flush();
}

Session Session::recover(std::shared_ptr<LogStorage> storage, CommitMode mode) {
    if (!storage) throw Error(Errc::InvalidConfig, "log storage is required");
    const auto bytes = storage->read_all();
    const auto log = decode_log(bytes);
    if (log.records.empty() || log.records.front().type != RecordType::Baseline) {
        throw Error(Errc::CorruptLog, "log has no baseline snapshot");
    }
    const auto& b = log.records.front().payload;
    std::optional<Session> s;
    try {
        IngestOptions options;
        const auto delim = b.at("ingest").at("delimiter").get<std::string>();
        if (delim.size() != 1) throw Error(Errc::CorruptLog, "bad delimiter in baseline");
        options.delimiter = delim[0];
        options.numeric_threshold = b.at("ingest").at("numeric_threshold").get<double>();
        std::string csv = b.contains("csv") ? b.at("csv").get<std::string>()
                                            : unbase64(b.at("csv_base64").get<std::string>());
        s.emplace(std::move(csv), options, session_config_from_json(b.at("config")), mode,
                  b.at("dataset_id").get<std::string>());

        for (std::size_t i = 1; i < log.records.size(); ++i) {
            const auto& rec = log.records[i];
            switch (rec.type) {
                case RecordType::Baseline: throw Error(Errc::CorruptLog, "second baseline in log");
                case RecordType::Registration: {
                    const auto kind = rec.payload.at("kind").get<std::string>();
                    if (kind == "detector") {
                        s->register_detector(CustomDetectorSpec{rec.payload.at("code").get<std::string>(),
                                                                rec.payload.at("expression").get<std::string>(),
                                                                rec.payload.at("column").get<std::string>()});
                    } else {
                        s->register_wrangler(WranglerSpec{rec.payload.at("code").get<std::string>(),
                                                          rec.payload.at("rule").get<std::string>(),
                                                          rec.payload.at("name").get<std::string>()});
                    }
                    break;
                }
                case RecordType::Action: {
                    auto entry = entry_from_json(rec.payload);
                    if (entry.seq != s->history_.cursor() + 1) throw Error(Errc::CorruptLog, "action out of sequence");
                    s->commit(entry.delta);
                    s->history_.record(std::move(entry));
                    ++s->version_;
                    break;
                }
                case RecordType::Undo: s->undo(); break;
                case RecordType::Redo: s->redo(); break;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::CorruptLog, std::string("malformed log record: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::CorruptLog) throw;
        throw Error(Errc::CorruptLog, std::string("log does not replay: ") + e.what());
    }
    s->log_ = std::make_unique<LogWriter>(std::move(storage), FlushPolicy{s->config_.flush_every});
    s->log_->resume(log.valid_bytes);
    return std::move(*s);
}

}  // namespace gw
