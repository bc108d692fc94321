#include "gw/service.hpp"

#include <httplib.h>

#include <charconv>
#include <regex>

#include "gw/error.hpp"

namespace gw {

int http_status(Errc code) noexcept {
    switch (code) {
        case Errc::MalformedCsv:
        case Errc::EmptyDataset:
        case Errc::NoCategoricalColumns:
        case Errc::NoNumericColumns:
        case Errc::InvalidConfig:
        case Errc::InvalidAction:
        case Errc::UnsupportedTarget:
        case Errc::BadRequest: return 400;
        case Errc::UnknownDataset:
        case Errc::UnknownRow:
        case Errc::UnknownColumn:
        case Errc::UnknownGroup:
        case Errc::UnknownErrorCode: return 404;
        case Errc::DuplicateCode:
        case Errc::StaleDelta:
        case Errc::SequenceGap:
        case Errc::NothingToUndo:
        case Errc::NothingToRedo: return 409;
        case Errc::ExpressionParseError:
        case Errc::ExpressionTypeError:
        case Errc::InapplicableAction:
        case Errc::NoSuchErrorInGroup:
        case Errc::NoAnchor: return 422;
        case Errc::StorageFailure:
        case Errc::CorruptLog: return 500;
    }
    return 500;
}

Response problem(const Error& e) {
    const int status = http_status(e.code());
    nlohmann::json j{{"type", "about:blank"},
                     {"title", errc_name(e.code())},
                     {"status", status},
                     {"detail", e.what()},
                     {"code", errc_name(e.code())}};
    if (e.offset()) j["offset"] = *e.offset();
    return Response{status, "application/problem+json", j.dump()};
}

namespace {

Response ok(const nlohmann::json& j, int status = 200) { return Response{status, "application/json", j.dump()}; }

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            unsigned v = 0;
            auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
            if (ec == std::errc() && p == s.data() + i + 3) {
                out.push_back(static_cast<char>(v));
                i += 2;
                continue;
            }
        }
        out.push_back(s[i]);
    }
    return out;
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> out;
    std::size_t at = 0;
    while (at <= path.size()) {
        auto next = path.find('/', at);
        if (next == std::string_view::npos) next = path.size();
        if (next > at) out.push_back(percent_decode(path.substr(at, next - at)));
        at = next + 1;
    }
    return out;
}

nlohmann::json parse_body(const std::string& body) {
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::BadRequest, std::string("request body is not JSON: ") + e.what());
    }
}

template <class T>
T query_number(const Request& r, const std::string& name, T fallback) {
    auto it = r.query.find(name);
    if (it == r.query.end() || it->second.empty()) return fallback;
    T v{};
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw Error(Errc::BadRequest, "query parameter '" + name + "' must be a number");
    }
    return v;
}

std::string query_string(const Request& r, const std::string& name, std::string fallback) {
    auto it = r.query.find(name);
    return it == r.query.end() ? fallback : it->second;
}

nlohmann::json session_info(const Session& s) {
    auto schema = nlohmann::json::array();
    for (const auto& c : s.dataset().columns()) {
        schema.push_back(nlohmann::json{{"name", c.name}, {"kind", to_string(c.kind)}, {"position", c.position}});
    }
    auto pairs = nlohmann::json::array();
    for (auto cat : s.groups().categorical_columns()) {
        for (auto num : s.groups().numeric_columns_for(cat)) {
            pairs.push_back(nlohmann::json::array(
                {s.dataset().columns()[cat].name, s.dataset().columns()[num].name}));
        }
    }
    const auto counts = s.error_counts();
    std::size_t total = 0;
    for (const auto& [code, n] : counts) total += n;
    return nlohmann::json{
        {"dataset_id", s.id()},
        {"version", s.version()},
        {"rows", s.dataset().live_count()},
        {"schema", std::move(schema)},
        {"config", to_json(s.config())},
        {"group_summary", {{"count", s.groups().group_count()}, {"pairs", std::move(pairs)}}},
        {"error_summary", {{"total", total}, {"by_code", counts}}},
        {"history", {{"cursor", s.history().cursor()}, {"entries", s.history().entries().size()}}}};
}

CustomDetectorSpec detector_from_json(const nlohmann::json& j) {
    try {
        return CustomDetectorSpec{j.at("code").get<std::string>(), j.at("expression").get<std::string>(),
                                  j.value("column", std::string())};
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::BadRequest, std::string("detector needs code and expression: ") + e.what());
    }
}

WranglerSpec wrangler_from_json(const nlohmann::json& j) {
    try {
        return WranglerSpec{j.at("code").get<std::string>(), j.at("rule").get<std::string>(),
                            j.value("name", std::string())};
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::BadRequest, std::string("wrangler needs code and rule: ") + e.what());
    }
}

}  // namespace

Service::Service(ServiceOptions options) : options_(std::move(options)) {
    options_.defaults.validate();
    if (!options_.data_dir) return;
    std::filesystem::create_directories(*options_.data_dir);
    for (const auto& entry : std::filesystem::directory_iterator(*options_.data_dir)) {
        if (entry.path().extension() != ".gwlog") continue;
        auto storage = std::make_shared<FileLogStorage>(entry.path());
        auto slot = std::make_shared<Slot>();
        slot->session = std::make_unique<Session>(Session::recover(storage));
        const auto id = slot->session->id();
        if (id.size() > 1 && id[0] == 'd') {
            std::uint64_t n = 0;
            std::from_chars(id.data() + 1, id.data() + id.size(), n);
            next_id_ = std::max(next_id_, n + 1);
        }
        sessions_[id] = std::move(slot);
    }
}

std::vector<std::pair<std::string, std::string>> Service::routes() {
    return {{"POST", "/datasets"},
            {"GET", "/datasets/{id}"},
            {"GET", "/datasets/{id}/errors"},
            {"GET", "/datasets/{id}/export"},
            {"GET", "/datasets/{id}/charts/{cat}/{num}"},
            {"GET", "/datasets/{id}/groups/ranked"},
            {"GET", "/datasets/{id}/groups/{key}/suggestions"},
            {"POST", "/datasets/{id}/preview"},
            {"POST", "/datasets/{id}/apply"},
            {"POST", "/datasets/{id}/undo"},
            {"POST", "/datasets/{id}/redo"},
            {"GET", "/datasets/{id}/script"},
            {"POST", "/datasets/{id}/detectors"},
            {"POST", "/datasets/{id}/wranglers"},
            {"POST", "/datasets/{id}/flush"}};
}

std::size_t Service::session_count() const {
    std::shared_lock lock(sessions_mutex_);
    return sessions_.size();
}

std::shared_ptr<Service::Slot> Service::slot(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(Errc::UnknownDataset, "unknown dataset '" + id + "'");
    return it->second;
}

Response Service::create(const Request& r) {
    std::string csv = r.body;
    if (auto it = r.parts.find("file"); it != r.parts.end()) csv = it->second;

    IngestOptions ingest;
    const auto delim = query_string(r, "delimiter", ",");
    if (delim.size() != 1) throw Error(Errc::BadRequest, "delimiter must be a single byte");
    ingest.delimiter = delim[0];
    ingest.numeric_threshold = query_number<double>(r, "numeric_threshold", ingest.numeric_threshold);

    SessionConfig config = options_.defaults;
    std::string config_text;
    if (auto it = r.parts.find("config"); it != r.parts.end()) config_text = it->second;
    if (auto it = r.query.find("config"); it != r.query.end()) config_text = it->second;
    if (!config_text.empty()) config = session_config_from_json(parse_body(config_text), config);

    std::string id;
    {
        std::unique_lock lock(sessions_mutex_);
        id = "d" + std::to_string(next_id_++);
    }
    auto slot = std::make_shared<Slot>();
    slot->session = std::make_unique<Session>(std::move(csv), ingest, config, CommitMode::Incremental, id);
    if (options_.data_dir) {
        slot->session->attach_storage(std::make_shared<FileLogStorage>(*options_.data_dir / (id + ".gwlog")));
    }
    auto body = session_info(*slot->session);
    {
        std::unique_lock lock(sessions_mutex_);
        sessions_[id] = std::move(slot);
    }
    return ok(body, 201);
}

Response Service::handle(const Request& r) {
    try {
        const auto seg = split_path(r.path);
        if (seg.empty() || seg[0] != "datasets") throw Error(Errc::UnknownDataset, "no route for " + r.path);
        if (seg.size() == 1) {
            if (r.method == "POST") return create(r);
            throw Error(Errc::BadRequest, "method not allowed");
        }
        auto s = slot(seg[1]);
        std::lock_guard lock(s->mutex);
        Session& session = *s->session;
        const auto n = seg.size();
        const auto& m = r.method;

        if (n == 2 && m == "GET") return ok(session_info(session));
        if (n == 3 && m == "GET" && seg[2] == "errors") {
            auto records = nlohmann::json::array();
            for (const auto& e : session.records()) {
                records.push_back(nlohmann::json{{"row", e.row ? nlohmann::json(e.row->value) : nlohmann::json()},
                                                 {"column", e.column},
                                                 {"code", e.code},
                                                 {"group", e.group.canonical()}});
            }
            return ok(nlohmann::json{{"version", session.version()}, {"records", std::move(records)}});
        }
        if (n == 3 && m == "GET" && seg[2] == "export") return Response{200, "text/csv", session.export_csv()};
        if (n == 5 && m == "GET" && seg[2] == "charts") {
            const auto sampling = sampling_from_string(query_string(r, "sampling", "error_first"));
            const auto k = query_number<std::size_t>(r, "k", session.config().sample_k);
            const auto seed = query_number<std::uint64_t>(r, "seed", kDefaultSampleSeed);
            auto j = to_json(session.chart(seg[3], seg[4], sampling, k, seed));
            j["version"] = session.version();
            return ok(j);
        }
        if (n == 4 && m == "GET" && seg[2] == "groups" && seg[3] == "ranked") {
            auto groups = nlohmann::json::array();
            for (const auto& g : session.ranked_groups()) groups.push_back(to_json(g));
            return ok(nlohmann::json{{"version", session.version()}, {"groups", std::move(groups)}});
        }
        if (n == 5 && m == "GET" && seg[2] == "groups" && seg[4] == "suggestions") {
            const auto code = query_string(r, "code", "");
            if (code.empty()) throw Error(Errc::BadRequest, "query parameter 'code' is required");
            const auto key = GroupKey::parse(seg[3]);
            auto list = nlohmann::json::array();
            for (const auto& sug : session.suggest(key, code)) list.push_back(to_json(sug));
            return ok(nlohmann::json{
                {"version", session.version()}, {"group", key.canonical()}, {"code", code}, {"suggestions", list}});
        }
        if (n == 3 && m == "POST") {
            const auto& op = seg[2];
            if (op == "preview") return ok(to_json(session.preview(action_from_json(parse_body(r.body)))));
            if (op == "apply") return ok(to_json(session.apply(action_from_json(parse_body(r.body)))));
            if (op == "undo") return ok(to_json(session.undo()));
            if (op == "redo") return ok(to_json(session.redo()));
            if (op == "detectors") {
                const auto spec = detector_from_json(parse_body(r.body));
                session.register_detector(spec);
                return ok(nlohmann::json{{"version", session.version()}, {"code", spec.code}}, 201);
            }
            if (op == "wranglers") {
                const auto id = session.register_wrangler(wrangler_from_json(parse_body(r.body)));
                return ok(nlohmann::json{{"version", session.version()}, {"wrangler", id}}, 201);
            }
            if (op == "flush") {
                session.flush();
                return ok(nlohmann::json{{"version", session.version()},
                                         {"persisted_bytes", session.log() ? session.log()->persisted_bytes() : 0}});
            }
        }
        if (n == 3 && m == "GET" && seg[2] == "script") {
            const auto target = script_target_from_string(query_string(r, "target", "json"));
            return Response{200, target == ScriptTarget::Json ? "application/json" : "text/x-python",
                            session.render_script(target)};
        }
        throw Error(Errc::UnknownDataset, "no route for " + m + " " + r.path);
    } catch (const Error& e) {
        return problem(e);
    } catch (const std::exception& e) {
        return problem(Error(Errc::BadRequest, e.what()));
    }
}

int serve_http(Service& service, const std::string& host, int port) {
    httplib::Server server;
    auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
        Request r;
        r.method = req.method;
        r.path = req.target.substr(0, req.target.find('?'));
        for (const auto& [k, v] : req.params) r.query[k] = v;
        r.body = req.body;
        for (const auto& [name, part] : req.files) r.parts[name] = part.content;
        const auto out = service.handle(r);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    if (!server.listen(host, port)) return 1;
    return 0;
}

}  // namespace gw
