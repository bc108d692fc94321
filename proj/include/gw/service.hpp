#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "gw/error.hpp"
#include "gw/session.hpp"

namespace gw {

// Transport-neutral request. `path` is the raw (percent-encoded) path
// without the query string; `query` values are already decoded.
struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
    std::map<std::string, std::string> parts;  // multipart form fields by name
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

struct ServiceOptions {
    SessionConfig defaults;
    std::optional<std::filesystem::path> data_dir;  // one log file per session when set
};

int http_status(Errc code) noexcept;
Response problem(const Error& e);

// Session registry plus the endpoint table. Every endpoint delegates to a
// Session method; mutations on one session are serialized by its mutex.
class Service {
public:
    explicit Service(ServiceOptions options = {});

    Response handle(const Request& request);

    // Lists every route as (method, path template), for documentation checks.
    static std::vector<std::pair<std::string, std::string>> routes();

    std::size_t session_count() const;

private:
    struct Slot {
        std::mutex mutex;
        std::unique_ptr<Session> session;
    };

    Response create(const Request& r);
    std::shared_ptr<Slot> slot(const std::string& id) const;

    ServiceOptions options_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::uint64_t next_id_ = 1;
};

// Binds the service to cpp-httplib and blocks serving requests.
int serve_http(Service& service, const std::string& host, int port);

}  // namespace gw
