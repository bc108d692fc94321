#include <gtest/gtest.h>

#include <filesystem>

#include "gw/service.hpp"
#include "random_data.hpp"

using namespace gw;
using gw::testing::fixture_csv;

namespace {

Response call(Service& svc, std::string method, std::string path, std::string body = "",
              std::map<std::string, std::string> query = {}) {
    Request r;
    r.method = std::move(method);
    r.path = std::move(path);
    r.body = std::move(body);
    r.query = std::move(query);
    return svc.handle(r);
}

nlohmann::json js(const Response& r) { return nlohmann::json::parse(r.body); }

std::string upload(Service& svc, const std::string& csv = fixture_csv(), std::map<std::string, std::string> q = {}) {
    const auto r = call(svc, "POST", "/datasets", csv, std::move(q));
    EXPECT_EQ(r.status, 201) << r.body;
    return js(r)["dataset_id"];
}

const std::string kImpute =
    R"j({"kind":"impute_group_mean","target":"Income|Country=Bhutan","scope":{"code":"missing"}})j";

}  // namespace

TEST(Service, UploadFixture) {
    Service svc;
    const auto r = call(svc, "POST", "/datasets", fixture_csv());
    ASSERT_EQ(r.status, 201);
    const auto j = js(r);
    EXPECT_EQ(j["error_summary"]["total"], 7);
    EXPECT_EQ(j["error_summary"]["by_code"].size(), 4u);
    EXPECT_EQ(j["rows"], 8);
    EXPECT_EQ(j["group_summary"]["count"], 5);
    EXPECT_EQ(svc.session_count(), 1u);
}

TEST(Service, UploadErrors) {
    Service svc;
    auto r = call(svc, "POST", "/datasets", "Country,Income\n");
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.content_type, "application/problem+json");
    EXPECT_EQ(js(r)["code"], "EmptyDataset");
    r = call(svc, "POST", "/datasets", "a\n\"unterminated\n");
    EXPECT_EQ(r.status, 400);
    r = call(svc, "POST", "/datasets", fixture_csv(), {{"config", R"j({"outlier_k":-2})j"}});
    EXPECT_EQ(js(r)["code"], "InvalidConfig");
    EXPECT_EQ(svc.session_count(), 0u);
}

TEST(Service, ConfigThroughQuery) {
    Service svc;
    const auto id = upload(svc, fixture_csv(), {{"config", R"j({"outlier_k":10})j"}});
    const auto j = js(call(svc, "GET", "/datasets/" + id));
    EXPECT_FALSE(j["error_summary"]["by_code"].contains("outlier"));
}

TEST(Service, MultipartUpload) {
    Service svc;
    Request r;
    r.method = "POST";
    r.path = "/datasets";
    r.parts["file"] = fixture_csv();
    r.parts["config"] = R"j({"min_group_size":1})j";
    const auto res = svc.handle(r);
    ASSERT_EQ(res.status, 201);
    EXPECT_FALSE(js(res)["error_summary"]["by_code"].contains("incomplete_group"));
}

TEST(Service, ErrorsAndExport) {
    Service svc;
    const auto id = upload(svc);
    const auto e = js(call(svc, "GET", "/datasets/" + id + "/errors"));
    EXPECT_EQ(e["records"].size(), 7u);
    const auto x = call(svc, "GET", "/datasets/" + id + "/export");
    EXPECT_EQ(x.content_type, "text/csv");
    EXPECT_EQ(x.body.substr(0, 22), "Country,Degree,Income\n");
}

TEST(Service, Charts) {
    Service svc;
    const auto id = upload(svc);
    auto r = call(svc, "GET", "/datasets/" + id + "/charts/Country/Income", "", {{"k", "1"}});
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(js(r)["groups"].size(), 2u);
    r = call(svc, "GET", "/datasets/" + id + "/charts/Country/Income", "", {{"sampling", "distance"}, {"k", "2"}});
    const auto chad = js(r)["groups"][1]["points"];
    ASSERT_EQ(chad.size(), 3u);
    EXPECT_EQ(chad[1]["row"], 6);
    EXPECT_EQ(chad[2]["row"], 5);
    EXPECT_EQ(call(svc, "GET", "/datasets/" + id + "/charts/Country/Nope").status, 404);
    EXPECT_EQ(call(svc, "GET", "/datasets/" + id + "/charts/Country/Income", "", {{"sampling", "x"}}).status, 400);
}

TEST(Service, SuggestPreviewApplyUndoRedo) {
    Service svc;
    const auto id = upload(svc);
    const auto base = "/datasets/" + id;
    auto r = call(svc, "GET", base + "/groups/Income%7CCountry%3DBhutan/suggestions", "", {{"code", "missing"}});
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(js(r)["suggestions"][0]["action"]["kind"], "impute_group_mean");
    r = call(svc, "POST", base + "/preview", kImpute);
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(js(r)["version"], 0);
    r = call(svc, "POST", base + "/apply", kImpute);
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(js(r)["version"], 1);
    EXPECT_EQ(call(svc, "POST", base + "/apply", kImpute).status, 422);
    EXPECT_EQ(js(call(svc, "POST", base + "/undo"))["version"], 2);
    EXPECT_EQ(js(call(svc, "POST", base + "/redo"))["version"], 3);
    EXPECT_EQ(call(svc, "POST", base + "/redo").status, 409);
    const auto ranked = js(call(svc, "GET", base + "/groups/ranked"));
    EXPECT_EQ(ranked["groups"].size(), 5u);
}

TEST(Service, StatusMapping) {
    Service svc;
    const auto id = upload(svc);
    const auto base = "/datasets/" + id;
    EXPECT_EQ(call(svc, "GET", "/datasets/nope").status, 404);
    EXPECT_EQ(call(svc, "POST", base + "/undo").status, 409);
    EXPECT_EQ(call(svc, "POST", base + "/apply", "not json").status, 400);
    EXPECT_EQ(call(svc, "POST", base + "/apply", R"j({"kind":"teleport"})j").status, 400);
    EXPECT_EQ(call(svc, "GET", base + "/groups/Income%7CCountry%3DChad/suggestions", "", {{"code", "missing"}}).status,
              422);
    EXPECT_EQ(call(svc, "GET", base + "/groups/Income%7CCountry%3DMali/suggestions", "", {{"code", "missing"}}).status,
              404);
    EXPECT_EQ(call(svc, "GET", base + "/script", "", {{"target", "r"}}).status, 400);
    EXPECT_EQ(call(svc, "POST", base + "/detectors", R"j({"code":"missing","expression":"value < 0"})j").status, 409);
    const auto bad = call(svc, "POST", base + "/detectors", R"j({"code":"neg","expression":"value <"})j");
    EXPECT_EQ(bad.status, 422);
    EXPECT_TRUE(js(bad).contains("offset"));
    EXPECT_EQ(call(svc, "POST", base + "/wranglers", R"j({"code":"xyz","rule":"set_constant(0)"})j").status, 404);
    EXPECT_EQ(http_status(Errc::StorageFailure), 500);
    EXPECT_EQ(http_status(Errc::CorruptLog), 500);
    EXPECT_EQ(http_status(Errc::NoAnchor), 422);
}

TEST(Service, DetectorsAndWranglers) {
    Service svc;
    const auto id = upload(svc);
    const auto base = "/datasets/" + id;
    auto r = call(svc, "POST", base + "/detectors", R"j({"code":"non_positive","expression":"value <= 0","column":"Income"})j");
    ASSERT_EQ(r.status, 201) << r.body;
    r = call(svc, "POST", base + "/wranglers", R"j({"code":"non_positive","rule":"set_constant(1)"})j");
    ASSERT_EQ(r.status, 201) << r.body;
    EXPECT_EQ(js(r)["wrangler"], "non_positive#1");
    r = call(svc, "GET", base + "/groups/Income%7CCountry%3DBhutan/suggestions", "", {{"code", "non_positive"}});
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(js(r)["suggestions"].size(), 2u);
}

TEST(Service, Script) {
    Service svc;
    const auto id = upload(svc);
    call(svc, "POST", "/datasets/" + id + "/apply", kImpute);
    auto r = call(svc, "GET", "/datasets/" + id + "/script");
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(js(r)["steps"].size(), 1u);
    r = call(svc, "GET", "/datasets/" + id + "/script", "", {{"target", "python"}});
    EXPECT_EQ(r.content_type, "text/x-python");
}

TEST(Service, PersistsAndRecovers) {
    const auto dir = std::filesystem::temp_directory_path() / "gw_service_test";
    std::filesystem::remove_all(dir);
    std::string id;
    std::string exported;
    {
        ServiceOptions o;
        o.data_dir = dir;
        Service svc(o);
        id = upload(svc);
        call(svc, "POST", "/datasets/" + id + "/apply", kImpute);
        EXPECT_EQ(call(svc, "POST", "/datasets/" + id + "/flush").status, 200);
        exported = call(svc, "GET", "/datasets/" + id + "/export").body;
    }
    ServiceOptions o;
    o.data_dir = dir;
    Service svc(o);
    EXPECT_EQ(svc.session_count(), 1u);
    EXPECT_EQ(call(svc, "GET", "/datasets/" + id + "/export").body, exported);
    EXPECT_NE(upload(svc), id);
    std::filesystem::remove_all(dir);
}

TEST(Service, RoutesDocumented) {
    const auto spec = nlohmann::json::parse(gw::testing::read_text(std::string(GW_SOURCE_DIR) + "/docs/openapi.json"));
    for (const auto& [method, path] : Service::routes()) {
        std::string m = method;
        for (auto& c : m) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        ASSERT_TRUE(spec["paths"].contains(path)) << path;
        EXPECT_TRUE(spec["paths"][path].contains(m)) << method << " " << path;
    }
}
