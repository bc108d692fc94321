#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "gw/error.hpp"
#include "gw/script.hpp"
#include "gw/session.hpp"
#include "random_data.hpp"

using namespace gw;
using gw::testing::fixture_csv;

namespace {

const GroupKey kBhutan{"Country", "Bhutan", "Income"};
const GroupKey kChad{"Country", "Chad", "Income"};

void write_file(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

bool have_python() { return std::string(GW_PYTHON3).find("NOTFOUND") == std::string::npos && *GW_PYTHON3; }

// Runs the generated program and returns its output file, or nullopt on failure.
std::optional<std::string> run_python(const std::string& script, const std::string& csv) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() / ("gw_script_" + std::to_string(::getpid()) + "_" +
                                                               std::to_string(counter++));
    std::filesystem::create_directories(dir);
    write_file(dir / "s.py", script);
    write_file(dir / "in.csv", csv);
    const std::string cmd = std::string(GW_PYTHON3) + " " + (dir / "s.py").string() + " " + (dir / "in.csv").string() +
                            " " + (dir / "out.csv").string();
    if (std::system(cmd.c_str()) != 0) return std::nullopt;
    auto out = gw::testing::read_text((dir / "out.csv").string());
    std::filesystem::remove_all(dir);
    return out;
}

}  // namespace

TEST(Script, Sha256) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Script, Targets) {
    EXPECT_EQ(script_target_from_string("json"), ScriptTarget::Json);
    EXPECT_EQ(script_target_from_string("python"), ScriptTarget::Python);
    try {
        script_target_from_string("r");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnsupportedTarget);
    }
}

TEST(Script, JsonReplayFixture) {
    Session s(fixture_csv());
    s.apply({ActionKind::ImputeGroupMean, kBhutan, std::string("missing"), {}, ""});
    s.apply({ActionKind::DeleteRows, kChad, std::nullopt, {RowId{7}}, ""});
    const auto script = s.render_script(ScriptTarget::Json);
    const auto doc = nlohmann::json::parse(script);
    EXPECT_EQ(doc["format"], "gw-actions/1");
    EXPECT_EQ(doc["steps"].size(), 2u);
    EXPECT_EQ(replay_json_script(script, fixture_csv()).export_csv(), s.export_csv());
}

TEST(Script, EmptyHistory) {
    Session s(fixture_csv());
    const auto script = s.render_script(ScriptTarget::Json);
    EXPECT_TRUE(nlohmann::json::parse(script)["steps"].empty());
    EXPECT_EQ(replay_json_script(script, fixture_csv()).export_csv(), s.export_csv());
}

TEST(Script, UndoneActionsAbsent) {
    Session s(fixture_csv());
    s.apply({ActionKind::ImputeGroupMean, kBhutan, std::string("missing"), {}, ""});
    s.apply({ActionKind::DeleteRows, kChad, std::nullopt, {RowId{7}}, ""});
    s.undo();
    const auto doc = nlohmann::json::parse(s.render_script(ScriptTarget::Json));
    ASSERT_EQ(doc["steps"].size(), 1u);
    EXPECT_EQ(doc["steps"][0]["action"]["kind"], "impute_group_mean");
    EXPECT_EQ(replay_json_script(doc.dump(), fixture_csv()).export_csv(), s.export_csv());
}

TEST(Script, HashMismatchRejected) {
    Session s(fixture_csv());
    const auto script = s.render_script(ScriptTarget::Json);
    try {
        replay_json_script(script, fixture_csv() + "Chad,BS,1\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidAction);
    }
}

TEST(Script, JsonReplayRandom) {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 40; ++i) {
        const auto csv = gw::testing::random_csv(rng);
        Session s(csv);
        for (int step = 0; step < 8; ++step) {
            const auto a = gw::testing::random_action(s, rng);
            if (!a) break;
            try {
                s.apply(*a);
            } catch (const Error& e) {
                ASSERT_EQ(e.code(), Errc::InapplicableAction);
            }
            if (rng() % 4 == 0 && s.history().cursor() > 0) s.undo();
        }
        ASSERT_EQ(replay_json_script(s.render_script(ScriptTarget::Json), csv).export_csv(), s.export_csv());
    }
}

TEST(Script, PythonReplayFixture) {
    if (!have_python()) GTEST_SKIP() << "python3 not found";
    Session s(fixture_csv());
    s.apply({ActionKind::ImputeGroupMean, kBhutan, std::string("missing"), {}, ""});
    s.apply({ActionKind::DeleteRows, kChad, std::nullopt, {RowId{7}}, ""});
    s.apply({ActionKind::ConvertType, kBhutan, std::string("type_mismatch"), {}, ""});
    const auto out = run_python(s.render_script(ScriptTarget::Python), fixture_csv());
    ASSERT_TRUE(out.has_value());
    EXPECT_EQ(*out, s.export_csv());
}

TEST(Script, PythonReplayOddInputs) {
    if (!have_python()) GTEST_SKIP() << "python3 not found";
    const std::vector<std::string> inputs{
        "\xef\xbb\xbfName;Val\r\n\"a;b\";1,5\r\nc;\r\n\"q\"\"x\";2e3\r\n",
        "only\n1\n\n3\n",
        "c,n\n\"multi\nline\",0.1\nx,-0\ny,1e-7\nz,123456789012345678\n",
    };
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        IngestOptions opts;
        if (i == 0) opts.delimiter = ';';
        std::optional<Session> s;
        try {
            s.emplace(inputs[i], opts);
        } catch (const Error&) {
            continue;  // inputs without a categorical column cannot open a session
        }
        const auto out = run_python(s->render_script(ScriptTarget::Python), inputs[i]);
        ASSERT_TRUE(out.has_value()) << i;
        EXPECT_EQ(*out, s->export_csv()) << i;
    }
}

TEST(Script, PythonReplayRandom) {
    if (!have_python()) GTEST_SKIP() << "python3 not found";
    std::mt19937_64 rng(23);
    for (int i = 0; i < 8; ++i) {
        const auto csv = gw::testing::random_csv(rng);
        Session s(csv);
        for (int step = 0; step < 6; ++step) {
            const auto a = gw::testing::random_action(s, rng);
            if (!a) break;
            try {
                s.apply(*a);
            } catch (const Error&) {
            }
        }
        const auto out = run_python(s.render_script(ScriptTarget::Python), csv);
        ASSERT_TRUE(out.has_value());
        ASSERT_EQ(*out, s.export_csv()) << csv;
    }
}
