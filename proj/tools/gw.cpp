#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gw/bench.hpp"
#include "gw/error.hpp"
#include "gw/script.hpp"
#include "gw/service.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

char single_char(const std::string& s) {
    if (s.size() != 1) throw std::runtime_error("delimiter must be a single byte");
    return s[0];
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gw: group-based anomaly detection and repair engine"};
    app.require_subcommand(1);

    // bench
    auto* bench = app.add_subcommand("bench", "Time repair ops on the incremental path and a full-rescan baseline");
    std::string bench_csv;
    std::size_t ops = 50;
    std::vector<std::string> mix{"remove", "impute"};
    std::uint64_t seed = 1;
    bool as_json = false;
    bool no_full = false;
    std::string bench_delim = ",";
    bench->add_option("--csv", bench_csv, "Input CSV file")->required();
    bench->add_option("--ops", ops, "Number of operations")->capture_default_str();
    bench->add_option("--mix", mix, "Op kinds to draw from (remove, impute)")->delimiter(',')->capture_default_str();
    bench->add_option("--seed", seed, "Workload seed")->capture_default_str();
    bench->add_option("--delimiter", bench_delim, "CSV delimiter")->capture_default_str();
    bench->add_flag("--json", as_json, "Print the report as JSON");
    bench->add_flag("--no-full", no_full, "Skip the full-rescan baseline");

    // gen
    auto* gen = app.add_subcommand("gen", "Write a seeded synthetic dataset");
    gw::bench::SyntheticSpec spec;
    std::string gen_out = "-";
    gen->add_option("--rows", spec.rows)->capture_default_str();
    gen->add_option("--categorical", spec.categorical)->capture_default_str();
    gen->add_option("--numeric", spec.numeric)->capture_default_str();
    gen->add_option("--seed", spec.seed)->capture_default_str();
    gen->add_option("--out", gen_out, "Output path ('-' for stdout)")->capture_default_str();

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON API");
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir;
    std::size_t flush_every = 3;
    serve->add_option("--host", host)->envname("GW_HOST")->capture_default_str();
    serve->add_option("--port", port)->envname("GW_PORT")->capture_default_str();
    serve->add_option("--data-dir", data_dir, "Directory for session logs")->envname("GW_DATA_DIR");
    serve->add_option("--flush-every", flush_every, "Flush the log every N updates")
        ->envname("GW_FLUSH_EVERY")
        ->capture_default_str();

    // replay
    auto* replay = app.add_subcommand("replay", "Apply a JSON action-list script to the original CSV");
    std::string script_path;
    std::string replay_csv;
    std::string replay_out = "-";
    replay->add_option("--script", script_path)->required();
    replay->add_option("--csv", replay_csv)->required();
    replay->add_option("--out", replay_out)->capture_default_str();

    // detect
    auto* detect = app.add_subcommand("detect", "Print the error records of a CSV file");
    std::string detect_csv;
    double outlier_k = 2.0;
    std::size_t min_group = 2;
    std::string detect_delim = ",";
    detect->add_option("--csv", detect_csv)->required();
    detect->add_option("--outlier-k", outlier_k)->capture_default_str();
    detect->add_option("--min-group-size", min_group)->capture_default_str();
    detect->add_option("--delimiter", detect_delim)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*bench) {
            gw::bench::Options options;
            options.ops = ops;
            options.seed = seed;
            options.run_full = !no_full;
            options.mix.clear();
            for (const auto& m : mix) options.mix.push_back(gw::bench::op_kind_from_string(m));
            gw::IngestOptions ingest;
            ingest.delimiter = single_char(bench_delim);
            const auto report = gw::bench::run(read_file(bench_csv), options, ingest);
            std::cout << (as_json ? gw::bench::to_json(report).dump(2) + "\n" : gw::bench::to_text(report));
            return report.equivalent ? 0 : 3;
        }
        if (*gen) {
            write_output(gen_out, gw::bench::generate_csv(spec));
            return 0;
        }
        if (*serve) {
            gw::ServiceOptions options;
            options.defaults.flush_every = flush_every;
            if (!data_dir.empty()) options.data_dir = data_dir;
            gw::Service service(options);
            std::fprintf(stderr, "listening on %s:%d\n", host.c_str(), port);
            return gw::serve_http(service, host, port);
        }
        if (*replay) {
            const auto ds = gw::replay_json_script(read_file(script_path), read_file(replay_csv));
            write_output(replay_out, ds.export_csv());
            return 0;
        }
        if (*detect) {
            gw::SessionConfig config;
            config.outlier_k = outlier_k;
            config.min_group_size = min_group;
            gw::IngestOptions ingest;
            ingest.delimiter = single_char(detect_delim);
            gw::Session session(read_file(detect_csv), ingest, config);
            for (const auto& e : session.records()) {
                std::cout << (e.row ? std::to_string(e.row->value) : std::string("-")) << '\t' << e.column << '\t'
                          << e.code << '\t' << e.group.canonical() << '\n';
            }
            return 0;
        }
    } catch (const gw::Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", std::string(gw::errc_name(e.code())).c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
