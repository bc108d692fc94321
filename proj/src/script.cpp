#include "gw/script.hpp"

#include <openssl/evp.h>

#include <cstdio>

#include "gw/error.hpp"

namespace gw {

std::string_view to_string(ScriptTarget t) noexcept { return t == ScriptTarget::Json ? "json" : "python"; }

ScriptTarget script_target_from_string(std::string_view s) {
    if (s == "json") return ScriptTarget::Json;
    if (s == "python") return ScriptTarget::Python;
    throw Error(Errc::UnsupportedTarget, "unsupported script target '" + std::string(s) + "'");
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(Errc::StorageFailure, "sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 15]);
    }
    return out;
}

namespace {

nlohmann::json ingest_json(const IngestOptions& o) {
    return nlohmann::json{{"delimiter", std::string(1, o.delimiter)}, {"numeric_threshold", o.numeric_threshold}};
}

nlohmann::json step_json(const ActionLogEntry& e) {
    auto set = nlohmann::json::array();
    for (const auto& c : e.delta.cell_changes) {
        set.push_back(nlohmann::json{{"row", c.row.value}, {"column", c.column}, {"value", to_json(c.after)}});
    }
    auto drop = nlohmann::json::array();
    for (const auto& d : e.delta.row_deletions) drop.push_back(d.row.value);
    return nlohmann::json{{"seq", e.seq}, {"action", to_json(e.action)}, {"set", std::move(set)}, {"drop", std::move(drop)}};
}

// Python literal for a cell value; JSON string syntax is valid Python.
std::string py_literal(const CellValue& v) {
    if (v.is_null()) return "None";
    if (v.is_number()) return python_float_repr(v.as_number());
    return nlohmann::json(v.as_text()).dump();
}

std::string py_string(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

}  // namespace

std::string render_json_script(const ScriptSource& source, std::span<const ActionLogEntry> effective) {
    auto steps = nlohmann::json::array();
    for (const auto& e : effective) steps.push_back(step_json(e));
    nlohmann::json doc{{"format", "gw-actions/1"},
                       {"source_sha256", sha256_hex(source.original_csv)},
                       {"ingest", ingest_json(source.options)},
                       {"steps", std::move(steps)}};
    return doc.dump(2) + "\n";
}

std::string render_python_script(const ScriptSource& source, std::span<const ActionLogEntry> effective) {
    std::string numeric = "[";
    bool first = true;
    for (const auto& c : source.columns) {
        if (c.kind != ColumnKind::Numeric) continue;
        if (!first) numeric += ", ";
        numeric += py_string(c.name);
        first = false;
    }
    numeric += "]";

    std::string out;
    out += "#!/usr/bin/env python3\n";
    out += "# Replays a recorded wrangling session.\n";
    out += "# source sha256: " + sha256_hex(source.original_csv) + "\n";
    out += "# usage: python3 script.py INPUT.csv OUTPUT.csv\n";
    out += "import csv\nimport hashlib\nimport io\nimport re\nimport sys\n\n";
    out += "SOURCE_SHA256 = \"" + sha256_hex(source.original_csv) + "\"\n";
    out += "DELIMITER = " + py_string(std::string(1, source.options.delimiter)) + "\n";
    out += "NUMERIC_COLUMNS = " + numeric + "\n";
    out += R"PY(NUMBER = re.compile(r"[+-]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][+-]?[0-9]+)?")
SPACE = " \t\r\n\f\v"


def parse_number(text):
    t = text.strip(SPACE)
    if not NUMBER.fullmatch(t):
        return None
    v = float(t)
    if v != v or v in (float("inf"), float("-inf")):
        return None
    return v


def render_number(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def quote(field):
    if field == "" or any(c in field for c in ",\"\r\n"):
        return '"' + field.replace('"', '""') + '"'
    return field


def load(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if hashlib.sha256(raw).hexdigest() != SOURCE_SHA256:
        sys.exit("input does not match the recorded source file")
    text = raw.decode("utf-8")
    if text.startswith("\ufeff"):
        text = text[1:]
    records = [r for r in csv.reader(io.StringIO(text, newline=""), delimiter=DELIMITER) if r]
    header = records[0]
    numeric = set(NUMERIC_COLUMNS)
    rows = {}
    for rid, rec in enumerate(records[1:], start=1):
        cells = []
        for name, field in zip(header, rec):
            if field == "":
                cells.append(None)
            elif name in numeric:
                v = parse_number(field)
                cells.append(field if v is None else v)
            else:
                cells.append(field)
        rows[rid] = cells
    return header, rows


def save(path, header, rows):
    lines = [",".join(quote(h) for h in header)]
    for rid in sorted(rows):
        out = []
        for v in rows[rid]:
            if v is None:
                out.append('""' if len(header) == 1 else "")
            elif isinstance(v, float):
                out.append(quote(render_number(v)))
            else:
                out.append(quote(v))
        lines.append(",".join(out))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("".join(line + "\n" for line in lines))


def main(argv):
    if len(argv) != 3:
        sys.exit("usage: script.py INPUT.csv OUTPUT.csv")
    header, rows = load(argv[1])
    col = {name: i for i, name in enumerate(header)}
)PY";
    if (effective.empty()) out += "    # no recorded actions\n";
    for (const auto& e : effective) {
        out += "\n    # step " + std::to_string(e.seq) + ": " + std::string(to_string(e.action.kind)) + " on " +
               e.action.target.canonical() + "\n";
        for (const auto& c : e.delta.cell_changes) {
            out += "    rows[" + std::to_string(c.row.value) + "][col[" + py_string(c.column) +
                   "]] = " + py_literal(c.after) + "\n";
        }
        for (const auto& d : e.delta.row_deletions) out += "    del rows[" + std::to_string(d.row.value) + "]\n";
    }
    out += R"PY(
    save(argv[2], header, rows)


if __name__ == "__main__":
    main(sys.argv)
)PY";
    return out;
}

std::string render_script(ScriptTarget target, const ScriptSource& source,
                          std::span<const ActionLogEntry> effective) {
    return target == ScriptTarget::Json ? render_json_script(source, effective)
                                        : render_python_script(source, effective);
}

Dataset replay_json_script(std::string_view script, std::string_view original_csv) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(script);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidAction, std::string("script is not JSON: ") + e.what());
    }
    try {
        if (doc.at("format") != "gw-actions/1") throw Error(Errc::InvalidAction, "unknown script format");
        if (doc.at("source_sha256") != sha256_hex(original_csv)) {
            throw Error(Errc::InvalidAction, "input does not match the recorded source file");
        }
        IngestOptions options;
        const auto delim = doc.at("ingest").at("delimiter").get<std::string>();
        if (delim.size() != 1) throw Error(Errc::InvalidAction, "delimiter must be one byte");
        options.delimiter = delim[0];
        options.numeric_threshold = doc.at("ingest").at("numeric_threshold").get<double>();
        auto ds = Dataset::ingest_csv(original_csv, options);
        for (const auto& step : doc.at("steps")) {
            SnapshotDelta d;
            d.seq = step.at("seq").get<std::uint64_t>();
            for (const auto& s : step.at("set")) {
                const RowId row{s.at("row").get<std::uint64_t>()};
                const auto column = s.at("column").get<std::string>();
                d.cell_changes.push_back(
                    CellChange{row, column, ds.get_cell(row, column), cell_from_json(s.at("value"))});
            }
            for (const auto& r : step.at("drop")) {
                const RowId row{r.get<std::uint64_t>()};
                d.row_deletions.push_back(ds.row_image(row));
            }
            ds.apply_delta(d);
        }
        return ds;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidAction, std::string("malformed script: ") + e.what());
    }
}

}  // namespace gw
