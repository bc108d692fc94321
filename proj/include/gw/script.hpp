#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gw/dataset.hpp"
#include "gw/history.hpp"

namespace gw {

enum class ScriptTarget : std::uint8_t { Json, Python };

std::string_view to_string(ScriptTarget t) noexcept;
ScriptTarget script_target_from_string(std::string_view s);  // throws UnsupportedTarget

std::string sha256_hex(std::string_view bytes);

struct ScriptSource {
    std::string_view original_csv;
    IngestOptions options;
    std::vector<ColumnMeta> columns;
};

// Action-list document:
//   {"format": "gw-actions/1", "source_sha256": hex, "ingest": {...},
//    "steps": [{"seq", "action", "set": [{"row","column","value"}], "drop": [row...]}]}
std::string render_json_script(const ScriptSource& source, std::span<const ActionLogEntry> effective);

// Stand-alone Python 3 program (stdlib only):
//   python3 script.py INPUT.csv OUTPUT.csv
// writes the canonical export of the wrangled dataset.
std::string render_python_script(const ScriptSource& source, std::span<const ActionLogEntry> effective);

std::string render_script(ScriptTarget target, const ScriptSource& source,
                          std::span<const ActionLogEntry> effective);

// Re-applies a JSON action list to the original bytes and returns the
// resulting dataset. Throws InvalidAction on a hash mismatch or bad document.
Dataset replay_json_script(std::string_view script, std::string_view original_csv);

}  // namespace gw
