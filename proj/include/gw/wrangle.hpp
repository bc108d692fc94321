#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gw/delta.hpp"
#include "gw/detect.hpp"
#include "gw/groups.hpp"

namespace gw {

enum class ActionKind : std::uint8_t { DeleteRows, ImputeGroupMean, ConvertType, Custom };

std::string_view to_string(ActionKind k) noexcept;
ActionKind action_kind_from_string(std::string_view s);  // throws InvalidAction

// Suggestion tie-break order: impute, convert, custom, delete.
int kind_priority(ActionKind k) noexcept;

// A parameterized repair of one group. Scope is either every row carrying
// `scope_code` in the target group or an explicit row set.
struct RepairAction {
    ActionKind kind = ActionKind::DeleteRows;
    GroupKey target;
    std::optional<std::string> scope_code;
    std::vector<RowId> scope_rows;  // ascending; used when scope_code is absent
    std::string wrangler;           // custom wranglers only

    friend bool operator==(const RepairAction&, const RepairAction&) = default;
};

nlohmann::json to_json(const RepairAction& a);
RepairAction action_from_json(const nlohmann::json& j);  // throws InvalidAction
std::string canonical_string(const RepairAction& a);     // compact JSON, sorted keys

// A custom per-cell repair rule, one of
//   set_constant(expr)   scale(expr)   set(expr)   set_group_mean()   delete_row()
// where expr is in the detector expression language.
struct WranglerSpec {
    std::string code;  // error code the wrangler repairs
    std::string rule;
    std::string name;  // optional; defaults to "<code>#<n>"

    friend bool operator==(const WranglerSpec&, const WranglerSpec&) = default;
};

class WranglerRegistry {
public:
    enum class Op : std::uint8_t { SetConstant, Scale, Set, SetGroupMean, DeleteRow };

    struct Entry {
        std::string id;
        WranglerSpec spec;
        Op op = Op::SetConstant;
        std::optional<expr::Expression> argument;
    };

    // Throws UnknownErrorCode, ExpressionParseError, ExpressionTypeError,
    // InvalidConfig (unknown rule), DuplicateCode (name already taken).
    const Entry& register_wrangler(const DetectorSet& detectors, const WranglerSpec& spec);

    const Entry* find(std::string_view id) const;
    std::vector<const Entry*> for_code(std::string_view code) const;  // registration order
    const std::vector<Entry>& entries() const noexcept { return entries_; }

private:
    std::vector<Entry> entries_;
};

struct WrangleConfig {
    // Impute from the group's non-outlier values only.
    bool impute_clean_only = false;
};

// Kinds offered for an error code, built-ins in table order; custom
// wranglers are appended by the caller.
std::vector<ActionKind> applicable_kinds(std::string_view code, const DetectorSet& detectors);

// Rows an action touches. Throws UnknownGroup, InvalidAction (explicit rows
// outside the group), UnknownErrorCode.
std::vector<RowId> scoped_rows(const RepairAction& a, const Dataset& ds, const GroupSet& groups,
                               const ErrorStore& store, const DetectorSet& detectors);

// Lenient text-to-number conversion used by convert_type.
std::optional<double> convert_text(std::string_view text);

// Turns an action into the delta it would commit. Throws InapplicableAction
// when the action would change nothing or has no usable input.
SnapshotDelta plan_action(const RepairAction& a, const Dataset& ds, const GroupSet& groups, const ErrorStore& store,
                          const DetectorSet& detectors, const WranglerRegistry& wranglers,
                          const WrangleConfig& config);

struct RepairSuggestion {
    RepairAction action;
    std::size_t predicted_resolved = 0;
    std::size_t predicted_new_errors = 0;
    std::size_t rank = 0;
};

nlohmann::json to_json(const RepairSuggestion& s);

// Sorts by (new errors asc, resolved desc, kind priority, serialization) and
// assigns ranks from 1.
void rank_suggestions(std::vector<RepairSuggestion>& s);

}  // namespace gw
