#include "gw/wrangle.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "gw/error.hpp"

namespace gw {

namespace {

constexpr std::string_view kKindNames[] = {"delete_rows", "impute_group_mean", "convert_type", "custom"};

}  // namespace

std::string_view to_string(ActionKind k) noexcept { return kKindNames[static_cast<int>(k)]; }

ActionKind action_kind_from_string(std::string_view s) {
    for (int i = 0; i < 4; ++i) {
        if (kKindNames[i] == s) return static_cast<ActionKind>(i);
    }
    throw Error(Errc::InvalidAction, "unknown action kind '" + std::string(s) + "'");
}

int kind_priority(ActionKind k) noexcept {
    switch (k) {
        case ActionKind::ImputeGroupMean: return 0;
        case ActionKind::ConvertType: return 1;
        case ActionKind::Custom: return 2;
        case ActionKind::DeleteRows: return 3;
    }
    return 4;
}

// ------------------------------------------------------------------- JSON

nlohmann::json to_json(const RepairAction& a) {
    nlohmann::json scope = nlohmann::json::object();
    if (a.scope_code) {
        scope["code"] = *a.scope_code;
    } else {
        auto rows = nlohmann::json::array();
        for (auto r : a.scope_rows) rows.push_back(r.value);
        scope["rows"] = std::move(rows);
    }
    nlohmann::json params = nlohmann::json::object();
    if (a.kind == ActionKind::Custom) params["wrangler"] = a.wrangler;
    return nlohmann::json{{"kind", to_string(a.kind)},
                          {"target", a.target.canonical()},
                          {"scope", std::move(scope)},
                          {"params", std::move(params)}};
}

RepairAction action_from_json(const nlohmann::json& j) {
    try {
        RepairAction a;
        a.kind = action_kind_from_string(j.at("kind").get<std::string>());
        try {
            a.target = GroupKey::parse(j.at("target").get<std::string>());
        } catch (const Error& e) {
            throw Error(Errc::InvalidAction, e.what());
        }
        const auto& scope = j.at("scope");
        if (scope.contains("code")) {
            a.scope_code = scope.at("code").get<std::string>();
        } else {
            for (const auto& r : scope.at("rows")) a.scope_rows.push_back(RowId{r.get<std::uint64_t>()});
            std::sort(a.scope_rows.begin(), a.scope_rows.end());
            a.scope_rows.erase(std::unique(a.scope_rows.begin(), a.scope_rows.end()), a.scope_rows.end());
        }
        if (a.kind == ActionKind::Custom) {
            a.wrangler = j.at("params").at("wrangler").get<std::string>();
        }
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidAction, std::string("malformed action: ") + e.what());
    }
}

std::string canonical_string(const RepairAction& a) { return to_json(a).dump(); }

nlohmann::json to_json(const RepairSuggestion& s) {
    return nlohmann::json{{"action", to_json(s.action)},
                          {"predicted_resolved", s.predicted_resolved},
                          {"predicted_new_errors", s.predicted_new_errors},
                          {"rank", s.rank}};
}

void rank_suggestions(std::vector<RepairSuggestion>& s) {
    std::vector<std::pair<std::string, RepairSuggestion>> keyed;
    keyed.reserve(s.size());
    for (auto& x : s) keyed.emplace_back(canonical_string(x.action), std::move(x));
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        const auto& x = a.second;
        const auto& y = b.second;
        return std::make_tuple(x.predicted_new_errors, y.predicted_resolved, kind_priority(x.action.kind),
                               std::cref(a.first)) <
               std::make_tuple(y.predicted_new_errors, x.predicted_resolved, kind_priority(y.action.kind),
                               std::cref(b.first));
    });
    s.clear();
    for (auto& [k, x] : keyed) {
        x.rank = s.size() + 1;
        s.push_back(std::move(x));
    }
}

// --------------------------------------------------------------- registry

namespace {

struct ParsedRule {
    WranglerRegistry::Op op;
    std::optional<expr::Expression> argument;
};

ParsedRule parse_rule(std::string_view rule) {
    const auto open = rule.find('(');
    const auto close = rule.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open ||
        !trim_ascii(rule.substr(close + 1)).empty()) {
        throw Error(Errc::ExpressionParseError, "wrangler rule must look like name(argument)",
                    open == std::string_view::npos ? rule.size() : close + 1);
    }
    const auto name = trim_ascii(rule.substr(0, open));
    const auto arg_start = open + 1;
    const auto arg = rule.substr(arg_start, close - arg_start);

    using Op = WranglerRegistry::Op;
    struct Known {
        std::string_view name;
        Op op;
        bool takes_argument;
    };
    static constexpr Known kKnown[] = {{"set_constant", Op::SetConstant, true},
                                       {"scale", Op::Scale, true},
                                       {"set", Op::Set, true},
                                       {"set_group_mean", Op::SetGroupMean, false},
                                       {"delete_row", Op::DeleteRow, false}};
    for (const auto& k : kKnown) {
        if (k.name != name) continue;
        ParsedRule out{k.op, std::nullopt};
        if (!k.takes_argument) {
            if (!trim_ascii(arg).empty()) {
                throw Error(Errc::ExpressionParseError, std::string(name) + "() takes no argument", arg_start);
            }
            return out;
        }
        try {
            out.argument = expr::Expression::parse(arg);
        } catch (const Error& e) {
            if (e.code() != Errc::ExpressionParseError) throw;
            throw Error(e.code(), e.what(), arg_start + e.offset().value_or(0));
        }
        const auto t = out.argument->type();
        const bool ok = k.op == Op::Scale ? (t == expr::Type::Number || t == expr::Type::Cell) : t != expr::Type::Bool;
        if (!ok) throw Error(Errc::ExpressionTypeError, std::string(name) + "() argument has the wrong type");
        return out;
    }
    throw Error(Errc::InvalidConfig, "unknown wrangler rule '" + std::string(name) + "'");
}

}  // namespace

const WranglerRegistry::Entry& WranglerRegistry::register_wrangler(const DetectorSet& detectors,
                                                                   const WranglerSpec& spec) {
    detectors.require(spec.code);
    auto parsed = parse_rule(spec.rule);
    std::string id = spec.name;
    if (id.empty()) {
        id = spec.code + "#" + std::to_string(for_code(spec.code).size() + 1);
    }
    if (find(id)) throw Error(Errc::DuplicateCode, "wrangler '" + id + "' is already registered");
    Entry e;
    e.id = std::move(id);
    e.spec = spec;
    e.op = parsed.op;
    e.argument = std::move(parsed.argument);
    entries_.push_back(std::move(e));
    return entries_.back();
}

const WranglerRegistry::Entry* WranglerRegistry::find(std::string_view id) const {
    for (const auto& e : entries_) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

std::vector<const WranglerRegistry::Entry*> WranglerRegistry::for_code(std::string_view code) const {
    std::vector<const Entry*> out;
    for (const auto& e : entries_) {
        if (e.spec.code == code) out.push_back(&e);
    }
    return out;
}

// --------------------------------------------------------------- planning

std::vector<ActionKind> applicable_kinds(std::string_view code, const DetectorSet& detectors) {
    const auto c = detectors.require(code);
    switch (c) {
        case kMissing: return {ActionKind::ImputeGroupMean, ActionKind::DeleteRows};
        case kOutlier: return {ActionKind::DeleteRows, ActionKind::ImputeGroupMean};
        case kTypeMismatch: return {ActionKind::ConvertType, ActionKind::DeleteRows};
        case kIncompleteGroup: return {ActionKind::DeleteRows};
        default: return {ActionKind::DeleteRows};
    }
}

std::vector<RowId> scoped_rows(const RepairAction& a, const Dataset& ds, const GroupSet& groups,
                               const ErrorStore& store, const DetectorSet& detectors) {
    const auto ref = groups.find(ds, a.target);
    if (!ref) throw Error(Errc::UnknownGroup, "unknown group '" + a.target.canonical() + "'");
    const auto members = groups.rows(*ref);
    if (!a.scope_code) {
        for (auto r : a.scope_rows) {
            if (!std::binary_search(members.begin(), members.end(), r)) {
                throw Error(Errc::InvalidAction, "row " + std::to_string(r.value) + " is not in group '" +
                                                     a.target.canonical() + "'");
            }
        }
        return a.scope_rows;
    }
    const auto code = detectors.require(*a.scope_code);
    if (code == kIncompleteGroup) return {members.begin(), members.end()};
    std::vector<RowId> out;
    if (const auto* e = store.find(*ref)) {
        for (const auto& r : e->rows) {
            if (r.code == code) out.push_back(r.row);
        }
    }
    return out;
}

std::optional<double> convert_text(std::string_view text) {
    std::string s;
    s.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '$' || c == ',') continue;
        if (text.compare(i, 3, "\xE2\x82\xAC") == 0) {  // euro sign
            i += 2;
            continue;
        }
        if (text.compare(i, 2, "\xC2\xA3") == 0) {  // pound sign
            i += 1;
            continue;
        }
        s.push_back(c);
    }
    auto body = std::string(trim_ascii(s));
    if (body.empty()) return std::nullopt;
    int exponent = 0;
    const char last = body.back();
    if (last == 'k' || last == 'K') exponent = 3;
    if (last == 'm' || last == 'M') exponent = 6;
    if (exponent == 0) return parse_number(body);
    body.pop_back();
    body = std::string(trim_ascii(body));
    const auto base = parse_number(body);
    if (!base) return std::nullopt;
    // Scale textually when possible so "12.3k" parses exactly as "12.3e3".
    if (body.find_first_of("eE") == std::string::npos) {
        return parse_number(body + "e" + std::to_string(exponent));
    }
    const double v = *base * (exponent == 3 ? 1e3 : 1e6);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

namespace {

RowImage deletion_image(const Dataset& ds, RowId r) { return ds.row_image(r); }

void push_change(SnapshotDelta& d, const Dataset& ds, RowId r, std::size_t col, CellValue after) {
    if (after.is_text() && after.as_text().empty()) after = CellValue::null();
    const auto& before = ds.cell(r, col);
    if (before == after) return;
    d.cell_changes.push_back(CellChange{r, ds.columns()[col].name, before, std::move(after)});
}

}  // namespace

SnapshotDelta plan_action(const RepairAction& a, const Dataset& ds, const GroupSet& groups, const ErrorStore& store,
                          const DetectorSet& detectors, const WranglerRegistry& wranglers,
                          const WrangleConfig& config) {
    const WranglerRegistry::Entry* custom = nullptr;
    if (a.kind == ActionKind::Custom) {
        custom = wranglers.find(a.wrangler);
        if (!custom) throw Error(Errc::InvalidAction, "unknown wrangler '" + a.wrangler + "'");
    }
    if (a.scope_code) {
        if (custom) {
            if (custom->spec.code != *a.scope_code) {
                throw Error(Errc::InapplicableAction,
                            "wrangler '" + custom->id + "' does not repair '" + *a.scope_code + "'");
            }
        } else {
            const auto kinds = applicable_kinds(*a.scope_code, detectors);
            if (std::find(kinds.begin(), kinds.end(), a.kind) == kinds.end()) {
                throw Error(Errc::InapplicableAction,
                            std::string(to_string(a.kind)) + " does not apply to '" + *a.scope_code + "'");
            }
        }
    }
    const auto rows = scoped_rows(a, ds, groups, store, detectors);
    const auto ref = *groups.find(ds, a.target);
    const auto num = ref.num_column;
    const auto members = groups.rows(ref);

    auto mean_of_group = [&]() -> std::optional<double> {
        const std::vector<std::uint8_t>* exclude = nullptr;
        if (config.impute_clean_only) {
            if (const auto* st = store.column(num)) exclude = &st->outlier;
        }
        const auto m = group_mean(ds, members, num, exclude);
        if (!m) return std::nullopt;
        return round_significant6(*m);
    };

    SnapshotDelta d;
    switch (a.kind) {
        case ActionKind::DeleteRows:
            for (auto r : rows) d.row_deletions.push_back(deletion_image(ds, r));
            break;
        case ActionKind::ImputeGroupMean: {
            const auto m = mean_of_group();
            if (!m) throw Error(Errc::InapplicableAction, "group has no numeric values to average");
            for (auto r : rows) push_change(d, ds, r, num, CellValue::number(*m));
            break;
        }
        case ActionKind::ConvertType:
            for (auto r : rows) {
                const auto& c = ds.cell(r, num);
                if (!c.is_text()) continue;
                if (auto v = convert_text(c.as_text())) push_change(d, ds, r, num, CellValue::number(*v));
            }
            break;
        case ActionKind::Custom: {
            using Op = WranglerRegistry::Op;
            expr::Context ctx;
            ctx.group_size = static_cast<double>(members.size());
            const bool needs_mean = custom->op == Op::SetGroupMean ||
                                    (custom->argument && custom->argument->uses_group_mean());
            std::optional<double> raw_mean;
            if (needs_mean) raw_mean = group_mean(ds, members, num);
            ctx.group_mean = raw_mean;
            for (auto r : rows) {
                const auto& cell = ds.cell(r, num);
                ctx.value = &cell;
                switch (custom->op) {
                    case Op::DeleteRow: d.row_deletions.push_back(deletion_image(ds, r)); break;
                    case Op::SetGroupMean:
                        if (raw_mean) push_change(d, ds, r, num, CellValue::number(round_significant6(*raw_mean)));
                        break;
                    case Op::Scale: {
                        if (!cell.is_number()) break;
                        const auto f = custom->argument->evaluate(ctx);
                        const auto* x = std::get_if<double>(&f);
                        if (!x) break;
                        const double v = cell.as_number() * *x;
                        if (std::isfinite(v)) push_change(d, ds, r, num, CellValue::number(v));
                        break;
                    }
                    case Op::SetConstant:
                    case Op::Set: {
                        const auto v = custom->argument->evaluate(ctx);
                        if (const auto* x = std::get_if<double>(&v)) {
                            if (std::isfinite(*x)) push_change(d, ds, r, num, CellValue::number(*x));
                        } else if (const auto* s = std::get_if<std::string>(&v)) {
                            push_change(d, ds, r, num, CellValue::text(*s));
                        }
                        break;
                    }
                }
            }
            break;
        }
    }
    if (d.empty()) {
        throw Error(Errc::InapplicableAction, std::string(to_string(a.kind)) + " on '" + a.target.canonical() +
                                                  "' changes nothing");
    }
    return d;
}

}  // namespace gw
