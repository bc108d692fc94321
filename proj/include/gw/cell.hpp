#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

namespace gw {

// Stable row identity. Issued once at ingestion, never reused.
struct RowId {
    std::uint64_t value = 0;

    friend constexpr auto operator<=>(RowId, RowId) = default;
};

struct Null {
    friend constexpr bool operator==(Null, Null) { return true; }
};

// A cell is Null, a finite Number, or Text. Numbers are never NaN/Inf.
class CellValue {
public:
    CellValue() = default;
    static CellValue null() { return CellValue(); }
    static CellValue number(double v);  // throws InvalidAction on non-finite input
    static CellValue text(std::string s) { CellValue c; c.v_ = std::move(s); return c; }

    bool is_null() const noexcept { return std::holds_alternative<Null>(v_); }
    bool is_number() const noexcept { return std::holds_alternative<double>(v_); }
    bool is_text() const noexcept { return std::holds_alternative<std::string>(v_); }

    double as_number() const { return std::get<double>(v_); }
    const std::string& as_text() const { return std::get<std::string>(v_); }

    // Category label used when the cell sits in a categorical column.
    std::string category_label() const;

    friend bool operator==(const CellValue& a, const CellValue& b) { return a.v_ == b.v_; }

private:
    std::variant<Null, double, std::string> v_;
};

// Rendered in place of a Null category value.
inline constexpr std::string_view kNullCategory = "⟨null⟩";

// Strict number grammar: optional sign, digits with optional decimal point,
// optional exponent; surrounding ASCII whitespace ignored. Rejects inf/nan,
// hex, thousands separators and anything non-finite.
std::optional<double> parse_number(std::string_view text);

// Shortest round-trip formatting. Integral values below 1e16 print as
// integers; everything else matches Python's repr(float).
std::string format_number(double v);

// Python repr(float) for any finite double (always has '.', 'e' or both).
std::string python_float_repr(double v);

// Round to six significant decimal digits.
double round_significant6(double v);

std::string_view trim_ascii(std::string_view s) noexcept;

nlohmann::json to_json(const CellValue& c);
CellValue cell_from_json(const nlohmann::json& j);

}  // namespace gw

template <>
struct std::hash<gw::RowId> {
    std::size_t operator()(gw::RowId r) const noexcept { return std::hash<std::uint64_t>{}(r.value); }
};
