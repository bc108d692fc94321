#include "gw/cell.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "gw/error.hpp"

namespace gw {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::MalformedCsv: return "MalformedCsv";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::UnknownRow: return "UnknownRow";
        case Errc::UnknownColumn: return "UnknownColumn";
        case Errc::StaleDelta: return "StaleDelta";
        case Errc::NoCategoricalColumns: return "NoCategoricalColumns";
        case Errc::NoNumericColumns: return "NoNumericColumns";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::DuplicateCode: return "DuplicateCode";
        case Errc::ExpressionParseError: return "ExpressionParseError";
        case Errc::ExpressionTypeError: return "ExpressionTypeError";
        case Errc::UnknownErrorCode: return "UnknownErrorCode";
        case Errc::UnknownGroup: return "UnknownGroup";
        case Errc::NoSuchErrorInGroup: return "NoSuchErrorInGroup";
        case Errc::InvalidAction: return "InvalidAction";
        case Errc::InapplicableAction: return "InapplicableAction";
        case Errc::SequenceGap: return "SequenceGap";
        case Errc::NothingToUndo: return "NothingToUndo";
        case Errc::NothingToRedo: return "NothingToRedo";
        case Errc::StorageFailure: return "StorageFailure";
        case Errc::CorruptLog: return "CorruptLog";
        case Errc::UnsupportedTarget: return "UnsupportedTarget";
        case Errc::NoAnchor: return "NoAnchor";
        case Errc::UnknownDataset: return "UnknownDataset";
        case Errc::BadRequest: return "BadRequest";
    }
    return "Unknown";
}

CellValue CellValue::number(double v) {
    if (!std::isfinite(v)) {
        throw Error(Errc::InvalidAction, "non-finite number cannot be stored in a cell");
    }
    CellValue c;
    c.v_ = v;
    return c;
}

std::string CellValue::category_label() const {
    if (is_null()) return std::string(kNullCategory);
    if (is_number()) return format_number(as_number());
    return as_text();
}

std::string_view trim_ascii(std::string_view s) noexcept {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Validates [+-]?(d+.?d*|.d+)([eE][+-]?d+)? over the whole input.
bool matches_number_grammar(std::string_view s) {
    std::size_t i = 0;
    const std::size_t n = s.size();
    if (i < n && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t int_digits = 0;
    while (i < n && is_digit(s[i])) { ++i; ++int_digits; }
    std::size_t frac_digits = 0;
    if (i < n && s[i] == '.') {
        ++i;
        while (i < n && is_digit(s[i])) { ++i; ++frac_digits; }
    }
    if (int_digits + frac_digits == 0) return false;
    if (i < n && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < n && (s[i] == '+' || s[i] == '-')) ++i;
        std::size_t exp_digits = 0;
        while (i < n && is_digit(s[i])) { ++i; ++exp_digits; }
        if (exp_digits == 0) return false;
    }
    return i == n;
}

}  // namespace

std::optional<double> parse_number(std::string_view text) {
    std::string_view s = trim_ascii(text);
    if (!matches_number_grammar(s)) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc::result_out_of_range) {
        // Underflow to zero/subnormal is fine; overflow is not finite.
        v = std::strtod(std::string(s).c_str(), nullptr);
    } else if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

std::string python_float_repr(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
    std::string_view sci(buf, static_cast<std::size_t>(res.ptr - buf));

    bool negative = false;
    if (!sci.empty() && sci.front() == '-') {
        negative = true;
        sci.remove_prefix(1);
    }
    const auto epos = sci.find('e');
    std::string_view mantissa = sci.substr(0, epos);
    const int exponent = std::atoi(std::string(sci.substr(epos + 1)).c_str());

    std::string digits;
    for (char c : mantissa) {
        if (c != '.') digits.push_back(c);
    }

    std::string out = negative ? "-" : "";
    if (exponent >= -4 && exponent < 16) {
        const int point = exponent + 1;  // digits before the decimal point
        if (point <= 0) {
            out += "0.";
            out.append(static_cast<std::size_t>(-point), '0');
            out += digits;
        } else if (static_cast<std::size_t>(point) >= digits.size()) {
            out += digits;
            out.append(static_cast<std::size_t>(point) - digits.size(), '0');
            out += ".0";
        } else {
            out += digits.substr(0, static_cast<std::size_t>(point));
            out += '.';
            out += digits.substr(static_cast<std::size_t>(point));
        }
        return out;
    }
    out += digits.substr(0, 1);
    if (digits.size() > 1) {
        out += '.';
        out += digits.substr(1);
    }
    char ebuf[16];
    std::snprintf(ebuf, sizeof ebuf, "e%c%02d", exponent < 0 ? '-' : '+', std::abs(exponent));
    out += ebuf;
    return out;
}

std::string format_number(double v) {
    if (std::trunc(v) == v && std::fabs(v) < 1e16) {
        return std::to_string(static_cast<long long>(v));
    }
    return python_float_repr(v);
}

double round_significant6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::strtod(buf, nullptr);
}

nlohmann::json to_json(const CellValue& c) {
    if (c.is_null()) return nullptr;
    if (c.is_number()) return c.as_number();
    return c.as_text();
}

CellValue cell_from_json(const nlohmann::json& j) {
    if (j.is_null()) return CellValue::null();
    if (j.is_number()) return CellValue::number(j.get<double>());
    if (j.is_string()) return CellValue::text(j.get<std::string>());
    throw Error(Errc::BadRequest, "cell value must be null, a number or a string");
}

}  // namespace gw
