#pragma once

// Expression language for user-defined detectors and wranglers.
//
//   expr    := or
//   or      := and ("or" and)*
//   and     := not ("and" not)*
//   not     := "not" not | cmp
//   cmp     := sum (("<" | "<=" | ">" | ">=" | "==" | "!=") sum)?
//   sum     := product (("+" | "-") product)*
//   product := unary (("*" | "/") unary)*
//   unary   := "-" unary | primary
//   primary := number | string | "true" | "false" | name | "(" expr ")"
//   name    := "value" | "is_null" | "is_text" | "group_size" | "group_mean"
//
// Evaluation is three-valued: anything involving a missing operand (Null
// cell, text in arithmetic, division by zero, empty group mean) yields
// not-applicable, which never counts as true.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "gw/cell.hpp"

namespace gw::expr {

enum class Type { Bool, Number, Text, Cell };

struct NotApplicable {
    friend bool operator==(NotApplicable, NotApplicable) { return true; }
};

using Value = std::variant<NotApplicable, bool, double, std::string>;

struct Context {
    const CellValue* value = nullptr;
    double group_size = 0.0;
    std::optional<double> group_mean;
};

struct Node;

class Expression {
public:
    // Throws ExpressionParseError (with byte offset) or ExpressionTypeError.
    static Expression parse(std::string_view source);

    const std::string& source() const noexcept { return source_; }
    Type type() const noexcept { return type_; }
    bool uses_group_mean() const noexcept { return uses_group_mean_; }

    Value evaluate(const Context& ctx) const;
    bool holds(const Context& ctx) const;  // true only for a definite true

private:
    std::string source_;
    std::shared_ptr<const Node> root_;
    Type type_ = Type::Bool;
    bool uses_group_mean_ = false;
};

}  // namespace gw::expr
