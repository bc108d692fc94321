#include "gw/expr.hpp"

#include <cctype>
#include <cmath>
#include <vector>

#include "gw/error.hpp"

namespace gw::expr {

enum class Op { And, Or, Not, Neg, Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne };
enum class Var { Value, IsNull, IsText, GroupSize, GroupMean };

struct Node {
    enum class Kind { Literal, Variable, Unary, Binary } kind;
    Value literal;
    Var var = Var::Value;
    Op op = Op::Add;
    std::shared_ptr<const Node> lhs, rhs;
    Type type = Type::Bool;
};

namespace {

using NodePtr = std::shared_ptr<const Node>;

struct Token {
    enum class Kind { Number, String, Name, Symbol, End } kind;
    std::string text;
    double number = 0.0;
    std::size_t offset = 0;
};

[[noreturn]] void parse_error(const std::string& what, std::size_t offset) {
    throw Error(Errc::ExpressionParseError, what + " at offset " + std::to_string(offset), offset);
}

[[noreturn]] void type_error(const std::string& what) { throw Error(Errc::ExpressionTypeError, what); }

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.')) ++i;
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
                if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                    i = j;
                    while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
                }
            }
            const auto text = src.substr(start, i - start);
            const auto v = parse_number(text);
            if (!v) parse_error("malformed number '" + std::string(text) + "'", start);
            out.push_back(Token{Token::Kind::Number, std::string(text), *v, start});
            continue;
        }
        if (c == '"' || c == '\'') {
            std::string text;
            ++i;
            bool closed = false;
            while (i < src.size()) {
                if (src[i] == '\\' && i + 1 < src.size()) {
                    const char e = src[i + 1];
                    text.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
                    i += 2;
                    continue;
                }
                if (src[i] == c) {
                    closed = true;
                    ++i;
                    break;
                }
                text.push_back(src[i++]);
            }
            if (!closed) parse_error("unterminated string", start);
            out.push_back(Token{Token::Kind::String, std::move(text), 0.0, start});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
            out.push_back(Token{Token::Kind::Name, std::string(src.substr(start, i - start)), 0.0, start});
            continue;
        }
        static constexpr std::string_view two[] = {"<=", ">=", "==", "!="};
        bool matched = false;
        for (auto sym : two) {
            if (src.substr(i, 2) == sym) {
                out.push_back(Token{Token::Kind::Symbol, std::string(sym), 0.0, start});
                i += 2;
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (std::string_view("<>+-*/()").find(c) != std::string_view::npos) {
            out.push_back(Token{Token::Kind::Symbol, std::string(1, c), 0.0, start});
            ++i;
            continue;
        }
        parse_error(std::string("unexpected character '") + c + "'", start);
    }
    out.push_back(Token{Token::Kind::End, "", 0.0, src.size()});
    return out;
}

bool numeric_like(Type t) { return t == Type::Number || t == Type::Cell; }
bool text_like(Type t) { return t == Type::Text || t == Type::Cell; }

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    NodePtr parse_all() {
        auto root = parse_or();
        if (peek().kind != Token::Kind::End) parse_error("unexpected '" + peek().text + "'", peek().offset);
        return root;
    }

    bool uses_group_mean = false;

private:
    const Token& peek() const { return tokens_[pos_]; }
    bool accept(std::string_view text) {
        const auto& t = peek();
        if ((t.kind == Token::Kind::Symbol || t.kind == Token::Kind::Name) && t.text == text) {
            ++pos_;
            return true;
        }
        return false;
    }

    static NodePtr binary(Op op, NodePtr lhs, NodePtr rhs) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Binary;
        n->op = op;
        switch (op) {
            case Op::And:
            case Op::Or:
                if (lhs->type != Type::Bool || rhs->type != Type::Bool) {
                    type_error(std::string(op == Op::And ? "'and'" : "'or'") + " needs boolean operands");
                }
                n->type = Type::Bool;
                break;
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div:
                if (!numeric_like(lhs->type) || !numeric_like(rhs->type)) {
                    type_error("arithmetic needs numeric operands");
                }
                n->type = Type::Number;
                break;
            case Op::Lt:
            case Op::Le:
            case Op::Gt:
            case Op::Ge:
                if (!((numeric_like(lhs->type) && numeric_like(rhs->type)) ||
                      (text_like(lhs->type) && text_like(rhs->type)))) {
                    type_error("ordering comparison needs two numbers or two strings");
                }
                n->type = Type::Bool;
                break;
            case Op::Eq:
            case Op::Ne: {
                const bool lb = lhs->type == Type::Bool;
                const bool rb = rhs->type == Type::Bool;
                if (lb != rb) type_error("cannot compare a boolean with a non-boolean");
                if ((lhs->type == Type::Number && rhs->type == Type::Text) ||
                    (lhs->type == Type::Text && rhs->type == Type::Number)) {
                    type_error("cannot compare a number with a string");
                }
                n->type = Type::Bool;
                break;
            }
            default:
                break;
        }
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }

    NodePtr parse_or() {
        auto lhs = parse_and();
        while (accept("or")) lhs = binary(Op::Or, lhs, parse_and());
        return lhs;
    }
    NodePtr parse_and() {
        auto lhs = parse_not();
        while (accept("and")) lhs = binary(Op::And, lhs, parse_not());
        return lhs;
    }
    NodePtr parse_not() {
        if (accept("not")) {
            auto operand = parse_not();
            if (operand->type != Type::Bool) type_error("'not' needs a boolean operand");
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Unary;
            n->op = Op::Not;
            n->type = Type::Bool;
            n->lhs = std::move(operand);
            return n;
        }
        return parse_cmp();
    }
    NodePtr parse_cmp() {
        auto lhs = parse_sum();
        static const std::pair<std::string_view, Op> ops[] = {{"<=", Op::Le}, {">=", Op::Ge}, {"==", Op::Eq},
                                                              {"!=", Op::Ne}, {"<", Op::Lt},  {">", Op::Gt}};
        for (auto [sym, op] : ops) {
            if (accept(sym)) return binary(op, lhs, parse_sum());
        }
        return lhs;
    }
    NodePtr parse_sum() {
        auto lhs = parse_product();
        for (;;) {
            if (accept("+")) lhs = binary(Op::Add, lhs, parse_product());
            else if (accept("-")) lhs = binary(Op::Sub, lhs, parse_product());
            else return lhs;
        }
    }
    NodePtr parse_product() {
        auto lhs = parse_unary();
        for (;;) {
            if (accept("*")) lhs = binary(Op::Mul, lhs, parse_unary());
            else if (accept("/")) lhs = binary(Op::Div, lhs, parse_unary());
            else return lhs;
        }
    }
    NodePtr parse_unary() {
        if (accept("-")) {
            auto operand = parse_unary();
            if (!numeric_like(operand->type)) type_error("unary '-' needs a numeric operand");
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Unary;
            n->op = Op::Neg;
            n->type = Type::Number;
            n->lhs = std::move(operand);
            return n;
        }
        return parse_primary();
    }
    NodePtr parse_primary() {
        const Token t = peek();
        auto n = std::make_shared<Node>();
        switch (t.kind) {
            case Token::Kind::Number:
                ++pos_;
                n->kind = Node::Kind::Literal;
                n->literal = t.number;
                n->type = Type::Number;
                return n;
            case Token::Kind::String:
                ++pos_;
                n->kind = Node::Kind::Literal;
                n->literal = t.text;
                n->type = Type::Text;
                return n;
            case Token::Kind::Name: {
                ++pos_;
                if (t.text == "true" || t.text == "false") {
                    n->kind = Node::Kind::Literal;
                    n->literal = t.text == "true";
                    n->type = Type::Bool;
                    return n;
                }
                n->kind = Node::Kind::Variable;
                if (t.text == "value") { n->var = Var::Value; n->type = Type::Cell; }
                else if (t.text == "is_null") { n->var = Var::IsNull; n->type = Type::Bool; }
                else if (t.text == "is_text") { n->var = Var::IsText; n->type = Type::Bool; }
                else if (t.text == "group_size") { n->var = Var::GroupSize; n->type = Type::Number; }
                else if (t.text == "group_mean") {
                    n->var = Var::GroupMean;
                    n->type = Type::Number;
                    uses_group_mean = true;
                } else {
                    parse_error("unknown name '" + t.text + "'", t.offset);
                }
                return n;
            }
            case Token::Kind::Symbol:
                if (t.text == "(") {
                    ++pos_;
                    auto inner = parse_or();
                    if (!accept(")")) parse_error("expected ')'", peek().offset);
                    return inner;
                }
                parse_error("unexpected '" + t.text + "'", t.offset);
            case Token::Kind::End:
                parse_error("unexpected end of expression", t.offset);
        }
        parse_error("unexpected token", t.offset);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

Value finite_or_na(double v) {
    if (!std::isfinite(v)) return NotApplicable{};
    return v;
}

Value eval(const Node& n, const Context& ctx) {
    switch (n.kind) {
        case Node::Kind::Literal:
            return n.literal;
        case Node::Kind::Variable:
            switch (n.var) {
                case Var::Value:
                    if (!ctx.value || ctx.value->is_null()) return NotApplicable{};
                    if (ctx.value->is_number()) return ctx.value->as_number();
                    return ctx.value->as_text();
                case Var::IsNull:
                    return ctx.value == nullptr || ctx.value->is_null();
                case Var::IsText:
                    return ctx.value != nullptr && ctx.value->is_text();
                case Var::GroupSize:
                    return ctx.group_size;
                case Var::GroupMean:
                    if (!ctx.group_mean) return NotApplicable{};
                    return *ctx.group_mean;
            }
            return NotApplicable{};
        case Node::Kind::Unary: {
            const Value v = eval(*n.lhs, ctx);
            if (n.op == Op::Not) {
                if (auto b = std::get_if<bool>(&v)) return !*b;
                return NotApplicable{};
            }
            if (auto d = std::get_if<double>(&v)) return -*d;
            return NotApplicable{};
        }
        case Node::Kind::Binary:
            break;
    }

    if (n.op == Op::And || n.op == Op::Or) {
        const Value l = eval(*n.lhs, ctx);
        const auto* lb = std::get_if<bool>(&l);
        if (lb && *lb == (n.op == Op::Or)) return *lb;  // short circuit
        const Value r = eval(*n.rhs, ctx);
        const auto* rb = std::get_if<bool>(&r);
        if (rb && *rb == (n.op == Op::Or)) return *rb;
        if (lb && rb) return *rb;
        return NotApplicable{};
    }

    const Value l = eval(*n.lhs, ctx);
    const Value r = eval(*n.rhs, ctx);
    if (std::holds_alternative<NotApplicable>(l) || std::holds_alternative<NotApplicable>(r)) {
        return NotApplicable{};
    }
    const auto* ld = std::get_if<double>(&l);
    const auto* rd = std::get_if<double>(&r);
    switch (n.op) {
        case Op::Add: if (ld && rd) return finite_or_na(*ld + *rd); return NotApplicable{};
        case Op::Sub: if (ld && rd) return finite_or_na(*ld - *rd); return NotApplicable{};
        case Op::Mul: if (ld && rd) return finite_or_na(*ld * *rd); return NotApplicable{};
        case Op::Div:
            if (ld && rd && *rd != 0.0) return finite_or_na(*ld / *rd);
            return NotApplicable{};
        default:
            break;
    }
    if (l.index() != r.index()) return NotApplicable{};
    int cmp = 0;
    if (ld) {
        cmp = *ld < *rd ? -1 : (*ld > *rd ? 1 : 0);
    } else if (const auto* ls = std::get_if<std::string>(&l)) {
        const int c = ls->compare(std::get<std::string>(r));
        cmp = c < 0 ? -1 : (c > 0 ? 1 : 0);
    } else {
        const bool a = std::get<bool>(l);
        const bool b = std::get<bool>(r);
        if (n.op == Op::Eq) return a == b;
        if (n.op == Op::Ne) return a != b;
        return NotApplicable{};
    }
    switch (n.op) {
        case Op::Lt: return cmp < 0;
        case Op::Le: return cmp <= 0;
        case Op::Gt: return cmp > 0;
        case Op::Ge: return cmp >= 0;
        case Op::Eq: return cmp == 0;
        case Op::Ne: return cmp != 0;
        default: return NotApplicable{};
    }
}

}  // namespace

Expression Expression::parse(std::string_view source) {
    Parser parser(tokenize(source));
    Expression e;
    e.source_ = std::string(source);
    e.root_ = parser.parse_all();
    e.type_ = e.root_->type;
    e.uses_group_mean_ = parser.uses_group_mean;
    return e;
}

Value Expression::evaluate(const Context& ctx) const { return eval(*root_, ctx); }

bool Expression::holds(const Context& ctx) const {
    const Value v = evaluate(ctx);
    const auto* b = std::get_if<bool>(&v);
    return b && *b;
}

}  // namespace gw::expr
