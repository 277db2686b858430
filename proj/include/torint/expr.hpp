#pragma once

#include <charconv>
#include <cmath>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Symbolic scalar expressions in the coordinates (c_1..c_m, x, y).
// Immutable after construction; shared subtrees are fine across threads.

namespace torint {

inline constexpr double kEpsDiv = 1e-12;

// Evaluation point: the two angles plus the fiber parameters c_1..c_m.
struct Point {
    double x = 0.0;
    double y = 0.0;
    std::span<const double> c{};
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class UnOp { Neg, Sin, Cos, Exp, Sqrt };
enum class BinOp { Add, Sub, Mul, Div };

// Variable tag: x, y, or fiber coordinate c_{index+1}.
struct VarTag {
    enum class Kind { X, Y, C } kind = Kind::X;
    int index = 0;

    static VarTag x() { return {Kind::X, 0}; }
    static VarTag y() { return {Kind::Y, 0}; }
    static VarTag c(int i) { return {Kind::C, i}; }
    bool operator==(const VarTag&) const = default;
};

class Expr {
public:
    struct Node;
    using Ptr = std::shared_ptr<const Node>;

    struct Node {
        enum class Kind { Lit, Var, Un, Bin, Pow };
        Kind kind = Kind::Lit;
        double lit = 0.0;   // Kind::Lit
        VarTag var{};       // Kind::Var
        UnOp un{};          // Kind::Un
        BinOp bin{};        // Kind::Bin
        int exponent = 0;   // Kind::Pow
        Ptr a, b;
    };

    Expr() : node_(lit_node(0.0)) {}
    explicit Expr(double v) : node_(lit_node(v)) {}

    static Expr lit(double v) { return Expr(lit_node(v)); }
    static Expr var(VarTag v) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Var;
        n->var = v;
        return Expr(std::move(n));
    }
    static Expr x() { return var(VarTag::x()); }
    static Expr y() { return var(VarTag::y()); }
    static Expr c(int i) { return var(VarTag::c(i)); }

    const Node& node() const { return *node_; }
    const Ptr& ptr() const { return node_; }

    double eval(const Point& p) const { return eval_node(*node_, p); }

    bool is_literal(double v) const {
        return node_->kind == Node::Kind::Lit && node_->lit == v;
    }

    explicit Expr(Ptr n) : node_(std::move(n)) {}

private:
    static Ptr lit_node(double v) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Lit;
        n->lit = v;
        return n;
    }

    static double eval_node(const Node& n, const Point& p) {
        switch (n.kind) {
        case Node::Kind::Lit:
            return n.lit;
        case Node::Kind::Var:
            switch (n.var.kind) {
            case VarTag::Kind::X: return p.x;
            case VarTag::Kind::Y: return p.y;
            case VarTag::Kind::C:
                if (n.var.index < 0 || n.var.index >= static_cast<int>(p.c.size()))
                    throw EvalError("fiber coordinate c_" + std::to_string(n.var.index + 1) +
                                    " not supplied at evaluation point");
                return p.c[n.var.index];
            }
            return 0.0;
        case Node::Kind::Un: {
            double a = eval_node(*n.a, p);
            switch (n.un) {
            case UnOp::Neg: return -a;
            case UnOp::Sin: return std::sin(a);
            case UnOp::Cos: return std::cos(a);
            case UnOp::Exp: return std::exp(a);
            case UnOp::Sqrt:
                if (a < 0.0) throw EvalError("sqrt of negative value " + std::to_string(a));
                return std::sqrt(a);
            }
            return 0.0;
        }
        case Node::Kind::Bin: {
            double a = eval_node(*n.a, p);
            double b = eval_node(*n.b, p);
            switch (n.bin) {
            case BinOp::Add: return a + b;
            case BinOp::Sub: return a - b;
            case BinOp::Mul: return a * b;
            case BinOp::Div:
                if (std::abs(b) < kEpsDiv)
                    throw EvalError("division by near-zero denominator " + std::to_string(b));
                return a / b;
            }
            return 0.0;
        }
        case Node::Kind::Pow: {
            double a = eval_node(*n.a, p);
            return std::pow(a, n.exponent);
        }
        }
        return 0.0;
    }

    Ptr node_;
};

// --- constructors with constant folding and 0/1 identities ---

inline bool is_lit(const Expr& e) { return e.node().kind == Expr::Node::Kind::Lit; }
inline double lit_of(const Expr& e) { return e.node().lit; }

inline Expr unary(UnOp op, Expr a) {
    if (is_lit(a)) {
        double v = lit_of(a);
        switch (op) {
        case UnOp::Neg: return Expr::lit(-v);
        case UnOp::Sin: return Expr::lit(std::sin(v));
        case UnOp::Cos: return Expr::lit(std::cos(v));
        case UnOp::Exp: return Expr::lit(std::exp(v));
        case UnOp::Sqrt:
            if (v >= 0.0) return Expr::lit(std::sqrt(v));
            break;  // fold at evaluation so the error carries a position
        }
    }
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Node::Kind::Un;
    n->un = op;
    n->a = a.ptr();
    return Expr(std::move(n));
}

inline Expr binary(BinOp op, Expr a, Expr b) {
    if (is_lit(a) && is_lit(b)) {
        double u = lit_of(a), v = lit_of(b);
        switch (op) {
        case BinOp::Add: return Expr::lit(u + v);
        case BinOp::Sub: return Expr::lit(u - v);
        case BinOp::Mul: return Expr::lit(u * v);
        case BinOp::Div:
            if (std::abs(v) >= kEpsDiv) return Expr::lit(u / v);
            break;
        }
    }
    switch (op) {
    case BinOp::Add:
        if (a.is_literal(0.0)) return b;
        if (b.is_literal(0.0)) return a;
        break;
    case BinOp::Sub:
        if (b.is_literal(0.0)) return a;
        if (a.is_literal(0.0)) return unary(UnOp::Neg, b);
        break;
    case BinOp::Mul:
        if (a.is_literal(0.0) || b.is_literal(0.0)) return Expr::lit(0.0);
        if (a.is_literal(1.0)) return b;
        if (b.is_literal(1.0)) return a;
        break;
    case BinOp::Div:
        if (a.is_literal(0.0)) return Expr::lit(0.0);
        if (b.is_literal(1.0)) return a;
        break;
    }
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Node::Kind::Bin;
    n->bin = op;
    n->a = a.ptr();
    n->b = b.ptr();
    return Expr(std::move(n));
}

inline Expr pow(Expr a, int k) {
    if (k == 0) return Expr::lit(1.0);
    if (k == 1) return a;
    if (is_lit(a)) return Expr::lit(std::pow(lit_of(a), k));
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Node::Kind::Pow;
    n->exponent = k;
    n->a = a.ptr();
    return Expr(std::move(n));
}

inline Expr operator+(Expr a, Expr b) { return binary(BinOp::Add, std::move(a), std::move(b)); }
inline Expr operator-(Expr a, Expr b) { return binary(BinOp::Sub, std::move(a), std::move(b)); }
inline Expr operator*(Expr a, Expr b) { return binary(BinOp::Mul, std::move(a), std::move(b)); }
inline Expr operator/(Expr a, Expr b) { return binary(BinOp::Div, std::move(a), std::move(b)); }
inline Expr operator-(Expr a) { return unary(UnOp::Neg, std::move(a)); }
inline Expr sin(Expr a) { return unary(UnOp::Sin, std::move(a)); }
inline Expr cos(Expr a) { return unary(UnOp::Cos, std::move(a)); }
inline Expr exp(Expr a) { return unary(UnOp::Exp, std::move(a)); }
inline Expr sqrt(Expr a) { return unary(UnOp::Sqrt, std::move(a)); }

// --- symbolic differentiation ---

inline Expr differentiate(const Expr& e, VarTag v) {
    using Kind = Expr::Node::Kind;
    const auto& n = e.node();
    switch (n.kind) {
    case Kind::Lit:
        return Expr::lit(0.0);
    case Kind::Var:
        return Expr::lit(n.var == v ? 1.0 : 0.0);
    case Kind::Un: {
        Expr a(n.a);
        Expr da = differentiate(a, v);
        switch (n.un) {
        case UnOp::Neg: return -da;
        case UnOp::Sin: return cos(a) * da;
        case UnOp::Cos: return -(sin(a) * da);
        case UnOp::Exp: return exp(a) * da;
        case UnOp::Sqrt: return da / (Expr::lit(2.0) * sqrt(a));
        }
        return Expr::lit(0.0);
    }
    case Kind::Bin: {
        Expr a(n.a), b(n.b);
        Expr da = differentiate(a, v), db = differentiate(b, v);
        switch (n.bin) {
        case BinOp::Add: return da + db;
        case BinOp::Sub: return da - db;
        case BinOp::Mul: return da * b + a * db;
        case BinOp::Div: return (da * b - a * db) / (b * b);
        }
        return Expr::lit(0.0);
    }
    case Kind::Pow: {
        Expr a(n.a);
        Expr da = differentiate(a, v);
        return Expr::lit(static_cast<double>(n.exponent)) * pow(a, n.exponent - 1) * da;
    }
    }
    return Expr::lit(0.0);
}

inline Expr dx(const Expr& e) { return differentiate(e, VarTag::x()); }
inline Expr dy(const Expr& e) { return differentiate(e, VarTag::y()); }

// --- structural equality (used by the round-trip tests) ---

inline bool equal(const Expr& a, const Expr& b) {
    const auto& m = a.node();
    const auto& n = b.node();
    if (m.kind != n.kind) return false;
    using Kind = Expr::Node::Kind;
    switch (m.kind) {
    case Kind::Lit: return m.lit == n.lit;
    case Kind::Var: return m.var == n.var;
    case Kind::Un: return m.un == n.un && equal(Expr(m.a), Expr(n.a));
    case Kind::Bin: return m.bin == n.bin && equal(Expr(m.a), Expr(n.a)) && equal(Expr(m.b), Expr(n.b));
    case Kind::Pow: return m.exponent == n.exponent && equal(Expr(m.a), Expr(n.a));
    }
    return false;
}

// --- canonical printer ---

namespace detail {

inline int precedence(const Expr::Node& n) {
    using Kind = Expr::Node::Kind;
    switch (n.kind) {
    case Kind::Bin: return (n.bin == BinOp::Add || n.bin == BinOp::Sub) ? 1 : 2;
    case Kind::Un: return n.un == UnOp::Neg ? 3 : 5;
    case Kind::Pow: return 4;
    default: return 5;
    }
}

inline void print_node(std::ostream& os, const Expr::Node& n, int parent_prec) {
    using Kind = Expr::Node::Kind;
    int prec = precedence(n);
    bool parens = prec < parent_prec;
    if (parens) os << '(';
    switch (n.kind) {
    case Kind::Lit: {
        std::ostringstream tmp;
        tmp.precision(17);
        tmp << n.lit;
        std::string s = tmp.str();
        if (n.lit < 0) {
            os << '(' << s << ')';
        } else {
            os << s;
        }
        break;
    }
    case Kind::Var:
        switch (n.var.kind) {
        case VarTag::Kind::X: os << 'x'; break;
        case VarTag::Kind::Y: os << 'y'; break;
        case VarTag::Kind::C: os << "c_" << (n.var.index + 1); break;
        }
        break;
    case Kind::Un:
        switch (n.un) {
        case UnOp::Neg:
            os << '-';
            print_node(os, *n.a, 4);
            break;
        case UnOp::Sin: os << "sin("; print_node(os, *n.a, 0); os << ')'; break;
        case UnOp::Cos: os << "cos("; print_node(os, *n.a, 0); os << ')'; break;
        case UnOp::Exp: os << "exp("; print_node(os, *n.a, 0); os << ')'; break;
        case UnOp::Sqrt: os << "sqrt("; print_node(os, *n.a, 0); os << ')'; break;
        }
        break;
    case Kind::Bin: {
        char op = n.bin == BinOp::Add ? '+' : n.bin == BinOp::Sub ? '-' : n.bin == BinOp::Mul ? '*' : '/';
        print_node(os, *n.a, prec);
        os << op;
        // left associativity: right child needs parens at equal precedence
        print_node(os, *n.b, prec + 1);
        break;
    }
    case Kind::Pow:
        print_node(os, *n.a, 5);
        os << '^' << n.exponent;
        break;
    }
    if (parens) os << ')';
}

} // namespace detail

inline std::string to_string(const Expr& e) {
    std::ostringstream os;
    detail::print_node(os, e.node(), 0);
    return os.str();
}

// --- parser ---

struct ParseError : std::runtime_error {
    size_t position;
    std::string expected;
    std::string found;
    ParseError(size_t pos, std::string exp, std::string got)
        : std::runtime_error("parse error at offset " + std::to_string(pos) + ": expected " +
                             exp + ", found " + got),
          position(pos), expected(std::move(exp)), found(std::move(got)) {}
};

namespace detail {

struct Lexer {
    std::string_view src;
    size_t pos = 0;

    struct Token {
        enum class Kind { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };
        Kind kind;
        size_t pos;
        double num = 0.0;
        std::string_view text{};
    };

    Token peeked{};
    bool has_peeked = false;

    Token peek() {
        if (!has_peeked) {
            peeked = lex();
            has_peeked = true;
        }
        return peeked;
    }
    Token next() {
        Token t = peek();
        has_peeked = false;
        return t;
    }

    Token lex() {
        while (pos < src.size() && (src[pos] == ' ' || src[pos] == '\t' || src[pos] == '\n' || src[pos] == '\r'))
            ++pos;
        size_t start = pos;
        if (pos >= src.size()) return {Token::Kind::End, start};
        char ch = src[pos];
        switch (ch) {
        case '+': ++pos; return {Token::Kind::Plus, start};
        case '-': ++pos; return {Token::Kind::Minus, start};
        case '*': ++pos; return {Token::Kind::Star, start};
        case '/': ++pos; return {Token::Kind::Slash, start};
        case '^': ++pos; return {Token::Kind::Caret, start};
        case '(': ++pos; return {Token::Kind::LParen, start};
        case ')': ++pos; return {Token::Kind::RParen, start};
        default: break;
        }
        if ((ch >= '0' && ch <= '9') || ch == '.') {
            double value = 0.0;
            auto [end, ec] = std::from_chars(src.data() + pos, src.data() + src.size(), value);
            if (ec != std::errc{})
                throw ParseError(start, "a number", std::string(1, ch));
            pos = static_cast<size_t>(end - src.data());
            return {Token::Kind::Num, start, value};
        }
        if ((ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch == '_') {
            size_t end = pos;
            while (end < src.size() &&
                   ((src[end] >= 'a' && src[end] <= 'z') || (src[end] >= 'A' && src[end] <= 'Z') ||
                    (src[end] >= '0' && src[end] <= '9') || src[end] == '_'))
                ++end;
            Token t{Token::Kind::Ident, start, 0.0, src.substr(pos, end - pos)};
            pos = end;
            return t;
        }
        throw ParseError(start, "a token", std::string(1, ch));
    }
};

inline std::string token_name(const Lexer::Token& t) {
    using K = Lexer::Token::Kind;
    switch (t.kind) {
    case K::Num: return "number";
    case K::Ident: return "'" + std::string(t.text) + "'";
    case K::Plus: return "'+'";
    case K::Minus: return "'-'";
    case K::Star: return "'*'";
    case K::Slash: return "'/'";
    case K::Caret: return "'^'";
    case K::LParen: return "'('";
    case K::RParen: return "')'";
    case K::End: return "end of input";
    }
    return "?";
}

class Parser {
public:
    Parser(std::string_view src, int m) : lex_{src}, m_(m) {}

    Expr parse() {
        Expr e = expr();
        auto t = lex_.peek();
        if (t.kind != Lexer::Token::Kind::End)
            throw ParseError(t.pos, "end of input", token_name(t));
        return e;
    }

private:
    using Token = Lexer::Token;
    Lexer lex_;
    int m_;

    Expr expr() {
        Expr e = term();
        for (;;) {
            auto t = lex_.peek();
            if (t.kind == Token::Kind::Plus) {
                lex_.next();
                e = e + term();
            } else if (t.kind == Token::Kind::Minus) {
                lex_.next();
                e = e - term();
            } else {
                return e;
            }
        }
    }

    Expr term() {
        Expr e = factor();
        for (;;) {
            auto t = lex_.peek();
            if (t.kind == Token::Kind::Star) {
                lex_.next();
                e = e * factor();
            } else if (t.kind == Token::Kind::Slash) {
                lex_.next();
                e = e / factor();
            } else {
                return e;
            }
        }
    }

    // '^' binds tighter than unary minus: -x^2 parses as -(x^2)
    Expr factor() {
        auto t = lex_.peek();
        if (t.kind == Token::Kind::Minus) {
            lex_.next();
            return -factor();
        }
        Expr e = base();
        if (lex_.peek().kind == Token::Kind::Caret) {
            lex_.next();
            return pow(e, integer());
        }
        return e;
    }

    int integer() {
        auto t = lex_.peek();
        bool neg = false;
        if (t.kind == Token::Kind::Minus) {
            lex_.next();
            neg = true;
            t = lex_.peek();
        }
        if (t.kind != Token::Kind::Num || t.num != std::floor(t.num))
            throw ParseError(t.pos, "an integer exponent", token_name(t));
        lex_.next();
        int k = static_cast<int>(t.num);
        return neg ? -k : k;
    }

    Expr base() {
        auto t = lex_.next();
        switch (t.kind) {
        case Token::Kind::Num:
            return Expr::lit(t.num);
        case Token::Kind::LParen: {
            Expr e = expr();
            expect(Token::Kind::RParen, "')'");
            return e;
        }
        case Token::Kind::Ident:
            return ident(t);
        default:
            throw ParseError(t.pos, "a number, identifier, '(' or '-'", token_name(t));
        }
    }

    Expr ident(const Token& t) {
        std::string_view name = t.text;
        if (name == "sin" || name == "cos" || name == "exp" || name == "sqrt") {
            expect(Token::Kind::LParen, "'(' after function name");
            Expr arg = expr();
            expect(Token::Kind::RParen, "')'");
            if (name == "sin") return sin(arg);
            if (name == "cos") return cos(arg);
            if (name == "exp") return exp(arg);
            return sqrt(arg);
        }
        if (name == "pi") return Expr::lit(M_PI);
        if (name == "sqrt2") return Expr::lit(std::sqrt(2.0));
        if (name == "x") return Expr::x();
        if (name == "y") return Expr::y();
        if (name.size() > 2 && name.substr(0, 2) == "c_") {
            int idx = 0;
            auto digits = name.substr(2);
            auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
            if (ec == std::errc{} && end == digits.data() + digits.size() && idx >= 1 && idx <= m_)
                return Expr::c(idx - 1);
        }
        throw ParseError(t.pos, declared_variables(), "'" + std::string(name) + "'");
    }

    std::string declared_variables() const {
        std::string s = "one of the declared variables {";
        for (int i = 1; i <= m_; ++i) s += "c_" + std::to_string(i) + ", ";
        s += "x, y} or a function {sin, cos, exp, sqrt} or constant {pi, sqrt2}";
        return s;
    }

    void expect(Token::Kind k, const std::string& what) {
        auto t = lex_.next();
        if (t.kind != k) throw ParseError(t.pos, what, token_name(t));
    }
};

} // namespace detail

// Parse an expression over the variables {c_1..c_m, x, y}.
inline Expr parse_expr(std::string_view source, int m = 0) {
    return detail::Parser(source, m).parse();
}

} // namespace torint
