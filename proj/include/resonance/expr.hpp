#pragma once

// Expression language for user-supplied nonlinearities f(t, x).
//
// Grammar (lowest to highest precedence):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | 't' | 'x' | name | func '(' args ')' | '(' sum ')'
//
// Named constants may be bound at parse time; they become literals.

#include "resonance/common.hpp"

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string_view>

namespace resonance {

class ParseError : public Error {
public:
    ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& what)
        : Error(what), offset_(offset), expected_(std::move(expected))
    {
    }
    std::size_t offset() const noexcept { return offset_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

class UnknownIdentifierError : public ParseError {
public:
    UnknownIdentifierError(std::size_t offset, std::string name)
        : ParseError(offset, {}, "unknown identifier '" + name + "' at offset " + std::to_string(offset)),
          name_(std::move(name))
    {
    }
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// Evaluation left the domain of a sub-expression.
class DomainError : public Error {
public:
    DomainError(std::string subtree, const std::string& reason)
        : Error(reason + " in '" + subtree + "'"), subtree_(std::move(subtree))
    {
    }
    const std::string& subtree() const noexcept { return subtree_; }

private:
    std::string subtree_;
};

enum class NodeKind { Num, VarT, VarX, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Abs, Exp, Log, Min, Max };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double value = 0.0; // Num only; always finite and >= 0
    std::vector<NodePtr> args;
};

inline NodePtr make_num(double v) { return std::make_shared<const Node>(Node{NodeKind::Num, v, {}}); }
inline NodePtr make_var_t() { return std::make_shared<const Node>(Node{NodeKind::VarT, 0.0, {}}); }
inline NodePtr make_var_x() { return std::make_shared<const Node>(Node{NodeKind::VarX, 0.0, {}}); }
inline NodePtr make_node(NodeKind k, std::vector<NodePtr> args)
{
    return std::make_shared<const Node>(Node{k, 0.0, std::move(args)});
}

inline bool structurally_equal(const Node& a, const Node& b)
{
    if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
    if (a.kind == NodeKind::Num && a.value != b.value) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!structurally_equal(*a.args[i], *b.args[i])) return false;
    return true;
}

namespace detail {

inline int precedence(NodeKind k)
{
    switch (k) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
    }
}

inline const char* func_name(NodeKind k)
{
    switch (k) {
    case NodeKind::Sin: return "sin";
    case NodeKind::Cos: return "cos";
    case NodeKind::Abs: return "abs";
    case NodeKind::Exp: return "exp";
    case NodeKind::Log: return "log";
    case NodeKind::Min: return "min";
    case NodeKind::Max: return "max";
    default: return "";
    }
}

inline const char* op_symbol(NodeKind k)
{
    switch (k) {
    case NodeKind::Add: return " + ";
    case NodeKind::Sub: return " - ";
    case NodeKind::Mul: return "*";
    case NodeKind::Div: return "/";
    case NodeKind::Pow: return "^";
    default: return "";
    }
}

inline void print(const Node& n, std::string& out)
{
    auto wrapped = [&out](const Node& child, bool parens) {
        if (parens) out += '(';
        print(child, out);
        if (parens) out += ')';
    };
    const int p = precedence(n.kind);
    switch (n.kind) {
    case NodeKind::Num: out += fmt_shortest(n.value); return;
    case NodeKind::VarT: out += 't'; return;
    case NodeKind::VarX: out += 'x'; return;
    case NodeKind::Neg:
        out += '-';
        wrapped(*n.args[0], precedence(n.args[0]->kind) < 3);
        return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
        wrapped(*n.args[0], precedence(n.args[0]->kind) < p);
        out += op_symbol(n.kind);
        wrapped(*n.args[1], precedence(n.args[1]->kind) <= p);
        return;
    case NodeKind::Pow:
        wrapped(*n.args[0], precedence(n.args[0]->kind) <= p);
        out += '^';
        wrapped(*n.args[1], precedence(n.args[1]->kind) < 3);
        return;
    default:
        out += func_name(n.kind);
        out += '(';
        for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) out += ", ";
            print(*n.args[i], out);
        }
        out += ')';
        return;
    }
}

/// x^p with exact repeated multiplication for integral p.
inline std::optional<double> checked_pow(double base, double p)
{
    if (p == std::floor(p) && std::abs(p) <= 1024.0) {
        long long e = static_cast<long long>(std::abs(p));
        if (base == 0.0 && p < 0) return std::nullopt;
        double r = 1.0, b = base;
        while (e) {
            if (e & 1) r *= b;
            b *= b;
            e >>= 1;
        }
        return p < 0 ? 1.0 / r : r;
    }
    if (base < 0.0) return std::nullopt;
    if (base == 0.0 && p < 0) return std::nullopt;
    return std::pow(base, p);
}

class Parser {
public:
    Parser(std::string_view src, const std::map<std::string, double>& constants)
        : src_(src), constants_(constants)
    {
    }

    NodePtr parse()
    {
        NodePtr e = sum();
        skip_ws();
        if (pos_ < src_.size()) fail({"operator", "end of input"});
        return e;
    }

private:
    std::string_view src_;
    const std::map<std::string, double>& constants_;
    std::size_t pos_ = 0;

    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(std::vector<std::string> expected)
    {
        std::string found = pos_ < src_.size() ? std::string("'") + src_[pos_] + "'" : "end of input";
        std::string msg = "syntax error at offset " + std::to_string(pos_) + ": found " + found + ", expected one of {";
        for (std::size_t i = 0; i < expected.size(); ++i) msg += (i ? ", " : "") + expected[i];
        msg += "}";
        throw ParseError(pos_, std::move(expected), msg);
    }

    NodePtr sum()
    {
        NodePtr lhs = product();
        for (;;) {
            if (accept('+'))
                lhs = make_node(NodeKind::Add, {lhs, product()});
            else if (accept('-'))
                lhs = make_node(NodeKind::Sub, {lhs, product()});
            else
                return lhs;
        }
    }

    NodePtr product()
    {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make_node(NodeKind::Mul, {lhs, unary()});
            else if (accept('/'))
                lhs = make_node(NodeKind::Div, {lhs, unary()});
            else
                return lhs;
        }
    }

    NodePtr unary()
    {
        if (accept('-')) return make_node(NodeKind::Neg, {unary()});
        return power();
    }

    NodePtr power()
    {
        NodePtr base = primary();
        if (accept('^')) return make_node(NodeKind::Pow, {base, unary()});
        return base;
    }

    NodePtr number()
    {
        const char* first = src_.data() + pos_;
        const char* last = src_.data() + src_.size();
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::general);
        if (ec != std::errc{} || !std::isfinite(v)) fail({"number"});
        pos_ += static_cast<std::size_t>(ptr - first);
        return make_num(v);
    }

    NodePtr primary()
    {
        skip_ws();
        if (pos_ >= src_.size()) fail({"number", "identifier", "(", "-"});
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (c == '(') {
            ++pos_;
            NodePtr e = sum();
            if (!accept(')')) fail({")"});
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            const std::string name(src_.substr(start, pos_ - start));
            if (name == "t") return make_var_t();
            if (name == "x") return make_var_x();
            static const std::map<std::string, std::pair<NodeKind, int>> funcs = {
                {"sin", {NodeKind::Sin, 1}}, {"cos", {NodeKind::Cos, 1}}, {"abs", {NodeKind::Abs, 1}},
                {"exp", {NodeKind::Exp, 1}}, {"log", {NodeKind::Log, 1}}, {"min", {NodeKind::Min, 2}},
                {"max", {NodeKind::Max, 2}},
            };
            if (auto it = funcs.find(name); it != funcs.end()) {
                if (!accept('(')) fail({"("});
                std::vector<NodePtr> args;
                args.push_back(sum());
                while (accept(',')) args.push_back(sum());
                if (!accept(')')) fail({",", ")"});
                if (static_cast<int>(args.size()) != it->second.second)
                    throw ParseError(start, {}, name + " expects " + std::to_string(it->second.second) +
                                                    " argument(s) at offset " + std::to_string(start));
                return make_node(it->second.first, std::move(args));
            }
            if (auto it = constants_.find(name); it != constants_.end()) {
                if (!std::isfinite(it->second)) throw ParseError(start, {}, "constant '" + name + "' is not finite");
                if (it->second < 0) return make_node(NodeKind::Neg, {make_num(-it->second)});
                return make_num(it->second);
            }
            throw UnknownIdentifierError(start, name);
        }
        fail({"number", "identifier", "(", "-"});
    }
};

enum class Op : unsigned char { Push, T, X, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Abs, Exp, Log, Min, Max };

struct Instr {
    Op op;
    double value;
    const Node* node;
};

inline void compile(const Node& n, std::vector<Instr>& code, int& depth, int& max_depth)
{
    for (const auto& a : n.args) compile(*a, code, depth, max_depth);
    Op op{};
    switch (n.kind) {
    case NodeKind::Num: op = Op::Push; break;
    case NodeKind::VarT: op = Op::T; break;
    case NodeKind::VarX: op = Op::X; break;
    case NodeKind::Neg: op = Op::Neg; break;
    case NodeKind::Add: op = Op::Add; break;
    case NodeKind::Sub: op = Op::Sub; break;
    case NodeKind::Mul: op = Op::Mul; break;
    case NodeKind::Div: op = Op::Div; break;
    case NodeKind::Pow: op = Op::Pow; break;
    case NodeKind::Sin: op = Op::Sin; break;
    case NodeKind::Cos: op = Op::Cos; break;
    case NodeKind::Abs: op = Op::Abs; break;
    case NodeKind::Exp: op = Op::Exp; break;
    case NodeKind::Log: op = Op::Log; break;
    case NodeKind::Min: op = Op::Min; break;
    case NodeKind::Max: op = Op::Max; break;
    }
    depth += 1 - static_cast<int>(n.args.size());
    max_depth = std::max(max_depth, depth);
    code.push_back({op, n.value, &n});
}

} // namespace detail

/// Immutable parsed expression over the variables t and x.
class Expr {
public:
    Expr() : Expr(make_num(0.0)) {}

    explicit Expr(NodePtr root) : root_(std::move(root))
    {
        int depth = 0;
        detail::compile(*root_, code_, depth, max_depth_);
    }

    const Node& root() const noexcept { return *root_; }
    const NodePtr& root_ptr() const noexcept { return root_; }

    std::string str() const
    {
        std::string out;
        detail::print(*root_, out);
        return out;
    }

    /// Evaluates at (t, x); throws DomainError naming the offending subtree.
    double operator()(double t, double x) const
    {
        constexpr int kInline = 32;
        std::array<double, kInline> small{};
        std::vector<double> big;
        double* s = small.data();
        if (max_depth_ > kInline) {
            big.resize(max_depth_);
            s = big.data();
        }
        int sp = 0;
        for (const auto& in : code_) {
            double r = 0.0;
            const char* bad = nullptr;
            switch (in.op) {
            case detail::Op::Push: s[sp++] = in.value; continue;
            case detail::Op::T: s[sp++] = t; continue;
            case detail::Op::X: s[sp++] = x; continue;
            case detail::Op::Neg: s[sp - 1] = -s[sp - 1]; continue;
            case detail::Op::Add: r = s[sp - 2] + s[sp - 1]; break;
            case detail::Op::Sub: r = s[sp - 2] - s[sp - 1]; break;
            case detail::Op::Mul: r = s[sp - 2] * s[sp - 1]; break;
            case detail::Op::Div:
                if (s[sp - 1] == 0.0) bad = "division by zero";
                r = s[sp - 2] / s[sp - 1];
                break;
            case detail::Op::Pow: {
                auto p = detail::checked_pow(s[sp - 2], s[sp - 1]);
                if (!p) bad = "power outside its domain";
                r = p.value_or(0.0);
                break;
            }
            case detail::Op::Sin: r = std::sin(s[sp - 1]); break;
            case detail::Op::Cos: r = std::cos(s[sp - 1]); break;
            case detail::Op::Abs: r = std::abs(s[sp - 1]); break;
            case detail::Op::Exp: r = std::exp(s[sp - 1]); break;
            case detail::Op::Log:
                if (!(s[sp - 1] > 0.0)) bad = "log of nonpositive value";
                r = bad ? 0.0 : std::log(s[sp - 1]);
                break;
            case detail::Op::Min: r = std::min(s[sp - 2], s[sp - 1]); break;
            case detail::Op::Max: r = std::max(s[sp - 2], s[sp - 1]); break;
            }
            const int arity = static_cast<int>(in.node->args.size());
            if (!bad && !std::isfinite(r)) bad = "non-finite result";
            if (bad) {
                std::string sub;
                detail::print(*in.node, sub);
                throw DomainError(sub, bad);
            }
            sp -= arity;
            s[sp++] = r;
        }
        return s[0];
    }

    friend bool operator==(const Expr& a, const Expr& b) { return structurally_equal(*a.root_, *b.root_); }

private:
    NodePtr root_;
    std::vector<detail::Instr> code_;
    int max_depth_ = 0;
};

/// Parses `source`; identifiers other than t, x and the built-in functions
/// must be bound in `constants`.
inline Expr parse(std::string_view source, const std::map<std::string, double>& constants = {})
{
    detail::Parser p(source, constants);
    return Expr(p.parse());
}

inline double eval(const Expr& e, double t, double x) { return e(t, x); }

inline std::string print(const Expr& e) { return e.str(); }

} // namespace resonance
