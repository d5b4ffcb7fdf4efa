#pragma once

#include <cctype>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmap/dual.hpp"
#include "rmap/errors.hpp"

namespace rmap {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Value, gradient and symmetric Hessian of a scalar expression at a point.
struct Jet2 {
    double value = 0.0;
    Vec gradient;
    Mat hessian;
};

namespace detail {

enum class NodeKind { Constant, Variable, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp, Log, Sqrt, PowInt };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double constant = 0.0;   // Constant
    int var_index = 0;       // Variable (0-based)
    long long exponent = 0;  // PowInt
    NodePtr lhs, rhs;
};

template <typename T>
T eval_node(const Node& n, const std::vector<T>& vars) {
    switch (n.kind) {
        case NodeKind::Constant: return T(n.constant);
        case NodeKind::Variable: return vars[static_cast<std::size_t>(n.var_index)];
        case NodeKind::Add: return eval_node(*n.lhs, vars) + eval_node(*n.rhs, vars);
        case NodeKind::Sub: return eval_node(*n.lhs, vars) - eval_node(*n.rhs, vars);
        case NodeKind::Mul: return eval_node(*n.lhs, vars) * eval_node(*n.rhs, vars);
        case NodeKind::Div: return eval_node(*n.lhs, vars) / eval_node(*n.rhs, vars);
        case NodeKind::Neg: return -eval_node(*n.lhs, vars);
        case NodeKind::Sin: return sin(eval_node(*n.lhs, vars));
        case NodeKind::Cos: return cos(eval_node(*n.lhs, vars));
        case NodeKind::Exp: return exp(eval_node(*n.lhs, vars));
        case NodeKind::Log: return log(eval_node(*n.lhs, vars));
        case NodeKind::Sqrt: return sqrt(eval_node(*n.lhs, vars));
        case NodeKind::PowInt: return pow_int(eval_node(*n.lhs, vars), n.exponent);
    }
    throw EvalError("corrupt expression node");
}

// double needs its own division/log/sqrt guards (no dual overloads fire).
template <>
inline double eval_node<double>(const Node& n, const std::vector<double>& vars) {
    switch (n.kind) {
        case NodeKind::Constant: return n.constant;
        case NodeKind::Variable: return vars[static_cast<std::size_t>(n.var_index)];
        case NodeKind::Add: return eval_node<double>(*n.lhs, vars) + eval_node<double>(*n.rhs, vars);
        case NodeKind::Sub: return eval_node<double>(*n.lhs, vars) - eval_node<double>(*n.rhs, vars);
        case NodeKind::Mul: return eval_node<double>(*n.lhs, vars) * eval_node<double>(*n.rhs, vars);
        case NodeKind::Div: {
            double d = eval_node<double>(*n.rhs, vars);
            if (d == 0.0) throw EvalError("division by zero");
            return eval_node<double>(*n.lhs, vars) / d;
        }
        case NodeKind::Neg: return -eval_node<double>(*n.lhs, vars);
        case NodeKind::Sin: return std::sin(eval_node<double>(*n.lhs, vars));
        case NodeKind::Cos: return std::cos(eval_node<double>(*n.lhs, vars));
        case NodeKind::Exp: return std::exp(eval_node<double>(*n.lhs, vars));
        case NodeKind::Log: {
            double a = eval_node<double>(*n.lhs, vars);
            if (a <= 0.0) throw EvalError("log of non-positive value");
            return std::log(a);
        }
        case NodeKind::Sqrt: {
            double a = eval_node<double>(*n.lhs, vars);
            if (a < 0.0) throw EvalError("sqrt of negative value");
            return std::sqrt(a);
        }
        case NodeKind::PowInt: return pow_int(eval_node<double>(*n.lhs, vars), n.exponent);
    }
    throw EvalError("corrupt expression node");
}

void print_node(const Node& n, std::ostream& out);

inline void print_child(const NodePtr& c, std::ostream& out, bool parens) {
    if (parens) out << '(';
    print_node(*c, out);
    if (parens) out << ')';
}

inline bool is_atom(const Node& n) {
    return n.kind == NodeKind::Constant || n.kind == NodeKind::Variable || n.kind == NodeKind::Sin ||
           n.kind == NodeKind::Cos || n.kind == NodeKind::Exp || n.kind == NodeKind::Log ||
           n.kind == NodeKind::Sqrt;
}

inline void print_node(const Node& n, std::ostream& out) {
    switch (n.kind) {
        case NodeKind::Constant: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << n.constant;
            out << tmp.str();
            return;
        }
        case NodeKind::Variable: out << 'x' << (n.var_index + 1); return;
        case NodeKind::Add:
            print_node(*n.lhs, out);
            out << " + ";
            print_node(*n.rhs, out);
            return;
        case NodeKind::Sub:
            print_node(*n.lhs, out);
            out << " - ";
            print_child(n.rhs, out, n.rhs->kind == NodeKind::Add || n.rhs->kind == NodeKind::Sub);
            return;
        case NodeKind::Mul:
            print_child(n.lhs, out, n.lhs->kind == NodeKind::Add || n.lhs->kind == NodeKind::Sub);
            out << "*";
            print_child(n.rhs, out, !is_atom(*n.rhs) && n.rhs->kind != NodeKind::PowInt);
            return;
        case NodeKind::Div:
            print_child(n.lhs, out, n.lhs->kind == NodeKind::Add || n.lhs->kind == NodeKind::Sub);
            out << "/";
            print_child(n.rhs, out, !is_atom(*n.rhs));
            return;
        case NodeKind::Neg:
            out << "-";
            print_child(n.lhs, out, !is_atom(*n.lhs));
            return;
        case NodeKind::Sin: out << "sin("; print_node(*n.lhs, out); out << ')'; return;
        case NodeKind::Cos: out << "cos("; print_node(*n.lhs, out); out << ')'; return;
        case NodeKind::Exp: out << "exp("; print_node(*n.lhs, out); out << ')'; return;
        case NodeKind::Log: out << "log("; print_node(*n.lhs, out); out << ')'; return;
        case NodeKind::Sqrt: out << "sqrt("; print_node(*n.lhs, out); out << ')'; return;
        case NodeKind::PowInt:
            print_child(n.lhs, out, !is_atom(*n.lhs));
            out << '^' << n.exponent;
            return;
    }
}

} // namespace detail

// Immutable scalar coordinate expression over x1..xn. Evaluation is pure, so
// instances can be shared freely across threads.
class Expression {
public:
    Expression() = default;

    double eval(const Vec& point) const {
        require(point.size());
        std::vector<double> vars(point.data(), point.data() + point.size());
        return detail::eval_node<double>(*root_, vars);
    }

    // Value and gradient, one first-order dual pass per variable.
    void eval_with_gradient(const Vec& point, double& value, Vec& grad) const {
        require(point.size());
        const int n = static_cast<int>(point.size());
        grad.resize(n);
        std::vector<Dual<double>> vars(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) vars[static_cast<std::size_t>(i)] = Dual<double>(point[i]);
        for (int i = 0; i < n; ++i) {
            vars[static_cast<std::size_t>(i)].deriv = 1.0;
            Dual<double> r = detail::eval_node<Dual<double>>(*root_, vars);
            vars[static_cast<std::size_t>(i)].deriv = 0.0;
            grad[i] = r.deriv;
            if (i == 0) value = r.value;
        }
        if (n == 0) value = detail::eval_node<double>(*root_, {});
    }

    Vec gradient(const Vec& point) const {
        double v;
        Vec g;
        eval_with_gradient(point, v, g);
        return g;
    }

    // Full second-order jet from seeded Dual<Dual<double>> passes; the
    // Hessian is mirrored from the upper triangle so symmetry is exact.
    Jet2 jet(const Vec& point) const {
        require(point.size());
        const int n = static_cast<int>(point.size());
        Jet2 out;
        out.gradient = Vec::Zero(n);
        out.hessian = Mat::Zero(n, n);
        using D2 = Dual<Dual<double>>;
        std::vector<D2> vars(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) vars[static_cast<std::size_t>(i)] = D2(Dual<double>(point[i]));
        if (n == 0) {
            out.value = detail::eval_node<double>(*root_, {});
            return out;
        }
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                auto& vi = vars[static_cast<std::size_t>(i)];
                auto& vj = vars[static_cast<std::size_t>(j)];
                vi.value.deriv = 1.0; // d/dx_i (inner)
                vj.deriv.value = 1.0; // d/dx_j (outer)
                D2 r = detail::eval_node<D2>(*root_, vars);
                vi.value.deriv = 0.0;
                vj.deriv.value = 0.0;
                if (i == 0 && j == 0) out.value = r.value.value;
                if (i == j) out.gradient[i] = r.value.deriv;
                out.hessian(i, j) = r.deriv.deriv;
                out.hessian(j, i) = r.deriv.deriv;
            }
        }
        return out;
    }

    int n_vars() const { return n_vars_; }
    bool valid() const { return root_ != nullptr; }

    // True when no variable appears, so the value is position-independent.
    bool is_constant() const { return root_ && node_constant(*root_); }

    std::string to_string() const {
        std::ostringstream out;
        detail::print_node(*root_, out);
        return out.str();
    }

    static Expression parse(const std::string& text, int n_vars);

    static Expression constant(double c, int n_vars) {
        auto node = std::make_shared<detail::Node>();
        node->kind = detail::NodeKind::Constant;
        node->constant = c;
        return Expression(node, n_vars);
    }

    // Structural composition; used to assemble fields like J*Y whose
    // derivatives must stay on the exact-jet path.
    static Expression add(const Expression& a, const Expression& b) { return combine(detail::NodeKind::Add, a, b); }
    static Expression mul(const Expression& a, const Expression& b) { return combine(detail::NodeKind::Mul, a, b); }

private:
    Expression(detail::NodePtr root, int n_vars) : root_(std::move(root)), n_vars_(n_vars) {}

    void require(Eigen::Index point_size) const {
        if (!root_) throw EvalError("empty expression");
        if (static_cast<int>(point_size) < n_vars_) throw EvalError("point has fewer coordinates than expression variables");
    }

    static bool node_constant(const detail::Node& n) {
        if (n.kind == detail::NodeKind::Variable) return false;
        if (n.lhs && !node_constant(*n.lhs)) return false;
        if (n.rhs && !node_constant(*n.rhs)) return false;
        return true;
    }

    static Expression combine(detail::NodeKind kind, const Expression& a, const Expression& b) {
        if (!a.root_ || !b.root_) throw EvalError("cannot combine empty expressions");
        auto node = std::make_shared<detail::Node>();
        node->kind = kind;
        node->lhs = a.root_;
        node->rhs = b.root_;
        return Expression(node, std::max(a.n_vars_, b.n_vars_));
    }

    detail::NodePtr root_;
    int n_vars_ = 0;

    friend class ExpressionParser;
};

// Recursive-descent parser for the infix grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ['-'] atom ['^' int]
//   atom   := number | x<k> | func '(' args ')' | '(' expr ')'
class ExpressionParser {
public:
    ExpressionParser(const std::string& text, int n_vars) : text_(text), n_vars_(n_vars) {}

    Expression run() {
        detail::NodePtr root = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) throw SyntaxError("unexpected trailing input", pos_);
        return Expression(root, n_vars_);
    }

private:
    using Node = detail::Node;
    using NodePtr = detail::NodePtr;
    using NodeKind = detail::NodeKind;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool accept(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    static std::shared_ptr<Node> make(NodeKind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
        auto n = std::make_shared<Node>();
        n->kind = kind;
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = make(NodeKind::Add, lhs, parse_term());
            else if (accept('-'))
                lhs = make(NodeKind::Sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_factor();
        for (;;) {
            if (accept('*'))
                lhs = make(NodeKind::Mul, lhs, parse_factor());
            else if (accept('/'))
                lhs = make(NodeKind::Div, lhs, parse_factor());
            else
                return lhs;
        }
    }

    NodePtr parse_factor() {
        bool negate = accept('-');
        NodePtr a = parse_atom();
        if (accept('^')) {
            auto n = make(NodeKind::PowInt, a);
            n->exponent = parse_int_literal();
            a = n;
        }
        if (negate) a = make(NodeKind::Neg, a);
        return a;
    }

    long long parse_int_literal() {
        skip_ws();
        std::size_t start = pos_;
        bool neg = accept('-');
        skip_ws();
        std::size_t digits_start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ == digits_start) throw SyntaxError("expected integer exponent", start);
        long long v = std::stoll(text_.substr(digits_start, pos_ - digits_start));
        return neg ? -v : v;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_expr();
            if (!accept(')')) throw SyntaxError("expected ')'", pos_);
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        // Scientific notation: 1e-3, 2.5E+4.
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            } else {
                pos_ = mark; // 'e' belongs to something else, not this literal
            }
        }
        const std::string tok = text_.substr(start, pos_ - start);
        try {
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::Constant;
            n->constant = std::stod(tok);
            return n;
        } catch (const std::exception&) {
            throw SyntaxError("malformed number '" + tok + "'", start);
        }
    }

    NodePtr parse_ident() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name = text_.substr(start, pos_ - start);

        if (name.size() >= 2 && name[0] == 'x') {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
            if (digits) {
                int idx = std::stoi(name.substr(1));
                if (idx < 1 || idx > n_vars_)
                    throw UnknownSymbol("variable " + name + " out of range for " +
                                        std::to_string(n_vars_) + " variables");
                auto n = std::make_shared<Node>();
                n->kind = NodeKind::Variable;
                n->var_index = idx - 1;
                return n;
            }
        }

        NodeKind kind;
        bool binary_pow = false;
        if (name == "sin") kind = NodeKind::Sin;
        else if (name == "cos") kind = NodeKind::Cos;
        else if (name == "exp") kind = NodeKind::Exp;
        else if (name == "log") kind = NodeKind::Log;
        else if (name == "sqrt") kind = NodeKind::Sqrt;
        else if (name == "pow") { kind = NodeKind::PowInt; binary_pow = true; }
        else throw UnknownSymbol("unknown symbol '" + name + "'");

        if (!accept('(')) throw SyntaxError("expected '(' after function '" + name + "'", pos_);
        NodePtr arg = parse_expr();
        auto n = make(kind, arg);
        if (binary_pow) {
            if (!accept(',')) throw ArityError("pow expects two arguments: pow(expr, integer)");
            n->exponent = parse_int_literal();
        } else if (peek(',')) {
            throw ArityError("function '" + name + "' takes exactly one argument");
        }
        if (!accept(')')) throw SyntaxError("expected ')'", pos_);
        return n;
    }

    const std::string& text_;
    int n_vars_;
    std::size_t pos_ = 0;
};

inline Expression Expression::parse(const std::string& text, int n_vars) {
    return ExpressionParser(text, n_vars).run();
}

} // namespace rmap
