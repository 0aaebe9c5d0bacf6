#include "topflow/expr.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <vector>

#include "topflow/error.hpp"

namespace topflow {

struct Expr::Node {
    enum class Op {
        constant, var_x, var_y,
        add, sub, mul, div, pow, neg,
        abs, sqrt, sin, cos, tan, exp, log, tanh,
        min, max
    };
    Op op;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;
};

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_const(double v) {
    auto n = std::make_shared<Node>();
    n->op = Node::Op::constant;
    n->value = v;
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        auto e = expr();
        skip_ws();
        if (pos_ != s_.size())
            throw ParseError("unexpected trailing characters in expression '" + s_ + "' at position " +
                             std::to_string(pos_));
        return e;
    }

private:
    const std::string& s_;
    size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    NodePtr expr() {
        auto lhs = term();
        for (;;) {
            if (eat('+'))
                lhs = make(Node::Op::add, lhs, term());
            else if (eat('-'))
                lhs = make(Node::Op::sub, lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term() {
        auto lhs = unary();
        for (;;) {
            if (eat('*'))
                lhs = make(Node::Op::mul, lhs, unary());
            else if (eat('/'))
                lhs = make(Node::Op::div, lhs, unary());
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (eat('-')) return make(Node::Op::neg, unary());
        if (eat('+')) return unary();
        return power();
    }

    NodePtr power() {
        auto base = atom();
        if (eat('^')) return make(Node::Op::pow, base, unary());
        return base;
    }

    NodePtr atom() {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError("unexpected end of expression '" + s_ + "'");
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        if (eat('(')) {
            auto e = expr();
            if (!eat(')')) throw ParseError("missing ')' in expression '" + s_ + "'");
            return e;
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "' in expression '" + s_ + "'");
    }

    NodePtr number() {
        size_t end = pos_;
        while (end < s_.size() &&
               (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '.' ||
                s_[end] == 'e' || s_[end] == 'E' ||
                ((s_[end] == '+' || s_[end] == '-') && end > pos_ &&
                 (s_[end - 1] == 'e' || s_[end - 1] == 'E'))))
            ++end;
        size_t used = 0;
        double v;
        try {
            v = std::stod(s_.substr(pos_, end - pos_), &used);
        } catch (const std::exception&) {
            throw ParseError("bad number in expression '" + s_ + "'");
        }
        pos_ += used;
        return make_const(v);
    }

    NodePtr identifier() {
        size_t end = pos_;
        while (end < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
            ++end;
        std::string name = s_.substr(pos_, end - pos_);
        pos_ = end;
        if (name == "x") return make(Node::Op::var_x);
        if (name == "y") return make(Node::Op::var_y);
        if (name == "pi") return make_const(M_PI);

        static const std::vector<std::pair<std::string, Node::Op>> unary_fns = {
            {"abs", Node::Op::abs},   {"sqrt", Node::Op::sqrt}, {"sin", Node::Op::sin},
            {"cos", Node::Op::cos},   {"tan", Node::Op::tan},   {"exp", Node::Op::exp},
            {"log", Node::Op::log},   {"tanh", Node::Op::tanh}};
        for (const auto& [fname, op] : unary_fns) {
            if (name == fname) {
                if (!eat('(')) throw ParseError("expected '(' after '" + name + "'");
                auto a = expr();
                if (!eat(')')) throw ParseError("missing ')' after '" + name + "(...'");
                return make(op, a);
            }
        }
        if (name == "min" || name == "max") {
            if (!eat('(')) throw ParseError("expected '(' after '" + name + "'");
            auto a = expr();
            if (!eat(',')) throw ParseError("expected ',' in '" + name + "(a,b)'");
            auto b = expr();
            if (!eat(')')) throw ParseError("missing ')' after '" + name + "(...'");
            return make(name == "min" ? Node::Op::min : Node::Op::max, a, b);
        }
        throw ParseError("unknown identifier '" + name + "' in expression '" + s_ + "'");
    }
};

double eval_node(const Node& n, double x, double y) {
    using Op = Node::Op;
    switch (n.op) {
        case Op::constant: return n.value;
        case Op::var_x: return x;
        case Op::var_y: return y;
        case Op::add: return eval_node(*n.a, x, y) + eval_node(*n.b, x, y);
        case Op::sub: return eval_node(*n.a, x, y) - eval_node(*n.b, x, y);
        case Op::mul: return eval_node(*n.a, x, y) * eval_node(*n.b, x, y);
        case Op::div: return eval_node(*n.a, x, y) / eval_node(*n.b, x, y);
        case Op::pow: return std::pow(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
        case Op::neg: return -eval_node(*n.a, x, y);
        case Op::abs: return std::abs(eval_node(*n.a, x, y));
        case Op::sqrt: return std::sqrt(eval_node(*n.a, x, y));
        case Op::sin: return std::sin(eval_node(*n.a, x, y));
        case Op::cos: return std::cos(eval_node(*n.a, x, y));
        case Op::tan: return std::tan(eval_node(*n.a, x, y));
        case Op::exp: return std::exp(eval_node(*n.a, x, y));
        case Op::log: return std::log(eval_node(*n.a, x, y));
        case Op::tanh: return std::tanh(eval_node(*n.a, x, y));
        case Op::min: return std::min(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
        case Op::max: return std::max(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
    }
    return 0.0;
}

}  // namespace

Expr Expr::parse(const std::string& text) {
    Expr e;
    e.root_ = Parser(text).parse();
    e.text_ = text;
    return e;
}

double Expr::eval(double x, double y) const {
    if (!root_) throw Error("evaluating an empty expression");
    return eval_node(*root_, x, y);
}

}  // namespace topflow
