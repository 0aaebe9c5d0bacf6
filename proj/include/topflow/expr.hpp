#pragma once

#include <memory>
#include <string>

namespace topflow {

// Closed-form scalar expression of (x, y). Supports numbers, x, y, pi,
// + - * / ^, unary minus, parentheses and the functions
// abs, sqrt, sin, cos, tan, exp, log, tanh, min(a,b), max(a,b).
// Used for Dirichlet velocity profiles and initial phase fields.
class Expr {
public:
    Expr() = default;
    static Expr parse(const std::string& text);

    double eval(double x, double y) const;
    bool valid() const { return root_ != nullptr; }
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

}  // namespace topflow
