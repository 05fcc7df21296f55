#pragma once

// Closed-form field expressions.
//
// Grammar (whitespace insensitive):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?            right associative
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Names:
//   x1 .. xn     coordinates of a point (for paths: value at the i-th lattice time)
//   t            time (inside integral(...) and for center-path definitions)
//   w            path value at time t (inside integral(...))
//   wT           terminal value of a path
//   pi           3.14159...
//
// Functions: sin cos tan exp log sqrt tanh abs (unary), min max (binary),
// integral(e) = trapezoidal integral of e over the lattice times [0, T], with
// the path pinned at w(0) = 0.

#include <memory>
#include <span>
#include <string>

namespace omlab {

struct ExprNode;

/// Inputs to an expression evaluation.
struct EvalContext {
    std::span<const double> coords;  ///< point coordinates or path values at t_1..t_n
    double t = 0.0;
    double w = 0.0;
    double terminal_time = 1.0;  ///< used by integral(...) on paths
};

class Expression {
public:
    Expression();  // the constant 0

    /// Parses `source`; throws InputError with the offending position on failure.
    static Expression parse(const std::string& source);
    static Expression constant(double value);

    double evaluate(const EvalContext& ctx) const;
    double evaluate(std::span<const double> coords) const { return evaluate(EvalContext{coords}); }

    const std::string& source() const { return source_; }

    bool is_constant() const;
    /// Largest coordinate index referenced (x3 -> 3), 0 if none.
    int max_coordinate() const;
    /// True when the expression reads a path only through wT.
    bool terminal_only() const;
    bool uses_path_primitives() const;

private:
    std::shared_ptr<const ExprNode> root_;
    std::string source_;
};

}  // namespace omlab
