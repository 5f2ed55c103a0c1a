#pragma once

// Expression language for real-valued functions of n variables.
//
// Grammar (whitespace insignificant):
//
//   expr    := term  (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' exponent)?          right-associative
//   exponent:= '-' exponent | power
//   primary := number | constant | variable | call | '(' expr ')'
//   call    := name '(' [expr (',' expr)*] ')'
//
// number    [0-9]+(.[0-9]+)?([eE][+-]?[0-9]+)?
// constant  pi, e
// variable  x1..xn; x, y, z alias x1, x2, x3 when n <= 3
// unary fns abs sqrt exp log sin cos tanh
// binary    min max (two or more arguments, folded left), hypot
// nullary   norm()  Euclidean norm of the evaluation point
//
// There is no implicit multiplication: "2x1" is a syntax error.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blowup {

enum class Op : std::uint8_t {
    Constant,
    Variable,
    Neg,
    Abs,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
    Hypot,
    Norm,
};

/// One AST node. Children always precede their parent in the node array,
/// so a forward sweep over the array evaluates the tree bottom-up.
struct Node {
    Op op = Op::Constant;
    double value = 0.0;  ///< Constant payload.
    int index = 0;       ///< Variable index (0-based), or named-constant tag for Constant.
    int lhs = -1;
    int rhs = -1;
};

/// Value together with all n first partial derivatives.
struct DualVector {
    double value = 0.0;
    std::vector<double> partials;
};

/// Immutable parsed expression. Evaluation is pure and reentrant.
class Expr {
public:
    static Expr parse(std::string_view source, int dimension);

    int dimension() const { return dimension_; }
    std::span<const Node> nodes() const { return nodes_; }
    const Node& root() const { return nodes_.back(); }

    /// Throws DomainError when a partial operation is undefined at `point`.
    double eval(std::span<const double> point) const;

    /// Forward-mode value and gradient. Writes n partials into `gradient`
    /// and returns the value. At kinks of abs/min/max/norm/hypot the
    /// convention sign(0) = 0 applies and min/max ties pick the left operand.
    double eval_grad(std::span<const double> point, std::span<double> gradient) const;

    DualVector grad(std::span<const double> point) const;

    /// Fully parenthesized text that parses back to the same tree.
    std::string unparse() const;

private:
    Expr(std::vector<Node> nodes, int dimension) : nodes_(std::move(nodes)), dimension_(dimension) {}

    std::vector<Node> nodes_;
    int dimension_ = 0;
};

inline Expr parse(std::string_view source, int dimension) { return Expr::parse(source, dimension); }
inline double eval(const Expr& e, std::span<const double> point) { return e.eval(point); }
inline std::vector<double> grad(const Expr& e, std::span<const double> point) { return e.grad(point).partials; }
inline std::string unparse(const Expr& e) { return e.unparse(); }

/// Shortest text that reads back to exactly `v` (round-trip formatting).
std::string format_double(double v);

} // namespace blowup
