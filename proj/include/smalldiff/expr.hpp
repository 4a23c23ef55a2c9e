#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace smalldiff::expr {

enum class BinaryOp { Add, Sub, Mul, Div };

/// The closed set of built-in functions.
enum class Function { Sin, Cos, Exp, Abs, Sqrt, Tanh };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Number {
    double value;
};

struct Variable {};

struct Negate {
    NodePtr operand;
};

struct Binary {
    BinaryOp op;
    NodePtr lhs;
    NodePtr rhs;
};

/// `base ^ exponent` with a constant integer exponent in [0, kMaxExponent].
struct Power {
    NodePtr base;
    int exponent;
};

struct Call {
    Function function;
    NodePtr argument;
};

struct Node {
    std::variant<Number, Variable, Negate, Binary, Power, Call> data;
};

inline constexpr int kMaxExponent = 6;

[[nodiscard]] std::string_view function_name(Function f) noexcept;

/// Applies a built-in function, throwing EvalError outside its domain.
[[nodiscard]] double apply_function(Function f, double x);

/// An immutable, parsed function of one real variable `x`.
///
/// The tree is compiled to a flat postfix program at construction; `eval`
/// runs that program. Instances are cheap to copy and safe to evaluate from
/// many threads at once.
class Expression {
public:
    /// Parses `source`. Grammar (whitespace insignificant):
    ///
    ///     expr    := term (('+' | '-') term)*
    ///     term    := unary (('*' | '/') unary)*
    ///     unary   := '-' unary | power
    ///     power   := primary ('^' unary)?
    ///     primary := number | 'x' | func '(' expr ')' | '(' expr ')'
    ///
    /// The exponent of `^` must be an integer literal in [0, 6].
    /// Throws ParseError.
    [[nodiscard]] static Expression parse(std::string_view source);

    /// Evaluates at `x`. Throws EvalError on division by zero, sqrt of a
    /// negative number, or any non-finite intermediate or final value.
    [[nodiscard]] double eval(double x) const;

    /// Canonical text form; parse(print()) yields a structurally identical tree.
    [[nodiscard]] std::string print() const;

    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    [[nodiscard]] const Node& root() const noexcept { return *root_; }

private:
    enum class OpCode : unsigned char { Push, LoadX, Neg, Add, Sub, Mul, Div, Pow, Call };

    struct Instruction {
        OpCode code;
        int exponent = 0;
        Function function = Function::Sin;
        double value = 0.0;
    };

    Expression(std::string source, NodePtr root);
    void compile(const Node& node);

    std::string source_;
    NodePtr root_;
    std::vector<Instruction> program_;
    std::size_t max_stack_ = 0;
};

/// Structural equality of two trees (numbers compared bit-for-bit).
[[nodiscard]] bool structurally_equal(const Node& a, const Node& b) noexcept;

/// Canonical text of a tree.
[[nodiscard]] std::string print(const Node& node);

/// Lower bound on the Lipschitz constant of `e` over [lo, hi]: the largest
/// adjacent-pair slope on a uniform grid of `n_samples` points.
/// Throws std::invalid_argument on bad arguments and EvalError if `e` fails
/// anywhere on the grid.
[[nodiscard]] double estimate_lipschitz(const Expression& e, double lo, double hi,
                                        std::size_t n_samples);

}  // namespace smalldiff::expr
