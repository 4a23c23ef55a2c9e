#include "smalldiff/expr.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <system_error>

#include "smalldiff/error.hpp"

namespace smalldiff::expr {

namespace {

struct FunctionEntry {
    std::string_view name;
    Function function;
};

constexpr std::array<FunctionEntry, 6> kFunctions{{
    {"sin", Function::Sin},
    {"cos", Function::Cos},
    {"exp", Function::Exp},
    {"abs", Function::Abs},
    {"sqrt", Function::Sqrt},
    {"tanh", Function::Tanh},
}};

NodePtr make(auto data) { return std::make_shared<const Node>(Node{std::move(data)}); }

bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    NodePtr parse_all() {
        auto node = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) {
            fail("expected operator or end of input");
        }
        return node;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

    void skip_ws() {
        while (pos_ < src_.size() &&
               (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r')) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            fail(std::string("expected '") + c + "'");
        }
    }

    NodePtr parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (accept('+')) {
                lhs = make(Binary{BinaryOp::Add, lhs, parse_term()});
            } else if (accept('-')) {
                lhs = make(Binary{BinaryOp::Sub, lhs, parse_term()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term() {
        auto lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = make(Binary{BinaryOp::Mul, lhs, parse_unary()});
            } else if (accept('/')) {
                lhs = make(Binary{BinaryOp::Div, lhs, parse_unary()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        if (accept('-')) {
            return make(Negate{parse_unary()});
        }
        return parse_power();
    }

    NodePtr parse_power() {
        auto base = parse_primary();
        if (!accept('^')) {
            return base;
        }
        const std::size_t exponent_pos = (skip_ws(), pos_);
        auto exponent = parse_unary();
        const auto* number = std::get_if<Number>(&exponent->data);
        if (number == nullptr || number->value != std::floor(number->value) || number->value < 0.0 ||
            number->value > kMaxExponent) {
            throw ParseError("expected integer exponent literal in [0, 6]", exponent_pos);
        }
        return make(Power{base, static_cast<int>(number->value)});
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) {
            fail("expected number, 'x', function call or '('");
        }
        const char c = src_[pos_];
        if (is_digit(c) || c == '.') {
            return parse_number();
        }
        if (is_ident_start(c)) {
            return parse_identifier();
        }
        if (accept('(')) {
            auto inner = parse_expr();
            expect(')');
            return inner;
        }
        fail("expected number, 'x', function call or '('");
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        std::size_t digits = 0;
        while (pos_ < src_.size() && is_digit(src_[pos_])) {
            ++pos_;
            ++digits;
        }
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && is_digit(src_[pos_])) {
                ++pos_;
                ++digits;
            }
        }
        if (digits == 0) {
            pos_ = start;
            fail("expected digits in number");
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) {
                ++p;
            }
            if (p >= src_.size() || !is_digit(src_[p])) {
                pos_ = p;
                fail("expected exponent digits");
            }
            while (p < src_.size() && is_digit(src_[p])) {
                ++p;
            }
            pos_ = p;
        }
        double value = 0.0;
        const char* first = src_.data() + start;
        const char* last = src_.data() + pos_;
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec == std::errc::result_out_of_range || !std::isfinite(value)) {
            throw ParseError("number out of range", start);
        }
        if (ec != std::errc{} || ptr != last) {
            throw ParseError("malformed number", start);
        }
        return make(Number{value});
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (is_ident_start(src_[pos_]) || is_digit(src_[pos_]))) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);
        if (name == "x") {
            return make(Variable{});
        }
        const auto it = std::find_if(kFunctions.begin(), kFunctions.end(),
                                     [&](const FunctionEntry& f) { return f.name == name; });
        if (it == kFunctions.end()) {
            throw ParseError("unknown identifier '" + std::string(name) + "'", start);
        }
        expect('(');
        auto argument = parse_expr();
        expect(')');
        return make(Call{it->function, argument});
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

// Binding strength used by the printer.
enum Level { kAdditive = 1, kMultiplicative = 2, kUnary = 3, kPower = 4, kAtom = 5 };

int level_of(const Node& node) {
    return std::visit(
        [](const auto& n) -> int {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Binary>) {
                return (n.op == BinaryOp::Add || n.op == BinaryOp::Sub) ? kAdditive : kMultiplicative;
            } else if constexpr (std::is_same_v<T, Negate>) {
                return kUnary;
            } else if constexpr (std::is_same_v<T, Power>) {
                return kPower;
            } else {
                return kAtom;
            }
        },
        node.data);
}

void print_into(const Node& node, std::string& out);

void print_child(const Node& child, int min_level, std::string& out) {
    if (level_of(child) < min_level) {
        out += '(';
        print_into(child, out);
        out += ')';
    } else {
        print_into(child, out);
    }
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

void print_into(const Node& node, std::string& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Number>) {
                out += format_number(n.value);
            } else if constexpr (std::is_same_v<T, Variable>) {
                out += 'x';
            } else if constexpr (std::is_same_v<T, Negate>) {
                out += '-';
                print_child(*n.operand, kPower, out);
            } else if constexpr (std::is_same_v<T, Binary>) {
                const int level = level_of(node);
                static constexpr std::array<std::string_view, 4> kSymbols{" + ", " - ", " * ", " / "};
                print_child(*n.lhs, level, out);
                out += kSymbols[static_cast<std::size_t>(n.op)];
                print_child(*n.rhs, level + 1, out);
            } else if constexpr (std::is_same_v<T, Power>) {
                print_child(*n.base, kAtom, out);
                out += '^';
                out += std::to_string(n.exponent);
            } else if constexpr (std::is_same_v<T, Call>) {
                out += function_name(n.function);
                out += '(';
                print_into(*n.argument, out);
                out += ')';
            }
        },
        node.data);
}

double checked(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw EvalError(std::string("non-finite result in ") + what);
    }
    return v;
}

}  // namespace

std::string_view function_name(Function f) noexcept {
    for (const auto& entry : kFunctions) {
        if (entry.function == f) {
            return entry.name;
        }
    }
    return "?";
}

double apply_function(Function f, double x) {
    switch (f) {
        case Function::Sin:
            return checked(std::sin(x), "sin");
        case Function::Cos:
            return checked(std::cos(x), "cos");
        case Function::Exp:
            return checked(std::exp(x), "exp");
        case Function::Abs:
            return std::fabs(x);
        case Function::Sqrt:
            if (x < 0.0) {
                throw EvalError("sqrt of negative argument");
            }
            return std::sqrt(x);
        case Function::Tanh:
            return std::tanh(x);
    }
    throw EvalError("unknown function");
}

Expression::Expression(std::string source, NodePtr root)
    : source_(std::move(source)), root_(std::move(root)) {
    compile(*root_);
    std::size_t depth = 0;
    for (const auto& ins : program_) {
        switch (ins.code) {
            case OpCode::Push:
            case OpCode::LoadX:
                max_stack_ = std::max(max_stack_, ++depth);
                break;
            case OpCode::Add:
            case OpCode::Sub:
            case OpCode::Mul:
            case OpCode::Div:
                --depth;
                break;
            default:
                break;
        }
    }
}

Expression Expression::parse(std::string_view source) {
    Parser parser(source);
    return Expression(std::string(source), parser.parse_all());
}

void Expression::compile(const Node& node) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Number>) {
                program_.push_back({OpCode::Push, 0, Function::Sin, n.value});
            } else if constexpr (std::is_same_v<T, Variable>) {
                program_.push_back({OpCode::LoadX});
            } else if constexpr (std::is_same_v<T, Negate>) {
                compile(*n.operand);
                program_.push_back({OpCode::Neg});
            } else if constexpr (std::is_same_v<T, Binary>) {
                compile(*n.lhs);
                compile(*n.rhs);
                static constexpr std::array<OpCode, 4> kCodes{OpCode::Add, OpCode::Sub, OpCode::Mul,
                                                              OpCode::Div};
                program_.push_back({kCodes[static_cast<std::size_t>(n.op)]});
            } else if constexpr (std::is_same_v<T, Power>) {
                compile(*n.base);
                program_.push_back({OpCode::Pow, n.exponent});
            } else if constexpr (std::is_same_v<T, Call>) {
                compile(*n.argument);
                program_.push_back({OpCode::Call, 0, n.function});
            }
        },
        node.data);
}

double Expression::eval(double x) const {
    if (!std::isfinite(x)) {
        throw EvalError("non-finite argument");
    }
    constexpr std::size_t kInline = 32;
    std::array<double, kInline> inline_stack{};
    std::vector<double> heap_stack;
    double* stack = inline_stack.data();
    if (max_stack_ > kInline) {
        heap_stack.resize(max_stack_);
        stack = heap_stack.data();
    }
    std::size_t top = 0;
    for (const auto& ins : program_) {
        switch (ins.code) {
            case OpCode::Push:
                stack[top++] = ins.value;
                break;
            case OpCode::LoadX:
                stack[top++] = x;
                break;
            case OpCode::Neg:
                stack[top - 1] = -stack[top - 1];
                break;
            case OpCode::Add:
                --top;
                stack[top - 1] = checked(stack[top - 1] + stack[top], "addition");
                break;
            case OpCode::Sub:
                --top;
                stack[top - 1] = checked(stack[top - 1] - stack[top], "subtraction");
                break;
            case OpCode::Mul:
                --top;
                stack[top - 1] = checked(stack[top - 1] * stack[top], "multiplication");
                break;
            case OpCode::Div:
                --top;
                if (stack[top] == 0.0) {
                    throw EvalError("division by zero");
                }
                stack[top - 1] = checked(stack[top - 1] / stack[top], "division");
                break;
            case OpCode::Pow:
                stack[top - 1] = checked(std::pow(stack[top - 1], static_cast<double>(ins.exponent)), "power");
                break;
            case OpCode::Call:
                stack[top - 1] = apply_function(ins.function, stack[top - 1]);
                break;
        }
    }
    return stack[0];
}

std::string Expression::print() const { return expr::print(*root_); }

std::string print(const Node& node) {
    std::string out;
    print_into(node, out);
    return out;
}

bool structurally_equal(const Node& a, const Node& b) noexcept {
    if (a.data.index() != b.data.index()) {
        return false;
    }
    return std::visit(
        [&](const auto& lhs) -> bool {
            using T = std::decay_t<decltype(lhs)>;
            const auto& rhs = std::get<T>(b.data);
            if constexpr (std::is_same_v<T, Number>) {
                return std::bit_cast<std::uint64_t>(lhs.value) == std::bit_cast<std::uint64_t>(rhs.value);
            } else if constexpr (std::is_same_v<T, Variable>) {
                return true;
            } else if constexpr (std::is_same_v<T, Negate>) {
                return structurally_equal(*lhs.operand, *rhs.operand);
            } else if constexpr (std::is_same_v<T, Binary>) {
                return lhs.op == rhs.op && structurally_equal(*lhs.lhs, *rhs.lhs) &&
                       structurally_equal(*lhs.rhs, *rhs.rhs);
            } else if constexpr (std::is_same_v<T, Power>) {
                return lhs.exponent == rhs.exponent && structurally_equal(*lhs.base, *rhs.base);
            } else {
                return lhs.function == rhs.function && structurally_equal(*lhs.argument, *rhs.argument);
            }
        },
        a.data);
}

double estimate_lipschitz(const Expression& e, double lo, double hi, std::size_t n_samples) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("estimate_lipschitz: require finite lo < hi");
    }
    if (n_samples < 2) {
        throw std::invalid_argument("estimate_lipschitz: require n_samples >= 2");
    }
    const double width = hi - lo;
    const auto last = static_cast<double>(n_samples - 1);
    auto point = [&](std::size_t k) {
        return k + 1 == n_samples ? hi : lo + width * (static_cast<double>(k) / last);
    };
    double x_prev = lo;
    double f_prev = e.eval(lo);
    double best = 0.0;
    for (std::size_t k = 1; k < n_samples; ++k) {
        const double x = point(k);
        const double f = e.eval(x);
        best = std::max(best, std::fabs(f - f_prev) / (x - x_prev));
        x_prev = x;
        f_prev = f;
    }
    return best;
}

}  // namespace smalldiff::expr
