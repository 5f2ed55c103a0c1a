#include "blowup/expr.hpp"

#include "blowup/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace blowup {

namespace {

constexpr int kNamedPi = 1;
constexpr int kNamedE = 2;

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

struct UnaryFn {
    std::string_view name;
    Op op;
};

constexpr UnaryFn kUnaryFns[] = {
    {"abs", Op::Abs}, {"sqrt", Op::Sqrt}, {"exp", Op::Exp}, {"log", Op::Log},
    {"sin", Op::Sin}, {"cos", Op::Cos},   {"tanh", Op::Tanh},
};

class Parser {
public:
    Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

    std::vector<Node> run() {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw ParseError("empty expression", pos_);
        }
        parse_expr();
        skip_ws();
        if (pos_ < src_.size()) {
            throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
        }
        return std::move(nodes_);
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
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
            if (pos_ >= src_.size()) {
                throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
            }
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    int push(Node n) {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    int binary(Op op, int lhs, int rhs) { return push(Node{op, 0.0, 0, lhs, rhs}); }

    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            if (accept('+')) {
                lhs = binary(Op::Add, lhs, parse_term());
            } else if (accept('-')) {
                lhs = binary(Op::Sub, lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    int parse_term() {
        int lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = binary(Op::Mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = binary(Op::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    int parse_unary() {
        if (accept('-')) {
            int arg = parse_unary();
            return push(Node{Op::Neg, 0.0, 0, arg, -1});
        }
        return parse_power();
    }

    int parse_power() {
        int base = parse_primary();
        if (accept('^')) {
            int exponent = parse_exponent();
            return binary(Op::Pow, base, exponent);
        }
        return base;
    }

    int parse_exponent() {
        if (accept('-')) {
            int arg = parse_exponent();
            return push(Node{Op::Neg, 0.0, 0, arg, -1});
        }
        return parse_power();
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw ParseError("unexpected end of input", pos_);
        }
        const char c = src_[pos_];
        if (is_digit(c)) {
            return parse_number();
        }
        if (is_ident_start(c)) {
            return parse_identifier();
        }
        if (c == '(') {
            ++pos_;
            int inner = parse_expr();
            expect(')');
            return inner;
        }
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    int parse_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' && is_digit(src_[pos_ + 1])) {
            ++pos_;
            while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
            if (look < src_.size() && is_digit(src_[look])) {
                pos_ = look;
                while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
            }
        }
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (ec != std::errc() || ptr != src_.data() + pos_) {
            throw ParseError("malformed number", start);
        }
        if (pos_ < src_.size() && (is_ident_start(src_[pos_]) || src_[pos_] == '.')) {
            throw ParseError("unexpected character after number (no implicit multiplication)", pos_);
        }
        return push(Node{Op::Constant, value, 0, -1, -1});
    }

    int variable(int index, std::size_t at) {
        if (index < 1 || index > dim_) {
            throw ParseError("variable x" + std::to_string(index) + " out of range for dimension " +
                                 std::to_string(dim_),
                             at);
        }
        return push(Node{Op::Variable, 0.0, index - 1, -1, -1});
    }

    int parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);

        skip_ws();
        const bool call = pos_ < src_.size() && src_[pos_] == '(';
        if (call) {
            return parse_call(name, start);
        }

        if (name == "pi") return push(Node{Op::Constant, std::numbers::pi, kNamedPi, -1, -1});
        if (name == "e") return push(Node{Op::Constant, std::numbers::e, kNamedE, -1, -1});
        if (dim_ <= 3) {
            if (name == "x") return variable(1, start);
            if (name == "y") return variable(2, start);
            if (name == "z") return variable(3, start);
        }
        if (name.size() >= 2 && name[0] == 'x' &&
            std::all_of(name.begin() + 1, name.end(), is_digit) && name[1] != '0') {
            if (name.size() > 6) {
                throw ParseError("variable index too large in '" + std::string(name) + "'", start);
            }
            int index = 0;
            std::from_chars(name.data() + 1, name.data() + name.size(), index);
            return variable(index, start);
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }

    std::vector<int> parse_args() {
        expect('(');
        std::vector<int> args;
        if (accept(')')) return args;
        args.push_back(parse_expr());
        while (accept(',')) args.push_back(parse_expr());
        expect(')');
        return args;
    }

    int parse_call(std::string_view name, std::size_t at) {
        const std::string fname(name);
        for (const auto& fn : kUnaryFns) {
            if (fn.name == name) {
                auto args = parse_args();
                if (args.size() != 1) {
                    throw ParseError(fname + " takes 1 argument", at);
                }
                return push(Node{fn.op, 0.0, 0, args[0], -1});
            }
        }
        if (name == "min" || name == "max") {
            auto args = parse_args();
            if (args.size() < 2) {
                throw ParseError(fname + " takes at least 2 arguments", at);
            }
            const Op op = name == "min" ? Op::Min : Op::Max;
            int acc = args[0];
            for (std::size_t i = 1; i < args.size(); ++i) acc = binary(op, acc, args[i]);
            return acc;
        }
        if (name == "hypot") {
            auto args = parse_args();
            if (args.size() != 2) {
                throw ParseError("hypot takes 2 arguments", at);
            }
            return binary(Op::Hypot, args[0], args[1]);
        }
        if (name == "norm") {
            auto args = parse_args();
            if (!args.empty()) {
                throw ParseError("norm takes no arguments", at);
            }
            return push(Node{Op::Norm, 0.0, 0, -1, -1});
        }
        throw ParseError("unknown function '" + fname + "'", at);
    }

    std::string_view src_;
    int dim_;
    std::size_t pos_ = 0;
    std::vector<Node> nodes_;
};

const char* op_name(Op op) {
    switch (op) {
    case Op::Neg: return "-";
    case Op::Abs: return "abs";
    case Op::Sqrt: return "sqrt";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tanh: return "tanh";
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Pow: return "^";
    case Op::Min: return "min";
    case Op::Max: return "max";
    case Op::Hypot: return "hypot";
    case Op::Norm: return "norm";
    default: return "?";
    }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

bool integral_exponent(double b) { return std::trunc(b) == b && std::fabs(b) <= 1 << 30; }

double ipow(double a, double b) {
    long long k = static_cast<long long>(b);
    const bool invert = k < 0;
    if (invert) {
        if (a == 0.0) throw DomainError("zero raised to a negative power");
        k = -k;
    }
    double result = 1.0;
    double base = a;
    while (k > 0) {
        if (k & 1) result *= base;
        base *= base;
        k >>= 1;
    }
    return invert ? 1.0 / result : result;
}

double pow_value(double a, double b) {
    if (integral_exponent(b)) return ipow(a, b);
    if (a > 0.0) return std::pow(a, b);
    if (a == 0.0 && b > 0.0) return 0.0;
    throw DomainError("non-integer power of a non-positive base");
}

double checked_log(double a) {
    if (!(a > 0.0)) throw DomainError("log of a non-positive value");
    return std::log(a);
}

double checked_sqrt(double a) {
    if (a < 0.0) throw DomainError("sqrt of a negative value");
    return std::sqrt(a);
}

double checked_div(double a, double b) {
    if (b == 0.0) throw DomainError("division by zero");
    return a / b;
}

double point_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

struct Scratch {
    std::vector<double> values;
    std::vector<double> partials;
};

Scratch& scratch() {
    thread_local Scratch s;
    return s;
}

void check_point(const Expr& e, std::span<const double> point) {
    if (static_cast<int>(point.size()) != e.dimension()) {
        throw PreconditionError("point has dimension " + std::to_string(point.size()) +
                                ", expression expects " + std::to_string(e.dimension()));
    }
}

} // namespace

Expr Expr::parse(std::string_view source, int dimension) {
    if (dimension < 1) {
        throw PreconditionError("dimension must be at least 1");
    }
    return Expr(Parser(source, dimension).run(), dimension);
}

double Expr::eval(std::span<const double> point) const {
    check_point(*this, point);
    auto& vals = scratch().values;
    vals.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        const double a = n.lhs >= 0 ? vals[n.lhs] : 0.0;
        const double b = n.rhs >= 0 ? vals[n.rhs] : 0.0;
        double r = 0.0;
        switch (n.op) {
        case Op::Constant: r = n.value; break;
        case Op::Variable: r = point[n.index]; break;
        case Op::Neg: r = -a; break;
        case Op::Abs: r = std::fabs(a); break;
        case Op::Sqrt: r = checked_sqrt(a); break;
        case Op::Exp: r = std::exp(a); break;
        case Op::Log: r = checked_log(a); break;
        case Op::Sin: r = std::sin(a); break;
        case Op::Cos: r = std::cos(a); break;
        case Op::Tanh: r = std::tanh(a); break;
        case Op::Add: r = a + b; break;
        case Op::Sub: r = a - b; break;
        case Op::Mul: r = a * b; break;
        case Op::Div: r = checked_div(a, b); break;
        case Op::Pow: r = pow_value(a, b); break;
        case Op::Min: r = b < a ? b : a; break;
        case Op::Max: r = b > a ? b : a; break;
        case Op::Hypot: r = std::hypot(a, b); break;
        case Op::Norm: r = point_norm(point); break;
        }
        vals[i] = r;
    }
    return vals.back();
}

double Expr::eval_grad(std::span<const double> point, std::span<double> gradient) const {
    check_point(*this, point);
    const std::size_t dim = static_cast<std::size_t>(dimension_);
    if (gradient.size() != dim) {
        throw PreconditionError("gradient buffer has wrong dimension");
    }
    auto& s = scratch();
    s.values.resize(nodes_.size());
    s.partials.resize(nodes_.size() * dim);
    auto& vals = s.values;
    double* const d = s.partials.data();

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        double* out = d + i * dim;
        const double a = n.lhs >= 0 ? vals[n.lhs] : 0.0;
        const double b = n.rhs >= 0 ? vals[n.rhs] : 0.0;
        const double* da = n.lhs >= 0 ? d + n.lhs * dim : nullptr;
        const double* db = n.rhs >= 0 ? d + n.rhs * dim : nullptr;

        // out = ca * da + cb * db
        auto chain1 = [&](double ca) {
            for (std::size_t k = 0; k < dim; ++k) out[k] = ca * da[k];
        };
        auto chain2 = [&](double ca, double cb) {
            for (std::size_t k = 0; k < dim; ++k) out[k] = ca * da[k] + cb * db[k];
        };
        auto all_zero = [dim](const double* p) {
            for (std::size_t k = 0; k < dim; ++k) {
                if (p[k] != 0.0) return false;
            }
            return true;
        };

        double r = 0.0;
        switch (n.op) {
        case Op::Constant:
            r = n.value;
            std::fill(out, out + dim, 0.0);
            break;
        case Op::Variable:
            r = point[n.index];
            std::fill(out, out + dim, 0.0);
            out[n.index] = 1.0;
            break;
        case Op::Neg:
            r = -a;
            chain1(-1.0);
            break;
        case Op::Abs:
            r = std::fabs(a);
            chain1(sign(a));
            break;
        case Op::Sqrt:
            r = checked_sqrt(a);
            if (r > 0.0) {
                chain1(0.5 / r);
            } else if (all_zero(da)) {
                std::fill(out, out + dim, 0.0);
            } else {
                throw DomainError("sqrt is not differentiable at 0");
            }
            break;
        case Op::Exp:
            r = std::exp(a);
            chain1(r);
            break;
        case Op::Log:
            r = checked_log(a);
            chain1(1.0 / a);
            break;
        case Op::Sin:
            r = std::sin(a);
            chain1(std::cos(a));
            break;
        case Op::Cos:
            r = std::cos(a);
            chain1(-std::sin(a));
            break;
        case Op::Tanh:
            r = std::tanh(a);
            chain1(1.0 - r * r);
            break;
        case Op::Add:
            r = a + b;
            chain2(1.0, 1.0);
            break;
        case Op::Sub:
            r = a - b;
            chain2(1.0, -1.0);
            break;
        case Op::Mul:
            r = a * b;
            chain2(b, a);
            break;
        case Op::Div:
            r = checked_div(a, b);
            chain2(1.0 / b, -a / (b * b));
            break;
        case Op::Pow: {
            r = pow_value(a, b);
            if (all_zero(db)) {
                if (b == 0.0) {
                    std::fill(out, out + dim, 0.0);
                } else if (integral_exponent(b)) {
                    chain1(b * ipow(a, b - 1.0));
                } else if (a > 0.0) {
                    chain1(b * std::pow(a, b - 1.0));
                } else if (b > 1.0 || all_zero(da)) {
                    std::fill(out, out + dim, 0.0);
                } else {
                    throw DomainError("power with exponent below 1 is not differentiable at 0");
                }
            } else {
                if (!(a > 0.0)) {
                    throw DomainError("variable exponent requires a positive base");
                }
                chain2(b * r / a, r * std::log(a));
            }
            break;
        }
        case Op::Min:
            if (b < a) {
                r = b;
                for (std::size_t k = 0; k < dim; ++k) out[k] = db[k];
            } else {
                r = a;
                for (std::size_t k = 0; k < dim; ++k) out[k] = da[k];
            }
            break;
        case Op::Max:
            if (b > a) {
                r = b;
                for (std::size_t k = 0; k < dim; ++k) out[k] = db[k];
            } else {
                r = a;
                for (std::size_t k = 0; k < dim; ++k) out[k] = da[k];
            }
            break;
        case Op::Hypot:
            r = std::hypot(a, b);
            if (r > 0.0) {
                chain2(a / r, b / r);
            } else {
                std::fill(out, out + dim, 0.0);
            }
            break;
        case Op::Norm:
            r = point_norm(point);
            for (std::size_t k = 0; k < dim; ++k) out[k] = r > 0.0 ? point[k] / r : 0.0;
            break;
        }
        vals[i] = r;
    }
    const double* root = d + (nodes_.size() - 1) * dim;
    std::copy(root, root + dim, gradient.begin());
    return vals.back();
}

DualVector Expr::grad(std::span<const double> point) const {
    DualVector out;
    out.partials.resize(static_cast<std::size_t>(dimension_));
    out.value = eval_grad(point, out.partials);
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

std::string Expr::unparse() const {
    std::vector<std::string> text(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        const std::string& a = n.lhs >= 0 ? text[n.lhs] : std::string();
        const std::string& b = n.rhs >= 0 ? text[n.rhs] : std::string();
        switch (n.op) {
        case Op::Constant:
            if (n.index == kNamedPi) {
                text[i] = "pi";
            } else if (n.index == kNamedE) {
                text[i] = "e";
            } else if (n.value < 0.0 || std::signbit(n.value)) {
                text[i] = "(-" + format_double(-n.value) + ")";
            } else {
                text[i] = format_double(n.value);
            }
            break;
        case Op::Variable: text[i] = "x" + std::to_string(n.index + 1); break;
        case Op::Neg: text[i] = "(-" + a + ")"; break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow: text[i] = "(" + a + " " + op_name(n.op) + " " + b + ")"; break;
        case Op::Min:
        case Op::Max:
        case Op::Hypot: text[i] = std::string(op_name(n.op)) + "(" + a + ", " + b + ")"; break;
        case Op::Norm: text[i] = "norm()"; break;
        default: text[i] = std::string(op_name(n.op)) + "(" + a + ")"; break;
        }
    }
    return text.back();
}

} // namespace blowup
