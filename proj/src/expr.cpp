#include "magnuslab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

namespace magnuslab {

namespace {

const std::set<std::string>& function_names() {
    static const std::set<std::string> fns = {"sin",  "cos", "tan", "sinh", "cosh",
                                              "exp",  "log", "sqrt", "abs"};
    return fns;
}

struct Token {
    enum class Kind { number, ident, op, lparen, rparen, end };
    Kind kind = Kind::end;
    Complex number{};
    std::string text;
    char op = 0;
    std::size_t offset = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        current_ = Token{};
        current_.offset = pos_;
        if (pos_ >= src_.size()) {
            current_.kind = Token::Kind::end;
            return;
        }
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                          src_[pos_] == '_'))
                ++pos_;
            current_.kind = Token::Kind::ident;
            current_.text = std::string(src_.substr(start, pos_ - start));
            return;
        }
        switch (c) {
            case '+': case '-': case '*': case '/': case '^':
                current_.kind = Token::Kind::op;
                current_.op = c;
                ++pos_;
                return;
            case '(':
                current_.kind = Token::Kind::lparen;
                ++pos_;
                return;
            case ')':
                current_.kind = Token::Kind::rparen;
                ++pos_;
                return;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", pos_);
        }
    }

    void lex_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark;  // bare 'e' belongs to the next token
            }
        }
        const std::string text(src_.substr(start, pos_ - start));
        char* endp = nullptr;
        const double value = std::strtod(text.c_str(), &endp);
        if (endp == text.c_str()) throw ParseError("malformed number", start);
        current_.kind = Token::Kind::number;
        // Imaginary literal suffix: `2i`, `0.7i` (only when not the start
        // of a longer identifier).
        if (pos_ < src_.size() && src_[pos_] == 'i' &&
            (pos_ + 1 >= src_.size() ||
             (!std::isalnum(static_cast<unsigned char>(src_[pos_ + 1])) && src_[pos_ + 1] != '_'))) {
            ++pos_;
            current_.number = Complex(0.0, value);
        } else {
            current_.number = Complex(value, 0.0);
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token current_;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) {}

    ExprPtr parse() {
        ExprPtr e = parse_expr(0);
        const Token& t = lex_.peek();
        if (t.kind != Token::Kind::end)
            throw ParseError("expected operator or end of input", t.offset);
        return e;
    }

private:
    static int binding_power(char op) {
        switch (op) {
            case '+': case '-': return 10;
            case '*': case '/': return 20;
            case '^': return 40;
            default: return -1;
        }
    }

    ExprPtr parse_expr(int min_bp) {
        ExprPtr lhs = parse_prefix();
        for (;;) {
            const Token& t = lex_.peek();
            if (t.kind != Token::Kind::op) break;
            const int bp = binding_power(t.op);
            if (bp < min_bp) break;
            Token op = lex_.take();
            // '^' is right-associative.
            ExprPtr rhs = parse_expr(op.op == '^' ? bp : bp + 1);
            auto node = std::make_shared<ExprNode>();
            node->kind = ExprNode::Kind::binary;
            node->op = op.op;
            node->lhs = lhs;
            node->rhs = rhs;
            node->offset = op.offset;
            lhs = node;
        }
        return lhs;
    }

    ExprPtr parse_prefix() {
        Token t = lex_.take();
        switch (t.kind) {
            case Token::Kind::number: {
                auto node = std::make_shared<ExprNode>();
                node->kind = ExprNode::Kind::number;
                node->number = t.number;
                node->offset = t.offset;
                return node;
            }
            case Token::Kind::op: {
                if (t.op == '-' || t.op == '+') {
                    ExprPtr operand = parse_expr(30);  // binds tighter than * but looser than ^
                    if (t.op == '+') return operand;
                    auto node = std::make_shared<ExprNode>();
                    node->kind = ExprNode::Kind::unary;
                    node->op = '-';
                    node->lhs = operand;
                    node->offset = t.offset;
                    return node;
                }
                throw ParseError("expected a value before operator", t.offset);
            }
            case Token::Kind::lparen: {
                ExprPtr inner = parse_expr(0);
                const Token& close = lex_.peek();
                if (close.kind != Token::Kind::rparen)
                    throw ParseError("expected ')'", close.offset);
                lex_.take();
                return inner;
            }
            case Token::Kind::ident:
                return parse_ident(std::move(t));
            case Token::Kind::rparen:
                throw ParseError("expected expression before ')'", t.offset);
            case Token::Kind::end:
                throw ParseError("unexpected end of input, expected expression", t.offset);
        }
        throw ParseError("unexpected token", t.offset);
    }

    ExprPtr parse_ident(Token t) {
        auto node = std::make_shared<ExprNode>();
        node->offset = t.offset;
        if (lex_.peek().kind == Token::Kind::lparen) {
            if (function_names().count(t.text) == 0)
                throw ParseError("unknown function name '" + t.text + "'", t.offset);
            lex_.take();
            node->kind = ExprNode::Kind::call;
            node->name = t.text;
            node->lhs = parse_expr(0);
            const Token& close = lex_.peek();
            if (close.kind != Token::Kind::rparen)
                throw ParseError("expected ')' to close call", close.offset);
            lex_.take();
            return node;
        }
        if (function_names().count(t.text) > 0)
            throw ParseError("expected '(' after function name '" + t.text + "'", t.offset);
        if (t.text == "t") {
            node->kind = ExprNode::Kind::variable_t;
        } else if (t.text == "pi" || t.text == "e" || t.text == "i") {
            node->kind = ExprNode::Kind::constant;
            node->name = t.text;
        } else {
            node->kind = ExprNode::Kind::parameter;
            node->name = t.text;
        }
        return node;
    }

    Lexer lex_;
};

// Collapse negative zeros so real arithmetic lands on the standard side
// of the log/sqrt branch cuts (e.g. "-1" evaluates to -1 + 0i, whose
// principal log is +i*pi).
Complex canon(Complex z) {
    double re = z.real(), im = z.imag();
    if (re == 0.0) re = 0.0;
    if (im == 0.0) im = 0.0;
    return {re, im};
}

Complex integer_power(Complex base, long long k) {
    if (k < 0) return 1.0 / integer_power(base, -k);
    Complex acc = 1.0;
    Complex b = base;
    while (k > 0) {
        if (k & 1) acc *= b;
        b *= b;
        k >>= 1;
    }
    return acc;
}

Complex eval_pow(Complex z, Complex w, std::size_t offset) {
    if (w.imag() == 0.0) {
        const double wr = w.real();
        if (wr == std::floor(wr) && std::abs(wr) <= 64.0) {
            const long long k = static_cast<long long>(wr);
            if (z == Complex(0.0)) {
                if (k > 0) return 0.0;
                if (k == 0) return 1.0;
                throw NumericalError("division by zero in '^' at offset " + std::to_string(offset));
            }
            return integer_power(z, k);
        }
    }
    if (z == Complex(0.0)) {
        if (w.imag() == 0.0 && w.real() > 0.0) return 0.0;
        throw NumericalError("zero base with non-positive exponent in '^' at offset " +
                             std::to_string(offset));
    }
    return std::exp(w * std::log(z));
}

}  // namespace

ExprPtr parse_expression(std::string_view src) {
    if (src.empty()) throw ParseError("empty expression", 0);
    Parser p(src);
    return p.parse();
}

Complex eval(const ExprNode& ast, double t, const ParamMap& params) {
    switch (ast.kind) {
        case ExprNode::Kind::number:
            return ast.number;
        case ExprNode::Kind::constant:
            if (ast.name == "pi") return Complex(M_PI, 0.0);
            if (ast.name == "e") return Complex(M_E, 0.0);
            return Complex(0.0, 1.0);  // i
        case ExprNode::Kind::variable_t:
            return Complex(t, 0.0);
        case ExprNode::Kind::parameter: {
            auto it = params.find(ast.name);
            if (it == params.end())
                throw ConfigError("unbound identifier '" + ast.name + "' at offset " +
                                  std::to_string(ast.offset));
            return it->second;
        }
        case ExprNode::Kind::unary:
            return canon(-eval(*ast.lhs, t, params));
        case ExprNode::Kind::binary: {
            const Complex a = eval(*ast.lhs, t, params);
            const Complex b = eval(*ast.rhs, t, params);
            switch (ast.op) {
                case '+': return canon(a + b);
                case '-': return canon(a - b);
                case '*': return canon(a * b);
                case '/':
                    if (b == Complex(0.0))
                        throw NumericalError("division by zero at offset " +
                                             std::to_string(ast.offset));
                    return canon(a / b);
                case '^': return canon(eval_pow(a, b, ast.offset));
            }
            throw Error("corrupt expression tree");
        }
        case ExprNode::Kind::call: {
            const Complex a = eval(*ast.lhs, t, params);
            if (ast.name == "sin") return std::sin(a);
            if (ast.name == "cos") return std::cos(a);
            if (ast.name == "tan") return std::tan(a);
            if (ast.name == "sinh") return std::sinh(a);
            if (ast.name == "cosh") return std::cosh(a);
            if (ast.name == "exp") return std::exp(a);
            if (ast.name == "sqrt") return std::sqrt(a);
            if (ast.name == "abs") return Complex(std::abs(a), 0.0);
            if (ast.name == "log") {
                if (a == Complex(0.0))
                    throw NumericalError("log of zero at offset " + std::to_string(ast.offset));
                return std::log(a);
            }
            throw Error("corrupt expression tree: function " + ast.name);
        }
    }
    throw Error("corrupt expression tree");
}

std::string print(const ExprNode& ast) {
    std::ostringstream os;
    os.precision(17);
    switch (ast.kind) {
        case ExprNode::Kind::number:
            if (ast.number.imag() != 0.0 && ast.number.real() == 0.0)
                os << ast.number.imag() << "i";
            else
                os << ast.number.real();
            break;
        case ExprNode::Kind::constant:
        case ExprNode::Kind::parameter:
            os << ast.name;
            break;
        case ExprNode::Kind::variable_t:
            os << "t";
            break;
        case ExprNode::Kind::unary:
            os << "(-" << print(*ast.lhs) << ")";
            break;
        case ExprNode::Kind::binary:
            os << "(" << print(*ast.lhs) << ast.op << print(*ast.rhs) << ")";
            break;
        case ExprNode::Kind::call:
            os << ast.name << "(" << print(*ast.lhs) << ")";
            break;
    }
    return os.str();
}

bool references_t(const ExprNode& ast) {
    switch (ast.kind) {
        case ExprNode::Kind::variable_t:
            return true;
        case ExprNode::Kind::unary:
        case ExprNode::Kind::call:
            return references_t(*ast.lhs);
        case ExprNode::Kind::binary:
            return references_t(*ast.lhs) || references_t(*ast.rhs);
        default:
            return false;
    }
}

Complex parse_scalar(std::string_view src, const ParamMap& params) {
    ExprPtr ast = parse_expression(src);
    if (references_t(*ast))
        throw ConfigError("scalar value must not reference the time variable t: '" +
                          std::string(src) + "'");
    return eval(*ast, 0.0, params);
}

}  // namespace magnuslab
