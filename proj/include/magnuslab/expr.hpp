#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "magnuslab/complex_matrix.hpp"
#include "magnuslab/errors.hpp"

namespace magnuslab {

/// Parse failure with the byte offset of the offending token.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : ConfigError("syntax error at offset " + std::to_string(offset) + ": " + msg),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

/// Immutable expression tree over the real variable t with complex
/// constants. Nodes are shared freely across threads.
struct ExprNode {
    enum class Kind { number, constant, variable_t, parameter, unary, binary, call };
    Kind kind;
    Complex number{};    // Kind::number
    std::string name;    // constant / parameter / function name
    char op = 0;         // unary/binary operator: + - * / ^
    ExprPtr lhs, rhs;    // unary and call use lhs only
    std::size_t offset = 0;  // byte offset in the source, for diagnostics
};

using ParamMap = std::map<std::string, Complex>;

/// Grammar: numbers (decimal/scientific, optional imaginary suffix `i`),
/// constants `pi`, `e`, `i`, the variable `t`, named parameters, binary
/// `+ - * / ^` (`^` right-associative), unary minus, parentheses, and the
/// functions sin cos tan sinh cosh exp log sqrt abs. No implicit
/// multiplication.
ExprPtr parse_expression(std::string_view src);

/// Evaluates with complex semantics throughout; `log` and `^` use the
/// principal branch. Throws ConfigError for unbound identifiers and
/// NumericalError for division by zero / log of zero, each with the
/// source offset.
Complex eval(const ExprNode& ast, double t, const ParamMap& params);

/// Canonical fully-parenthesized form; parse(print(x)) == x structurally.
std::string print(const ExprNode& ast);

/// True when the tree references the time variable.
bool references_t(const ExprNode& ast);

/// Convenience: parse and evaluate a t-free scalar (used for CLI values
/// such as "0.5+0.25i" or "pi/2").
Complex parse_scalar(std::string_view src, const ParamMap& params = {});

}  // namespace magnuslab
