#pragma once

#include <optional>
#include <string>
#include <vector>

#include "magnuslab/complex_matrix.hpp"
#include "magnuslab/expr.hpp"

namespace magnuslab {

/// Built-in operators with closed-form fundamental solutions.
enum class CatalogId { example1, example2, example3, diagonal };

std::vector<std::string> catalog_names();
CatalogId catalog_id_from_name(const std::string& name);
std::string catalog_name(CatalogId id);

/// One piece of a piecewise definition of A(t); entries are expression
/// trees over t and the bound parameters.
struct OperatorPiece {
    double t_start = 0.0;
    double t_end = 0.0;  // +infinity for an open-ended final piece
    std::vector<ExprPtr> entries;  // n*n, row-major
    bool time_independent = false;
};

/// The time-dependent operator A(t) of Y' = A(t) Y: contiguous pieces
/// starting at t = 0, a parameter binding, and an optional tag granting a
/// closed-form exact solution. Immutable after construction.
class TimeDependentOperator {
public:
    TimeDependentOperator(int n, std::vector<OperatorPiece> pieces, ParamMap params,
                          std::optional<CatalogId> exact = std::nullopt);

    int dim() const { return n_; }
    const std::vector<OperatorPiece>& pieces() const { return pieces_; }
    const ParamMap& params() const { return params_; }
    std::optional<CatalogId> exact_tag() const { return exact_; }

    /// Entry-wise evaluation of the active piece; the right limit is used
    /// at a breakpoint. Throws for t outside all pieces.
    ComplexMatrix evaluate(double t) const;

    /// Interior breakpoints in (0, t), ascending.
    std::vector<double> breakpoints_below(double t) const;

    /// Index of the piece active at time t (right-limit convention).
    std::size_t piece_index(double t) const;

    double param(const std::string& name, Complex* out = nullptr) const = delete;
    Complex param_or(const std::string& name, Complex fallback) const;

private:
    int n_;
    std::vector<OperatorPiece> pieces_;
    ParamMap params_;
    std::optional<CatalogId> exact_;
};

/// Builds a catalog operator; `overrides` replace the entry's default
/// parameters.
TimeDependentOperator make_catalog_operator(CatalogId id, const ParamMap& overrides = {});

/// The closed-form fundamental solution Y(t; eps) of Y' = eps A(t) Y for a
/// catalog-tagged operator, including removable-singularity limits.
ComplexMatrix exact_solution(const TimeDependentOperator& op, double t, Complex eps);

/// integral_0^t ||A(s)||_2 ds by piecewise-aware adaptive Gauss-Kronrod
/// quadrature (absolute tolerance 1e-10).
double norm_integral(const TimeDependentOperator& op, double t, double abs_tol = 1e-10);

/// Problem-file loading. Accepts either
///   {"n":2, "params":{"alpha":[re,im]}, "pieces":[{"t_start":0,
///    "t_end":"inf", "entries":[["expr","expr"],["expr","expr"]]}]}
/// or {"builtin":"example1", "params":{...}}.
TimeDependentOperator load_problem_json(const std::string& json_text);
TimeDependentOperator load_problem_file(const std::string& path);

/// The generated problem-file JSON a catalog entry is an alias for.
std::string catalog_entry_json(CatalogId id);

}  // namespace magnuslab
