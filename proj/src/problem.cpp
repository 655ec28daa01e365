#include "magnuslab/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "magnuslab/errors.hpp"
#include "magnuslab/linalg.hpp"
#include "magnuslab/quadrature.hpp"

namespace magnuslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// (e^z - 1 - z) / z, stable near z = 0.
Complex psi_expm1(Complex z) {
    if (std::abs(z) < 0.5) {
        // sum_{k>=1} z^k / (k+1)!
        Complex sum = 0.0;
        Complex p = z;
        double f = 2.0;  // (k+1)! for k = 1
        for (int k = 1; k <= 26; ++k) {
            sum += p / f;
            p *= z;
            f *= (k + 2);
        }
        return sum;
    }
    return (std::exp(z) - 1.0 - z) / z;
}

/// sin(z)/z, stable near z = 0.
Complex sinc_c(Complex z) {
    if (std::abs(z) < 1e-3) {
        const Complex z2 = z * z;
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0 - z2 * z2 * z2 / 5040.0;
    }
    return std::sin(z) / z;
}

std::vector<ExprPtr> parse_entries(int n, const std::vector<std::string>& exprs) {
    std::vector<ExprPtr> out;
    out.reserve(exprs.size());
    for (const auto& s : exprs) out.push_back(parse_expression(s));
    if (static_cast<int>(out.size()) != n * n)
        throw ConfigError("operator entries must form an n x n matrix");
    return out;
}

OperatorPiece make_piece(int n, double t0, double t1, const std::vector<std::string>& exprs) {
    OperatorPiece p;
    p.t_start = t0;
    p.t_end = t1;
    p.entries = parse_entries(n, exprs);
    p.time_independent = true;
    for (const auto& e : p.entries)
        if (references_t(*e)) p.time_independent = false;
    return p;
}

}  // namespace

std::vector<std::string> catalog_names() {
    return {"example1", "example2", "example3", "diagonal"};
}

CatalogId catalog_id_from_name(const std::string& name) {
    if (name == "example1") return CatalogId::example1;
    if (name == "example2") return CatalogId::example2;
    if (name == "example3") return CatalogId::example3;
    if (name == "diagonal") return CatalogId::diagonal;
    throw ConfigError("unknown builtin problem '" + name + "'");
}

std::string catalog_name(CatalogId id) {
    switch (id) {
        case CatalogId::example1: return "example1";
        case CatalogId::example2: return "example2";
        case CatalogId::example3: return "example3";
        case CatalogId::diagonal: return "diagonal";
    }
    return "?";
}

TimeDependentOperator::TimeDependentOperator(int n, std::vector<OperatorPiece> pieces,
                                             ParamMap params, std::optional<CatalogId> exact)
    : n_(n), pieces_(std::move(pieces)), params_(std::move(params)), exact_(exact) {
    if (n_ < 1) throw ConfigError("operator dimension must be >= 1");
    if (pieces_.empty()) throw ConfigError("operator needs at least one piece");
    if (pieces_.front().t_start != 0.0) throw ConfigError("pieces must start at t = 0");
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& p = pieces_[i];
        if (static_cast<int>(p.entries.size()) != n_ * n_)
            throw ConfigError("piece entry count does not match dimension");
        if (!(p.t_end > p.t_start)) throw ConfigError("piece with empty time range");
        if (i + 1 < pieces_.size() && pieces_[i + 1].t_start != p.t_end)
            throw ConfigError("pieces must be contiguous");
    }
    // Spot-check that entries evaluate finitely on their pieces.
    for (const auto& p : pieces_) {
        const double hi = std::isfinite(p.t_end) ? p.t_end : p.t_start + 10.0;
        for (int k = 0; k <= 4; ++k) {
            const double t = p.t_start + (hi - p.t_start) * k / 4.0;
            for (const auto& e : p.entries) {
                const Complex v = eval(*e, t, params_);
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                    throw ConfigError("operator entry evaluates non-finite at t = " +
                                      std::to_string(t));
            }
        }
    }
}

std::size_t TimeDependentOperator::piece_index(double t) const {
    if (t < 0.0) throw ConfigError("operator evaluated at negative time");
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& p = pieces_[i];
        if (t >= p.t_start && (t < p.t_end || (i + 1 == pieces_.size() && t <= p.t_end)))
            return i;
    }
    throw ConfigError("time t = " + std::to_string(t) + " outside all pieces");
}

ComplexMatrix TimeDependentOperator::evaluate(double t) const {
    const auto& p = pieces_[piece_index(t)];
    ComplexMatrix a(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
            a(i, j) = eval(*p.entries[static_cast<std::size_t>(i * n_ + j)], t, params_);
    return a;
}

std::vector<double> TimeDependentOperator::breakpoints_below(double t) const {
    std::vector<double> pts;
    for (const auto& p : pieces_)
        if (p.t_start > 0.0 && p.t_start < t) pts.push_back(p.t_start);
    return pts;
}

Complex TimeDependentOperator::param_or(const std::string& name, Complex fallback) const {
    auto it = params_.find(name);
    return it == params_.end() ? fallback : it->second;
}

TimeDependentOperator make_catalog_operator(CatalogId id, const ParamMap& overrides) {
    ParamMap params;
    std::vector<OperatorPiece> pieces;
    int n = 2;
    switch (id) {
        case CatalogId::example1:
            pieces.push_back(make_piece(2, 0.0, kInf, {"2", "t", "0", "-1"}));
            break;
        case CatalogId::example2:
            params = {{"alpha", 1.0}, {"beta", 1.0}};
            pieces.push_back(make_piece(2, 0.0, 1.0, {"0", "beta", "0", "0"}));
            pieces.push_back(make_piece(2, 1.0, kInf, {"alpha", "0", "0", "-alpha"}));
            break;
        case CatalogId::example3:
            params = {{"hbar", 1.0}, {"omega0", 1.0}, {"omega", 0.5}, {"beta", 0.1}};
            pieces.push_back(make_piece(
                2, 0.0, kInf,
                {"-i*omega0/2", "-i*(beta/hbar)*exp(-i*omega*t)",
                 "-i*(beta/hbar)*exp(i*omega*t)", "i*omega0/2"}));
            break;
        case CatalogId::diagonal:
            params = {{"a1", Complex(0.0, 1.0)}, {"a2", Complex(0.0, 1.0)}};
            pieces.push_back(make_piece(2, 0.0, kInf, {"a1", "0", "0", "a2"}));
            break;
    }
    for (const auto& [k, v] : overrides) params[k] = v;
    return TimeDependentOperator(n, std::move(pieces), std::move(params), id);
}

ComplexMatrix exact_solution(const TimeDependentOperator& op, double t, Complex eps) {
    if (!op.exact_tag()) throw ConfigError("operator has no closed-form exact solution");
    if (t < 0.0) throw ConfigError("exact_solution: t must be >= 0");
    ComplexMatrix y(2);
    switch (*op.exact_tag()) {
        case CatalogId::example1: {
            const Complex u = eps * t;
            y(0, 0) = std::exp(2.0 * u);
            y(1, 1) = std::exp(-u);
            // (1/(9 eps)) e^{2 eps t} - (1/(9 eps) + t/3) e^{-eps t}, written
            // through (e^z - 1 - z)/z to keep the eps -> 0 limit finite.
            y(0, 1) = std::exp(-u) * (t / 3.0) * psi_expm1(3.0 * u);
            return y;
        }
        case CatalogId::example2: {
            const Complex alpha = op.param_or("alpha", 1.0);
            const Complex beta = op.param_or("beta", 1.0);
            if (t <= 1.0) {
                y(0, 0) = 1.0;
                y(1, 1) = 1.0;
                y(0, 1) = eps * beta * t;
                return y;
            }
            const Complex w = alpha * (t - 1.0);
            y(0, 0) = std::exp(eps * w);
            y(0, 1) = eps * beta * std::exp(eps * w);
            y(1, 1) = std::exp(-eps * w);
            return y;
        }
        case CatalogId::example3: {
            const Complex hbar = op.param_or("hbar", 1.0);
            const Complex omega0 = op.param_or("omega0", 1.0);
            const Complex omega = op.param_or("omega", 0.5);
            const Complex beta = op.param_or("beta", 0.1);
            const Complex delta = eps * omega0 - omega;
            const Complex wt2 = std::sqrt(delta * delta + 4.0 * beta * beta * eps * eps / (hbar * hbar));
            const Complex half_arg = wt2 * t / 2.0;
            const Complex c = std::cos(half_arg);
            const Complex s_over_w = (t / 2.0) * sinc_c(half_arg);  // sin(wt t/2)/wt, even in wt
            const Complex rot = std::exp(Complex(0.0, -0.5) * omega * t);
            const Complex rot_conj = std::exp(Complex(0.0, 0.5) * omega * t);
            const Complex i_unit(0.0, 1.0);
            y(0, 0) = rot * (c - i_unit * delta * s_over_w);
            y(0, 1) = -i_unit * rot * (2.0 * eps * beta / hbar) * s_over_w;
            y(1, 0) = -i_unit * rot_conj * (2.0 * eps * beta / hbar) * s_over_w;
            y(1, 1) = rot_conj * (c + i_unit * delta * s_over_w);
            return y;
        }
        case CatalogId::diagonal: {
            const Complex a1 = op.param_or("a1", Complex(0.0, 1.0));
            const Complex a2 = op.param_or("a2", Complex(0.0, 1.0));
            y(0, 0) = std::exp(eps * a1 * t);
            y(1, 1) = std::exp(eps * a2 * t);
            return y;
        }
    }
    throw Error("unreachable");
}

double norm_integral(const TimeDependentOperator& op, double t, double abs_tol) {
    if (t < 0.0) throw ConfigError("norm_integral: t must be >= 0");
    if (t == 0.0) return 0.0;
    auto f = [&op](double s) { return spectral_norm(op.evaluate(s)); };
    std::vector<double> cuts = op.breakpoints_below(t);
    cuts.insert(cuts.begin(), 0.0);
    cuts.push_back(t);
    double total = 0.0;
    const double tol_per_piece = abs_tol / static_cast<double>(cuts.size());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        // Constant pieces integrate exactly.
        const auto& piece = op.pieces()[op.piece_index(cuts[i])];
        if (piece.time_independent) {
            total += f(cuts[i]) * (cuts[i + 1] - cuts[i]);
            continue;
        }
        auto r = integrate_adaptive(f, cuts[i], cuts[i + 1], tol_per_piece);
        if (!r.converged)
            throw NumericalError("norm_integral: quadrature did not converge (error " +
                                 std::to_string(r.abs_error) + ")");
        total += r.value;
    }
    return total;
}

namespace {

using nlohmann::json;

Complex json_complex(const json& v, const std::string& where) {
    if (v.is_number()) return Complex(v.get<double>(), 0.0);
    if (v.is_string()) return parse_scalar(v.get<std::string>());
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return Complex(v[0].get<double>(), v[1].get<double>());
    throw ConfigError("expected a number, [re, im] pair, or expression string for " + where);
}

}  // namespace

TimeDependentOperator load_problem_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("problem file is not valid JSON: ") + e.what());
    }
    ParamMap params;
    if (j.contains("params")) {
        if (!j["params"].is_object()) throw ConfigError("\"params\" must be an object");
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
            params[it.key()] = json_complex(it.value(), "param " + it.key());
    }
    if (j.contains("builtin")) {
        return make_catalog_operator(catalog_id_from_name(j["builtin"].get<std::string>()), params);
    }
    if (!j.contains("n") || !j["n"].is_number_integer())
        throw ConfigError("problem file needs an integer \"n\" (or a \"builtin\" name)");
    const int n = j["n"].get<int>();
    if (!j.contains("pieces") || !j["pieces"].is_array() || j["pieces"].empty())
        throw ConfigError("problem file needs a non-empty \"pieces\" array");
    std::vector<OperatorPiece> pieces;
    for (const auto& pj : j["pieces"]) {
        OperatorPiece p;
        if (!pj.contains("t_start") || !pj.contains("t_end") || !pj.contains("entries"))
            throw ConfigError("each piece needs t_start, t_end and entries");
        p.t_start = pj["t_start"].get<double>();
        if (pj["t_end"].is_string()) {
            const std::string s = pj["t_end"].get<std::string>();
            if (s != "inf") throw ConfigError("t_end must be a number or \"inf\"");
            p.t_end = kInf;
        } else {
            p.t_end = pj["t_end"].get<double>();
        }
        const auto& rows = pj["entries"];
        if (!rows.is_array() || static_cast<int>(rows.size()) != n)
            throw ConfigError("entries must be an n x n array of expression strings");
        p.time_independent = true;
        for (const auto& row : rows) {
            if (!row.is_array() || static_cast<int>(row.size()) != n)
                throw ConfigError("entries must be an n x n array of expression strings");
            for (const auto& cell : row) {
                if (!cell.is_string()) throw ConfigError("matrix entries must be expression strings");
                ExprPtr e = parse_expression(cell.get<std::string>());
                if (references_t(*e)) p.time_independent = false;
                p.entries.push_back(std::move(e));
            }
        }
        pieces.push_back(std::move(p));
    }
    return TimeDependentOperator(n, std::move(pieces), std::move(params));
}

TimeDependentOperator load_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open problem file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_problem_json(ss.str());
}

std::string catalog_entry_json(CatalogId id) {
    switch (id) {
        case CatalogId::example1:
            return R"json({"n": 2, "params": {}, "pieces": [{"t_start": 0, "t_end": "inf", "entries": [["2", "t"], ["0", "-1"]]}]})json";
        case CatalogId::example2:
            return R"json({"n": 2, "params": {"alpha": [1, 0], "beta": [1, 0]}, "pieces": [{"t_start": 0, "t_end": 1, "entries": [["0", "beta"], ["0", "0"]]}, {"t_start": 1, "t_end": "inf", "entries": [["alpha", "0"], ["0", "-alpha"]]}]})json";
        case CatalogId::example3:
            return R"json({"n": 2, "params": {"hbar": [1, 0], "omega0": [1, 0], "omega": [0.5, 0], "beta": [0.1, 0]}, "pieces": [{"t_start": 0, "t_end": "inf", "entries": [["-i*omega0/2", "-i*(beta/hbar)*exp(-i*omega*t)"], ["-i*(beta/hbar)*exp(i*omega*t)", "i*omega0/2"]]}]})json";
        case CatalogId::diagonal:
            return R"json({"n": 2, "params": {"a1": [0, 1], "a2": [0, 1]}, "pieces": [{"t_start": 0, "t_end": "inf", "entries": [["a1", "0"], ["0", "a2"]]}]})json";
    }
    return "{}";
}

}  // namespace magnuslab
