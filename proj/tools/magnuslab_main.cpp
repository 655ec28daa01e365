// magnuslab command-line frontend: propagation, Magnus terms, norm
// certificates and the eps-plane convergence analyzer for problems
// Y' = eps A(t) Y, Y(0) = I.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "magnuslab/convergence.hpp"
#include "magnuslab/errors.hpp"
#include "magnuslab/expr.hpp"
#include "magnuslab/linalg.hpp"
#include "magnuslab/magnus.hpp"
#include "magnuslab/problem.hpp"
#include "magnuslab/propagator.hpp"
#include "magnuslab/quadrature.hpp"

namespace {

using namespace magnuslab;

struct SourceOptions {
    std::string builtin;
    std::string problem_file;
    std::vector<std::string> params;
};

void add_source_options(CLI::App* cmd, SourceOptions& src) {
    auto* b = cmd->add_option("--builtin", src.builtin, "catalog problem name");
    auto* p = cmd->add_option("--problem", src.problem_file, "problem file (JSON)");
    b->excludes(p);
    cmd->add_option("--param", src.params, "parameter override NAME=EXPR (repeatable)");
}

TimeDependentOperator load_operator(const SourceOptions& src) {
    if (src.builtin.empty() == src.problem_file.empty())
        throw ConfigError("exactly one of --builtin or --problem is required");
    ParamMap overrides;
    for (const auto& kv : src.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--param expects NAME=EXPR, got '" + kv + "'");
        overrides[kv.substr(0, eq)] = parse_scalar(kv.substr(eq + 1));
    }
    if (!src.builtin.empty())
        return make_catalog_operator(catalog_id_from_name(src.builtin), overrides);
    auto op = load_problem_file(src.problem_file);
    if (!overrides.empty()) {
        ParamMap merged = op.params();
        for (const auto& [k, v] : overrides) merged[k] = v;
        return TimeDependentOperator(op.dim(), op.pieces(), std::move(merged), op.exact_tag());
    }
    return op;
}

void write_output(const std::string& text, const std::string& out_dir, const std::string& name) {
    std::cout << text;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream f(std::filesystem::path(out_dir) / name);
        if (!f) throw ConfigError("cannot write to output directory '" + out_dir + "'");
        f << text;
    }
}

std::string complex_json(Complex z) {
    return "[" + format_g17(z.real()) + ", " + format_g17(z.imag()) + "]";
}

double trace_integral_im(const TimeDependentOperator& op, double t, bool imag_part) {
    auto f = [&](double s) {
        const Complex tr = op.evaluate(s).trace();
        return imag_part ? tr.imag() : tr.real();
    };
    std::vector<double> cuts = op.breakpoints_below(t);
    cuts.insert(cuts.begin(), 0.0);
    cuts.push_back(t);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += integrate_adaptive(f, cuts[i], cuts[i + 1], 1e-11).value;
    return total;
}

int cmd_propagate(const SourceOptions& src, double t, const std::string& eps_str, double tol,
                  const std::string& out_dir, const std::string& format) {
    auto op = load_operator(src);
    const Complex eps = parse_scalar(eps_str);
    auto res = propagate(op, t, eps, tol);

    if (format == "csv") {
        std::ostringstream os;
        os << "i,j,re,im\n";
        for (int i = 0; i < op.dim(); ++i)
            for (int j = 0; j < op.dim(); ++j)
                os << i + 1 << "," << j + 1 << "," << format_g17(res.y(i, j).real()) << ","
                   << format_g17(res.y(i, j).imag()) << "\n";
        write_output(os.str(), out_dir, "propagate.csv");
        return 0;
    }

    const Complex trace_int(trace_integral_im(op, t, false), trace_integral_im(op, t, true));
    const Complex liouville = std::exp(eps * trace_int);
    const double det_residual = std::abs(det(res.y) - liouville) / std::abs(liouville);
    const double kappa = norm_integral(op, t);
    const double gronwall_margin = std::exp(std::abs(eps) * kappa) - spectral_norm(res.y);

    std::ostringstream os;
    os << "{\n  \"schema\": 1,\n  \"t\": " << format_g17(t) << ",\n  \"eps\": " << complex_json(eps)
       << ",\n  \"Y\": [";
    for (int i = 0; i < op.dim(); ++i) {
        os << (i ? ", " : "") << "[";
        for (int j = 0; j < op.dim(); ++j) os << (j ? ", " : "") << complex_json(res.y(i, j));
        os << "]";
    }
    os << "],\n  \"est_error\": " << format_g17(res.est_error)
       << ",\n  \"det_residual\": " << format_g17(det_residual)
       << ",\n  \"gronwall_margin\": " << format_g17(gronwall_margin) << "\n}\n";
    write_output(os.str(), out_dir, "propagate.json");
    return 0;
}

int cmd_magnus(const SourceOptions& src, double t, int terms, const std::string& eps_str,
               const std::string& out_dir) {
    auto op = load_operator(src);
    const Complex eps = parse_scalar(eps_str);
    auto series = magnus_terms(op, t, terms);
    auto recon = reconstruct(op, t, terms, eps);

    std::ostringstream terms_csv;
    terms_csv << "k,term_norm\n";
    for (std::size_t k = 0; k < series.term_norms.size(); ++k)
        terms_csv << k + 1 << "," << format_g17(series.term_norms[k]) << "\n";

    std::ostringstream recon_csv;
    recon_csv << "M,reconstruction_error\n";
    for (std::size_t m = 0; m < recon.errors_by_order.size(); ++m)
        recon_csv << m + 1 << "," << format_g17(recon.errors_by_order[m]) << "\n";

    const std::string dir = out_dir.empty() ? "." : out_dir;
    std::filesystem::create_directories(dir);
    std::ofstream(std::filesystem::path(dir) / "magnus_terms.csv") << terms_csv.str();
    std::ofstream(std::filesystem::path(dir) / "magnus_reconstruction.csv") << recon_csv.str();

    if (series.radius_available) {
        if (series.empirical_radius.is_infinite)
            std::cout << "empirical radius: inf (super-geometric decay)\n";
        else
            std::cout << "empirical radius: " << format_g17(series.empirical_radius.value)
                      << " (fit over " << series.empirical_radius.points_used << " points, rms "
                      << format_g17(series.empirical_radius.fit_residual) << ")\n";
    } else {
        std::cout << "empirical radius: unavailable (fewer than 8 nonzero terms)\n";
    }
    std::cout << "wrote " << dir << "/magnus_terms.csv and " << dir
              << "/magnus_reconstruction.csv\n";
    return 0;
}

int cmd_radius(const SourceOptions& src, double t, const AnalyzeOptions& opts, bool paths,
               const std::string& out_dir, const std::string& format) {
    auto op = load_operator(src);
    auto report = analyze(op, t, opts);
    if (format == "csv") {
        std::ostringstream os;
        os << "eps_re,eps_im,abs,residual,l,p,q,classification\n";
        for (const auto& r : report.radius.roots)
            os << format_g17(r.eps0.real()) << "," << format_g17(r.eps0.imag()) << ","
               << format_g17(std::abs(r.eps0)) << "," << format_g17(r.residual) << ","
               << r.multiplicity_l << "," << r.p << "," << r.q << ","
               << to_string(r.classification) << "\n";
        write_output(os.str(), out_dir, "radius.csv");
    } else {
        write_output(to_json(report), out_dir, "radius.json");
    }
    if (paths) {
        const std::string dir = out_dir.empty() ? "." : out_dir;
        std::filesystem::create_directories(dir);
        int idx = 0;
        for (const auto& root : report.radius.roots) {
            ++idx;
            if (std::abs(root.eps0) == 0.0) continue;
            auto path = continue_eigenvalues(op, t, root.eps0, {}, opts.cfg);
            std::ofstream(std::filesystem::path(dir) / ("eigenpath_" + std::to_string(idx) +
                                                        ".csv"))
                << to_csv(path);
        }
    }
    return 0;
}

int cmd_certify(const SourceOptions& src, const std::string& out_dir,
                const std::string& format) {
    auto op = load_operator(src);
    if (format == "csv") {
        std::ostringstream os;
        os << "constant,T\n";
        for (const auto& c : norm_certificate_constants()) {
            auto nb = norm_bound_time(op, c.value);
            os << c.name << "," << (nb.is_infinite ? "inf" : format_g17(nb.t)) << "\n";
        }
        write_output(os.str(), out_dir, "certify.csv");
        return 0;
    }
    std::ostringstream os;
    os << "{\n  \"schema\": 1,\n  \"norm_times\": {";
    bool first = true;
    for (const auto& c : norm_certificate_constants()) {
        auto nb = norm_bound_time(op, c.value);
        os << (first ? "" : ", ") << "\"" << c.name << "\": ";
        if (nb.is_infinite)
            os << "\"inf\"";
        else
            os << format_g17(nb.t);
        first = false;
    }
    os << "}\n}\n";
    write_output(os.str(), out_dir, "certify.json");
    return 0;
}

int cmd_problems_list() {
    for (const auto& name : catalog_names()) {
        std::cout << name << "\n  " << catalog_entry_json(catalog_id_from_name(name)) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"magnuslab: Magnus-series terms, norm certificates and the eps-plane "
                 "convergence analyzer for Y' = eps A(t) Y"};
    app.require_subcommand(1);

    SourceOptions src;
    double t = 0.0;
    std::string eps_str = "1";
    double tol = 1e-11;
    int terms = 14;
    std::string out_dir;
    int jobs = 1;
    double search_radius = 0.0;
    double t_domain_max = 0.0;
    bool paths = false;
    std::string format = "json";
    const auto format_check = CLI::IsMember({"json", "csv"});

    auto* prop = app.add_subcommand("propagate", "high-accuracy reference solution Y(t; eps)");
    add_source_options(prop, src);
    prop->add_option("--t", t, "final time")->required();
    prop->add_option("--eps", eps_str, "complex eps, e.g. 0.5+0.25i (default 1)");
    prop->add_option("--tol", tol, "local error tolerance (>= 1e-13)");
    prop->add_option("--format", format, "json|csv")->check(format_check);
    prop->add_option("--out", out_dir, "output directory");

    auto* mag = app.add_subcommand("magnus", "Magnus terms, reconstruction errors, radius fit");
    add_source_options(mag, src);
    mag->add_option("--t", t, "final time")->required();
    mag->add_option("--K", terms, "number of terms")->required()->check(CLI::Range(1, 30));
    mag->add_option("--eps", eps_str, "eps for the reconstruction comparison (default 1)");
    mag->add_option("--out", out_dir, "output directory (default .)");

    auto* rad = app.add_subcommand("radius", "convergence report with the spectral analyzer");
    add_source_options(rad, src);
    rad->add_option("--t", t, "analysis time")->required();
    rad->add_option("--K", terms, "terms for the empirical radius fit")->check(CLI::Range(1, 30));
    rad->add_option("--search-radius", search_radius, "override the root-search radius");
    rad->add_option("--t-domain", t_domain_max, "also solve F(t) = 1 up to this t_max");
    rad->add_flag("--paths", paths, "write eigenvalue-continuation CSVs per root");
    rad->add_option("--jobs", jobs, "parallel boundary sampling")->check(CLI::Range(1, 256));
    rad->add_option("--format", format, "json|csv")->check(format_check);
    rad->add_option("--out", out_dir, "output directory");

    auto* cert = app.add_subcommand("certify", "norm-bound times for the four constants");
    add_source_options(cert, src);
    cert->add_option("--format", format, "json|csv")->check(format_check);
    cert->add_option("--out", out_dir, "output directory");

    auto* problems = app.add_subcommand("problems", "catalog utilities");
    auto* plist = problems->add_subcommand("list", "list built-in problems and their schemas");
    problems->require_subcommand(1);

    auto* xi = app.add_subcommand("xi", "print the xi constant");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (prop->parsed()) return cmd_propagate(src, t, eps_str, tol, out_dir, format);
        if (mag->parsed()) return cmd_magnus(src, t, terms, eps_str, out_dir);
        if (rad->parsed()) {
            AnalyzeOptions opts;
            opts.search_radius = search_radius;
            opts.empirical_terms = terms;
            if (t_domain_max > 0.0) opts.t_domain_max = t_domain_max;
            opts.cfg.jobs = jobs;
            return cmd_radius(src, t, opts, paths, out_dir, format);
        }
        if (cert->parsed()) return cmd_certify(src, out_dir, format);
        if (plist->parsed()) return cmd_problems_list();
        if (xi->parsed()) {
            std::cout << format_g17(compute_xi()) << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
