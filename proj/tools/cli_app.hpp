#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "maxdeficit/maxdeficit.hpp"

namespace maxdeficit::cli {

enum ExitCode : int { ok = 0, check_failed = 1, usage = 2, domain = 3, convergence = 4 };

struct Options {
    std::vector<std::string> lines;
    std::vector<std::string> g;
    std::vector<double> A;
    std::vector<double> delta;
    std::vector<double> u;
    std::vector<double> gamma;
    std::vector<double> R;
    std::optional<double> alpha;
    std::optional<double> t;
    double mu = 1.0;
    std::uint64_t n = 100000;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "table";
    int precision = 6;
    std::string method = "marginal";
    unsigned threads = 0;
    std::string config;

    std::string kind;   // measure kind
    int which = 0;      // table number
};

inline ExponentialLine parse_line(const std::string& spec) {
    const auto parts = split(spec, ',');
    if (parts.size() != 3) throw ArgumentError("--line expects lambda,mu,c but got '" + spec + "'");
    ExponentialLine l{parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
    l.validate();
    return l;
}

inline std::vector<ExponentialLine> table1_lines() {
    return {{10.0, 1.0, 12.0}, {1.0, 10.0, 15.0}, {0.1, 100.0, 20.0}};
}

inline std::vector<ExponentialLine> table4_lines() {
    return {ExponentialLine::from_constants(0.9, 0.05), ExponentialLine::from_constants(0.9, 0.01)};
}

class Runner {
public:
    Runner(Options o, std::ostream& out) : o_(std::move(o)), out_(out) {}

    std::uint64_t seed() const {
        if (o_.seed) return *o_.seed;
        if (const char* env = std::getenv("MAXDEFICIT_SEED")) {
            try {
                return std::stoull(env);
            } catch (const std::exception&) {
                throw ArgumentError("MAXDEFICIT_SEED is not an unsigned integer");
            }
        }
        return 20240611;
    }

    unsigned threads() const {
        return o_.threads ? o_.threads : std::max(1u, std::thread::hardware_concurrency());
    }

    std::string num(double x) const { return format_number(x, o_.precision); }

    std::vector<ExponentialLine> lines_or(std::vector<ExponentialLine> fallback) const {
        if (o_.lines.empty()) return fallback;
        std::vector<ExponentialLine> out;
        for (const auto& s : o_.lines) out.push_back(parse_line(s));
        return out;
    }

    ExponentialLine single_line() const {
        if (o_.lines.size() != 1) throw ArgumentError("exactly one --line is required");
        return parse_line(o_.lines.front());
    }

    Distortion single_g() const {
        if (o_.g.size() > 1) throw ArgumentError("at most one --g is allowed here");
        if (!o_.g.empty()) return Distortion::parse(o_.g.front());
        if (o_.alpha) return Distortion::tvar(*o_.alpha);
        return Distortion::identity();
    }

    void emit(const Table& t) {
        std::ofstream file;
        std::ostream* os = &out_;
        if (!o_.out.empty()) {
            file.open(o_.out);
            if (!file) throw Error("cannot open '" + o_.out + "' for writing");
            os = &file;
        }
        if (o_.format == "csv") write_csv(*os, t);
        else write_text(*os, t);
    }

    int measure() {
        const auto line = single_line();
        const auto g = single_g();
        Table t;
        if (o_.kind == "premium-bound") {
            const auto pb = premium_lower_bound(line, g, o_.n, seed());
            t.header = {"measure", "g", "estimate", "std_error", "lambda_mu", "concave"};
            t.add_row({o_.kind, g.to_string(), num(pb.estimate), num(pb.std_error),
                       num(line.lambda * line.mu), pb.concave ? "yes" : "no"});
            emit(t);
            return ok;
        }
        if (o_.kind == "ear") {
            t.header = {"measure", "A", "value", "method", "residual"};
            for (double A : thresholds(o_.A, "--A")) {
                const auto r = ear_convex_measure(line, A);
                t.add_row({o_.kind, num(A), num(r.value), to_string(r.method), num(r.residual)});
            }
            emit(t);
            return ok;
        }

        const auto d = o_.t ? DeficitFunctional::empirical(g, simulate_max_loss(line, *o_.t, o_.n, seed(), threads()).samples,
                                                          Horizon::finite(*o_.t))
                            : DeficitFunctional::infinite_horizon(line, g);
        t.header = {"measure", "g", "parameter", "value", "method", "residual", "branch"};
        auto row = [&](const std::string& param, const MeasureResult& r) {
            t.add_row({o_.kind, g.to_string(), param, num(r.value), to_string(r.method), num(r.residual),
                       r.branch.empty() ? "-" : r.branch});
        };
        if (o_.kind == "coherent") {
            row("-", coherent_measure(d));
        } else if (o_.kind == "convex") {
            for (double A : thresholds(o_.A, "--A")) row("A=" + num(A), convex_measure(d, A));
        } else if (o_.kind == "proportional") {
            for (double dl : thresholds(o_.delta, "--delta")) row("delta=" + num(dl), proportional_measure(d, dl));
        } else if (o_.kind == "critical") {
            MeasureResult r;
            r.value = critical_threshold(d);
            r.method = d.is_closed_form() ? Method::ClosedForm : Method::Quadrature;
            row("-", r);
        } else {
            throw ArgumentError("unknown measure '" + o_.kind + "'");
        }
        emit(t);
        return ok;
    }

    int allocate() {
        if (o_.u.size() != 1) throw ArgumentError("allocate needs exactly one --u budget");
        const double total = o_.u.front();
        const auto lines = lines_or({});
        if (lines.empty()) throw ArgumentError("allocate needs at least one --line");
        AllocationResult res;
        if (o_.method == "marginal") {
            if (!o_.gamma.empty() && o_.gamma.size() != lines.size()) {
                throw ArgumentError("--gamma must be given once per line");
            }
            AllocationProblem p;
            for (std::size_t k = 0; k < lines.size(); ++k) {
                p.lines.push_back({lines[k], o_.gamma.empty() ? 1.0 : o_.gamma[k]});
            }
            p.total_u = total;
            res = method1_exponential(p);
        } else if (o_.method == "aggregate") {
            const auto g = single_g();
            if (lines.size() == 2 && std::holds_alternative<IdentityDistortion>(g.variant())) {
                res = method2_two_line(ruin_constants(lines[0]), ruin_constants(lines[1]), total);
            } else {
                res = method2_generic(lines, g, total);
            }
        } else {
            throw ArgumentError("--method must be marginal or aggregate");
        }
        Table t;
        t.header = {"line", "u_star", "active", "threshold", "objective"};
        for (std::size_t k = 0; k < lines.size(); ++k) {
            const bool active =
                std::find(res.active_set.begin(), res.active_set.end(), k) != res.active_set.end();
            t.add_row({std::to_string(k + 1), num(res.u_star[k]), active ? "yes" : "no", num(res.threshold),
                       num(res.objective)});
        }
        emit(t);
        return ok;
    }

    int table() {
        Table t;
        switch (o_.which) {
            case 1: {
                t.header = {"line", "lambda", "mu", "c", "a", "b"};
                const auto lines = lines_or(table1_lines());
                for (std::size_t k = 0; k < lines.size(); ++k) {
                    const auto rc = ruin_constants(lines[k]);
                    t.add_row({std::to_string(k + 1), num(lines[k].lambda), num(lines[k].mu), num(lines[k].c),
                               num(rc.a), num(rc.b)});
                }
                break;
            }
            case 2: {
                const auto lines = lines_or(table1_lines());
                const std::vector<double> budgets = o_.u.empty() ? std::vector<double>{100, 40, 10, 1} : o_.u;
                t.header = {"line"};
                for (double u : budgets) t.header.push_back("u=" + num(u));
                std::vector<AllocationResult> results;
                for (double u : budgets) {
                    AllocationProblem p;
                    for (const auto& l : lines) p.lines.push_back({l, 1.0});
                    p.total_u = u;
                    results.push_back(method1_exponential(p));
                }
                for (std::size_t k = 0; k < lines.size(); ++k) {
                    std::vector<std::string> row{std::to_string(k + 1)};
                    for (const auto& r : results) row.push_back(num(r.u_star[k]));
                    t.add_row(row);
                }
                break;
            }
            case 3: {
                const auto lines = lines_or(table1_lines());
                std::vector<double> gamma = o_.gamma;
                if (gamma.empty()) {
                    gamma.assign(lines.size(), 1.0);
                    gamma.back() = 2.0;
                }
                if (gamma.size() != lines.size()) throw ArgumentError("--gamma must be given once per line");
                const double total = o_.u.empty() ? 100.0 : o_.u.front();
                AllocationProblem base, pen;
                for (std::size_t k = 0; k < lines.size(); ++k) {
                    base.lines.push_back({lines[k], 1.0});
                    pen.lines.push_back({lines[k], gamma[k]});
                }
                base.total_u = pen.total_u = total;
                const auto b = method1_exponential(base);
                const auto p = method1_exponential(pen);
                t.header = {"line", "gamma", "baseline", "penalized", "shift"};
                for (std::size_t k = 0; k < lines.size(); ++k) {
                    t.add_row({std::to_string(k + 1), num(gamma[k]), num(b.u_star[k]), num(p.u_star[k]),
                               num(p.u_star[k] - b.u_star[k])});
                }
                break;
            }
            case 4: {
                const auto lines = lines_or(table4_lines());
                if (lines.size() != 2) throw ArgumentError("table 4 compares exactly two lines");
                const auto A = ruin_constants(lines[0]);
                const auto B = ruin_constants(lines[1]);
                const std::vector<double> budgets = o_.u.empty() ? std::vector<double>{30, 60, 120} : o_.u;
                t.header = {"u", "m1_u1", "m1_u2", "m2_u1", "m2_u2", "rho1_m1", "rho2_m2"};
                for (double u : budgets) {
                    AllocationProblem p{{{lines[0], 1.0}, {lines[1], 1.0}}, u, AllocationMethod::MarginalSum,
                                        Distortion::identity()};
                    const auto m1 = method1_exponential(p);
                    const auto m2 = method2_two_line(A, B, u);
                    t.add_row({num(u), num(m1.u_star[0]), num(m1.u_star[1]), num(m2.u_star[0]), num(m2.u_star[1]),
                               num(m1.objective), num(m2.objective)});
                }
                break;
            }
            default: throw ArgumentError("table must be 1, 2, 3 or 4");
        }
        emit(t);
        return ok;
    }

    int figure() {
        if (!(o_.mu > 0.0)) throw DomainError("--mu must be > 0");
        std::vector<double> grid = o_.R;
        if (grid.empty()) {
            for (int i = 1; i <= 44; ++i) grid.push_back(0.02 * i);
        }
        std::vector<Distortion> gs;
        if (o_.g.empty()) {
            gs = {Distortion::identity(), Distortion::proportional_hazard(0.5),
                  Distortion::tvar(o_.alpha.value_or(0.01))};
        } else {
            for (const auto& s : o_.g) gs.push_back(Distortion::parse(s));
        }
        const std::vector<double> As = o_.A.empty() ? std::vector<double>{5, 20} : o_.A;
        const std::vector<double> deltas = o_.delta.empty() ? std::vector<double>{0.01, 0.05} : o_.delta;

        Table t;
        t.header = {"R"};
        for (const auto& g : gs) {
            const auto tag = "[" + g.to_string() + "]";
            t.header.push_back("coherent" + tag);
            for (double A : As) t.header.push_back("convex_A" + num(A) + tag);
            for (double d : deltas) t.header.push_back("proportional_d" + num(d) + tag);
        }
        for (double A : As) t.header.push_back("ear_A" + num(A));

        for (double R : grid) {
            if (!(R > 0.0 && R * o_.mu < 1.0)) throw DomainError("R = " + num(R) + " lies outside (0, 1/mu)");
            const auto line = ExponentialLine::from_adjustment(o_.mu, R);
            std::vector<std::string> row{num(R)};
            for (const auto& g : gs) {
                const auto d = DeficitFunctional::infinite_horizon(line, g);
                row.push_back(num(coherent_measure(d).value));
                for (double A : As) row.push_back(num(convex_measure(d, A).value));
                for (double dl : deltas) row.push_back(num(proportional_measure(d, dl).value));
            }
            for (double A : As) row.push_back(num(ear_convex_measure(line, A).value));
            t.add_row(row);
        }
        emit(t);
        return ok;
    }

    int simulate() {
        if (!o_.t) throw ArgumentError("simulate needs --t");
        const auto line = single_line();
        const auto batch = simulate_max_loss(line, *o_.t, o_.n, seed(), threads());
        if (!o_.out.empty()) {
            std::ofstream f(o_.out);
            if (!f) throw Error("cannot open '" + o_.out + "' for writing");
            write_batch(f, batch);
            if (!f) throw Error("write to '" + o_.out + "' failed");
        }
        const std::vector<double> us = o_.u.empty() ? std::vector<double>{0.0} : o_.u;
        Table t;
        t.header = {"u", "psi_t", "ci95_half_width", "psi_infinite"};
        for (double u : us) {
            const auto e = estimate_finite_ruin(batch, u);
            t.add_row({num(u), num(e.probability), num(e.half_width), num(ultimate_ruin(line, u))});
        }
        if (o_.format == "csv") write_csv(out_, t);
        else write_text(out_, t);
        return ok;
    }

    int check();

private:
    static std::vector<double> thresholds(const std::vector<double>& v, const char* flag) {
        if (v.empty()) throw ArgumentError(std::string("this measure needs ") + flag);
        return v;
    }

    Options o_;
    std::ostream& out_;
};

/// Fast invariant suite; exits 1 if any check fails.
inline int Runner::check() {
    Table t;
    t.header = {"check", "status", "detail"};
    bool all = true;
    auto record = [&](const std::string& name, bool pass, double detail) {
        all = all && pass;
        t.add_row({name, pass ? "PASS" : "FAIL", num(detail)});
    };

    const auto lines = table1_lines();
    {
        double worst = 0.0;
        for (const auto& l : lines) {
            for (const auto& g : {Distortion::identity(), Distortion::proportional_hazard(0.5), Distortion::tvar(0.05)}) {
                const auto closed = DeficitFunctional::infinite_horizon(l, g);
                const auto quad = DeficitFunctional::quadrature_exponential(l, g);
                for (double u : {0.0, 3.0, 30.0}) {
                    const double dc = closed.eval(u);
                    worst = std::max(worst, std::abs(dc - quad.eval(u)) / std::max(1.0, dc));
                }
            }
        }
        record("closed_form_vs_quadrature", worst <= 1e-6, worst);
    }
    {
        double worst = 0.0;
        for (const auto& l : lines) {
            const auto d = DeficitFunctional::closed_form_ph(l, 0.7);
            const auto q = DeficitFunctional::quadrature_exponential(l, Distortion::proportional_hazard(0.7));
            for (double dl : {0.01, 0.05, 0.3}) {
                worst = std::max(worst, std::abs(proportional_measure(d, dl).value - proportional_measure(q, dl).value));
            }
        }
        record("lambert_w_vs_root", worst <= 1e-6, worst);
    }
    {
        double worst = 0.0;
        for (double u : {0.0, 1.0, 10.0, 40.0, 100.0}) {
            AllocationProblem p;
            for (const auto& l : lines) p.lines.push_back({l, 1.0});
            p.total_u = u;
            const auto r = method1_exponential(p);
            double s = 0.0;
            for (double x : r.u_star) s += x;
            worst = std::max(worst, std::abs(s - u));
            for (auto k : r.active_set) {
                worst = std::max(worst, std::abs(ultimate_ruin(lines[k], r.u_star[k]) - r.threshold));
            }
        }
        record("method1_budget_and_kkt", worst <= 1e-8, worst);
    }
    {
        const auto two = table4_lines();
        const auto A = ruin_constants(two[0]);
        const auto B = ruin_constants(two[1]);
        double worst = 0.0;
        bool order = true;
        for (double u : {30.0, 60.0, 120.0}) {
            const auto c = method2_two_line(A, B, u);
            const auto g = method2_generic(two, Distortion::identity(), u);
            for (int k = 0; k < 2; ++k) worst = std::max(worst, std::abs(c.u_star[k] - g.u_star[k]));
            order = order && rho2_two_line(A, B, c.u_star[0], c.u_star[1]) <= rho1_two_line(A, B, c.u_star[0], c.u_star[1]);
        }
        record("method2_generic_vs_two_line", worst <= 1e-3, worst);
        record("rho2_below_rho1", order, 0.0);
    }
    {
        const auto batch = simulate_max_loss(lines[0], 10.0, 2000, seed(), 1);
        const auto again = simulate_max_loss(lines[0], 10.0, 2000, seed(), 4);
        record("simulation_thread_invariance", batch.samples == again.samples, 0.0);
        std::stringstream ss;
        write_batch(ss, batch);
        record("batch_round_trip", read_batch(ss).samples == batch.samples, 0.0);
    }
    {
        const PathState s{3.0, 1.25, 4.0};
        const double base = 7.5;
        record("rolling_identity", rolling_requirement(s, base) - s.loss == base, 0.0);
    }
    emit(t);
    return all ? ok : check_failed;
}

/// Flat key=value config merged under command-line flags.
inline std::vector<std::string> merge_config(CLI::App& app, const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot read config '" + path + "'");
    const auto entries = read_config(in);

    auto given = [&](const std::string& key) {
        for (const auto& a : args) {
            if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
        }
        return false;
    };
    std::vector<std::string> merged;
    for (const auto& [key, value] : entries) {
        if (key == "config" || app.get_option_no_throw("--" + key) == nullptr) {
            throw ArgumentError("unknown config key '" + key + "'");
        }
        if (given(key)) continue;
        merged.push_back("--" + key);
        merged.push_back(value);
    }
    merged.insert(merged.end(), args.begin(), args.end());
    return merged;
}

inline int run_cli(const std::vector<std::string>& argv_in, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Distorted expected maximum deficit: capital measures, allocation and simulation"};
    app.name("maxdeficit");
    app.require_subcommand(1);
    app.add_option("--line", o.lines, "line as lambda,mu,c (repeatable)");
    app.add_option("--g", o.g, "distortion: identity | ph:p | tvar:alpha | varstep:alpha (repeatable for figure)");
    app.add_option("--A", o.A, "convex-measure tolerance (repeatable)");
    app.add_option("--delta", o.delta, "proportional margin (repeatable)");
    app.add_option("--alpha", o.alpha, "TVaR level when --g is omitted");
    app.add_option("--u", o.u, "capital level or budget (repeatable)");
    app.add_option("--gamma", o.gamma, "per-line PH exponent for Method 1 (repeatable)");
    app.add_option("--R", o.R, "adjustment-coefficient grid for figure (repeatable)");
    app.add_option("--mu", o.mu, "mean claim size for figure");
    app.add_option("--t", o.t, "finite horizon");
    app.add_option("--n", o.n, "number of simulated paths");
    app.add_option("--seed", o.seed, "RNG seed (fallback: MAXDEFICIT_SEED)");
    app.add_option("--threads", o.threads, "simulation worker threads (0 = all cores)");
    app.add_option("--method", o.method, "allocation method: marginal | aggregate");
    app.add_option("--out", o.out, "output file");
    app.add_option("--format", o.format, "table | csv")->check(CLI::IsMember({"table", "csv"}));
    app.add_option("--precision", o.precision, "significant digits")->check(CLI::Range(1, 17));
    app.add_option("--config", o.config, "key=value config file; flags win");

    auto* measure = app.add_subcommand("measure", "evaluate one capital measure")->fallthrough();
    measure->add_option("kind", o.kind, "coherent | convex | proportional | critical | ear | premium-bound")
        ->required();
    auto* allocate = app.add_subcommand("allocate", "allocate a budget across lines")->fallthrough();
    auto* table = app.add_subcommand("table", "regenerate a reference table")->fallthrough();
    table->add_option("which", o.which, "1 | 2 | 3 | 4")->required();
    auto* figure = app.add_subcommand("figure", "capital versus adjustment coefficient, as CSV")->fallthrough();
    auto* simulate = app.add_subcommand("simulate", "simulate maximum losses and estimate ruin")->fallthrough();
    auto* check = app.add_subcommand("check", "run the fast invariant suite")->fallthrough();

    try {
        std::vector<std::string> args(argv_in.begin() + 1, argv_in.end());
        args = merge_config(app, args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    }

    Runner run(o, out);
    try {
        if (*measure) return run.measure();
        if (*allocate) return run.allocate();
        if (*table) return run.table();
        if (*figure) return run.figure();
        if (*simulate) return run.simulate();
        if (*check) return run.check();
        return usage;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const ConvergenceError& e) {
        err << "convergence error: " << e.what() << '\n';
        return convergence;
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << '\n';
        return domain;
    } catch (const ModelError& e) {
        err << "model error: " << e.what() << '\n';
        return domain;
    } catch (const UnsupportedError& e) {
        err << "unsupported: " << e.what() << '\n';
        return domain;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return check_failed;
    }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace maxdeficit::cli
