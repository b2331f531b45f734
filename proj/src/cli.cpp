#include "cramer/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "cramer/detail/numfmt.hpp"
#include "cramer/errors.hpp"
#include "cramer/lattice.hpp"
#include "cramer/montecarlo.hpp"

namespace cramer {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace {

std::string csv_cell(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string q = "\"";
    for (char ch : cell) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + '"';
}

}  // namespace

void render(std::ostream& os, const Report& report, OutputFormat format) {
    switch (format) {
        case OutputFormat::table: {
            for (const auto& [k, v] : report.summary) os << k << ": " << v << '\n';
            for (const auto& sec : report.sections) {
                if (!report.summary.empty() || &sec != &report.sections.front()) os << '\n';
                if (report.sections.size() > 1) os << "[" << sec.name << "]\n";
                std::vector<std::size_t> width(sec.columns.size());
                for (std::size_t i = 0; i < sec.columns.size(); ++i) width[i] = sec.columns[i].size();
                for (const auto& row : sec.rows)
                    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i)
                        width[i] = std::max(width[i], row[i].size());
                auto line = [&](const std::vector<std::string>& cells) {
                    std::string s;
                    for (std::size_t i = 0; i < cells.size(); ++i) {
                        if (i) s += "  ";
                        s += cells[i];
                        if (i + 1 < cells.size()) s.append(width[i] - cells[i].size(), ' ');
                    }
                    while (!s.empty() && s.back() == ' ') s.pop_back();
                    os << s << '\n';
                };
                line(sec.columns);
                for (const auto& row : sec.rows) line(row);
            }
            break;
        }
        case OutputFormat::csv: {
            const bool prefixed = report.sections.size() > 1;
            for (const auto& sec : report.sections) {
                for (const auto& row : sec.rows) {
                    if (prefixed) os << sec.name << ',';
                    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
                    os << '\n';
                }
            }
            break;
        }
        case OutputFormat::kv: {
            for (const auto& [k, v] : report.summary) os << k << '=' << v << '\n';
            for (const auto& sec : report.sections) {
                for (std::size_t r = 0; r < sec.rows.size(); ++r)
                    for (std::size_t i = 0; i < sec.rows[r].size() && i < sec.columns.size(); ++i)
                        os << sec.name << '.' << r << '.' << sec.columns[i] << '=' << sec.rows[r][i] << '\n';
            }
            break;
        }
    }
}

namespace {

using detail::shortest;
constexpr double span_tol = 1e-9;

std::string fmt(double v) { return format_number(v); }

std::size_t ceil_cells(double x, double d) {
    const double q = x / d;
    return static_cast<std::size_t>(std::max(0.0, std::ceil(q - span_tol * std::max(1.0, q))));
}

std::size_t floor_cells(double x, double d) {
    const double q = x / d;
    return static_cast<std::size_t>(std::max(0.0, std::floor(q + span_tol * std::max(1.0, q))));
}

// Claim lattice for exact computations: the severity's own span when it is
// a lattice law, otherwise the model-file span.
struct ClaimLattice {
    LatticeDistribution f;
    bool exact;
};

ClaimLattice claim_lattice(const ModelSpec& spec) {
    const auto& sev = spec.severity;
    const double d = sev.is_lattice() ? sev.lattice_span() : spec.span;
    return {discretize(sev, d, cells_for_tail(sev, d, spec.tail_tol), {spec.tail_tol, false}), sev.is_lattice()};
}

SimulationPlan base_plan(const ModelSpec& spec, const RiskSystem& sys) {
    SimulationPlan plan(sys);
    plan.horizon = spec.mc_horizon;
    plan.n_paths = spec.mc_paths;
    plan.seed = spec.mc_seed;
    plan.workers = spec.mc_workers;
    plan.event_budget = spec.mc_budget;
    plan.ruin = false;
    return plan;
}

Report cmd_tail(const ModelSpec& spec, double t, double x, bool mc) {
    if (!(t > 0.0) || !(x > 0.0)) throw DomainError("t and x must be positive");
    const auto model = spec.model();
    Report rep;
    rep.summary = {{"model", model.severity().name()}, {"lambda", fmt(model.lambda())}, {"t", fmt(t)},
                   {"x", fmt(x)}, {"mean_rate", fmt(model.mean_rate())}};
    ReportSection sec{"tail", {"method", "value", "note"}, {}};

    const auto ch = chernoff_bound(model, t, x);
    sec.rows.push_back({"chernoff", fmt(ch.bound), ch.side == TailSide::upper ? "upper-tail" : "lower-tail"});

    const bool lat = model.severity().is_lattice();
    const std::string e1 = lat ? "esscher-modified" : "esscher";
    const std::string e2 = lat ? "esscher-discrete" : "esscher-explicit";
    try {
        const auto e = lat ? esscher_tail_lattice(model, t, x) : esscher_tail(model, t, x);
        const std::string note = e.low_quality ? "flag: a*sigma<1" : "";
        sec.rows.push_back({e1, fmt(e.canonical), note});
        sec.rows.push_back({e2, fmt(e.alternative), note});
    } catch (const DomainError&) {
        sec.rows.push_back({e1, "nan", "flag: undefined for x <= lambda*mu"});
        sec.rows.push_back({e2, "nan", "flag: undefined for x <= lambda*mu"});
    }

    const auto cl = claim_lattice(spec);
    const double d = cl.f.span();
    const std::size_t n = ceil_cells(t * x, d);
    const std::size_t n_out = std::max<std::size_t>(n, 1);
    const auto agg = panjer(model.lambda() * t, cl.f, n_out);
    sec.rows.push_back({cl.exact ? "panjer-exact" : "discretized (d=" + fmt(d) + ")", fmt(agg.at_least(n)),
                        cl.exact ? "" : "right-endpoint lattice; upper-biased"});

    if (mc) {
        auto plan = base_plan(spec, spec.system());
        plan.horizon = t;
        plan.tail_time = t;
        plan.tail_level = x;
        const auto res = simulate(plan);
        sec.rows.push_back({"monte-carlo", fmt(res.tail->value), "se=" + fmt(res.tail->std_error)});
    }
    rep.sections.push_back(std::move(sec));
    return rep;
}

Report cmd_ruin(const ModelSpec& spec, std::vector<double> us, bool mc) {
    if (us.empty()) us.push_back(spec.u);
    for (double u : us)
        if (!(u >= 0.0)) throw DomainError("capital must be nonnegative");
    const auto sys = spec.system();
    Report rep;
    rep.summary = {{"model", sys.model().severity().name()}, {"lambda", fmt(sys.model().lambda())},
                   {"c", fmt(sys.premium())}};
    ReportSection sec{"ruin", {"method", "u", "t", "value", "error"}, {}};

    if (sys.loading_sign() <= 0) {
        rep.summary.emplace_back("loading", "nonpositive: ruin is certain (LoadingError)");
        for (double u : us) sec.rows.push_back({"loading", fmt(u), "inf", "1", "0"});
        rep.sections.push_back(std::move(sec));
        return rep;
    }

    const double u_max = *std::max_element(us.begin(), us.end());
    const auto curve = ruin_panjer(sys, spec.span, u_max, {spec.tail_tol});
    const auto sol = lundberg(sys);
    std::optional<MixtureRuin> mix;
    const auto& v = sys.model().severity().variant();
    if (std::holds_alternative<Exponential>(v) || std::holds_alternative<ExponentialMixture>(v))
        mix = mixture_exact(sys);
    rep.summary.emplace_back("R", fmt(sol.R));
    rep.summary.emplace_back("C", fmt(sol.C));

    for (double u : us) {
        const auto cla = cramer_lundberg_approx(sys, u);
        sec.rows.push_back({"panjer-recursion", fmt(u), "inf", fmt(curve.at(u)), ""});
        sec.rows.push_back({"cramer-lundberg", fmt(u), "inf", fmt(cla.approximation), ""});
        sec.rows.push_back({"lundberg-bound", fmt(u), "inf", fmt(cla.bound), ""});
        if (mix) sec.rows.push_back({"mixture-exact", fmt(u), "inf", fmt(mix->total(u)), ""});
        if (mc) {
            auto plan = base_plan(spec, sys.with_capital(u));
            plan.ruin = true;
            const auto res = simulate(plan);
            sec.rows.push_back(
                {"monte-carlo", fmt(u), fmt(plan.horizon), fmt(res.ruin->value), fmt(res.ruin->std_error)});
        }
    }
    rep.sections.push_back(std::move(sec));
    return rep;
}

Report cmd_ruin_time(const ModelSpec& spec, double u, std::vector<double> ts, std::vector<double> xs) {
    const auto sys = spec.system();
    if (sys.loading_sign() == 0) throw LoadingError("zero safety loading");
    const auto sol = lundberg(sys);
    Report rep;
    rep.summary = {{"model", sys.model().severity().name()}, {"u", fmt(u)}};
    ReportSection lund{"lundberg", {"quantity", "value"}, {}};
    lund.rows.push_back({"R", fmt(sol.R)});
    lund.rows.push_back({"C", fmt(sol.C)});
    lund.rows.push_back({"tbar", fmt(sol.tbar)});
    lund.rows.push_back({"sigma2", fmt(sol.sigma2)});
    if (sys.loading_sign() > 0) {
        const auto clt = ruin_time_clt(sys, u, 0.0);
        lund.rows.push_back({"mean", fmt(clt.mean)});
        lund.rows.push_back({"variance", fmt(clt.variance)});
    }
    ReportSection bounds{"bounds", {"t", "H", "bound", "side"}, {}};
    ts.insert(ts.begin(), sol.tbar);
    for (double t : ts) {
        const auto b = finite_time_bound(sys, u, t);
        bounds.rows.push_back({fmt(t), fmt(b.H), fmt(b.bound), b.side == TimeSide::early ? "early" : "late"});
    }
    rep.sections.push_back(std::move(lund));
    rep.sections.push_back(std::move(bounds));
    if (sys.loading_sign() > 0) {
        if (xs.empty()) xs = {-2.0, -1.0, 0.0, 1.0, 2.0};
        ReportSection clt{"clt", {"x", "probability"}, {}};
        for (double x : xs) clt.rows.push_back({fmt(x), fmt(ruin_time_clt(sys, u, x).probability)});
        rep.sections.push_back(std::move(clt));
    }
    return rep;
}

Report cmd_seal(const ModelSpec& spec, double u, double t, bool mc) {
    const auto sys = spec.system().with_capital(u);
    const double d = spec.span;
    Report rep;
    rep.summary = {{"model", sys.model().severity().name()}, {"span", fmt(d)},
                   {"tau", fmt(spec.tau > 0.0 ? spec.tau : d / sys.premium())}};
    ReportSection sec{"seal", {"method", "u", "t", "value", "error"}, {}};
    sec.rows.push_back({"seal", fmt(u), fmt(t), fmt(seal(sys, t, d, {spec.tau, spec.tail_tol})), ""});
    if (u == 0.0) {
        const auto f = discretize(sys.model().severity(), d, cells_for_tail(sys.model().severity(), d, spec.tail_tol),
                                  {spec.tail_tol, false});
        const auto agg = panjer(sys.model().lambda() * t, f, std::max<std::size_t>(1, floor_cells(sys.premium() * t, d)));
        sec.rows.push_back({"one-minus-rbar", fmt(u), fmt(t), fmt(1.0 - non_ruin_zero(sys, t, agg)), ""});
    }
    if (mc) {
        auto plan = base_plan(spec, sys);
        plan.horizon = t;
        plan.ruin = true;
        const auto res = simulate(plan);
        sec.rows.push_back({"monte-carlo", fmt(u), fmt(t), fmt(res.ruin->value), fmt(res.ruin->std_error)});
    }
    rep.sections.push_back(std::move(sec));
    return rep;
}

Report cmd_portfolio(const Portfolio& pf, std::vector<double> xs) {
    const auto pc = portfolio_to_compound(pf);
    const auto& sev = pc.model.severity();
    const double d = sev.lattice_span();
    Report rep;
    rep.summary = {{"policies", std::to_string(pf.size())}, {"lambda", fmt(pc.model.lambda())},
                   {"sum_p_squared", fmt(pc.sum_p_squared)}, {"degenerate", pc.degenerate ? "yes" : "no"},
                   {"span", fmt(d)}};
    ReportSection atoms{"atoms", {"x", "weight"}, {}};
    for (const auto& [x, w] : pc.atoms) atoms.rows.push_back({fmt(x), fmt(w)});

    double total = 0.0;
    for (const auto& p : pf) total += p.sum_at_risk;
    if (xs.empty()) {
        const std::size_t cells = std::min<std::size_t>(floor_cells(total, d), 50);
        for (std::size_t k = 0; k < cells; ++k) xs.push_back((static_cast<double>(k) + 0.5) * d);
    }
    const auto f = discretize(sev, d, cells_for_tail(sev, d));
    const double x_max = std::max(total, *std::max_element(xs.begin(), xs.end()));
    const auto agg = panjer(pc.model.lambda(), f, floor_cells(x_max, d) + 1);
    const bool exact = pf.size() <= max_exact_policies;
    std::vector<std::pair<double, double>> dist;
    if (exact) dist = portfolio_distribution(pf);

    ReportSection tails{"tails", {"x", "exact", "compound", "difference"}, {}};
    for (double x : xs) {
        const double comp = agg.tail(floor_cells(x, d));
        if (exact) {
            double e = 0.0;
            for (const auto& [v, w] : dist)
                if (v > x) e += w;
            tails.rows.push_back({fmt(x), fmt(e), fmt(comp), fmt(comp - e)});
        } else {
            tails.rows.push_back({fmt(x), "nan", fmt(comp), "nan"});
        }
    }
    rep.sections.push_back(std::move(atoms));
    rep.sections.push_back(std::move(tails));
    return rep;
}

struct SimulateArgs {
    std::optional<double> t, x;
    std::vector<double> ruin_by;
    bool hitting_below = false;
    std::optional<double> conditional_time;
    std::string dump;
};

Report cmd_simulate(const ModelSpec& spec, const SimulateArgs& a) {
    const auto sys = spec.system();
    auto plan = base_plan(spec, sys);
    plan.ruin = true;
    if (a.t.has_value() != a.x.has_value()) throw DomainError("--t and --x go together");
    if (a.t) {
        plan.tail_time = a.t;
        plan.tail_level = *a.x;
    }
    plan.ruin_by = a.ruin_by;
    plan.hitting_below = a.hitting_below;
    plan.conditional_time = a.conditional_time;
    plan.keep_ruin_times = !a.dump.empty();
    const auto res = simulate(plan);

    Report rep;
    ReportSection sec{"estimates", {"estimator", "value", "std_error", "n", "seed"}, {}};
    const std::string seed = std::to_string(res.seed);
    auto row = [&](const std::string& name, const EstimateWithError& e) {
        sec.rows.push_back({name, fmt(e.value), fmt(e.std_error), std::to_string(e.n), seed});
    };
    row("ruin(horizon=" + fmt(plan.horizon) + ")", *res.ruin);
    if (res.horizon_remainder_bound)
        sec.rows.push_back({"ruin_remainder_bound", fmt(*res.horizon_remainder_bound), "0",
                            std::to_string(res.n_paths), seed});
    for (const auto& [s, e] : res.ruin_by) row("ruin_by(t=" + fmt(s) + ")", e);
    if (res.tail) {
        const std::string tx = "(t=" + fmt(*a.t) + ";x=" + fmt(*a.x) + ")";
        row("tail" + tx, *res.tail);
        row("claim_count_mean(t=" + fmt(*a.t) + ")", *res.claim_count_mean);
        row("claim_count_variance(t=" + fmt(*a.t) + ")", *res.claim_count_variance);
    }
    if (res.hitting_below) row("hitting_below", *res.hitting_below);
    if (res.conditional_mean) row("conditional_mean_S(t=" + fmt(*a.conditional_time) + ")", *res.conditional_mean);
    if (res.ruin_time_mean) {
        row("ruin_time_mean", *res.ruin_time_mean);
        sec.rows.push_back({"ruin_time_variance", fmt(*res.ruin_time_variance), "0",
                            std::to_string(res.ruin_time_mean->n), seed});
    }
    if (!a.dump.empty()) {
        std::ofstream dump(a.dump);
        if (!dump) throw ParseError("cannot write " + a.dump);
        for (double t : res.ruin_times) dump << shortest(t) << '\n';
    }
    rep.sections.push_back(std::move(sec));
    return rep;
}

Report cmd_aggregate(const ModelSpec& spec, double t, const std::string& out_path, std::ostream& data_out) {
    if (!(t > 0.0)) throw DomainError("t must be positive");
    const auto model = spec.model();
    const auto cl = claim_lattice(spec);
    const std::size_t n_out = spec.n_out ? *spec.n_out : suggest_n_out(model, t, cl.f.span());
    const auto agg = panjer(model.lambda() * t, cl.f, n_out);
    Report rep;
    if (out_path.empty() || out_path == "-") {
        write_lattice(data_out, agg);
        return rep;
    }
    std::ofstream out(out_path);
    if (!out) throw ParseError("cannot write " + out_path);
    write_lattice(out, agg);
    rep.summary = {{"file", out_path},          {"span", fmt(agg.span())},   {"size", std::to_string(agg.size())},
                   {"mean", fmt(agg.mean())}, {"variance", fmt(agg.variance())}, {"remainder", fmt(agg.remainder())}};
    return rep;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Collective risk theory: aggregate losses, tail approximations and ruin probabilities", "cramer"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string format_name = "table";
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<unsigned> workers;
    std::optional<double> horizon, span;
    std::string model_path;
    app.add_option("--format", format_name, "table, csv or kv")->check(CLI::IsMember({"table", "csv", "kv"}));
    app.add_option("--set", sets, "override a model key: key=value (flag beats file)");
    app.add_option("--seed", seed, "Monte Carlo seed");
    app.add_option("--paths", paths, "Monte Carlo path count");
    app.add_option("--workers", workers, "Monte Carlo worker threads");
    app.add_option("--horizon", horizon, "Monte Carlo horizon");
    app.add_option("--span", span, "money lattice span");

    auto* tail = app.add_subcommand("tail", "tail approximations for P(S(t) >= t x)");
    double tail_t = 0.0, tail_x = 0.0;
    bool tail_mc = false;
    tail->add_option("--model", model_path, "model file")->required();
    tail->add_option("--t", tail_t)->required();
    tail->add_option("--x", tail_x)->required();
    tail->add_flag("--mc", tail_mc, "add a Monte Carlo estimate");

    auto* ruin = app.add_subcommand("ruin", "infinite-horizon ruin probabilities");
    std::vector<double> ruin_u;
    bool ruin_mc = false;
    ruin->add_option("--model", model_path, "model file")->required();
    ruin->add_option("--u", ruin_u, "capital values (comma separated)")->delimiter(',');
    ruin->add_flag("--mc", ruin_mc, "add Monte Carlo rows");

    auto* rt = app.add_subcommand("ruin-time", "Lundberg quantities, finite-time bounds and ruin-time CLT");
    std::optional<double> rt_u;
    std::vector<double> rt_t, rt_x;
    rt->add_option("--model", model_path, "model file")->required();
    rt->add_option("--u", rt_u);
    rt->add_option("--t", rt_t, "time multiples t (ruin by u t)")->delimiter(',');
    rt->add_option("--x", rt_x, "standardized deviations")->delimiter(',');

    auto* sl = app.add_subcommand("seal", "finite-time ruin probability r(u, t)");
    std::optional<double> seal_u;
    double seal_t = 0.0;
    bool seal_mc = false;
    sl->add_option("--model", model_path, "model file")->required();
    sl->add_option("--u", seal_u);
    sl->add_option("--t", seal_t)->required();
    sl->add_flag("--mc", seal_mc, "add a Monte Carlo row");

    auto* pf = app.add_subcommand("portfolio", "individual model and its compound Poisson approximation");
    std::string policy_path;
    std::vector<double> pf_x;
    pf->add_option("--policies", policy_path, "two-column policy file")->required();
    pf->add_option("--x", pf_x, "tail levels")->delimiter(',');

    auto* sim = app.add_subcommand("simulate", "Monte Carlo estimates as CSV rows");
    SimulateArgs sargs;
    sim->add_option("--model", model_path, "model file")->required();
    sim->add_option("--t", sargs.t, "tail time");
    sim->add_option("--x", sargs.x, "tail level per unit time");
    sim->add_option("--ruin-by", sargs.ruin_by, "times for P(T(u) <= s)")->delimiter(',');
    sim->add_flag("--hitting-below", sargs.hitting_below, "estimate P(T(-u) <= horizon)");
    sim->add_option("--conditional-time", sargs.conditional_time, "E[S(t) | ruin]");
    sim->add_option("--dump", sargs.dump, "write ruin times, one per line");

    auto* ag = app.add_subcommand("aggregate", "write the lattice law of S(t)");
    double ag_t = 0.0;
    std::string ag_out;
    ag->add_option("--model", model_path, "model file")->required();
    ag->add_option("--t", ag_t)->required();
    ag->add_option("--out", ag_out, "output file ('-' for stdout)");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, er;
        const int code = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return code == 0 ? 0 : static_cast<int>(ErrorClass::parse);
    }

    const OutputFormat format = format_name == "csv" ? OutputFormat::csv
                                : format_name == "kv" ? OutputFormat::kv
                                                      : OutputFormat::table;
    SpecOverrides overrides;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            err << "error: --set expects key=value, got '" << s << "'\n";
            return static_cast<int>(ErrorClass::parse);
        }
        overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (seed) overrides.emplace_back("mc.seed", std::to_string(*seed));
    if (paths) overrides.emplace_back("mc.paths", std::to_string(*paths));
    if (workers) overrides.emplace_back("mc.workers", std::to_string(*workers));
    if (horizon) overrides.emplace_back("mc.horizon", shortest(*horizon));
    if (span) overrides.emplace_back("span", shortest(*span));

    std::ostringstream buf;
    try {
        Report rep;
        if (*pf) {
            std::ifstream in(policy_path);
            if (!in) throw ParseError("cannot open policy file " + policy_path);
            std::stringstream ss;
            ss << in.rdbuf();
            rep = cmd_portfolio(parse_portfolio(ss.str()), pf_x);
        } else {
            const auto spec = load_model_spec(model_path, overrides);
            if (*tail) rep = cmd_tail(spec, tail_t, tail_x, tail_mc);
            if (*ruin) rep = cmd_ruin(spec, ruin_u, ruin_mc);
            if (*rt) rep = cmd_ruin_time(spec, rt_u.value_or(spec.u), rt_t, rt_x);
            if (*sl) rep = cmd_seal(spec, seal_u.value_or(spec.u), seal_t, seal_mc);
            if (*sim) rep = cmd_simulate(spec, sargs);
            if (*ag) rep = cmd_aggregate(spec, ag_t, ag_out, buf);
        }
        render(buf, rep, format);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    out << buf.str();
    return 0;
}

}  // namespace cramer
