#include "blowup/cli.hpp"

#include "blowup/analysis.hpp"
#include "blowup/cgw.hpp"
#include "blowup/error.hpp"
#include "blowup/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

namespace blowup::cli {

namespace {

struct Flags {
    std::optional<std::string> f, domain, a, center, out, format, in, profile;
    std::optional<int> n, levels, rays, res, samples, strata;
    std::optional<double> p, eps, ratio, tol, lo, hi, R, A, B, h, horizon, L, zero_tol;
    std::optional<std::uint64_t> seed;
    bool forward_only = false;
};

struct Output {
    std::ostringstream text;
    int code = kExitOk;

    void flag(const DivergenceDiagnosis& d) {
        if (d.classification == Classification::Inconclusive) code = kExitInconclusive;
    }
};

using Handler = std::function<void(const Flags&, Output&)>;

// ---------------------------------------------------------------------------
// Flag helpers

template <class T>
const T& need(const std::optional<T>& v, const char* flag) {
    if (!v) throw PreconditionError(std::string("missing required flag --") + flag);
    return *v;
}

std::vector<double> parse_point(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw PreconditionError(std::string("--") + flag + ": bad coordinate '" + cell + "'");
        }
    }
    if (out.empty()) throw PreconditionError(std::string("--") + flag + " is empty");
    return out;
}

int dimension(const Flags& fl) {
    const int n = need(fl.n, "n");
    if (n < 1) throw PreconditionError("--n must be at least 1");
    return n;
}

ScalarField field(const Flags& fl, int n) { return ScalarField::from_source(need(fl.f, "f"), n); }

Domain domain(const Flags& fl, int n) {
    Domain d = Domain::parse(need(fl.domain, "domain"));
    if (d.dimension() != n) throw PreconditionError("--domain dimension does not match --n");
    return d;
}

ExcisionFamily family(const Flags& fl, double eps0, double ratio, int levels) {
    ExcisionFamily fam{fl.eps.value_or(eps0), fl.ratio.value_or(ratio), fl.levels.value_or(levels)};
    fam.validate();
    return fam;
}

QuadOptions quad(const Flags& fl) {
    QuadOptions q;
    if (fl.zero_tol) q.zero_tol = *fl.zero_tol;
    return q;
}

bool csv_format(const Flags& fl, const char* fallback) {
    const std::string f = fl.format.value_or(fallback);
    if (f != "csv" && f != "report") throw PreconditionError("--format must be csv or report");
    return f == "csv";
}

std::string num(double v) { return format_double(v); }

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_integrate(const Flags& fl, Output& o) {
    const int n = dimension(fl);
    const auto series = excision_series(field(fl, n), domain(fl, n), need(fl.p, "p"), family(fl, 1e-2, 0.1, 5), quad(fl));
    if (csv_format(fl, "csv")) {
        write_series_csv(o.text, series);
        return;
    }
    const auto d = diagnose(series);
    write_diagnosis_report(o.text, d);
    o.text << "levels=" << series.points.size() << "\n";
    o.text << "last_value=" << num(series.points.back().value) << "\n";
    o.flag(d);
}

void cmd_diagnose(const Flags& fl, Output& o) {
    IntegralSeries series;
    if (fl.in) {
        std::ifstream file(*fl.in);
        if (!file) throw PreconditionError("cannot open input file '" + *fl.in + "'");
        series = read_series_csv(file);
    } else {
        const int n = dimension(fl);
        series = excision_series(field(fl, n), domain(fl, n), need(fl.p, "p"), family(fl, 1e-2, 0.1, 5), quad(fl));
    }
    const auto d = diagnose(series);
    o.flag(d);
    if (csv_format(fl, "report")) {
        o.text << "# classification=" << to_string(d.classification) << "\n";
        write_series_csv(o.text, series);
        return;
    }
    write_diagnosis_report(o.text, d);
}

void cmd_critical_p(const Flags& fl, Output& o) {
    const int n = dimension(fl);
    CriticalExponentOptions opts;
    opts.family = family(fl, 1e-2, 0.1, 7);
    opts.quad = quad(fl);
    const auto r = critical_exponent(field(fl, n), domain(fl, n), fl.lo.value_or(0.5), fl.hi.value_or(static_cast<double>(n) + 1.0),
                                     fl.tol.value_or(0.05), opts);
    std::size_t inconclusive = 0;
    for (const auto& [p, d] : r.probes) {
        if (d.classification == Classification::Inconclusive) ++inconclusive;
    }
    if (inconclusive > 0) o.code = kExitInconclusive;
    if (csv_format(fl, "report")) {
        o.text << "p,classification,a,b,gamma,growth_exponent\n";
        for (const auto& [p, d] : r.probes) {
            o.text << num(p) << ',' << to_string(d.classification) << ',' << num(d.a) << ',' << num(d.b) << ','
                   << num(d.gamma) << ',' << num(d.growth_exponent) << '\n';
        }
        return;
    }
    o.text << "p_star=" << num(r.p_star) << "\n";
    o.text << "lo=" << num(r.lo) << "\n";
    o.text << "hi=" << num(r.hi) << "\n";
    o.text << "probes=" << r.probes.size() << "\n";
    o.text << "inconclusive_probes=" << inconclusive << "\n";
    for (std::size_t k = 0; k < r.probes.size(); ++k) {
        o.text << "probe" << k << ".p=" << num(r.probes[k].first) << "\n";
        o.text << "probe" << k << ".classification=" << to_string(r.probes[k].second.classification) << "\n";
    }
}

void cmd_sobolev(const Flags& fl, Output& o) {
    const int n = dimension(fl);
    std::optional<std::vector<double>> a;
    if (fl.a) a = parse_point(*fl.a, "a");
    SobolevOptions opts;
    opts.quad = quad(fl);
    if (fl.res) opts.probe_resolution = *fl.res;
    const auto r = sobolev_check(field(fl, n), a, need(fl.p, "p"), domain(fl, n), family(fl, 1e-2, 0.1, 5), opts);
    o.flag(r.log_diagnosis);
    o.flag(r.grad_diagnosis);
    if (r.verdict == Verdict::Inconclusive) o.code = kExitInconclusive;
    if (csv_format(fl, "report")) {
        o.text << "eps,log_value,log_err,grad_value,grad_err,converged\n";
        for (std::size_t k = 0; k < r.log_series.points.size(); ++k) {
            const auto& l = r.log_series.points[k];
            const auto& g = r.grad_series.points[k];
            o.text << num(l.eps) << ',' << num(l.value) << ',' << num(l.err) << ',' << num(g.value) << ','
                   << num(g.err) << ',' << ((l.converged && g.converged) ? 1 : 0) << '\n';
        }
        return;
    }
    o.text << "verdict=" << to_string(r.verdict) << "\n";
    o.text << "p=" << num(r.p) << "\n";
    o.text << "log_norm=" << num(r.log_norm) << "\n";
    o.text << "cauchy_tail_log=" << num(cauchy_tail(r.log_series)) << "\n";
    o.text << "cauchy_tail_grad=" << num(cauchy_tail(r.grad_series)) << "\n";
    o.text << "probe_resolution=" << r.probe_resolution << "\n";
    o.text << "zero_cells=" << r.zero_cells << "\n";
    write_diagnosis_report(o.text, r.log_diagnosis, "log.");
    write_diagnosis_report(o.text, r.grad_diagnosis, "grad.");
}

void cmd_rays(const Flags& fl, Output& o) {
    const int n = dimension(fl);
    const auto x0 = parse_point(need(fl.center, "center"), "center");
    RaySurveyOptions opts;
    opts.seed = fl.seed.value_or(42);
    opts.quad = quad(fl);
    const auto r = ray_survey(field(fl, n), domain(fl, n), x0, fl.rays.value_or(64), fl.p.value_or(n),
                              family(fl, 1e-2, 0.1, 5), opts);
    for (const auto& d : r.diagnoses) o.flag(d);
    if (csv_format(fl, "csv")) {
        o.text << "ray";
        for (int i = 1; i <= n; ++i) o.text << ",w" << i;
        o.text << ",classification,a,b,last_value\n";
        for (std::size_t k = 0; k < r.directions.size(); ++k) {
            o.text << k;
            for (double w : r.directions[k]) o.text << ',' << num(w);
            const auto& d = r.diagnoses[k];
            o.text << ',' << to_string(d.classification) << ',' << num(d.a) << ',' << num(d.b) << ','
                   << num(r.series[k].points.back().value) << '\n';
        }
        return;
    }
    o.text << "divergent=" << r.divergent_count() << "\n";
    o.text << "rays=" << r.directions.size() << "\n";
    o.text << "divergent_fraction=" << num(r.divergent_fraction()) << "\n";
    o.text << "radius=" << num(r.radius) << "\n";
    for (std::size_t k = 0; k < r.diagnoses.size(); ++k) {
        o.text << "ray" << k << ".classification=" << to_string(r.diagnoses[k].classification) << "\n";
    }
}

void cmd_lemma21(const Flags& fl, Output& o) {
    if (fl.n && *fl.n != 1) throw PreconditionError("lemma21 works with functions of one variable (--n 1)");
    const auto phi = field(fl, 1);
    const auto r = minimal_multiplier(phi, need(fl.p, "p"), family(fl, 1e-2, 0.1, 5), quad(fl),
                                      fl.zero_tol.value_or(1e-12));
    o.flag(r.diagnosis);
    if (csv_format(fl, "report")) {
        write_series_csv(o.text, r.series);
        return;
    }
    write_diagnosis_report(o.text, r.diagnosis);
    o.text << "p=" << num(r.p) << "\n";
}

void cmd_ode_unique(const Flags& fl, Output& o) {
    if (fl.n && *fl.n != 1) throw PreconditionError("ode-unique works with V of one variable (--n 1)");
    const auto v = field(fl, 1);
    double x0 = 0.0;
    if (fl.center) {
        const auto c = parse_point(*fl.center, "center");
        if (c.size() != 1) throw PreconditionError("--center must be a single number for ode-unique");
        x0 = c[0];
    }
    OdeOptions opts;
    opts.n = fl.p.value_or(1.0);
    opts.backward = !fl.forward_only;
    opts.cutoffs = family(fl, 1e-2, 0.1, 6);
    opts.quad = quad(fl);
    const auto r = ode_uniqueness_sim(v, x0, fl.h.value_or(1e-3), fl.horizon.value_or(1.0), opts);
    o.flag(r.lloc_diagnosis);
    if (csv_format(fl, "report")) {
        write_series_csv(o.text, r.lloc_series);
        return;
    }
    o.text << "sup_abs_f=" << num(r.sup_abs_f) << "\n";
    o.text << "steps=" << r.steps << "\n";
    o.text << "v_in_lloc=" << (r.v_in_lloc ? "true" : "false") << "\n";
    o.text << "seed=" << num(r.seed) << "\n";
    o.text << "seeded_endpoint=" << num(r.seeded_endpoint) << "\n";
    write_diagnosis_report(o.text, r.lloc_diagnosis, "lloc.");
}

void cmd_lemma22(const Flags& fl, Output& o) {
    const int n = dimension(fl);
    std::vector<double> x0(static_cast<std::size_t>(n), 0.0);
    if (fl.center) x0 = parse_point(*fl.center, "center");
    if (static_cast<int>(x0.size()) != n) throw PreconditionError("--center dimension does not match --n");
    const auto steps = family(fl, 1e-1, 0.1, 5).levels_list();
    const auto norms = squared_gradient_at_zero(field(fl, n), x0, steps, fl.zero_tol.value_or(1e-12));
    double worst = 0.0;
    for (const auto& g : norms) worst = std::max(worst, g.norm / g.h);
    if (csv_format(fl, "csv")) {
        o.text << "h,norm,norm_over_h\n";
        for (const auto& g : norms) o.text << num(g.h) << ',' << num(g.norm) << ',' << num(g.norm / g.h) << '\n';
        return;
    }
    const auto order = observed_order(norms);
    o.text << "max_norm_over_h=" << num(worst) << "\n";
    o.text << "observed_order=" << (order ? num(*order) : std::string("none")) << "\n";
    for (std::size_t k = 0; k < norms.size(); ++k) {
        o.text << "h" << k << "=" << num(norms[k].h) << "\n";
        o.text << "norm" << k << "=" << num(norms[k].norm) << "\n";
    }
}

void cmd_bbm(const Flags& fl, Output& o) {
    const int n = dimension(fl);
    const auto f = field(fl, n);
    const auto dom = domain(fl, n);
    std::vector<double> hs;
    if (fl.h) {
        hs.push_back(*fl.h);
    } else {
        hs = family(fl, 0.125, 0.5, 5).levels_list();
    }
    BbmOptions opts;
    opts.seed = fl.seed.value_or(42);
    if (fl.strata) opts.strata_per_axis = *fl.strata;
    std::vector<BbmResult> results;
    for (double h : hs) results.push_back(bbm_estimate(f, dom, h, opts));
    if (csv_format(fl, "csv")) {
        o.text << "h,value,std_error,strata_per_axis,samples\n";
        for (std::size_t k = 0; k < hs.size(); ++k) {
            const auto& r = results[k];
            o.text << num(hs[k]) << ',' << num(r.value) << ',' << num(r.std_error) << ',' << r.strata_per_axis << ','
                   << r.samples << '\n';
        }
        return;
    }
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t k = 0; k < hs.size(); ++k) {
        x.push_back(std::log(1.0 / hs[k]));
        y.push_back(results[k].value);
    }
    o.text << "slope_vs_log_inv_h=" << num(hs.size() > 1 ? log_slope(x, y) : 0.0) << "\n";
    for (std::size_t k = 0; k < hs.size(); ++k) {
        o.text << "h" << k << "=" << num(hs[k]) << "\n";
        o.text << "value" << k << "=" << num(results[k].value) << "\n";
        o.text << "std_error" << k << "=" << num(results[k].std_error) << "\n";
    }
}

void cmd_cgw(const Flags& fl, Output& o) {
    std::optional<RadialProfile> loaded;
    if (fl.in) {
        std::ifstream file(*fl.in);
        if (!file) throw PreconditionError("cannot open input file '" + *fl.in + "'");
        loaded = read_profile_csv(file);
    }
    const RadialProfile profile =
        loaded ? *loaded
               : construct_profile(fl.n.value_or(3), fl.R.value_or(1.0), fl.A.value_or(1.0), need(fl.B, "B"),
                                   need(fl.eps, "eps"));
    const auto v = verify_profile(profile);

    if (fl.profile) {
        std::ostringstream csv;
        write_profile_csv(csv, profile, fl.samples.value_or(4001));
        emit(csv.str(), *fl.profile, o.text);
    }
    if (csv_format(fl, "csv")) {
        for (const auto& c : v.checks) {
            o.text << "# check: " << c.name << " value=" << num(c.value) << " bound=" << num(c.bound)
                   << (c.passed ? " pass" : " fail") << "\n";
        }
        for (const auto& note : profile.notes()) o.text << "# note: " << note << "\n";
        write_profile_csv(o.text, profile, fl.samples.value_or(4001));
        return;
    }
    o.text << "all_passed=" << (v.all_passed() ? "true" : "false") << "\n";
    o.text << "n=" << profile.n() << "\n";
    o.text << "delta=" << num(profile.delta()) << "\n";
    o.text << "width=" << num(profile.width()) << "\n";
    o.text << "total_integral=" << num(v.total_integral) << "\n";
    o.text << "closed_form=" << num(v.closed_form) << "\n";
    for (std::size_t i = 0; i < v.per_coordinate.size(); ++i) {
        o.text << "coordinate" << i + 1 << "_integral=" << num(v.per_coordinate[i]) << "\n";
    }
    for (const auto& c : v.checks) {
        o.text << "check." << c.name << "=" << (c.passed ? "pass" : "fail") << "\n";
        o.text << "check." << c.name << ".value=" << num(c.value) << "\n";
    }
    for (std::size_t k = 0; k < profile.notes().size(); ++k) o.text << "note" << k << "=" << profile.notes()[k] << "\n";
}

void cmd_extend(const Flags& fl, Output& o) {
    std::ifstream file(need(fl.in, "in"));
    if (!file) throw PreconditionError("cannot open input file '" + *fl.in + "'");
    auto samples = read_samples_csv(file);
    const int n = static_cast<int>(samples.front().point.size());
    if (fl.n && *fl.n != n) throw PreconditionError("--n does not match the sample dimension");
    const double lip = need(fl.L, "L");
    const auto ext = mcshane_extend(samples, lip);
    const auto dom = domain(fl, n);
    const int res = fl.res.value_or(11);
    if (res < 2) throw PreconditionError("--res must be at least 2");

    if (csv_format(fl, "csv")) {
        for (int i = 1; i <= n; ++i) o.text << 'x' << i << ',';
        o.text << "value\n";
        const Box bb = dom.bounding_box();
        std::vector<int> idx(static_cast<std::size_t>(n), 0);
        std::vector<double> x(static_cast<std::size_t>(n));
        while (true) {
            for (int i = 0; i < n; ++i) x[i] = bb.lo[i] + (bb.hi[i] - bb.lo[i]) * idx[i] / (res - 1);
            if (dom.contains(x)) {
                for (double c : x) o.text << num(c) << ',';
                o.text << num(ext.value(x)) << '\n';
            }
            int axis = 0;
            while (axis < n && ++idx[axis] == res) idx[axis++] = 0;
            if (axis == n) break;
        }
        return;
    }
    double worst = 0.0;
    for (const auto& s : samples) worst = std::max(worst, std::fabs(ext.value(s.point) - s.value));
    o.text << "samples=" << samples.size() << "\n";
    o.text << "L=" << num(lip) << "\n";
    o.text << "max_sample_error=" << num(worst) << "\n";
    o.text << "grid_lipschitz_estimate=" << num(grid_lipschitz_estimate(ext, dom, res)) << "\n";
}

// ---------------------------------------------------------------------------

struct Command {
    const char* name;
    const char* help;
    std::vector<std::string> flags;
    Handler handler;
};

std::vector<Command> commands() {
    return {
        {"integrate", "excised integrals of V^p over a shrinking family", {"f", "n", "domain", "p", "eps", "levels", "ratio", "zero-tol"}, cmd_integrate},
        {"diagnose", "classify a series (from --in or computed)", {"in", "f", "n", "domain", "p", "eps", "levels", "ratio", "zero-tol"}, cmd_diagnose},
        {"critical-p", "bisect for the critical integrability exponent", {"f", "n", "domain", "lo", "hi", "tol", "eps", "levels", "ratio", "zero-tol"}, cmd_critical_p},
        {"sobolev", "W^{1,p} membership of log|f - f(a)|", {"f", "n", "domain", "p", "a", "eps", "levels", "ratio", "res", "zero-tol"}, cmd_sobolev},
        {"rays", "ray integrals of V^p on directions around a center", {"f", "n", "domain", "center", "rays", "p", "seed", "eps", "levels", "ratio", "zero-tol"}, cmd_rays},
        {"lemma21", "integrability of the minimal multiplier of phi", {"f", "n", "p", "eps", "levels", "ratio", "zero-tol"}, cmd_lemma21},
        {"ode-unique", "RK4 for f' = V f from f(x0) = 0", {"f", "n", "center", "h", "horizon", "p", "forward-only", "eps", "levels", "ratio"}, cmd_ode_unique},
        {"lemma22", "gradient norms of f^2 at a zero of f", {"f", "n", "center", "eps", "levels", "ratio", "zero-tol"}, cmd_lemma22},
        {"bbm", "stratified estimate of the BBM double integral", {"f", "n", "domain", "h", "seed", "strata", "eps", "levels", "ratio"}, cmd_bbm},
        {"cgw", "construct and verify a radial profile", {"n", "R", "A", "B", "eps", "in", "profile", "samples"}, cmd_cgw},
        {"extend", "McShane extension of Lipschitz samples", {"in", "L", "n", "domain", "res"}, cmd_extend},
    };
}

void add_flag(CLI::App* sub, Flags& fl, const std::string& name) {
    const std::string opt = "--" + name;
    if (name == "f") sub->add_option(opt, fl.f, "expression");
    else if (name == "n") sub->add_option(opt, fl.n, "dimension");
    else if (name == "domain") sub->add_option(opt, fl.domain, "box:lo..:hi.. or ball:c..:r");
    else if (name == "p") sub->add_option(opt, fl.p, "exponent");
    else if (name == "eps") sub->add_option(opt, fl.eps, "first level");
    else if (name == "levels") sub->add_option(opt, fl.levels, "number of levels");
    else if (name == "ratio") sub->add_option(opt, fl.ratio, "level ratio in (0,1)");
    else if (name == "a") sub->add_option(opt, fl.a, "point a1,..,an");
    else if (name == "center") sub->add_option(opt, fl.center, "point c1,..,cn");
    else if (name == "rays") sub->add_option(opt, fl.rays, "number of directions");
    else if (name == "seed") sub->add_option(opt, fl.seed, "random seed (default 42)");
    else if (name == "tol") sub->add_option(opt, fl.tol, "bracket tolerance");
    else if (name == "lo") sub->add_option(opt, fl.lo, "lower exponent");
    else if (name == "hi") sub->add_option(opt, fl.hi, "upper exponent");
    else if (name == "R") sub->add_option(opt, fl.R, "outer radius");
    else if (name == "A") sub->add_option(opt, fl.A, "outer value");
    else if (name == "B") sub->add_option(opt, fl.B, "inner value");
    else if (name == "h") sub->add_option(opt, fl.h, "step or cutoff");
    else if (name == "horizon") sub->add_option(opt, fl.horizon, "integration horizon");
    else if (name == "L") sub->add_option(opt, fl.L, "Lipschitz constant");
    else if (name == "in") sub->add_option(opt, fl.in, "input file");
    else if (name == "profile") sub->add_option(opt, fl.profile, "also write the profile CSV here");
    else if (name == "samples") sub->add_option(opt, fl.samples, "profile CSV rows");
    else if (name == "res") sub->add_option(opt, fl.res, "grid points per axis");
    else if (name == "strata") sub->add_option(opt, fl.strata, "strata per axis");
    else if (name == "zero-tol") sub->add_option(opt, fl.zero_tol, "zero tolerance of the quotient");
    else if (name == "forward-only") sub->add_flag(opt, fl.forward_only, "skip the backward half");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Numerical experiments on integrability of |grad f| / |f|", std::string(kToolName)};
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1, 1);

    Flags fl;
    const auto cmds = commands();
    for (const auto& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        for (const auto& name : c.flags) add_flag(sub, fl, name);
        sub->add_option("--out", fl.out, "output path (default stdout)");
        sub->add_option("--format", fl.format, "csv or report");
    }

    std::vector<std::string> argv_store{std::string(kToolName)};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolName << ' ' << kToolVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kExitInputError;
    }

    CLI::App* sub = app.get_subcommands().front();
    RunConfig config;
    config.command = sub->get_name();
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->count() == 0 || opt->get_name() == "--help") continue;
        std::string value;
        for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
        config.flags[opt->get_single_name()] = value;
    }

    const auto it = std::find_if(cmds.begin(), cmds.end(), [&](const Command& c) { return config.command == c.name; });
    try {
        Output o;
        write_header(o.text, config);
        it->handler(fl, o);
        emit(o.text.str(), fl.out.value_or(""), out);
        return o.code;
    } catch (const InconclusiveError& e) {
        err << "inconclusive: " << e.what() << "\n";
        return kExitInconclusive;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}

} // namespace blowup::cli
