#include "blowup/analysis.hpp"

#include "blowup/error.hpp"
#include "blowup/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace blowup {

namespace {

double vector_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Distance from an interior point to the boundary of the domain.
double inner_radius(const Domain& domain, std::span<const double> x) {
    if (domain.is_box()) {
        const Box& b = domain.box();
        double r = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < x.size(); ++i) r = std::min({r, x[i] - b.lo[i], b.hi[i] - x[i]});
        return r;
    }
    const Ball& b = domain.ball();
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - b.center[i]) * (x[i] - b.center[i]);
    return b.radius - std::sqrt(d2);
}

/// Series of the integral of g over [c_k, top] for decreasing cutoffs c_k,
/// accumulated from disjoint pieces so the values are monotone by construction.
IntegralSeries cutoff_series(const std::function<double(double)>& g, const ExcisionFamily& cutoffs, double top,
                             const CubatureOptions& options) {
    IntegralSeries series;
    double upper = top;
    double total = 0.0;
    double total_err = 0.0;
    bool converged = true;
    for (double c : cutoffs.levels_list()) {
        if (!(c < top)) throw PreconditionError("cutoffs must lie below the upper limit " + format_double(top));
        const auto piece = integrate_interval(g, c, upper, options);
        total += piece.value;
        total_err += piece.err;
        converged = converged && piece.converged;
        series.points.push_back(SeriesPoint{c, total, total_err, converged});
        upper = c;
    }
    return series;
}

bool is_divergent_probe(const DivergenceDiagnosis& d) {
    if (is_divergent(d.classification)) return true;
    if (d.classification == Classification::Convergent) return false;
    return d.growth_exponent >= 0.0;
}

} // namespace

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Member: return "member";
    case Verdict::NonMember: return "non-member";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

double cauchy_tail(const IntegralSeries& series) {
    const auto& pts = series.points;
    if (pts.size() < 2) return std::numeric_limits<double>::infinity();
    const double last = pts.back().value;
    const double prev = pts[pts.size() - 2].value;
    const double diff = std::fabs(last - prev);
    if (diff == 0.0) return 0.0;
    return diff / std::fabs(last);
}

// ---------------------------------------------------------------------------

SobolevReport sobolev_check(const ScalarField& f, std::optional<std::vector<double>> a, double p, const Domain& domain,
                            const ExcisionFamily& family, const SobolevOptions& options) {
    if (!(p >= 1.0)) throw PreconditionError("Sobolev exponent must be at least 1");
    if (f.dimension() != domain.dimension()) throw PreconditionError("field and domain dimensions differ");
    if (a) {
        if (static_cast<int>(a->size()) != domain.dimension()) throw PreconditionError("point a has wrong dimension");
        if (!domain.contains(*a, 1e-12)) throw PreconditionError("point a must lie in the closure of the domain");
    }
    const ScalarField g = a ? shift_field(f, *a) : f;

    SobolevReport report;
    report.p = p;
    report.a = a;

    Integrand log_power = [&g, p](std::span<const double> x) {
        return std::pow(std::fabs(std::log(std::fabs(g.value(x)))), p);
    };
    report.log_series = excised_series_of(log_power, g, domain, family, options.quad);
    report.log_diagnosis = diagnose(report.log_series);
    report.grad_series = excision_series(g, domain, p, family, options.quad);
    report.grad_diagnosis = diagnose(report.grad_series);

    const auto& ld = report.log_diagnosis;
    if (is_divergent(ld.classification)) {
        report.log_norm = std::numeric_limits<double>::infinity();
    } else if (ld.classification == Classification::Convergent) {
        report.log_norm = std::pow(std::max(ld.a, 0.0), 1.0 / p);
    } else {
        report.log_norm = std::pow(report.log_series.points.back().value, 1.0 / p);
    }

    const bool any_divergent =
        is_divergent(report.log_diagnosis.classification) || is_divergent(report.grad_diagnosis.classification);
    const bool both_settled = report.log_diagnosis.classification == Classification::Convergent &&
                              report.grad_diagnosis.classification == Classification::Convergent &&
                              cauchy_tail(report.log_series) < kCauchyTailTolerance &&
                              cauchy_tail(report.grad_series) < kCauchyTailTolerance;
    report.verdict = any_divergent ? Verdict::NonMember : (both_settled ? Verdict::Member : Verdict::Inconclusive);

    report.probe_resolution = options.probe_resolution;
    report.zero_cells = zero_set_probe(g, domain, options.probe_resolution).cells.size();
    return report;
}

// ---------------------------------------------------------------------------

CriticalExponentResult critical_exponent(const ScalarField& f, const Domain& domain, double p_lo, double p_hi,
                                         double tol, const CriticalExponentOptions& options) {
    if (!(p_lo > 0.0 && p_lo < p_hi)) throw PreconditionError("critical exponent needs 0 < p_lo < p_hi");
    if (!(tol > 0.0)) throw PreconditionError("critical exponent tolerance must be positive");

    CriticalExponentResult result;
    auto probe = [&](double p) {
        const auto series = excision_series(f, domain, p, options.family, options.quad);
        const auto d = diagnose(series);
        result.probes.emplace_back(p, d);
        return d;
    };

    const auto at_lo = probe(p_lo);
    if (at_lo.classification != Classification::Convergent) {
        throw PreconditionError("integral is " + to_string(at_lo.classification) + " at p_lo = " +
                                format_double(p_lo) + "; lower p_lo to widen the bracket");
    }
    const auto at_hi = probe(p_hi);
    if (!is_divergent(at_hi.classification)) {
        throw PreconditionError("integral is " + to_string(at_hi.classification) + " at p_hi = " +
                                format_double(p_hi) + "; raise p_hi to widen the bracket");
    }

    double lo = p_lo;
    double hi = p_hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (is_divergent_probe(probe(mid))) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    result.lo = lo;
    result.hi = hi;
    result.p_star = 0.5 * (lo + hi);
    return result;
}

// ---------------------------------------------------------------------------

CubatureResult ray_integral(const ScalarField& f, const Domain& domain, std::span<const double> x0,
                            std::span<const double> direction, double p, double rho, double radius,
                            const QuadOptions& options) {
    const int n = f.dimension();
    if (static_cast<int>(x0.size()) != n || static_cast<int>(direction.size()) != n || domain.dimension() != n) {
        throw PreconditionError("ray arguments have inconsistent dimensions");
    }
    if (std::fabs(vector_norm(direction) - 1.0) > 1e-12) throw PreconditionError("ray direction must be a unit vector");
    if (!(rho >= 0.0 && rho < radius)) throw PreconditionError("ray cutoff must satisfy 0 <= rho < radius");

    std::vector<double> end(x0.begin(), x0.end());
    for (int i = 0; i < n; ++i) end[i] += radius * direction[i];
    std::vector<double> start(x0.begin(), x0.end());
    for (int i = 0; i < n; ++i) start[i] += rho * direction[i];
    if (!domain.contains(start, 1e-12) || !domain.contains(end, 1e-12)) {
        throw PreconditionError("ray segment leaves the domain");
    }

    std::vector<double> x(static_cast<std::size_t>(n));
    auto g = [&](double r) {
        for (int i = 0; i < n; ++i) x[i] = x0[i] + r * direction[i];
        return std::pow(quotient_V(f, x, options.zero_tol), p) * std::pow(r, n - 1);
    };
    return integrate_interval(g, rho, radius, options.cubature);
}

std::size_t RayReport::divergent_count() const {
    return static_cast<std::size_t>(std::count_if(diagnoses.begin(), diagnoses.end(), [](const DivergenceDiagnosis& d) {
        return is_divergent(d.classification);
    }));
}

double RayReport::divergent_fraction() const {
    return diagnoses.empty() ? 0.0 : static_cast<double>(divergent_count()) / static_cast<double>(diagnoses.size());
}

RayReport ray_survey(const ScalarField& f, const Domain& domain, std::span<const double> x0, int directions, double p,
                     const ExcisionFamily& cutoffs, const RaySurveyOptions& options) {
    const int n = f.dimension();
    if (static_cast<int>(x0.size()) != n || domain.dimension() != n) {
        throw PreconditionError("ray survey arguments have inconsistent dimensions");
    }
    const double room = inner_radius(domain, x0);
    if (!(room > 0.0)) throw PreconditionError("ray survey center must be an interior point");

    RayReport report;
    report.center.assign(x0.begin(), x0.end());
    report.radius = std::min(1.0, room);
    report.directions = sphere_directions(n, directions, options.seed);

    const ScalarField unit = affine_pullback(f, x0, report.radius);
    const double zero_tol = options.quad.zero_tol;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (const auto& w : report.directions) {
        auto g = [&](double r) {
            for (int i = 0; i < n; ++i) x[i] = r * w[i];
            return std::pow(quotient_V(unit, x, zero_tol), p) * std::pow(r, n - 1);
        };
        report.series.push_back(cutoff_series(g, cutoffs, 1.0, options.quad.cubature));
        report.diagnoses.push_back(diagnose(report.series.back()));
    }
    return report;
}

// ---------------------------------------------------------------------------

double multiplier(const ScalarField& phi, double x, double p) {
    double d = 0.0;
    const double pt[1] = {x};
    const double v = phi.value_grad(pt, std::span<double>(&d, 1));
    if (v == 0.0) return 0.0;
    return std::fabs(d) / (std::fabs(v) * std::pow(x, (1.0 - p) / p));
}

MultiplierReport minimal_multiplier(const ScalarField& phi, double p, const ExcisionFamily& cutoffs,
                                    const QuadOptions& options, double zero_tol) {
    if (phi.dimension() != 1) throw PreconditionError("multiplier test needs a function of one variable");
    if (!(p >= 1.0)) throw PreconditionError("multiplier exponent must be at least 1");
    const double origin[1] = {0.0};
    const double at_zero = phi.value(origin);
    if (std::fabs(at_zero) > zero_tol) {
        throw PreconditionError("phi(0) = " + format_double(at_zero) + " is not zero");
    }
    MultiplierReport report;
    report.p = p;
    auto g = [&](double x) { return std::pow(multiplier(phi, x, p), p); };
    report.series = cutoff_series(g, cutoffs, 1.0, options.cubature);
    report.diagnosis = diagnose(report.series);
    return report;
}

// ---------------------------------------------------------------------------

OdeReport ode_uniqueness_sim(const ScalarField& v, double x0, double step, double horizon, const OdeOptions& options) {
    if (v.dimension() != 1) throw PreconditionError("ODE coefficient must be a function of one variable");
    if (!(step > 0.0 && horizon > step)) throw PreconditionError("ODE needs 0 < step < horizon");

    auto value = [&v](double x) {
        const double pt[1] = {x};
        return v.value(pt);
    };

    // V >= 0 on a sample grid; points where V is undefined are skipped.
    constexpr int kCheck = 1000;
    for (int k = 0; k <= kCheck; ++k) {
        const double x = x0 - (options.backward ? horizon : 0.0) +
                         (options.backward ? 2.0 : 1.0) * horizon * k / kCheck;
        if (x == x0) continue;
        try {
            if (value(x) < 0.0) {
                throw PreconditionError("V is negative at x = " + format_double(x));
            }
        } catch (const DomainError&) {
        }
    }

    // V is only evaluated where f != 0; the equation is homogeneous.
    auto rhs = [&](double x, double f) { return f == 0.0 ? 0.0 : value(x) * f; };
    auto rk4 = [&](double x, double f, double dx) {
        const double k1 = rhs(x, f);
        const double k2 = rhs(x + 0.5 * dx, f + 0.5 * dx * k1);
        const double k3 = rhs(x + 0.5 * dx, f + 0.5 * dx * k2);
        const double k4 = rhs(x + dx, f + dx * k3);
        return f + dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };

    OdeReport report;
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / step));
    for (int side : {1, -1}) {
        if (side == -1 && !options.backward) break;
        double f = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            const double x = x0 + side * step * static_cast<double>(k);
            const double dx = side * std::min(step, horizon - step * static_cast<double>(k));
            f = rk4(x, f, dx);
            report.sup_abs_f = std::max(report.sup_abs_f, std::fabs(f));
            ++report.steps;
        }
    }

    // Local integrability of V^n on {rho < |x - x0| < horizon}.
    const double n = options.n;
    auto vn_right = [&](double r) { return std::pow(value(x0 + r), n); };
    auto vn_left = [&](double r) { return std::pow(value(x0 - r), n); };
    report.lloc_series = cutoff_series(vn_right, options.cutoffs, horizon, options.quad.cubature);
    if (options.backward) {
        const auto left = cutoff_series(vn_left, options.cutoffs, horizon, options.quad.cubature);
        for (std::size_t k = 0; k < left.points.size(); ++k) {
            auto& pt = report.lloc_series.points[k];
            pt.value += left.points[k].value;
            pt.err += left.points[k].err;
            pt.converged = pt.converged && left.points[k].converged;
        }
    }
    report.lloc_diagnosis = diagnose(report.lloc_series);
    report.v_in_lloc = report.lloc_diagnosis.classification == Classification::Convergent;

    // Seeded forward solution: f(x0 + seed) = seed.
    report.seed = step;
    double x = x0 + step;
    double f = step;
    const double end = x0 + horizon;
    while (x < end - 1e-12 * horizon) {
        const double dx = std::min(step, end - x);
        f = rk4(x, f, dx);
        x += dx;
    }
    report.seeded_endpoint = f;
    return report;
}

// ---------------------------------------------------------------------------

std::vector<GradientNorm> squared_gradient_at_zero(const ScalarField& f, std::span<const double> x0,
                                                   std::span<const double> steps, double zero_tol) {
    const int n = f.dimension();
    if (static_cast<int>(x0.size()) != n) throw PreconditionError("point has wrong dimension");
    const double at = f.value(x0);
    if (std::fabs(at) > zero_tol) {
        throw PreconditionError("f(x0) = " + format_double(at) + " is not a zero");
    }
    std::vector<GradientNorm> out;
    std::vector<double> x(x0.begin(), x0.end());
    for (double h : steps) {
        if (!(h > 0.0)) throw PreconditionError("finite-difference steps must be positive");
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            x[i] = x0[i] + h;
            const double up = f.value(x);
            x[i] = x0[i] - h;
            const double down = f.value(x);
            x[i] = x0[i];
            const double d = (up * up - down * down) / (2.0 * h);
            sum += d * d;
        }
        out.push_back(GradientNorm{h, std::sqrt(sum)});
    }
    return out;
}

std::optional<double> observed_order(std::span<const GradientNorm> norms) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& g : norms) {
        if (g.norm > 0.0) {
            lx.push_back(std::log(g.h));
            ly.push_back(std::log(g.norm));
        }
    }
    if (lx.size() < 2) return std::nullopt;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        mx += lx[k];
        my += ly[k];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    return sxy / sxx;
}

} // namespace blowup
