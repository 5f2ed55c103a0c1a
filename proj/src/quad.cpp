#include "blowup/quad.hpp"

#include "blowup/error.hpp"

#include <cmath>

namespace blowup {

void ExcisionFamily::validate() const {
    if (!(eps0 > 0.0)) throw PreconditionError("excision family needs eps0 > 0");
    if (!(ratio > 0.0 && ratio < 1.0)) throw PreconditionError("excision ratio must lie in (0, 1)");
    if (levels < 3) throw PreconditionError("excision family needs at least 3 levels");
}

std::vector<double> ExcisionFamily::levels_list() const {
    validate();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(levels));
    double eps = eps0;
    for (int k = 0; k < levels; ++k) {
        out.push_back(eps);
        eps *= ratio;
    }
    return out;
}

bool IntegralSeries::all_converged() const {
    for (const auto& p : points) {
        if (!p.converged) return false;
    }
    return true;
}

void IntegralSeries::check_monotone() const {
    for (std::size_t k = 1; k < points.size(); ++k) {
        const auto& prev = points[k - 1];
        const auto& cur = points[k];
        if (!(cur.eps < prev.eps)) throw Error("series levels must be strictly decreasing");
        const double slack = prev.err + cur.err + 1e-9 * std::fabs(prev.value) + 1e-300;
        if (cur.value < prev.value - slack) {
            throw Error("series is not monotone: value " + format_double(cur.value) + " at eps " +
                        format_double(cur.eps) + " is below " + format_double(prev.value));
        }
    }
}

ExcisedResult integrate_excised(const ScalarField& field, const Domain& domain, double p, double eps,
                                const QuadOptions& options) {
    if (!(p > 0.0)) throw PreconditionError("exponent p must be positive");
    if (!(eps > 0.0)) throw PreconditionError("excision level must be positive");
    if (field.dimension() != domain.dimension()) throw PreconditionError("field and domain dimensions differ");

    const double zero_tol = options.zero_tol;
    std::vector<double> grad(static_cast<std::size_t>(field.dimension()));
    Integrand integrand = [&field, &grad, p, eps, zero_tol](std::span<const double> x) {
        const double v = field.value_grad(x, grad);
        const double a = std::fabs(v);
        if (!(a > eps) || a <= zero_tol) return 0.0;
        double s = 0.0;
        for (double g : grad) s += g * g;
        return std::pow(std::sqrt(s) / a, p);
    };
    LevelFn level = [&field](std::span<const double> x) { return field.value(x); };
    const auto r = integrate_domain_cut(integrand, domain, level, eps, options.cubature);
    return ExcisedResult{r.value, r.err, r.converged, r.evaluations};
}

IntegralSeries excised_series_of(const Integrand& integrand, const ScalarField& cut, const Domain& domain,
                                 const ExcisionFamily& family, const QuadOptions& options) {
    IntegralSeries series;
    for (double eps : family.levels_list()) {
        Integrand restricted = [&integrand, &cut, eps](std::span<const double> x) {
            if (!(std::fabs(cut.value(x)) > eps)) return 0.0;
            return integrand(x);
        };
        LevelFn level = [&cut](std::span<const double> x) { return cut.value(x); };
        const auto r = integrate_domain_cut(restricted, domain, level, eps, options.cubature);
        series.points.push_back(SeriesPoint{eps, r.value, r.err, r.converged});
    }
    series.check_monotone();
    return series;
}

IntegralSeries excision_series(const ScalarField& field, const Domain& domain, double p,
                               const ExcisionFamily& family, const QuadOptions& options) {
    IntegralSeries series;
    for (double eps : family.levels_list()) {
        const auto r = integrate_excised(field, domain, p, eps, options);
        series.points.push_back(SeriesPoint{eps, r.value, r.err, r.converged});
    }
    series.check_monotone();
    return series;
}

std::string to_string(Classification c) {
    switch (c) {
    case Classification::Convergent: return "convergent";
    case Classification::DivergentLog: return "divergent-log";
    case Classification::DivergentPower: return "divergent-power";
    case Classification::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

Classification classification_from_string(std::string_view text) {
    if (text == "convergent") return Classification::Convergent;
    if (text == "divergent-log") return Classification::DivergentLog;
    if (text == "divergent-power") return Classification::DivergentPower;
    if (text == "inconclusive") return Classification::Inconclusive;
    throw PreconditionError("unknown classification '" + std::string(text) + "'");
}

} // namespace blowup
