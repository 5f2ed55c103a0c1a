#pragma once

// Higher-level numerical procedures built on the quadrature layer.

#include "blowup/fields.hpp"
#include "blowup/quad.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace blowup {

enum class Verdict {
    Member,
    NonMember,
    Inconclusive,
};

std::string to_string(Verdict v);

/// Relative tail a converged series must reach before "member" is claimed.
inline constexpr double kCauchyTailTolerance = 1e-3;

/// Relative change of the last two values of a series.
double cauchy_tail(const IntegralSeries& series);

struct SobolevOptions {
    QuadOptions quad{};
    /// Cells per axis of the zero probe reported alongside the verdict.
    int probe_resolution = 32;
};

/// Membership of log|f - f(a)| (or log|f| without `a`) in W^{1,p}.
struct SobolevReport {
    double p = 0.0;
    std::optional<std::vector<double>> a;
    /// Series of the integral of |log|g||^p over {|g| > eps}.
    IntegralSeries log_series;
    DivergenceDiagnosis log_diagnosis;
    /// L^p norm estimate (limit^(1/p)); infinity when the series diverges.
    double log_norm = 0.0;
    /// Series of the integral of (|grad g| / |g|)^p over {|g| > eps}.
    IntegralSeries grad_series;
    DivergenceDiagnosis grad_diagnosis;
    Verdict verdict = Verdict::Inconclusive;
    /// Zero probe of g on a grid that includes the domain boundary.
    int probe_resolution = 0;
    std::size_t zero_cells = 0;
};

SobolevReport sobolev_check(const ScalarField& f, std::optional<std::vector<double>> a, double p, const Domain& domain,
                            const ExcisionFamily& family, const SobolevOptions& options = {});

struct CriticalExponentOptions {
    ExcisionFamily family{1e-2, 0.1, 7};
    QuadOptions quad{};
};

struct CriticalExponentResult {
    double p_star = 0.0;
    double lo = 0.0;  ///< largest probed p classified convergent
    double hi = 0.0;  ///< smallest probed p classified divergent
    /// Every probe in order: exponent, diagnosis.
    std::vector<std::pair<double, DivergenceDiagnosis>> probes;
};

/// Bisection for the exponent where the excised integral starts to diverge.
///
/// Requires a convergent diagnosis at p_lo and a divergent one at p_hi;
/// otherwise throws PreconditionError asking for a wider bracket. An
/// inconclusive probe is decided by the sign of its growth exponent.
CriticalExponentResult critical_exponent(const ScalarField& f, const Domain& domain, double p_lo, double p_hi,
                                         double tol, const CriticalExponentOptions& options = {});

/// Integral of V^p(x0 + r w) r^(n-1) over r in [rho, radius].
CubatureResult ray_integral(const ScalarField& f, const Domain& domain, std::span<const double> x0,
                            std::span<const double> direction, double p, double rho, double radius = 1.0,
                            const QuadOptions& options = {});

struct RaySurveyOptions {
    std::uint64_t seed = 42;
    QuadOptions quad{};
};

struct RayReport {
    std::vector<double> center;
    /// Radius of the ball mapped onto the unit ball before the survey.
    double radius = 1.0;
    std::vector<std::vector<double>> directions;
    std::vector<IntegralSeries> series;
    std::vector<DivergenceDiagnosis> diagnoses;

    std::size_t divergent_count() const;
    double divergent_fraction() const;
};

/// Ray integrals on K directions around x0. The largest ball around x0 of
/// radius <= 1 inside the domain is mapped affinely onto the unit ball first.
RayReport ray_survey(const ScalarField& f, const Domain& domain, std::span<const double> x0, int directions,
                     double p, const ExcisionFamily& cutoffs, const RaySurveyOptions& options = {});

/// lambda(x) = |phi'(x)| / (|phi(x)| x^((1-p)/p)) on (0, 1], zero where phi is.
double multiplier(const ScalarField& phi, double x, double p);

struct MultiplierReport {
    double p = 0.0;
    /// Integral of lambda^p over [h, 1] for each cutoff h.
    IntegralSeries series;
    DivergenceDiagnosis diagnosis;
};

MultiplierReport minimal_multiplier(const ScalarField& phi, double p, const ExcisionFamily& cutoffs,
                                    const QuadOptions& options = {}, double zero_tol = 1e-12);

struct OdeOptions {
    /// Exponent of the local integrability test of V.
    double n = 1.0;
    bool backward = true;
    /// Cutoffs rho of the test integral over {rho < |x - x0| < horizon}.
    ExcisionFamily cutoffs{1e-2, 0.1, 6};
    QuadOptions quad{};
};

struct OdeReport {
    double sup_abs_f = 0.0;
    std::size_t steps = 0;
    IntegralSeries lloc_series;
    DivergenceDiagnosis lloc_diagnosis;
    /// True when V^n is diagnosed integrable near x0.
    bool v_in_lloc = false;
    /// Forward solution started at x0 + seed with value seed (a profile
    /// f(x) ~ x - x0); stays O(seed) when V is integrable, O(1) otherwise.
    double seed = 0.0;
    double seeded_endpoint = 0.0;
};

/// RK4 integration of the extremal equation f' = V f with f(x0) = 0 on
/// [x0 - horizon, x0 + horizon] (forward only unless options.backward).
OdeReport ode_uniqueness_sim(const ScalarField& v, double x0, double step, double horizon,
                             const OdeOptions& options = {});

struct GradientNorm {
    double h = 0.0;
    double norm = 0.0;
};

/// Central-difference gradient norms of f^2 at a zero x0 of f.
std::vector<GradientNorm> squared_gradient_at_zero(const ScalarField& f, std::span<const double> x0,
                                                   std::span<const double> steps, double zero_tol = 1e-12);

/// Least-squares slope of log(norm) against log(h) over the nonzero norms;
/// nullopt when fewer than two norms are nonzero.
std::optional<double> observed_order(std::span<const GradientNorm> norms);

} // namespace blowup
