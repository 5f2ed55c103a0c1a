#pragma once

#include "blowup/cubature.hpp"
#include "blowup/fields.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace blowup {

/// Geometric excision levels eps_k = eps0 * ratio^k, k = 0..levels-1.
struct ExcisionFamily {
    double eps0 = 1e-2;
    double ratio = 0.1;
    int levels = 5;

    void validate() const;
    std::vector<double> levels_list() const;
};

struct QuadOptions {
    CubatureOptions cubature{};
    double zero_tol = kDefaultZeroTol;
};

struct ExcisedResult {
    double value = 0.0;
    double err = 0.0;
    bool converged = false;
    std::size_t evaluations = 0;
};

/// Integral of V(x)^p over {x in domain : |f(x)| > eps}.
ExcisedResult integrate_excised(const ScalarField& field, const Domain& domain, double p, double eps,
                                const QuadOptions& options = {});

struct SeriesPoint {
    double eps = 0.0;
    double value = 0.0;
    double err = 0.0;
    bool converged = true;
};

/// Integral estimates over shrinking cutoffs (eps strictly decreasing).
struct IntegralSeries {
    std::vector<SeriesPoint> points;

    bool all_converged() const;
    /// Throws Error when a value drops below its predecessor by more than
    /// the combined error estimates.
    void check_monotone() const;
};

/// One integrate_excised per level of the family; monotonicity is asserted.
IntegralSeries excision_series(const ScalarField& field, const Domain& domain, double p,
                               const ExcisionFamily& family, const QuadOptions& options = {});

/// Series of an arbitrary nonnegative integrand restricted to {|g| > eps}.
IntegralSeries excised_series_of(const Integrand& integrand, const ScalarField& cut, const Domain& domain,
                                 const ExcisionFamily& family, const QuadOptions& options = {});

enum class Classification {
    Convergent,
    DivergentLog,
    DivergentPower,
    Inconclusive,
};

std::string to_string(Classification c);
Classification classification_from_string(std::string_view text);
inline bool is_divergent(Classification c) {
    return c == Classification::DivergentLog || c == Classification::DivergentPower;
}

/// Least-squares fit of one growth model to a series.
///
/// Every model has the form value = a + b * phi(eps):
///   tail  phi = eps^(-gamma), gamma in [-kMaxTailExponent, -kMinTailExponent]
///   log   phi = ln(1/eps)                                 (gamma reported as 0)
///   power phi = eps^(-gamma), gamma in [kMinPowerExponent, kMaxPowerExponent]
struct ModelFit {
    double a = 0.0;
    double b = 0.0;
    double gamma = 0.0;
    double se_b = 0.0;       ///< standard error of b at the fitted gamma
    double residual = 0.0;   ///< root-mean-square residual
};

inline constexpr double kMinTailExponent = 0.005;
inline constexpr double kMaxTailExponent = 4.0;
inline constexpr double kMinPowerExponent = 0.005;
inline constexpr double kMaxPowerExponent = 8.0;

struct DivergenceDiagnosis {
    Classification classification = Classification::Inconclusive;
    /// Parameters of the winning model: value ~ a + b * phi(eps).
    double a = 0.0;
    double b = 0.0;
    double gamma = 0.0;
    double se_b = 0.0;
    double residual_constant = 0.0;
    double residual_log = 0.0;
    double residual_power = 0.0;
    /// Exponent of the unconstrained family a + b (eps^-g - 1)/g over all
    /// real g (g = 0 is the log model). Positive means growth.
    double growth_exponent = 0.0;
};

/// Classifies a series as convergent, log-divergent, power-divergent or
/// inconclusive.
///
/// A divergent model qualifies when its residual is at least 10x below the
/// convergent (constant limit plus decaying tail) model's and its fitted b
/// is positive and more than 3 standard errors from zero. If both divergent
/// models qualify, the smaller residual wins unless the two are within a
/// factor 2 (inconclusive). Without a qualifying divergent model the series
/// is convergent when the tail model beats both divergent models by a
/// factor 2 or the log slope is not significant; otherwise inconclusive.
DivergenceDiagnosis diagnose(const IntegralSeries& series);

ModelFit fit_tail(std::span<const double> eps, std::span<const double> values);
ModelFit fit_log(std::span<const double> eps, std::span<const double> values);
ModelFit fit_power(std::span<const double> eps, std::span<const double> values);

struct BbmOptions {
    int strata_per_axis = 64;
    /// Cap on the total number of strata; strata_per_axis is lowered so
    /// that strata_per_axis^(2n) stays within it.
    std::uint64_t max_strata = std::uint64_t{1} << 24;
    std::uint64_t seed = 42;
    /// Sample y before x. The integrand is symmetric, so this must not
    /// change the estimate.
    bool swap_order = false;
};

struct BbmResult {
    double value = 0.0;
    double std_error = 0.0;
    int strata_per_axis = 0;
    std::uint64_t samples = 0;
    /// False when strata_per_axis had to be lowered to fit max_strata.
    bool full_resolution = true;
};

/// Stratified estimate of the double integral of |f(x)-f(y)| / |x-y|^(n+1)
/// over pairs in the domain with |x - y| > h.
BbmResult bbm_estimate(const ScalarField& field, const Domain& domain, double h, const BbmOptions& options = {});

} // namespace blowup
