#pragma once

#include "blowup/fields.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace blowup {

using Integrand = std::function<double(std::span<const double>)>;

struct CubatureOptions {
    double rel_tol = 1e-7;
    double abs_tol = 0.0;
    std::size_t max_cells = 200000;
    /// Uniform cells per axis before adaptive refinement; 0 picks by dimension.
    int initial_cells = 0;
};

struct CubatureResult {
    double value = 0.0;
    double err = 0.0;
    bool converged = false;
    std::size_t cells = 0;
    std::size_t evaluations = 0;
};

/// Largest dimension the box integrator accepts.
inline constexpr int kMaxCubatureDim = 6;

/// Adaptive dyadic cubature on an axis-aligned box.
///
/// Every cell carries a tensor Gauss-Legendre value and, for each axis, the
/// value obtained by halving the cell along that axis. The cell error is the
/// largest two-level difference; refinement halves the cell along the axis
/// attaining it. Refinement proceeds in sweeps that split every cell whose
/// error is within a fixed fraction of the current maximum, until the summed
/// error meets max(abs_tol, rel_tol * |value|) or the cell budget runs out.
/// Cell totals are combined by pairwise summation in a fixed order, so the
/// result is bit-reproducible.
CubatureResult integrate_box(const Integrand& f, const Box& box, const CubatureOptions& options = {});

/// Integrates `f` (given in physical coordinates) over a domain. Boxes use
/// integrate_box; balls use integrate_domain_cut without a cut.
CubatureResult integrate_domain(const Integrand& f, const Domain& domain, const CubatureOptions& options = {});

/// Cut function: the part of the domain where |level| > eps is kept.
using LevelFn = std::function<double(std::span<const double>)>;

/// Integrates `f`, which must vanish where |level| <= eps, over a domain as
/// an iterated integral of one-dimensional adaptive rules.
///
/// The innermost coordinate is split where |level| crosses eps (found by
/// sampling, golden-section search at sampled minima of |level|, and
/// bisection), so each piece sees a smooth integrand even when the cut
/// boundary is curved or the excised band is thinner than the sampling.
/// Boxes use Cartesian coordinates, balls hyperspherical ones with the
/// radius innermost. The outer coordinates are integrated by integrate_box;
/// line integrals run at a tenth of its relative tolerance. An empty
/// `level` means no cut.
CubatureResult integrate_domain_cut(const Integrand& f, const Domain& domain, const LevelFn& level, double eps,
                                    const CubatureOptions& options = {});

/// One-dimensional convenience wrapper over integrate_box.
CubatureResult integrate_interval(const std::function<double(double)>& f, double a, double b,
                                  const CubatureOptions& options = {});

struct GaussRule {
    std::vector<double> nodes;    ///< on [-1, 1]
    std::vector<double> weights;
};

/// m-point Gauss-Legendre rule (Newton iteration on P_m).
GaussRule make_gauss_legendre(int m);

/// Pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values);

} // namespace blowup
