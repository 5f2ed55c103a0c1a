#include "blowup/error.hpp"
#include "blowup/quad.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace blowup {

namespace {

/// Ordinary least squares for y = a + b * phi.
ModelFit linear_fit(std::span<const double> phi, std::span<const double> y) {
    const std::size_t n = y.size();
    double mean_phi = 0.0;
    double mean_y = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mean_phi += phi[k];
        mean_y += y[k];
    }
    mean_phi /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double dx = phi[k] - mean_phi;
        sxx += dx * dx;
        sxy += dx * (y[k] - mean_y);
    }
    ModelFit fit;
    fit.b = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.a = mean_y - fit.b * mean_phi;
    double rss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = y[k] - fit.a - fit.b * phi[k];
        rss += r * r;
    }
    fit.residual = std::sqrt(rss / static_cast<double>(n));
    fit.se_b = (n > 2 && sxx > 0.0) ? std::sqrt(rss / static_cast<double>(n - 2) / sxx) : 0.0;
    return fit;
}

/// Fit of y = a + b * eps^(-g) for a fixed g.
ModelFit fit_exponent(std::span<const double> log_inv_eps, std::span<const double> y, double g) {
    std::vector<double> phi(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) phi[k] = std::exp(g * log_inv_eps[k]);
    ModelFit fit = linear_fit(phi, y);
    fit.gamma = g;
    return fit;
}

/// Minimizes the residual over g in [lo, hi]: log-spaced scan, then golden
/// section between the neighbours of the best scan point.
ModelFit fit_exponent_range(std::span<const double> log_inv_eps, std::span<const double> y, double lo, double hi,
                            double sign) {
    constexpr int kScan = 400;
    auto at = [&](double magnitude) { return fit_exponent(log_inv_eps, y, sign * magnitude); };
    const double ratio = std::pow(hi / lo, 1.0 / (kScan - 1));
    std::vector<double> grid(kScan);
    int best = 0;
    double best_res = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kScan; ++i) {
        grid[i] = i + 1 == kScan ? hi : lo * std::pow(ratio, i);
        const double r = at(grid[i]).residual;
        if (r < best_res) {
            best_res = r;
            best = i;
        }
    }
    double left = grid[std::max(best - 1, 0)];
    double right = grid[std::min(best + 1, kScan - 1)];
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = right - phi * (right - left);
    double d = left + phi * (right - left);
    double fc = at(c).residual;
    double fd = at(d).residual;
    for (int iter = 0; iter < 200 && right - left > 1e-14 * right; ++iter) {
        if (fc < fd) {
            right = d;
            d = c;
            fd = fc;
            c = right - phi * (right - left);
            fc = at(c).residual;
        } else {
            left = c;
            c = d;
            fc = fd;
            d = left + phi * (right - left);
            fd = at(d).residual;
        }
    }
    ModelFit refined = at(0.5 * (left + right));
    ModelFit scanned = at(grid[best]);
    return refined.residual <= scanned.residual ? refined : scanned;
}

std::vector<double> log_inverse(std::span<const double> eps) {
    std::vector<double> out(eps.size());
    for (std::size_t k = 0; k < eps.size(); ++k) out[k] = -std::log(eps[k]);
    return out;
}

void check_fit_input(std::span<const double> eps, std::span<const double> values) {
    if (eps.size() != values.size() || eps.size() < 3) {
        throw PreconditionError("a fit needs at least 3 (eps, value) pairs");
    }
    for (double e : eps) {
        if (!(e > 0.0)) throw PreconditionError("fit levels must be positive");
    }
}

/// Unconstrained growth exponent over [-kMaxTailExponent, kMaxPowerExponent];
/// the residual is continuous through g = 0, where the model is logarithmic.
double growth_exponent(std::span<const double> log_inv_eps, std::span<const double> y) {
    constexpr int kScan = 1201;
    const double lo = -kMaxTailExponent;
    const double hi = kMaxPowerExponent;
    auto residual = [&](double g) {
        if (g == 0.0) return linear_fit(log_inv_eps, y).residual;
        return fit_exponent(log_inv_eps, y, g).residual;
    };
    double best_g = lo;
    double best_res = std::numeric_limits<double>::infinity();
    const double step = (hi - lo) / (kScan - 1);
    for (int i = 0; i < kScan; ++i) {
        const double g = lo + step * i;
        const double r = residual(g);
        if (r < best_res) {
            best_res = r;
            best_g = g;
        }
    }
    double left = std::max(lo, best_g - step);
    double right = std::min(hi, best_g + step);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int iter = 0; iter < 120; ++iter) {
        const double c = right - phi * (right - left);
        const double d = left + phi * (right - left);
        if (residual(c) < residual(d)) {
            right = d;
        } else {
            left = c;
        }
    }
    const double refined = 0.5 * (left + right);
    return residual(refined) <= best_res ? refined : best_g;
}

} // namespace

ModelFit fit_tail(std::span<const double> eps, std::span<const double> values) {
    check_fit_input(eps, values);
    const auto x = log_inverse(eps);
    return fit_exponent_range(x, values, kMinTailExponent, kMaxTailExponent, -1.0);
}

ModelFit fit_log(std::span<const double> eps, std::span<const double> values) {
    check_fit_input(eps, values);
    const auto x = log_inverse(eps);
    ModelFit fit = linear_fit(x, values);
    fit.gamma = 0.0;
    return fit;
}

ModelFit fit_power(std::span<const double> eps, std::span<const double> values) {
    check_fit_input(eps, values);
    const auto x = log_inverse(eps);
    return fit_exponent_range(x, values, kMinPowerExponent, kMaxPowerExponent, 1.0);
}

DivergenceDiagnosis diagnose(const IntegralSeries& series) {
    if (series.points.size() < 3) throw PreconditionError("diagnosis needs at least 3 levels");
    std::vector<double> eps;
    std::vector<double> y;
    for (const auto& p : series.points) {
        eps.push_back(p.eps);
        y.push_back(p.value);
    }

    DivergenceDiagnosis d;
    const ModelFit tail = fit_tail(eps, y);
    const ModelFit log = fit_log(eps, y);
    const ModelFit power = fit_power(eps, y);
    d.residual_constant = tail.residual;
    d.residual_log = log.residual;
    d.residual_power = power.residual;
    d.growth_exponent = growth_exponent(log_inverse(eps), y);

    auto adopt = [&d](const ModelFit& m, Classification c) {
        d.classification = c;
        d.a = m.a;
        d.b = m.b;
        d.gamma = m.gamma;
        d.se_b = m.se_b;
    };

    double scale = 0.0;
    for (double v : y) scale = std::max(scale, std::fabs(v));
    const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
    if (scale == 0.0 || *hi_it - *lo_it <= 1e-12 * scale) {
        // Flat series: every model fits to rounding; the limit is the mean.
        double mean = 0.0;
        for (double v : y) mean += v;
        d.classification = Classification::Convergent;
        d.a = mean / static_cast<double>(y.size());
        d.b = 0.0;
        d.gamma = 0.0;
        d.se_b = 0.0;
        return d;
    }

    const double floor = 1e-12 * scale;
    const double rc = std::max(tail.residual, floor);
    const double rl = std::max(log.residual, floor);
    const double rp = std::max(power.residual, floor);

    // A tail fit pinned at its smallest exponent is a stretched copy of the
    // log model, not a real limit; log then only has to beat it by 2x.
    const bool tail_degenerate = std::fabs(tail.gamma) <= kMinTailExponent * (1.0 + 1e-6);
    const double log_margin = tail_degenerate ? 2.0 : 10.0;
    const bool log_pass = log.b > 0.0 && log.b > 3.0 * log.se_b && log_margin * rl <= rc;
    const bool power_pass = power.b > 0.0 && power.b > 3.0 * power.se_b && 10.0 * rp <= rc;

    if (log_pass && power_pass) {
        if (std::max(rl, rp) < 2.0 * std::min(rl, rp)) {
            adopt(rl <= rp ? log : power, Classification::Inconclusive);
        } else if (rl < rp) {
            adopt(log, Classification::DivergentLog);
        } else {
            adopt(power, Classification::DivergentPower);
        }
        return d;
    }
    if (log_pass) {
        adopt(log, Classification::DivergentLog);
        return d;
    }
    if (power_pass) {
        adopt(power, Classification::DivergentPower);
        return d;
    }
    const bool tail_wins = 2.0 * rc <= rl && 2.0 * rc <= rp;
    const bool no_growth = !(log.b > 3.0 * log.se_b);
    if (tail_wins || no_growth) {
        adopt(tail, Classification::Convergent);
        return d;
    }
    const ModelFit& best = rc <= rl && rc <= rp ? tail : (rl <= rp ? log : power);
    adopt(best, Classification::Inconclusive);
    return d;
}

} // namespace blowup
