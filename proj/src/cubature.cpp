#include "blowup/cubature.hpp"

#include "blowup/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>

namespace blowup {

GaussRule make_gauss_legendre(int m) {
    if (m < 1) throw PreconditionError("Gauss-Legendre rule needs at least one node");
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(m));
    rule.weights.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 1.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

namespace {

const GaussRule& gauss_rule(int m) {
    static std::once_flag once;
    static std::array<GaussRule, 9> rules;
    std::call_once(once, [] {
        for (int k = 1; k < 9; ++k) rules[k] = make_gauss_legendre(k);
    });
    return rules.at(static_cast<std::size_t>(m));
}

int points_per_axis(int dim) { return dim == 1 ? 5 : (dim == 2 ? 4 : 3); }

int default_initial_cells(int dim) {
    switch (dim) {
    case 1: return 8;
    case 2: return 8;
    case 3: return 4;
    case 4: return 3;
    default: return 2;
    }
}

using Vec = std::array<double, kMaxCubatureDim>;

struct Cell {
    Vec lo{};
    Vec hi{};
    Vec half_lo{};  // rule value on the lower half along each axis
    Vec half_hi{};
    double value = 0.0;  // rule value on the whole cell
    double est = 0.0;
    double err = 0.0;
    int axis = 0;
};

class BoxIntegrator {
public:
    BoxIntegrator(const Integrand& f, int dim) : f_(f), dim_(dim), rule_(gauss_rule(points_per_axis(dim))) {
        point_.resize(static_cast<std::size_t>(dim));
    }

    double rule(const Vec& lo, const Vec& hi) {
        const int m = static_cast<int>(rule_.nodes.size());
        std::array<int, kMaxCubatureDim> idx{};
        Vec half{};
        Vec mid{};
        double jac = 1.0;
        for (int a = 0; a < dim_; ++a) {
            half[a] = 0.5 * (hi[a] - lo[a]);
            mid[a] = 0.5 * (hi[a] + lo[a]);
            jac *= half[a];
        }
        double sum = 0.0;
        for (;;) {
            double w = 1.0;
            for (int a = 0; a < dim_; ++a) {
                point_[a] = mid[a] + half[a] * rule_.nodes[idx[a]];
                w *= rule_.weights[idx[a]];
            }
            const double v = f_(point_);
            ++evaluations_;
            if (!std::isfinite(v)) {
                throw DomainError("integrand is not finite inside the integration region");
            }
            sum += w * v;
            int a = 0;
            while (a < dim_ && ++idx[a] == m) {
                idx[a] = 0;
                ++a;
            }
            if (a == dim_) break;
        }
        return sum * jac;
    }

    void finish(Cell& c) {
        double best = -1.0;
        for (int a = 0; a < dim_; ++a) {
            const double mid = 0.5 * (c.lo[a] + c.hi[a]);
            Vec hi = c.hi;
            hi[a] = mid;
            Vec lo = c.lo;
            lo[a] = mid;
            c.half_lo[a] = rule(c.lo, hi);
            c.half_hi[a] = rule(lo, c.hi);
            const double diff = std::fabs(c.half_lo[a] + c.half_hi[a] - c.value);
            // Near-ties go to the lowest axis, so rounding-level changes of
            // the integrand cannot change the refinement pattern.
            if (diff > best * (1.0 + 1e-9) + 1e-300) {
                best = diff;
                c.axis = a;
            }
        }
        c.est = c.half_lo[c.axis] + c.half_hi[c.axis];
        c.err = std::fabs(c.est - c.value);
    }

    std::pair<Cell, Cell> split(const Cell& c) {
        const int a = c.axis;
        const double mid = 0.5 * (c.lo[a] + c.hi[a]);
        Cell left;
        left.lo = c.lo;
        left.hi = c.hi;
        left.hi[a] = mid;
        left.value = c.half_lo[a];
        Cell right;
        right.lo = c.lo;
        right.hi = c.hi;
        right.lo[a] = mid;
        right.value = c.half_hi[a];
        finish(left);
        finish(right);
        return {left, right};
    }

    std::size_t evaluations() const { return evaluations_; }

private:
    const Integrand& f_;
    int dim_;
    const GaussRule& rule_;
    std::vector<double> point_;
    std::size_t evaluations_ = 0;
};

} // namespace

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

CubatureResult integrate_box(const Integrand& f, const Box& box, const CubatureOptions& options) {
    const int dim = static_cast<int>(box.lo.size());
    if (dim < 1 || dim > kMaxCubatureDim || box.hi.size() != box.lo.size()) {
        throw PreconditionError("cubature supports dimensions 1.." + std::to_string(kMaxCubatureDim));
    }
    BoxIntegrator integrator(f, dim);
    const int per_axis = options.initial_cells > 0 ? options.initial_cells : default_initial_cells(dim);

    std::vector<Cell> cells;
    {
        std::size_t total = 1;
        for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(per_axis);
        cells.reserve(total);
        for (std::size_t k = 0; k < total; ++k) {
            Cell c;
            std::size_t rem = k;
            for (int a = 0; a < dim; ++a) {
                const int j = static_cast<int>(rem % per_axis);
                rem /= per_axis;
                const double w = box.hi[a] - box.lo[a];
                c.lo[a] = box.lo[a] + w * j / per_axis;
                c.hi[a] = j + 1 == per_axis ? box.hi[a] : box.lo[a] + w * (j + 1) / per_axis;
            }
            c.value = integrator.rule(c.lo, c.hi);
            integrator.finish(c);
            cells.push_back(c);
        }
    }

    constexpr double kMarkFraction = 0.1;
    std::vector<double> est;
    std::vector<double> err;
    CubatureResult result;
    for (;;) {
        est.resize(cells.size());
        err.resize(cells.size());
        double max_err = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            est[i] = cells[i].est;
            err[i] = cells[i].err;
            max_err = std::max(max_err, cells[i].err);
        }
        result.value = pairwise_sum(est);
        result.err = pairwise_sum(err);
        const double tol = std::max(options.abs_tol, options.rel_tol * std::fabs(result.value));
        if (result.err <= tol) {
            result.converged = true;
            break;
        }
        if (cells.size() >= options.max_cells) break;

        const double threshold = kMarkFraction * max_err;
        const std::size_t current = cells.size();
        for (std::size_t i = 0; i < current && cells.size() < options.max_cells; ++i) {
            if (cells[i].err < threshold) continue;
            auto [left, right] = integrator.split(cells[i]);
            cells[i] = left;
            cells.push_back(right);
        }
    }
    result.cells = cells.size();
    result.evaluations = integrator.evaluations();
    return result;
}

CubatureResult integrate_interval(const std::function<double(double)>& f, double a, double b,
                                  const CubatureOptions& options) {
    if (!(a < b)) {
        if (a == b) return CubatureResult{0.0, 0.0, true, 0, 0};
        throw PreconditionError("interval requires a <= b");
    }
    Integrand g = [&f](std::span<const double> x) { return f(x[0]); };
    return integrate_box(g, Box{{a}, {b}}, options);
}

CubatureResult integrate_domain(const Integrand& f, const Domain& domain, const CubatureOptions& options) {
    if (domain.is_box() || domain.dimension() == 1) {
        return integrate_box(f, domain.bounding_box(), options);
    }
    return integrate_domain_cut(f, domain, LevelFn{}, 0.0, options);
}

namespace {

/// Line integrals along the innermost coordinate, split where |level|
/// crosses eps; the remaining coordinates go to integrate_box.
class CutIntegrator {
public:
    CutIntegrator(const Integrand& f, const Domain& domain, const LevelFn& level, double eps,
                  const CubatureOptions& options)
        : f_(f), level_(level), eps_(eps), options_(options), n_(domain.dimension()) {
        q_.assign(static_cast<std::size_t>(n_), 0.0);
        x_.assign(static_cast<std::size_t>(n_), 0.0);
        if (domain.is_box() || n_ == 1) {
            const Box b = domain.bounding_box();
            lo_ = b.lo;
            hi_ = b.hi;
        } else {
            // Hyperspherical: q = (r, phi_1, .., phi_{n-1}).
            const Ball& ball = domain.ball();
            spherical_ = true;
            center_ = ball.center;
            lo_.assign(static_cast<std::size_t>(n_), 0.0);
            hi_.assign(static_cast<std::size_t>(n_), std::numbers::pi);
            hi_[0] = ball.radius;
            hi_[n_ - 1] = 2.0 * std::numbers::pi;
        }
    }

    CubatureResult run() {
        CubatureResult r;
        if (n_ == 1) {
            r.value = line(r.err);
            r.converged = converged_;
            r.cells = line_cells_;
        } else {
            Integrand outer = [this](std::span<const double> u) {
                for (int i = 1; i < n_; ++i) q_[i] = u[i - 1];
                double err = 0.0;
                return line(err);
            };
            CubatureOptions opts = options_;
            if (opts.initial_cells == 0) opts.initial_cells = n_ == 2 ? 8 : (n_ == 3 ? 4 : 2);
            const Box box{std::vector<double>(lo_.begin() + 1, lo_.end()),
                          std::vector<double>(hi_.begin() + 1, hi_.end())};
            const auto o = integrate_box(outer, box, opts);
            r.value = o.value;
            r.err = o.err;
            r.converged = o.converged && converged_;
            r.cells = o.cells;
        }
        r.evaluations = evaluations_;
        return r;
    }

private:
    /// Physical point of q_ in x_; returns the Jacobian.
    double map() {
        if (!spherical_) {
            for (int i = 0; i < n_; ++i) x_[i] = q_[i];
            return 1.0;
        }
        const double r = q_[0];
        double s = r;
        double jac = std::pow(r, n_ - 1);
        for (int i = 0; i + 2 < n_; ++i) {
            const double phi = q_[i + 1];
            x_[i] = center_[i] + s * std::cos(phi);
            const double sp = std::sin(phi);
            jac *= std::pow(sp, n_ - 2 - i);
            s *= sp;
        }
        const double last = q_[n_ - 1];
        x_[n_ - 2] = center_[n_ - 2] + s * std::cos(last);
        x_[n_ - 1] = center_[n_ - 1] + s * std::sin(last);
        return jac;
    }

    double level_at(double t) {
        q_[0] = t;
        map();
        ++evaluations_;
        return level_(x_);
    }

    /// Root of level = target in [lo, hi] given its sign at lo, to ~1e-14
    /// relative.
    double bisect(double lo, double hi, double target, bool above_at_lo) {
        for (int it = 0; it < 200; ++it) {
            if (hi - lo <= 1e-14 * std::max(std::fabs(lo), std::fabs(hi)) + 1e-300) break;
            const double mid = 0.5 * (lo + hi);
            if ((level_at(mid) > target) == above_at_lo) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }

    /// Root of |level| = eps in [lo, hi] given which end is kept.
    double bisect_abs(double lo, double hi, bool kept_at_lo) {
        for (int it = 0; it < 200; ++it) {
            if (hi - lo <= 1e-14 * std::max(std::fabs(lo), std::fabs(hi)) + 1e-300) break;
            const double mid = 0.5 * (lo + hi);
            if ((std::fabs(level_at(mid)) > eps_) == kept_at_lo) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }

    /// Boundaries of {|level| > eps} along the line. Crossings of +eps and
    /// -eps are located separately, so a thin band where level changes sign
    /// between two samples is still found. At sampled local minima of
    /// |level| a golden-section search looks for a band hidden between
    /// samples.
    void breakpoints(double a, double b, std::vector<double>& out) {
        constexpr int kSamples = 32;
        std::vector<double> t(kSamples + 1);
        std::vector<double> g(kSamples + 1);
        for (int k = 0; k <= kSamples; ++k) {
            t[k] = k == kSamples ? b : a + (b - a) * k / kSamples;
            g[k] = level_at(t[k]);
        }
        std::vector<char> crossed(kSamples, 0);
        for (int k = 0; k < kSamples; ++k) {
            for (double target : {eps_, -eps_}) {
                const bool above = g[k] > target;
                if (above != (g[k + 1] > target)) {
                    out.push_back(bisect(t[k], t[k + 1], target, above));
                    crossed[k] = 1;
                }
            }
        }
        for (int k = 0; k <= kSamples; ++k) {
            const double m = std::fabs(g[k]);
            if (!(m > eps_)) continue;
            const bool left_ok = k == 0 || (!crossed[k - 1] && m <= std::fabs(g[k - 1]));
            const bool right_ok = k == kSamples || (!crossed[k] && m <= std::fabs(g[k + 1]));
            if (!left_ok || !right_ok) continue;
            const double lo = t[std::max(k - 1, 0)];
            const double hi = t[std::min(k + 1, kSamples)];
            const double tm = golden_min(lo, hi);
            if (std::fabs(level_at(tm)) > eps_) continue;
            if (tm > lo && std::fabs(g[std::max(k - 1, 0)]) > eps_) out.push_back(bisect_abs(lo, tm, true));
            if (tm < hi && std::fabs(g[std::min(k + 1, kSamples)]) > eps_) out.push_back(bisect_abs(tm, hi, false));
        }
        std::sort(out.begin(), out.end());
    }

    /// Minimizer of |level| on [lo, hi].
    double golden_min(double lo, double hi) {
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = hi - inv_phi * (hi - lo);
        double d = lo + inv_phi * (hi - lo);
        double fc = std::fabs(level_at(c));
        double fd = std::fabs(level_at(d));
        for (int it = 0; it < 60 && hi - lo > 1e-14 * (std::fabs(lo) + std::fabs(hi)) + 1e-300; ++it) {
            if (!(fc > eps_) || !(fd > eps_)) return fc <= fd ? c : d;
            if (fc <= fd) {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = std::fabs(level_at(c));
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = std::fabs(level_at(d));
            }
        }
        return fc <= fd ? c : d;
    }

    double line(double& err) {
        const double a = lo_[0];
        const double b = hi_[0];
        err = 0.0;
        std::vector<double> cuts;
        if (level_) breakpoints(a, b, cuts);
        cuts.insert(cuts.begin(), a);
        cuts.push_back(b);

        CubatureOptions opts = options_;
        opts.initial_cells = 8;
        if (n_ > 1) {
            opts.rel_tol = std::max(0.1 * options_.rel_tol, 1e-14);
            opts.abs_tol = 0.0;
        }
        auto g = [this](double t) {
            q_[0] = t;
            const double jac = map();
            ++evaluations_;
            const double v = f_(x_);
            if (!std::isfinite(v)) throw DomainError("integrand is not finite inside the integration region");
            return v * jac;
        };
        std::vector<double> parts;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            if (!(cuts[i + 1] > cuts[i])) continue;
            const auto r = integrate_interval(g, cuts[i], cuts[i + 1], opts);
            parts.push_back(r.value);
            err += r.err;
            converged_ = converged_ && r.converged;
            line_cells_ += r.cells;
        }
        return pairwise_sum(parts);
    }

    const Integrand& f_;
    const LevelFn& level_;
    double eps_;
    CubatureOptions options_;
    int n_;
    bool spherical_ = false;
    std::vector<double> lo_;
    std::vector<double> hi_;
    std::vector<double> center_;
    std::vector<double> q_;
    std::vector<double> x_;
    std::size_t evaluations_ = 0;
    std::size_t line_cells_ = 0;
    bool converged_ = true;
};

} // namespace

CubatureResult integrate_domain_cut(const Integrand& f, const Domain& domain, const LevelFn& level, double eps,
                                    const CubatureOptions& options) {
    if (domain.dimension() > kMaxCubatureDim) {
        throw PreconditionError("cubature supports dimensions 1.." + std::to_string(kMaxCubatureDim));
    }
    if (!(eps >= 0.0)) throw PreconditionError("cut level must be nonnegative");
    CutIntegrator integrator(f, domain, level, eps, options);
    return integrator.run();
}

} // namespace blowup
