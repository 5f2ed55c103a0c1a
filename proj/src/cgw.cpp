#include "blowup/cgw.hpp"

#include "blowup/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace blowup {

namespace {

constexpr int kBumpNodes = 64;

double bump(double s) { return std::fabs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

/// Unit-width bump integrals, evaluated on [-1, d] with d <= 0 and extended
/// by symmetry so both collar edges are met exactly.
class UnitBump {
public:
    UnitBump() : rule_(make_gauss_legendre(kBumpNodes)) {
        mass_ = 2.0 * raw_integrals(0.0).first;
    }

    /// H(d) = integral of eta over [-1, d].
    double cdf(double d) const {
        if (d <= -1.0) return 0.0;
        if (d >= 1.0) return 1.0;
        if (d > 0.0) return 1.0 - cdf(-d);
        return raw_integrals(d).first / mass_;
    }

    /// L(d) = integral of (d - s) eta(s) over [-1, d].
    double ramp(double d) const {
        if (d <= -1.0) return 0.0;
        if (d >= 1.0) return d;
        if (d > 0.0) return d + ramp(-d);
        return raw_integrals(d).second / mass_;
    }

private:
    std::pair<double, double> raw_integrals(double d) const {
        const double half = 0.5 * (d + 1.0);
        const double mid = 0.5 * (d - 1.0);
        double h = 0.0;
        double l = 0.0;
        for (std::size_t i = 0; i < rule_.nodes.size(); ++i) {
            const double s = mid + half * rule_.nodes[i];
            const double w = half * rule_.weights[i] * bump(s);
            h += w;
            l += (d - s) * w;
        }
        return {h, l};
    }

    GaussRule rule_;
    double mass_ = 1.0;
};

const UnitBump& unit_bump() {
    static const UnitBump b;
    return b;
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw PreconditionError(std::string(name) + " must be positive and finite");
}

} // namespace

// Mollified log profile v(t), t = ln r, or a Hermite table in r.
struct RadialProfile::Backend {
    bool table = false;

    // analytic
    double uA = 0.0;
    double uB = 0.0;
    double slope = 0.0;  // dv/dt on the linear part
    double t_delta = 0.0;
    double t_R = 0.0;
    double w_delta = 0.0;
    double w_R = 0.0;

    // table
    std::vector<double> r;
    std::vector<double> psi;
    std::vector<double> dpsi;
    double lo = 0.0;
    double hi = 0.0;

    /// (v, dv/dt)
    std::pair<double, double> log_profile(double t) const {
        const auto& b = unit_bump();
        if (t <= t_delta - w_delta) return {uB, 0.0};
        if (t < t_delta + w_delta) {
            const double d = (t - t_delta) / w_delta;
            return {uB + slope * w_delta * b.ramp(d), slope * b.cdf(d)};
        }
        if (t <= t_R - w_R) return {uB + slope * (t - t_delta), slope};
        if (t < t_R + w_R) {
            const double d = (t - t_R) / w_R;
            return {uA - slope * w_R * b.ramp(-d), slope * b.cdf(-d)};
        }
        return {uA, 0.0};
    }

    /// (psi, psi') at r from the table.
    std::pair<double, double> hermite(double x) const {
        if (x <= r.front()) return {psi.front(), 0.0};
        if (x >= r.back()) return {psi.back(), 0.0};
        const auto k = static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), x) - r.begin()) - 1;
        const double p0 = psi[k];
        const double p1 = psi[k + 1];
        const double m0 = dpsi[k];
        const double m1 = dpsi[k + 1];
        if (p0 == p1 && m0 == 0.0 && m1 == 0.0) return {p0, 0.0};
        const double h = r[k + 1] - r[k];
        const double s = (x - r[k]) / h;
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double value = (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * p1 +
                             (s3 - s2) * h * m1;
        const double deriv = ((6 * s2 - 6 * s) * p0 + (3 * s2 - 4 * s + 1) * h * m0 + (-6 * s2 + 6 * s) * p1 +
                              (3 * s2 - 2 * s) * h * m1) /
                             h;
        return {std::clamp(value, lo, hi), deriv};
    }
};

double sphere_area(int n) {
    if (n < 1) throw PreconditionError("sphere dimension must be at least 1");
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

double direction_moment(int n) {
    if (n < 1) throw PreconditionError("sphere dimension must be at least 1");
    return 2.0 * std::pow(std::numbers::pi, 0.5 * (n - 1)) * std::tgamma(0.5 * (n + 1)) / std::tgamma(n);
}

double log_profile_energy(int n, double R, double A, double B, double delta) {
    const double jump = std::fabs(std::log(B) - std::log(A));
    if (jump == 0.0) return 0.0;
    return sphere_area(n) * std::pow(jump, n) * std::pow(std::log(R / delta), 1 - n);
}

double log_profile_delta(int n, double R, double A, double B, double budget) {
    const double jump = std::fabs(std::log(B) - std::log(A));
    const double span = std::pow(sphere_area(n) * std::pow(jump, n) / budget, 1.0 / (n - 1));
    return R * std::exp(-span);
}

bool RadialProfile::tabulated() const { return backend_ && backend_->table; }

double RadialProfile::psi(double r) const {
    if (backend_->table) return backend_->hermite(r).first;
    if (A_ == B_) return A_;
    if (r <= inner_collar_.first) return B_;
    if (r >= outer_collar_.second) return A_;
    // exp(log A) can land one ulp outside [A, B].
    return std::clamp(std::exp(backend_->log_profile(std::log(r)).first), std::min(A_, B_), std::max(A_, B_));
}

double RadialProfile::dpsi(double r) const {
    if (backend_->table) return backend_->hermite(r).second;
    if (A_ == B_ || r <= inner_collar_.first || r >= outer_collar_.second) return 0.0;
    const auto [v, dv] = backend_->log_profile(std::log(r));
    return std::exp(v) * dv / r;
}

double RadialProfile::dlog_psi(double r) const {
    if (backend_->table) {
        const auto [p, dp] = backend_->hermite(r);
        return dp / p;
    }
    if (A_ == B_ || r <= inner_collar_.first || r >= outer_collar_.second) return 0.0;
    return backend_->log_profile(std::log(r)).second / r;
}

RadialProfile profile_with_delta(int n, double R, double A, double B, double delta, double eps_target) {
    if (n < 2) throw PreconditionError("radial profile needs n >= 2");
    require_positive(R, "R");
    require_positive(A, "A");
    require_positive(B, "B");
    require_positive(eps_target, "eps target");
    if (!(delta > 0.0 && delta < R)) throw PreconditionError("inner radius must satisfy 0 < delta < R");

    RadialProfile p;
    p.n_ = n;
    p.R_ = R;
    p.A_ = A;
    p.B_ = B;
    p.delta_ = delta;
    p.eps_target_ = eps_target;
    p.width_ = kCollarFraction * std::min(delta, R - delta);

    auto b = std::make_shared<RadialProfile::Backend>();
    b->uA = std::log(A);
    b->uB = std::log(B);
    b->t_delta = std::log(delta);
    b->t_R = std::log(R);
    b->slope = (b->uA - b->uB) / (b->t_R - b->t_delta);
    b->w_delta = std::log1p(p.width_ / delta);
    b->w_R = std::log1p(p.width_ / R);
    p.inner_collar_ = {delta * std::exp(-b->w_delta), delta * std::exp(b->w_delta)};
    p.outer_collar_ = {R * std::exp(-b->w_R), R * std::exp(b->w_R)};
    p.backend_ = std::move(b);
    return p;
}

RadialProfile construct_profile(int n, double R, double A, double B, double eps_target) {
    if (n < 2) throw PreconditionError("radial profile needs n >= 2");
    require_positive(R, "R");
    require_positive(A, "A");
    require_positive(B, "B");
    require_positive(eps_target, "eps target");

    std::vector<std::string> notes;
    if (n == 2) notes.emplace_back("n = 2 lies below the dimension range n >= 3 of the original statement");
    double delta = 0.5 * R;
    if (A == B) {
        notes.emplace_back("A = B: constant profile");
    } else {
        delta = log_profile_delta(n, R, A, B, 0.5 * eps_target);
        if (!(delta > 0.0)) throw PreconditionError("eps target too small: inner radius underflows");
        if (delta >= 0.5 * R) {
            notes.emplace_back("inner radius clamped to R/2; energy is below the budget");
            delta = 0.5 * R;
        }
    }
    RadialProfile p = profile_with_delta(n, R, A, B, delta, eps_target);
    p.notes_ = std::move(notes);
    return p;
}

// ---------------------------------------------------------------------------

bool CgwVerification::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CgwCheck& c) { return c.passed; });
}

CgwVerification verify_profile(const RadialProfile& profile, const CgwVerifyOptions& options) {
    const int n = profile.n();
    const auto [in_lo, in_hi] = profile.inner_collar();
    const auto [out_lo, out_hi] = profile.outer_collar();
    const double area = sphere_area(n);

    CgwVerification v;

    // Energy from u'(r) in r, piecewise across the collar joints.
    auto radial = [&](double r) { return std::pow(std::fabs(profile.dlog_psi(r)), n) * std::pow(r, n - 1); };
    const double breaks[] = {0.0, in_lo, in_hi, out_lo, out_hi, 2.0 * out_hi};
    double energy = 0.0;
    for (int k = 0; k + 1 < 6; ++k) {
        if (breaks[k + 1] > breaks[k]) energy += integrate_interval(radial, breaks[k], breaks[k + 1], options.cubature).value;
    }
    v.total_integral = area * energy;
    v.closed_form = log_profile_energy(n, profile.R(), profile.A(), profile.B(), profile.delta());

    // Direction moment by quadrature in the polar angle of S^(n-1).
    auto polar = [n](double theta) { return std::pow(std::fabs(std::cos(theta)), n) * std::pow(std::sin(theta), n - 2); };
    const double moment =
        (n == 2 ? 2.0 : sphere_area(n - 1)) * integrate_interval(polar, 0.0, std::numbers::pi, options.cubature).value;
    v.per_coordinate.assign(static_cast<std::size_t>(n), energy * moment);

    const double eps = profile.eps_target();
    v.checks.push_back({"total_integral", v.total_integral, eps, v.total_integral <= eps});
    const double coord = v.per_coordinate.front();
    v.checks.push_back({"per_coordinate_integral", coord, eps, coord <= eps});

    const double gap = v.closed_form > 0.0 ? std::fabs(v.total_integral - v.closed_form) / v.closed_form
                                           : std::fabs(v.total_integral);
    v.checks.push_back({"closed_form_agreement", gap, options.closed_form_tolerance, gap <= options.closed_form_tolerance});

    const int m = std::max(options.grid_points, 2);
    double inner_err = 0.0;
    double outer_err = 0.0;
    for (int k = 0; k < m; ++k) {
        const double s = static_cast<double>(k) / (m - 1);
        inner_err = std::max(inner_err, std::fabs(profile.psi(s * in_lo) - profile.B()));
        outer_err = std::max(outer_err, std::fabs(profile.psi(out_hi + s * profile.R()) - profile.A()));
    }
    v.checks.push_back({"boundary_value_inner", inner_err, 1e-12, inner_err <= 1e-12});
    v.checks.push_back({"boundary_value_outer", outer_err, 1e-12, outer_err <= 1e-12});

    const double lo = std::min(profile.A(), profile.B());
    const double hi = std::max(profile.A(), profile.B());
    double violation = 0.0;
    double slope_scale = 0.0;
    for (int k = 0; k < m; ++k) {
        const double r = 2.0 * out_hi * k / (m - 1);
        const double p = profile.psi(r);
        violation = std::max({violation, lo - p, p - hi});
        slope_scale = std::max(slope_scale, std::fabs(profile.dpsi(r)));
    }
    v.checks.push_back({"min_max_bounds", violation, 0.0, violation <= 0.0});

    // psi' has no jump across the joints and matches differences of psi.
    double jump = 0.0;
    double mismatch = 0.0;
    const double scale = std::max(slope_scale, 1e-300);
    for (double j : {in_lo, in_hi, out_lo, out_hi}) {
        const double h = 1e-9 * j;
        jump = std::max(jump, std::fabs(profile.dpsi(j + h) - profile.dpsi(j - h)) / scale);
        for (double x : {j * (1 - 1e-3), j, j * (1 + 1e-3)}) {
            const double step = 1e-6 * x;
            const double fd = (profile.psi(x + step) - profile.psi(x - step)) / (2 * step);
            mismatch = std::max(mismatch, std::fabs(fd - profile.dpsi(x)) / scale);
        }
    }
    v.checks.push_back({"c1_joint_jump", jump, 1e-6, jump <= 1e-6});
    v.checks.push_back({"derivative_consistency", mismatch, 1e-5, mismatch <= 1e-5});
    return v;
}

ScalarField as_field(const RadialProfile& profile) {
    const int n = profile.n();
    auto norm = [](std::span<const double> x) {
        double s = 0.0;
        for (double c : x) s += c * c;
        return std::sqrt(s);
    };
    ScalarField::ValueFn value = [profile, norm](std::span<const double> x) { return profile.psi(norm(x)); };
    ScalarField::ValueGradFn value_grad = [profile, norm](std::span<const double> x, std::span<double> g) {
        const double r = norm(x);
        const double d = r > 0.0 ? profile.dpsi(r) / r : 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = d * x[i];
        return profile.psi(r);
    };
    return ScalarField(n, std::move(value), std::move(value_grad)).with_description("cgw-profile");
}

// ---------------------------------------------------------------------------

void write_profile_csv(std::ostream& out, const RadialProfile& profile, int samples) {
    if (samples < 16) throw PreconditionError("profile export needs at least 16 samples");
    const auto [in_lo, in_hi] = profile.inner_collar();
    const auto [out_lo, out_hi] = profile.outer_collar();
    out << "# profile: n=" << profile.n() << " R=" << format_double(profile.R()) << " A=" << format_double(profile.A())
        << " B=" << format_double(profile.B()) << " delta=" << format_double(profile.delta())
        << " eps_target=" << format_double(profile.eps_target()) << "\n";
    out << "r,psi,dpsi\n";

    std::vector<double> rs;
    auto segment = [&rs](double a, double b, int count, bool logarithmic) {
        for (int k = 0; k < count; ++k) {
            const double s = static_cast<double>(k) / count;
            rs.push_back(logarithmic ? a * std::exp(s * std::log(b / a)) : a + s * (b - a));
        }
    };
    const int part = samples / 8;
    segment(0.0, in_lo, part, false);
    segment(in_lo, in_hi, 2 * part, false);
    segment(in_hi, out_lo, 2 * part, true);
    segment(out_lo, out_hi, 2 * part, false);
    segment(out_hi, 2.0 * profile.R(), samples - 7 * part - 1, false);
    rs.push_back(2.0 * profile.R());
    rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
    for (double r : rs) {
        out << format_double(r) << ',' << format_double(profile.psi(r)) << ',' << format_double(profile.dpsi(r))
            << '\n';
    }
    if (!out) throw Error("failed to write profile CSV");
}

RadialProfile read_profile_csv(std::istream& in) {
    std::string line;
    std::map<std::string, double> meta;
    bool have_header = false;
    auto b = std::make_shared<RadialProfile::Backend>();
    b->table = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::string tag = "# profile:";
            if (line.rfind(tag, 0) == 0) {
                std::istringstream fields(line.substr(tag.size()));
                std::string kv;
                while (fields >> kv) {
                    const auto eq = kv.find('=');
                    if (eq == std::string::npos) throw Error("malformed profile metadata '" + kv + "'");
                    meta[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
                }
            }
            continue;
        }
        if (!have_header) {
            if (line != "r,psi,dpsi") throw Error("profile CSV header must be 'r,psi,dpsi'");
            have_header = true;
            continue;
        }
        double vals[3];
        std::istringstream row(line);
        std::string cell;
        for (double& v : vals) {
            if (!std::getline(row, cell, ',')) throw Error("profile CSV line " + std::to_string(line_no) + " has too few columns");
            try {
                v = std::stod(cell);
            } catch (const std::exception&) {
                throw Error("profile CSV line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
        }
        if (!b->r.empty() && !(vals[0] > b->r.back())) {
            throw Error("profile CSV radii must increase (line " + std::to_string(line_no) + ")");
        }
        b->r.push_back(vals[0]);
        b->psi.push_back(vals[1]);
        b->dpsi.push_back(vals[2]);
    }
    for (const char* key : {"n", "R", "A", "B", "delta", "eps_target"}) {
        if (!meta.count(key)) throw Error(std::string("profile CSV metadata lacks '") + key + "'");
    }
    if (b->r.size() < 2) throw Error("profile CSV needs at least two rows");

    // Geometry (collars, width) comes from the analytic construction.
    RadialProfile p = profile_with_delta(static_cast<int>(meta["n"]), meta["R"], meta["A"], meta["B"], meta["delta"],
                                         meta["eps_target"]);
    b->lo = std::min(p.A_, p.B_);
    b->hi = std::max(p.A_, p.B_);
    p.backend_ = std::move(b);
    return p;
}

} // namespace blowup
