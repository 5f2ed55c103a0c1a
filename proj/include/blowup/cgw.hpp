#pragma once

// Positive radial profiles psi = exp(u) that interpolate two constants with
// a small conformal energy: the integral of |grad log psi|^n over R^n.

#include "blowup/cubature.hpp"
#include "blowup/fields.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace blowup {

/// Surface area of the unit sphere S^(n-1) in R^n.
double sphere_area(int n);

/// Integral of |w_i|^n over S^(n-1), the same for every coordinate i.
double direction_moment(int n);

/// Conformal energy of the unmollified logarithmic profile:
/// area(S^(n-1)) |log B - log A|^n (ln(R/delta))^(1-n).
double log_profile_energy(int n, double R, double A, double B, double delta);

/// Inner radius delta giving log_profile_energy = budget (no clamping).
double log_profile_delta(int n, double R, double A, double B, double budget);

/// Collar width in r as a fraction of min(delta, R - delta).
inline constexpr double kCollarFraction = 1.0 / 20.0;

class RadialProfile {
public:
    struct Backend;

    int n() const { return n_; }
    double R() const { return R_; }
    double A() const { return A_; }
    double B() const { return B_; }
    double delta() const { return delta_; }
    /// Mollification width w in r.
    double width() const { return width_; }
    double eps_target() const { return eps_target_; }
    const std::vector<std::string>& notes() const { return notes_; }
    bool tabulated() const;

    /// [lo, hi] in r of the inner (around delta) and outer (around R)
    /// mollification collars. Outside them psi is exactly B or A.
    std::pair<double, double> inner_collar() const { return inner_collar_; }
    std::pair<double, double> outer_collar() const { return outer_collar_; }

    double psi(double r) const;
    double dpsi(double r) const;
    /// u'(r) = psi'(r) / psi(r).
    double dlog_psi(double r) const;

private:
    friend RadialProfile profile_with_delta(int, double, double, double, double, double);
    friend RadialProfile read_profile_csv(std::istream&);
    friend RadialProfile construct_profile(int, double, double, double, double);

    int n_ = 0;
    double R_ = 0.0;
    double A_ = 0.0;
    double B_ = 0.0;
    double delta_ = 0.0;
    double width_ = 0.0;
    double eps_target_ = 0.0;
    std::pair<double, double> inner_collar_{};
    std::pair<double, double> outer_collar_{};
    std::vector<std::string> notes_;
    std::shared_ptr<const Backend> backend_;
};

/// Logarithmic profile with energy at most eps_target / 2 before mollification.
///
/// A = B gives the constant profile (delta = R/2). When the budget would put
/// delta at or above R/2, delta is clamped to R/2. n = 2 is accepted with a note.
RadialProfile construct_profile(int n, double R, double A, double B, double eps_target);

/// Same construction with an explicit inner radius, 0 < delta < R.
RadialProfile profile_with_delta(int n, double R, double A, double B, double delta, double eps_target);

struct CgwCheck {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool passed = false;
};

struct CgwVerifyOptions {
    CubatureOptions cubature{1e-10, 0.0, 200000, 0};
    /// Radial grid for the min/max and boundary-value checks.
    int grid_points = 10000;
    /// Allowed relative gap between the re-integrated energy and the
    /// unmollified closed form.
    double closed_form_tolerance = 0.01;
};

struct CgwVerification {
    /// Re-integrated energy of the profile over all of R^n.
    double total_integral = 0.0;
    /// Closed form of the unmollified profile with the same delta.
    double closed_form = 0.0;
    /// Integral of |psi^-1 d psi / d x_i|^n, i = 1..n.
    std::vector<double> per_coordinate;
    std::vector<CgwCheck> checks;

    bool all_passed() const;
};

CgwVerification verify_profile(const RadialProfile& profile, const CgwVerifyOptions& options = {});

/// x -> psi(|x|) on R^n.
ScalarField as_field(const RadialProfile& profile);

/// CSV with columns r,psi,dpsi preceded by a "# profile:" metadata line.
void write_profile_csv(std::ostream& out, const RadialProfile& profile, int samples = 4001);

/// Loads a profile written by write_profile_csv. Values between rows are
/// cubic Hermite interpolants of (psi, dpsi).
RadialProfile read_profile_csv(std::istream& in);

} // namespace blowup
