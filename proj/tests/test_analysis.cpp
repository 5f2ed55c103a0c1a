#include "blowup/analysis.hpp"
#include "blowup/error.hpp"
#include "blowup/sphere.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace blowup;

namespace {

const ExcisionFamily kFamily{1e-2, 0.1, 5};

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

} // namespace

TEST_CASE("cauchy tail") {
    IntegralSeries s;
    s.points = {{1e-1, 1.0, 0.0, true}, {1e-2, 2.0, 0.0, true}, {1e-3, 2.002, 0.0, true}};
    CHECK(cauchy_tail(s) == doctest::Approx(0.002 / 2.002).epsilon(1e-12));
}

TEST_CASE("sobolev: log|x| on (-1,1) has L1 norm 2 but is not in W^{1,1}") {
    const auto x = ScalarField::from_source("x1", 1);
    const Domain line(Box{{-1.0}, {1.0}});
    const auto r = sobolev_check(x, std::vector<double>{0.0}, 1.0, line, kFamily);
    CHECK(r.log_norm == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(r.grad_diagnosis.classification == Classification::DivergentLog);
    CHECK(r.grad_diagnosis.b == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(r.verdict == Verdict::NonMember);
    CHECK(r.zero_cells >= 1);

    // Verdict invariant under scaling and squaring.
    CHECK(sobolev_check(scale_field(x, -3.0), std::vector<double>{0.0}, 1.0, line, kFamily).verdict ==
          Verdict::NonMember);
    CHECK(sobolev_check(square_field(x), std::vector<double>{0.0}, 1.0, line, kFamily).verdict == Verdict::NonMember);
}

TEST_CASE("sobolev: zero-free field is a member") {
    const auto f = ScalarField::from_source("2+sin(x1)", 2);
    const auto disk = Domain::parse("ball:0,0:1");
    for (double p : {1.0, 2.0, 3.0}) {
        const auto r = sobolev_check(f, std::nullopt, p, disk, kFamily);
        CHECK(r.verdict == Verdict::Member);
        CHECK(r.zero_cells == 0);
        CHECK(std::isfinite(r.log_norm));
    }
}

TEST_CASE("sobolev: |x|^2 at the origin is not in W^{1,n}") {
    const auto f = ScalarField::from_source("x1^2+x2^2", 2);
    const auto r = sobolev_check(f, std::vector<double>{0.0, 0.0}, 2.0, Domain::parse("ball:0,0:1"), kFamily);
    CHECK(r.verdict == Verdict::NonMember);
    CHECK(r.grad_diagnosis.classification == Classification::DivergentLog);
    CHECK(rel(r.grad_diagnosis.b, 4.0 * std::numbers::pi) < 1e-6);
}

TEST_CASE("sobolev preconditions") {
    const auto f = ScalarField::from_source("x1", 1);
    const Domain line(Box{{-1.0}, {1.0}});
    CHECK_THROWS_AS(sobolev_check(f, std::vector<double>{0.0}, 0.5, line, kFamily), PreconditionError);
    CHECK_THROWS_AS(sobolev_check(f, std::vector<double>{2.0}, 1.0, line, kFamily), PreconditionError);
    CHECK_THROWS_AS(sobolev_check(f, std::vector<double>{0.0, 0.0}, 1.0, line, kFamily), PreconditionError);
}

TEST_CASE("critical exponent: bracket validation") {
    const auto x1 = ScalarField::from_source("x1", 2);
    const auto disk = Domain::parse("ball:0,0:1");
    CHECK_THROWS_AS(critical_exponent(x1, disk, 1.5, 2.5, 0.05), PreconditionError);
    CHECK_THROWS_AS(critical_exponent(x1, disk, 0.2, 0.5, 0.05), PreconditionError);
    CHECK_THROWS_AS(critical_exponent(x1, disk, 2.0, 1.0, 0.05), PreconditionError);
}

TEST_CASE("critical exponent of |x|^2 in 2D") {
    const auto r = critical_exponent(ScalarField::from_source("x1^2+x2^2", 2), Domain::parse("ball:0,0:1"), 0.5, 3.0,
                                     0.05);
    CHECK(std::fabs(r.p_star - 2.0) <= 0.1);
    CHECK(r.p_star <= 2.0 + 0.05);
    CHECK(r.hi - r.lo <= 0.05);
    CHECK(r.lo < r.hi);
    for (const auto& [p, d] : r.probes) {
        if (p < r.lo + 1e-15) CHECK_FALSE(is_divergent(d.classification));
        if (p > r.hi - 1e-15) CHECK(d.classification != Classification::Convergent);
    }
}

TEST_CASE("ray integrals against closed forms") {
    const auto r2 = ScalarField::from_source("x1^2+x2^2", 2);
    const auto disk = Domain::parse("ball:0,0:1");
    const std::vector<double> o{0.0, 0.0};
    for (double t : {0.0, 0.7, 2.0}) {
        const std::vector<double> w{std::cos(t), std::sin(t)};
        CHECK(rel(ray_integral(r2, disk, o, w, 2.0, 0.01).value, 4.0 * std::log(100.0)) < 1e-8);
    }
    const auto x1 = ScalarField::from_source("x1", 2);
    CHECK(ray_integral(x1, disk, o, std::vector<double>{0.0, 1.0}, 2.0, 0.01).value == 0.0);
    CHECK(rel(ray_integral(x1, disk, o, std::vector<double>{1.0, 0.0}, 2.0, 0.01).value, std::log(100.0)) < 1e-8);
    CHECK_THROWS_AS(ray_integral(x1, disk, std::vector<double>{0.5, 0.0}, std::vector<double>{1.0, 0.0}, 2.0, 0.01),
                    PreconditionError);
    CHECK_THROWS_AS(ray_integral(x1, disk, o, std::vector<double>{1.0, 1.0}, 2.0, 0.01), PreconditionError);
}

TEST_CASE("sphere directions are unit vectors and seed-stable") {
    for (int n : {1, 2, 3, 4, 6}) {
        const auto d = sphere_directions(n, 64, 42);
        REQUIRE(d.size() == 64);
        for (const auto& w : d) {
            double s = 0.0;
            for (double c : w) s += c * c;
            CHECK(std::fabs(std::sqrt(s) - 1.0) <= 1e-12);
        }
        CHECK(sphere_directions(n, 64, 42) == d);
    }
    CHECK(sphere_directions(3, 8, 1) != sphere_directions(3, 8, 2));
}

TEST_CASE("ray survey of x1: every non-axis ray diverges") {
    const std::vector<double> o{0.0, 0.0};
    const auto rep = ray_survey(ScalarField::from_source("x1", 2), Domain::parse("ball:0,0:1"), o, 64, 2.0, kFamily);
    std::size_t off_axis = 0;
    for (std::size_t k = 0; k < rep.directions.size(); ++k) {
        const bool crosses = std::fabs(rep.directions[k][0]) > 1e-12;
        off_axis += crosses;
        CHECK(is_divergent(rep.diagnoses[k].classification) == crosses);
    }
    CHECK(rep.divergent_count() == off_axis);
    CHECK(rep.divergent_fraction() == doctest::Approx(static_cast<double>(off_axis) / 64.0));
}

TEST_CASE("ray survey rescales to the largest inner ball") {
    const std::vector<double> c{1.0, 1.0};
    const auto rep = ray_survey(ScalarField::from_source("(x1-1)^2+(x2-1)^2", 2), Domain::parse("box:0,0:1.5,3"), c, 8,
                                2.0, kFamily);
    CHECK(rep.radius == 0.5);
    CHECK(rep.divergent_count() == 8);
    for (const auto& d : rep.diagnoses) CHECK(d.classification == Classification::DivergentLog);
}

TEST_CASE("multiplier and its series") {
    CHECK(multiplier(ScalarField::from_source("x1^2", 1), 0.25, 2.0) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(multiplier(ScalarField::from_source("x1", 1), 0.5, 1.0) == doctest::Approx(2.0).epsilon(1e-14));

    const ExcisionFamily e_levels{std::exp(-1.0), std::exp(-1.0), 5};
    const auto r = minimal_multiplier(ScalarField::from_source("x1", 1), 1.0, e_levels);
    for (const auto& pt : r.series.points) CHECK(rel(pt.value, std::log(1.0 / pt.eps)) < 1e-9);
    CHECK(r.diagnosis.classification == Classification::DivergentLog);

    const auto zero = minimal_multiplier(ScalarField::from_source("0*x1", 1), 1.0, kFamily);
    for (const auto& pt : zero.series.points) CHECK(pt.value == 0.0);
    CHECK_FALSE(is_divergent(zero.diagnosis.classification));

    CHECK_THROWS_AS(minimal_multiplier(ScalarField::from_source("x1+1", 1), 1.0, kFamily), PreconditionError);
    CHECK_THROWS_AS(minimal_multiplier(ScalarField::from_source("x1", 1), 0.5, kFamily), PreconditionError);
}

TEST_CASE("property: multiplier series diverge for nonzero polynomials vanishing at 0") {
    for (const std::string phi : {"x1", "x1^2", "x1^3+x1", "2*x1+x1^4", "x1^2*(1+x1)"}) {
        for (double p : {1.0, 2.0, 3.0}) {
            CAPTURE(phi);
            CAPTURE(p);
            const auto r = minimal_multiplier(ScalarField::from_source(phi, 1), p, kFamily);
            CHECK(is_divergent(r.diagnosis.classification));
            CHECK_NOTHROW(r.series.check_monotone());
        }
    }
}

TEST_CASE("ode uniqueness simulation") {
    const auto one = ode_uniqueness_sim(ScalarField::from_source("1", 1), 0.0, 1e-2, 1.0);
    CHECK(one.sup_abs_f == 0.0);
    CHECK(one.v_in_lloc);
    CHECK(one.steps == 200);

    const auto inv = ode_uniqueness_sim(ScalarField::from_source("1/abs(x1)", 1), 0.0, 1e-3, 1.0);
    CHECK_FALSE(inv.v_in_lloc);
    CHECK(inv.lloc_diagnosis.classification == Classification::DivergentLog);
    // 1/|x| on both sides: slope 2 in ln(1/rho).
    CHECK(inv.lloc_diagnosis.b == doctest::Approx(2.0).epsilon(1e-6));
    // The seeded run follows f = x - x0 (relative to the seed it grows by 1/seed).
    CHECK(inv.seeded_endpoint > 100.0 * inv.seed);

    const auto half = ode_uniqueness_sim(ScalarField::from_source("abs(x1)^(-0.5)", 1), 0.0, 1e-3, 1.0);
    CHECK(half.sup_abs_f <= 1e-10);
    CHECK(half.v_in_lloc);

    CHECK_THROWS_AS(ode_uniqueness_sim(ScalarField::from_source("x1", 1), 0.0, 1e-2, 1.0), PreconditionError);
    CHECK_THROWS_AS(ode_uniqueness_sim(ScalarField::from_source("1", 1), 0.0, 0.0, 1.0), PreconditionError);
    CHECK_THROWS_AS(ode_uniqueness_sim(ScalarField::from_source("1", 2), 0.0, 1e-2, 1.0), PreconditionError);
}

TEST_CASE("squared gradient at a zero") {
    const std::vector<double> hs{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    for (const auto& g : squared_gradient_at_zero(ScalarField::from_source("abs(x1)", 1), std::vector<double>{0.0}, hs)) {
        CHECK(g.norm == 0.0);
    }
    for (const auto& g : squared_gradient_at_zero(ScalarField::from_source("max(abs(x1),abs(x2))", 2),
                                                  std::vector<double>{0.0, 0.0}, hs)) {
        CHECK(g.norm <= 2.0 * g.h);
    }
    for (const auto& g :
         squared_gradient_at_zero(ScalarField::from_source("x1+x2", 2), std::vector<double>{1.0, -1.0}, hs)) {
        CHECK(g.norm <= 1e-12);
    }
    // A kink at the zero: f = |x1| + x1 / 2, f^2 has derivative 0 at 0 but
    // the central difference is of order h.
    const auto kink = squared_gradient_at_zero(ScalarField::from_source("abs(x1)+0.5*x1", 1), std::vector<double>{0.0}, hs);
    for (const auto& g : kink) CHECK(g.norm == doctest::Approx(g.h).epsilon(1e-6));
    const auto order = observed_order(kink);
    REQUIRE(order.has_value());
    CHECK(*order == doctest::Approx(1.0).epsilon(1e-6));

    CHECK_FALSE(observed_order(std::vector<GradientNorm>{{1e-1, 0.0}, {1e-2, 0.0}}).has_value());
    CHECK_THROWS_AS(squared_gradient_at_zero(ScalarField::from_source("x1+1", 1), std::vector<double>{0.0}, hs),
                    PreconditionError);
}
