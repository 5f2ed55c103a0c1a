#include "blowup/error.hpp"
#include "blowup/fields.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <vector>

using namespace blowup;

namespace {

// Brute-force enumeration of grid cells on a box whose closure meets the
// zero set, for fields with a known zero set.
std::set<std::vector<int>> cells_meeting(const Box& b, int res, auto meets) {
    std::set<std::vector<int>> out;
    for (int i = 0; i < res; ++i) {
        for (int j = 0; j < res; ++j) {
            const double x0 = b.lo[0] + (b.hi[0] - b.lo[0]) * i / res;
            const double x1 = b.lo[0] + (b.hi[0] - b.lo[0]) * (i + 1) / res;
            const double y0 = b.lo[1] + (b.hi[1] - b.lo[1]) * j / res;
            const double y1 = b.lo[1] + (b.hi[1] - b.lo[1]) * (j + 1) / res;
            if (meets(x0, x1, y0, y1)) out.insert({i, j});
        }
    }
    return out;
}

std::set<std::vector<int>> reported(const ZeroCellReport& r) {
    std::set<std::vector<int>> out;
    for (const auto& c : r.cells) out.insert(c.index);
    return out;
}

} // namespace

TEST_CASE("domain parsing and round trip") {
    const auto b = Domain::parse("box:-1,0:1,2");
    CHECK(b.is_box());
    CHECK(b.dimension() == 2);
    CHECK(b.volume() == 4.0);
    CHECK(Domain::parse(b.to_string()).to_string() == b.to_string());

    const auto ball = Domain::parse("ball:0.1,0.2,0.3:0.7");
    CHECK(ball.is_ball());
    CHECK(ball.dimension() == 3);
    CHECK(ball.ball().radius == 0.7);
    CHECK(Domain::parse(ball.to_string()).ball().center == ball.ball().center);
    CHECK(ball.contains(std::vector<double>{0.1, 0.2, 0.99}));
    CHECK_FALSE(ball.contains(std::vector<double>{0.1, 0.2, 1.01}));

    CHECK_THROWS_AS(Domain::parse("box:1:0"), PreconditionError);
    CHECK_THROWS_AS(Domain::parse("ball:0,0:-1"), PreconditionError);
    CHECK_THROWS_AS(Domain::parse("disc:0,0:1"), PreconditionError);
    CHECK_THROWS_AS(Domain::parse("box:0,0:1"), PreconditionError);
    CHECK_THROWS_AS(Domain::parse("ball:0,0:1,2"), PreconditionError);
    CHECK_THROWS_AS(Domain::parse("box:a:1"), PreconditionError);
}

TEST_CASE("quotient V examples") {
    const auto f = ScalarField::from_source("x1^2+x2^2", 2);
    CHECK(quotient_V(f, std::vector<double>{0.5, 0.0}, 1e-12) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(quotient_V(f, std::vector<double>{0.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(quotient_V(ScalarField::from_source("sqrt(x1)", 1), std::vector<double>{-1.0}), DomainError);
}

TEST_CASE("mapping quotient examples") {
    const VectorMapping id({ScalarField::from_source("x1", 2), ScalarField::from_source("x2", 2)});
    CHECK(mapping_quotient(id, std::vector<double>{0.6, 0.8}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(mapping_quotient(id, std::vector<double>{0.0, 0.0}) == 0.0);

    const auto f = ScalarField::from_source("sin(x1)+x2^2", 2);
    const VectorMapping single({f});
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 50; ++k) {
        const std::vector<double> x{u(rng), u(rng)};
        CHECK(mapping_quotient(single, x) == doctest::Approx(quotient_V(f, x)).epsilon(1e-15));
    }
    CHECK_THROWS_AS(VectorMapping({}), PreconditionError);
    CHECK_THROWS_AS(VectorMapping({ScalarField::from_source("x1", 1), ScalarField::from_source("x1", 2)}),
                    PreconditionError);
}

TEST_CASE("zero probe against direct enumeration") {
    const Box sq{{-1.0, -1.0}, {1.0, 1.0}};
    const Domain dom(sq);

    const auto line = zero_set_probe(ScalarField::from_source("x1", 2), dom, 8);
    CHECK(line.cells.size() == 8);
    // The zero line x1 = 0 is the grid line of vertex 4; half-open
    // ownership gives it to column 4.
    auto expected = cells_meeting(sq, 8, [](double x0, double, double, double) { return x0 == 0.0; });
    CHECK(reported(line) == expected);

    const auto origin = zero_set_probe(ScalarField::from_source("x1^2+x2^2", 2), dom, 8);
    expected = cells_meeting(sq, 8, [](double x0, double, double y0, double) { return x0 == 0.0 && y0 == 0.0; });
    CHECK(reported(origin) == expected);
    REQUIRE(origin.cells.size() == 1);
    CHECK(origin.cells[0].lo == std::vector<double>{0.0, 0.0});

    // Odd resolution: the zero is strictly inside a column and found by a sign change.
    const auto odd = zero_set_probe(ScalarField::from_source("x1-0.1", 2), dom, 7);
    expected = cells_meeting(sq, 7, [](double x0, double x1, double, double) { return x0 < 0.1 && 0.1 < x1; });
    CHECK(reported(odd) == expected);

    CHECK(zero_set_probe(ScalarField::from_source("2+sin(x1)", 2), dom, 8).cells.empty());
    CHECK_THROWS_AS(zero_set_probe(ScalarField::from_source("x1", 2), dom, 1), PreconditionError);
}

TEST_CASE("property: zero probe cells intersect a ball domain") {
    const auto dom = Domain::parse("ball:0,0:1");
    const auto r = zero_set_probe(ScalarField::from_source("x1+x2", 2), dom, 16);
    CHECK_FALSE(r.cells.empty());
    for (const auto& c : r.cells) {
        // Closest point of the cell to the centre lies inside the ball.
        double d2 = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double q = std::clamp(0.0, c.lo[i], c.hi[i]);
            d2 += q * q;
        }
        CHECK(d2 <= 1.0 + 1e-12);
    }
}

TEST_CASE("square field") {
    const auto g = square_field(ScalarField::from_source("abs(x1)", 1));
    CHECK(g.value(std::vector<double>{0.5}) == 0.25);
    CHECK(g.gradient(std::vector<double>{0.0})[0] == 0.0);

    const auto r4 = square_field(ScalarField::from_source("x1^2+x2^2", 2));
    CHECK(quotient_V(r4, std::vector<double>{0.5, 0.0}) == doctest::Approx(8.0).epsilon(1e-15));
}

TEST_CASE("property: scaling and squaring identities of V") {
    const auto f = ScalarField::from_source("sin(3*x1)*x2 + 0.2*x2^3 - x1", 2);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const std::vector<double> x{u(rng), u(rng)};
        const double v = quotient_V(f, x);
        for (double c : {0.1, 3.0, -2.0, 1e6}) {
            CHECK(quotient_V(scale_field(f, c), x) == doctest::Approx(v).epsilon(1e-14));
        }
        CHECK(quotient_V(square_field(f), x) == doctest::Approx(2.0 * v).epsilon(1e-14));
    }
}

TEST_CASE("shift and pullback") {
    const auto f = ScalarField::from_source("x1^2+x2", 2);
    const std::vector<double> a{1.0, 2.0};
    const auto s = shift_field(f, a);
    CHECK(s.value(a) == 0.0);
    CHECK(s.value(std::vector<double>{0.0, 0.0}) == -3.0);

    const auto pb = affine_pullback(f, a, 0.5);
    const std::vector<double> u{0.2, -0.4};
    const std::vector<double> x{1.1, 1.8};
    CHECK(pb.value(u) == doctest::Approx(f.value(x)).epsilon(1e-15));
    const auto gu = pb.gradient(u);
    const auto gx = f.gradient(x);
    CHECK(gu[0] == doctest::Approx(0.5 * gx[0]).epsilon(1e-15));
    CHECK(gu[1] == doctest::Approx(0.5 * gx[1]).epsilon(1e-15));
    CHECK_THROWS_AS(affine_pullback(f, a, 0.0), PreconditionError);
}

TEST_CASE("McShane extension") {
    const auto one = mcshane_extend({Sample{{0.0, 0.0}, 0.0}}, 1.0);
    CHECK(one.value(std::vector<double>{3.0, 4.0}) == 5.0);

    CHECK_THROWS_AS(mcshane_extend({Sample{{0.0}, 0.0}, Sample{{1.0}, 2.0}}, 1.0), PreconditionError);
    try {
        mcshane_extend({Sample{{0.0}, 0.0}, Sample{{0.5}, 0.1}, Sample{{1.0}, 2.0}}, 1.0);
        FAIL("expected incompatible samples");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("samples 0 and 2") != std::string::npos);
    }

    const auto two = mcshane_extend({Sample{{0.0}, 0.0}, Sample{{2.0}, 0.0}}, 1.0);
    CHECK(two.value(std::vector<double>{1.0}) == 1.0);
    CHECK(two.value(std::vector<double>{0.0}) == 0.0);
    CHECK(two.value(std::vector<double>{2.0}) == 0.0);
    // Tie at x = 1 goes to the lowest index (slope +1 away from sample 0).
    CHECK(two.gradient(std::vector<double>{1.0})[0] == 1.0);

    // Pairwise grid check, 100 points.
    const Domain line(Box{{-1.0}, {3.0}});
    CHECK(grid_lipschitz_estimate(two, line, 100) <= 1.0 + 1e-9);
}

TEST_CASE("property: McShane extensions are L-Lipschitz and interpolate") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto target = ScalarField::from_source("sin(2*x1)+0.5*x2", 2);  // Lipschitz constant <= sqrt(4.25)
    const double L = std::sqrt(4.25);
    std::vector<Sample> samples;
    for (int k = 0; k < 25; ++k) {
        std::vector<double> p{u(rng), u(rng)};
        samples.push_back(Sample{p, target.value(p)});
    }
    const auto ext = mcshane_extend(samples, L);
    for (const auto& s : samples) CHECK(ext.value(s.point) == doctest::Approx(s.value).epsilon(1e-15));
    CHECK(grid_lipschitz_estimate(ext, Domain::parse("box:-1.5,-1.5:1.5,1.5"), 10) <= L + 1e-9);
}

TEST_CASE("sample CSV") {
    std::istringstream ok("x1,x2,value\n0,0,1\n1,0.5,2\n");
    const auto s = read_samples_csv(ok);
    REQUIRE(s.size() == 2);
    CHECK(s[1].point == std::vector<double>{1.0, 0.5});
    CHECK(s[1].value == 2.0);

    std::istringstream bad_header("a,b,value\n0,0,1\n");
    CHECK_THROWS_AS(read_samples_csv(bad_header), PreconditionError);
    std::istringstream bad_row("x1,value\n0,1,2\n");
    CHECK_THROWS_AS(read_samples_csv(bad_row), PreconditionError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_samples_csv(empty), PreconditionError);
}
