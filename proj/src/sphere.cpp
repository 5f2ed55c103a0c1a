#include "blowup/sphere.hpp"

#include "blowup/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace blowup {

namespace {

double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base);
    double f = inv;
    double r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

void normalize(std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    const double inv = 1.0 / std::sqrt(s);
    for (double& x : v) x *= inv;
}

} // namespace

std::vector<std::vector<double>> sphere_directions(int n, int count, std::uint64_t seed) {
    if (n < 1) throw PreconditionError("sphere dimension must be at least 1");
    if (count < 1) throw PreconditionError("direction count must be at least 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(count));
    if (n == 1) {
        for (int k = 0; k < count; ++k) out.push_back({k % 2 == 0 ? 1.0 : -1.0});
        return out;
    }
    if (n == 2) {
        const double shift = unit(rng);
        for (int k = 0; k < count; ++k) {
            const double theta = 2.0 * std::numbers::pi * (k + shift) / count;
            out.push_back({std::cos(theta), std::sin(theta)});
        }
        return out;
    }
    if (n == 3) {
        const double shift = unit(rng);
        const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int k = 0; k < count; ++k) {
            const double z = 1.0 - (2.0 * k + 1.0) / count;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            double frac = k * golden + shift;
            frac -= std::floor(frac);
            const double phi = 2.0 * std::numbers::pi * frac;
            std::vector<double> v{rho * std::cos(phi), rho * std::sin(phi), z};
            normalize(v);
            out.push_back(std::move(v));
        }
        return out;
    }
    if (n > 16) throw PreconditionError("sphere directions support n <= 16");
    // Pairs of Halton coordinates become pairs of Gaussians.
    const int halton_dims = n + (n % 2);
    std::vector<double> shifts(static_cast<std::size_t>(halton_dims));
    for (double& s : shifts) s = unit(rng);
    for (int k = 0; k < count; ++k) {
        std::vector<double> u(static_cast<std::size_t>(halton_dims));
        for (int d = 0; d < halton_dims; ++d) {
            double v = radical_inverse(static_cast<std::uint64_t>(k) + 1, kPrimes[d]) + shifts[d];
            v -= std::floor(v);
            u[d] = v;
        }
        std::vector<double> g(static_cast<std::size_t>(n));
        for (int d = 0; d + 1 < halton_dims; d += 2) {
            const double radius = std::sqrt(-2.0 * std::log(1.0 - u[d]));
            const double angle = 2.0 * std::numbers::pi * u[d + 1];
            g[d] = radius * std::cos(angle);
            if (d + 1 < n) g[d + 1] = radius * std::sin(angle);
        }
        normalize(g);
        out.push_back(std::move(g));
    }
    return out;
}

} // namespace blowup
