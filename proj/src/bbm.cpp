#include "blowup/error.hpp"
#include "blowup/quad.hpp"

#include <cmath>
#include <random>

namespace blowup {

BbmResult bbm_estimate(const ScalarField& field, const Domain& domain, double h, const BbmOptions& options) {
    if (!(h > 0.0)) throw PreconditionError("BBM cutoff h must be positive");
    if (options.strata_per_axis < 1) throw PreconditionError("BBM needs at least one stratum per axis");
    const int n = domain.dimension();
    if (field.dimension() != n) throw PreconditionError("field and domain dimensions differ");

    // Largest s <= requested with s^(2n) <= max_strata.
    auto total_for = [n](std::uint64_t s) {
        std::uint64_t t = 1;
        for (int i = 0; i < 2 * n; ++i) {
            if (t > (std::uint64_t{1} << 62) / s) return std::uint64_t{~0ULL};
            t *= s;
        }
        return t;
    };
    std::uint64_t strata = static_cast<std::uint64_t>(options.strata_per_axis);
    while (strata > 1 && total_for(strata) > options.max_strata) --strata;
    const std::uint64_t total = total_for(strata);

    BbmResult result;
    result.strata_per_axis = static_cast<int>(strata);
    result.full_resolution = strata == static_cast<std::uint64_t>(options.strata_per_axis);
    result.samples = total;

    const Box bb = domain.bounding_box();
    double box_volume = 1.0;
    for (int i = 0; i < n; ++i) box_volume *= bb.hi[i] - bb.lo[i];

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> first(static_cast<std::size_t>(n));
    std::vector<double> second(static_cast<std::size_t>(n));
    const double inv_strata = 1.0 / static_cast<double>(strata);
    const double exponent = n + 1.0;

    // Partial sums per block keep the reduction order fixed and the
    // accumulated magnitudes comparable.
    std::vector<double> block_sums;
    std::vector<double> block_sq;
    double block = 0.0;
    double block_dev = 0.0;
    double previous = 0.0;
    constexpr std::uint64_t kBlock = 4096;

    for (std::uint64_t t = 0; t < total; ++t) {
        std::uint64_t rem = t;
        for (int i = 0; i < 2 * n; ++i) {
            const double digit = static_cast<double>(rem % strata);
            rem /= strata;
            const double u = (digit + unit(rng)) * inv_strata;
            const int axis = i % n;
            const double coord = bb.lo[axis] + u * (bb.hi[axis] - bb.lo[axis]);
            (i < n ? first : second)[axis] = coord;
        }
        const auto& x = options.swap_order ? second : first;
        const auto& y = options.swap_order ? first : second;

        double g = 0.0;
        double d2 = 0.0;
        for (int i = 0; i < n; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
        const double dist = std::sqrt(d2);
        if (dist > h && domain.contains(x) && domain.contains(y)) {
            g = std::fabs(field.value(x) - field.value(y)) / std::pow(dist, exponent);
        }
        block += g;
        // Collapsed-strata variance: neighbouring strata are paired.
        if (t % 2 == 1) block_dev += (g - previous) * (g - previous);
        previous = g;
        if ((t + 1) % kBlock == 0 || t + 1 == total) {
            block_sums.push_back(block);
            block_sq.push_back(block_dev);
            block = 0.0;
            block_dev = 0.0;
        }
    }

    const double count = static_cast<double>(total);
    const double mean = pairwise_sum(block_sums) / count;
    const double var_of_mean = pairwise_sum(block_sq) / (count * count);
    result.value = box_volume * box_volume * mean;
    result.std_error = box_volume * box_volume * std::sqrt(var_of_mean);
    return result;
}

} // namespace blowup
