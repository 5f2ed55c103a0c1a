#pragma once

#include <cstdint>
#include <vector>

namespace blowup {

/// `count` deterministic, evenly spread unit vectors on S^(n-1).
///
/// n = 1 alternates +1/-1; n = 2 uses equispaced angles; n = 3 a spherical
/// Fibonacci lattice; n >= 4 rotated Halton points pushed through Box-Muller.
/// The seed only selects a random rotation (Cranley-Patterson shift), so a
/// fixed seed gives a fixed direction set.
std::vector<std::vector<double>> sphere_directions(int n, int count, std::uint64_t seed);

} // namespace blowup
