#pragma once

// Shared helpers for the unit tests. Oracles here never call into the
// library's interpolation or transform code.

#include <cmath>
#include <random>
#include <vector>

#include "cmsphere/geom.hpp"

namespace testsupport {

inline cmsphere::Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        const cmsphere::Vec3 v{n(rng), n(rng), n(rng)};
        const double r = cmsphere::norm(v);
        if (r > 1e-3) return v / r;
    }
}

inline std::vector<cmsphere::UnitVec> random_points(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<cmsphere::UnitVec> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(cmsphere::project_to_sphere(random_unit(rng)));
    return out;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace testsupport
