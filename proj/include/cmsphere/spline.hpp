#pragma once

#include <memory>
#include <vector>

#include "cmsphere/triangulation.hpp"

namespace cmsphere {

/// A triangulation together with its Powell-Sabin split. Shared by every
/// spline built on it.
class SplineSpace {
public:
    explicit SplineSpace(SphericalTriangulation tri) : tri_(std::move(tri)), ps_(tri_) {}
    SplineSpace(const SplineSpace&) = delete;
    SplineSpace& operator=(const SplineSpace&) = delete;

    const SphericalTriangulation& triangulation() const { return tri_; }
    const PowellSabinSplit& split() const { return ps_; }
    int num_vertices() const { return tri_.num_vertices(); }

private:
    SphericalTriangulation tri_;
    PowellSabinSplit ps_;
};

std::shared_ptr<const SplineSpace> make_spline_space(SphericalTriangulation tri);

/// Containing PS subtriangle of a point with its homogeneous barycentrics.
struct SubLocation {
    int triangle = -1;
    int sub = -1;
    Vec3 bary;
    bool used_fallback = false;
};

SubLocation locate_sub(const SplineSpace& space, const Vec3& p, int hint = -1);

/// Value and frame derivatives (d1 along e1, d2 along e2) per vertex.
struct HermiteData {
    std::vector<double> value, d1, d2;

    HermiteData() = default;
    explicit HermiteData(int n) : value(n, 0.0), d1(n, 0.0), d2(n, 0.0) {}
    int size() const { return static_cast<int>(value.size()); }
};

/// C1 piecewise quadratic on the PS split, stored as Bernstein-Bezier
/// coefficients with one slot per shared control point.
class SplineScalar {
public:
    SplineScalar() = default;
    SplineScalar(std::shared_ptr<const SplineSpace> space, std::vector<double> coef);

    const std::shared_ptr<const SplineSpace>& space() const { return space_; }
    const std::vector<double>& coefficients() const { return coef_; }
    bool empty() const { return !space_; }

    double eval(const Vec3& p, const SubLocation& loc) const;
    /// Tangential gradient at p (p must be on the sphere).
    Vec3 eval_grad(const Vec3& p, const SubLocation& loc) const;
    double eval(const Vec3& p) const { return eval(p, locate_sub(*space_, p)); }
    Vec3 eval_grad(const Vec3& p) const { return eval_grad(p, locate_sub(*space_, p)); }

private:
    std::shared_ptr<const SplineSpace> space_;
    std::vector<double> coef_;
};

SplineScalar hermite_fit(std::shared_ptr<const SplineSpace> space, const HermiteData& data);

/// Quadratic Bernstein-Bezier value on one subtriangle; c in the
/// order c200 c020 c002 c110 c101 c011.
inline double bb_value(const double* c, const Vec3& b) {
    const double l0 = c[0] * b.x + c[3] * b.y + c[4] * b.z;
    const double l1 = c[3] * b.x + c[1] * b.y + c[5] * b.z;
    const double l2 = c[4] * b.x + c[5] * b.y + c[2] * b.z;
    return l0 * b.x + l1 * b.y + l2 * b.z;
}

/// Gradient with respect to the barycentrics.
inline Vec3 bb_bary_gradient(const double* c, const Vec3& b) {
    return {2.0 * (c[0] * b.x + c[3] * b.y + c[4] * b.z), 2.0 * (c[3] * b.x + c[1] * b.y + c[5] * b.z),
            2.0 * (c[4] * b.x + c[5] * b.y + c[2] * b.z)};
}

/// The six local coefficients of spline coefficients `coef` on one subtriangle.
inline void gather_local(const PowellSabinSplit::Sub& sub, const double* coef, double out[6]) {
    for (int i = 0; i < 6; ++i) out[i] = coef[sub.coef[i]];
}

}  // namespace cmsphere
