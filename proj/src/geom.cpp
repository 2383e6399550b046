#include "cmsphere/geom.hpp"

#include <algorithm>
#include <numbers>

namespace cmsphere {

Mat3 Mat3::transposed() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
    return t;
}

Mat3 Mat3::from_columns(const Vec3& a, const Vec3& b, const Vec3& c) {
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        m(r, 0) = a[r];
        m(r, 1) = b[r];
        m(r, 2) = c[r];
    }
    return m;
}

Mat3 Mat3::from_rows(const Vec3& a, const Vec3& b, const Vec3& c) {
    Mat3 m;
    for (int col = 0; col < 3; ++col) {
        m(0, col) = a[col];
        m(1, col) = b[col];
        m(2, col) = c[col];
    }
    return m;
}

Mat3 Mat3::identity() {
    Mat3 m;
    m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
    return m;
}

Mat3 Mat3::rotation(const Vec3& axis, double angle) {
    const Vec3 k = axis / norm(axis);
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Mat3 r;
    r(0, 0) = c + k.x * k.x * t;
    r(0, 1) = k.x * k.y * t - k.z * s;
    r(0, 2) = k.x * k.z * t + k.y * s;
    r(1, 0) = k.y * k.x * t + k.z * s;
    r(1, 1) = c + k.y * k.y * t;
    r(1, 2) = k.y * k.z * t - k.x * s;
    r(2, 0) = k.z * k.x * t - k.y * s;
    r(2, 1) = k.z * k.y * t + k.x * s;
    r(2, 2) = c + k.z * k.z * t;
    return r;
}

Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 p;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) p(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c) + a(r, 2) * b(2, c);
    return p;
}

double determinant(const Mat3& a) { return det3(a.row(0), a.row(1), a.row(2)); }

bool invert(const Mat3& a, Mat3& out, double tol) {
    // Rows of the inverse's transpose are cross products of the rows of a.
    const Vec3 r0 = a.row(0), r1 = a.row(1), r2 = a.row(2);
    const Vec3 c0 = cross(r1, r2), c1 = cross(r2, r0), c2 = cross(r0, r1);
    const double det = dot(r0, c0);
    const double scale = norm(r0) * norm(r1) * norm(r2);
    if (!(std::abs(det) > tol * scale)) return false;
    const double inv = 1.0 / det;
    out = Mat3::from_columns(c0 * inv, c1 * inv, c2 * inv);
    return true;
}

UnitVec project_to_sphere(const Vec3& p) {
    const double n2 = dot(p, p);
    if (std::abs(n2 - 1.0) <= 2e-15) return UnitVec::assume_unit(p);
    const double n = std::sqrt(n2);
    if (!(n > kNormFloor)) throw NormTooSmall(n);
    return UnitVec::assume_unit(p / n);
}

LonColat to_lon_colat(const Vec3& p) {
    double lon = std::atan2(p.y, p.x);
    if (lon < 0.0) lon += 2.0 * std::numbers::pi;
    if (lon >= 2.0 * std::numbers::pi) lon = 0.0;
    const double colat = std::atan2(std::hypot(p.x, p.y), p.z);
    return {lon, colat};
}

UnitVec from_lon_colat(double lon, double colat) {
    const double s = std::sin(colat);
    return UnitVec::assume_unit({s * std::cos(lon), s * std::sin(lon), std::cos(colat)});
}

double arc_distance(const Vec3& a, const Vec3& b) { return std::atan2(norm(cross(a, b)), dot(a, b)); }

TangentFrame tangent_frame(const UnitVec& v) {
    const Vec3 a = std::abs(v.z()) > 1.0 - 1e-6 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 0.0, 1.0};
    const Vec3 c = cross(a, v.vec());
    const Vec3 e1 = c / norm(c);
    const Vec3 e2 = cross(v.vec(), e1);
    return {v, e1, e2};
}

EpsStencil eps_stencil(const TangentFrame& f, double epsilon) {
    EpsStencil s;
    s.epsilon = epsilon;
    const Vec3 a = epsilon * f.e1, b = epsilon * f.e2;
    const Vec3 v = f.base.vec();
    using C = EpsStencil::Corner;
    s.points[C::kMinusMinus] = project_to_sphere(v - a - b);
    s.points[C::kPlusMinus] = project_to_sphere(v + a - b);
    s.points[C::kMinusPlus] = project_to_sphere(v - a + b);
    s.points[C::kPlusPlus] = project_to_sphere(v + a + b);
    return s;
}

}  // namespace cmsphere
