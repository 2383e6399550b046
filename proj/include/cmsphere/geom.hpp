#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace cmsphere {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A spline map value (or other raw vector) too close to the origin to be
/// projected onto the sphere meaningfully.
class NormTooSmall : public Error {
public:
    explicit NormTooSmall(double norm, std::string where = {})
        : Error("norm " + std::to_string(norm) + " below projection floor" +
                (where.empty() ? std::string{} : " (" + where + ")")),
          norm_(norm) {}
    double norm() const noexcept { return norm_; }

private:
    double norm_;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
/// Scalar triple product a·(b×c).
constexpr double det3(const Vec3& a, const Vec3& b, const Vec3& c) { return dot(a, cross(b, c)); }

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{};

    constexpr double operator()(int r, int c) const { return m[3 * r + c]; }
    constexpr double& operator()(int r, int c) { return m[3 * r + c]; }

    constexpr Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    constexpr Vec3 row(int r) const { return {m[3 * r], m[3 * r + 1], m[3 * r + 2]}; }
    constexpr Vec3 col(int c) const { return {m[c], m[3 + c], m[6 + c]}; }

    Mat3 transposed() const;
    static Mat3 from_columns(const Vec3& a, const Vec3& b, const Vec3& c);
    static Mat3 from_rows(const Vec3& a, const Vec3& b, const Vec3& c);
    static Mat3 identity();
    static Mat3 rotation(const Vec3& axis, double angle);
};

Mat3 operator*(const Mat3& a, const Mat3& b);
double determinant(const Mat3& a);
/// Inverse by cofactors; returns false when |det| <= tol * (scale of a)^3.
bool invert(const Mat3& a, Mat3& out, double tol = 1e-300);

/// A point on the unit sphere. Construct through project_to_sphere (checked)
/// or UnitVec::assume_unit when the caller already guarantees unit length.
class UnitVec {
public:
    constexpr UnitVec() : v_{0.0, 0.0, 1.0} {}
    static constexpr UnitVec assume_unit(const Vec3& v) { return UnitVec(v); }

    constexpr const Vec3& vec() const { return v_; }
    constexpr operator const Vec3&() const { return v_; }  // NOLINT(google-explicit-constructor)
    constexpr double x() const { return v_.x; }
    constexpr double y() const { return v_.y; }
    constexpr double z() const { return v_.z; }

    friend constexpr bool operator==(const UnitVec&, const UnitVec&) = default;

private:
    constexpr explicit UnitVec(const Vec3& v) : v_(v) {}
    Vec3 v_;
};

/// Raw vectors whose norm is at or below this are treated as corrupt.
inline constexpr double kNormFloor = 1e-8;
/// Default arc offset of the four-point difference stencil.
inline constexpr double kDefaultEpsilon = 1e-5;

/// p/|p|. Vectors already of unit length to round-off are returned unchanged,
/// so the projection is idempotent. Throws NormTooSmall if |p| <= kNormFloor.
UnitVec project_to_sphere(const Vec3& p);

/// Longitude in [0, 2pi) and colatitude in [0, pi] of a point.
struct LonColat {
    double lon = 0.0;
    double colat = 0.0;
};
LonColat to_lon_colat(const Vec3& p);
UnitVec from_lon_colat(double lon, double colat);

/// Great-circle distance.
double arc_distance(const Vec3& a, const Vec3& b);

/// Component of v orthogonal to the unit vector n.
inline Vec3 tangential(const Vec3& v, const Vec3& n) { return v - dot(v, n) * n; }

struct TangentFrame {
    UnitVec base;
    Vec3 e1;
    Vec3 e2;
};

/// Deterministic positively oriented orthonormal frame (e1 x e2 = base).
TangentFrame tangent_frame(const UnitVec& v);

/// Four points normalize(base + a*eps*e1 + b*eps*e2), a,b in {-1,+1}.
struct EpsStencil {
    enum Corner { kMinusMinus = 0, kPlusMinus = 1, kMinusPlus = 2, kPlusPlus = 3 };
    std::array<UnitVec, 4> points;
    double epsilon = 0.0;
};

EpsStencil eps_stencil(const TangentFrame& frame, double epsilon);
inline EpsStencil eps_stencil(const UnitVec& v, double epsilon) {
    return eps_stencil(tangent_frame(v), epsilon);
}

/// Value and frame derivatives recovered from samples of f on a stencil:
/// value = mean, d1/d2 = centred epsilon quotients along e1/e2.
template <class T>
struct StencilQuotients {
    T value;
    T d1;
    T d2;
};

template <class T>
StencilQuotients<T> stencil_quotients(const std::array<T, 4>& f, double epsilon) {
    using C = EpsStencil::Corner;
    const double s = 1.0 / (4.0 * epsilon);
    StencilQuotients<T> q;
    q.value = 0.25 * (f[C::kMinusMinus] + f[C::kPlusMinus] + f[C::kMinusPlus] + f[C::kPlusPlus]);
    q.d1 = s * ((f[C::kPlusMinus] - f[C::kMinusMinus]) + (f[C::kPlusPlus] - f[C::kMinusPlus]));
    q.d2 = s * ((f[C::kMinusPlus] - f[C::kMinusMinus]) + (f[C::kPlusPlus] - f[C::kPlusMinus]));
    return q;
}

/// Time-dependent velocity u(x, t). Evaluation through TimeDepVelocity
/// projects the result onto the tangent plane at x.
class TimeDepVelocity {
public:
    using Fn = std::function<Vec3(const UnitVec&, double)>;
    TimeDepVelocity() = default;
    explicit TimeDepVelocity(Fn f) : f_(std::move(f)) {}

    Vec3 operator()(const UnitVec& x, double t) const { return tangential(f_(x, t), x); }
    explicit operator bool() const { return static_cast<bool>(f_); }

private:
    Fn f_;
};

/// One classical RK4 step of x' = u(x, t) from t_end back to t_end - dt.
/// Stage points and the result are projected to the sphere.
template <class Velocity>
UnitVec rk4_step(const Velocity& u, const UnitVec& x, double t_end, double dt) {
    const double h = -dt;
    const Vec3 k1 = u(x, t_end);
    const UnitVec x2 = project_to_sphere(x.vec() + 0.5 * h * k1);
    const Vec3 k2 = u(x2, t_end + 0.5 * h);
    const UnitVec x3 = project_to_sphere(x.vec() + 0.5 * h * k2);
    const Vec3 k3 = u(x3, t_end + 0.5 * h);
    const UnitVec x4 = project_to_sphere(x.vec() + h * k3);
    const Vec3 k4 = u(x4, t_end + h);
    return project_to_sphere(x.vec() + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

/// Backward trajectory over [t_end - dt, t_end] split into `substeps` RK4 steps.
template <class Velocity>
UnitVec rk4_backward(const Velocity& u, const UnitVec& x, double t_end, double dt, int substeps = 1) {
    UnitVec p = x;
    const double h = dt / substeps;
    for (int s = 0; s < substeps; ++s) p = rk4_step(u, p, t_end - s * h, h);
    return p;
}

/// Forward counterpart of rk4_step (t to t + dt), used for reversibility checks.
template <class Velocity>
UnitVec rk4_forward(const Velocity& u, const UnitVec& x, double t_start, double dt) {
    auto reversed = [&u](const UnitVec& p, double t) { return -1.0 * u(p, -t); };
    return rk4_step(reversed, x, -t_start, dt);
}

}  // namespace cmsphere
