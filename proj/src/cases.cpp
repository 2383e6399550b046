#include "cmsphere/cases.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace cmsphere {

namespace {

constexpr double kPi = std::numbers::pi;

// z Re((x + i y)^4) and its ambient gradient.
double rh_poly(const Vec3& p) {
    const double x2 = p.x * p.x, y2 = p.y * p.y;
    return p.z * (x2 * x2 - 6.0 * x2 * y2 + y2 * y2);
}

Vec3 rh_poly_grad(const Vec3& p) {
    const double x = p.x, y = p.y, z = p.z, x2 = x * x, y2 = y * y;
    return {z * (4.0 * x2 * x - 12.0 * x * y2), z * (4.0 * y2 * y - 12.0 * x2 * y), x2 * x2 - 6.0 * x2 * y2 + y2 * y2};
}

SpectralField band_limited_coefficients(const std::function<double(const UnitVec&)>& f, int L) {
    DynamicsGrid grid(L);
    std::vector<double> s(grid.size());
    for (int i = 0; i < grid.size(); ++i) s[i] = f(grid.point(i));
    return analysis(grid, s);
}

}  // namespace

std::vector<double> VorticityCase::sample(std::span<const UnitVec> points) const {
    if (spectral.L() > 0) return synthesis(spectral, points);
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = zeta0(points[i]);
    return out;
}

double rh_phase_speed(double omega) { return -2.0 * omega / 30.0; }

VorticityCase rh_wave(double omega) {
    const double nu = rh_phase_speed(omega);
    VorticityCase c;
    c.name = "rh_wave";
    c.zeta0 = [](const UnitVec& p) { return 30.0 * rh_poly(p); };
    c.zeta = [nu](const UnitVec& p, double t) {
        return 30.0 * rh_poly(Mat3::rotation({0, 0, 1}, -nu * t) * p.vec());
    };
    c.velocity = [](const UnitVec& p) { return cross(rh_poly_grad(p), p.vec()); };
    c.spectral = band_limited_coefficients(c.zeta0, 8);
    return c;
}

Mat3 rotated_rh_frame() { return Mat3::rotation({0, 1, 0}, kPi / 3.0); }

VorticityCase rotated_rh_wave() {
    const Mat3 R = rotated_rh_frame(), Rt = R.transposed();
    VorticityCase c;
    c.name = "rotated_rh_wave";
    c.zeta0 = [Rt](const UnitVec& p) { return 30.0 * rh_poly(Rt * p.vec()); };
    c.zeta = [Rt](const UnitVec& p, double) { return 30.0 * rh_poly(Rt * p.vec()); };
    c.velocity = [R, Rt](const UnitVec& p) {
        const Vec3 q = Rt * p.vec();
        return R * cross(rh_poly_grad(q), q);
    };
    c.spectral = band_limited_coefficients(c.zeta0, 8);
    return c;
}

VorticityCase gaussian_vortex(const Vec3& center) {
    VorticityCase c;
    c.name = "gaussian_vortex";
    c.zeta0 = [center](const UnitVec& p) {
        const Vec3 d = p.vec() - center;
        return 4.0 * kPi * std::exp(-16.0 * dot(d, d));
    };
    return c;
}

double jet_speed_formula(double colat, double centerline, double beta) {
    return 0.5 * kPi * std::exp(-2.0 * beta * beta * (1.0 - std::sin(colat + centerline)));
}

double jet_vorticity(double colat, double centerline, double beta) {
    const double u = jet_speed_formula(colat, centerline, beta);
    return std::sin(colat) *
           (2.0 * beta * beta * (std::cos(centerline) * std::cos(colat) - std::sin(centerline) * std::sin(colat)) +
            std::cos(colat)) *
           u;
}

ZonalProfile::ZonalProfile(double theta_c, double beta, int samples)
    : theta_c_(theta_c), beta_(beta), dtheta_(kPi / samples) {
    // Composite Simpson on each cell for the mean, then cumulative sums.
    const auto g = [&](double th) { return jet_vorticity(th, theta_c_, beta_) * std::sin(th); };
    std::vector<double> cell(samples);
    double total = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double a = i * dtheta_, b = a + dtheta_;
        cell[i] = dtheta_ / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
        total += cell[i];
    }
    mean_ = 0.5 * total;
    circ_.assign(samples + 1, 0.0);
    for (int i = 0; i < samples; ++i) {
        const double a = i * dtheta_, b = a + dtheta_;
        const double mean_part = mean_ * (std::cos(a) - std::cos(b));
        circ_[i + 1] = circ_[i] + (cell[i] - mean_part);
    }
}

double ZonalProfile::speed(double colat) const {
    const double s = std::sin(colat);
    if (s < 1e-12) return 0.0;
    const double x = std::clamp(colat / dtheta_, 0.0, static_cast<double>(circ_.size() - 1));
    const std::size_t i = std::min(static_cast<std::size_t>(x), circ_.size() - 2);
    // Cubic Lagrange through four neighbouring samples.
    const std::size_t j = std::clamp<std::size_t>(i, 1, circ_.size() - 3) - 1;
    const double t = x - static_cast<double>(j);
    double v = 0.0;
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b)
            if (b != a) w *= (t - b) / (a - b);
        v += w * circ_[j + a];
    }
    return v / s;
}

VorticityCase zonal_jet(double theta_c, double beta) {
    VorticityCase c;
    c.name = "zonal_jet";
    c.zeta0 = [theta_c, beta](const UnitVec& p) { return jet_vorticity(to_lon_colat(p).colat, theta_c, beta); };
    c.zeta = [f = c.zeta0](const UnitVec& p, double) { return f(p); };
    const auto profile = std::make_shared<ZonalProfile>(theta_c, beta);
    c.velocity = [profile](const UnitVec& p) {
        const double r = std::hypot(p.x(), p.y());
        if (r < 1e-14) return Vec3{};
        const LonColat lc = to_lon_colat(p);
        const Vec3 east{-p.y() / r, p.x() / r, 0.0};
        return profile->speed(lc.colat) * east;
    };
    return c;
}

VorticityCase multi_jet(double amplitude, int wavenumber, double beta) {
    VorticityCase c;
    c.name = "multi_jet";
    c.zeta0 = [=](const UnitVec& p) {
        const LonColat lc = to_lon_colat(p);
        const double pert = amplitude * std::cos(wavenumber * lc.lon);
        return jet_vorticity(lc.colat, kPi / 4.0 + pert, beta) + jet_vorticity(lc.colat, 3.0 * kPi / 8.0 + pert, beta);
    };
    return c;
}

SpectralField random_coefficients(std::uint64_t seed, int lmax, double amp) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-amp, amp);
    SpectralField f(lmax + 1);
    for (int l = 1; l <= lmax; ++l)
        for (int m = 0; m <= l; ++m) {
            const double re = u(rng);
            f.at(l, m) = m == 0 ? cplx(re, 0.0) : cplx(re, u(rng));
        }
    return f;
}

VorticityCase random_vorticity(std::uint64_t seed, int lmax, double amp) {
    VorticityCase c;
    c.name = "random";
    c.spectral = random_coefficients(seed, lmax, amp);
    c.zeta0 = [F = c.spectral](const UnitVec& p) { return synthesis(F, std::span<const UnitVec>(&p, 1))[0]; };
    return c;
}

VorticityCase rest_state() {
    VorticityCase c;
    c.name = "zero";
    c.zeta0 = [](const UnitVec&) { return 0.0; };
    c.zeta = [](const UnitVec&, double) { return 0.0; };
    c.velocity = [](const UnitVec&) { return Vec3{}; };
    c.spectral = SpectralField(2);
    return c;
}

VorticityCase solid_body(double amplitude) {
    VorticityCase c;
    c.name = "solid_body";
    c.zeta0 = [amplitude](const UnitVec& p) { return amplitude * p.z(); };
    c.zeta = [amplitude](const UnitVec& p, double) { return amplitude * p.z(); };
    c.velocity = [amplitude](const UnitVec& p) { return 0.5 * amplitude * cross(Vec3{0, 0, 1}, p.vec()); };
    c.spectral = SpectralField(2);
    c.spectral.at(1, 0) = amplitude / std::sqrt(3.0 / (4.0 * kPi));
    return c;
}

std::vector<std::string> case_names() {
    return {"rh_wave", "rotated_rh_wave", "gaussian_vortex", "zonal_jet", "multi_jet", "random", "zero", "solid_body"};
}

VorticityCase make_case(const std::string& name, const CaseParams& p) {
    if (name == "rh_wave") return rh_wave(p.omega);
    if (name == "rotated_rh_wave") return rotated_rh_wave();
    if (name == "gaussian_vortex") return gaussian_vortex();
    if (name == "zonal_jet") return zonal_jet(p.theta_c, p.beta);
    if (name == "multi_jet") return multi_jet(p.amplitude, p.wavenumber, p.beta);
    if (name == "random") return random_vorticity(p.seed, p.lmax, p.random_amplitude);
    if (name == "zero") return rest_state();
    if (name == "solid_body") return solid_body(p.solid_amplitude);
    throw Error("unknown case '" + name + "'");
}

}  // namespace cmsphere
