#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cmsphere/geom.hpp"
#include "cmsphere/harmonics.hpp"

namespace cmsphere {

/// Initial relative vorticity with optional analytic references. All
/// angles are (longitude, colatitude).
struct VorticityCase {
    std::string name;
    std::function<double(const UnitVec&)> zeta0;
    /// Exact relative vorticity at time t, when known.
    std::function<double(const UnitVec&, double)> zeta;
    /// Exact velocity at t = 0, when known.
    std::function<Vec3(const UnitVec&)> velocity;
    /// Coefficients of zeta0 when it is band-limited (RH wave, random field).
    SpectralField spectral;

    bool has_solution() const { return static_cast<bool>(zeta); }
    /// zeta0 at many points, through synthesis when coefficients exist.
    std::vector<double> sample(std::span<const UnitVec> points) const;
};

/// Phase speed -2|Omega| / (l(l+1)) of the degree-5 RH wave used here.
double rh_phase_speed(double omega);

/// 30 cos(theta) sin^4(theta) cos(4(lon - nu t)).
VorticityCase rh_wave(double omega);
/// Non-rotating RH wave measured from axes rotated by pi/3 about y.
VorticityCase rotated_rh_wave();
/// The rotation taking the standard axes to the frame of rotated_rh_wave.
Mat3 rotated_rh_frame();
/// 4 pi exp(-16 |x - center|^2).
VorticityCase gaussian_vortex(const Vec3& center = {1.0, 0.0, 0.0});

/// Speed profile (pi/2) exp(-2 beta^2 (1 - sin(colat + centerline))).
double jet_speed_formula(double colat, double centerline, double beta);
/// Vorticity profile of one jet.
double jet_vorticity(double colat, double centerline, double beta);
/// Single steady zonal jet with centerline colatitude theta_c.
VorticityCase zonal_jet(double theta_c = 0.7853981633974483, double beta = 12.0);
/// Eastward speed of the zonal jet at a colatitude, integrated from its
/// mean-free vorticity profile.
class ZonalProfile {
public:
    ZonalProfile(double theta_c, double beta, int samples = 20000);
    double speed(double colat) const;
    double mean() const { return mean_; }

private:
    double theta_c_, beta_, mean_ = 0.0, dtheta_ = 0.0;
    std::vector<double> circ_;  // int_0^theta (zeta - mean) sin
};

/// Two perturbed jets with centerlines pi/4 + a cos(n lon), 3pi/8 + a cos(n lon).
VorticityCase multi_jet(double amplitude = 0.01, int wavenumber = 12, double beta = 12.0);

/// Degrees 1..lmax, real and imaginary parts uniform in [-amp, amp]
/// for m > 0, real for m = 0.
SpectralField random_coefficients(std::uint64_t seed, int lmax = 20, double amp = 5.0);
VorticityCase random_vorticity(std::uint64_t seed, int lmax = 20, double amp = 5.0);
/// Zero vorticity.
VorticityCase rest_state();
/// zeta = a z, the vorticity of solid-body rotation about z with rate a/2.
VorticityCase solid_body(double amplitude);

/// Case by name: rh_wave, rotated_rh_wave, gaussian_vortex, zonal_jet,
/// multi_jet, random, zero, solid_body. Parameters come from `param`.
struct CaseParams {
    double omega = 2.0 * 3.141592653589793;
    double theta_c = 0.7853981633974483;
    double beta = 12.0;
    double amplitude = 0.01;
    int wavenumber = 12;
    std::uint64_t seed = 1;
    int lmax = 20;
    double random_amplitude = 5.0;
    double solid_amplitude = 1.0;
};
VorticityCase make_case(const std::string& name, const CaseParams& param);
std::vector<std::string> case_names();

}  // namespace cmsphere
