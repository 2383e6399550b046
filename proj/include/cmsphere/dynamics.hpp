#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cmsphere/cases.hpp"
#include "cmsphere/harmonics.hpp"
#include "cmsphere/map.hpp"

namespace cmsphere {

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raised when a step fails; carries the step index.
class SolverAbort : public Error {
public:
    SolverAbort(int step, const std::string& what)
        : Error("solver aborted at step " + std::to_string(step) + ": " + what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

struct SimConfig {
    int k = 3;             // map mesh level
    int L = 64;            // band-limit of the dynamics grid
    double dt = 1.0 / 32;  // time step
    double T = 1.0;        // final time
    int remap_stride = 10;  // steps per submap; 0 keeps a single map
    Vec3 omega{0.0, 0.0, 2.0 * 3.141592653589793};
    double epsilon = 1e-5;
    int bootstrap_substeps = 20;
    int bootstrap_iterations = 2;

    /// Throws ConfigError.
    void validate() const;
    int num_steps() const;
};

/// Velocity field as three C1 spline components on the dynamics-grid
/// triangulation.
struct VelocitySpline {
    std::array<SplineScalar, 3> comp;
    double time = 0.0;

    Vec3 eval(const Vec3& p, const SubLocation& loc) const;
    Vec3 eval(const UnitVec& p) const;
};

/// Meshes and grid shared by the state and every spline built on them.
struct Discretization {
    std::shared_ptr<const SplineSpace> map_space;
    std::shared_ptr<const SplineSpace> velocity_space;
    DynamicsGrid grid;

    Discretization(int k, int L);
};

using VelocityFn = std::function<Vec3(const UnitVec&, double)>;

/// Lagrange basis values at t for the given nodes.
std::vector<double> lagrange_weights(std::span<const double> nodes, double t);

/// Lagrange combination in time of the buffered fields (1 to 3 of them),
/// projected onto the tangent plane at x.
Vec3 extrapolate_velocity(std::span<const VelocitySpline> buffer, double t, const UnitVec& x);
/// The same as a callable; the buffer is copied.
VelocityFn extrapolated_velocity(std::vector<VelocitySpline> buffer);

/// One GALS step: backward trajectories over [t_begin, t_begin + dt] from the
/// stencil points of every map vertex, composition with `current`, and a
/// Hermite refit of the displacement. The result covers
/// [current.t_begin(), t_begin + dt].
SphereMap gals_step(const SphereMap& current, const VelocityFn& u, double t_begin, double dt, double epsilon,
                    int substeps = 1);

/// Velocity spline of the stream function psi at the grid vertices.
VelocitySpline velocity_spline(const Discretization& disc, const SpectralField& psi, double time);
/// Analysis, Poisson solve and spline projection of vorticity samples on
/// the dynamics grid. The coefficients are returned through zeta_hat.
VelocitySpline reconstruct_velocity(const Discretization& disc, std::span<const double> samples, double time,
                                    SpectralField* zeta_hat = nullptr);

struct Diagnostics {
    double t = 0.0;
    double energy = 0.0;
    double enstrophy = 0.0;
    double energy_error = 0.0;
    double enstrophy_error = 0.0;
};

/// State of a run: stored submaps, the submap in progress, the last three
/// velocity fields and the initial absolute vorticity.
class Simulation {
public:
    /// Bootstraps the first two steps.
    Simulation(SimConfig cfg, VorticityCase ic);

    /// Restores a state written by write_checkpoint. The stream must be
    /// positioned after the header (see read_checkpoint_header).
    static Simulation resume(std::istream& is, VorticityCase ic);

    void step();
    /// Steps to the final time, calling on_step after each step.
    void run(const std::function<void(const Simulation&)>& on_step = {});
    bool finished() const { return step_ >= cfg_.num_steps(); }

    const SimConfig& config() const { return cfg_; }
    const VorticityCase& initial_condition() const { return ic_; }
    const Discretization& discretization() const { return *disc_; }
    int step_index() const { return step_; }
    double time() const { return step_ * cfg_.dt; }
    const MapStack& stack() const { return stack_; }
    const SphereMap& current() const { return current_; }
    const std::vector<VelocitySpline>& velocity_buffer() const { return buffer_; }
    const SpectralField& vorticity_coefficients() const { return zeta_hat_; }

    /// Planetary vorticity 2 Omega . x.
    double planetary(const Vec3& x) const { return 2.0 * dot(cfg_.omega, x); }
    /// Back-to-label positions X_[t,0](x).
    std::vector<UnitVec> pull_back(std::span<const UnitVec> points) const;
    /// Relative vorticity (zeta0 + f) o X - f.
    std::vector<double> sample_vorticity(std::span<const UnitVec> points) const;
    /// Absolute vorticity (zeta0 + f) o X.
    std::vector<double> sample_absolute_vorticity(std::span<const UnitVec> points) const;

    double energy() const { return energy_; }
    double enstrophy() const { return enstrophy_; }
    Diagnostics diagnostics() const;
    Diagnostics initial_diagnostics() const { return {0.0, energy0_, enstrophy0_, 0.0, 0.0}; }

    /// Binary checkpoint with an opaque text header (the run configuration).
    void write_checkpoint(std::ostream& os, const std::string& header) const;

private:
    Simulation(SimConfig cfg, VorticityCase ic, bool bootstrap);
    void bootstrap();
    VelocitySpline reconstruct(const SphereMap* in_progress, double t);
    void maybe_remap();

    SimConfig cfg_;
    VorticityCase ic_;
    std::shared_ptr<const Discretization> disc_;
    MapStack stack_;
    SphereMap current_;
    std::vector<VelocitySpline> buffer_;  // oldest first
    SpectralField zeta_hat_;
    int step_ = 0;
    int since_remap_ = 0;
    double energy_ = 0.0, enstrophy_ = 0.0, energy0_ = 0.0, enstrophy0_ = 0.0;
};

std::string read_checkpoint_header(std::istream& is);

/// Error norms of a finished run.
struct ErrorReport {
    double vorticity_error = 0.0;  // sup |zeta - exact| / sup |exact|, NaN without a solution
    double vorticity_abs_error = 0.0;
    double enstrophy_error = 0.0;
    double energy_error = 0.0;
    double lipschitz = 0.0;  // estimate of Lip(zeta0 + f)
};
ErrorReport evaluate_errors(const Simulation& sim, int L_err);

/// max |grad(zeta0 + f)| on a Gauss-Legendre grid of band-limit L.
double lipschitz_estimate(const VorticityCase& ic, const Vec3& omega, int L);

}  // namespace cmsphere
