#include "cmsphere/dynamics.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <istream>
#include <limits>
#include <ostream>

namespace cmsphere {

namespace {

constexpr char kCheckpointMagic[4] = {'C', 'M', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error("truncated checkpoint");
    return v;
}

void put_vector(std::ostream& os, const std::vector<double>& v) {
    put(os, static_cast<std::uint64_t>(v.size()));
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_vector(std::istream& is) {
    const auto n = get<std::uint64_t>(is);
    if (n > (std::uint64_t{1} << 34)) throw Error("corrupt checkpoint");
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw Error("truncated checkpoint");
    return v;
}

// Keeps the first exception raised inside a parallel loop; exceptions may
// not leave an OpenMP region.
class LoopErrors {
public:
    template <class F>
    void guard(F&& f) {
        try {
            f();
        } catch (...) {
#pragma omp critical(cmsphere_loop_errors)
            if (!first_) first_ = std::current_exception();
        }
    }
    void rethrow() const {
        if (first_) std::rethrow_exception(first_);
    }

private:
    std::exception_ptr first_;
};

// X_[t,0](x) through the stored submaps and an optional newest map.
std::vector<UnitVec> compose(const MapStack& stack, const SphereMap* newest, std::span<const UnitVec> points) {
    std::vector<UnitVec> out(points.size());
    LoopErrors errors;
#pragma omp parallel
    {
        std::vector<int> hints(stack.size() + 1, -1);
#pragma omp for schedule(static)
        for (std::size_t i = 0; i < points.size(); ++i)
            errors.guard([&] { out[i] = stack.eval(points[i], hints, newest); });
    }
    errors.rethrow();
    return out;
}

double relative_change(double now, double ref) { return ref != 0.0 ? (now - ref) / ref : now; }

}  // namespace

void SimConfig::validate() const {
    if (k < 0 || k > 9) throw ConfigError("map level k must lie in [0, 9]");
    if (L < 8) throw ConfigError("band-limit L must be at least 8");
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    if (!(T >= dt)) throw ConfigError("final time must be at least one time step");
    if (remap_stride < 0) throw ConfigError("remap stride must be >= 1, or 0 for no remapping");
    if (!(epsilon > 0.0) || epsilon >= 1e-2) throw ConfigError("epsilon must lie in (0, 1e-2)");
    if (bootstrap_substeps < 1 || bootstrap_iterations < 0) throw ConfigError("invalid bootstrap settings");
    if (!std::isfinite(omega.x) || !std::isfinite(omega.y) || !std::isfinite(omega.z))
        throw ConfigError("rotation vector must be finite");
}

int SimConfig::num_steps() const { return static_cast<int>(std::lround(T / dt)); }

Vec3 VelocitySpline::eval(const Vec3&, const SubLocation& loc) const {
    const auto& sub = comp[0].space()->split().sub(loc.triangle, loc.sub);
    Vec3 r;
    for (int c = 0; c < 3; ++c) {
        double lc[6];
        gather_local(sub, comp[c].coefficients().data(), lc);
        r[c] = bb_value(lc, loc.bary);
    }
    return r;
}

Vec3 VelocitySpline::eval(const UnitVec& p) const { return eval(p, locate_sub(*comp[0].space(), p)); }

Discretization::Discretization(int k, int L)
    : map_space(make_spline_space(build_icosahedral(k))), grid(L) {
    velocity_space = make_spline_space(build_latlon_grid_triangulation(grid.grid_index()));
}

std::vector<double> lagrange_weights(std::span<const double> nodes, double t) {
    std::vector<double> w(nodes.size(), 1.0);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = 0; j < nodes.size(); ++j)
            if (j != i) w[i] *= (t - nodes[j]) / (nodes[i] - nodes[j]);
    return w;
}

Vec3 extrapolate_velocity(std::span<const VelocitySpline> buffer, double t, const UnitVec& x) {
    if (buffer.empty()) throw Error("empty velocity buffer");
    double nodes[3];
    const std::size_t n = std::min<std::size_t>(buffer.size(), 3);
    const std::size_t first = buffer.size() - n;
    for (std::size_t i = 0; i < n; ++i) nodes[i] = buffer[first + i].time;
    const auto w = lagrange_weights(std::span<const double>(nodes, n), t);
    const SubLocation loc = locate_sub(*buffer[first].comp[0].space(), x);
    Vec3 u{};
    for (std::size_t i = 0; i < n; ++i) u += w[i] * buffer[first + i].eval(x, loc);
    return tangential(u, x);
}

VelocityFn extrapolated_velocity(std::vector<VelocitySpline> buffer) {
    auto shared = std::make_shared<const std::vector<VelocitySpline>>(std::move(buffer));
    return [shared](const UnitVec& x, double t) { return extrapolate_velocity(*shared, t, x); };
}

SphereMap gals_step(const SphereMap& current, const VelocityFn& u, double t_begin, double dt, double epsilon,
                    int substeps) {
    const auto& space = current.space();
    const auto& T = space->triangulation();
    const int nv = T.num_vertices();
    MapHermiteData disp{HermiteData(nv), HermiteData(nv), HermiteData(nv)};
    const double t_end = t_begin + dt;
    LoopErrors errors;
#pragma omp parallel
    {
        int hint = -1;
#pragma omp for schedule(static)
        for (int v = 0; v < nv; ++v) errors.guard([&] {
            const EpsStencil st = eps_stencil(T.frame(v), epsilon);
            std::array<Vec3, 4> g;
            for (int j = 0; j < 4; ++j) {
                const UnitVec foot = rk4_backward(u, st.points[j], t_end, dt, substeps);
                g[j] = current.eval(foot, hint).vec() - st.points[j].vec();
            }
            const auto q = stencil_quotients(g, epsilon);
            for (int c = 0; c < 3; ++c) {
                disp[c].value[v] = q.value[c];
                disp[c].d1[v] = q.d1[c];
                disp[c].d2[v] = q.d2[c];
            }
        });
    }
    errors.rethrow();
    return SphereMap::from_displacement(space, disp, current.t_begin(), t_end);
}

VelocitySpline velocity_spline(const Discretization& disc, const SpectralField& psi, double time) {
    const auto& T = disc.velocity_space->triangulation();
    const auto& grid = disc.grid;
    const int nv = T.num_vertices();
    const auto U = minus_i_angular_momentum(psi);
    const std::array<UnitVec, 2> poles{T.vertex(0), T.vertex(nv - 1)};
    std::array<HermiteData, 3> h{HermiteData(nv), HermiteData(nv), HermiteData(nv)};
    std::array<std::vector<Vec3>, 3> grads;
    for (int c = 0; c < 3; ++c) {
        const auto vals = synthesis(U[c], grid);
        const auto pv = synthesis(U[c], poles);
        h[c].value[0] = pv[0];
        h[c].value[nv - 1] = pv[1];
        for (int i = 0; i < grid.size(); ++i) h[c].value[i + 1] = vals[i];
        auto g = tangential_gradient(U[c], grid);
        const auto pg = tangential_gradient(U[c], poles);
        g.insert(g.begin(), pg[0]);
        g.push_back(pg[1]);
        grads[c] = std::move(g);
    }
    for (int v = 0; v < nv; ++v) {
        const auto& f = T.frame(v);
        const Vec3 val = tangential(Vec3{h[0].value[v], h[1].value[v], h[2].value[v]}, f.base);
        for (int c = 0; c < 3; ++c) {
            h[c].value[v] = val[c];
            h[c].d1[v] = dot(grads[c][v], f.e1);
            h[c].d2[v] = dot(grads[c][v], f.e2);
        }
    }
    VelocitySpline out;
    out.time = time;
    for (int c = 0; c < 3; ++c) out.comp[c] = hermite_fit(disc.velocity_space, h[c]);
    return out;
}

VelocitySpline reconstruct_velocity(const Discretization& disc, std::span<const double> samples, double time,
                                    SpectralField* zeta_hat) {
    SpectralField z = analysis(disc.grid, samples);
    VelocitySpline u = velocity_spline(disc, invert_laplacian(z), time);
    if (zeta_hat) *zeta_hat = std::move(z);
    return u;
}

Simulation::Simulation(SimConfig cfg, VorticityCase ic) : Simulation(std::move(cfg), std::move(ic), true) {}

Simulation::Simulation(SimConfig cfg, VorticityCase ic, bool run_bootstrap) : cfg_(std::move(cfg)), ic_(std::move(ic)) {
    cfg_.validate();
    disc_ = std::make_shared<const Discretization>(cfg_.k, cfg_.L);
    current_ = SphereMap::identity(disc_->map_space, 0.0, 0.0);
    if (run_bootstrap) bootstrap();
}

std::vector<UnitVec> Simulation::pull_back(std::span<const UnitVec> points) const {
    return compose(stack_, &current_, points);
}

std::vector<double> Simulation::sample_absolute_vorticity(std::span<const UnitVec> points) const {
    const auto labels = pull_back(points);
    auto w = ic_.sample(labels);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += planetary(labels[i]);
    return w;
}

std::vector<double> Simulation::sample_vorticity(std::span<const UnitVec> points) const {
    auto w = sample_absolute_vorticity(points);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= planetary(points[i]);
    return w;
}

VelocitySpline Simulation::reconstruct(const SphereMap* in_progress, double t) {
    const auto& grid = disc_->grid;
    const auto labels = compose(stack_, in_progress, grid.points());
    auto zeta = ic_.sample(labels);
    std::vector<double> sq(zeta.size());
    for (std::size_t i = 0; i < zeta.size(); ++i) {
        const double w = zeta[i] + planetary(labels[i]);
        sq[i] = w * w;
        zeta[i] = w - planetary(grid.point(static_cast<int>(i)));
    }
    enstrophy_ = quadrature(grid, sq);
    VelocitySpline u = reconstruct_velocity(*disc_, zeta, t, &zeta_hat_);
    energy_ = energy_spectrum(zeta_hat_).total();
    return u;
}

void Simulation::bootstrap() {
    const double dt = cfg_.dt;
    const int nb = std::min(2, cfg_.num_steps());
    const int sub = cfg_.bootstrap_substeps;
    const SphereMap id = SphereMap::identity(disc_->map_space, 0.0, 0.0);
    buffer_ = {reconstruct(nullptr, 0.0)};
    energy0_ = energy_;
    enstrophy0_ = enstrophy_;
    try {
        // Predictor: velocity frozen at the latest known field.
        SphereMap x = id;
        for (int n = 0; n < nb; ++n) {
            x = gals_step(x, extrapolated_velocity(buffer_), n * dt, dt, cfg_.epsilon, sub);
            buffer_.push_back(reconstruct(&x, (n + 1) * dt));
        }
        // Correctors: interpolate through all bootstrap fields.
        for (int it = 0; it < cfg_.bootstrap_iterations; ++it) {
            const VelocityFn u = extrapolated_velocity(buffer_);
            std::vector<VelocitySpline> next{buffer_[0]};
            x = id;
            for (int n = 0; n < nb; ++n) {
                x = gals_step(x, u, n * dt, dt, cfg_.epsilon, sub);
                next.push_back(reconstruct(&x, (n + 1) * dt));
            }
            buffer_ = std::move(next);
        }
        current_ = x;
    } catch (const NormTooSmall& e) {
        throw SolverAbort(0, e.what());
    }
    step_ = nb;
    since_remap_ = nb;
    maybe_remap();
}

void Simulation::maybe_remap() {
    if (cfg_.remap_stride > 0 && since_remap_ >= cfg_.remap_stride) {
        const double t = current_.t_end();
        stack_.push(current_);
        current_ = SphereMap::identity(disc_->map_space, t, t);
        since_remap_ = 0;
    }
}

void Simulation::step() {
    if (finished()) return;
    const double t0 = time();
    try {
        SphereMap next = gals_step(current_, extrapolated_velocity(buffer_), t0, cfg_.dt, cfg_.epsilon);
        VelocitySpline u = reconstruct(&next, t0 + cfg_.dt);
        current_ = std::move(next);
        buffer_.push_back(std::move(u));
        if (buffer_.size() > 3) buffer_.erase(buffer_.begin());
    } catch (const NormTooSmall& e) {
        throw SolverAbort(step_ + 1, e.what());
    }
    ++step_;
    ++since_remap_;
    maybe_remap();
}

void Simulation::run(const std::function<void(const Simulation&)>& on_step) {
    while (!finished()) {
        step();
        if (on_step) on_step(*this);
    }
}

Diagnostics Simulation::diagnostics() const {
    Diagnostics d;
    d.t = time();
    d.energy = energy_;
    d.enstrophy = enstrophy_;
    d.energy_error = relative_change(energy_, energy0_);
    d.enstrophy_error = relative_change(enstrophy_, enstrophy0_);
    return d;
}

void Simulation::write_checkpoint(std::ostream& os, const std::string& header) const {
    os.write(kCheckpointMagic, 4);
    put(os, kCheckpointVersion);
    put(os, static_cast<std::uint64_t>(header.size()));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    put(os, static_cast<std::int32_t>(cfg_.k));
    put(os, static_cast<std::int32_t>(cfg_.L));
    put(os, cfg_.dt);
    put(os, cfg_.T);
    put(os, static_cast<std::int32_t>(cfg_.remap_stride));
    put(os, cfg_.omega);
    put(os, cfg_.epsilon);
    put(os, static_cast<std::int32_t>(cfg_.bootstrap_substeps));
    put(os, static_cast<std::int32_t>(cfg_.bootstrap_iterations));
    put(os, static_cast<std::int32_t>(step_));
    put(os, static_cast<std::int32_t>(since_remap_));
    for (double v : {energy_, enstrophy_, energy0_, enstrophy0_}) put(os, v);
    write_coefficients(os, zeta_hat_);
    write_stack(os, stack_);
    write_submap(os, current_);
    put(os, static_cast<std::uint64_t>(buffer_.size()));
    for (const auto& u : buffer_) {
        put(os, u.time);
        for (int c = 0; c < 3; ++c) put_vector(os, u.comp[c].coefficients());
    }
    if (!os) throw Error("failed to write checkpoint");
}

std::string read_checkpoint_header(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0) throw Error("not a checkpoint");
    if (get<std::uint32_t>(is) != kCheckpointVersion) throw Error("unsupported checkpoint version");
    const auto n = get<std::uint64_t>(is);
    if (n > (1u << 26)) throw Error("corrupt checkpoint header");
    std::string h(n, '\0');
    is.read(h.data(), static_cast<std::streamsize>(n));
    if (!is) throw Error("truncated checkpoint");
    return h;
}

Simulation Simulation::resume(std::istream& is, VorticityCase ic) {
    SimConfig cfg;
    cfg.k = get<std::int32_t>(is);
    cfg.L = get<std::int32_t>(is);
    cfg.dt = get<double>(is);
    cfg.T = get<double>(is);
    cfg.remap_stride = get<std::int32_t>(is);
    cfg.omega = get<Vec3>(is);
    cfg.epsilon = get<double>(is);
    cfg.bootstrap_substeps = get<std::int32_t>(is);
    cfg.bootstrap_iterations = get<std::int32_t>(is);
    Simulation s(cfg, std::move(ic), false);
    s.step_ = get<std::int32_t>(is);
    s.since_remap_ = get<std::int32_t>(is);
    s.energy_ = get<double>(is);
    s.enstrophy_ = get<double>(is);
    s.energy0_ = get<double>(is);
    s.enstrophy0_ = get<double>(is);
    s.zeta_hat_ = read_coefficients(is);
    s.stack_ = read_stack(is, s.disc_->map_space);
    s.current_ = read_submap(is, s.disc_->map_space);
    const auto nb = get<std::uint64_t>(is);
    if (nb > 3) throw Error("corrupt checkpoint velocity buffer");
    const std::size_t ncoef = s.disc_->velocity_space->split().num_coefficients();
    for (std::uint64_t i = 0; i < nb; ++i) {
        VelocitySpline u;
        u.time = get<double>(is);
        for (int c = 0; c < 3; ++c) {
            auto v = get_vector(is);
            if (v.size() != ncoef) throw Error("checkpoint velocity does not match the grid");
            u.comp[c] = SplineScalar(s.disc_->velocity_space, std::move(v));
        }
        s.buffer_.push_back(std::move(u));
    }
    return s;
}

double lipschitz_estimate(const VorticityCase& ic, const Vec3& omega, int L) {
    DynamicsGrid g(L);
    const double h = 1e-5;
    std::vector<UnitVec> probes;
    probes.reserve(static_cast<std::size_t>(g.size()) * 4);
    for (int i = 0; i < g.size(); ++i) {
        const auto f = tangent_frame(g.point(i));
        for (const Vec3& e : {f.e1, f.e2}) {
            probes.push_back(project_to_sphere(g.point(i).vec() + h * e));
            probes.push_back(project_to_sphere(g.point(i).vec() - h * e));
        }
    }
    const auto v = ic.sample(probes);
    double lip = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        double s = 0.0;
        for (int d = 0; d < 2; ++d) {
            const std::size_t a = 4 * static_cast<std::size_t>(i) + 2 * d;
            const double fa = v[a] + 2.0 * dot(omega, probes[a]);
            const double fb = v[a + 1] + 2.0 * dot(omega, probes[a + 1]);
            const double q = (fa - fb) / (2 * h);
            s += q * q;
        }
        lip = std::max(lip, std::sqrt(s));
    }
    return lip;
}

ErrorReport evaluate_errors(const Simulation& sim, int L_err) {
    ErrorReport r;
    const DynamicsGrid g(L_err);
    const auto& ic = sim.initial_condition();
    const auto w = sim.sample_absolute_vorticity(g.points());
    const auto w0 = ic.sample(g.points());
    std::vector<double> sq(w.size()), sq0(w.size());
    double err = 0.0, scale = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const double f = sim.planetary(g.point(i));
        sq[i] = w[i] * w[i];
        sq0[i] = (w0[i] + f) * (w0[i] + f);
        if (ic.has_solution()) {
            const double exact = ic.zeta(g.point(i), sim.time());
            err = std::max(err, std::abs(w[i] - f - exact));
            scale = std::max(scale, std::abs(exact));
        }
    }
    if (ic.has_solution()) {
        r.vorticity_abs_error = err;
        r.vorticity_error = scale > 0.0 ? err / scale : err;
    } else {
        r.vorticity_abs_error = r.vorticity_error = std::numeric_limits<double>::quiet_NaN();
    }
    r.enstrophy_error = relative_change(quadrature(g, sq), quadrature(g, sq0));
    r.energy_error = sim.diagnostics().energy_error;
    r.lipschitz = lipschitz_estimate(ic, sim.config().omega, std::min(L_err, 128));
    return r;
}

}  // namespace cmsphere
