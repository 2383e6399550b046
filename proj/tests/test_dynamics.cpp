#include "doctest.h"

#include <numbers>
#include <sstream>

#include "cmsphere/dynamics.hpp"
#include "support.hpp"

using namespace cmsphere;

namespace {

const double kPi = std::numbers::pi;

SpectralField solid_stream(int L, double rate) {
    // psi = rate * z gives u = rate * (z x x).
    SpectralField psi(L);
    psi.at(1, 0) = rate / std::sqrt(3.0 / (4.0 * kPi));
    return psi;
}

double max_vertex_mismatch(const SphereMap& a, const SphereMap& b) {
    double e = 0.0;
    for (int c = 0; c < 3; ++c) {
        const auto& x = a.displacement(c).coefficients();
        const auto& y = b.displacement(c).coefficients();
        for (std::size_t i = 0; i < x.size(); ++i) e = std::max(e, std::abs(x[i] - y[i]));
    }
    return e;
}

}  // namespace

TEST_CASE("Lagrange extrapolation of buffered velocities") {
    const Discretization disc(1, 16);
    const auto g = [](double t) { return 0.3 + 0.5 * t - 0.7 * t * t; };
    std::vector<VelocitySpline> buf;
    for (int i = 0; i < 3; ++i) buf.push_back(velocity_spline(disc, solid_stream(16, g(0.1 * i)), 0.1 * i));
    const auto base = velocity_spline(disc, solid_stream(16, 1.0), 0.0);
    const auto pts = testsupport::random_points(200, 4);
    for (const auto& x : pts) {
        for (int i = 0; i < 3; ++i) CHECK(norm(extrapolate_velocity(buf, 0.1 * i, x) - tangential(buf[i].eval(x), x)) <= 1e-15);
        for (double t : {0.25, 0.3, 0.41}) {
            const Vec3 ref = g(t) * tangential(base.eval(x), x);
            CHECK(norm(extrapolate_velocity(buf, t, x) - ref) <= 1e-13);
        }
    }
    std::vector<VelocitySpline> same(3, base);
    for (int i = 0; i < 3; ++i) same[i].time = 0.1 * i;
    for (const auto& x : pts) CHECK(norm(extrapolate_velocity(same, 0.37, x) - tangential(base.eval(x), x)) <= 1e-14);
    const auto w = lagrange_weights(std::vector<double>{0.0, 1.0, 2.0}, 3.0);
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK(w[1] == doctest::Approx(-3.0));
    CHECK(w[2] == doctest::Approx(3.0));
}

TEST_CASE("velocity spline invariants at vertices") {
    const Discretization disc(1, 24);
    SpectralField psi(24);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int m = 0; m < 10; ++m)
        for (int l = std::max(m, 1); l < 10; ++l) psi.at(l, m) = m ? cplx(u(rng), u(rng)) : cplx(u(rng), 0);
    const auto vs = velocity_spline(disc, psi, 0.0);
    const auto& T = disc.velocity_space->triangulation();
    std::vector<UnitVec> verts(T.vertices().begin(), T.vertices().end());
    const auto ref = velocity_from_stream(psi, verts);
    double scale = 0.0;
    for (const auto& r : ref) scale = std::max(scale, norm(r));
    for (int v = 0; v < T.num_vertices(); ++v) {
        const Vec3 val = vs.eval(T.vertex(v));
        CHECK(norm(val - ref[v]) <= 1e-12 * scale);
        CHECK(std::abs(dot(val, T.vertex(v))) <= 1e-12 * scale);
    }
}

TEST_CASE("velocity reconstruction") {
    // Rossby-Haurwitz velocity at off-grid points converges at third order.
    const auto rh = rh_wave(2 * kPi);
    const auto pts = testsupport::random_points(3000, 5);
    std::vector<double> hs, es;
    for (int L : {16, 32, 64, 128}) {
        const Discretization disc(0, L);
        const auto u = reconstruct_velocity(disc, rh.sample(disc.grid.points()), 0.0);
        double e = 0.0;
        for (const auto& x : pts) e = std::max(e, norm(u.eval(x) - rh.velocity(x)));
        hs.push_back(1.0 / L);
        es.push_back(e);
    }
    MESSAGE("RH velocity errors " << es[0] << " " << es[1] << " " << es[2] << " " << es[3]);
    CHECK(testsupport::loglog_slope(hs, es) >= 2.7);

    const Discretization d16(0, 16);
    const auto zero = reconstruct_velocity(d16, std::vector<double>(d16.grid.size(), 0.0), 0.0);
    for (int c = 0; c < 3; ++c)
        for (double v : zero.comp[c].coefficients()) CHECK(v == 0.0);

    // The narrow jet is resolved by the spline at third order; the spectral
    // part is exact to round-off from L=128 on.
    const auto jet = zonal_jet();
    std::vector<double> jh, je;
    for (int L : {64, 128, 256}) {
        const Discretization d(0, L);
        const auto uj = reconstruct_velocity(d, jet.sample(d.grid.points()), 0.0);
        double e = 0.0, scale = 0.0;
        for (const auto& x : pts) {
            e = std::max(e, norm(uj.eval(x) - jet.velocity(x)));
            scale = std::max(scale, norm(jet.velocity(x)));
        }
        jh.push_back(1.0 / L);
        je.push_back(e / scale);
    }
    MESSAGE("zonal jet velocity relative errors at L=64,128,256: " << je[0] << " " << je[1] << " " << je[2]);
    CHECK(je[1] <= 2e-3);
    CHECK(je[2] <= 1e-3);
    CHECK(testsupport::loglog_slope(jh, je) >= 2.7);
}

TEST_CASE("GALS step") {
    const auto S = make_spline_space(build_icosahedral(3));
    const auto id = SphereMap::identity(S, 0.0, 0.0);
    const VelocityFn zero = [](const UnitVec&, double) { return Vec3{}; };
    const auto same = gals_step(id, zero, 0.0, 0.1, 1e-5);
    CHECK(max_vertex_mismatch(same, id) <= 1e-12);
    CHECK(same.t_end() == 0.1);

    // One step from the identity is the fit of the trajectory map itself.
    const VelocityFn rot = [](const UnitVec& x, double t) { return (1.0 + t) * cross(Vec3{0, 0, 1}, x.vec()); };
    const auto one = gals_step(id, rot, 0.0, 0.1, 1e-5);
    const auto& T = S->triangulation();
    MapHermiteData d{HermiteData(T.num_vertices()), HermiteData(T.num_vertices()), HermiteData(T.num_vertices())};
    for (int v = 0; v < T.num_vertices(); ++v) {
        const auto st = eps_stencil(T.frame(v), 1e-5);
        std::array<Vec3, 4> g;
        for (int j = 0; j < 4; ++j) g[j] = rk4_backward(rot, st.points[j], 0.1, 0.1).vec() - st.points[j].vec();
        const auto q = stencil_quotients(g, 1e-5);
        for (int c = 0; c < 3; ++c) {
            d[c].value[v] = q.value[c];
            d[c].d1[v] = q.d1[c];
            d[c].d2[v] = q.d2[c];
        }
    }
    CHECK(max_vertex_mismatch(one, SphereMap::from_displacement(S, d, 0.0, 0.1)) == 0.0);

    // Steady rotation: n steps give the rotation by -n dt.
    const VelocityFn steady = [](const UnitVec& x, double) { return cross(Vec3{0, 0.6, 0.8}, x.vec()); };
    const auto pts = testsupport::random_points(2000, 6);
    std::vector<double> hs, es;
    for (int k = 2; k <= 4; ++k) {
        const auto Sk = make_spline_space(build_icosahedral(k));
        SphereMap m = SphereMap::identity(Sk, 0.0, 0.0);
        const int n = 5;
        for (int i = 0; i < n; ++i) m = gals_step(m, steady, 0.05 * i, 0.05, 1e-5);
        const Mat3 R = Mat3::rotation({0, 0.6, 0.8}, -0.05 * n);
        double e = 0.0;
        for (const auto& x : pts) e = std::max(e, norm(m.eval(x).vec() - R * x.vec()));
        hs.push_back(Sk->triangulation().max_edge_length());
        es.push_back(e);
    }
    MESSAGE("rotation GALS errors " << es[0] << " " << es[1] << " " << es[2]);
    CHECK(testsupport::loglog_slope(hs, es) >= 2.5);
    CHECK(es.back() <= 1e-4);
}

TEST_CASE("vorticity sampling at the start") {
    SimConfig cfg;
    cfg.k = 2;
    cfg.L = 16;
    cfg.dt = 0.05;
    cfg.T = 0.1;
    const auto ic = gaussian_vortex();
    const auto pts = testsupport::random_points(500, 7);

    // Bootstrapping replaces the identity, so sample from a state that has not moved.
    cfg.omega = {0.3, -0.2, 2 * kPi};
    Simulation s(cfg, rest_state());
    for (double z : s.sample_vorticity(pts)) CHECK(std::abs(z) <= 1e-12);

    SimConfig still = cfg;
    still.omega = {0, 0, 0};
    Simulation g(still, ic);
    // Identity labels after zero steps are not available; check the pull-back
    // with an empty stack and an identity in-progress map instead.
    MapStack empty;
    const auto id = SphereMap::identity(g.discretization().map_space, 0.0, 0.0);
    for (const auto& x : pts) {
        const UnitVec y = empty.eval(x, {}, &id);
        CHECK(ic.zeta0(y) == ic.zeta0(x));
    }
}

TEST_CASE("run loop boundaries and remapping") {
    SimConfig cfg;
    cfg.k = 1;
    cfg.L = 16;
    cfg.dt = 0.05;
    cfg.T = 0.1;
    cfg.remap_stride = 10;
    Simulation a(cfg, solid_body(1.0));
    CHECK(a.finished());
    CHECK(a.stack().size() == 0);
    CHECK(a.current().t_begin() == 0.0);
    CHECK(a.current().t_end() == doctest::Approx(0.1));
    CHECK(a.velocity_buffer().size() == 3);

    cfg.T = 0.3;
    cfg.remap_stride = 1;
    Simulation b(cfg, solid_body(1.0));
    b.run();
    CHECK(b.step_index() == 6);
    CHECK(b.stack().size() == 5);  // the two bootstrap steps share one submap
    for (int i = 1; i < b.stack().size(); ++i) CHECK(b.stack()[i].t_begin() == b.stack()[i - 1].t_end());

    cfg.remap_stride = 0;
    Simulation c(cfg, solid_body(1.0));
    c.run();
    CHECK(c.stack().size() == 0);
    CHECK(c.current().t_end() == doctest::Approx(0.3));

    cfg.remap_stride = 3;
    Simulation d(cfg, solid_body(1.0));
    d.run();
    CHECK(d.stack().size() == 2);
    CHECK(d.stack()[0].t_end() == doctest::Approx(0.15));

    SimConfig bad = cfg;
    bad.dt = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.L = 4;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.T = 0.01;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero vorticity stays at rest under rotation") {
    SimConfig cfg;
    cfg.k = 2;
    cfg.L = 16;
    cfg.dt = 0.01;
    cfg.T = 1.0;
    cfg.omega = {0.0, 0.0, 2 * kPi};
    Simulation s(cfg, rest_state());
    s.run();
    CHECK(s.step_index() == 100);
    const auto pts = testsupport::random_points(2000, 8);
    double zmax = 0.0, xmax = 0.0;
    const auto z = s.sample_vorticity(pts);
    const auto lab = s.pull_back(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        zmax = std::max(zmax, std::abs(z[i]));
        xmax = std::max(xmax, norm(lab[i].vec() - pts[i].vec()));
    }
    CHECK(zmax <= 1e-12);
    CHECK(xmax <= 1e-12);
    for (const auto& u : s.velocity_buffer())
        for (int c = 0; c < 3; ++c)
            for (double v : u.comp[c].coefficients()) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("solid-body vorticity is steady") {
    const auto ic = solid_body(2.0);
    const auto pts = testsupport::random_points(3000, 9);
    std::vector<double> hs, es, ens;
    for (int k = 2; k <= 3; ++k) {
        SimConfig cfg;
        cfg.k = k;
        cfg.L = 1 << (k + 3);
        cfg.dt = 1.0 / (1 << (k + 2));
        cfg.T = 1.0;
        cfg.omega = {0.0, 0.0, 2 * kPi};
        Simulation s(cfg, ic);
        s.run();
        const auto z = s.sample_vorticity(pts);
        double e = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) e = std::max(e, std::abs(z[i] - ic.zeta0(pts[i])));
        hs.push_back(s.discretization().map_space->triangulation().max_edge_length());
        es.push_back(e);
        ens.push_back(std::abs(s.diagnostics().energy_error));
    }
    MESSAGE("solid-body vorticity drift " << es[0] << " " << es[1] << ", energy drift " << ens[0] << " " << ens[1]);
    CHECK(ens[1] <= 2.5e-3);
    CHECK(ens[1] < 0.25 * ens[0]);
    CHECK(es[1] <= 2.5e-3);
    CHECK(testsupport::loglog_slope(hs, es) >= 2.0);
}

TEST_CASE("bootstrap of a steady jet") {
    SimConfig cfg;
    cfg.k = 3;
    cfg.L = 64;
    cfg.dt = 1.0 / 64;
    cfg.T = 2.0 / 64;
    const auto jet = zonal_jet();
    Simulation s(cfg, jet);
    const auto& buf = s.velocity_buffer();
    const auto pts = testsupport::random_points(2000, 10);
    double d01 = 0.0, d02 = 0.0, scale = 0.0;
    for (const auto& x : pts) {
        const Vec3 u0 = buf[0].eval(x);
        d01 = std::max(d01, norm(buf[1].eval(x) - u0));
        d02 = std::max(d02, norm(buf[2].eval(x) - u0));
        scale = std::max(scale, norm(u0));
    }
    MESSAGE("bootstrap drift of the steady jet: " << d01 / scale << " " << d02 / scale);
    CHECK(d01 <= 2e-2 * scale);
    CHECK(d02 <= 2e-2 * scale);
}

TEST_CASE("checkpoint round trip") {
    SimConfig cfg;
    cfg.k = 1;
    cfg.L = 16;
    cfg.dt = 0.05;
    cfg.T = 0.4;
    cfg.remap_stride = 3;
    Simulation s(cfg, rh_wave(2 * kPi));
    for (int i = 0; i < 3; ++i) s.step();
    std::stringstream ss;
    s.write_checkpoint(ss, "{\"case\":\"rh_wave\"}");
    CHECK(read_checkpoint_header(ss) == "{\"case\":\"rh_wave\"}");
    Simulation r = Simulation::resume(ss, rh_wave(2 * kPi));
    CHECK(r.step_index() == s.step_index());
    CHECK(r.stack().size() == s.stack().size());
    const auto da = s.diagnostics(), db = r.diagnostics();
    CHECK(da.energy == db.energy);
    CHECK(da.enstrophy_error == db.enstrophy_error);
    s.run();
    r.run();
    const auto pts = testsupport::random_points(300, 11);
    CHECK(s.sample_vorticity(pts) == r.sample_vorticity(pts));
    CHECK(s.diagnostics().energy == r.diagnostics().energy);
}

TEST_CASE("remapping beats a single map on a rotation") {
    const VelocityFn u = [](const UnitVec& x, double) { return cross(Vec3{0.2, 0, 1}, x.vec()); };
    const auto S = make_spline_space(build_icosahedral(3));
    const auto pts = testsupport::random_points(2000, 12);
    const double dt = 1.0 / 32;
    const Mat3 R = Mat3::rotation(Vec3{0.2, 0, 1} / norm(Vec3{0.2, 0, 1}), -norm(Vec3{0.2, 0, 1}));
    double errs[2];
    for (int mode = 0; mode < 2; ++mode) {
        MapStack st;
        SphereMap cur = SphereMap::identity(S, 0, 0);
        std::vector<double> per_map;
        for (int n = 0; n < 32; ++n) {
            cur = gals_step(cur, u, n * dt, dt, 1e-5);
            if (mode == 1 && (n + 1) % 8 == 0) {
                st.push(cur);
                cur = SphereMap::identity(S, (n + 1) * dt, (n + 1) * dt);
            }
        }
        double e = 0.0;
        for (const auto& x : pts) e = std::max(e, norm(st.eval(x, {}, &cur).vec() - R * x.vec()));
        errs[mode] = e;
        if (mode == 1) {
            // Each stored submap is a rotation by 8 dt about the same axis.
            const Mat3 Rs = Mat3::rotation(Vec3{0.2, 0, 1} / norm(Vec3{0.2, 0, 1}), -8 * dt * norm(Vec3{0.2, 0, 1}));
            double sum = 0.0;
            for (const auto& m : st.maps()) {
                double em = 0.0;
                for (const auto& x : pts) em = std::max(em, norm(m.eval(x).vec() - Rs * x.vec()));
                sum += em;
            }
            // Rotations are isometries, so the telescoped bound is the plain sum.
            MESSAGE("stack error " << e << " <= sum of submap errors " << sum);
            CHECK(e <= 1.05 * sum);
        }
    }
    MESSAGE("single map " << errs[0] << ", remapped " << errs[1]);
    CHECK(errs[1] < errs[0]);
}
