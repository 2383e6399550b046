#include "cmsphere/spline.hpp"

#include <cmath>

namespace cmsphere {

std::shared_ptr<const SplineSpace> make_spline_space(SphericalTriangulation tri) {
    return std::make_shared<const SplineSpace>(std::move(tri));
}

SubLocation locate_sub(const SplineSpace& space, const Vec3& p, int hint) {
    const LocateResult r = space.triangulation().locate(p, hint);
    SubLocation loc;
    loc.triangle = r.triangle;
    loc.used_fallback = r.used_fallback;
    loc.sub = space.split().locate_sub(r.triangle, p, loc.bary);
    return loc;
}

SplineScalar::SplineScalar(std::shared_ptr<const SplineSpace> space, std::vector<double> coef)
    : space_(std::move(space)), coef_(std::move(coef)) {
    if (!space_ || static_cast<int>(coef_.size()) != space_->split().num_coefficients())
        throw Error("coefficient count does not match the spline space");
}

double SplineScalar::eval(const Vec3& /*p*/, const SubLocation& loc) const {
    const auto& sub = space_->split().sub(loc.triangle, loc.sub);
    double c[6];
    gather_local(sub, coef_.data(), c);
    return bb_value(c, loc.bary);
}

Vec3 SplineScalar::eval_grad(const Vec3& p, const SubLocation& loc) const {
    const auto& sub = space_->split().sub(loc.triangle, loc.sub);
    double c[6];
    gather_local(sub, coef_.data(), c);
    const Vec3 gb = bb_bary_gradient(c, loc.bary);
    const Vec3 g = sub.inverse.transposed() * gb;
    return tangential(g, p);
}

SplineScalar hermite_fit(std::shared_ptr<const SplineSpace> space, const HermiteData& data) {
    const auto& tri = space->triangulation();
    const auto& ps = space->split();
    const int nv = tri.num_vertices();
    if (data.size() != nv || static_cast<int>(data.d1.size()) != nv || static_cast<int>(data.d2.size()) != nv)
        throw Error("Hermite data size does not match the vertex count");

    // Each vertex carries the linear form x -> w.x that matches its value and
    // tangential gradient; coefficients next to the vertex are its blossom.
    std::vector<Vec3> w(nv);
    for (int v = 0; v < nv; ++v) {
        const auto& f = tri.frame(v);
        const Vec3 g = data.d1[v] * f.e1 + data.d2[v] * f.e2;
        w[v] = data.value[v] * f.base.vec() + 0.5 * g;
    }

    std::vector<double> coef(ps.num_coefficients(), 0.0);
    for (int v = 0; v < nv; ++v) coef[ps.vertex_coef(v)] = data.value[v];

    for (int e = 0; e < tri.num_edges(); ++e) {
        const auto [a, b] = tri.edge(e);
        const Vec3& E = ps.edge_point(e);
        const double ca = dot(w[a], E), cb = dot(w[b], E);
        coef[ps.edge_coef(e, 0)] = ca;
        coef[ps.edge_coef(e, 1)] = ps.edge_alpha(e) * ca + ps.edge_beta(e) * cb;
        coef[ps.edge_coef(e, 2)] = cb;
    }

    for (int t = 0; t < tri.num_triangles(); ++t) {
        const auto& tr = tri.triangle(t);
        const Vec3& C = ps.center(t);
        const Vec3 r{dot(w[tr[0]], C), dot(w[tr[1]], C), dot(w[tr[2]], C)};
        // Linear form at the centre: m.V_k = w_k.C for the three vertices.
        const Vec3 m = tri.macro_inverse(t).transposed() * r;
        coef[ps.tri_coef(t, 0)] = r.x;
        coef[ps.tri_coef(t, 1)] = r.y;
        coef[ps.tri_coef(t, 2)] = r.z;
        for (int k = 0; k < 3; ++k) coef[ps.tri_coef(t, 3 + k)] = dot(m, ps.edge_point(tri.triangle_edge(t, k)));
        coef[ps.tri_coef(t, 6)] = dot(m, C);
    }
    return SplineScalar(std::move(space), std::move(coef));
}

}  // namespace cmsphere
