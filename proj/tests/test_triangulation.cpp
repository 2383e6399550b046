#include "doctest.h"

#include <chrono>
#include <numbers>
#include <set>

#include "cmsphere/triangulation.hpp"
#include "support.hpp"

using namespace cmsphere;

namespace {

const double kTableH[] = {1.10715, 0.62832, 0.32637, 0.16483, 0.08263, 0.04134, 0.02067};

// Brute-force containment with the same predicate: smallest index whose three
// edge planes all have p on the inner side.
int brute_force(const SphericalTriangulation& T, const Vec3& p) {
    for (int t = 0; t < T.num_triangles(); ++t) {
        const auto& tr = T.triangle(t);
        const Vec3& a = T.vertex(tr[0]);
        const Vec3& b = T.vertex(tr[1]);
        const Vec3& c = T.vertex(tr[2]);
        if (dot(a, p) < 0.0) continue;
        if (dot(p, cross(a, b)) >= 0 && dot(p, cross(b, c)) >= 0 && dot(p, cross(c, a)) >= 0) return t;
    }
    return -1;
}

LatLonGridIndex uniform_rows(int rows, int nlon) {
    LatLonGridIndex g;
    g.nlon = nlon;
    for (int i = 0; i < rows; ++i) g.colat.push_back(std::numbers::pi * (i + 0.5) / rows);
    return g;
}

}  // namespace

TEST_CASE("icosahedral counts and edge lengths") {
    for (int k = 0; k <= 6; ++k) {
        const auto T = build_icosahedral(k);
        const long p = 1L << (2 * k);
        CHECK(T.num_vertices() == 10 * p + 2);
        CHECK(T.num_triangles() == 20 * p);
        CHECK(T.num_vertices() - T.num_edges() + T.num_triangles() == 2);
        CHECK(std::abs(T.max_edge_length() / kTableH[k] - 1.0) <= 0.02);
        for (const auto& v : T.vertices()) CHECK(std::abs(norm(v) - 1.0) <= 1e-14);
    }
    const auto T3 = build_icosahedral(3);
    CHECK(T3.num_vertices() == 642);
    CHECK(T3.max_edge_length() == doctest::Approx(0.16483).epsilon(0.02));
}

TEST_CASE("triangles are counterclockwise and conforming") {
    const auto T = build_icosahedral(3);
    for (int t = 0; t < T.num_triangles(); ++t) {
        const auto& tr = T.triangle(t);
        CHECK(det3(T.vertex(tr[0]), T.vertex(tr[1]), T.vertex(tr[2])) > 0.0);
        for (int k = 0; k < 3; ++k) {
            const int n = T.neighbor(t, k);
            const auto& tn = T.triangle(n);
            // The neighbour traverses the shared edge in the opposite direction.
            const int a = tr[k], b = tr[(k + 1) % 3];
            bool found = false;
            for (int j = 0; j < 3; ++j) found |= (tn[j] == b && tn[(j + 1) % 3] == a);
            CHECK(found);
        }
    }
}

TEST_CASE("walk and hierarchical location agree with brute force") {
    const auto T = build_icosahedral(4);
    const auto pts = testsupport::random_points(20000, 17);
    int hint = 0;
    for (const auto& p : pts) {
        const int ref = brute_force(T, p);
        const auto w = T.locate_walk(p, hint);
        const auto h = T.locate(p);
        CHECK(w.triangle == ref);
        CHECK(h.triangle == ref);
        CHECK(T.locate_exhaustive(p).triangle == ref);
        const Vec3 b = w.bary;
        CHECK(std::min({b.x, b.y, b.z}) >= -1e-12);
        hint = w.triangle;
    }
}

TEST_CASE("vertices and centroids locate") {
    const auto T = build_icosahedral(2);
    for (int v = 0; v < T.num_vertices(); ++v) {
        const auto r = T.locate(T.vertex(v));
        const auto& tr = T.triangle(r.triangle);
        CHECK((tr[0] == v || tr[1] == v || tr[2] == v));
        const double mx = std::max({r.bary.x, r.bary.y, r.bary.z});
        CHECK(mx == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (int t = 0; t < T.num_triangles(); ++t) {
        const auto& tr = T.triangle(t);
        const auto c = project_to_sphere(T.vertex(tr[0]).vec() + T.vertex(tr[1]).vec() + T.vertex(tr[2]).vec());
        CHECK(T.locate_walk(c, (t * 37) % T.num_triangles()).triangle == t);
    }
}

TEST_CASE("lat-lon triangulation: fast query equals walk equals scan") {
    const auto g = uniform_rows(16, 31);
    const auto T = build_latlon_grid_triangulation(g);
    CHECK(T.num_vertices() == 2 + 16 * 31);
    CHECK(T.num_triangles() == 2 * 16 * 31);
    CHECK(T.num_vertices() - T.num_edges() + T.num_triangles() == 2);
    const auto pts = testsupport::random_points(100000, 23);
    int mismatches = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& p = pts[i];
        const int f = T.locate_fast(p).triangle;
        const int w = T.locate_walk(p, static_cast<int>(i % T.num_triangles())).triangle;
        if (f != w) ++mismatches;
        if (i % 50 == 0 && f != brute_force(T, p)) ++mismatches;
    }
    CHECK(mismatches == 0);

    // Poles resolve into the cap fans.
    const int n = T.locate_fast(UnitVec::assume_unit({0, 0, 1})).triangle;
    CHECK(n < g.nlon);
    const int s = T.locate_fast(UnitVec::assume_unit({0, 0, -1})).triangle;
    CHECK(s >= g.south_cap(0));
    // Grid vertices by index arithmetic.
    for (int r = 0; r < g.nrows(); ++r)
        for (int q = 0; q < g.nlon; ++q) {
            const auto res = T.locate_fast(T.vertex(g.grid_vertex(r, q)));
            const auto& tr = T.triangle(res.triangle);
            const int v = g.grid_vertex(r, q);
            CHECK((tr[0] == v || tr[1] == v || tr[2] == v));
        }
}

TEST_CASE("Powell-Sabin split") {
    const auto T0 = build_icosahedral(0);
    const PowellSabinSplit ps0(T0);
    CHECK(ps0.num_subtriangles() == 120);
    // Equilateral macro-triangle: incenter = projected centroid.
    for (int t = 0; t < T0.num_triangles(); ++t) {
        const auto& tr = T0.triangle(t);
        const Vec3 c = T0.vertex(tr[0]).vec() + T0.vertex(tr[1]).vec() + T0.vertex(tr[2]).vec();
        CHECK(norm(ps0.center(t).vec() - c / norm(c)) <= 1e-15);
    }
    for (int k = 0; k <= 5; ++k) {
        const auto T = build_icosahedral(k);
        const PowellSabinSplit ps(T);
        CHECK(ps.max_coplanarity_residual() < 1e-13);
        CHECK(ps.num_subtriangles() == 6 * T.num_triangles());
    }
    const auto g = uniform_rows(12, 23);
    const auto TL = build_latlon_grid_triangulation(g);
    const PowellSabinSplit psl(TL);
    CHECK(psl.max_coplanarity_residual() < 1e-13);
}

TEST_CASE("PS subtriangles tile each macro-triangle and conform") {
    const auto T = build_icosahedral(2);
    const PowellSabinSplit ps(T);
    for (int t = 0; t < T.num_triangles(); ++t) {
        double area = 0.0;
        for (int s = 0; s < 6; ++s) {
            const auto& sub = ps.sub(t, s);
            area += solid_angle(sub.w[0], sub.w[1], sub.w[2]);
        }
        const auto& tr = T.triangle(t);
        CHECK(area == doctest::Approx(solid_angle(T.vertex(tr[0]), T.vertex(tr[1]), T.vertex(tr[2]))).epsilon(1e-12));
    }
    // Subtriangle edges on a macro-edge appear in both neighbours with the same control points.
    for (int e = 0; e < T.num_edges(); ++e) {
        const auto [t0, t1] = T.edge_triangles(e);
        std::set<int> c0, c1;
        for (int s = 0; s < 6; ++s) {
            for (int i = 0; i < 6; ++i) {
                c0.insert(ps.sub(t0, s).coef[i]);
                c1.insert(ps.sub(t1, s).coef[i]);
            }
        }
        for (int slot = 0; slot < 3; ++slot) {
            CHECK(c0.count(ps.edge_coef(e, slot)) == 1);
            CHECK(c1.count(ps.edge_coef(e, slot)) == 1);
        }
    }
    const auto pts = testsupport::random_points(5000, 5);
    for (const auto& p : pts) {
        const auto r = T.locate(p);
        Vec3 b;
        const int s = ps.locate_sub(r.triangle, p, b);
        const auto& sub = ps.sub(r.triangle, s);
        const Vec3 back = b.x * sub.w[0] + b.y * sub.w[1] + b.z * sub.w[2];
        CHECK(norm(back - p.vec()) <= 1e-12);
    }
}

TEST_CASE("mesh json dump") {
    const auto T = build_icosahedral(0);
    const std::string j = T.to_json();
    CHECK(j.rfind("{\"vertices\":[[", 0) == 0);
    CHECK(j.find("\"triangles\":[[") != std::string::npos);
}

TEST_CASE("k=6 build time") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto T = build_icosahedral(6);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(T.num_triangles() == 81920);
    CHECK(s < 5.0);
}
