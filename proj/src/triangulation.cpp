#include "cmsphere/triangulation.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace cmsphere {

namespace {

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double min3(const std::array<double, 3>& d) { return std::min({d[0], d[1], d[2]}); }

}  // namespace

double LatLonGridIndex::dlon() const { return 2.0 * std::numbers::pi / nlon; }

double solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
    const double num = det3(a, b, c);
    const double den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    return 2.0 * std::atan2(num, den);
}

SphericalTriangulation::SphericalTriangulation(std::vector<UnitVec> vertices, std::vector<Tri> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    const int nv = num_vertices(), nt = num_triangles();
    for (auto& t : triangles_) {
        for (int v : t)
            if (v < 0 || v >= nv) throw Error("triangle references a missing vertex");
        if (det3(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]) < 0.0) std::swap(t[1], t[2]);
    }

    std::unordered_map<std::uint64_t, int> edge_of;
    edge_of.reserve(3 * nt / 2 + 1);
    tri_edges_.resize(nt);
    for (int t = 0; t < nt; ++t) {
        for (int k = 0; k < 3; ++k) {
            const int a = triangles_[t][k], b = triangles_[t][(k + 1) % 3];
            auto [it, inserted] = edge_of.emplace(edge_key(a, b), num_edges());
            if (inserted) {
                edges_.push_back({std::min(a, b), std::max(a, b)});
                edge_tris_.push_back({t, -1});
            } else {
                auto& et = edge_tris_[it->second];
                if (et[1] != -1) throw Error("non-manifold edge in triangulation");
                et[1] = t;
            }
            tri_edges_[t][k] = it->second;
        }
    }
    neighbors_.resize(nt);
    for (int t = 0; t < nt; ++t) {
        for (int k = 0; k < 3; ++k) {
            const auto& et = edge_tris_[tri_edges_[t][k]];
            if (et[1] == -1) throw Error("triangulation is not closed");
            neighbors_[t][k] = et[0] == t ? et[1] : et[0];
        }
    }

    vertex_tri_.assign(nv, -1);
    for (int t = 0; t < nt; ++t)
        for (int v : triangles_[t])
            if (vertex_tri_[v] < 0) vertex_tri_[v] = t;
    frames_.reserve(nv);
    for (int v = 0; v < nv; ++v) {
        if (vertex_tri_[v] < 0) throw Error("unused vertex in triangulation");
        frames_.push_back(tangent_frame(vertices_[v]));
    }

    macro_inverse_.resize(nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tr = triangles_[t];
        const Mat3 m = Mat3::from_columns(vertices_[tr[0]], vertices_[tr[1]], vertices_[tr[2]]);
        if (!invert(m, macro_inverse_[t], 1e-15)) throw Error("degenerate macro-triangle");
    }
}

double SphericalTriangulation::max_edge_length() const {
    double h = 0.0;
    for (const auto& e : edges_) h = std::max(h, arc_distance(vertices_[e[0]], vertices_[e[1]]));
    return h;
}

std::array<double, 3> SphericalTriangulation::edge_tests(int t, const Vec3& p) const {
    const auto& tr = triangles_[t];
    const Vec3& a = vertices_[tr[0]];
    const Vec3& b = vertices_[tr[1]];
    const Vec3& c = vertices_[tr[2]];
    return {det3(a, b, p), det3(b, c, p), det3(c, a, p)};
}

bool SphericalTriangulation::contains(int t, const Vec3& p) const {
    const auto d = edge_tests(t, p);
    return d[0] >= 0.0 && d[1] >= 0.0 && d[2] >= 0.0;
}

LocateResult SphericalTriangulation::finish(int t, const Vec3& p, bool fallback) const {
    LocateResult r;
    r.triangle = t;
    r.bary = barycentric(t, p);
    r.used_fallback = fallback;
    return r;
}

LocateResult SphericalTriangulation::locate_exhaustive(const Vec3& p) const {
    int best = -1;
    double best_min = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < num_triangles(); ++t) {
        const auto d = edge_tests(t, p);
        if (dot(vertices_[triangles_[t][0]], p) <= -0.5) continue;  // skip the antipodal side
        const double m = min3(d);
        if (m >= 0.0) return finish(t, p, false);
        if (m > best_min) {
            best_min = m;
            best = t;
        }
    }
    if (best < 0) throw Error("point location failed");
    return finish(best, p, false);
}

LocateResult SphericalTriangulation::locate_walk(const Vec3& p, int hint) const {
    if (hint < 0 || hint >= num_triangles()) hint = 0;
    int t = hint;
    std::array<int, 16> recent;
    recent.fill(-1);
    const int max_steps = num_triangles() + 8;
    for (int step = 0; step < max_steps; ++step) {
        const auto d = edge_tests(t, p);
        int worst = 0;
        for (int k = 1; k < 3; ++k)
            if (d[k] < d[worst]) worst = k;
        if (d[worst] >= 0.0) {
            // A point on a shared edge or vertex belongs to the lowest-index triangle.
            if (d[0] == 0.0 || d[1] == 0.0 || d[2] == 0.0) return locate_exhaustive(p);
            return finish(t, p, false);
        }
        const int next = neighbors_[t][worst];
        if (std::find(recent.begin(), recent.end(), next) != recent.end()) break;
        recent[step % recent.size()] = t;
        t = next;
    }
    LocateResult r = locate_exhaustive(p);
    r.used_fallback = true;
    return r;
}

LocateResult SphericalTriangulation::locate_hierarchical(const Vec3& p) const {
    const auto tests = [&](const Tri& tr) {
        const Vec3& a = vertices_[tr[0]];
        const Vec3& b = vertices_[tr[1]];
        const Vec3& c = vertices_[tr[2]];
        return min3({det3(a, b, p), det3(b, c, p), det3(c, a, p)});
    };
    int t = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(hierarchy_[0].size()); ++i) {
        const double m = tests(hierarchy_[0][i]);
        if (m > best) {
            best = m;
            t = i;
        }
    }
    for (std::size_t l = 1; l < hierarchy_.size(); ++l) {
        int pick = 4 * t;
        best = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < 4; ++c) {
            const double m = tests(hierarchy_[l][4 * t + c]);
            if (m > best) {
                best = m;
                pick = 4 * t + c;
            }
        }
        t = pick;
    }
    // Descend into the final level, then let the walk settle ties.
    if (!hierarchy_.empty()) {
        int pick = 4 * t;
        best = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < 4; ++c) {
            const double m = min3(edge_tests(4 * t + c, p));
            if (m > best) {
                best = m;
                pick = 4 * t + c;
            }
        }
        t = pick;
    }
    return locate_walk(p, t);
}

LocateResult SphericalTriangulation::locate_fast(const Vec3& p) const {
    if (!grid_index_) throw Error("locate_fast requires a lat-lon triangulation");
    const auto& g = *grid_index_;
    const auto lc = to_lon_colat(p);
    int q = static_cast<int>(std::floor(lc.lon / g.dlon()));
    q = std::clamp(q, 0, g.nlon - 1);
    const auto row_it = std::upper_bound(g.colat.begin(), g.colat.end(), lc.colat);
    const int r = static_cast<int>(row_it - g.colat.begin()) - 1;  // row above p, -1 for the cap
    int t;
    if (r < 0) {
        t = g.north_cap(q);
    } else if (r >= g.nrows() - 1) {
        t = g.south_cap(q);
    } else {
        t = g.cell_triangle(r, q, 0);
        if (!contains(t, p)) t = g.cell_triangle(r, q, 1);
    }
    return locate_walk(p, t);
}

LocateResult SphericalTriangulation::locate(const Vec3& p, int hint) const {
    if (hint >= 0) return locate_walk(p, hint);
    if (!hierarchy_.empty()) return locate_hierarchical(p);
    if (grid_index_) return locate_fast(p);
    return locate_walk(p, 0);
}

std::string SphericalTriangulation::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"vertices\":[";
    for (int i = 0; i < num_vertices(); ++i) {
        const Vec3& v = vertices_[i];
        os << (i ? "," : "") << '[' << v.x << ',' << v.y << ',' << v.z << ']';
    }
    os << "],\"triangles\":[";
    for (int t = 0; t < num_triangles(); ++t) {
        const auto& tr = triangles_[t];
        os << (t ? "," : "") << '[' << tr[0] << ',' << tr[1] << ',' << tr[2] << ']';
    }
    os << "]}";
    return os.str();
}

SphericalTriangulation build_icosahedral(int k) {
    if (k < 0 || k > 10) throw Error("icosahedral level out of range");
    const double z = 1.0 / std::sqrt(5.0), r = 2.0 / std::sqrt(5.0);
    const double pi = std::numbers::pi;
    std::vector<UnitVec> verts;
    verts.push_back(UnitVec::assume_unit({0.0, 0.0, 1.0}));
    for (int i = 0; i < 5; ++i) {
        const double a = 2.0 * pi * i / 5.0;
        verts.push_back(project_to_sphere({r * std::cos(a), r * std::sin(a), z}));
    }
    for (int i = 0; i < 5; ++i) {
        const double a = 2.0 * pi * i / 5.0 + pi / 5.0;
        verts.push_back(project_to_sphere({r * std::cos(a), r * std::sin(a), -z}));
    }
    verts.push_back(UnitVec::assume_unit({0.0, 0.0, -1.0}));

    using Tri = SphericalTriangulation::Tri;
    std::vector<Tri> tris;
    for (int i = 0; i < 5; ++i) {
        const int u0 = 1 + i, u1 = 1 + (i + 1) % 5, l0 = 6 + i, l1 = 6 + (i + 1) % 5;
        tris.push_back({0, u0, u1});
        tris.push_back({u0, l0, u1});
        tris.push_back({u1, l0, l1});
        tris.push_back({11, l1, l0});
    }
    for (auto& t : tris)
        if (det3(verts[t[0]], verts[t[1]], verts[t[2]]) < 0.0) std::swap(t[1], t[2]);

    std::vector<std::vector<Tri>> hierarchy;
    for (int level = 0; level < k; ++level) {
        hierarchy.push_back(tris);
        std::unordered_map<std::uint64_t, int> mid;
        mid.reserve(tris.size() * 2);
        const auto midpoint = [&](int a, int b) {
            auto [it, inserted] = mid.emplace(edge_key(a, b), static_cast<int>(verts.size()));
            if (inserted) verts.push_back(project_to_sphere(verts[a].vec() + verts[b].vec()));
            return it->second;
        };
        std::vector<Tri> next;
        next.reserve(4 * tris.size());
        for (const auto& t : tris) {
            const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({ab, t[1], bc});
            next.push_back({ca, bc, t[2]});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }

    SphericalTriangulation out(std::move(verts), std::move(tris));
    out.level_ = k;
    out.hierarchy_ = std::move(hierarchy);
    return out;
}

SphericalTriangulation build_latlon_grid_triangulation(const LatLonGridIndex& g) {
    if (g.nlon < 3 || g.nrows() < 1) throw Error("lat-lon triangulation needs nlon >= 3 and one row");
    for (int i = 0; i < g.nrows(); ++i) {
        if (!(g.colat[i] > 0.0 && g.colat[i] < std::numbers::pi)) throw Error("colatitude out of range");
        if (i > 0 && !(g.colat[i] > g.colat[i - 1])) throw Error("colatitudes must increase");
    }
    std::vector<UnitVec> verts;
    verts.reserve(2 + g.nrows() * g.nlon);
    verts.push_back(UnitVec::assume_unit({0.0, 0.0, 1.0}));
    for (int p = 0; p < g.nrows(); ++p)
        for (int q = 0; q < g.nlon; ++q) verts.push_back(from_lon_colat(q * g.dlon(), g.colat[p]));
    verts.push_back(UnitVec::assume_unit({0.0, 0.0, -1.0}));

    using Tri = SphericalTriangulation::Tri;
    std::vector<Tri> tris;
    const int L = g.nrows(), n = g.nlon;
    tris.reserve(2 * (L + 0) * n);
    for (int q = 0; q < n; ++q) tris.push_back({g.north_pole(), g.grid_vertex(0, q), g.grid_vertex(0, (q + 1) % n)});
    for (int p = 0; p + 1 < L; ++p) {
        for (int q = 0; q < n; ++q) {
            const int q1 = (q + 1) % n;
            tris.push_back({g.grid_vertex(p, q), g.grid_vertex(p, q1), g.grid_vertex(p + 1, q1)});
            tris.push_back({g.grid_vertex(p, q), g.grid_vertex(p + 1, q1), g.grid_vertex(p + 1, q)});
        }
    }
    for (int q = 0; q < n; ++q)
        tris.push_back({g.south_pole(), g.grid_vertex(L - 1, (q + 1) % n), g.grid_vertex(L - 1, q)});

    SphericalTriangulation out(std::move(verts), std::move(tris));
    out.grid_index_ = g;
    return out;
}

PowellSabinSplit::PowellSabinSplit(const SphericalTriangulation& tri)
    : tri_(&tri), nv_(tri.num_vertices()), ne_(tri.num_edges()) {
    const int nt = tri.num_triangles();
    ncoef_ = nv_ + 3 * ne_ + 7 * nt;

    centers_.resize(nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tr = tri.triangle(t);
        const Vec3& a = tri.vertex(tr[0]);
        const Vec3& b = tri.vertex(tr[1]);
        const Vec3& c = tri.vertex(tr[2]);
        // Spherical incenter: vertices weighted by the sines of the opposite sides.
        const Vec3 w = norm(cross(b, c)) * a + norm(cross(c, a)) * b + norm(cross(a, b)) * c;
        centers_[t] = project_to_sphere(w);
    }

    edge_points_.resize(ne_);
    edge_ab_.resize(ne_);
    for (int e = 0; e < ne_; ++e) {
        const auto [ia, ib] = tri.edge(e);
        const auto [t0, t1] = tri.edge_triangles(e);
        const Vec3& va = tri.vertex(ia);
        const Vec3& vb = tri.vertex(ib);
        Vec3 d = cross(cross(centers_[t0], centers_[t1]), cross(va, vb));
        const double dn = norm(d);
        if (!(dn > 1e-14)) throw SplitDegenerate("split point undefined on edge " + std::to_string(e));
        d = d / dn;
        if (dot(d, va + vb) < 0.0) d = -d;
        // Solve d = alpha*va + beta*vb in the plane of the edge.
        const double g = dot(va, vb);
        const double ra = dot(d, va), rb = dot(d, vb);
        const double den = 1.0 - g * g;
        const double alpha = (ra - g * rb) / den, beta = (rb - g * ra) / den;
        if (!(alpha > 0.0 && beta > 0.0))
            throw SplitDegenerate("split point outside edge " + std::to_string(e));
        edge_points_[e] = UnitVec::assume_unit(d);
        edge_ab_[e] = {alpha, beta};
    }

    subs_.resize(6 * static_cast<std::size_t>(nt));
    wedge_normals_.resize(nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tr = tri.triangle(t);
        const Vec3& c = centers_[t];
        std::array<Vec3, 6> P;
        std::array<int, 3> ecoef_mid, ecoef_near_start, ecoef_near_end;
        for (int k = 0; k < 3; ++k) {
            const int e = tri.triangle_edge(t, k);
            P[2 * k] = tri.vertex(tr[k]);
            P[2 * k + 1] = edge_points_[e];
            const bool forward = tri.edge(e)[0] == tr[k];
            ecoef_mid[k] = edge_coef(e, 1);
            ecoef_near_start[k] = edge_coef(e, forward ? 0 : 2);
            ecoef_near_end[k] = edge_coef(e, forward ? 2 : 0);
        }
        for (int j = 0; j < 6; ++j) wedge_normals_[t][j] = cross(c, P[j]);
        for (int k = 0; k < 3; ++k) {
            const int vk = vertex_coef(tr[k]), vk1 = vertex_coef(tr[(k + 1) % 3]);
            Sub& s0 = subs_[6 * t + 2 * k];
            s0.w = {P[2 * k], P[2 * k + 1], c};
            s0.coef = {vk, ecoef_mid[k], tri_coef(t, 6), ecoef_near_start[k], tri_coef(t, k), tri_coef(t, 3 + k)};
            Sub& s1 = subs_[6 * t + 2 * k + 1];
            s1.w = {P[2 * k + 1], P[(2 * k + 2) % 6], c};
            s1.coef = {ecoef_mid[k], vk1, tri_coef(t, 6), ecoef_near_end[k], tri_coef(t, 3 + k),
                       tri_coef(t, (k + 1) % 3)};
        }
        for (int s = 0; s < 6; ++s) {
            Sub& sub = subs_[6 * t + s];
            if (!(solid_angle(sub.w[0], sub.w[1], sub.w[2]) > 1e-14))
                throw SplitDegenerate("degenerate subtriangle in triangle " + std::to_string(t));
            if (!invert(Mat3::from_columns(sub.w[0], sub.w[1], sub.w[2]), sub.inverse, 1e-16))
                throw BarycentricDegenerate("singular subtriangle in triangle " + std::to_string(t));
        }
    }
}

int PowellSabinSplit::locate_sub(int t, const Vec3& p, Vec3& bary) const {
    const auto& n = wedge_normals_[t];
    std::array<double, 6> d;
    for (int j = 0; j < 6; ++j) d[j] = dot(p, n[j]);
    int s = -1;
    for (int j = 0; j < 6; ++j) {
        if (d[j] >= 0.0 && d[(j + 1) % 6] <= 0.0) {
            s = j;
            break;
        }
    }
    if (s >= 0) {
        bary = subs_[6 * t + s].inverse * p;
        if (std::min({bary.x, bary.y, bary.z}) < -1e-10) s = -1;
    }
    if (s < 0) {
        double best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < 6; ++j) {
            const Vec3 b = subs_[6 * t + j].inverse * p;
            const double m = std::min({b.x, b.y, b.z});
            if (m > best) {
                best = m;
                s = j;
                bary = b;
            }
        }
    }
    bary.x = std::max(bary.x, 0.0);
    bary.y = std::max(bary.y, 0.0);
    bary.z = std::max(bary.z, 0.0);
    return s;
}

double PowellSabinSplit::max_coplanarity_residual() const {
    double r = 0.0;
    for (int e = 0; e < ne_; ++e) {
        const auto [t0, t1] = tri_->edge_triangles(e);
        const auto [a, b] = tri_->edge(e);
        r = std::max(r, std::abs(det3(centers_[t0], centers_[t1], edge_points_[e])));
        r = std::max(r, std::abs(det3(tri_->vertex(a), tri_->vertex(b), edge_points_[e])));
    }
    return r;
}

}  // namespace cmsphere
