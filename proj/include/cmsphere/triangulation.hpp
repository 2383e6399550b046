#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmsphere/geom.hpp"

namespace cmsphere {

class SplitDegenerate : public Error {
public:
    using Error::Error;
};

/// The vertex system of a subtriangle cannot be solved for barycentrics.
class BarycentricDegenerate : public Error {
public:
    using Error::Error;
};

/// Cell layout of a latitude-longitude triangulation: nlon uniform longitude
/// columns, rows at the given colatitudes, one pole vertex per cap.
struct LatLonGridIndex {
    int nlon = 0;
    std::vector<double> colat;  // increasing, strictly inside (0, pi)

    int nrows() const { return static_cast<int>(colat.size()); }
    double dlon() const;
    int north_pole() const { return 0; }
    int south_pole() const { return 1 + nrows() * nlon; }
    int grid_vertex(int row, int col) const { return 1 + row * nlon + col; }
    /// Triangle indices: north cap fan, then two per cell, then south cap fan.
    int north_cap(int col) const { return col; }
    int cell_triangle(int row, int col, int which) const { return nlon + 2 * (row * nlon + col) + which; }
    int south_cap(int col) const { return nlon + 2 * (nrows() - 1) * nlon + col; }
};

struct LocateResult {
    int triangle = -1;
    Vec3 bary;  // homogeneous: p = b0*v0 + b1*v1 + b2*v2
    bool used_fallback = false;
};

/// Conforming spherical triangulation with adjacency, per-vertex frames and
/// point location. Immutable after construction.
class SphericalTriangulation {
public:
    using Tri = std::array<int, 3>;

    /// Builds adjacency and frames; orients every triangle counterclockwise
    /// seen from outside. Throws Error if the mesh is not conforming.
    SphericalTriangulation(std::vector<UnitVec> vertices, std::vector<Tri> triangles);

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_triangles() const { return static_cast<int>(triangles_.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }

    const UnitVec& vertex(int i) const { return vertices_[i]; }
    std::span<const UnitVec> vertices() const { return vertices_; }
    const Tri& triangle(int t) const { return triangles_[t]; }
    std::span<const Tri> triangles() const { return triangles_; }
    /// Triangle across local edge k = (v[k], v[k+1]).
    int neighbor(int t, int k) const { return neighbors_[t][k]; }
    int triangle_edge(int t, int k) const { return tri_edges_[t][k]; }
    const std::array<int, 2>& edge(int e) const { return edges_[e]; }
    const std::array<int, 2>& edge_triangles(int e) const { return edge_tris_[e]; }
    const TangentFrame& frame(int v) const { return frames_[v]; }
    int incident_triangle(int v) const { return vertex_tri_[v]; }

    /// Icosahedral refinement level, or -1.
    int level() const { return level_; }
    const std::optional<LatLonGridIndex>& grid_index() const { return grid_index_; }

    double max_edge_length() const;

    /// det(v[k], v[k+1], p) for the three local edges; all >= 0 inside.
    std::array<double, 3> edge_tests(int t, const Vec3& p) const;
    bool contains(int t, const Vec3& p) const;
    Vec3 barycentric(int t, const Vec3& p) const { return macro_inverse_[t] * p; }
    /// Inverse of the matrix with the triangle's vertices as columns.
    const Mat3& macro_inverse(int t) const { return macro_inverse_[t]; }

    /// Walk from `hint` across the most violated edge. Falls back to the
    /// exhaustive scan when the walk revisits a triangle.
    LocateResult locate_walk(const Vec3& p, int hint) const;
    /// Smallest-index triangle containing p.
    LocateResult locate_exhaustive(const Vec3& p) const;
    /// Structured query for lat-lon meshes (requires grid_index()).
    LocateResult locate_fast(const Vec3& p) const;
    /// Best available strategy: hint walk, hierarchy, grid index, or scan.
    LocateResult locate(const Vec3& p, int hint = -1) const;

    /// JSON {vertices: [[x,y,z]...], triangles: [[i,j,k]...]}.
    std::string to_json() const;

private:
    friend SphericalTriangulation build_icosahedral(int k);
    friend SphericalTriangulation build_latlon_grid_triangulation(const LatLonGridIndex& index);

    LocateResult finish(int t, const Vec3& p, bool fallback) const;
    LocateResult locate_hierarchical(const Vec3& p) const;

    std::vector<UnitVec> vertices_;
    std::vector<Tri> triangles_;
    std::vector<std::array<int, 3>> neighbors_;
    std::vector<std::array<int, 3>> tri_edges_;
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<int, 2>> edge_tris_;
    std::vector<TangentFrame> frames_;
    std::vector<int> vertex_tri_;
    std::vector<Mat3> macro_inverse_;

    int level_ = -1;
    // Icosahedral hierarchy: triangles of every coarser level; children of
    // triangle t at level l are 4t..4t+3 at level l+1.
    std::vector<std::vector<Tri>> hierarchy_;
    std::optional<LatLonGridIndex> grid_index_;
};

/// k-th refinement of the icosahedron (one vertex at the north pole).
SphericalTriangulation build_icosahedral(int k);

/// Lat-lon triangulation of the rows in `index`, closed with pole fans.
SphericalTriangulation build_latlon_grid_triangulation(const LatLonGridIndex& index);

/// Powell-Sabin split geometry: spherical incenters, edge split points on the
/// great circle through neighbouring incenters, and six subtriangles per
/// macro-triangle with their Bernstein-Bezier coefficient indexing.
class PowellSabinSplit {
public:
    /// Coefficient storage: one per vertex, three per edge
    /// (near edge(e)[0], split point, near edge(e)[1]) and seven per triangle
    /// (three vertex-centre, three edge-centre, centre).
    struct Sub {
        std::array<Vec3, 3> w;          // subtriangle vertices
        std::array<int, 6> coef;        // c200 c020 c002 c110 c101 c011
        Mat3 inverse;                   // homogeneous barycentric solve
    };

    explicit PowellSabinSplit(const SphericalTriangulation& tri);

    const SphericalTriangulation& triangulation() const { return *tri_; }
    const UnitVec& center(int t) const { return centers_[t]; }
    const UnitVec& edge_point(int e) const { return edge_points_[e]; }
    /// E = alpha*V_a + beta*V_b for edge (a, b) = triangulation().edge(e).
    double edge_alpha(int e) const { return edge_ab_[e][0]; }
    double edge_beta(int e) const { return edge_ab_[e][1]; }
    const Sub& sub(int t, int s) const { return subs_[6 * t + s]; }
    int num_subtriangles() const { return static_cast<int>(subs_.size()); }

    int num_coefficients() const { return ncoef_; }
    int vertex_coef(int v) const { return v; }
    int edge_coef(int e, int slot) const { return nv_ + 3 * e + slot; }
    int tri_coef(int t, int slot) const { return nv_ + 3 * ne_ + 7 * t + slot; }

    /// Subtriangle of macro-triangle t containing p and its barycentrics
    /// (small negatives clamped to zero).
    int locate_sub(int t, const Vec3& p, Vec3& bary) const;

    /// Largest coplanarity residual over edges: |det(C, C', E)| and
    /// |det(V_a, V_b, E)|.
    double max_coplanarity_residual() const;

private:
    const SphericalTriangulation* tri_;
    int nv_ = 0, ne_ = 0, ncoef_ = 0;
    std::vector<UnitVec> centers_;
    std::vector<UnitVec> edge_points_;
    std::vector<std::array<double, 2>> edge_ab_;
    std::vector<Sub> subs_;
    std::vector<std::array<Vec3, 6>> wedge_normals_;  // C x P_j
};

/// Solid angle of the spherical triangle (a, b, c).
double solid_angle(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace cmsphere
