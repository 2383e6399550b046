#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "cmsphere/spline.hpp"

namespace cmsphere {

/// Hermite data of the three Cartesian components of a map.
using MapHermiteData = std::array<HermiteData, 3>;

/// Spline map S^2 -> S^2 over the interval [t_begin, t_end]. Stored as
/// x -> normalize(x + D(x)) with a spline displacement D, so the identity is
/// the zero displacement and evaluates exactly.
class SphereMap {
public:
    SphereMap() = default;

    static SphereMap identity(std::shared_ptr<const SplineSpace> space, double t_begin = 0.0, double t_end = 0.0);
    /// Fit from Hermite data of the map components phi_c.
    static SphereMap project_fit(std::shared_ptr<const SplineSpace> space, const MapHermiteData& raw,
                                 double t_begin, double t_end);
    /// Fit from Hermite data of the displacement phi_c - x_c.
    static SphereMap from_displacement(std::shared_ptr<const SplineSpace> space, const MapHermiteData& disp,
                                       double t_begin, double t_end);
    static SphereMap from_coefficients(std::shared_ptr<const SplineSpace> space,
                                       std::array<std::vector<double>, 3> coef, double t_begin, double t_end);

    const std::shared_ptr<const SplineSpace>& space() const { return disp_[0].space(); }
    const SplineScalar& displacement(int c) const { return disp_[c]; }
    double t_begin() const { return t_begin_; }
    double t_end() const { return t_end_; }
    bool empty() const { return disp_[0].empty(); }

    /// x + D(x) before projection.
    Vec3 eval_raw(const Vec3& p, const SubLocation& loc) const;
    UnitVec eval(const Vec3& p, int& hint) const;
    UnitVec eval(const Vec3& p) const {
        int hint = -1;
        return eval(p, hint);
    }
    /// Images of the frame directions e1, e2 at p under the differential.
    std::array<Vec3, 2> differential(const UnitVec& p, UnitVec& image) const;
    /// Determinant of the differential in the tangent frames at p and m(p).
    double jacobian_det(const UnitVec& p) const;

private:
    std::array<SplineScalar, 3> disp_;
    double t_begin_ = 0.0, t_end_ = 0.0;
};

/// Composition X_[tau_1,0] o X_[tau_2,tau_1] o ... stored oldest first.
class MapStack {
public:
    /// Appends a submap whose interval starts where the last one ended.
    void push(SphereMap m);

    int size() const { return static_cast<int>(maps_.size()); }
    bool empty() const { return maps_.empty(); }
    const SphereMap& operator[](int i) const { return maps_[i]; }
    const SphereMap& back() const { return maps_.back(); }
    std::span<const SphereMap> maps() const { return maps_; }
    double t_end() const { return maps_.empty() ? 0.0 : maps_.back().t_end(); }

    /// Applies the newest submap first. `hints` (one per submap, or empty)
    /// carries walk hints between calls; `newest` is an optional further map
    /// applied before the stored ones.
    UnitVec eval(const Vec3& p, std::span<int> hints = {}, const SphereMap* newest = nullptr) const;

private:
    std::vector<SphereMap> maps_;
};

/// Binary submap record: "CMSM", version, level, t_begin, t_end, ncoef,
/// then 3*ncoef doubles.
void write_submap(std::ostream& os, const SphereMap& m);
SphereMap read_submap(std::istream& is, std::shared_ptr<const SplineSpace> space);
void write_stack(std::ostream& os, const MapStack& s);
MapStack read_stack(std::istream& is, std::shared_ptr<const SplineSpace> space);

}  // namespace cmsphere
