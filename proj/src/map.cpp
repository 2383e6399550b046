#include "cmsphere/map.hpp"

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace cmsphere {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'S', 'M'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error("truncated submap record");
    return v;
}

}  // namespace

SphereMap SphereMap::identity(std::shared_ptr<const SplineSpace> space, double t_begin, double t_end) {
    const std::size_t n = space->split().num_coefficients();
    return from_coefficients(std::move(space), {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                                                std::vector<double>(n, 0.0)},
                             t_begin, t_end);
}

SphereMap SphereMap::from_coefficients(std::shared_ptr<const SplineSpace> space,
                                       std::array<std::vector<double>, 3> coef, double t_begin, double t_end) {
    SphereMap m;
    for (int c = 0; c < 3; ++c) m.disp_[c] = SplineScalar(space, std::move(coef[c]));
    m.t_begin_ = t_begin;
    m.t_end_ = t_end;
    return m;
}

SphereMap SphereMap::from_displacement(std::shared_ptr<const SplineSpace> space, const MapHermiteData& disp,
                                       double t_begin, double t_end) {
    SphereMap m;
    for (int c = 0; c < 3; ++c) m.disp_[c] = hermite_fit(space, disp[c]);
    m.t_begin_ = t_begin;
    m.t_end_ = t_end;
    return m;
}

SphereMap SphereMap::project_fit(std::shared_ptr<const SplineSpace> space, const MapHermiteData& raw,
                                 double t_begin, double t_end) {
    const auto& T = space->triangulation();
    MapHermiteData disp = raw;
    for (int v = 0; v < T.num_vertices(); ++v) {
        const auto& f = T.frame(v);
        for (int c = 0; c < 3; ++c) {
            disp[c].value[v] -= f.base.vec()[c];
            disp[c].d1[v] -= f.e1[c];
            disp[c].d2[v] -= f.e2[c];
        }
    }
    return from_displacement(std::move(space), disp, t_begin, t_end);
}

Vec3 SphereMap::eval_raw(const Vec3& p, const SubLocation& loc) const {
    const auto& sub = space()->split().sub(loc.triangle, loc.sub);
    Vec3 r = p;
    for (int c = 0; c < 3; ++c) {
        double lc[6];
        gather_local(sub, disp_[c].coefficients().data(), lc);
        r[c] += bb_value(lc, loc.bary);
    }
    return r;
}

UnitVec SphereMap::eval(const Vec3& p, int& hint) const {
    const SubLocation loc = locate_sub(*space(), p, hint);
    hint = loc.triangle;
    const Vec3 r = eval_raw(p, loc);
    const double n = norm(r);
    if (!(n > kNormFloor)) throw NormTooSmall(n, "submap evaluation");
    return project_to_sphere(r);
}

std::array<Vec3, 2> SphereMap::differential(const UnitVec& p, UnitVec& image) const {
    const SubLocation loc = locate_sub(*space(), p);
    const Vec3 s = eval_raw(p, loc);
    const double n = norm(s);
    if (!(n > kNormFloor)) throw NormTooSmall(n, "submap differential");
    const Vec3 sh = s / n;
    image = project_to_sphere(s);
    std::array<Vec3, 3> g;
    for (int c = 0; c < 3; ++c) g[c] = disp_[c].eval_grad(p, loc);
    const auto fr = tangent_frame(p);
    std::array<Vec3, 2> out;
    const Vec3 dirs[2] = {fr.e1, fr.e2};
    for (int j = 0; j < 2; ++j) {
        const Vec3& e = dirs[j];
        const Vec3 ds = e + Vec3{dot(g[0], e), dot(g[1], e), dot(g[2], e)};
        out[j] = (ds - dot(sh, ds) * sh) / n;
    }
    return out;
}

double SphereMap::jacobian_det(const UnitVec& p) const {
    UnitVec q;
    const auto d = differential(p, q);
    return det3(q, d[0], d[1]);
}

void MapStack::push(SphereMap m) {
    if (m.empty()) throw Error("cannot push an empty submap");
    if (!maps_.empty() && m.t_begin() != maps_.back().t_end())
        throw Error("submap interval does not abut the stack");
    maps_.push_back(std::move(m));
}

UnitVec MapStack::eval(const Vec3& p, std::span<int> hints, const SphereMap* newest) const {
    UnitVec x = project_to_sphere(p);
    const auto apply = [&](const SphereMap& m, int index, int& hint) {
        try {
            x = m.eval(x, hint);
        } catch (const NormTooSmall& e) {
            throw NormTooSmall(e.norm(), "submap " + std::to_string(index));
        }
    };
    int scratch = -1;
    if (newest) {
        int& h = hints.size() > maps_.size() ? hints[maps_.size()] : scratch;
        apply(*newest, size(), h);
    }
    for (int i = size() - 1; i >= 0; --i) {
        scratch = -1;
        int& h = static_cast<int>(hints.size()) > i ? hints[i] : scratch;
        apply(maps_[i], i, h);
    }
    return x;
}

void write_submap(std::ostream& os, const SphereMap& m) {
    os.write(kMagic, 4);
    put(os, kVersion);
    put(os, static_cast<std::int32_t>(m.space()->triangulation().level()));
    put(os, m.t_begin());
    put(os, m.t_end());
    const std::uint64_t n = m.displacement(0).coefficients().size();
    put(os, n);
    for (int c = 0; c < 3; ++c)
        os.write(reinterpret_cast<const char*>(m.displacement(c).coefficients().data()),
                 static_cast<std::streamsize>(n * sizeof(double)));
    if (!os) throw Error("failed to write submap");
}

SphereMap read_submap(std::istream& is, std::shared_ptr<const SplineSpace> space) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw Error("not a submap record");
    if (get<std::uint32_t>(is) != kVersion) throw Error("unsupported submap version");
    const auto level = get<std::int32_t>(is);
    const double t0 = get<double>(is), t1 = get<double>(is);
    const auto n = get<std::uint64_t>(is);
    if (level != space->triangulation().level() ||
        n != static_cast<std::uint64_t>(space->split().num_coefficients()))
        throw Error("submap record does not match the map mesh");
    std::array<std::vector<double>, 3> coef;
    for (int c = 0; c < 3; ++c) {
        coef[c].resize(n);
        is.read(reinterpret_cast<char*>(coef[c].data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (!is) throw Error("truncated submap record");
    }
    return SphereMap::from_coefficients(std::move(space), std::move(coef), t0, t1);
}

void write_stack(std::ostream& os, const MapStack& s) {
    put(os, static_cast<std::uint64_t>(s.size()));
    for (const auto& m : s.maps()) write_submap(os, m);
}

MapStack read_stack(std::istream& is, std::shared_ptr<const SplineSpace> space) {
    const auto n = get<std::uint64_t>(is);
    MapStack s;
    for (std::uint64_t i = 0; i < n; ++i) s.push(read_submap(is, space));
    return s;
}

}  // namespace cmsphere
