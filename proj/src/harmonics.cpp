#include "cmsphere/harmonics.hpp"

#include <fftw3.h>

#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>

namespace cmsphere {

namespace {

constexpr double kBig = 0x1p400;
constexpr double kInvBig = 0x1p-400;
constexpr double kPi = std::numbers::pi;

// Three-term recurrence factors, order-major like SpectralField.
struct Recurrence {
    std::vector<double> a, b;
};

const Recurrence& recurrence(int L) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Recurrence>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[L];
    if (!slot) {
        slot = std::make_unique<Recurrence>();
        const std::size_t n = static_cast<std::size_t>(L) * (L + 1) / 2;
        slot->a.assign(n, 0.0);
        slot->b.assign(n, 0.0);
        for (int m = 0; m < L; ++m) {
            for (int l = m + 1; l < L; ++l) {
                const double ll = static_cast<double>(l) * l, mm = static_cast<double>(m) * m;
                const std::size_t i = SpectralField::index(L, l, m);
                slot->a[i] = std::sqrt((4.0 * ll - 1.0) / (ll - mm));
                const double l1 = static_cast<double>(l - 1) * (l - 1);
                slot->b[i] = l >= m + 2 ? std::sqrt((l1 - mm) / (4.0 * l1 - 1.0)) : 0.0;
            }
        }
    }
    return *slot;
}

inline double unscale(double p, int k) { return k == 0 ? p : (k == -1 ? p * kInvBig : 0.0); }

// lambda_l^m(x) for l = m..L-1 from the scaled sectoral start value v * kBig^k.
void column_scaled(int L, int m, double x, double v, int k, const Recurrence& rec, double* out) {
    const std::size_t base = SpectralField::index(L, m, m);
    double p0 = v;
    out[0] = unscale(p0, k);
    if (m + 1 >= L) return;
    double p1 = rec.a[base + 1] * x * p0;
    out[1] = unscale(p1, k);
    for (int l = m + 2; l < L; ++l) {
        const std::size_t i = base + (l - m);
        const double p2 = rec.a[i] * (x * p1 - rec.b[i] * p0);
        p0 = p1;
        p1 = p2;
        if (k < 0 && std::abs(p1) > 1.0) {
            p0 *= kInvBig;
            p1 *= kInvBig;
            ++k;
        }
        out[l - m] = unscale(p1, k);
    }
}

// Advances the scaled sectoral value from order m-1 to m.
inline void sectoral_step(int m, double s, double& v, int& k) {
    v *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    if (v != 0.0 && std::abs(v) < kInvBig) {
        v *= kBig;
        --k;
    }
}

struct FftPlans {
    fftw_plan r2c = nullptr, c2r = nullptr;
};

const FftPlans& plans(int n) {
    static std::mutex mu;
    static std::map<int, FftPlans> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    double* r = fftw_alloc_real(n);
    fftw_complex* c = fftw_alloc_complex(n / 2 + 1);
    FftPlans p;
    p.r2c = fftw_plan_dft_r2c_1d(n, r, c, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.c2r = fftw_plan_dft_c2r_1d(n, c, r, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(r);
    fftw_free(c);
    return cache.emplace(n, p).first->second;
}

}  // namespace

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int l = 2; l <= n; ++l) {
                const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

DynamicsGrid::DynamicsGrid(int L) : L_(L), nlon_(2 * L - 1) {
    if (L < 1) throw Error("band-limit must be positive");
    std::vector<double> x;
    gauss_legendre(L, x, weight_);
    colat_.resize(L);
    for (int p = 0; p < L; ++p) colat_[p] = std::acos(x[p]);
    points_.reserve(static_cast<std::size_t>(L) * nlon_);
    for (int p = 0; p < L; ++p)
        for (int q = 0; q < nlon_; ++q) points_.push_back(from_lon_colat(lon(q), colat_[p]));
    pmm_.resize(static_cast<std::size_t>(L) * L);
    pmm_exp_.resize(static_cast<std::size_t>(L) * L);
    for (int p = 0; p < L; ++p) {
        const double s = std::sin(colat_[p]);
        double v = 1.0 / std::sqrt(4.0 * kPi);
        int k = 0;
        for (int m = 0; m < L; ++m) {
            if (m > 0) sectoral_step(m, s, v, k);
            pmm_[static_cast<std::size_t>(p) * L + m] = v;
            pmm_exp_[static_cast<std::size_t>(p) * L + m] = k;
        }
    }
}

double DynamicsGrid::lon(int q) const { return 2.0 * kPi * q / nlon_; }

double DynamicsGrid::area_weight(int p) const { return weight_[p] * 2.0 * kPi / nlon_; }

LatLonGridIndex DynamicsGrid::grid_index() const {
    LatLonGridIndex g;
    g.nlon = nlon_;
    g.colat = colat_;
    return g;
}

cplx SpectralField::get(int l, int m) const {
    if (m >= 0) return at(l, m);
    const cplx c = std::conj(at(l, -m));
    return (m % 2 == 0) ? c : -c;
}

SpectralField SpectralField::resized(int L) const {
    SpectralField out(L);
    const int n = std::min(L, L_);
    for (int m = 0; m < n; ++m)
        for (int l = m; l < n; ++l) out.at(l, m) = at(l, m);
    return out;
}

SpectralField operator+(const SpectralField& a, const SpectralField& b) {
    if (a.L() != b.L()) throw Error("band-limit mismatch");
    SpectralField r = a;
    for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] += b.data()[i];
    return r;
}

SpectralField operator-(const SpectralField& a, const SpectralField& b) {
    if (a.L() != b.L()) throw Error("band-limit mismatch");
    SpectralField r = a;
    for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] -= b.data()[i];
    return r;
}

SpectralField operator*(double s, const SpectralField& a) {
    SpectralField r = a;
    for (auto& c : r.data()) c *= s;
    return r;
}

void legendre_column(int L, int m, double colat, double* out) {
    const double s = std::sin(colat);
    double v = 1.0 / std::sqrt(4.0 * kPi);
    int k = 0;
    for (int mm = 1; mm <= m; ++mm) sectoral_step(mm, s, v, k);
    column_scaled(L, m, std::cos(colat), v, k, recurrence(L), out);
}

cplx spherical_harmonic(int l, int m, const Vec3& x) {
    const int am = std::abs(m);
    std::vector<double> col(l - am + 1);
    const auto lc = to_lon_colat(x);
    legendre_column(l + 1, am, lc.colat, col.data());
    const cplx y = col[l - am] * std::polar(1.0, am * lc.lon);
    if (m >= 0) return y;
    return (am % 2 == 0) ? std::conj(y) : -std::conj(y);
}

SpectralField analysis(const DynamicsGrid& grid, std::span<const double> samples) {
    const int L = grid.L(), n = grid.nlon();
    if (static_cast<int>(samples.size()) != grid.size()) throw Error("sample count does not match the grid");
    const int nm = n / 2 + 1;
    std::vector<cplx> F(static_cast<std::size_t>(L) * nm);
    const auto& pl = plans(n);
    const double scale = 2.0 * kPi / n;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < L; ++p) {
        fftw_execute_dft_r2c(pl.r2c, const_cast<double*>(samples.data() + static_cast<std::size_t>(p) * n),
                             reinterpret_cast<fftw_complex*>(F.data() + static_cast<std::size_t>(p) * nm));
        for (int m = 0; m < nm; ++m) F[static_cast<std::size_t>(p) * nm + m] *= scale * grid.weight(p);
    }
    SpectralField out(L);
    const Recurrence& rec = recurrence(L);
#pragma omp parallel
    {
        std::vector<double> col(L);
#pragma omp for schedule(dynamic, 4)
        for (int m = 0; m < L; ++m) {
            cplx* dst = &out.at(m, m);
            for (int p = 0; p < L; ++p) {
                column_scaled(L, m, std::cos(grid.colat(p)), grid.sectoral(p, m), grid.sectoral_exponent(p, m), rec,
                              col.data());
                const cplx f = F[static_cast<std::size_t>(p) * nm + m];
                for (int l = m; l < L; ++l) dst[l - m] += f * col[l - m];
            }
        }
    }
    return out;
}

std::vector<double> synthesis(const SpectralField& f, const DynamicsGrid& grid) {
    const int L = f.L(), n = grid.nlon();
    if (L > grid.L()) throw Error("grid band-limit below the field band-limit");
    const int nm = n / 2 + 1;
    std::vector<double> out(static_cast<std::size_t>(grid.size()));
    const auto& pl = plans(n);
    const Recurrence& rec = recurrence(L);
#pragma omp parallel
    {
        std::vector<double> col(L);
        std::vector<cplx> G(nm);
#pragma omp for schedule(static)
        for (int p = 0; p < grid.nlat(); ++p) {
            std::fill(G.begin(), G.end(), cplx{});
            const double x = std::cos(grid.colat(p));
            for (int m = 0; m < L; ++m) {
                column_scaled(L, m, x, grid.sectoral(p, m), grid.sectoral_exponent(p, m), rec, col.data());
                const cplx* src = &f.at(m, m);
                cplx acc{};
                for (int l = m; l < L; ++l) acc += src[l - m] * col[l - m];
                G[m] = acc;
            }
            G[0] = cplx(G[0].real(), 0.0);
            fftw_execute_dft_c2r(pl.c2r, reinterpret_cast<fftw_complex*>(G.data()),
                                 out.data() + static_cast<std::size_t>(p) * n);
        }
    }
    return out;
}

std::vector<double> synthesis(const SpectralField& f, std::span<const UnitVec> points) {
    const int L = f.L();
    const Recurrence& rec = recurrence(L);
    std::vector<double> out(points.size());
#pragma omp parallel
    {
        std::vector<double> col(L);
#pragma omp for schedule(static)
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto lc = to_lon_colat(points[i]);
            const double s = std::sin(lc.colat), x = std::cos(lc.colat);
            const cplx e = std::polar(1.0, lc.lon);
            cplx em(1.0, 0.0);
            double v = 1.0 / std::sqrt(4.0 * kPi);
            int k = 0;
            double acc = 0.0;
            for (int m = 0; m < L; ++m) {
                if (m > 0) {
                    sectoral_step(m, s, v, k);
                    em *= e;
                }
                column_scaled(L, m, x, v, k, rec, col.data());
                const cplx* src = &f.at(m, m);
                cplx g{};
                for (int l = m; l < L; ++l) g += src[l - m] * col[l - m];
                acc += (m == 0 ? 1.0 : 2.0) * (g * em).real();
            }
            out[i] = acc;
        }
    }
    return out;
}

SpectralField invert_laplacian(const SpectralField& zeta) {
    SpectralField psi(zeta.L());
    for (int m = 0; m < zeta.L(); ++m)
        for (int l = std::max(m, 1); l < zeta.L(); ++l) psi.at(l, m) = zeta.at(l, m) / (static_cast<double>(l) * (l + 1));
    return psi;
}

SpectralField surface_laplacian(const SpectralField& f) {
    SpectralField r(f.L());
    for (int m = 0; m < f.L(); ++m)
        for (int l = m; l < f.L(); ++l) r.at(l, m) = -static_cast<double>(l) * (l + 1) * f.at(l, m);
    return r;
}

FullSpectrum to_full(const SpectralField& f) {
    FullSpectrum r(f.L());
    for (int l = 0; l < f.L(); ++l)
        for (int m = -l; m <= l; ++m) r.at(l, m) = f.get(l, m);
    return r;
}

FullSpectrum apply_lz(const FullSpectrum& f) {
    FullSpectrum r(f.L);
    for (int l = 0; l < f.L; ++l)
        for (int m = -l; m <= l; ++m) r.at(l, m) = static_cast<double>(m) * f.at(l, m);
    return r;
}

FullSpectrum apply_lplus(const FullSpectrum& f) {
    FullSpectrum r(f.L);
    for (int l = 0; l < f.L; ++l)
        for (int m = -l + 1; m <= l; ++m)
            r.at(l, m) = std::sqrt(static_cast<double>(l) * (l + 1) - static_cast<double>(m - 1) * m) * f.at(l, m - 1);
    return r;
}

FullSpectrum apply_lminus(const FullSpectrum& f) {
    FullSpectrum r(f.L);
    for (int l = 0; l < f.L; ++l)
        for (int m = -l; m < l; ++m)
            r.at(l, m) = std::sqrt(static_cast<double>(l) * (l + 1) - static_cast<double>(m + 1) * m) * f.at(l, m + 1);
    return r;
}

cplx evaluate(const FullSpectrum& f, const Vec3& x) {
    cplx acc{};
    for (int l = 0; l < f.L; ++l)
        for (int m = -l; m <= l; ++m) acc += f.at(l, m) * spherical_harmonic(l, m, x);
    return acc;
}

std::array<SpectralField, 3> minus_i_angular_momentum(const SpectralField& f) {
    const int L = f.L();
    std::array<SpectralField, 3> u{SpectralField(L), SpectralField(L), SpectralField(L)};
    const cplx I(0.0, 1.0);
    for (int m = 0; m < L; ++m) {
        for (int l = m; l < L; ++l) {
            const double ll = static_cast<double>(l) * (l + 1);
            const cplx lp = std::sqrt(ll - static_cast<double>(m - 1) * m) * f.get(l, m - 1);
            const cplx lm = m + 1 <= l ? std::sqrt(ll - static_cast<double>(m + 1) * m) * f.get(l, m + 1) : cplx{};
            u[0].at(l, m) = -0.5 * I * (lp + lm);
            u[1].at(l, m) = -0.5 * (lp - lm);
            u[2].at(l, m) = -I * static_cast<double>(m) * f.at(l, m);
        }
    }
    // Orders zero of real fields are real.
    for (int c = 0; c < 3; ++c)
        for (int l = 0; l < L; ++l) u[c].at(l, 0) = cplx(u[c].at(l, 0).real(), 0.0);
    return u;
}

namespace {

template <class Points>
std::vector<Vec3> assemble(const std::array<SpectralField, 3>& comp, const Points& where,
                           std::span<const UnitVec> pts, bool cross_with_x) {
    std::array<std::vector<double>, 3> v;
    for (int c = 0; c < 3; ++c) v[c] = synthesis(comp[c], where);
    std::vector<Vec3> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec3 w{v[0][i], v[1][i], v[2][i]};
        out[i] = cross_with_x ? cross(w, pts[i].vec()) : w;
    }
    return out;
}

std::array<SpectralField, 3> negated(std::array<SpectralField, 3> a) {
    for (auto& f : a)
        for (auto& c : f.data()) c = -c;
    return a;
}

}  // namespace

std::vector<Vec3> velocity_from_stream(const SpectralField& psi, const DynamicsGrid& grid) {
    return assemble(minus_i_angular_momentum(psi), grid, grid.points(), false);
}

std::vector<Vec3> velocity_from_stream(const SpectralField& psi, std::span<const UnitVec> points) {
    return assemble(minus_i_angular_momentum(psi), points, points, false);
}

std::vector<Vec3> tangential_gradient(const SpectralField& f, const DynamicsGrid& grid) {
    return assemble(negated(minus_i_angular_momentum(f)), grid, grid.points(), true);
}

std::vector<Vec3> tangential_gradient(const SpectralField& f, std::span<const UnitVec> points) {
    return assemble(negated(minus_i_angular_momentum(f)), points, points, true);
}

double EnergySpectrum::total() const {
    double s = 0.0;
    for (double e : energy) s += e;
    return s;
}

EnergySpectrum energy_spectrum(const SpectralField& zeta) {
    EnergySpectrum e;
    e.energy.assign(zeta.L(), 0.0);
    for (int l = 1; l < zeta.L(); ++l) {
        double s = std::norm(zeta.at(l, 0));
        for (int m = 1; m <= l; ++m) s += 2.0 * std::norm(zeta.at(l, m));
        e.energy[l] = s / (static_cast<double>(l) * (l + 1));
    }
    return e;
}

double coefficient_norm2(const SpectralField& f) {
    double s = 0.0;
    for (int m = 0; m < f.L(); ++m)
        for (int l = m; l < f.L(); ++l) s += (m == 0 ? 1.0 : 2.0) * std::norm(f.at(l, m));
    return s;
}

double quadrature(const DynamicsGrid& grid, std::span<const double> samples) {
    double s = 0.0;
    for (int p = 0; p < grid.nlat(); ++p) {
        double r = 0.0;
        for (int q = 0; q < grid.nlon(); ++q) r += samples[grid.index(p, q)];
        s += grid.area_weight(p) * r;
    }
    return s;
}

namespace {

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error("truncated dump");
    return v;
}

}  // namespace

void write_spectrum_csv(std::ostream& os, const EnergySpectrum& e) {
    os << "l,energy\n";
    char buf[64];
    for (std::size_t l = 1; l < e.energy.size(); ++l) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", l, e.energy[l]);
        os << buf;
    }
}

void write_grid_dump(std::ostream& os, const DynamicsGrid& grid, std::span<const double> samples) {
    os.write("CMGD", 4);
    put(os, std::uint32_t{1});
    put(os, static_cast<std::int32_t>(grid.L()));
    put(os, static_cast<std::int32_t>(grid.nlon()));
    os.write(reinterpret_cast<const char*>(samples.data()), static_cast<std::streamsize>(samples.size() * sizeof(double)));
    if (!os) throw Error("failed to write grid dump");
}

std::vector<double> read_grid_dump(std::istream& is, int& L) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CMGD", 4) != 0) throw Error("not a grid dump");
    if (get<std::uint32_t>(is) != 1) throw Error("unsupported grid dump version");
    L = get<std::int32_t>(is);
    const int nlon = get<std::int32_t>(is);
    if (L < 1 || nlon != 2 * L - 1) throw Error("inconsistent grid dump header");
    std::vector<double> v(static_cast<std::size_t>(L) * nlon);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!is) throw Error("truncated grid dump");
    return v;
}

void write_coefficients(std::ostream& os, const SpectralField& f) {
    os.write("CMSH", 4);
    put(os, std::uint32_t{1});
    put(os, static_cast<std::int32_t>(f.L()));
    put(os, std::int32_t{0});
    os.write(reinterpret_cast<const char*>(f.data().data()), static_cast<std::streamsize>(f.data().size() * sizeof(cplx)));
    if (!os) throw Error("failed to write coefficients");
}

SpectralField read_coefficients(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CMSH", 4) != 0) throw Error("not a coefficient dump");
    if (get<std::uint32_t>(is) != 1) throw Error("unsupported coefficient dump version");
    const int L = get<std::int32_t>(is);
    if (get<std::int32_t>(is) != 0) throw Error("unknown coefficient layout");
    SpectralField f(L);
    is.read(reinterpret_cast<char*>(f.data().data()), static_cast<std::streamsize>(f.data().size() * sizeof(cplx)));
    if (!is) throw Error("truncated coefficient dump");
    return f;
}

}  // namespace cmsphere
