#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

#include "cmsphere/geom.hpp"
#include "cmsphere/triangulation.hpp"

namespace cmsphere {

using cplx = std::complex<double>;

/// Gauss-Legendre nodes and weights on [-1, 1], nodes decreasing
/// (so the matching colatitudes increase).
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Quadrature grid for band-limit L: L Gauss-Legendre colatitudes times
/// 2L-1 uniform longitudes. Exact for products of harmonics of degree < L.
class DynamicsGrid {
public:
    explicit DynamicsGrid(int L);

    int L() const { return L_; }
    int nlat() const { return L_; }
    int nlon() const { return nlon_; }
    int size() const { return L_ * nlon_; }
    double colat(int p) const { return colat_[p]; }
    const std::vector<double>& colatitudes() const { return colat_; }
    /// Gauss weight of ring p (integrates over cos(theta)).
    double weight(int p) const { return weight_[p]; }
    double lon(int q) const;
    /// Area weight of grid point (p, q).
    double area_weight(int p) const;
    const UnitVec& point(int i) const { return points_[i]; }
    std::span<const UnitVec> points() const { return points_; }
    int index(int p, int q) const { return p * nlon_ + q; }

    LatLonGridIndex grid_index() const;

    /// Scaled sectoral values lambda_m^m at ring p: value * 2^(400 * exponent).
    double sectoral(int p, int m) const { return pmm_[static_cast<std::size_t>(p) * L_ + m]; }
    int sectoral_exponent(int p, int m) const { return pmm_exp_[static_cast<std::size_t>(p) * L_ + m]; }

private:
    int L_, nlon_;
    std::vector<double> colat_, weight_;
    std::vector<UnitVec> points_;
    std::vector<double> pmm_;
    std::vector<int> pmm_exp_;
};

/// Complex coefficients f_{l,m} of a real field, 0 <= m <= l < L. Negative
/// orders follow from f_{l,-m} = (-1)^m conj(f_{l,m}). Y_l^m carries the
/// Condon-Shortley phase.
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(int L) : L_(L), c_(static_cast<std::size_t>(L) * (L + 1) / 2) {}

    int L() const { return L_; }
    static std::size_t index(int L, int l, int m) {
        return static_cast<std::size_t>(m) * L - static_cast<std::size_t>(m) * (m - 1) / 2 + (l - m);
    }
    cplx& at(int l, int m) { return c_[index(L_, l, m)]; }
    const cplx& at(int l, int m) const { return c_[index(L_, l, m)]; }
    /// Any order, including negative m.
    cplx get(int l, int m) const;
    std::vector<cplx>& data() { return c_; }
    const std::vector<cplx>& data() const { return c_; }

    /// Copy truncated or zero-padded to band-limit L.
    SpectralField resized(int L) const;

private:
    int L_ = 0;
    std::vector<cplx> c_;
};

SpectralField operator+(const SpectralField& a, const SpectralField& b);
SpectralField operator-(const SpectralField& a, const SpectralField& b);
SpectralField operator*(double s, const SpectralField& a);

/// Normalized associated Legendre values lambda_l^m(cos theta) for
/// l = m..L-1, with Y_l^m = lambda_l^m e^{i m lon}.
void legendre_column(int L, int m, double colat, double* out);

/// Pointwise Y_l^m.
cplx spherical_harmonic(int l, int m, const Vec3& x);

SpectralField analysis(const DynamicsGrid& grid, std::span<const double> samples);
/// Synthesis on a grid of any band-limit (grid.L() may exceed f.L()).
std::vector<double> synthesis(const SpectralField& f, const DynamicsGrid& grid);
std::vector<double> synthesis(const SpectralField& f, std::span<const UnitVec> points);

/// psi_{l,m} = zeta_{l,m} / (l(l+1)), psi_{0,0} = 0.
SpectralField invert_laplacian(const SpectralField& zeta);
/// Spectral multiplication by -l(l+1).
SpectralField surface_laplacian(const SpectralField& f);

/// Coefficients of a possibly complex-valued field, all orders m = -l..l.
struct FullSpectrum {
    int L = 0;
    std::vector<cplx> c;  // index l*l + l + m

    FullSpectrum() = default;
    explicit FullSpectrum(int L_) : L(L_), c(static_cast<std::size_t>(L_) * L_) {}
    cplx& at(int l, int m) { return c[static_cast<std::size_t>(l) * l + l + m]; }
    const cplx& at(int l, int m) const { return c[static_cast<std::size_t>(l) * l + l + m]; }
};
FullSpectrum to_full(const SpectralField& f);
/// Ladder operators: L_z Y_l^m = m Y_l^m,
/// L_+- Y_l^m = sqrt(l(l+1) - m(m +- 1)) Y_l^{m +- 1}.
FullSpectrum apply_lz(const FullSpectrum& f);
FullSpectrum apply_lplus(const FullSpectrum& f);
FullSpectrum apply_lminus(const FullSpectrum& f);
/// Pointwise evaluation of a full spectrum.
cplx evaluate(const FullSpectrum& f, const Vec3& x);

/// Real fields -i L_c f for c = x, y, z.
std::array<SpectralField, 3> minus_i_angular_momentum(const SpectralField& f);

/// u = -i L psi = grad(psi) x x at the points.
std::vector<Vec3> velocity_from_stream(const SpectralField& psi, const DynamicsGrid& grid);
std::vector<Vec3> velocity_from_stream(const SpectralField& psi, std::span<const UnitVec> points);
/// Tangential gradient (i L f) x x.
std::vector<Vec3> tangential_gradient(const SpectralField& f, const DynamicsGrid& grid);
std::vector<Vec3> tangential_gradient(const SpectralField& f, std::span<const UnitVec> points);

struct EnergySpectrum {
    std::vector<double> energy;  // index l; energy[0] = 0
    double total() const;
};
/// E(l) = sum over all orders of |zeta_{l,m}|^2 / (l(l+1)).
EnergySpectrum energy_spectrum(const SpectralField& zeta);
/// Sum over all orders of |f_{l,m}|^2.
double coefficient_norm2(const SpectralField& f);
/// Grid quadrature of f.
double quadrature(const DynamicsGrid& grid, std::span<const double> samples);

void write_spectrum_csv(std::ostream& os, const EnergySpectrum& e);
/// "CMGD" grid dump: version, L, nlon, then L*nlon doubles ring by ring.
void write_grid_dump(std::ostream& os, const DynamicsGrid& grid, std::span<const double> samples);
std::vector<double> read_grid_dump(std::istream& is, int& L);
/// "CMSH" coefficient dump: version, L, layout (0 = order-major, m >= 0),
/// then interleaved real/imaginary parts.
void write_coefficients(std::ostream& os, const SpectralField& f);
SpectralField read_coefficients(std::istream& is);

}  // namespace cmsphere
