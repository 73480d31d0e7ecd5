#pragma once

// Periodic box [0, 2 pi L)^3 sampled on an n^3 lattice. Coefficients are
// stored normalized so that f(x) = sum_m f_hat(m) exp(i m.x / L); the
// physical L2 norm is then ||f||^2 = V sum_m |f_hat(m)|^2 with V = (2 pi L)^3.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "oldroyd/symbols.hpp"

namespace oldroyd {

using Lattice = std::vector<cplx>;
using RealField = std::vector<double>;

class SpectralGrid {
public:
    /// Throws Error{ConfigError} unless n is a power of two >= 8 and L > 0.
    SpectralGrid(int n, double box_scale);

    int n() const { return n_; }
    double box_scale() const { return L_; }
    std::size_t size() const { return size_; }
    double volume() const;
    double spacing() const;

    std::size_t flat(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
    }
    /// Signed lattice index for storage position p in [0, n).
    int signed_index(int p) const { return p < n_ / 2 ? p : p - n_; }
    std::array<int, 3> lattice_index(std::size_t f) const;
    Vec3 xi(std::size_t f) const { return {t_->xi[0][f], t_->xi[1][f], t_->xi[2][f]}; }
    /// Component d of xi for every mode, in storage order.
    const std::vector<double>& xi_component(int d) const { return t_->xi[d]; }
    /// |m|^2 as an integer; |xi|^2 = |m|^2 / L^2.
    int m2(std::size_t f) const { return t_->m2[f]; }
    int max_m2() const { return 3 * (n_ / 2) * (n_ / 2); }
    /// Storage position of the mode -m.
    std::size_t mirror(std::size_t f) const { return t_->mirror[f]; }
    /// 2/3 rule: false if any |m_d| > n/3.
    bool kept(std::size_t f) const { return t_->kept[f] != 0; }

    bool operator==(const SpectralGrid& o) const { return n_ == o.n_ && L_ == o.L_; }

private:
    int n_;
    double L_;
    std::size_t size_;
    // Per-mode lookup tables, shared by copies of the grid.
    struct Tables {
        std::vector<unsigned char> kept;
        std::vector<int> m2;
        std::vector<std::size_t> mirror;
        std::array<std::vector<double>, 3> xi;
    };
    std::shared_ptr<const Tables> t_;
};

/// Complex 3D transform pair on one grid. Plans are created once; execution
/// is reentrant so one instance may be shared by threads with distinct buffers.
class Fft3 {
public:
    explicit Fft3(int n);
    ~Fft3();
    Fft3(const Fft3&) = delete;
    Fft3& operator=(const Fft3&) = delete;

    /// out(x) = sum_m in(m) exp(+i m.x)  (coefficients to grid values)
    void to_physical(const cplx* in, cplx* out) const;
    /// out(m) = n^-3 sum_x in(x) exp(-i m.x)
    void to_spectral(const cplx* in, cplx* out) const;

private:
    struct Plans;
    int n_;
    std::unique_ptr<Plans> plans_;
};

struct SpectralState {
    explicit SpectralState(const SpectralGrid& g);

    SpectralGrid grid;
    std::array<Lattice, 3> u;
    std::array<Lattice, 6> tau;  // xx, xy, xz, yy, yz, zz
    double time = 0.0;
};

/// v <- v - xi (xi . v) / |xi|^2 for xi != 0; identity at xi = 0.
void leray_project(const SpectralGrid& g, std::array<Lattice, 3>& v);

/// f(m) <- (f(m) + conj f(-m)) / 2, and modes whose mirror is themselves
/// but not the origin (the Nyquist planes) are cleared.
void enforce_conjugate_symmetry(const SpectralGrid& g, Lattice& f);

/// max over modes of |f(m) - conj f(-m)| / (max |f| + tiny).
double conjugate_asymmetry(const SpectralGrid& g, const Lattice& f);

/// max over xi != 0 of |xi . u| / (|xi| |u| + tiny).
double divergence_residual(const SpectralState& s);

/// Real-space fields needed by the nonlinear terms and the monitors.
struct PhysicalFields {
    std::array<RealField, 3> u;
    std::array<RealField, 9> grad_u;    // (i, j) -> 3 i + j holds d_j u_i
    std::array<RealField, 6> tau;
    std::array<RealField, 18> grad_tau; // (a, j) -> 3 a + j holds d_j tau_a
};

/// Synthesizes all 36 real fields with 18 complex transforms (two real
/// fields per transform).
PhysicalFields to_physical(const SpectralState& s, const Fft3& fft);

/// Transforms only the stress.
std::array<RealField, 6> tau_to_physical(const SpectralState& s, const Fft3& fft);

/// Forward transform of an even number of real fields, two per transform.
/// Outputs have exact conjugate symmetry.
void real_fields_to_spectral(const SpectralGrid& g, const Fft3& fft, const std::vector<const RealField*>& in,
                             const std::vector<Lattice*>& out);

}  // namespace oldroyd
