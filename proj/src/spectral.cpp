#include "oldroyd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "oldroyd/error.hpp"

namespace oldroyd {

namespace {

// The FFTW planner is not thread-safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

constexpr cplx I{0.0, 1.0};

}  // namespace

SpectralGrid::SpectralGrid(int n, double box_scale) : n_(n), L_(box_scale) {
    if (n < 8 || (n & (n - 1)) != 0) throw Error(ErrorCode::ConfigError, "grid size must be a power of two >= 8");
    if (!(box_scale > 0.0)) throw Error(ErrorCode::ConfigError, "box_scale must be > 0");
    size_ = static_cast<std::size_t>(n) * n * n;
    auto t = std::make_shared<Tables>();
    t->kept.resize(size_);
    t->m2.resize(size_);
    t->mirror.resize(size_);
    for (auto& x : t->xi) x.resize(size_);
    const int cut = n / 3;
    auto neg = [n](int p) { return p == 0 ? 0 : n - p; };
    for (std::size_t f = 0; f < size_; ++f) {
        const auto m = lattice_index(f);
        t->kept[f] = std::abs(m[0]) <= cut && std::abs(m[1]) <= cut && std::abs(m[2]) <= cut;
        t->m2[f] = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
        for (int d = 0; d < 3; ++d) t->xi[d][f] = m[d] / L_;
        const int k = static_cast<int>(f % n_);
        const int j = static_cast<int>((f / n_) % n_);
        const int i = static_cast<int>(f / (static_cast<std::size_t>(n_) * n_));
        t->mirror[f] = flat(neg(i), neg(j), neg(k));
    }
    t_ = std::move(t);
}

double SpectralGrid::volume() const {
    const double side = 2.0 * std::numbers::pi * L_;
    return side * side * side;
}

double SpectralGrid::spacing() const { return 2.0 * std::numbers::pi * L_ / n_; }

std::array<int, 3> SpectralGrid::lattice_index(std::size_t f) const {
    const int k = static_cast<int>(f % n_);
    const int j = static_cast<int>((f / n_) % n_);
    const int i = static_cast<int>(f / (static_cast<std::size_t>(n_) * n_));
    return {signed_index(i), signed_index(j), signed_index(k)};
}

struct Fft3::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

Fft3::Fft3(int n) : n_(n), plans_(std::make_unique<Plans>()) {
    const std::size_t size = static_cast<std::size_t>(n) * n * n;
    fftw_complex* a = fftw_alloc_complex(size);
    fftw_complex* b = fftw_alloc_complex(size);
    {
        std::lock_guard lock(planner_mutex());
        // UNALIGNED: plans are executed later on std::vector storage.
        plans_->forward = fftw_plan_dft_3d(n, n, n, a, b, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_->backward = fftw_plan_dft_3d(n, n, n, a, b, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    fftw_free(a);
    fftw_free(b);
    if (!plans_->forward || !plans_->backward) throw Error(ErrorCode::ConfigError, "FFTW planning failed");
}

Fft3::~Fft3() {
    std::lock_guard lock(planner_mutex());
    if (plans_->forward) fftw_destroy_plan(plans_->forward);
    if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

void Fft3::to_physical(const cplx* in, cplx* out) const {
    // FFTW's new-array execute does not modify the input for out-of-place c2c.
    fftw_execute_dft(plans_->backward, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

void Fft3::to_spectral(const cplx* in, cplx* out) const {
    fftw_execute_dft(plans_->forward, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    const std::size_t size = static_cast<std::size_t>(n_) * n_ * n_;
    const double scale = 1.0 / static_cast<double>(size);
    for (std::size_t i = 0; i < size; ++i) out[i] *= scale;
}

SpectralState::SpectralState(const SpectralGrid& g) : grid(g) {
    for (auto& c : u) c.assign(g.size(), cplx{});
    for (auto& c : tau) c.assign(g.size(), cplx{});
}

void leray_project(const SpectralGrid& g, std::array<Lattice, 3>& v) {
    for (std::size_t f = 0; f < g.size(); ++f) {
        const int m2 = g.m2(f);
        if (m2 == 0) continue;
        const auto m = g.lattice_index(f);
        const cplx d = static_cast<double>(m[0]) * v[0][f] + static_cast<double>(m[1]) * v[1][f] +
                       static_cast<double>(m[2]) * v[2][f];
        const cplx s = d / static_cast<double>(m2);
        for (int c = 0; c < 3; ++c) v[c][f] -= static_cast<double>(m[c]) * s;
    }
}

void enforce_conjugate_symmetry(const SpectralGrid& g, Lattice& f) {
    for (std::size_t p = 0; p < g.size(); ++p) {
        const std::size_t q = g.mirror(p);
        if (q < p) continue;
        if (q == p) {
            if (p == 0) f[p] = f[p].real();
            else f[p] = 0.0;
            continue;
        }
        const cplx avg = 0.5 * (f[p] + std::conj(f[q]));
        f[p] = avg;
        f[q] = std::conj(avg);
    }
}

double conjugate_asymmetry(const SpectralGrid& g, const Lattice& f) {
    double peak = 0.0, worst = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        peak = std::max(peak, std::abs(f[p]));
        worst = std::max(worst, std::abs(f[p] - std::conj(f[g.mirror(p)])));
    }
    return worst / (peak + 1e-300);
}

double divergence_residual(const SpectralState& s) {
    double worst = 0.0;
    for (std::size_t f = 0; f < s.grid.size(); ++f) {
        const Vec3 xi = s.grid.xi(f);
        const double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
        if (r == 0.0) continue;
        const cplx d = xi[0] * s.u[0][f] + xi[1] * s.u[1][f] + xi[2] * s.u[2][f];
        const double un = std::sqrt(std::norm(s.u[0][f]) + std::norm(s.u[1][f]) + std::norm(s.u[2][f]));
        if (un == 0.0) continue;
        worst = std::max(worst, std::abs(d) / (r * un + 1e-300));
    }
    return worst;
}

namespace {

// A coefficient source: the lattice itself (dir < 0) or its derivative d_dir,
// whose coefficients are i xi_dir f_hat.
struct Source {
    const Lattice* f;
    int dir;
};

cplx coefficient(const SpectralGrid& g, const Source& s, std::size_t p) {
    const cplx v = (*s.f)[p];
    if (s.dir < 0) return v;
    const double k = g.xi_component(s.dir)[p];
    return {-k * v.imag(), k * v.real()};
}

// Inverse transform of a + i b (both conjugate-symmetric) yields the two real
// fields as real and imaginary parts.
void synthesize(const SpectralGrid& g, const Fft3& fft, const std::vector<Source>& src,
                const std::vector<RealField*>& dst) {
    const std::size_t n = g.size();
    Lattice work(n), out(n);
    for (std::size_t i = 0; i < src.size(); i += 2) {
        const bool paired = i + 1 < src.size();
        for (std::size_t p = 0; p < n; ++p) {
            const cplx a = coefficient(g, src[i], p);
            work[p] = paired ? a + I * coefficient(g, src[i + 1], p) : a;
        }
        fft.to_physical(work.data(), out.data());
        dst[i]->resize(n);
        for (std::size_t p = 0; p < n; ++p) (*dst[i])[p] = out[p].real();
        if (paired) {
            dst[i + 1]->resize(n);
            for (std::size_t p = 0; p < n; ++p) (*dst[i + 1])[p] = out[p].imag();
        }
    }
}

}  // namespace

PhysicalFields to_physical(const SpectralState& s, const Fft3& fft) {
    std::vector<Source> src;
    std::vector<RealField*> dst;
    PhysicalFields pf;
    for (int i = 0; i < 3; ++i) {
        src.push_back({&s.u[i], -1});
        dst.push_back(&pf.u[i]);
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            src.push_back({&s.u[i], j});
            dst.push_back(&pf.grad_u[3 * i + j]);
        }
    for (int a = 0; a < 6; ++a) {
        src.push_back({&s.tau[a], -1});
        dst.push_back(&pf.tau[a]);
    }
    for (int a = 0; a < 6; ++a)
        for (int j = 0; j < 3; ++j) {
            src.push_back({&s.tau[a], j});
            dst.push_back(&pf.grad_tau[3 * a + j]);
        }
    synthesize(s.grid, fft, src, dst);
    return pf;
}

std::array<RealField, 6> tau_to_physical(const SpectralState& s, const Fft3& fft) {
    std::array<RealField, 6> out;
    std::vector<Source> src;
    std::vector<RealField*> dst;
    for (int a = 0; a < 6; ++a) {
        src.push_back({&s.tau[a], -1});
        dst.push_back(&out[a]);
    }
    synthesize(s.grid, fft, src, dst);
    return out;
}

void real_fields_to_spectral(const SpectralGrid& g, const Fft3& fft, const std::vector<const RealField*>& in,
                             const std::vector<Lattice*>& out) {
    if (in.size() != out.size()) throw Error(ErrorCode::ConfigError, "field count mismatch");
    const std::size_t n = g.size();
    Lattice work(n), spec(n);
    for (std::size_t i = 0; i < in.size(); i += 2) {
        const bool paired = i + 1 < in.size();
        for (std::size_t f = 0; f < n; ++f) work[f] = cplx((*in[i])[f], paired ? (*in[i + 1])[f] : 0.0);
        fft.to_spectral(work.data(), spec.data());
        Lattice& a = *out[i];
        a.resize(n);
        if (!paired) {
            a = spec;
            enforce_conjugate_symmetry(g, a);
            continue;
        }
        Lattice& b = *out[i + 1];
        b.resize(n);
        for (std::size_t f = 0; f < n; ++f) {
            const cplx h = spec[f];
            const cplx hm = std::conj(spec[g.mirror(f)]);
            a[f] = 0.5 * (h + hm);
            b[f] = -0.5 * I * (h - hm);
        }
        // The self-mirrored Nyquist planes carry no recoverable split.
        for (std::size_t f = 0; f < n; ++f) {
            if (f != 0 && g.mirror(f) == f) a[f] = b[f] = 0.0;
        }
    }
}

}  // namespace oldroyd
