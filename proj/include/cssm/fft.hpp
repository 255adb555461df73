#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>

#include "cssm/common.hpp"

// DFT / convolution primitives for the fast filter constructions.
//
// Any length n >= 1 is supported: iterative radix-2 for powers of two,
// recursive mixed-radix splitting on the smallest prime factor for smooth
// lengths, and a Bluestein (chirp-z) fallback once the remaining factor is a
// large prime. Inputs shorter than 32 go through the direct O(n^2) kernel.
// Forward convention: X[m] = sum_k x[k] exp(-2*pi*i*m*k/n).

namespace cssm {

using cd = std::complex<double>;
using CVec = std::vector<cd>;

namespace detail {

constexpr std::size_t kDirectDftLimit = 32;
constexpr std::size_t kDirectConvLimit = 32;
constexpr std::size_t kLargestSplitPrime = 61;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

inline void dft_direct(const CVec& in, CVec& out) {
    const std::size_t n = in.size();
    out.assign(n, cd(0.0, 0.0));
    const double base = -2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t m = 0; m < n; ++m) {
        cd acc(0.0, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = base * static_cast<double>((m * k) % n);
            acc += in[k] * std::polar(1.0, ang);
        }
        out[m] = acc;
    }
}

inline void fft_pow2(CVec& v) {
    const std::size_t n = v.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const cd wlen = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            cd w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cd a = v[i + k];
                const cd b = v[i + k + len / 2] * w;
                v[i + k] = a + b;
                v[i + k + len / 2] = a - b;
                w *= wlen;
            }
        }
    }
}

inline void dft_any(CVec& v);  // forward declaration

// Chirp-z: length-n DFT as a circular convolution of size next_pow2(2n-1).
inline void bluestein(CVec& v) {
    const std::size_t n = v.size();
    const std::size_t m = next_pow2(2 * n - 1);
    CVec chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // angle = -pi k^2 / n, with k^2 reduced mod 2n to keep trig accurate
        const std::size_t k2 = (k * k) % (2 * n);
        chirp[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(k2) /
                                       static_cast<double>(n));
    }
    CVec fa(m, cd(0.0, 0.0)), fb(m, cd(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) fa[k] = v[k] * chirp[k];
    fb[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
        fb[k] = std::conj(chirp[k]);
        fb[m - k] = fb[k];
    }
    fft_pow2(fa);
    fft_pow2(fb);
    for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
    // inverse pow2 FFT via conjugation
    for (auto& z : fa) z = std::conj(z);
    fft_pow2(fa);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k)
        v[k] = std::conj(fa[k]) * scale * chirp[k];
}

inline std::size_t smallest_prime_factor(std::size_t n) {
    if (n % 2 == 0) return 2;
    for (std::size_t p = 3; p * p <= n; p += 2)
        if (n % p == 0) return p;
    return n;
}

// Cooley-Tukey split on radix p: p sub-DFTs of size n/p, then recombination
// with an O(p) inner direct transform per output bin.
inline void mixed_radix(CVec& v, std::size_t p) {
    const std::size_t n = v.size();
    const std::size_t m = n / p;
    std::vector<CVec> sub(p, CVec(m));
    for (std::size_t t = 0; t < m; ++t)
        for (std::size_t s = 0; s < p; ++s) sub[s][t] = v[p * t + s];
    for (auto& seq : sub) dft_any(seq);
    const double base = -2.0 * std::numbers::pi / static_cast<double>(n);
    CVec tw(p);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t s = 0; s < p; ++s)
            tw[s] = std::polar(1.0, base * static_cast<double>((s * k) % n));
        cd acc(0.0, 0.0);
        for (std::size_t s = 0; s < p; ++s) acc += tw[s] * sub[s][k % m];
        v[k] = acc;
    }
}

inline void dft_any(CVec& v) {
    const std::size_t n = v.size();
    if (n <= 1) return;
    if (is_pow2(n)) {
        fft_pow2(v);
        return;
    }
    if (n < kDirectDftLimit) {
        CVec out;
        dft_direct(v, out);
        v = std::move(out);
        return;
    }
    const std::size_t p = smallest_prime_factor(n);
    if (p == n || p > kLargestSplitPrime) {
        bluestein(v);
        return;
    }
    mixed_radix(v, p);
}

}  // namespace detail

/// Forward DFT, any length n >= 1.
inline CVec dft(CVec v) {
    require(!v.empty(), "dft: empty input");
    detail::dft_any(v);
    return v;
}

/// Inverse DFT (unitary pairing with dft: idft(dft(x)) == x).
inline CVec idft(CVec v) {
    require(!v.empty(), "idft: empty input");
    for (auto& z : v) z = std::conj(z);
    detail::dft_any(v);
    const double scale = 1.0 / static_cast<double>(v.size());
    for (auto& z : v) z = std::conj(z) * scale;
    return v;
}

/// Linear convolution, length |u| + |v| - 1. Direct kernel below the size
/// threshold, zero-padded FFT above it.
inline Vec linear_convolution(const Vec& u, const Vec& v) {
    require(!u.empty() && !v.empty(), "linear_convolution: empty input");
    const std::size_t nu = u.size(), nv = v.size();
    const std::size_t n = nu + nv - 1;
    if (std::min(nu, nv) < detail::kDirectConvLimit) {
        Vec out(n, 0.0);
        for (std::size_t i = 0; i < nu; ++i)
            for (std::size_t j = 0; j < nv; ++j) out[i + j] += u[i] * v[j];
        return out;
    }
    const std::size_t m = detail::next_pow2(n);
    CVec fa(m, cd(0.0, 0.0)), fb(m, cd(0.0, 0.0));
    for (std::size_t i = 0; i < nu; ++i) fa[i] = u[i];
    for (std::size_t i = 0; i < nv; ++i) fb[i] = v[i];
    detail::fft_pow2(fa);
    detail::fft_pow2(fb);
    for (std::size_t i = 0; i < m; ++i) fa[i] *= fb[i];
    for (auto& z : fa) z = std::conj(z);
    detail::fft_pow2(fa);
    Vec out(n);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < n; ++i) out[i] = fa[i].real() * scale;
    return out;
}

namespace detail {

// Nonnegative-shift correlation c_k = sum_j u_{j+k} v_j, k = 0..d-1.
// These are the coefficients the shift-resolvent quadratic form produces;
// negative shifts vanish because the resolvent is lower triangular.
inline Vec correlate_nonneg(const Vec& u, const Vec& v) {
    const std::size_t d = u.size();
    if (d < kDirectConvLimit) {
        Vec c(d, 0.0);
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t j = 0; j + k < d; ++j) c[k] += u[j + k] * v[j];
        return c;
    }
    Vec ru(u.rbegin(), u.rend());
    Vec full = linear_convolution(ru, v);
    Vec c(d);
    for (std::size_t k = 0; k < d; ++k) c[k] = full[d - 1 - k];
    return c;
}

inline CVec fold_and_dft(const Vec& c, std::size_t len) {
    CVec acc(len, cd(0.0, 0.0));
    for (std::size_t k = 0; k < c.size(); ++k)
        acc[k % len] += c[k];  // wraps when d > len
    dft_any(acc);
    return acc;
}

}  // namespace detail

/// Resolvent spectrum of a pair (u, v) against the shift matrix:
///   quad(u, v, len)[m] = u^T (I - w^m S)^{-1} v,  w = exp(-2*pi*i/len).
/// Computed as the length-len DFT of the folded correlation coefficients,
/// O(d log d + len log len).
inline CVec quad(const Vec& u, const Vec& v, std::size_t len) {
    require(u.size() == v.size(), "quad: size mismatch");
    require(!u.empty(), "quad: empty input");
    require(len >= 1, "quad: len must be positive");
    return detail::fold_and_dft(detail::correlate_nonneg(u, v), len);
}

/// quad(e_d, v, len) without the correlation pass: e_d^T (I - w^m S)^{-1} v
/// has coefficients c_k = v[d-1-k].
inline CVec quad_last_basis(const Vec& v, std::size_t len) {
    require(!v.empty(), "quad_last_basis: empty input");
    Vec c(v.rbegin(), v.rend());
    return detail::fold_and_dft(c, len);
}

}  // namespace cssm
