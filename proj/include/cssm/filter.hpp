#pragma once

#include <Eigen/Dense>
#include <cstring>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>

#include "cssm/companion.hpp"
#include "cssm/fft.hpp"

// Output-filter construction and application.
//
// The length-l output filter of an SSM is F[k] = C A^k B. Applying it as a
// plain causal convolution to an input sequence yields the post-update
// outputs y_k = C x_{k+1} (one-step-ahead alignment); the pre-update
// convention is the same filter delayed by one step. The D skip is never
// baked into the filter; layers add D * u_k separately.

namespace cssm {

/// Direct O(l d) construction: iterate v <- A v from v = B, tap k = C . v.
inline Vec naive_output_filter(const Ssm& s, std::size_t len) {
    check_ssm(s);
    require(len >= 1, "naive_output_filter: len must be positive");
    Vec taps(len);
    Vec v = s.B;
    for (std::size_t k = 0; k < len; ++k) {
        taps[k] = dot(s.C, v);
        if (k + 1 < len) v = apply_col(s.a, v);
    }
    return taps;
}

/// C (I - A^len), via len structured row applications, O(len d).
inline Vec c_tilde(const Vec& a, const Vec& C, std::size_t len) {
    require(a.size() == C.size(), "c_tilde: size mismatch");
    Vec r = C;
    for (std::size_t k = 0; k < len; ++k) r = apply_row(r, a);
    Vec out(C.size());
    for (std::size_t i = 0; i < C.size(); ++i) out[i] = C[i] - r[i];
    return out;
}

/// Inverse of c_tilde: recover C from ct = C (I - A^len) by a dense solve,
/// so ct itself can serve as the trainable row (the filter spectrum is
/// linear in ct). Throws SingularResolvent when I - A^len is singular
/// (some eigenvalue of A is an len-th root of unity).
inline Vec c_from_c_tilde(const Vec& a, const Vec& ct, std::size_t len) {
    const std::size_t d = a.size();
    require(ct.size() == d, "c_from_c_tilde: size mismatch");
    require(len >= 1, "c_from_c_tilde: len must be positive");
    using Md = Eigen::MatrixXd;
    Md A = Md::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 1; i < d; ++i) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    for (std::size_t i = 0; i < d; ++i) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d - 1)) += a[i];

    Md P = Md::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    Md base = A;
    for (std::size_t e = len; e > 0; e >>= 1) {
        if (e & 1) P = P * base;
        if (e > 1) base = base * base;
    }
    Md M = Md::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) - P;
    Eigen::FullPivLU<Md> lu(M.transpose());
    if (!lu.isInvertible())
        throw SingularResolvent("c_from_c_tilde: I - A^len is singular");
    Eigen::VectorXd rhs(d);
    for (std::size_t i = 0; i < d; ++i) rhs(static_cast<Eigen::Index>(i)) = ct[i];
    const Eigen::VectorXd c = lu.solve(rhs);
    return Vec(c.data(), c.data() + c.size());
}

/// Fast filter construction, O(l log l + d log d), given ct = C (I - A^len).
/// Spectrum per bin m, with z = w^{-m}:
///   F[m] = quad(ct, B) + quad(ct, a) * quad(e_d, B) / (z - quad(e_d, a))
/// and the filter is the real part of the inverse DFT.
/// Throws SingularResolvent when a denominator is within 1e-12 of zero.
inline Vec fast_output_filter(const Vec& a, const Vec& B, const Vec& ct,
                              std::size_t len) {
    const std::size_t d = a.size();
    require(B.size() == d && ct.size() == d, "fast_output_filter: size mismatch");
    require(len >= 1, "fast_output_filter: len must be positive");
    const CVec q_cb = quad(ct, B, len);
    const CVec q_ca = quad(ct, a, len);
    const CVec q_eb = quad_last_basis(B, len);
    const CVec q_ea = quad_last_basis(a, len);
    CVec spec(len);
    const double base = 2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t m = 0; m < len; ++m) {
        const cd z = std::polar(1.0, base * static_cast<double>(m));
        const cd den = z - q_ea[m];
        if (std::abs(den) < 1e-12) {
            std::ostringstream os;
            os << "fast_output_filter: singular resolvent at bin " << m
               << " (|den| = " << std::abs(den) << ")";
            throw SingularResolvent(os.str());
        }
        spec[m] = q_cb[m] + q_ca[m] * q_eb[m] / den;
    }
    const CVec f = idft(std::move(spec));
    Vec out(len);
    for (std::size_t k = 0; k < len; ++k) out[k] = f[k].real();
    return out;
}

/// Plain causal convolution truncated to |u|: y_k = sum_{j<=k} f_{k-j} u_j.
inline Vec apply_filter(const Vec& f, const Vec& u) {
    require(!f.empty() && !u.empty(), "apply_filter: empty input");
    Vec full = linear_convolution(f, u);
    full.resize(u.size());
    return full;
}

/// Final state after scanning u through x_{k+1} = A x_k + B u_k from x_0 = 0.
inline Vec last_state(const Vec& a, const Vec& B, const Vec& u) {
    require(a.size() == B.size(), "last_state: size mismatch");
    Vec x(a.size(), 0.0);
    for (double uk : u) {
        x = apply_col(a, x);
        for (std::size_t i = 0; i < a.size(); ++i) x[i] += B[i] * uk;
    }
    return x;
}

struct Rollout {
    Vec y;      // y_i = C (A + B K)^i x_start, i = 1..h
    Vec u_hat;  // u_hat_i = K (A + B K)^i x_start, i = 1..h
};

/// Recurrent closed-loop rollout: iterate x <- A x + B (K x), emitting
/// y_i = C x and u_hat_i = K x after each update. D is not folded in.
inline Rollout closed_loop_rollout(const Ssm& s, const Vec& x_start,
                                   std::size_t h) {
    check_ssm(s);
    require(!s.K.empty(), "closed_loop_rollout: ssm has no K");
    require(x_start.size() == s.dim(), "closed_loop_rollout: state size mismatch");
    Rollout r;
    r.y.resize(h);
    r.u_hat.resize(h);
    Vec x = x_start;
    for (std::size_t i = 0; i < h; ++i) {
        const double u = dot(s.K, x);
        x = apply_col(s.a, x);
        for (std::size_t j = 0; j < x.size(); ++j) x[j] += s.B[j] * u;
        r.y[i] = dot(s.C, x);
        r.u_hat[i] = dot(s.K, x);
    }
    return r;
}

namespace detail {

// r^T M for M = S + a e_d^T + B K, in O(d).
inline Vec apply_row_closed(const Vec& r, const Vec& a, const Vec& B,
                            const Vec& K) {
    const std::size_t d = a.size();
    Vec out(d, 0.0);
    for (std::size_t j = 0; j + 1 < d; ++j) out[j] = r[j + 1];
    double ra = 0.0, rb = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        ra += r[i] * a[i];
        rb += r[i] * B[i];
    }
    out[d - 1] += ra;
    for (std::size_t j = 0; j < d; ++j) out[j] += rb * K[j];
    return out;
}

}  // namespace detail

/// Spectral closed-loop rollout with the same output as closed_loop_rollout's
/// y. M = A + B K is shift plus rank two, so each frequency bin needs one
/// 2 x 2 capacitance solve on top of nine quad spectra:
///   C' (z I' - M')^{-1} terms with C' = C (I - M^h) and start state M x.
/// O(h log h + d log d) after the O(h d) C' pass.
inline Vec fast_closed_loop_rollout(const Ssm& s, const Vec& x_start,
                                    std::size_t h) {
    check_ssm(s);
    require(!s.K.empty(), "fast_closed_loop_rollout: ssm has no K");
    require(x_start.size() == s.dim(), "fast_closed_loop_rollout: state size mismatch");
    require(h >= 1, "fast_closed_loop_rollout: h must be positive");
    const std::size_t d = s.dim();

    // shift by one power so emitted values are C M^i x_start, i = 1..h
    Vec x1 = apply_col(s.a, x_start);
    {
        const double u = dot(s.K, x_start);
        for (std::size_t i = 0; i < d; ++i) x1[i] += s.B[i] * u;
    }

    Vec row = s.C;
    for (std::size_t k = 0; k < h; ++k)
        row = detail::apply_row_closed(row, s.a, s.B, s.K);
    Vec ct(d);
    for (std::size_t i = 0; i < d; ++i) ct[i] = s.C[i] - row[i];

    const CVec t_x = quad(ct, x1, h);
    const CVec t_a = quad(ct, s.a, h);
    const CVec t_b = quad(ct, s.B, h);
    const CVec e_x = quad_last_basis(x1, h);
    const CVec e_a = quad_last_basis(s.a, h);
    const CVec e_b = quad_last_basis(s.B, h);
    const CVec k_x = quad(s.K, x1, h);
    const CVec k_a = quad(s.K, s.a, h);
    const CVec k_b = quad(s.K, s.B, h);

    CVec spec(h);
    const double base = 2.0 * std::numbers::pi / static_cast<double>(h);
    for (std::size_t m = 0; m < h; ++m) {
        const cd z = std::polar(1.0, base * static_cast<double>(m));
        // capacitance G = z I2 - [[e_a, e_b], [k_a, k_b]]
        const cd g00 = z - e_a[m], g01 = -e_b[m];
        const cd g10 = -k_a[m], g11 = z - k_b[m];
        const cd det = g00 * g11 - g01 * g10;
        if (std::abs(det) < 1e-12) {
            std::ostringstream os;
            os << "fast_closed_loop_rollout: singular capacitance at bin " << m
               << " (|det| = " << std::abs(det) << ")";
            throw SingularResolvent(os.str());
        }
        const cd w1 = (g11 * e_x[m] - g01 * k_x[m]) / det;
        const cd w2 = (g00 * k_x[m] - g10 * e_x[m]) / det;
        spec[m] = t_x[m] + t_a[m] * w1 + t_b[m] * w2;
    }
    const CVec f = idft(std::move(spec));
    Vec out(h);
    for (std::size_t i = 0; i < h; ++i) out[i] = f[i].real();
    return out;
}

/// Prebuilt filter for one (ssm, len) pair. ct is kept alongside so the
/// O(l d) pass is paid once and the spectral rebuild can be re-run cheaply.
struct FilterPlan {
    Vec f_y;
    Vec ct;
    std::size_t len = 0;
};

inline FilterPlan build_filter_plan(const Ssm& s, std::size_t len) {
    FilterPlan p;
    p.len = len;
    p.ct = c_tilde(s.a, s.C, len);
    p.f_y = fast_output_filter(s.a, s.B, p.ct, len);
    return p;
}

/// Cache keyed on the exact parameter bytes plus len.
class FilterCache {
  public:
    std::shared_ptr<const FilterPlan> get(const Ssm& s, std::size_t len) {
        std::string key = make_key(s, len);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        auto plan = std::make_shared<FilterPlan>(build_filter_plan(s, len));
        cache_.emplace(std::move(key), plan);
        return plan;
    }

    std::size_t size() const { return cache_.size(); }

  private:
    static void append_bytes(std::string& key, const Vec& v) {
        const std::size_t off = key.size();
        key.resize(off + v.size() * sizeof(double));
        std::memcpy(key.data() + off, v.data(), v.size() * sizeof(double));
    }

    static std::string make_key(const Ssm& s, std::size_t len) {
        std::string key;
        key.reserve((3 * s.dim() + 2) * sizeof(double));
        append_bytes(key, s.a);
        append_bytes(key, s.B);
        append_bytes(key, s.C);
        key.append(reinterpret_cast<const char*>(&len), sizeof(len));
        return key;
    }

    std::unordered_map<std::string, std::shared_ptr<const FilterPlan>> cache_;
};

}  // namespace cssm
