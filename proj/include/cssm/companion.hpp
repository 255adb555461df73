#pragma once

#include <cmath>
#include <cstddef>

#include "cssm/common.hpp"

// Companion-matrix state-space primitives.
//
// The state matrix A is a d x d companion matrix stored as its last column a:
//   A[i][j] = 1        if i-1 == j        (subdiagonal)
//           = a[i]     if j == d-1        (stored column)
//           = 0        otherwise
// a = 0 gives the shift matrix S, which is nilpotent (S^d = 0).
// All matrix products below are O(d) structured operations; the dense form
// exists only as a cross-check.

namespace cssm {

/// Single-input single-output state-space cell.
/// x_{k+1} = A x_k + B u_k,  y_k = C x_k + D u_k.
/// K (optional, empty when absent) predicts the next input from the state.
struct Ssm {
    Vec a;       // companion last column, size d
    Vec B;       // input map, size d
    Vec C;       // output row, size d
    double D = 0.0;
    Vec K;       // input-prediction row, size d or empty

    std::size_t dim() const { return a.size(); }
};

inline void check_ssm(const Ssm& s) {
    const std::size_t d = s.a.size();
    require(d > 0, "ssm: state dimension must be positive");
    require(s.B.size() == d && s.C.size() == d, "ssm: a, B, C sizes differ");
    require(s.K.empty() || s.K.size() == d, "ssm: K size differs from d");
}

/// A x in O(d). (Named apply_col to stay clear of std::apply, which ADL
/// would otherwise drag into every unqualified call on std::vector.)
inline Vec apply_col(const Vec& a, const Vec& x) {
    const std::size_t d = a.size();
    require(x.size() == d, "apply_col: dimension mismatch");
    Vec out(d);
    const double top = x[d - 1];
    out[0] = a[0] * top;
    for (std::size_t i = 1; i < d; ++i) out[i] = x[i - 1] + a[i] * top;
    return out;
}

/// r^T A in O(d).
inline Vec apply_row(const Vec& r, const Vec& a) {
    const std::size_t d = a.size();
    require(r.size() == d, "apply_row: dimension mismatch");
    Vec out(d);
    for (std::size_t j = 0; j + 1 < d; ++j) out[j] = r[j + 1];
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += r[i] * a[i];
    out[d - 1] = acc;
    return out;
}

/// A^k x via k structured applies, O(k d).
inline Vec power_apply(const Vec& a, Vec x, std::size_t k) {
    for (std::size_t i = 0; i < k; ++i) x = apply_col(a, x);
    return x;
}

/// Rescales a by its L1 norm so the companion spectral radius is at most 1
/// (Gershgorin bound max(1, sum|a_i|) applied after the rescale).
/// An all-zero a is returned unchanged.
inline Vec normalize_stability(Vec a) {
    double s = 0.0;
    for (double v : a) s += std::abs(v);
    if (s == 0.0) return a;
    for (double& v : a) v /= s;
    return a;
}

/// One recurrence step. Both output conventions are returned; callers pick:
///   y_pre  = C x   + D u   (output before the state update)
///   y_post = C x'  + D u   (output after it, the one-step-ahead prediction)
struct StepResult {
    Vec x_next;
    double y_pre = 0.0;
    double y_post = 0.0;
};

inline StepResult step(const Ssm& s, const Vec& x, double u) {
    check_ssm(s);
    const std::size_t d = s.dim();
    require(x.size() == d, "step: state dimension mismatch");
    StepResult r;
    r.y_pre = s.D * u;
    for (std::size_t i = 0; i < d; ++i) r.y_pre += s.C[i] * x[i];
    r.x_next = apply_col(s.a, x);
    for (std::size_t i = 0; i < d; ++i) r.x_next[i] += s.B[i] * u;
    r.y_post = s.D * u;
    for (std::size_t i = 0; i < d; ++i) r.y_post += s.C[i] * r.x_next[i];
    return r;
}

/// Dense d x d form (row-major). Test oracle only; never used by fast paths.
inline Mat dense(const Vec& a) {
    const std::size_t d = a.size();
    Mat m(d, Vec(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) {
        if (i > 0) m[i][i - 1] = 1.0;
        m[i][d - 1] += a[i];
    }
    return m;
}

inline double dot(const Vec& u, const Vec& v) {
    require(u.size() == v.size(), "dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

}  // namespace cssm
