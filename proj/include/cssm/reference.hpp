#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <complex>
#include <numbers>

#include "cssm/companion.hpp"

// Dense reference routes. Everything here recomputes results from the dense
// matrix form (or the defining recursion) without touching the structured
// fast paths, so the two sides of every equivalence check stay independent.

namespace cssm::ref {

inline Eigen::MatrixXd dense_companion(const Vec& a) {
    const auto d = static_cast<Eigen::Index>(a.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 1; i < d; ++i) m(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) m(i, d - 1) += a[static_cast<std::size_t>(i)];
    return m;
}

inline Eigen::VectorXd to_eigen(const Vec& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vec from_eigen(const Eigen::VectorXd& v) {
    return Vec(v.data(), v.data() + v.size());
}

/// Filter taps C A^k B via dense matrix-vector powering.
inline Vec dense_output_filter(const Ssm& s, std::size_t len) {
    const Eigen::MatrixXd A = dense_companion(s.a);
    Eigen::VectorXd v = to_eigen(s.B);
    const Eigen::VectorXd c = to_eigen(s.C);
    Vec taps(len);
    for (std::size_t k = 0; k < len; ++k) {
        taps[k] = c.dot(v);
        if (k + 1 < len) v = A * v;
    }
    return taps;
}

/// Closed-loop outputs y_i = C (A + B K)^i x, i = 1..h, dense powering.
inline Vec dense_closed_loop(const Ssm& s, const Vec& x_start, std::size_t h) {
    const Eigen::MatrixXd M =
        dense_companion(s.a) + to_eigen(s.B) * to_eigen(s.K).transpose();
    Eigen::VectorXd x = to_eigen(x_start);
    const Eigen::VectorXd c = to_eigen(s.C);
    Vec y(h);
    for (std::size_t i = 0; i < h; ++i) {
        x = M * x;
        y[i] = c.dot(x);
    }
    return y;
}

/// u^T (I - w^m S)^{-1} v by forward substitution on the bidiagonal system.
inline std::complex<double> resolvent_quad(const Vec& u, const Vec& v,
                                           std::size_t len, std::size_t m) {
    const std::size_t d = u.size();
    const std::complex<double> w =
        std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(m) /
                            static_cast<double>(len));
    std::complex<double> acc(0.0, 0.0), prev(0.0, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const std::complex<double> wi = v[i] + (i > 0 ? w * prev : std::complex<double>(0.0));
        acc += u[i] * wi;
        prev = wi;
    }
    return acc;
}

inline double spectral_radius(const Vec& a) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(dense_companion(a), false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Scan outputs in the post-update convention: out[k] = C x_{k+1} + D u_k.
inline Vec scan_post_update(const Ssm& s, const Vec& u) {
    Vec x(s.dim(), 0.0);
    Vec out(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        const StepResult r = step(s, x, u[k]);
        out[k] = r.y_post;
        x = r.x_next;
    }
    return out;
}

/// Direct ARMA(p, q) recursion driven by a fixed noise sequence e:
///   y_k = e_k + sum_i theta_i e_{k-i} + sum_i phi_i y_{k-i},
/// with zero pre-history.
inline Vec arma_recursion(const Vec& phi, const Vec& theta, const Vec& e) {
    Vec y(e.size(), 0.0);
    for (std::size_t k = 0; k < e.size(); ++k) {
        double v = e[k];
        for (std::size_t i = 1; i <= theta.size(); ++i)
            if (k >= i) v += theta[i - 1] * e[k - i];
        for (std::size_t i = 1; i <= phi.size(); ++i)
            if (k >= i) v += phi[i - 1] * y[k - i];
        y[k] = v;
    }
    return y;
}

/// Shifted-output ARMA recursion
///   y_{k+1} = y_k + sum_i theta_i y_{k-i} + sum_i phi_i y_{k+1-i},
/// continued from the given initial segment (zero history before it).
inline Vec arma_shifted_recursion(const Vec& phi, const Vec& theta,
                                  const Vec& init, std::size_t n) {
    Vec y(init);
    y.resize(n, 0.0);
    for (std::size_t k = init.size() - 1; k + 1 < n; ++k) {
        double v = y[k];
        for (std::size_t i = 1; i <= theta.size(); ++i)
            if (k >= i) v += theta[i - 1] * y[k - i];
        for (std::size_t i = 1; i <= phi.size(); ++i)
            if (k + 1 >= i) v += phi[i - 1] * y[k + 1 - i];
        y[k + 1] = v;
    }
    return y;
}

/// Markov parameter C A^i B of a dense realization.
inline double markov_parameter(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                               const Eigen::RowVectorXd& C, std::size_t i) {
    Eigen::VectorXd v = B;
    for (std::size_t k = 0; k < i; ++k) v = A * v;
    return (C * v)(0);
}

/// Mean squared one-step error of the recurrence, averaged over
/// k >= loss_start: the scalar objective the analytic gradients target.
inline double one_step_loss(const Ssm& s, const Vec& u, const Vec& targets,
                            std::size_t loss_start = 0) {
    const std::size_t d = s.dim(), n = u.size();
    Vec x(d, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        Vec nx = apply_col(s.a, x);
        for (std::size_t i = 0; i < d; ++i) nx[i] += s.B[i] * u[k];
        x = std::move(nx);
        if (k >= loss_start) {
            const double pred = dot(s.C, x) + s.D * u[k];
            const double err = pred - targets[k];
            acc += err * err;
        }
    }
    return acc / static_cast<double>(n - loss_start);
}

/// Central finite differences of one_step_loss in every parameter, packed as
/// [da..., dB..., dC..., dD]. Slow; pairs with the analytic reverse pass in
/// equivalence checks.
inline Vec fd_gradient_pack(const Ssm& s, const Vec& u, const Vec& targets,
                            std::size_t loss_start = 0, double h = 1e-5) {
    const std::size_t d = s.dim();
    Vec out(3 * d + 1);
    auto central = [&](Ssm& m, double* param, std::size_t slot) {
        const double orig = *param;
        *param = orig + h;
        const double up = one_step_loss(m, u, targets, loss_start);
        *param = orig - h;
        const double down = one_step_loss(m, u, targets, loss_start);
        out[slot] = (up - down) / (2.0 * h);
    };
    for (std::size_t i = 0; i < d; ++i) {
        Ssm m = s;
        central(m, &m.a[i], i);
    }
    for (std::size_t i = 0; i < d; ++i) {
        Ssm m = s;
        central(m, &m.B[i], d + i);
    }
    for (std::size_t i = 0; i < d; ++i) {
        Ssm m = s;
        central(m, &m.C[i], 2 * d + i);
    }
    Ssm m = s;
    central(m, &m.D, 3 * d);
    return out;
}

}  // namespace cssm::ref
