#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <sstream>

#include "cssm/companion.hpp"

// Exact companion state-space realizations of classical time series models.
// Each construction is validated in tests against the defining recursion.

namespace cssm {

/// AR(p): shift state holds the last p inputs, C carries the coefficients.
/// Running post-update on a sequence obeying the AR recursion reproduces it.
inline Ssm ar_to_ssm(const Vec& phi) {
    require(!phi.empty(), "ar_to_ssm: empty phi");
    const std::size_t d = phi.size();
    Ssm s;
    s.a.assign(d, 0.0);
    s.B.assign(d, 0.0);
    s.B[0] = 1.0;
    s.C = phi;
    s.D = 0.0;
    return s;
}

/// ARMA(p, q) with outputs equal to the inputs shifted by one step, realized
/// as a single shift-state head. From
///   y_{k+1} = y_k + sum_{i<=q} theta_i y_{k-i} + sum_{i<=p} phi_i y_{k+1-i}
/// the lag-grouped output row is
///   C_0 = 1 + phi_1,  C_i = theta_i + phi_{i+1}  (indices in range),
/// with state size max(p, q + 1).
inline Ssm arma_shifted_ssm(const Vec& phi, const Vec& theta) {
    require(!phi.empty() || !theta.empty(), "arma_shifted_ssm: both orders empty");
    const std::size_t p = phi.size(), q = theta.size();
    const std::size_t d = std::max(p, q + 1);
    Ssm s;
    s.a.assign(d, 0.0);
    s.B.assign(d, 0.0);
    s.B[0] = 1.0;
    s.C.assign(d, 0.0);
    s.D = 0.0;
    s.C[0] = 1.0 + (p >= 1 ? phi[0] : 0.0);
    for (std::size_t i = 1; i < d; ++i) {
        double c = 0.0;
        if (i <= q) c += theta[i - 1];
        if (i + 1 <= p) c += phi[i];
        s.C[i] = c;
    }
    return s;
}

/// ARMA(p, q) as two shift-state heads whose outputs are summed by the
/// caller: an AR head driven by past outputs (C = phi, D = 0) and an MA head
/// driven by the noise inputs (C = theta, D = 1).
struct ArmaHeads {
    Ssm ar;  // drive with y
    Ssm ma;  // drive with u
};

inline ArmaHeads arma_two_head(const Vec& phi, const Vec& theta) {
    require(!phi.empty() && !theta.empty(), "arma_two_head: empty order");
    ArmaHeads h;
    h.ar = ar_to_ssm(phi);
    h.ma = ar_to_ssm(theta);  // same shift skeleton, C = theta
    h.ma.D = 1.0;
    return h;
}

/// Simple exponential smoothing as an AR(p) weight vector:
/// phi_i = alpha (1 - alpha)^{i-1}.
inline Vec ses_to_ar(double alpha, std::size_t p) {
    require(p >= 1, "ses_to_ar: p must be positive");
    require(alpha > 0.0 && alpha < 2.0, "ses_to_ar: alpha out of range");
    Vec phi(p);
    double w = alpha;
    for (std::size_t i = 0; i < p; ++i) {
        phi[i] = w;
        w *= (1.0 - alpha);
    }
    return phi;
}

/// Controllable SISO LTI realization mapped to companion form by the Krylov
/// similarity T = [B, AB, ..., A^{d-1}B]:
///   G = T^{-1} A T is companion, inputs map to e_1, outputs to C T.
/// Markov parameters C A^i B are preserved exactly.
/// Throws NotControllable when the Krylov singular value ratio is below 1e-10.
inline Ssm lti_to_companion(const Mat& A, const Vec& B, const Vec& C, double D) {
    const std::size_t d = B.size();
    require(d >= 1 && A.size() == d && C.size() == d, "lti_to_companion: size mismatch");
    for (const auto& row : A)
        require(row.size() == d, "lti_to_companion: A not square");

    Eigen::MatrixXd Ad(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            Ad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = A[i][j];
    Eigen::VectorXd Bd = Eigen::Map<const Eigen::VectorXd>(B.data(), static_cast<Eigen::Index>(d));
    Eigen::RowVectorXd Cd = Eigen::Map<const Eigen::RowVectorXd>(C.data(), static_cast<Eigen::Index>(d));

    Eigen::MatrixXd T(d, d);
    Eigen::VectorXd v = Bd;
    for (std::size_t j = 0; j < d; ++j) {
        T.col(static_cast<Eigen::Index>(j)) = v;
        v = Ad * v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    const double ratio = smax > 0.0 ? smin / smax : 0.0;
    if (ratio < 1e-10) {
        std::ostringstream os;
        os << "lti_to_companion: realization not controllable "
           << "(Krylov singular value ratio " << ratio << " < 1e-10)";
        throw NotControllable(os.str());
    }

    // G = T^{-1} A T is companion with last column T^{-1} A^d B; the first
    // d-1 columns are exact basis shifts by construction of T.
    const Eigen::VectorXd last = svd.solve(v);  // v = A^d B here
    Ssm s;
    s.a = Vec(last.data(), last.data() + last.size());
    s.B.assign(d, 0.0);
    s.B[0] = 1.0;
    const Eigen::RowVectorXd ct = Cd * T;
    s.C = Vec(ct.data(), ct.data() + ct.size());
    s.D = D;
    return s;
}

/// Differencing output rows over the shift state, orders 0..3:
/// [1], [1,-1], [1,-2,1], [1,-3,3,-1], zero padded to d.
inline Vec diff_c_vector(std::size_t order, std::size_t d) {
    require(order <= 3, "diff_c_vector: order must be 0..3");
    require(d >= order + 1, "diff_c_vector: d too small for order");
    static constexpr double rows[4][4] = {
        {1.0, 0.0, 0.0, 0.0},
        {1.0, -1.0, 0.0, 0.0},
        {1.0, -2.0, 1.0, 0.0},
        {1.0, -3.0, 3.0, -1.0},
    };
    Vec c(d, 0.0);
    for (std::size_t i = 0; i < 4 && i <= order; ++i) c[i] = rows[order][i];
    return c;
}

/// Moving-average smoothing row: first n taps equal to 1/n.
inline Vec ma_smoothing_c(std::size_t n, std::size_t d) {
    require(n >= 1 && n <= d, "ma_smoothing_c: need 1 <= n <= d");
    Vec c(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) c[i] = 1.0 / static_cast<double>(n);
    return c;
}

/// Residual after smoothing: identity minus ma_smoothing_c, exactly.
inline Vec ma_residual_c(std::size_t n, std::size_t d) {
    Vec c = ma_smoothing_c(n, d);
    for (double& v : c) v = -v;
    c[0] += 1.0;
    return c;
}

/// Frozen preprocessing SSM around a fixed output row (shift state, B = e_1).
inline Ssm preprocessing_ssm(Vec c_row) {
    Ssm s;
    s.a.assign(c_row.size(), 0.0);
    s.B.assign(c_row.size(), 0.0);
    s.B[0] = 1.0;
    s.C = std::move(c_row);
    s.D = 0.0;
    return s;
}

}  // namespace cssm
