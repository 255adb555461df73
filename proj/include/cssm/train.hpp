#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include "cssm/companion.hpp"
#include "cssm/fft.hpp"

// Fitting routines for single SSM cells: closed-form least squares for the
// output and input-prediction rows, exact reverse-mode gradients through the
// recurrence for full parameter training, and the frequency-response probe
// used to compare fitted cells against target transfer functions.

namespace cssm {

/// Ridge least squares via normal equations, G = X^T X + ridge I.
/// At ridge = 0 a numerically singular G is an error (pass ridge > 0).
inline Vec fit_c_least_squares(const Mat& X, const Vec& y, double ridge = 0.0) {
    require(!X.empty(), "fit_c_least_squares: no rows");
    require(X.size() == y.size(), "fit_c_least_squares: row/target count mismatch");
    require(ridge >= 0.0, "fit_c_least_squares: negative ridge");
    const std::size_t n = X.size(), d = X[0].size();
    require(d >= 1, "fit_c_least_squares: empty rows");
    Eigen::MatrixXd Xd(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        require(X[i].size() == d, "fit_c_least_squares: ragged rows");
        for (std::size_t j = 0; j < d; ++j)
            Xd(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = X[i][j];
    }
    const Eigen::VectorXd yd = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
    Eigen::MatrixXd G = Xd.transpose() * Xd;
    G.diagonal().array() += ridge;
    if (ridge == 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        const double emax = es.eigenvalues().cwiseAbs().maxCoeff();
        const double emin = es.eigenvalues().cwiseAbs().minCoeff();
        if (emax <= 0.0 || emin / emax < 1e-12)
            throw std::runtime_error(
                "fit_c_least_squares: singular normal matrix; supply ridge > 0");
    }
    const Eigen::VectorXd c = G.ldlt().solve(Xd.transpose() * yd);
    return Vec(c.data(), c.data() + c.size());
}

struct Gradients {
    Vec da, dB, dC;
    double dD = 0.0;
    double loss = 0.0;
};

/// Flatten to [da..., dB..., dC..., dD] for elementwise comparison.
inline Vec pack(const Gradients& g) {
    Vec out;
    out.reserve(g.da.size() + g.dB.size() + g.dC.size() + 1);
    out.insert(out.end(), g.da.begin(), g.da.end());
    out.insert(out.end(), g.dB.begin(), g.dB.end());
    out.insert(out.end(), g.dC.begin(), g.dC.end());
    out.push_back(g.dD);
    return out;
}

/// Exact gradients of the mean squared one-step error through the recurrence.
/// Forward pass from x_0 = 0 with pred_k = C x_{k+1} + D u_k; the loss
/// averages (pred_k - targets_k)^2 over k >= loss_start. Reverse pass uses
/// the adjoint recursion adj_{k+1} = g_k C + A^T adj_{k+2}, where A^T acts
/// as the structured row application.
inline Gradients bptt_gradients(const Ssm& s, const Vec& u, const Vec& targets,
                                std::size_t loss_start = 0) {
    check_ssm(s);
    require(u.size() == targets.size(), "bptt_gradients: u/target size mismatch");
    require(!u.empty(), "bptt_gradients: empty sequence");
    require(loss_start < u.size(), "bptt_gradients: loss_start out of range");
    const std::size_t n = u.size(), d = s.dim();

    std::vector<Vec> xs(n + 1, Vec(d, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
        xs[k + 1] = apply_col(s.a, xs[k]);
        for (std::size_t i = 0; i < d; ++i) xs[k + 1][i] += s.B[i] * u[k];
    }

    const double cnt = static_cast<double>(n - loss_start);
    Gradients g;
    g.da.assign(d, 0.0);
    g.dB.assign(d, 0.0);
    g.dC.assign(d, 0.0);

    Vec adj(d, 0.0);  // dL/dx_{k+2} entering iteration k
    for (std::size_t k = n; k-- > 0;) {
        double gk = 0.0;
        if (k >= loss_start) {
            const double pred = dot(s.C, xs[k + 1]) + s.D * u[k];
            const double err = pred - targets[k];
            g.loss += err * err;
            gk = 2.0 * err / cnt;
        }
        Vec next = apply_row(adj, s.a);  // A^T adj_{k+2}
        for (std::size_t i = 0; i < d; ++i) next[i] += gk * s.C[i];
        const double tail = xs[k][d - 1];
        for (std::size_t i = 0; i < d; ++i) {
            g.da[i] += tail * next[i];
            g.dB[i] += u[k] * next[i];
            g.dC[i] += gk * xs[k + 1][i];
        }
        g.dD += gk * u[k];
        adj = std::move(next);
    }
    g.loss /= cnt;
    return g;
}

struct GdOptions {
    std::size_t epochs = 2000;
    double lr = 1e-2;
    double momentum = 0.9;
    bool normalize = false;  // L1-normalize a after every update
    bool train_a = true;
    bool train_b = true;
    bool train_c = true;
    bool train_d = false;
    std::size_t lag = 0;      // 0: full-sequence scan; else sliding lag windows
    std::size_t holdout = 0;  // trailing one-step predictions held out
    double divergence_limit = 1e6;
    std::function<void(std::size_t, const Ssm&, double)> observer;
};

struct FitReport {
    Ssm fitted;
    Vec loss_trace;
    double final_loss = 0.0;
    std::optional<double> holdout_mse;
    std::size_t epochs_run = 0;
};

namespace detail {

inline double window_prediction(const Ssm& s, const Vec& series, std::size_t t,
                                std::size_t lag) {
    const std::size_t d = s.dim();
    Vec x(d, 0.0);
    for (std::size_t k = t - lag; k < t; ++k) {
        x = apply_col(s.a, x);
        for (std::size_t i = 0; i < d; ++i) x[i] += s.B[i] * series[k];
    }
    return dot(s.C, x) + s.D * series[t - 1];
}

}  // namespace detail

/// First-order fit of (a, B, C, D) by gradient descent with heavy-ball
/// momentum. lag = 0 trains on the full one-step scan of the series; lag > 0
/// trains on sliding windows of that length, each scanned from a zero state
/// to predict the element right after the window. Throws Divergence when the
/// epoch loss exceeds the limit.
inline FitReport gradient_descent_fit(Ssm s, const Vec& series,
                                      const GdOptions& opt = {}) {
    check_ssm(s);
    const std::size_t n = series.size(), d = s.dim();
    require(n > d, "gradient_descent_fit: series shorter than state size");
    if (opt.lag > 0) require(n > opt.lag + opt.holdout, "gradient_descent_fit: series too short for lag/holdout");
    else require(n >= 2 + opt.holdout, "gradient_descent_fit: series too short for holdout");

    Vec va(d, 0.0), vb(d, 0.0), vc(d, 0.0);
    double vd = 0.0;
    FitReport rep;
    rep.loss_trace.reserve(opt.epochs);

    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        Gradients g;
        if (opt.lag == 0) {
            const std::size_t train_n = n - opt.holdout;
            const Vec u(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(train_n - 1));
            const Vec t(series.begin() + 1, series.begin() + static_cast<std::ptrdiff_t>(train_n));
            g = bptt_gradients(s, u, t);
        } else {
            g.da.assign(d, 0.0);
            g.dB.assign(d, 0.0);
            g.dC.assign(d, 0.0);
            const std::size_t first = opt.lag, last = n - opt.holdout;  // predict series[t], t in [first, last)
            const double cnt = static_cast<double>(last - first);
            for (std::size_t t = first; t < last; ++t) {
                const Vec u(series.begin() + static_cast<std::ptrdiff_t>(t - opt.lag),
                            series.begin() + static_cast<std::ptrdiff_t>(t));
                Vec tgt(opt.lag, 0.0);
                tgt[opt.lag - 1] = series[t];
                const Gradients gw = bptt_gradients(s, u, tgt, opt.lag - 1);
                for (std::size_t i = 0; i < d; ++i) {
                    g.da[i] += gw.da[i] / cnt;
                    g.dB[i] += gw.dB[i] / cnt;
                    g.dC[i] += gw.dC[i] / cnt;
                }
                g.dD += gw.dD / cnt;
                g.loss += gw.loss / cnt;
            }
        }

        if (!std::isfinite(g.loss) || g.loss > opt.divergence_limit) {
            std::ostringstream os;
            os << "gradient_descent_fit: diverged at epoch " << epoch
               << " (loss " << g.loss << " > " << opt.divergence_limit << ")";
            throw Divergence(os.str());
        }

        for (std::size_t i = 0; i < d; ++i) {
            if (opt.train_a) {
                va[i] = opt.momentum * va[i] - opt.lr * g.da[i];
                s.a[i] += va[i];
            }
            if (opt.train_b) {
                vb[i] = opt.momentum * vb[i] - opt.lr * g.dB[i];
                s.B[i] += vb[i];
            }
            if (opt.train_c) {
                vc[i] = opt.momentum * vc[i] - opt.lr * g.dC[i];
                s.C[i] += vc[i];
            }
        }
        if (opt.train_d) {
            vd = opt.momentum * vd - opt.lr * g.dD;
            s.D += vd;
        }
        if (opt.normalize) s.a = normalize_stability(std::move(s.a));

        rep.loss_trace.push_back(g.loss);
        rep.epochs_run = epoch + 1;
        if (opt.observer) opt.observer(epoch, s, g.loss);
    }

    rep.final_loss = rep.loss_trace.empty() ? 0.0 : rep.loss_trace.back();
    if (opt.holdout > 0) {
        double acc = 0.0;
        if (opt.lag == 0) {
            Vec x(d, 0.0);
            for (std::size_t k = 0; k + 1 < n; ++k) {
                const StepResult r = step(s, x, series[k]);
                x = r.x_next;
                const double pred = r.y_post;
                if (k + 1 >= n - opt.holdout) {
                    const double e = pred - series[k + 1];
                    acc += e * e;
                }
            }
        } else {
            for (std::size_t t = n - opt.holdout; t < n; ++t) {
                const double e = detail::window_prediction(s, series, t, opt.lag) - series[t];
                acc += e * e;
            }
        }
        rep.holdout_mse = acc / static_cast<double>(opt.holdout);
    }
    rep.fitted = std::move(s);
    return rep;
}

/// Learning rate for lag-window descent over a frozen shift state, sized
/// from the data: the window loss is quadratic in C with Hessian
/// (2 / cnt) G for the lag-row Gram G, so step at 1.5 over its largest
/// eigenvalue (heavy-ball at the default momentum is stable up to 2 (1 + m)).
inline double window_gram_lr(const Vec& series, std::size_t lag,
                             std::size_t holdout) {
    const std::size_t n = series.size();
    require(lag >= 1, "window_gram_lr: lag must be positive");
    require(n > lag + holdout, "window_gram_lr: series too short");
    const auto li = static_cast<Eigen::Index>(lag);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(li, li);
    std::size_t cnt = 0;
    for (std::size_t t = lag; t < n - holdout; ++t, ++cnt)
        for (std::size_t i = 0; i < lag; ++i)
            for (std::size_t j = 0; j < lag; ++j)
                gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
                    series[t - 1 - i] * series[t - 1 - j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double lmax = es.eigenvalues().maxCoeff();
    require(lmax > 0.0, "window_gram_lr: degenerate training windows");
    return 1.5 * static_cast<double>(cnt) / (2.0 * lmax);
}

/// Least-squares input-prediction row: scan u through the cell and solve
/// min_K sum_k (K x_{k+1} - u_{k+1})^2. Rank deficiency at ridge = 0 raises
/// the least-squares error (pass ridge > 0).
inline Vec fit_closed_loop_k(const Ssm& s, const Vec& u, double ridge = 0.0) {
    check_ssm(s);
    require(u.size() >= 2, "fit_closed_loop_k: need at least two samples");
    const std::size_t d = s.dim();
    Mat rows;
    Vec targets;
    Vec x(d, 0.0);
    for (std::size_t k = 0; k + 1 < u.size(); ++k) {
        x = apply_col(s.a, x);
        for (std::size_t i = 0; i < d; ++i) x[i] += s.B[i] * u[k];
        rows.push_back(x);
        targets.push_back(u[k + 1]);
    }
    return fit_c_least_squares(rows, targets, ridge);
}

/// Transfer function H(e^{i w}) = C (e^{i w} I - A)^{-1} B + D on a uniform
/// n-point grid over [0, pi]. A grid point that hits an eigenvalue of A is
/// flagged as an infinite response.
inline CVec frequency_response(const Ssm& s, std::size_t n_points) {
    check_ssm(s);
    require(n_points >= 2, "frequency_response: need at least two points");
    const std::size_t d = s.dim();
    Eigen::MatrixXcd Ad = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 1; i < d; ++i) Ad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    for (std::size_t i = 0; i < d; ++i) Ad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d - 1)) += s.a[i];
    Eigen::VectorXcd Bd(d);
    for (std::size_t i = 0; i < d; ++i) Bd(static_cast<Eigen::Index>(i)) = s.B[i];

    CVec h(n_points);
    double bnorm = 0.0;
    for (double v : s.B) bnorm = std::max(bnorm, std::abs(v));
    for (std::size_t j = 0; j < n_points; ++j) {
        const double w = std::numbers::pi * static_cast<double>(j) /
                         static_cast<double>(n_points - 1);
        const cd z = std::polar(1.0, w);
        Eigen::MatrixXcd Mz = -Ad;
        Mz.diagonal().array() += z;
        const Eigen::VectorXcd x = Mz.partialPivLu().solve(Bd);
        const double resid = (Mz * x - Bd).cwiseAbs().maxCoeff();
        if (!x.allFinite() || resid > 1e-6 * std::max(1.0, bnorm)) {
            h[j] = cd(std::numeric_limits<double>::infinity(), 0.0);
            continue;
        }
        cd acc(s.D, 0.0);
        for (std::size_t i = 0; i < d; ++i) acc += s.C[i] * x(static_cast<Eigen::Index>(i));
        h[j] = acc;
    }
    return h;
}

}  // namespace cssm
