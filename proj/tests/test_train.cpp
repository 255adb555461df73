#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cssm/constructions.hpp"
#include "cssm/data.hpp"
#include "cssm/reference.hpp"
#include "cssm/train.hpp"

using namespace cssm;

namespace {

Vec gauss_vec(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> g(0.0, sd);
    Vec v(n);
    for (double& x : v) x = g(rng);
    return v;
}

// AR series with zero pre-history: every one-step prediction from a
// zero-initialized lag state is exactly expressible, so the global minimum
// of the one-step loss is zero.
Vec ar_zero_prehistory(const Vec& phi, std::size_t n, double u0 = 1.0) {
    Vec u(n, 0.0);
    u[0] = u0;
    for (std::size_t k = 1; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < std::min(k, phi.size()); ++i)
            acc += phi[i] * u[k - 1 - i];
        u[k] = acc;
    }
    return u;
}

}  // namespace

TEST_CASE("fit_c_least_squares recovers exact linear coefficients") {
    std::mt19937_64 rng(7);
    const std::size_t n = 40, d = 5;
    Vec w = gauss_vec(rng, d);
    Mat X;
    Vec y;
    for (std::size_t i = 0; i < n; ++i) {
        X.push_back(gauss_vec(rng, d));
        y.push_back(dot(w, X.back()));
    }
    Vec w_hat = fit_c_least_squares(X, y);
    for (std::size_t j = 0; j < d; ++j)
        CHECK(w_hat[j] == Catch::Approx(w[j]).margin(1e-10));

    // ridge shrinks the solution norm
    Vec w_ridge = fit_c_least_squares(X, y, 100.0);
    double n0 = 0.0, n1 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        n0 += w_hat[j] * w_hat[j];
        n1 += w_ridge[j] * w_ridge[j];
    }
    CHECK(n1 < n0);
}

TEST_CASE("fit_c_least_squares refuses a singular normal matrix at ridge 0") {
    Mat X{{1.0, 2.0}, {2.0, 4.0}, {3.0, 6.0}};  // rank 1
    Vec y{1.0, 2.0, 3.0};
    CHECK_THROWS_WITH(fit_c_least_squares(X, y),
                      Catch::Matchers::ContainsSubstring("ridge"));
    Vec w = fit_c_least_squares(X, y, 1e-6);  // regularized solve succeeds
    REQUIRE(w.size() == 2);
    CHECK(std::isfinite(w[0]));

    Mat ragged{{1.0, 2.0}, {3.0}};
    CHECK_THROWS_AS(fit_c_least_squares(ragged, Vec{1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_c_least_squares(Mat{}, Vec{}), std::invalid_argument);
}

TEST_CASE("bptt_gradients matches a hand-worked scalar case") {
    Ssm s;
    s.a = {0.5};
    s.B = {2.0};
    s.C = {3.0};
    s.D = 0.25;
    Vec u{1.0, -1.0}, t{0.0, 1.0};
    Gradients g = bptt_gradients(s, u, t);
    CHECK(g.loss == Catch::Approx(28.5625).margin(1e-12));
    CHECK(g.dC[0] == Catch::Approx(16.75).margin(1e-12));
    CHECK(g.dD == Catch::Approx(10.5).margin(1e-12));
    CHECK(g.dB[0] == Catch::Approx(25.125).margin(1e-12));
    CHECK(g.da[0] == Catch::Approx(-25.5).margin(1e-12));
}

TEST_CASE("bptt_gradients agrees with central finite differences") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> dim(1, 8);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = dim(rng);
        Ssm s;
        s.a = normalize_stability(gauss_vec(rng, d));
        for (double& v : s.a) v *= 0.9;
        s.B = gauss_vec(rng, d, 0.7);
        s.C = gauss_vec(rng, d, 0.7);
        s.D = gauss_vec(rng, 1, 0.3)[0];
        const std::size_t n = 24 + static_cast<std::size_t>(trial % 3) * 8;
        Vec u = gauss_vec(rng, n);
        Vec targets = gauss_vec(rng, n);
        const std::size_t ls = (trial % 5 == 0) ? d : 0;

        Gradients g = bptt_gradients(s, u, targets, ls);
        CHECK(g.loss == Catch::Approx(ref::one_step_loss(s, u, targets, ls)).epsilon(1e-12));

        Vec got = pack(g);
        Vec fd = ref::fd_gradient_pack(s, u, targets, ls);
        REQUIRE(got.size() == fd.size());
        double worst = 0.0;
        for (std::size_t j = 0; j < got.size(); ++j)
            worst = std::max(worst,
                             std::abs(got[j] - fd[j]) / std::max(std::abs(fd[j]), 1e-3));
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("bptt_gradients validates its inputs") {
    Ssm s;
    s.a = {0.0};
    s.B = {1.0};
    s.C = {1.0};
    CHECK_THROWS_AS(bptt_gradients(s, Vec{1.0, 2.0}, Vec{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(bptt_gradients(s, Vec{}, Vec{}), std::invalid_argument);
    CHECK_THROWS_AS(bptt_gradients(s, Vec{1.0}, Vec{1.0}, 1), std::invalid_argument);
}

TEST_CASE("C-only descent on a noiseless lag series reaches the exact filter") {
    Vec phi = ar_from_roots(4, 1.0, 2);
    Vec series = ar_zero_prehistory(phi, 300);

    Ssm init = ar_to_ssm(Vec(4, 0.0));
    GdOptions opt;
    opt.train_a = false;
    opt.train_b = false;
    opt.train_c = true;
    FitReport rep = gradient_descent_fit(init, series, opt);
    CHECK(rep.final_loss < 1e-8);
    CHECK(rep.epochs_run == opt.epochs);
    REQUIRE(rep.loss_trace.size() == opt.epochs);
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(rep.fitted.C[j] == Catch::Approx(phi[j]).margin(1e-3));
    // frozen parameters untouched
    for (double v : rep.fitted.a) CHECK(v == 0.0);
    CHECK(rep.fitted.B == init.B);
}

TEST_CASE("window-mode descent fits lag windows and reports holdout error") {
    Vec phi = ar_from_roots(3, 1.0, 4);
    Vec series = ar_zero_prehistory(phi, 240);

    Ssm init = ar_to_ssm(Vec(3, 0.0));
    GdOptions opt;
    opt.train_a = false;
    opt.train_b = false;
    opt.lag = 3;
    opt.holdout = 12;
    FitReport rep = gradient_descent_fit(init, series, opt);
    CHECK(rep.final_loss < 1e-8);
    REQUIRE(rep.holdout_mse.has_value());
    CHECK(*rep.holdout_mse < 1e-8);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(rep.fitted.C[j] == Catch::Approx(phi[j]).margin(1e-3));
}

TEST_CASE("normalize keeps the companion column on the stability simplex") {
    std::mt19937_64 rng(13);
    Vec phi = ar_from_roots(2, 0.9, 6);
    Vec series = ar_zero_prehistory(phi, 120);

    Ssm init = ar_to_ssm(phi);
    init.a = normalize_stability(gauss_vec(rng, 2));
    GdOptions opt;
    opt.epochs = 40;
    opt.lr = 1e-3;
    opt.normalize = true;
    std::size_t calls = 0;
    opt.observer = [&](std::size_t, const Ssm& m, double) {
        double l1 = 0.0;
        for (double v : m.a) l1 += std::abs(v);
        CHECK(l1 == Catch::Approx(1.0).margin(1e-12));
        ++calls;
    };
    gradient_descent_fit(init, series, opt);
    CHECK(calls == opt.epochs);
}

TEST_CASE("runaway learning rate raises Divergence") {
    Vec phi = ar_from_roots(2, 1.0, 9);
    Vec series = ar_zero_prehistory(phi, 100);
    Ssm init = ar_to_ssm(Vec(2, 0.0));  // wrong model, nonzero gradient
    GdOptions opt;
    opt.lr = 10.0;
    CHECK_THROWS_AS(gradient_descent_fit(init, series, opt), Divergence);
    try {
        gradient_descent_fit(init, series, opt);
    } catch (const Divergence& e) {
        CHECK(std::string(e.what()).find("diverged at epoch") != std::string::npos);
    }
}

TEST_CASE("fit_closed_loop_k recovers the feedback row from a rollout") {
    std::mt19937_64 rng(17);
    const std::size_t d = 3, n = 14;
    Ssm s;
    s.a = normalize_stability(gauss_vec(rng, d));
    for (double& v : s.a) v *= 0.7;
    s.B = gauss_vec(rng, d);
    s.C = gauss_vec(rng, d);
    Vec k_true = gauss_vec(rng, d, 0.5);

    // self-consistent trajectory: u_{k+1} = K x_{k+1}
    Vec u(n, 0.0);
    u[0] = 1.0;
    Vec x(d, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        x = apply_col(s.a, x);
        for (std::size_t i = 0; i < d; ++i) x[i] += s.B[i] * u[k];
        u[k + 1] = dot(k_true, x);
    }

    Vec k_fit = fit_closed_loop_k(s, u);
    for (std::size_t i = 0; i < d; ++i)
        CHECK(k_fit[i] == Catch::Approx(k_true[i]).margin(1e-8));
}

TEST_CASE("fit_closed_loop_k on an AR cell returns the AR coefficients") {
    Vec phi = ar_from_roots(4, 1.0, 21);
    Vec series = ar_zero_prehistory(phi, 200);
    Ssm cell = ar_to_ssm(phi);
    Vec k_fit = fit_closed_loop_k(cell, series);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(k_fit[i] == Catch::Approx(phi[i]).margin(1e-8));
}

TEST_CASE("fit_closed_loop_k needs informative states or ridge") {
    Ssm cell = ar_to_ssm(Vec{0.0, 0.0});
    cell.B = {0.0, 0.0};  // states never leave zero
    Vec u(16, 1.0);
    CHECK_THROWS_WITH(fit_closed_loop_k(cell, u),
                      Catch::Matchers::ContainsSubstring("ridge"));
    Vec k = fit_closed_loop_k(cell, u, 1e-3);
    CHECK(k.size() == 2);
}

TEST_CASE("frequency_response matches the lag-polynomial transfer function") {
    std::mt19937_64 rng(23);
    const std::size_t d = 5, np = 9;
    Ssm s = ar_to_ssm(gauss_vec(rng, d, 0.4));
    s.C = gauss_vec(rng, d);
    s.D = 0.3;
    CVec h = frequency_response(s, np);
    REQUIRE(h.size() == np);
    for (std::size_t j = 0; j < np; ++j) {
        const double w = std::numbers::pi * static_cast<double>(j) / (np - 1);
        const cd z = std::polar(1.0, w);
        cd want(s.D, 0.0);
        for (std::size_t i = 0; i < d; ++i)
            want += s.C[i] * std::pow(z, -static_cast<double>(i + 1));
        CHECK(std::abs(h[j] - want) < 1e-10);
    }
}

TEST_CASE("frequency_response flags a unit-circle eigenvalue as infinite") {
    Ssm s;
    s.a = {1.0};  // pole exactly at z = 1
    s.B = {1.0};
    s.C = {1.0};
    CVec h = frequency_response(s, 5);
    CHECK(std::isinf(h[0].real()));
    for (std::size_t j = 1; j < h.size(); ++j) CHECK(std::isfinite(h[j].real()));
    CHECK_THROWS_AS(frequency_response(s, 1), std::invalid_argument);
}
