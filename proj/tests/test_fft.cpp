#include <catch2/catch_amalgamated.hpp>
#include <numbers>
#include <random>

#include "cssm/fft.hpp"
#include "cssm/reference.hpp"

using namespace cssm;

namespace {

CVec random_cvec(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 1.0);
    CVec v(n);
    for (auto& x : v) x = cd(g(rng), g(rng));
    return v;
}

Vec random_rvec(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

// O(n^2) transform straight from the definition, kept separate from the
// library's own direct path.
CVec dft_by_definition(const CVec& in) {
    const std::size_t n = in.size();
    CVec out(n, cd(0.0));
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t k = 0; k < n; ++k)
            out[m] += in[k] * std::polar(1.0, -2.0 * std::numbers::pi *
                                                  static_cast<double>(m * k) /
                                                  static_cast<double>(n));
    return out;
}

double max_diff(const CVec& a, const CVec& b) {
    REQUIRE(a.size() == b.size());
    double err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
    return err;
}

}  // namespace

TEST_CASE("dft matches the definition at every composite shape") {
    std::mt19937_64 rng(11);
    std::vector<std::size_t> sizes;
    for (std::size_t n = 1; n <= 40; ++n) sizes.push_back(n);
    for (std::size_t n : {64, 128, 336, 720, 729, 1000, 1024}) sizes.push_back(n);
    for (std::size_t n : {37, 97, 719, 1009}) sizes.push_back(n);  // primes
    for (std::size_t n : sizes) {
        const CVec v = random_cvec(rng, n);
        const double err = max_diff(dft(v), dft_by_definition(v));
        INFO("n = " << n);
        CHECK(err < 1e-8 * std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("dft of a delta is flat, dft of ones is a scaled delta") {
    for (std::size_t n : {1, 5, 8, 720}) {
        CVec delta(n, cd(0.0));
        delta[0] = 1.0;
        for (const cd& x : dft(delta)) CHECK(std::abs(x - cd(1.0)) < 1e-12);

        const CVec flat = dft(CVec(n, cd(1.0)));
        CHECK(std::abs(flat[0] - cd(static_cast<double>(n))) < 1e-9);
        for (std::size_t m = 1; m < n; ++m) CHECK(std::abs(flat[m]) < 1e-9);
    }
}

TEST_CASE("idft inverts dft") {
    std::mt19937_64 rng(13);
    for (std::size_t n : {1, 2, 3, 17, 24, 97, 256, 720}) {
        const CVec v = random_cvec(rng, n);
        CHECK(max_diff(idft(dft(v)), v) < 1e-10);
        CHECK(max_diff(dft(idft(v)), v) < 1e-10);
    }
}

TEST_CASE("linear_convolution matches the direct double loop") {
    CHECK(linear_convolution({1.0, 2.0}, {3.0, 4.0}) == Vec{3.0, 10.0, 8.0});
    CHECK(linear_convolution({5.0}, {7.0}) == Vec{35.0});

    std::mt19937_64 rng(17);
    for (auto [nu, nv] : std::vector<std::pair<std::size_t, std::size_t>>{
             {1, 9}, {4, 4}, {31, 33}, {64, 64}, {100, 300}}) {
        const Vec u = random_rvec(rng, nu), v = random_rvec(rng, nv);
        const Vec got = linear_convolution(u, v);
        REQUIRE(got.size() == nu + nv - 1);
        for (std::size_t k = 0; k < got.size(); ++k) {
            double want = 0.0;
            for (std::size_t i = 0; i < nu; ++i)
                if (k >= i && k - i < nv) want += u[i] * v[k - i];
            CHECK(got[k] == Catch::Approx(want).margin(1e-9));
        }
    }
}

TEST_CASE("quad basis example") {
    // u = v = e1, d = 2: only c_0 = 1, so every bin equals 1.
    const CVec q = quad({1.0, 0.0}, {1.0, 0.0}, 4);
    REQUIRE(q.size() == 4);
    for (const cd& x : q) CHECK(std::abs(x - cd(1.0)) < 1e-12);
}

TEST_CASE("quad equals the dense resolvent quadratic form") {
    std::mt19937_64 rng(19);
    for (std::size_t d : {1, 2, 3, 5, 8, 16}) {
        for (std::size_t len : {1, 2, 3, 4, 7, 12, 32}) {
            const Vec u = random_rvec(rng, d), v = random_rvec(rng, d);
            const CVec got = quad(u, v, len);
            REQUIRE(got.size() == len);
            for (std::size_t m = 0; m < len; ++m) {
                const cd want = ref::resolvent_quad(u, v, len, m);
                INFO("d = " << d << ", len = " << len << ", m = " << m);
                CHECK(std::abs(got[m] - want) < 1e-10);
            }
        }
    }
}

TEST_CASE("quad folds lags past the transform length") {
    // d > len exercises the (k mod len) accumulation.
    std::mt19937_64 rng(23);
    const Vec u = random_rvec(rng, 11), v = random_rvec(rng, 11);
    for (std::size_t len : {1, 2, 3, 5}) {
        const CVec got = quad(u, v, len);
        for (std::size_t m = 0; m < len; ++m)
            CHECK(std::abs(got[m] - ref::resolvent_quad(u, v, len, m)) < 1e-10);
    }
}

TEST_CASE("quad is bilinear") {
    std::mt19937_64 rng(29);
    const std::size_t d = 6, len = 8;
    const Vec u1 = random_rvec(rng, d), u2 = random_rvec(rng, d);
    const Vec v = random_rvec(rng, d);
    const double s = 2.75;

    Vec combo(d);
    for (std::size_t i = 0; i < d; ++i) combo[i] = u1[i] + s * u2[i];
    const CVec left = quad(combo, v, len);
    const CVec a = quad(u1, v, len), b = quad(u2, v, len);
    for (std::size_t m = 0; m < len; ++m)
        CHECK(std::abs(left[m] - (a[m] + s * b[m])) < 1e-10);

    const CVec right = quad(v, combo, len);
    const CVec c = quad(v, u1, len), e = quad(v, u2, len);
    for (std::size_t m = 0; m < len; ++m)
        CHECK(std::abs(right[m] - (c[m] + s * e[m])) < 1e-10);
}

TEST_CASE("quad_last_basis equals quad against e_d") {
    std::mt19937_64 rng(31);
    for (std::size_t d : {1, 3, 7, 12}) {
        for (std::size_t len : {2, 5, 16}) {
            const Vec v = random_rvec(rng, d);
            Vec ed(d, 0.0);
            ed[d - 1] = 1.0;
            const CVec want = quad(ed, v, len);
            const CVec got = quad_last_basis(v, len);
            for (std::size_t m = 0; m < len; ++m)
                CHECK(std::abs(got[m] - want[m]) < 1e-12);
        }
    }
}

TEST_CASE("transform length validation") {
    CHECK_THROWS_AS(quad({1.0}, {1.0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(quad({1.0, 2.0}, {1.0}, 4), std::invalid_argument);
}
