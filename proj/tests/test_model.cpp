#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cssm/data.hpp"
#include "cssm/model.hpp"
#include "cssm/reference.hpp"
#include "cssm/serialize.hpp"

using namespace cssm;

namespace {

Vec gauss_vec(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> g(0.0, sd);
    Vec v(n);
    for (double& x : v) x = g(rng);
    return v;
}

Ssm random_cell(std::mt19937_64& rng, std::size_t d) {
    Ssm s;
    s.a = normalize_stability(gauss_vec(rng, d));
    for (double& x : s.a) x *= 0.9;
    s.B = gauss_vec(rng, d);
    s.C = gauss_vec(rng, d);
    s.D = gauss_vec(rng, 1)[0];
    return s;
}

}  // namespace

TEST_CASE("gelu matches the exact Gaussian-cdf form") {
    CHECK(gelu(0.0) == 0.0);
    CHECK(gelu(1.0) == Catch::Approx(0.8413447460685429).epsilon(1e-14));
    CHECK(gelu(-1.0) == Catch::Approx(-0.15865525393145707).epsilon(1e-12));
    CHECK(gelu(10.0) == Catch::Approx(10.0).epsilon(1e-12));
    CHECK(std::abs(gelu(-10.0)) < 1e-12);
    // odd-ish identity: gelu(x) + gelu(-x) == x * (Phi(x) + Phi(-x)) - x = 0 only at 0;
    // instead check gelu(x) - gelu(-x) == x exactly in exact arithmetic.
    for (double x : {0.3, 1.7, 4.2})
        CHECK(gelu(x) - gelu(-x) == Catch::Approx(x).epsilon(1e-13));
}

TEST_CASE("encode repeat_identity copies the single input row") {
    Encoder e;
    e.kind = Encoder::Kind::repeat_identity;
    e.width = 3;
    Mat u{{1.0, 2.0, 3.0}};
    Mat x = encode(e, u);
    REQUIRE(x.size() == 3);
    for (const auto& row : x) CHECK(row == u[0]);

    Mat multi{{1.0}, {2.0}};
    CHECK_THROWS_AS(encode(e, multi), std::invalid_argument);
    CHECK_THROWS_AS(encode(e, Mat{}), std::invalid_argument);
}

TEST_CASE("encode linear applies W per timestep") {
    Encoder e;
    e.kind = Encoder::Kind::linear;
    e.width = 2;
    e.W = {{1.0, 2.0}, {0.0, -1.0}};
    Mat u{{1.0, 0.0}, {3.0, 5.0}};
    Mat x = encode(e, u);
    REQUIRE(x.size() == 2);
    CHECK(x[0] == Vec{7.0, 10.0});
    CHECK(x[1] == Vec{-3.0, -5.0});

    e.W = {{1.0, 2.0}};  // wrong row count
    CHECK_THROWS_AS(encode(e, u), std::invalid_argument);
}

TEST_CASE("layer_forward equals a per-channel post-update scan") {
    std::mt19937_64 rng(41);
    MultiSsmLayer layer;
    Mat x;
    const std::size_t len = 33;
    for (std::size_t i = 0; i < 5; ++i) {
        layer.ssms.push_back(random_cell(rng, 2 + i));
        x.push_back(gauss_vec(rng, len));
    }
    FilterCache cache;
    Mat y = layer_forward(layer, x, cache);
    REQUIRE(y.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        Vec want = ref::scan_post_update(layer.ssms[i], x[i]);
        REQUIRE(y[i].size() == len);
        for (std::size_t t = 0; t < len; ++t)
            CHECK(y[i][t] == Catch::Approx(want[t]).margin(1e-10));
    }
}

TEST_CASE("layer_forward is bitwise identical across thread counts") {
    std::mt19937_64 rng(42);
    MultiSsmLayer layer;
    Mat x;
    for (std::size_t i = 0; i < 7; ++i) {
        layer.ssms.push_back(random_cell(rng, 6));
        x.push_back(gauss_vec(rng, 50));
    }
    FilterCache c1, c4;
    Mat y1 = layer_forward(layer, x, c1, 1);
    Mat y4 = layer_forward(layer, x, c4, 4);
    CHECK(y1 == y4);
}

TEST_CASE("layer_forward maps zero input to zero without an FFN") {
    std::mt19937_64 rng(43);
    MultiSsmLayer layer;
    layer.ssms.push_back(random_cell(rng, 4));
    Mat x{Vec(20, 0.0)};
    FilterCache cache;
    Mat y = layer_forward(layer, x, cache);
    for (double v : y[0]) CHECK(v == 0.0);
}

TEST_CASE("layer_forward FFN applies W2 gelu(W1 col + b1) + b2 per column") {
    std::mt19937_64 rng(44);
    MultiSsmLayer layer;
    Mat x;
    const std::size_t s = 3, inner = 4, len = 9;
    for (std::size_t i = 0; i < s; ++i) {
        layer.ssms.push_back(random_cell(rng, 3));
        x.push_back(gauss_vec(rng, len));
    }
    Ffn f;
    for (std::size_t j = 0; j < inner; ++j) f.W1.push_back(gauss_vec(rng, s, 0.5));
    f.b1 = gauss_vec(rng, inner, 0.1);
    for (std::size_t i = 0; i < s; ++i) f.W2.push_back(gauss_vec(rng, inner, 0.5));
    f.b2 = gauss_vec(rng, s, 0.1);

    MultiSsmLayer plain = layer;
    layer.ffn = f;
    FilterCache c1, c2;
    Mat pre = layer_forward(plain, x, c1);
    Mat got = layer_forward(layer, x, c2);
    for (std::size_t t = 0; t < len; ++t) {
        Vec h(inner);
        for (std::size_t j = 0; j < inner; ++j) {
            double acc = f.b1[j];
            for (std::size_t i = 0; i < s; ++i) acc += f.W1[j][i] * pre[i][t];
            h[j] = gelu(acc);
        }
        for (std::size_t i = 0; i < s; ++i) {
            double acc = f.b2[i];
            for (std::size_t j = 0; j < inner; ++j) acc += f.W2[i][j] * h[j];
            CHECK(got[i][t] == Catch::Approx(acc).margin(1e-12));
        }
    }
}

TEST_CASE("layer_forward validates shapes") {
    std::mt19937_64 rng(45);
    MultiSsmLayer layer;
    layer.ssms.push_back(random_cell(rng, 3));
    FilterCache cache;
    Mat two_channels{{1.0, 2.0}, {3.0, 4.0}};
    CHECK_THROWS_AS(layer_forward(layer, two_channels, cache), std::invalid_argument);
    layer.ssms.push_back(random_cell(rng, 3));
    Mat ragged{{1.0, 2.0}, {3.0}};
    CHECK_THROWS_AS(layer_forward(layer, ragged, cache), std::invalid_argument);
}

TEST_CASE("single-cell network forecasts a noiseless AR series exactly") {
    const std::size_t p = 5;
    Vec phi = ar_from_roots(p, 0.95, 11);
    std::mt19937_64 rng(46);
    std::vector<double> series = gauss_vec(rng, p);
    const std::size_t total = 64 + 3 * p;
    series.resize(total);
    for (std::size_t k = p; k < total; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < p; ++i) acc += phi[i] * series[k - 1 - i];
        series[k] = acc;
    }

    Ssm cell = ar_to_ssm(phi);
    cell.K = cell.C;
    Network net;
    net.encoder.kind = Encoder::Kind::repeat_identity;
    net.encoder.width = 1;
    net.decoder.ssms = {cell};
    net.readout.W = {{1.0}};

    Mat window{Vec(series.begin(), series.begin() + 64)};
    const std::size_t h = 3 * p;
    Mat out = forecast(net, window, h);
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].size() == h);
    for (std::size_t j = 0; j < h; ++j)
        CHECK(out[0][j] == Catch::Approx(series[64 + j]).margin(1e-6));

    // h = 1 never touches K.
    Ssm bare = ar_to_ssm(phi);
    net.decoder.ssms = {bare};
    Mat one = forecast(net, window, 1);
    CHECK(one[0][0] == Catch::Approx(series[64]).margin(1e-9));
    CHECK_THROWS_WITH(forecast(net, window, 2),
                      Catch::Matchers::ContainsSubstring("has no K"));
}

TEST_CASE("forecast fast and recurrent rollouts agree on a built network") {
    ForecastConfig cfg;
    cfg.features = 1;
    cfg.width = 8;
    cfg.state_dim = 6;
    cfg.open_layers = 1;
    cfg.with_ffn = true;
    cfg.seed = 100;
    Network net = build_forecast_network(cfg);
    std::mt19937_64 rng(47);
    Mat u{gauss_vec(rng, 48)};

    ForecastOptions fast, slow;
    fast.fast_rollout = true;
    slow.fast_rollout = false;
    Mat yf = forecast(net, u, 6, fast);
    Mat ys = forecast(net, u, 6, slow);
    REQUIRE(yf.size() == ys.size());
    for (std::size_t f = 0; f < yf.size(); ++f)
        for (std::size_t t = 0; t < yf[f].size(); ++t)
            CHECK(yf[f][t] == Catch::Approx(ys[f][t]).margin(1e-9));

    ForecastOptions threaded = fast;
    threaded.threads = 3;
    CHECK(forecast(net, u, 6, threaded) == yf);
}

TEST_CASE("build_forecast_network is deterministic per seed") {
    ForecastConfig cfg;
    cfg.width = 8;
    cfg.state_dim = 5;
    cfg.open_layers = 2;
    cfg.with_ffn = true;
    cfg.seed = 123;
    std::string a = to_json(build_forecast_network(cfg)).dump();
    std::string b = to_json(build_forecast_network(cfg)).dump();
    CHECK(a == b);
    cfg.seed = 124;
    CHECK(to_json(build_forecast_network(cfg)).dump() != a);
}

TEST_CASE("built network has the documented stack shape") {
    ForecastConfig cfg;
    cfg.features = 2;
    cfg.width = 6;
    cfg.state_dim = 7;
    cfg.open_layers = 2;
    cfg.seed = 5;
    Network net = build_forecast_network(cfg);

    CHECK(net.encoder.kind == Encoder::Kind::linear);
    REQUIRE(net.encoder.W.size() == 6);
    CHECK(net.encoder.W[0].size() == 2);

    REQUIRE(net.layers.size() == 3);  // preprocessing + open layers
    const MultiSsmLayer& pre = net.layers[0];
    CHECK(pre.frozen);
    REQUIRE(pre.ssms.size() == 6);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(pre.ssms[i].C == diff_c_vector(i % 4, 7));
        CHECK(pre.ssms[i].B[0] == 1.0);
        for (double v : pre.ssms[i].a) CHECK(v == 0.0);
    }
    for (std::size_t i = 3; i < 6; ++i) {
        // residual rows: c[0] = 1 - 1/n, c[j] = -1/n for j < n
        CHECK(pre.ssms[i].C[0] > 0.5);
        double sum = 0.0;
        for (double v : pre.ssms[i].C) sum += v;
        CHECK(sum == Catch::Approx(0.0).margin(1e-12));
    }
    for (std::size_t l = 1; l < 3; ++l) {
        CHECK_FALSE(net.layers[l].frozen);
        for (const Ssm& s : net.layers[l].ssms) {
            double l1 = 0.0;
            for (double v : s.a) l1 += std::abs(v);
            CHECK(l1 <= 1.0 + 1e-12);
            CHECK(s.K.empty());
        }
    }
    REQUIRE(net.decoder.ssms.size() == 6);
    for (const Ssm& s : net.decoder.ssms) CHECK(s.K.size() == 7);
    REQUIRE(net.readout.W.size() == 2);
    CHECK(net.readout.W[0].size() == 6);

    cfg.width = 7;
    CHECK_THROWS_AS(build_forecast_network(cfg), std::invalid_argument);
    cfg.width = 6;
    cfg.state_dim = 3;
    CHECK_THROWS_AS(build_forecast_network(cfg), std::invalid_argument);
}

TEST_CASE("forecast output means anything only with matching channel counts") {
    ForecastConfig cfg;
    cfg.width = 4;
    cfg.state_dim = 4;
    Network net = build_forecast_network(cfg);
    net.decoder.ssms.pop_back();
    std::mt19937_64 rng(48);
    Mat u{gauss_vec(rng, 16)};
    CHECK_THROWS_AS(forecast(net, u, 2), std::invalid_argument);
}
