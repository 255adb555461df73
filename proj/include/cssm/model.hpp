#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <thread>

#include "cssm/constructions.hpp"
#include "cssm/filter.hpp"

// Multi-SSM layers and the forecasting network.
//
// A layer holds one SISO SSM per channel; layer_forward convolves each
// channel with its output filter (post-update alignment, so position k is the
// one-step-ahead value) and adds the D skip. The decoder layer carries K rows
// and forecasts by closed-loop rollout. Stack shape mirrors the forecasting
// configuration used throughout: frozen preprocessing SSMs (differencing and
// moving-average residual rows), open-loop companion layers, one closed-loop
// decoder layer, and a per-timestep linear readout.

namespace cssm {

inline double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

/// Position-wise feed-forward block: W2 gelu(W1 v + b1) + b2.
struct Ffn {
    Mat W1;  // inner x s
    Vec b1;
    Mat W2;  // s x inner
    Vec b2;
};

struct MultiSsmLayer {
    std::vector<Ssm> ssms;
    bool frozen = false;
    std::optional<Ffn> ffn;
};

struct Encoder {
    enum class Kind { repeat_identity, linear };
    Kind kind = Kind::repeat_identity;
    std::size_t width = 1;  // output channels s
    Mat W;                  // s x m, linear kind only
};

struct Readout {
    Mat W;  // m x s, per-timestep linear map, no bias
};

struct Network {
    Encoder encoder;
    std::vector<MultiSsmLayer> layers;  // open-loop
    MultiSsmLayer decoder;              // closed-loop, K required for h > 1
    Readout readout;
};

inline Mat encode(const Encoder& e, const Mat& u) {
    require(!u.empty() && !u[0].empty(), "encode: empty input");
    const std::size_t m = u.size(), len = u[0].size();
    if (e.kind == Encoder::Kind::repeat_identity) {
        require(m == 1, "encode: repeat_identity needs univariate input");
        return Mat(e.width, u[0]);
    }
    require(e.W.size() == e.width, "encode: W row count != width");
    Mat out(e.width, Vec(len, 0.0));
    for (std::size_t i = 0; i < e.width; ++i) {
        require(e.W[i].size() == m, "encode: W column count != features");
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t t = 0; t < len; ++t) out[i][t] += e.W[i][j] * u[j][t];
    }
    return out;
}

namespace detail {

inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)>& body) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t used = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(used);
    for (std::size_t t = 0; t < used; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += used) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Channel-wise filter pass plus D skip, then the optional FFN applied to
/// each time column. Filter plans come from the cache (built sequentially);
/// the per-channel convolutions are pure, so the parallel path is bitwise
/// identical to the sequential one.
inline Mat layer_forward(const MultiSsmLayer& layer, const Mat& x,
                         FilterCache& cache, std::size_t threads = 1) {
    require(layer.ssms.size() == x.size(), "layer_forward: channel count mismatch");
    require(!x.empty() && !x[0].empty(), "layer_forward: empty input");
    const std::size_t s = x.size(), len = x[0].size();
    std::vector<std::shared_ptr<const FilterPlan>> plans(s);
    for (std::size_t i = 0; i < s; ++i) plans[i] = cache.get(layer.ssms[i], len);
    Mat y(s);
    detail::parallel_for(s, threads, [&](std::size_t i) {
        require(x[i].size() == len, "layer_forward: ragged input");
        Vec yi = apply_filter(plans[i]->f_y, x[i]);
        const double D = layer.ssms[i].D;
        if (D != 0.0)
            for (std::size_t t = 0; t < len; ++t) yi[t] += D * x[i][t];
        y[i] = std::move(yi);
    });
    if (layer.ffn) {
        const Ffn& f = *layer.ffn;
        const std::size_t inner = f.W1.size();
        Vec hbuf(inner), col(s);
        for (std::size_t t = 0; t < len; ++t) {
            for (std::size_t i = 0; i < s; ++i) col[i] = y[i][t];
            for (std::size_t j = 0; j < inner; ++j) {
                double acc = f.b1[j];
                for (std::size_t i = 0; i < s; ++i) acc += f.W1[j][i] * col[i];
                hbuf[j] = gelu(acc);
            }
            for (std::size_t i = 0; i < s; ++i) {
                double acc = f.b2[i];
                for (std::size_t j = 0; j < inner; ++j) acc += f.W2[i][j] * hbuf[j];
                y[i][t] = acc;
            }
        }
    }
    return y;
}

struct ForecastOptions {
    bool fast_rollout = true;
    std::size_t threads = 1;
};

/// h-step forecast. Per decoder channel the lag scan produces x_l, the first
/// emission is C x_l (the one-step-ahead value), and the remaining h-1 values
/// come from the closed-loop rollout powers 1..h-1. The readout then maps the
/// channel outputs to features at every horizon step.
inline Mat forecast(const Network& net, const Mat& u, std::size_t h,
                    const ForecastOptions& opts = {}) {
    require(h >= 1, "forecast: horizon must be positive");
    FilterCache cache;
    Mat x = encode(net.encoder, u);
    for (const auto& layer : net.layers)
        x = layer_forward(layer, x, cache, opts.threads);

    const std::size_t s = x.size();
    require(net.decoder.ssms.size() == s, "forecast: decoder channel mismatch");
    Mat chan(s, Vec(h, 0.0));
    for (std::size_t i = 0; i < s; ++i) {
        const Ssm& cell = net.decoder.ssms[i];
        const Vec xl = last_state(cell.a, cell.B, x[i]);
        chan[i][0] = dot(cell.C, xl);
        if (h > 1) {
            require(!cell.K.empty(),
                    "forecast: decoder ssm has no K but horizon > 1");
            const Vec tail = opts.fast_rollout
                                 ? fast_closed_loop_rollout(cell, xl, h - 1)
                                 : closed_loop_rollout(cell, xl, h - 1).y;
            for (std::size_t j = 0; j + 1 < h; ++j) chan[i][j + 1] = tail[j];
        }
    }

    const std::size_t m = net.readout.W.size();
    require(m >= 1, "forecast: empty readout");
    Mat out(m, Vec(h, 0.0));
    for (std::size_t f = 0; f < m; ++f) {
        require(net.readout.W[f].size() == s, "forecast: readout width mismatch");
        for (std::size_t i = 0; i < s; ++i) {
            const double w = net.readout.W[f][i];
            if (w == 0.0) continue;
            for (std::size_t t = 0; t < h; ++t) out[f][t] += w * chan[i][t];
        }
    }
    return out;
}

struct ForecastConfig {
    std::size_t features = 1;
    std::size_t width = 128;     // channels per layer, must be even
    std::size_t state_dim = 16;  // companion state size, >= 4
    std::size_t open_layers = 1;
    bool with_ffn = false;
    std::uint64_t seed = 0;
};

/// Seeded builder for the standard stack: frozen preprocessing layer (half
/// differencing rows cycling orders 0..3, half moving-average residual rows
/// with orders drawn uniformly from [4, d]), open-loop companion layers,
/// closed-loop companion decoder, linear readout. Identical seeds give
/// bitwise-identical networks.
inline Network build_forecast_network(const ForecastConfig& cfg) {
    require(cfg.features >= 1, "build_forecast_network: features must be positive");
    require(cfg.width >= 2 && cfg.width % 2 == 0,
            "build_forecast_network: width must be even and >= 2");
    require(cfg.state_dim >= 4, "build_forecast_network: state_dim must be >= 4");
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double scale = 1.0 / static_cast<double>(cfg.state_dim);
    auto draw_vec = [&](std::size_t n, double sd) {
        Vec v(n);
        for (double& x : v) x = gauss(rng) * sd;
        return v;
    };

    Network net;
    net.encoder.width = cfg.width;
    if (cfg.features == 1) {
        net.encoder.kind = Encoder::Kind::repeat_identity;
    } else {
        net.encoder.kind = Encoder::Kind::linear;
        net.encoder.W.resize(cfg.width);
        for (auto& row : net.encoder.W)
            row = draw_vec(cfg.features, 1.0 / static_cast<double>(cfg.features));
    }

    MultiSsmLayer pre;
    pre.frozen = true;
    std::uniform_int_distribution<std::size_t> ma_order(4, cfg.state_dim);
    for (std::size_t i = 0; i < cfg.width / 2; ++i)
        pre.ssms.push_back(preprocessing_ssm(diff_c_vector(i % 4, cfg.state_dim)));
    for (std::size_t i = cfg.width / 2; i < cfg.width; ++i)
        pre.ssms.push_back(preprocessing_ssm(ma_residual_c(ma_order(rng), cfg.state_dim)));
    net.layers.push_back(std::move(pre));

    auto make_ffn = [&] {
        Ffn f;
        const std::size_t inner = 2 * cfg.width;
        f.W1.resize(inner);
        for (auto& row : f.W1) row = draw_vec(cfg.width, 1.0 / static_cast<double>(cfg.width));
        f.b1.assign(inner, 0.0);
        f.W2.resize(cfg.width);
        for (auto& row : f.W2) row = draw_vec(inner, 1.0 / static_cast<double>(inner));
        f.b2.assign(cfg.width, 0.0);
        return f;
    };

    for (std::size_t l = 0; l < cfg.open_layers; ++l) {
        MultiSsmLayer layer;
        for (std::size_t i = 0; i < cfg.width; ++i) {
            Ssm s;
            s.a = normalize_stability(draw_vec(cfg.state_dim, scale));
            s.B = draw_vec(cfg.state_dim, scale);
            s.C = draw_vec(cfg.state_dim, scale);
            s.D = gauss(rng) * scale;
            layer.ssms.push_back(std::move(s));
        }
        if (cfg.with_ffn) layer.ffn = make_ffn();
        net.layers.push_back(std::move(layer));
    }

    for (std::size_t i = 0; i < cfg.width; ++i) {
        Ssm s;
        s.a = normalize_stability(draw_vec(cfg.state_dim, scale));
        s.B = draw_vec(cfg.state_dim, scale);
        s.C = draw_vec(cfg.state_dim, scale);
        s.D = 0.0;
        s.K = draw_vec(cfg.state_dim, scale);
        net.decoder.ssms.push_back(std::move(s));
    }

    net.readout.W.resize(cfg.features);
    for (auto& row : net.readout.W)
        row = draw_vec(cfg.width, 1.0 / static_cast<double>(cfg.width));
    return net;
}

}  // namespace cssm
