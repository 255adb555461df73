#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "cssm/common.hpp"

// Series generation, CSV IO, standardization, and windowing.

namespace cssm {

/// Seeded AR(p) generator: u_k = sum_i phi_i u_{k-i} + noise, with Gaussian
/// initial values. Aborts with Divergence if |u_k| exceeds 1e12 (explosive
/// coefficient vectors).
namespace detail {

inline void ar_recurse(Vec& u, const Vec& phi, double noise_std,
                       std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t p = phi.size();
    for (std::size_t k = p; k < u.size(); ++k) {
        double v = noise_std > 0.0 ? gauss(rng) * noise_std : 0.0;
        for (std::size_t i = 1; i <= p; ++i) v += phi[i - 1] * u[k - i];
        if (!std::isfinite(v) || std::abs(v) > 1e12) {
            std::ostringstream os;
            os << "gen_ar_series: overflow guard at index " << k << " (value " << v << ")";
            throw Divergence(os.str());
        }
        u[k] = v;
    }
}

}  // namespace detail

inline Vec gen_ar_series(const Vec& phi, std::size_t n, double noise_std,
                         std::uint64_t seed, double init_scale = 1.0) {
    require(!phi.empty(), "gen_ar_series: empty phi");
    require(n >= phi.size(), "gen_ar_series: n shorter than order");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec u(n, 0.0);
    for (std::size_t k = 0; k < phi.size(); ++k) u[k] = gauss(rng) * init_scale;
    detail::ar_recurse(u, phi, noise_std, rng);
    return u;
}

/// Explicit start values, most recent first: init[0] seeds u_{p-1}, so the
/// first generated value is phi[0]*init[0] + phi[1]*init[1] + ...
inline Vec gen_ar_series(const Vec& phi, std::size_t n, const Vec& init,
                         double noise_std, std::uint64_t seed) {
    require(!phi.empty(), "gen_ar_series: empty phi");
    require(init.size() == phi.size(), "gen_ar_series: init size != order");
    require(n >= phi.size(), "gen_ar_series: n shorter than order");
    std::mt19937_64 rng(seed);
    Vec u(n, 0.0);
    const std::size_t p = phi.size();
    for (std::size_t k = 0; k < p; ++k) u[p - 1 - k] = init[k];
    detail::ar_recurse(u, phi, noise_std, rng);
    return u;
}

/// AR coefficients whose characteristic roots sit at the given modulus, in
/// conjugate pairs at seed-jittered angles spread over (0.15 pi, 0.85 pi)
/// (plus a real root at -modulus when p is odd). Distinct roots keep the lag
/// covariance matrix of the generated series well conditioned, which the
/// fitting experiments rely on.
inline Vec ar_from_roots(std::size_t p, double modulus, std::uint64_t seed) {
    require(p >= 1, "ar_from_roots: order must be positive");
    require(modulus > 0.0 && modulus <= 1.0, "ar_from_roots: modulus in (0, 1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.02, 0.02);

    std::vector<std::complex<double>> roots;
    const std::size_t pairs = p / 2;
    for (std::size_t j = 0; j < pairs; ++j) {
        const double frac = (static_cast<double>(j) + 0.5) / static_cast<double>(pairs);
        const double theta = std::numbers::pi * (0.15 + 0.7 * frac + jitter(rng));
        roots.emplace_back(std::polar(modulus, theta));
        roots.emplace_back(std::polar(modulus, -theta));
    }
    if (p % 2 == 1) roots.emplace_back(-modulus, 0.0);

    // Expand prod_j (z - r_j); coef[i] multiplies z^{p-i}, monic.
    std::vector<std::complex<double>> coef{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(coef.size() + 1, 0.0);
        for (std::size_t i = 0; i < coef.size(); ++i) {
            next[i] += coef[i];
            next[i + 1] -= r * coef[i];
        }
        coef = std::move(next);
    }

    // Characteristic form z^p - phi_1 z^{p-1} - ... - phi_p.
    Vec phi(p);
    for (std::size_t i = 1; i <= p; ++i) phi[i - 1] = -coef[i].real();
    return phi;
}

struct Table {
    std::vector<std::string> names;  // value column names, in request order
    Mat cols;                        // one vector per value column
    std::size_t rows = 0;
};

/// CSV loader for header + timestamp + value-column layouts. The first
/// column is treated as a timestamp and skipped unless requested by name.
/// Unknown names and unparseable cells are errors (with row numbers).
inline Table load_csv(const std::string& path,
                      const std::vector<std::string>& value_columns) {
    require(!value_columns.empty(), "load_csv: no value columns requested");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        if (!line.empty() && line.back() == ',') out.emplace_back();
        return out;
    };

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split(line);

    std::vector<std::size_t> idx;
    for (const auto& name : value_columns) {
        bool found = false;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == name) {
                idx.push_back(j);
                found = true;
                break;
            }
        }
        if (!found) {
            std::ostringstream os;
            os << "load_csv: column '" << name << "' not found; available:";
            for (const auto& h : header) os << " '" << h << "'";
            throw std::runtime_error(os.str());
        }
    }

    Table t;
    t.names = value_columns;
    t.cols.assign(value_columns.size(), Vec{});
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split(line);
        for (std::size_t c = 0; c < idx.size(); ++c) {
            if (idx[c] >= cells.size()) {
                std::ostringstream os;
                os << "load_csv: row " << row << " has " << cells.size()
                   << " cells, need column index " << idx[c] + 1;
                throw std::runtime_error(os.str());
            }
            try {
                std::size_t pos = 0;
                const double v = std::stod(cells[idx[c]], &pos);
                if (pos != cells[idx[c]].size()) throw std::invalid_argument("trailing");
                t.cols[c].push_back(v);
            } catch (const std::exception&) {
                std::ostringstream os;
                os << "load_csv: row " << row << ", column '" << t.names[c]
                   << "': cannot parse '" << cells[idx[c]] << "'";
                throw std::runtime_error(os.str());
            }
        }
    }
    t.rows = t.cols.empty() ? 0 : t.cols[0].size();
    return t;
}

/// Per-column affine standardizer with statistics taken from the training
/// prefix only (chronological split).
struct Standardizer {
    Vec mean, std;

    Mat apply(const Mat& cols) const {
        Mat out = cols;
        for (std::size_t c = 0; c < out.size(); ++c)
            for (double& v : out[c]) v = (v - mean[c]) / std[c];
        return out;
    }

    Mat invert(const Mat& cols) const {
        Mat out = cols;
        for (std::size_t c = 0; c < out.size(); ++c)
            for (double& v : out[c]) v = v * std[c] + mean[c];
        return out;
    }
};

inline Standardizer fit_standardizer(const Mat& cols, double train_fraction = 0.7) {
    require(!cols.empty() && !cols[0].empty(), "fit_standardizer: empty data");
    require(train_fraction > 0.0 && train_fraction <= 1.0,
            "fit_standardizer: train_fraction out of range");
    const std::size_t n = cols[0].size();
    const std::size_t train_n = std::max<std::size_t>(
        1, static_cast<std::size_t>(static_cast<double>(n) * train_fraction));
    Standardizer st;
    for (const auto& col : cols) {
        require(col.size() == n, "fit_standardizer: ragged columns");
        double m = 0.0;
        for (std::size_t i = 0; i < train_n; ++i) m += col[i];
        m /= static_cast<double>(train_n);
        double var = 0.0;
        for (std::size_t i = 0; i < train_n; ++i) var += (col[i] - m) * (col[i] - m);
        var /= static_cast<double>(train_n);
        if (var <= 0.0)
            throw std::runtime_error("fit_standardizer: zero variance in training slice");
        st.mean.push_back(m);
        st.std.push_back(std::sqrt(var));
    }
    return st;
}

struct Window {
    std::size_t start = 0;  // input is [start, start+lag), horizon follows
};

/// Sliding windows: count = floor((n - lag - horizon) / stride) + 1, empty
/// when the series is too short for even one window.
inline std::vector<Window> make_windows(std::size_t n, std::size_t lag,
                                        std::size_t horizon, std::size_t stride = 1) {
    require(lag >= 1 && horizon >= 0, "make_windows: bad lag/horizon");
    require(stride >= 1, "make_windows: stride must be positive");
    std::vector<Window> out;
    if (n < lag + horizon) return out;
    const std::size_t count = (n - lag - horizon) / stride + 1;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(Window{i * stride});
    return out;
}

inline double mse(const Vec& a, const Vec& b) {
    require(a.size() == b.size() && !a.empty(), "mse: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

inline double mae(const Vec& a, const Vec& b) {
    require(a.size() == b.size() && !a.empty(), "mae: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

}  // namespace cssm
