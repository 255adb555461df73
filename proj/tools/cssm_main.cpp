// cssm command-line front end: verification against dense oracles,
// benchmarking, AR fitting experiments, model construction, forecasting.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>

#include "cssm/cssm.hpp"
#include "cssm/reference.hpp"
#include "cssm/timing.hpp"

namespace {

using namespace cssm;

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string output;
};

std::string output_or(const GlobalOpts& g, const std::string& fallback) {
    return g.output.empty() ? fallback : g.output;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

std::vector<std::string> csv_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> names;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
    return names;
}

Vec random_vec(std::mt19937_64& rng, std::size_t d, double scale) {
    std::normal_distribution<double> g(0.0, scale);
    Vec v(d);
    for (double& x : v) x = g(rng);
    return v;
}

Ssm random_ssm(std::mt19937_64& rng, std::size_t d, bool with_k = false) {
    Ssm s;
    s.a = normalize_stability(random_vec(rng, d, 1.0));
    s.B = random_vec(rng, d, 1.0);
    s.C = random_vec(rng, d, 1.0);
    s.D = random_vec(rng, 1, 1.0)[0];
    if (with_k) s.K = random_vec(rng, d, 0.3 / static_cast<double>(d));
    return s;
}

json instance_json(const Ssm& s, std::uint64_t seed, std::size_t len) {
    json j = to_json(s);
    j["seed"] = seed;
    j["len"] = len;
    return j;
}

// ---------------------------------------------------------------- verify --

struct SuiteResult {
    std::string name;
    double max_err = 0.0;
    double tol = 0.0;
    std::size_t instances = 0;
    json worst;
};

void print_suite(const SuiteResult& r, int& failures) {
    const bool ok = r.max_err <= r.tol;
    if (!ok) ++failures;
    std::cout << (ok ? "[ ok ] " : "[FAIL] ") << std::left << std::setw(14)
              << r.name << " max error " << std::scientific
              << std::setprecision(3) << r.max_err << "  (tol " << r.tol
              << ", " << r.instances << " instances)\n";
    if (!ok) std::cerr << "failing instance: " << r.worst.dump() << "\n";
}

int run_verify(const GlobalOpts& g, std::size_t trials) {
    std::mt19937_64 rng(g.seed);

    // An eigenvalue sitting exactly on an l-th root of unity makes the
    // resolvent construction refuse (SingularResolvent); those instances are
    // resampled rather than counted.
    SuiteResult filter{"filter", 0.0, 1e-7, 0, {}};
    for (std::size_t t = 0; t < 10 * trials && filter.instances < trials; ++t) {
        const std::size_t d = 1 + rng() % 24;
        const std::size_t len = 1 + rng() % 256;  // includes len < d
        const Ssm s = random_ssm(rng, d);
        try {
            const Vec naive = naive_output_filter(s, len);
            const Vec fast = fast_output_filter(s.a, s.B, c_tilde(s.a, s.C, len), len);
            double err = 0.0;
            for (std::size_t i = 0; i < len; ++i) err = std::max(err, std::abs(naive[i] - fast[i]));
            ++filter.instances;
            if (err > filter.max_err) {
                filter.max_err = err;
                filter.worst = instance_json(s, g.seed, len);
            }
        } catch (const SingularResolvent&) {
        }
    }

    SuiteResult closed{"closed-loop", 0.0, 1e-7, 0, {}};
    for (std::size_t t = 0; t < 10 * trials && closed.instances < trials; ++t) {
        const std::size_t d = 1 + rng() % 16;
        const std::size_t h = 1 + rng() % 64;
        const Ssm s = random_ssm(rng, d, true);
        const Vec x0 = random_vec(rng, d, 1.0);
        try {
            const Vec fast = fast_closed_loop_rollout(s, x0, h);
            const Vec rec = closed_loop_rollout(s, x0, h).y;
            const Vec dense = ref::dense_closed_loop(s, x0, h);
            double err = 0.0;
            for (std::size_t i = 0; i < h; ++i) {
                const double scale = std::max(1.0, std::abs(dense[i]));
                err = std::max(err, std::abs(fast[i] - rec[i]) / scale);
                err = std::max(err, std::abs(fast[i] - dense[i]) / scale);
            }
            ++closed.instances;
            if (err > closed.max_err) {
                closed.max_err = err;
                closed.worst = instance_json(s, g.seed, h);
            }
        } catch (const SingularResolvent&) {
        }
    }

    SuiteResult cons{"constructions", 0.0, 1e-8, 0, {}};
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t p = 1 + rng() % 4, q = rng() % 4;
        const Vec phi = random_vec(rng, p, 0.3 / static_cast<double>(p));
        const Vec theta = random_vec(rng, q, 0.3);
        const Ssm s = arma_shifted_ssm(phi, theta);
        const std::size_t n = 64;
        Vec init{1.0};
        const Vec want = ref::arma_shifted_recursion(phi, theta, init, n);
        Vec got(n, 0.0);
        got[0] = init[0];
        Vec x(s.dim(), 0.0);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const StepResult r = step(s, x, got[k]);
            x = r.x_next;
            got[k + 1] = r.y_post;
        }
        // scaled: random shifted-ARMA instances often grow exponentially
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            err = std::max(err, std::abs(want[i] - got[i]) / std::max(1.0, std::abs(want[i])));
        ++cons.instances;
        if (err > cons.max_err) {
            cons.max_err = err;
            cons.worst = {{"phi", phi}, {"theta", theta}, {"seed", g.seed}};
        }
    }

    SuiteResult grad{"gradients", 0.0, 1e-4, 0, {}};
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t d = 1 + rng() % 8;
        const Ssm s = random_ssm(rng, d);
        const Vec u = random_vec(rng, 32, 1.0);
        const Vec targets = random_vec(rng, 32, 1.0);
        const Vec analytic = pack(bptt_gradients(s, u, targets));
        const Vec fd = ref::fd_gradient_pack(s, u, targets);
        double err = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i)
            err = std::max(err, std::abs(analytic[i] - fd[i]) / std::max(std::abs(fd[i]), 1e-3));
        ++grad.instances;
        if (err > grad.max_err) {
            grad.max_err = err;
            grad.worst = instance_json(s, g.seed, 32);
        }
    }

    int failures = 0;
    print_suite(filter, failures);
    print_suite(closed, failures);
    print_suite(cons, failures);
    print_suite(grad, failures);
    std::cout << (failures == 0 ? "all suites within tolerance\n"
                                : "verification FAILED\n");
    if (!g.output.empty()) {
        json rep;
        for (const auto* r : {&filter, &closed, &cons, &grad})
            rep[r->name] = {{"max_error", r->max_err}, {"tol", r->tol}, {"instances", r->instances}};
        rep["failures"] = failures;
        write_json(g.output, rep);
    }
    return failures;
}

// ----------------------------------------------------------------- bench --

int run_bench(const GlobalOpts& g, std::vector<std::size_t> lgrid,
              std::vector<std::size_t> dgrid, std::size_t reps,
              const std::vector<std::string>& algos) {
    std::ostringstream csv;
    csv << "algo,l,d,median_ns,iqr_ns,reps\n";
    std::cout << "algo,l,d,median_ns,iqr_ns,reps\n";

    std::map<std::size_t, std::vector<double>> fast_by_d;  // d -> medians over l
    std::map<std::size_t, std::vector<double>> fast_l;

    auto emit = [&](const std::string& algo, std::size_t l, std::size_t d,
                    const TimingStats& t) {
        csv << algo << ',' << l << ',' << d << ',' << std::fixed
            << std::setprecision(0) << t.median_ns << ',' << t.iqr_ns << ','
            << t.reps << '\n';
        std::cout << algo << ',' << l << ',' << d << ',' << std::fixed
                  << std::setprecision(0) << t.median_ns << ',' << t.iqr_ns
                  << ',' << t.reps << '\n';
    };
    auto wants = [&](const std::string& a) {
        return algos.empty() || std::find(algos.begin(), algos.end(), a) != algos.end();
    };

    double naive_med = 0.0, fast_med = 0.0;
    for (std::size_t d : dgrid) {
        std::mt19937_64 rng(g.seed + d);
        Ssm s = random_ssm(rng, d, true);
        for (double& v : s.a) v *= 0.99;  // keep every resolvent bin regular
        for (std::size_t l : lgrid) {
            volatile double sink = 0.0;
            if (wants("naive")) {
                const TimingStats t = measure_ns(
                    [&] { sink = naive_output_filter(s, l)[l - 1]; }, reps);
                emit("naive", l, d, t);
                naive_med = t.median_ns;
            }
            if (wants("fast")) {
                const TimingStats t = measure_ns(
                    [&] {
                        const Vec ct = c_tilde(s.a, s.C, l);
                        sink = fast_output_filter(s.a, s.B, ct, l)[l - 1];
                    },
                    reps);
                emit("fast", l, d, t);
                fast_med = t.median_ns;
                fast_by_d[d].push_back(t.median_ns);
                fast_l[d].push_back(static_cast<double>(l));
            }
            if (wants("fast+ctilde")) {
                const Vec ct = c_tilde(s.a, s.C, l);
                const TimingStats t = measure_ns(
                    [&] { sink = fast_output_filter(s.a, s.B, ct, l)[l - 1]; },
                    reps);
                emit("fast+ctilde", l, d, t);
            }
            if (wants("closed-loop-fast") || wants("closed-loop-recurrent")) {
                const Vec x0 = random_vec(rng, d, 1.0);
                if (wants("closed-loop-fast")) {
                    const TimingStats t = measure_ns(
                        [&] { sink = fast_closed_loop_rollout(s, x0, l)[l - 1]; },
                        reps);
                    emit("closed-loop-fast", l, d, t);
                }
                if (wants("closed-loop-recurrent")) {
                    const TimingStats t = measure_ns(
                        [&] { sink = closed_loop_rollout(s, x0, l).y[l - 1]; },
                        reps);
                    emit("closed-loop-recurrent", l, d, t);
                }
            }
            (void)sink;
        }
    }

    for (const auto& [d, meds] : fast_by_d)
        if (meds.size() >= 2)
            std::cout << "# fast log-log slope vs l at d=" << d << ": "
                      << std::setprecision(3) << loglog_slope(fast_l[d], meds)
                      << "\n";
    if (naive_med > 0.0 && fast_med > 0.0)
        std::cout << "# last-cell naive/fast median ratio: "
                  << std::setprecision(3) << naive_med / fast_med << "\n";

    write_text(output_or(g, "bench.csv"), csv.str());
    return 0;
}

// ---------------------------------------------------------------- fit-ar --

int run_fit_ar(const GlobalOpts& g, std::size_t p, const std::string& mode,
               std::size_t n, double noise, double modulus, std::size_t epochs,
               double lr, std::size_t holdout, std::size_t grid) {
    const Vec phi_true = ar_from_roots(p, modulus, g.seed);
    const Vec series = gen_ar_series(phi_true, n, noise, g.seed + 1);
    const Ssm truth = ar_to_ssm(phi_true);

    FitReport rep;
    double gd_lr = 0.0;
    if (mode == "ls") {
        Mat X;
        Vec y;
        for (std::size_t t = p; t < n - holdout; ++t) {
            Vec row(p);
            for (std::size_t i = 0; i < p; ++i) row[i] = series[t - 1 - i];
            X.push_back(std::move(row));
            y.push_back(series[t]);
        }
        const Vec c = fit_c_least_squares(X, y);
        rep.fitted = ar_to_ssm(c);
        double acc = 0.0;
        for (std::size_t r = 0; r < X.size(); ++r) {
            double pred = 0.0;
            for (std::size_t i = 0; i < p; ++i) pred += c[i] * X[r][i];
            acc += (pred - y[r]) * (pred - y[r]);
        }
        rep.final_loss = acc / static_cast<double>(X.size());
        if (holdout > 0) {
            double h_acc = 0.0;
            for (std::size_t t = n - holdout; t < n; ++t) {
                double pred = 0.0;
                for (std::size_t i = 0; i < p; ++i) pred += c[i] * series[t - 1 - i];
                h_acc += (pred - series[t]) * (pred - series[t]);
            }
            rep.holdout_mse = h_acc / static_cast<double>(holdout);
        }
    } else {
        // Noiseless AR data excites only a p-dimensional subspace, so the
        // recovery experiment trains C over the frozen shift structure (the
        // convex case); free (a, B) would be unidentifiable off that subspace.
        Ssm init = ar_to_ssm(Vec(p, 0.0));
        GdOptions opt;
        opt.epochs = epochs;
        gd_lr = lr > 0.0 ? lr : window_gram_lr(series, p, holdout);
        opt.lr = gd_lr;
        opt.lag = p;
        opt.holdout = holdout;
        opt.train_a = false;
        opt.train_b = false;
        rep = gradient_descent_fit(init, series, opt);
    }
    rep.fitted.K = rep.fitted.C;

    const CVec h_fit = frequency_response(rep.fitted, grid);
    const CVec h_true = frequency_response(truth, grid);
    double transfer_err = 0.0;
    for (std::size_t j = 0; j < grid; ++j)
        transfer_err = std::max(transfer_err, std::abs(h_fit[j] - h_true[j]));

    const std::string out = output_or(g, "fit_report.json");
    json j;
    j["schema"] = "cssm-fit-v1";
    j["mode"] = mode;
    j["p"] = p;
    j["phi_true"] = phi_true;
    j["transfer_error"] = transfer_err;
    if (mode != "ls") j["lr"] = gd_lr;
    j["report"] = to_json(rep);
    write_json(out, j);

    std::ostringstream freq;
    freq << "omega,re,im,magnitude\n";
    for (std::size_t k = 0; k < grid; ++k) {
        const double w = std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(grid - 1);
        freq << std::setprecision(17) << w << ',' << h_fit[k].real() << ','
             << h_fit[k].imag() << ',' << std::abs(h_fit[k]) << '\n';
    }
    write_text(with_suffix(out, "_freq.csv"), freq.str());

    std::cout << "mode " << mode << ", p " << p << ": transfer error "
              << std::scientific << std::setprecision(3) << transfer_err;
    if (rep.holdout_mse)
        std::cout << ", holdout one-step MSE over " << holdout << " steps "
                  << *rep.holdout_mse;
    std::cout << "\nwrote " << out << " and " << with_suffix(out, "_freq.csv")
              << "\n";
    return 0;
}

// -------------------------------------------------------------- forecast --

Mat ssm_forecast_window(const Ssm& s, const Mat& lag_cols, std::size_t h,
                        bool fast) {
    Mat out(lag_cols.size(), Vec(h, 0.0));
    for (std::size_t f = 0; f < lag_cols.size(); ++f) {
        const Vec xl = last_state(s.a, s.B, lag_cols[f]);
        out[f][0] = dot(s.C, xl);
        if (h > 1) {
            require(!s.K.empty(), "model has no K but horizon > 1");
            const Vec tail = fast ? fast_closed_loop_rollout(s, xl, h - 1)
                                  : closed_loop_rollout(s, xl, h - 1).y;
            for (std::size_t j = 0; j + 1 < h; ++j) out[f][j + 1] = tail[j];
        }
    }
    return out;
}

int run_forecast(const GlobalOpts& g, const std::string& model_path,
                 const std::string& build_path, const std::string& data_path,
                 std::vector<std::string> columns, std::size_t lag,
                 std::size_t horizon, double train_frac, std::size_t stride,
                 bool recurrent) {
    if (columns.empty()) {
        auto names = csv_header(data_path);
        require(names.size() >= 2, "data file needs a timestamp and a value column");
        columns.assign(names.begin() + 1, names.end());
    }
    const Table table = load_csv(data_path, columns);
    const std::size_t m = table.cols.size(), n = table.rows;

    const Standardizer stats = fit_standardizer(table.cols, train_frac);
    const Mat z = stats.apply(table.cols);

    std::optional<Ssm> cell;
    std::optional<Network> net;
    if (!model_path.empty()) {
        const json j = read_json(model_path);
        const std::string schema = j.value("schema", "");
        if (schema == kSsmSchema) cell = ssm_from_json(j);
        else if (schema == kNetworkSchema) net = network_from_json(j);
        else throw std::runtime_error("unrecognized model schema: " + schema);
    } else {
        const json j = read_json(build_path);
        ForecastConfig cfg;
        cfg.features = j.value("features", m);
        cfg.width = j.value("width", cfg.width);
        cfg.state_dim = j.value("state_dim", cfg.state_dim);
        cfg.open_layers = j.value("open_layers", cfg.open_layers);
        cfg.with_ffn = j.value("with_ffn", cfg.with_ffn);
        cfg.seed = j.value("seed", g.seed);
        require(cfg.features == m, "config features must match selected columns");
        net = build_forecast_network(cfg);
    }

    ForecastOptions fopts;
    fopts.fast_rollout = !recurrent;
    fopts.threads = g.threads;

    if (stride == 0) stride = horizon;
    const auto windows = make_windows(n, lag, horizon, stride);

    std::ostringstream csv;
    csv << "step,feature,prediction,truth\n";
    double se = 0.0, ae = 0.0;
    std::size_t cnt = 0;

    auto lag_slice = [&](std::size_t start) {
        Mat cols(m, Vec(lag));
        for (std::size_t f = 0; f < m; ++f)
            for (std::size_t t = 0; t < lag; ++t) cols[f][t] = z[f][start + t];
        return cols;
    };
    auto predict = [&](std::size_t start) {
        const Mat in = lag_slice(start);
        return net ? forecast(*net, in, horizon, fopts)
                   : ssm_forecast_window(*cell, in, horizon, !recurrent);
    };
    auto emit_rows = [&](std::size_t start, const Mat& pred, bool with_truth) {
        for (std::size_t f = 0; f < m; ++f)
            for (std::size_t t = 0; t < horizon; ++t) {
                const std::size_t idx = start + lag + t;
                const double raw = pred[f][t] * stats.std[f] + stats.mean[f];
                csv << idx << ',' << table.names[f] << ','
                    << std::setprecision(17) << raw << ',';
                if (with_truth && idx < n)
                    csv << table.cols[f][idx];
                csv << '\n';
                if (with_truth && idx < n) {
                    const double e = pred[f][t] - z[f][idx];
                    se += e * e;
                    ae += std::abs(e);
                    ++cnt;
                }
            }
    };

    for (const auto& w : windows) emit_rows(w.start, predict(w.start), true);
    if (n >= lag) {
        const std::size_t start = n - lag;  // extrapolation past the data
        emit_rows(start, predict(start), false);
    }

    const std::string out = output_or(g, "forecast.csv");
    write_text(out, csv.str());

    json metrics;
    metrics["schema"] = "cssm-metrics-v1";
    metrics["lag"] = lag;
    metrics["horizon"] = horizon;
    metrics["windows"] = windows.size();
    metrics["evaluated_points"] = cnt;
    if (cnt > 0) {
        metrics["standardized_mse"] = se / static_cast<double>(cnt);
        metrics["standardized_mae"] = ae / static_cast<double>(cnt);
    }
    write_json(with_suffix(out, "_metrics.json"), metrics);

    std::cout << "forecast over " << windows.size() << " windows";
    if (cnt > 0)
        std::cout << ": standardized MSE " << std::scientific
                  << std::setprecision(3) << se / static_cast<double>(cnt);
    std::cout << "\nwrote " << out << " and " << with_suffix(out, "_metrics.json")
              << "\n";
    return 0;
}

// ------------------------------------------------------------- construct --

int run_construct(const GlobalOpts& g, const std::string& spec_path) {
    const json spec = read_json(spec_path);
    Ssm s;
    std::string family;
    if (spec.contains("ar")) {
        family = "ar";
        s = ar_to_ssm(spec["ar"].at("phi").get<Vec>());
        s.K = s.C;
    } else if (spec.contains("arma")) {
        family = "arma";
        s = arma_shifted_ssm(spec["arma"].at("phi").get<Vec>(),
                             spec["arma"].at("theta").get<Vec>());
        s.K = s.C;
    } else if (spec.contains("ses")) {
        family = "ses";
        s = ar_to_ssm(ses_to_ar(spec["ses"].at("alpha").get<double>(),
                                spec["ses"].at("p").get<std::size_t>()));
        s.K = s.C;
    } else if (spec.contains("lti")) {
        const auto& l = spec["lti"];
        family = "lti";
        s = lti_to_companion(l.at("A").get<Mat>(), l.at("B").get<Vec>(),
                             l.at("C").get<Vec>(), l.value("D", 0.0));
    } else if (spec.contains("diff")) {
        family = "diff";
        s = preprocessing_ssm(diff_c_vector(spec["diff"].at("order").get<std::size_t>(),
                                            spec["diff"].at("d").get<std::size_t>()));
    } else if (spec.contains("ma_smoothing")) {
        family = "ma_smoothing";
        s = preprocessing_ssm(ma_smoothing_c(spec["ma_smoothing"].at("window").get<std::size_t>(),
                                             spec["ma_smoothing"].at("d").get<std::size_t>()));
    } else if (spec.contains("ma_residual")) {
        family = "ma_residual";
        s = preprocessing_ssm(ma_residual_c(spec["ma_residual"].at("window").get<std::size_t>(),
                                            spec["ma_residual"].at("d").get<std::size_t>()));
    } else {
        throw std::runtime_error(
            "spec must contain one of: ar, arma, ses, lti, diff, ma_smoothing, ma_residual");
    }

    const std::string out = output_or(g, "model.json");
    write_json(out, to_json(s));
    std::cout << family << " model, state size " << s.dim() << ", wrote " << out
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"companion-matrix state-space models for time series"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "RNG seed; every command is deterministic per seed");
    app.add_option("--threads", g.threads, "worker threads where supported")
        ->check(CLI::PositiveNumber);
    app.add_option("--output", g.output, "primary output path");

    auto* verify = app.add_subcommand(
        "verify", "check fast paths against dense oracles; exit = #failing suites");
    std::size_t trials = 50;
    verify->add_option("--trials", trials, "instances per suite")
        ->check(CLI::PositiveNumber);
    verify->fallthrough();

    auto* bench = app.add_subcommand("bench", "time filter/rollout construction, write CSV");
    std::vector<std::size_t> lgrid{4096, 16384, 65536};
    std::vector<std::size_t> dgrid{64, 1024};
    std::size_t reps = 9;
    std::vector<std::string> algos;
    bool parallel = false;
    bench->add_option("--l", lgrid, "sequence lengths (closed-loop: horizons)");
    bench->add_option("--d", dgrid, "state sizes");
    bench->add_option("--reps", reps, "timed repetitions per cell (>= 5)")
        ->check(CLI::Range(std::size_t{5}, std::size_t{10000}));
    bench->add_option("--algos", algos,
                      "subset of: naive fast fast+ctilde closed-loop-fast closed-loop-recurrent")
        ->check(CLI::IsMember({"naive", "fast", "fast+ctilde", "closed-loop-fast",
                               "closed-loop-recurrent"}));
    bench->add_flag("--parallel", parallel, "allow --threads to apply (timings single-threaded otherwise)");
    bench->fallthrough();

    auto* fit = app.add_subcommand("fit-ar", "recover a synthetic AR(p) process");
    std::size_t p = 0, n = 512, epochs = 2000, holdout = 50, grid = 256;
    double noise = 0.0, modulus = 1.0, lr = 0.0;
    std::string mode = "ls";
    fit->add_option("--p", p, "AR order")->required()->check(CLI::PositiveNumber);
    fit->add_option("--mode", mode, "ls | gd")->check(CLI::IsMember({"ls", "gd"}));
    fit->add_option("--n", n, "series length")->check(CLI::PositiveNumber);
    fit->add_option("--noise", noise, "innovation stddev")->check(CLI::NonNegativeNumber);
    fit->add_option("--modulus", modulus, "characteristic root modulus in (0, 1]");
    fit->add_option("--epochs", epochs, "gd epochs");
    fit->add_option("--lr", lr, "gd learning rate (0 = auto from the window Gram spectrum)")
        ->check(CLI::NonNegativeNumber);
    fit->add_option("--holdout", holdout, "trailing one-step predictions held out");
    fit->add_option("--grid", grid, "frequency grid points");
    fit->fallthrough();

    auto* fc = app.add_subcommand("forecast", "window a CSV series and forecast each window");
    std::string model_path, build_path, data_path;
    std::vector<std::string> columns;
    std::size_t lag = 0, horizon = 0, stride = 0;
    double train_frac = 0.7;
    bool recurrent = false;
    auto* mopt = fc->add_option("--model", model_path, "model JSON (cell or network)")
                     ->check(CLI::ExistingFile);
    fc->add_option("--build", build_path, "network config JSON to build instead")
        ->check(CLI::ExistingFile)
        ->excludes(mopt);
    fc->add_option("--data", data_path, "input CSV (header row, timestamp first)")
        ->required()
        ->check(CLI::ExistingFile);
    fc->add_option("--columns", columns, "value columns (default: all but first)");
    fc->add_option("--lag", lag, "look-back length")->required()->check(CLI::PositiveNumber);
    fc->add_option("--horizon", horizon, "forecast length")->required()->check(CLI::PositiveNumber);
    fc->add_option("--train-frac", train_frac, "standardization slice (chronological)");
    fc->add_option("--stride", stride, "window stride (default: horizon)");
    fc->add_flag("--recurrent", recurrent, "use the recurrent rollout instead of the fast path");
    fc->fallthrough();

    auto* cons = app.add_subcommand("construct", "build a model JSON from a family spec");
    std::string spec_path;
    cons->add_option("spec", spec_path, "spec JSON: {\"ar\": {\"phi\": [...]}}, ...")
        ->required()
        ->check(CLI::ExistingFile);
    cons->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(verify)) return run_verify(g, trials);
        if (app.got_subcommand(bench)) return run_bench(g, lgrid, dgrid, reps, algos);
        if (app.got_subcommand(fit))
            return run_fit_ar(g, p, mode, n, noise, modulus, epochs, lr, holdout, grid);
        if (app.got_subcommand(fc))
            return run_forecast(g, model_path, build_path, data_path, columns, lag,
                                horizon, train_frac, stride, recurrent);
        if (app.got_subcommand(cons)) return run_construct(g, spec_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
