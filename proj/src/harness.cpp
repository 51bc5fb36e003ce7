#include "locbound/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>

#include "locbound/certificate.hpp"
#include "locbound/classes.hpp"
#include "locbound/convexcost.hpp"
#include "locbound/em.hpp"
#include "locbound/estimators.hpp"
#include "locbound/gradflow.hpp"
#include "locbound/rademacher.hpp"

#ifndef LOCBOUND_BUILD_ID
#define LOCBOUND_BUILD_ID "unknown"
#endif

namespace locbound {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty input");
    if (sorted.size() == 1) return sorted[0];
    const double pos = q * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double w = pos - lo;
    return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    if (threads <= 0) {
        if (const char* env = std::getenv("LOCBOUND_THREADS")) threads = std::atoi(env);
        if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    threads = std::min(threads, count);
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next(0);
    std::vector<std::thread> pool;
    std::atomic<bool> failed(false);
    std::string message;
    std::mutex message_mutex;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(message_mutex);
                    if (!failed.exchange(true)) message = e.what();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failed) throw std::runtime_error(message);
}

FitLine fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_loglog: size mismatch");
    if (xs.size() < 3) throw std::invalid_argument("fit_loglog: need at least 3 points");
    const int n = static_cast<int>(xs.size());
    std::vector<double> lx(n), ly(n);
    for (int i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw std::invalid_argument("fit_loglog: inputs must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) { mx += lx[i]; my += ly[i]; }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_loglog: x values are all equal");
    FitLine fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy <= 1e-280) {  // constant ys: degenerate-variance convention
        fit.slope = 0.0;
        fit.intercept = my;
        fit.r2 = 0.0;
        return fit;
    }
    double ss_res = 0.0;
    for (int i = 0; i < n; ++i) {
        const double pred = fit.intercept + fit.slope * lx[i];
        ss_res += (ly[i] - pred) * (ly[i] - pred);
    }
    fit.r2 = 1.0 - ss_res / syy;
    return fit;
}

// ---------------------------------------------------------------------------
// Configuration parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) parts.push_back(t);
    }
    return parts;
}

double parse_real(const std::string& key, const std::string& raw) {
    try {
        std::size_t used = 0;
        if (raw == "inf") return std::numeric_limits<double>::infinity();
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' is not a number: " + raw);
    }
}

std::int64_t parse_int(const std::string& key, const std::string& raw) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(raw, &used);
        if (used != raw.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' is not an integer: " + raw);
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) + " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config: empty key or value on line " + std::to_string(lineno));
        if (cfg.kv_.count(key))
            throw std::invalid_argument("config: duplicate key '" + key + "'");
        cfg.kv_[key] = value;
    }
    const auto it = cfg.kv_.find("experiment");
    if (it == cfg.kv_.end()) throw std::invalid_argument("config: missing 'experiment'");
    cfg.experiment_ = it->second;
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

std::string ExperimentConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double ExperimentConfig::get_real(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_real(key, it->second);
}

std::int64_t ExperimentConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_int(key, it->second);
}

std::vector<double> ExperimentConfig::get_real_list(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return {};
    std::vector<double> out;
    for (const auto& part : split_list(it->second)) out.push_back(parse_real(key, part));
    return out;
}

std::vector<std::int64_t> ExperimentConfig::get_int_list(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return {};
    std::vector<std::int64_t> out;
    for (const auto& part : split_list(it->second)) out.push_back(parse_int(key, part));
    return out;
}

// ---------------------------------------------------------------------------
// Experiment registry
// ---------------------------------------------------------------------------

namespace {

struct Axis {
    std::string name;
    std::vector<double> values;
};

using CellParams = std::map<std::string, double>;
using Metrics = std::map<std::string, double>;

struct ExperimentPlan {
    std::vector<Axis> axes;
    std::vector<std::string> fit_metrics;
    int trials = 0;
    std::function<Metrics(const CellParams&, int trial)> run;
};

std::uint64_t trial_stream(std::uint64_t seed, const CellParams& cell, int trial) {
    Digest d;
    d.add(seed);
    for (const auto& [k, v] : cell) d.add(k).add(v);
    d.add(static_cast<std::uint64_t>(trial));
    return d.value();
}

void require_keys(const ExperimentConfig& cfg, const std::vector<std::string>& allowed) {
    for (const auto& [key, value] : cfg.entries()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw std::invalid_argument("config: unknown key '" + key + "' for experiment " +
                                        cfg.experiment());
    }
}

std::vector<std::string> with_common(std::vector<std::string> keys) {
    keys.insert(keys.end(), {"experiment", "trials", "delta", "seed", "constant_c", "output_path"});
    return keys;
}

Axis int_axis(const ExperimentConfig& cfg, const std::string& key,
              const std::vector<double>& fallback) {
    Axis axis;
    axis.name = key;
    const auto list = cfg.get_int_list(key);
    if (list.empty()) {
        axis.values = fallback;
    } else {
        for (auto v : list) axis.values.push_back(static_cast<double>(v));
    }
    if (axis.values.empty())
        throw std::invalid_argument("config: sweep '" + key + "' must be non-empty");
    return axis;
}

ExperimentPlan plan_stub_powerlaw(const ExperimentConfig& cfg) {
    require_keys(cfg, with_common({"exponent", "coeff", "n"}));
    ExperimentPlan plan;
    plan.axes.push_back(int_axis(cfg, "n", {}));
    plan.trials = static_cast<int>(cfg.get_int("trials", 1));
    plan.fit_metrics = {"err"};
    const double exponent = cfg.get_real("exponent", -1.0);
    const double coeff = cfg.get_real("coeff", 1.0);
    plan.run = [exponent, coeff](const CellParams& cell, int) {
        return Metrics{{"err", coeff * std::pow(cell.at("n"), exponent)}};
    };
    return plan;
}

ExperimentPlan plan_mp_vs_erm(const ExperimentConfig& cfg) {
    require_keys(cfg, with_common({"eps", "B", "n", "psi", "r0", "mc_draws"}));
    ExperimentPlan plan;
    plan.axes.push_back(int_axis(cfg, "n", {}));
    plan.trials = static_cast<int>(cfg.get_int("trials", 500));
    plan.fit_metrics = {"cert_mp", "cert_erm"};

    const double eps = cfg.get_real("eps", 0.1);
    const double B = cfg.get_real("B", 1.0);
    const double delta = cfg.get_real("delta", 0.1);
    const double r0 = cfg.get_real("r0", 1e-8);
    const double constant_c = cfg.get_real("constant_c", 1.0);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    const std::string psi_name = cfg.get_string("psi", "parametric:1");
    const int mc_draws = static_cast<int>(cfg.get_int("mc_draws", 512));

    const FiniteLossProblem problem = gen_finite_zero_variance(eps, B, seed);
    const Eigen::VectorXd risks = *problem.population_risks();
    const int optimal = *problem.optimal_index();

    plan.run = [=](const CellParams& cell, int trial) {
        const int n = static_cast<int>(cell.at("n"));
        const std::uint64_t sp = trial_stream(seed, cell, trial);
        const Eigen::MatrixXd primary = problem.sample(sp, n);
        const Eigen::MatrixXd aux = problem.sample(sp ^ 0x5555555555555555ULL, n);

        Surrogate psi = psi_name == "empirical"
                            ? build_psi(primary, B, erm(primary), mc_draws, sp).as_surrogate()
                            : parse_surrogate(psi_name, B, n, constant_c);

        const int pick_erm = erm(primary);
        const Certificate cert_erm = certify_loss_rate(primary, B, psi, delta, r0);
        const MPResult mp = moment_penalized(primary, aux, B, psi, delta, constant_c);

        Metrics m;
        m["cert_erm"] = cert_erm.bound;
        m["cert_mp"] = mp.certificate.bound;
        m["excess_erm"] = risks[pick_erm] - risks[optimal];
        m["excess_mp"] = risks[mp.index] - risks[optimal];
        m["wrong_pick_erm"] = pick_erm == optimal ? 0.0 : 1.0;
        m["wrong_pick_mp"] = mp.index == optimal ? 0.0 : 1.0;
        return m;
    };
    return plan;
}

ExperimentPlan plan_gd_sigmoid(const ExperimentConfig& cfg) {
    require_keys(cfg, with_common({"d", "tau", "delta_M", "noise_sd", "n", "steps", "step_size"}));
    ExperimentPlan plan;
    plan.axes.push_back(int_axis(cfg, "n", {}));
    plan.trials = static_cast<int>(cfg.get_int("trials", 100));
    plan.fit_metrics = {"excess_final"};

    const int d = static_cast<int>(cfg.get_int("d", 5));
    const double tau = cfg.get_real("tau", 1.0);
    const double delta_M = cfg.get_real("delta_M", 0.5);
    const double noise_sd = cfg.get_real("noise_sd", 0.1);
    const int steps = static_cast<int>(cfg.get_int("steps", 200));
    const double step_size = cfg.get_real("step_size", 0.0);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));

    auto model = std::make_shared<SmoothParametricModel>(
        gen_sigmoid_regression(d, tau, delta_M, noise_sd, seed));
    auto eval = std::make_shared<SampleSet>(model->sample(0x6576616cULL, 100000));
    const double loss_star = model->batch_loss_mean(model->theta_star, *eval);

    plan.run = [=](const CellParams& cell, int trial) {
        const int n = static_cast<int>(cell.at("n"));
        const std::uint64_t sp = trial_stream(seed, cell, trial);
        const SampleSet sample = model->sample(sp, n);
        const double init_radius = std::sqrt(model->mu / model->beta) * model->delta_m;
        rng::Substream init = rng::CounterRng(seed, sp).at(0);
        const Eigen::VectorXd theta0 =
            model->theta_star + init.sphere(model->dim, 0.5 * init_radius);
        const GDTrace trace =
            gradient_descent(*model, sample, theta0, steps,
                             step_size > 0.0 ? std::optional<double>(step_size) : std::nullopt,
                             0.1, /*eval_n=*/0);
        Metrics m;
        m["excess_final"] = model->batch_loss_mean(trace.iterates.back(), *eval) - loss_star;
        m["grad_norm_final"] = trace.empirical_grad_norms.back();
        m["param_err_final"] = trace.param_error.back();
        return m;
    };
    return plan;
}

ExperimentPlan plan_em(const ExperimentConfig& cfg, bool mlr) {
    require_keys(cfg, with_common({"d", "sigma", "norm", "n", "steps", "step_size"}));
    ExperimentPlan plan;
    plan.axes.push_back(int_axis(cfg, "n", {}));
    plan.axes.push_back(int_axis(cfg, "d", {}));
    Axis norm_axis;
    norm_axis.name = "norm";
    norm_axis.values = cfg.get_real_list("norm");
    if (norm_axis.values.empty()) norm_axis.values = {3.0};
    plan.axes.push_back(norm_axis);
    plan.trials = static_cast<int>(cfg.get_int("trials", 200));
    plan.fit_metrics = {"param_err_sq"};

    const double sigma = cfg.get_real("sigma", 1.0);
    const int steps = static_cast<int>(cfg.get_int("steps", 50));
    const double step_size = cfg.get_real("step_size", 0.0);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));

    plan.run = [=](const CellParams& cell, int trial) {
        const int n = static_cast<int>(cell.at("n"));
        const int d = static_cast<int>(cell.at("d"));
        const double norm = cell.at("norm");
        Digest cell_id;
        cell_id.add(std::string(mlr ? "mlr" : "gmm")).add(static_cast<std::uint64_t>(d)).add(norm);
        const Eigen::VectorXd theta_star =
            rng::CounterRng(seed, cell_id.value()).at(0).sphere(d, norm);
        EMModel model = mlr ? gen_mlr2(d, sigma, theta_star, seed)
                            : gen_gmm2(d, sigma, theta_star, seed);
        const std::uint64_t sp = trial_stream(seed, cell, trial);
        const Eigen::MatrixXd Z = model.sample(sp, n);
        const Eigen::VectorXd theta0 = em_default_init(model, sp);
        const GDTrace trace = first_order_em(model, Z, theta0, steps,
                                             step_size > 0.0 ? step_size : -1.0);
        Metrics m;
        const double err = trace.param_error.back();
        m["param_err_sq"] = err * err;
        m["grad_norm_final"] = trace.empirical_grad_norms.back();
        return m;
    };
    return plan;
}

ExperimentPlan plan_huber_vs_square(const ExperimentConfig& cfg) {
    require_keys(cfg, with_common({"d", "dof", "scale", "n", "gamma_mult"}));
    ExperimentPlan plan;
    plan.axes.push_back(int_axis(cfg, "n", {}));
    plan.trials = static_cast<int>(cfg.get_int("trials", 500));
    plan.fit_metrics = {"err_square", "err_huber"};

    const int d = static_cast<int>(cfg.get_int("d", 10));
    const double dof = cfg.get_real("dof", 2.5);
    const double scale = cfg.get_real("scale", 1.0);
    const double gamma_mult = cfg.get_real("gamma_mult", 2.0);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));

    auto data = std::make_shared<ConvexCostData>(gen_heavy_tailed_linear(d, dof, scale, seed));
    const double gamma = std::max(gamma_mult * data->xi_l2, 1e-9);

    plan.run = [=](const CellParams& cell, int trial) {
        const int n = static_cast<int>(cell.at("n"));
        const std::uint64_t sp = trial_stream(seed, cell, trial);
        const SampleSet s = data->sample(sp, n);
        const Eigen::VectorXd ols =
            (s.X.transpose() * s.X).ldlt().solve(s.X.transpose() * s.y);
        double gnorm = 0.0;
        const Eigen::VectorXd hub = huber_irls(s, gamma, 200, 1e-8, &gnorm);
        Metrics m;
        m["err_square"] = (ols - data->theta_star).squaredNorm();
        m["err_huber"] = (hub - data->theta_star).squaredNorm();
        m["huber_grad_miss"] = gnorm > 1e-8 ? 1.0 : 0.0;
        return m;
    };
    return plan;
}

ExperimentPlan build_plan(const ExperimentConfig& cfg) {
    const std::string& name = cfg.experiment();
    if (name == "stub-powerlaw") return plan_stub_powerlaw(cfg);
    if (name == "mp-vs-erm") return plan_mp_vs_erm(cfg);
    if (name == "gd-sigmoid") return plan_gd_sigmoid(cfg);
    if (name == "em-gmm") return plan_em(cfg, false);
    if (name == "em-mlr") return plan_em(cfg, true);
    if (name == "huber-vs-square") return plan_huber_vs_square(cfg);
    throw std::invalid_argument("config: unknown experiment '" + name + "'");
}

std::string canonical_echo(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg.entries()) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

}  // namespace

std::vector<std::string> experiment_names() {
    return {"stub-powerlaw", "mp-vs-erm", "gd-sigmoid", "em-gmm", "em-mlr", "huber-vs-square"};
}

ScalingReport run_experiment(const ExperimentConfig& config, int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentPlan plan = build_plan(config);
    if (plan.trials < 1) throw std::invalid_argument("config: trials must be >= 1");

    // Cartesian product of the axes.
    std::vector<CellParams> cells;
    cells.emplace_back();
    for (const auto& axis : plan.axes) {
        std::vector<CellParams> next;
        for (const auto& base : cells) {
            for (double v : axis.values) {
                CellParams p = base;
                p[axis.name] = v;
                next.push_back(std::move(p));
            }
        }
        cells = std::move(next);
    }

    const int total = static_cast<int>(cells.size()) * plan.trials;
    std::vector<Metrics> results(total);
    std::vector<int> failed(total, 0);
    parallel_for(total, threads, [&](int i) {
        const int cell_idx = i / plan.trials;
        const int trial = i % plan.trials;
        try {
            results[i] = plan.run(cells[cell_idx], trial);
        } catch (const std::exception&) {
            failed[i] = 1;
        }
    });

    int total_failures = 0;
    for (int f : failed) total_failures += f;
    if (total_failures * 100 > total)
        throw std::runtime_error("run_experiment: more than 1% of trials failed (" +
                                 std::to_string(total_failures) + "/" + std::to_string(total) + ")");

    // Deterministic aggregation: cells in declared order, metrics sorted.
    ScalingReport report;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::map<std::string, std::vector<double>> by_metric;
        int failures = 0;
        for (int t = 0; t < plan.trials; ++t) {
            const int i = static_cast<int>(c) * plan.trials + t;
            if (failed[i]) { ++failures; continue; }
            for (const auto& [k, v] : results[i]) by_metric[k].push_back(v);
        }
        for (auto& [metric, values] : by_metric) {
            CellStats stats;
            stats.params = cells[c];
            stats.metric = metric;
            stats.trials = static_cast<int>(values.size());
            stats.failures = failures;
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= values.size();
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            var = values.size() > 1 ? var / (values.size() - 1) : 0.0;
            std::sort(values.begin(), values.end());
            stats.mean = mean;
            stats.se = std::sqrt(var / values.size());
            stats.median = quantile_sorted(values, 0.5);
            stats.p05 = quantile_sorted(values, 0.05);
            stats.p95 = quantile_sorted(values, 0.95);
            report.cells.push_back(std::move(stats));
        }
    }

    // Slope fits: for each swept axis with >= 3 values, per metric, per
    // combination of the remaining axes.
    for (const auto& axis : plan.axes) {
        if (axis.values.size() < 3) continue;
        for (const auto& metric : plan.fit_metrics) {
            // Collect groups: other-axis assignments.
            std::map<std::string, std::vector<std::pair<double, double>>> groups;
            for (const auto& cell : report.cells) {
                if (cell.metric != metric) continue;
                std::string group;
                for (const auto& other : plan.axes) {
                    if (other.name == axis.name) continue;
                    if (!group.empty()) group += ",";
                    group += other.name + "=" + format_double(cell.params.at(other.name));
                }
                groups[group].emplace_back(cell.params.at(axis.name), cell.median);
            }
            for (auto& [group, points] : groups) {
                std::sort(points.begin(), points.end());
                std::vector<double> xs, ys;
                bool positive = true;
                for (const auto& [x, y] : points) {
                    xs.push_back(x);
                    ys.push_back(y);
                    positive = positive && y > 0.0;
                }
                if (xs.size() < 3 || !positive) continue;
                FitResult fit;
                fit.axis = axis.name;
                fit.metric = metric;
                fit.group = group;
                fit.line = fit_loglog(xs, ys);
                report.fits.push_back(std::move(fit));
            }
        }
    }

    report.config_echo = canonical_echo(config);
    report.build_id = LOCBOUND_BUILD_ID;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::string ScalingReport::to_csv() const {
    // Stable column set: union of axis names in first-seen order.
    std::vector<std::string> axis_names;
    for (const auto& cell : cells)
        for (const auto& [k, v] : cell.params) {
            (void)v;
            if (std::find(axis_names.begin(), axis_names.end(), k) == axis_names.end())
                axis_names.push_back(k);
        }
    std::string out;
    for (const auto& name : axis_names) out += name + ",";
    out += "metric,median,mean,p05,p95,se,trials,failures\n";
    for (const auto& cell : cells) {
        for (const auto& name : axis_names) out += format_double(cell.params.at(name)) + ",";
        out += cell.metric + "," + format_double(cell.median) + "," + format_double(cell.mean) +
               "," + format_double(cell.p05) + "," + format_double(cell.p95) + "," +
               format_double(cell.se) + "," + std::to_string(cell.trials) + "," +
               std::to_string(cell.failures) + "\n";
    }
    return out;
}

std::string ScalingReport::to_json() const {
    // Assembled by hand to keep the cell/fit ordering identical to the CSV.
    std::ostringstream out;
    out << "{\n  \"cells\": [\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        out << "    {\"params\": {";
        bool first = true;
        for (const auto& [k, v] : c.params) {
            if (!first) out << ", ";
            first = false;
            out << "\"" << k << "\": " << format_double(v);
        }
        out << "}, \"metric\": \"" << c.metric << "\", \"median\": " << format_double(c.median)
            << ", \"mean\": " << format_double(c.mean) << ", \"p05\": " << format_double(c.p05)
            << ", \"p95\": " << format_double(c.p95) << ", \"se\": " << format_double(c.se)
            << ", \"trials\": " << c.trials << ", \"failures\": " << c.failures << "}";
        out << (i + 1 < cells.size() ? ",\n" : "\n");
    }
    out << "  ],\n  \"fits\": [\n";
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto& f = fits[i];
        out << "    {\"axis\": \"" << f.axis << "\", \"metric\": \"" << f.metric
            << "\", \"group\": \"" << f.group << "\", \"slope\": " << format_double(f.line.slope)
            << ", \"intercept\": " << format_double(f.line.intercept)
            << ", \"r2\": " << format_double(f.line.r2) << "}";
        out << (i + 1 < fits.size() ? ",\n" : "\n");
    }
    out << "  ],\n  \"metadata\": {\n    \"build_id\": \"" << build_id
        << "\",\n    \"wall_seconds\": " << format_double(wall_seconds)
        << ",\n    \"config\": [\n";
    std::stringstream echo(config_echo);
    std::string line;
    bool first_line = true;
    while (std::getline(echo, line)) {
        if (!first_line) out << ",\n";
        first_line = false;
        out << "      \"" << line << "\"";
    }
    out << "\n    ]\n  }\n}\n";
    return out.str();
}

double ScalingReport::cell_median(const std::string& metric,
                                  const std::map<std::string, double>& params) const {
    for (const auto& cell : cells) {
        if (cell.metric != metric) continue;
        bool match = true;
        for (const auto& [k, v] : params) {
            const auto it = cell.params.find(k);
            if (it == cell.params.end() || std::abs(it->second - v) > 1e-12) {
                match = false;
                break;
            }
        }
        if (match) return cell.median;
    }
    throw std::invalid_argument("cell_median: no cell for metric " + metric);
}

const FitResult& ScalingReport::fit_for(const std::string& metric, const std::string& axis,
                                        const std::string& group) const {
    for (const auto& fit : fits)
        if (fit.metric == metric && fit.axis == axis && (group.empty() || fit.group == group))
            return fit;
    throw std::invalid_argument("fit_for: no fit for metric " + metric + " along " + axis);
}

}  // namespace locbound
