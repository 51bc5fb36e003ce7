// Acceptance suite: one pass/fail line per criterion, each run at its stated
// tolerance and runtime limit.  Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "em_oracles.hpp"
#include "locbound/classes.hpp"
#include "locbound/convexcost.hpp"
#include "locbound/em.hpp"
#include "locbound/estimators.hpp"
#include "locbound/gradflow.hpp"
#include "locbound/harness.hpp"
#include "locbound/numkit.hpp"
#include "locbound/rademacher.hpp"

using namespace locbound;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
};

#define REQUIRE_NEAR(out, value, target, tol, label)                                   \
    do {                                                                               \
        const double v_ = (value), t_ = (target);                                      \
        if (!(std::abs(v_ - t_) <= (tol))) {                                           \
            out.pass = false;                                                          \
            out.detail << " [" << label << ": " << v_ << " vs " << t_ << "]";          \
        }                                                                              \
    } while (0)

#define REQUIRE_TRUE(out, cond, label)                                                 \
    do {                                                                               \
        if (!(cond)) {                                                                 \
            out.pass = false;                                                          \
            out.detail << " [" << label << "]";                                        \
        }                                                                              \
    } while (0)

Outcome criterion1_fixed_point() {
    Outcome out;
    for (double c : {1e-3, 1e-2, 1e-1, 1.0}) {
        const auto res = fixed_point([c](double r) { return c * std::sqrt(r); }, 1.0, 1e-12);
        REQUIRE_NEAR(out, res.r_star, c * c, 1e-9, "fixed_point(c sqrt(r))");
    }
    const double rho = 0.5, B = 1.0, delta = 0.1;
    const std::int64_t n = 10000;
    const Surrogate psi = Surrogate::nonparametric(rho, n, 1.0, 4.0 * B * B);
    const double closed = std::pow(6.0 * B, 2.0 / (1.0 + rho)) *
                          std::pow(8.0, (1.0 - rho) / (1.0 + rho)) *
                          std::pow(static_cast<double>(n), -1.0 / (1.0 + rho));
    const auto fp = fixed_point([&](double r) { return 6.0 * B * psi(8.0 * r, delta); },
                                4.0 * B * B, 1e-13);
    REQUIRE_TRUE(out, std::abs(fp.r_star - closed) / closed <= 1e-6, "nonparametric closed form");
    out.detail << " r*=" << fp.r_star;
    return out;
}

Outcome criterion2_peeling() {
    Outcome out;
    const FiniteLossProblem problem = gen_finite_random(16, 24, 1.0, 2026);
    const int n = 200;
    const Eigen::MatrixXd build_sample = problem.sample(0xb51d, n);
    const Surrogate psi =
        build_psi(build_sample, 1.0, *problem.optimal_index(), 2000, 2026).as_surrogate();
    const PeelingReport rep = validate_peeling(problem, psi, n, 0.1, 1e-6, 2000, 2026);
    REQUIRE_TRUE(out, rep.violation_rate <= 0.1 + 3.0 * rep.se, "violation rate vs delta");
    out.detail << " rate=" << rep.violation_rate << " se=" << rep.se;
    return out;
}

Outcome criterion3_rademacher_oracle() {
    Outcome out;
    rng::CounterRng rng(303, 0);
    int worst_problem = -1;
    double worst_gap = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        rng::Substream sub = rng.at(trial);
        const int n = 6 + static_cast<int>(sub.next_u64() % 7);       // 6..12
        const int H = 2 + static_cast<int>(sub.next_u64() % 63);      // 2..64
        Eigen::MatrixXd losses(n, H);
        for (int i = 0; i < losses.size(); ++i) losses.data()[i] = sub.uniform(-1.0, 1.0);
        const double r = 0.25 * std::pow(4.0, sub.uniform01());
        const double exact = local_rademacher(losses, 0, r, 0, 1);
        const auto mc = local_rademacher_estimate(losses, 0, r, 6000, 9000 + trial);
        const double gap = std::abs(mc.value - exact) - 3.0 * mc.se;
        if (gap > worst_gap) {
            worst_gap = gap;
            worst_problem = trial;
        }
        REQUIRE_TRUE(out, std::abs(mc.value - exact) <= 3.0 * mc.se + 1e-12,
                     "MC vs exact enumeration");
    }
    if (worst_problem >= 0) out.detail << " worst trial " << worst_problem;
    return out;
}

Outcome criterion4_gap_ratio() {
    Outcome out;
    REQUIRE_TRUE(out, suboptimality_ratio(1.0, 1.0, 10000, 1.0) == 10.0, "ratio(1,1,1e4,1) == 10");
    for (double rho : {0.3, 0.5, 0.8}) {
        const double B = 1.0;
        const std::int64_t n = 10000;
        const double r_star = std::pow(B, 2.0 / (1.0 + rho)) *
                              std::pow(static_cast<double>(n), -1.0 / (1.0 + rho));
        for (int k = 0; k < 20; ++k) {
            const double V = std::pow(10.0, -6.0 + 7.0 * k / 19.0);
            const double previous =
                std::max(std::sqrt(V) * std::pow(B, -rho / (1.0 + rho)) *
                             std::pow(static_cast<double>(n), -1.0 / (2.0 + 2.0 * rho)),
                         r_star / B);
            const double ours =
                std::max(std::pow(V, 0.5 * (1.0 - rho)) / std::sqrt(static_cast<double>(n)),
                         r_star / B);
            const double expected = suboptimality_ratio(V, B, n, rho);
            REQUIRE_TRUE(out, std::abs(previous / ours / expected - 1.0) <= 0.01,
                         "two-route ratio within 1%");
        }
    }
    return out;
}

Outcome criterion5_mp_vs_erm() {
    Outcome out;
    const auto cfg = ExperimentConfig::from_text(
        "experiment = mp-vs-erm\n"
        "eps = 0.1\n"
        "B = 1\n"
        "n = 256, 1024, 4096\n"
        "trials = 500\n"
        "delta = 0.1\n"
        "seed = 11\n"
        "psi = parametric:1\n"
        "r0 = 1e-8\n");
    const ScalingReport report = run_experiment(cfg);
    const double slope_mp = report.fit_for("cert_mp", "n").line.slope;
    const double slope_erm = report.fit_for("cert_erm", "n").line.slope;
    REQUIRE_TRUE(out, slope_mp <= -0.9, "MP certified-rate slope <= -0.9");
    REQUIRE_TRUE(out, slope_erm >= -0.6, "ERM certified-rate slope >= -0.6");
    out.detail << " slope_mp=" << slope_mp << " slope_erm=" << slope_erm;
    return out;
}

Outcome criterion6_gd() {
    Outcome out;
    // One-step exactness on the quadratic.
    const SmoothParametricModel quad = gen_quadratic_mean(4, 1.0, 606);
    const SampleSet qs = quad.sample(1, 200);
    Eigen::VectorXd theta0 = quad.theta_star;
    theta0[0] += 0.7;
    const GDTrace one = gradient_descent(quad, qs, theta0, 1, 1.0, 0.1, 0);
    Eigen::VectorXd mean(4);
    for (int j = 0; j < 4; ++j) mean[j] = qs.X.col(j).sum() / qs.size();
    REQUIRE_TRUE(out, (one.iterates.back() - mean).norm() <= 1e-13 * (1.0 + mean.norm()),
                 "one-step quadratic exactness");

    // Noiseless realizable sigmoid hits 1e-10 excess within 200 steps.
    const SmoothParametricModel clean = gen_sigmoid_regression(2, 1.0, 0.5, 0.0, 607);
    const SampleSet cs = clean.sample(1, 512);
    rng::Substream init = rng::CounterRng(607, 99).at(0);
    const double radius = std::sqrt(clean.mu / clean.beta) * clean.delta_m;
    const Eigen::VectorXd c0 = clean.theta_star + init.sphere(2, 0.5 * radius);
    const GDTrace trace = gradient_descent(clean, cs, c0, 200, std::nullopt, 0.1, 100000);
    REQUIRE_TRUE(out, trace.population_excess.back() <= 1e-10, "noiseless excess <= 1e-10");
    out.detail << " clean_excess=" << trace.population_excess.back();

    // Noisy plateau scaling.
    const auto cfg = ExperimentConfig::from_text(
        "experiment = gd-sigmoid\n"
        "d = 5\n"
        "tau = 1\n"
        "delta_M = 0.5\n"
        "noise_sd = 0.1\n"
        "n = 1024, 4096, 16384\n"
        "steps = 200\n"
        "trials = 100\n"
        "seed = 21\n");
    const ScalingReport report = run_experiment(cfg);
    const double slope = report.fit_for("excess_final", "n").line.slope;
    REQUIRE_NEAR(out, slope, -1.0, 0.2, "plateau slope");
    out.detail << " plateau_slope=" << slope;
    return out;
}

Outcome criterion7_em() {
    Outcome out;
    const struct {
        const char* name;
        double slope_tol;
    } models[] = {{"em-gmm", 0.15}, {"em-mlr", 0.2}};
    for (const auto& model : models) {
        std::string text = std::string("experiment = ") + model.name + "\n" +
                           "d = 2, 8\n"
                           "sigma = 1\n"
                           "norm = 3, 10\n"
                           "n = 500, 2000, 8000\n"
                           "steps = 50\n"
                           "trials = 200\n"
                           "seed = 77\n";
        const ScalingReport report = run_experiment(ExperimentConfig::from_text(text));
        for (const auto& fit : report.fits) {
            if (fit.metric != "param_err_sq" || fit.axis != "n") continue;
            REQUIRE_NEAR(out, fit.line.slope, -1.0, model.slope_tol,
                         std::string(model.name) + " slope " + fit.group);
        }
        // Norm-independence and d-scaling, matched over the remaining axes
        // (geometric means across cells).
        double norm_ratio = 1.0, d_ratio = 1.0;
        int count = 0;
        for (double n : {500.0, 2000.0, 8000.0}) {
            for (double d : {2.0, 8.0}) {
                const double lo = report.cell_median("param_err_sq",
                                                     {{"n", n}, {"d", d}, {"norm", 3.0}});
                const double hi = report.cell_median("param_err_sq",
                                                     {{"n", n}, {"d", d}, {"norm", 10.0}});
                norm_ratio *= hi / lo;
            }
            for (double nr : {3.0, 10.0}) {
                const double lo = report.cell_median("param_err_sq",
                                                     {{"n", n}, {"d", 2.0}, {"norm", nr}});
                const double hi = report.cell_median("param_err_sq",
                                                     {{"n", n}, {"d", 8.0}, {"norm", nr}});
                d_ratio *= hi / lo;
            }
            ++count;
        }
        norm_ratio = std::pow(norm_ratio, 1.0 / (2.0 * count));
        d_ratio = std::pow(d_ratio, 1.0 / (2.0 * count));
        REQUIRE_TRUE(out, norm_ratio >= 0.5 && norm_ratio <= 2.0,
                     std::string(model.name) + " norm ratio in [0.5, 2]");
        REQUIRE_TRUE(out, d_ratio >= 2.5 && d_ratio <= 6.0,
                     std::string(model.name) + " d ratio in [2.5, 6]");
        out.detail << " " << model.name << ": norm_ratio=" << norm_ratio
                   << " d_ratio=" << d_ratio;
    }
    return out;
}

Outcome criterion8_em_identity() {
    Outcome out;
    Eigen::VectorXd theta_star(3);
    theta_star << 2.0, -1.0, 1.5;
    const EMModel gmm = gen_gmm2(3, 0.9, theta_star, 801);
    const EMModel mlr = gen_mlr2(3, 0.7, theta_star, 802);
    const Eigen::MatrixXd Zg = gmm.sample(1, 1000);
    const Eigen::MatrixXd Zm = mlr.sample(1, 1000);
    rng::CounterRng rng(803, 0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        rng::Substream sub = rng.at(t);
        const Eigen::VectorXd theta = theta_star + sub.normal_vector(3);
        const Eigen::VectorXd zg = Zg.row(t).transpose();
        const Eigen::VectorXd zm = Zm.row(t).transpose();
        worst = std::max(worst, (gmm.surrogate_grad(theta, theta, zg) -
                                 em_oracles::complex_step_grad_gmm(theta, zg, 0.9)).norm());
        worst = std::max(worst, (mlr.surrogate_grad(theta, theta, zm) -
                                 em_oracles::complex_step_grad_mlr(theta, zm, 0.7)).norm());
    }
    REQUIRE_TRUE(out, worst <= 1e-8, "max identity deviation <= 1e-8");
    out.detail << " max_dev=" << worst;
    return out;
}

Outcome criterion9_catalogue() {
    Outcome out;
    REQUIRE_TRUE(out, alpha(CostSpec::square(), 0.0) == 0.5 &&
                          alpha(CostSpec::square(), 7.0) == 0.5,
                 "square alpha == 1/2");
    const CostSpec huber = CostSpec::huber(1.0);
    REQUIRE_TRUE(out, alpha(huber, 0.5) == 0.5 && alpha(huber, 1.0) == 0.5 &&
                          alpha(huber, 1.0 + 1e-12) == 0.0,
                 "huber alpha 1/2 then 0 across gamma");
    const CostSpec logistic = CostSpec::logistic();
    for (double v : {0.0, 1.0, 5.0}) {
        const double e = std::exp(v + 1.0);
        REQUIRE_NEAR(out, alpha(logistic, v), e / ((e + 1.0) * (e + 1.0)), 1e-12,
                     "logistic alpha formula");
    }
    // Huber C1 seam: value and derivative continuity at |u| = gamma.
    const double gamma = 0.8, y = -0.3;
    const CostSpec hu = CostSpec::huber(gamma);
    for (double sign : {-1.0, 1.0}) {
        const double at = y + sign * gamma;
        REQUIRE_NEAR(out, hu.value(at, y), 0.5 * gamma * gamma, 1e-12, "huber seam value");
        REQUIRE_NEAR(out, hu.deriv(at, y), sign * gamma, 1e-12, "huber seam derivative");
        const double h = 1e-7;
        const double slope = (hu.value(at + h, y) - hu.value(at - h, y)) / (2.0 * h);
        REQUIRE_NEAR(out, slope, sign * gamma, 1e-5, "huber seam slope (two-sided)");
    }
    return out;
}

Outcome criterion10_huber() {
    Outcome out;
    const auto heavy = huber_vs_square_experiment(10, 2.5, {500}, 500, 42);
    const double p95_square = heavy[0].p95_err;
    const double p95_huber = heavy[1].p95_err;
    REQUIRE_TRUE(out, p95_square >= 2.0 * p95_huber, "heavy-tail p95 square >= 2x huber");
    out.detail << " p95_square=" << p95_square << " p95_huber=" << p95_huber;

    const auto gauss = huber_vs_square_experiment(
        10, std::numeric_limits<double>::infinity(), {500}, 500, 1002);
    const double med_ratio = gauss[0].median_err / gauss[1].median_err;
    REQUIRE_TRUE(out, med_ratio >= 0.8 && med_ratio <= 1.2, "gaussian medians within 20%");
    out.detail << " gaussian_median_ratio=" << med_ratio;
    return out;
}

Outcome criterion11_determinism() {
    Outcome out;
    const char* text =
        "experiment = mp-vs-erm\n"
        "eps = 0.1\n"
        "B = 1\n"
        "n = 64, 256\n"
        "trials = 40\n"
        "seed = 5\n"
        "psi = parametric:1\n";
    const std::string csv_1thread = run_experiment(ExperimentConfig::from_text(text), 1).to_csv();
    const std::string csv_2thread = run_experiment(ExperimentConfig::from_text(text), 2).to_csv();
    const std::string csv_rerun = run_experiment(ExperimentConfig::from_text(text), 4).to_csv();
    REQUIRE_TRUE(out, csv_1thread == csv_2thread, "1 vs 2 threads byte-identical");
    REQUIRE_TRUE(out, csv_1thread == csv_rerun, "rerun byte-identical");

    const char* em_text =
        "experiment = em-gmm\n"
        "d = 2\n"
        "sigma = 1\n"
        "norm = 3\n"
        "n = 200\n"
        "steps = 10\n"
        "trials = 16\n"
        "seed = 9\n";
    const std::string em1 = run_experiment(ExperimentConfig::from_text(em_text), 1).to_csv();
    const std::string em2 = run_experiment(ExperimentConfig::from_text(em_text), 2).to_csv();
    REQUIRE_TRUE(out, em1 == em2, "em experiment byte-identical across thread counts");
    return out;
}

struct Criterion {
    int id;
    const char* name;
    double runtime_limit_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    const std::vector<Criterion> criteria = {
        {1, "fixed-point exactness", 1.0, criterion1_fixed_point},
        {2, "peeling validity", 120.0, criterion2_peeling},
        {3, "rademacher oracle equivalence", 60.0, criterion3_rademacher_oracle},
        {4, "gap ratio (two-route)", 10.0, criterion4_gap_ratio},
        {5, "mp-vs-erm certified-rate separation", 300.0, criterion5_mp_vs_erm},
        {6, "gradient descent under PL", 300.0, criterion6_gd},
        {7, "em norm-independence scaling", 600.0, criterion7_em},
        {8, "em self-consistency identity", 10.0, criterion8_em_identity},
        {9, "convex-cost catalogue", 10.0, criterion9_catalogue},
        {10, "huber vs square heavy tails", 300.0, criterion10_huber},
        {11, "determinism across reruns and threads", 300.0, criterion11_determinism},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        if (only > 0 && criterion.id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail << " [exception: " << e.what() << "]";
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (elapsed > criterion.runtime_limit_s) {
            outcome.pass = false;
            outcome.detail << " [runtime " << elapsed << "s over limit "
                           << criterion.runtime_limit_s << "s]";
        }
        if (!outcome.pass) ++failures;
        std::printf("%s criterion %d: %s (%.1fs)%s\n", outcome.pass ? "PASS" : "FAIL",
                    criterion.id, criterion.name, elapsed, outcome.detail.str().c_str());
        std::fflush(stdout);
    }
    return failures;
}
