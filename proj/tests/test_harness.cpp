#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "locbound/harness.hpp"

using namespace locbound;

TEST_CASE("fit_loglog exact power laws") {
    std::vector<double> xs = {10.0, 100.0, 1000.0, 10000.0};
    std::vector<double> inv, half, flat;
    for (double x : xs) {
        inv.push_back(1.0 / x);
        half.push_back(3.0 * std::pow(x, -0.5));
        flat.push_back(2.5);
    }
    const FitLine f1 = fit_loglog(xs, inv);
    CHECK(f1.slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(f1.r2 == doctest::Approx(1.0).epsilon(1e-12));

    const FitLine f2 = fit_loglog(xs, half);
    CHECK(f2.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(f2.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));

    const FitLine f3 = fit_loglog(xs, flat);
    CHECK(f3.slope == 0.0);
    CHECK(f3.r2 == 0.0);

    CHECK_THROWS_AS(fit_loglog({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_loglog({1.0, 2.0, 3.0}, {1.0, -2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("quantile conventions") {
    std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
    CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 1.0) == 4.0);
    CHECK(quantile_sorted({7.0}, 0.95) == 7.0);
}

TEST_CASE("config parsing") {
    const auto cfg = ExperimentConfig::from_text(
        "# comment\n"
        "experiment = stub-powerlaw\n"
        "n = 10, 100, 1000\n"
        "exponent = -1\n"
        "trials = 2\n");
    CHECK(cfg.experiment() == "stub-powerlaw");
    CHECK(cfg.get_int_list("n") == std::vector<std::int64_t>{10, 100, 1000});
    CHECK(cfg.get_real("exponent", 0.0) == -1.0);
    CHECK(cfg.get_int("seed", 9) == 9);  // default fallback

    CHECK_THROWS_AS(ExperimentConfig::from_text("n = 5\n"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_text("experiment = x\nfoo\n"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_text("experiment = x\na = 1\na = 2\n"),
                    std::invalid_argument);
}

TEST_CASE("unknown keys and unknown experiments are rejected") {
    const auto bad_key = ExperimentConfig::from_text(
        "experiment = stub-powerlaw\nn = 1, 2, 3\nbogus_knob = 7\n");
    CHECK_THROWS_AS(run_experiment(bad_key, 1), std::invalid_argument);
    const auto bad_exp = ExperimentConfig::from_text("experiment = nope\n");
    CHECK_THROWS_AS(run_experiment(bad_exp, 1), std::invalid_argument);
    const auto empty_sweep = ExperimentConfig::from_text("experiment = stub-powerlaw\n");
    CHECK_THROWS_AS(run_experiment(empty_sweep, 1), std::invalid_argument);
}

TEST_CASE("stub power law recovers the exact slope") {
    const auto cfg = ExperimentConfig::from_text(
        "experiment = stub-powerlaw\n"
        "exponent = -1\n"
        "coeff = 2\n"
        "n = 16, 64, 256, 1024\n"
        "trials = 3\n");
    const ScalingReport report = run_experiment(cfg, 1);
    const FitResult& fit = report.fit_for("err", "n");
    CHECK(fit.line.slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(fit.line.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.cell_median("err", {{"n", 64.0}}) == doctest::Approx(2.0 / 64.0));
    CHECK(report.cells.front().trials == 3);
}

TEST_CASE("reports are byte-identical across reruns and thread counts") {
    const char* text =
        "experiment = huber-vs-square\n"
        "d = 3\n"
        "dof = 2.5\n"
        "n = 100\n"
        "trials = 12\n"
        "seed = 5\n";
    const auto cfg = ExperimentConfig::from_text(text);
    const std::string csv1 = run_experiment(cfg, 1).to_csv();
    const std::string csv2 = run_experiment(cfg, 2).to_csv();
    const std::string csv3 = run_experiment(ExperimentConfig::from_text(text), 1).to_csv();
    CHECK(csv1 == csv2);
    CHECK(csv1 == csv3);
    CHECK(csv1.find("err_square") != std::string::npos);
    // Header row is mandatory and LF-terminated.
    CHECK(csv1.substr(csv1.find('\n') + 1).size() > 0);
    CHECK(csv1.find('\r') == std::string::npos);
}

TEST_CASE("json report embeds the resolved config") {
    const auto cfg = ExperimentConfig::from_text(
        "experiment = stub-powerlaw\nexponent = -0.5\nn = 8, 16, 32\ntrials = 1\n");
    const ScalingReport report = run_experiment(cfg, 1);
    const std::string json = report.to_json();
    CHECK(json.find("\"experiment = stub-powerlaw\"") != std::string::npos);
    CHECK(json.find("\"build_id\"") != std::string::npos);
    CHECK(json.find("\"slope\"") != std::string::npos);
}

TEST_CASE("mp-vs-erm experiment produces both certificates") {
    const auto cfg = ExperimentConfig::from_text(
        "experiment = mp-vs-erm\n"
        "eps = 0.1\n"
        "B = 1\n"
        "n = 64, 128\n"
        "trials = 8\n"
        "seed = 3\n");
    const ScalingReport report = run_experiment(cfg, 2);
    CHECK(report.cell_median("cert_mp", {{"n", 64.0}}) > 0.0);
    CHECK(report.cell_median("cert_erm", {{"n", 64.0}}) >
          report.cell_median("cert_mp", {{"n", 64.0}}));
    CHECK(report.cell_median("excess_mp", {{"n", 128.0}}) == 0.0);
}

TEST_CASE("em experiment wiring") {
    const auto cfg = ExperimentConfig::from_text(
        "experiment = em-gmm\n"
        "d = 2\n"
        "sigma = 1\n"
        "norm = 3\n"
        "n = 200\n"
        "steps = 20\n"
        "trials = 5\n"
        "seed = 2\n");
    const ScalingReport report = run_experiment(cfg, 2);
    const double med = report.cell_median("param_err_sq", {{"n", 200.0}, {"d", 2.0}, {"norm", 3.0}});
    CHECK(med > 0.0);
    CHECK(med < 1.0);
}
