// Command-line front end: localized generalization-bound calculators and the
// Monte Carlo experiment harness.  Exit codes: 0 success, 2 validation error,
// 3 numeric failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "locbound/classes.hpp"
#include "locbound/convexcost.hpp"
#include "locbound/em.hpp"
#include "locbound/estimators.hpp"
#include "locbound/gradflow.hpp"
#include "locbound/harness.hpp"
#include "locbound/numkit.hpp"
#include "locbound/rademacher.hpp"

namespace {

using namespace locbound;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file " + path);
    out << text;
}

struct CsvMatrix {
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

CsvMatrix read_loss_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty CSV " + path);
    CsvMatrix m;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) m.header.push_back(cell);
    }
    if (m.header.empty()) throw std::invalid_argument("CSV header row is mandatory");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != m.header.size())
            throw std::invalid_argument("CSV row width mismatch in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("CSV has no data rows");
    m.values.resize(static_cast<int>(rows.size()), static_cast<int>(m.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m.values(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    return m;
}

std::string trace_csv(const GDTrace& trace) {
    std::string out = "iteration,grad_norm,excess_risk,param_error\n";
    for (std::size_t t = 0; t < trace.iterates.size(); ++t) {
        out += std::to_string(t) + "," + num(trace.empirical_grad_norms[t]) + ",";
        out += t < trace.population_excess.size() ? num(trace.population_excess[t]) : "nan";
        out += ",";
        out += t < trace.param_error.size() ? num(trace.param_error[t]) : "nan";
        out += "\n";
    }
    return out;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"locbound: problem-dependent generalization bounds and experiments"};
    app.require_subcommand(1);

    // fixed-point ------------------------------------------------------------
    auto* fp_cmd = app.add_subcommand("fixed-point", "largest r with r <= phi(r)");
    std::string fp_kind = "sqrt";
    double fp_a = 1.0, fp_domain = 1.0, fp_tol = 1e-12;
    double fp_rho = 0.5, fp_B = 1.0, fp_delta = 0.1;
    std::int64_t fp_n = 10000;
    fp_cmd->add_option("--kind", fp_kind, "sqrt | const | linear | erm-nonparametric")->capture_default_str();
    fp_cmd->add_option("--a", fp_a, "coefficient for sqrt/const/linear phi")->capture_default_str();
    fp_cmd->add_option("--domain-hi", fp_domain)->capture_default_str();
    fp_cmd->add_option("--tol", fp_tol)->capture_default_str();
    fp_cmd->add_option("--rho", fp_rho)->capture_default_str();
    fp_cmd->add_option("--B", fp_B)->capture_default_str();
    fp_cmd->add_option("--n", fp_n)->capture_default_str();
    fp_cmd->add_option("--delta", fp_delta)->capture_default_str();

    // dudley -----------------------------------------------------------------
    auto* dud_cmd = app.add_subcommand("dudley", "entropy integral bound");
    std::string dud_entropy = "const:2.772588722239781";
    double dud_r = 1.0;
    std::int64_t dud_n = 10000;
    dud_cmd->add_option("--entropy", dud_entropy, "const:V or log:D (D*log(1/eps))")->capture_default_str();
    dud_cmd->add_option("--r", dud_r)->capture_default_str();
    dud_cmd->add_option("--n", dud_n)->capture_default_str();

    // ratio ------------------------------------------------------------------
    auto* ratio_cmd = app.add_subcommand("ratio", "sub-optimality ratio between rates");
    double ra_V = 1.0, ra_B = 1.0, ra_rho = 1.0;
    std::int64_t ra_n = 10000;
    ratio_cmd->add_option("--V", ra_V)->required();
    ratio_cmd->add_option("--B", ra_B)->capture_default_str();
    ratio_cmd->add_option("--n", ra_n)->required();
    ratio_cmd->add_option("--rho", ra_rho)->required();

    // validate-peeling ---------------------------------------------------------
    auto* peel_cmd = app.add_subcommand("validate-peeling", "Monte Carlo peeling check");
    int pe_H = 16, pe_outcomes = 8, pe_n = 200, pe_trials = 2000, pe_mc = 2000, pe_psi_n = 0;
    double pe_B = 1.0, pe_delta = 0.1, pe_r0 = 1e-6;
    std::uint64_t pe_seed = 1;
    std::string pe_psi = "empirical";
    peel_cmd->add_option("--hypotheses", pe_H)->capture_default_str();
    peel_cmd->add_option("--outcomes", pe_outcomes)->capture_default_str();
    peel_cmd->add_option("--n", pe_n)->capture_default_str();
    peel_cmd->add_option("--B", pe_B)->capture_default_str();
    peel_cmd->add_option("--delta", pe_delta)->capture_default_str();
    peel_cmd->add_option("--r0", pe_r0)->capture_default_str();
    peel_cmd->add_option("--trials", pe_trials)->capture_default_str();
    peel_cmd->add_option("--seed", pe_seed)->capture_default_str();
    peel_cmd->add_option("--psi", pe_psi, "empirical | nonparametric:R | vc:D | parametric:D")->capture_default_str();
    peel_cmd->add_option("--mc-draws", pe_mc)->capture_default_str();
    peel_cmd->add_option("--psi-n", pe_psi_n, "sample size psi is built on (default n)")->capture_default_str();

    // certify ------------------------------------------------------------------
    auto* cert_cmd = app.add_subcommand("certify", "certificates from a CSV loss matrix");
    std::string ce_input, ce_split = "first-half-aux", ce_psi = "empirical", ce_out;
    double ce_delta = 0.1, ce_r0 = 1e-8, ce_B = 0.0, ce_constant = 1.0;
    std::uint64_t ce_seed = 1;
    int ce_mc = 2000;
    cert_cmd->add_option("--input", ce_input, "CSV, rows samples, columns hypotheses")->required();
    cert_cmd->add_option("--delta", ce_delta)->capture_default_str();
    cert_cmd->add_option("--split", ce_split, "first-half-aux | seeded-random")->capture_default_str();
    cert_cmd->add_option("--psi", ce_psi)->capture_default_str();
    cert_cmd->add_option("--r0", ce_r0)->capture_default_str();
    cert_cmd->add_option("--B", ce_B, "loss bound (default max |loss|)")->capture_default_str();
    cert_cmd->add_option("--seed", ce_seed)->capture_default_str();
    cert_cmd->add_option("--mc-draws", ce_mc)->capture_default_str();
    cert_cmd->add_option("--constant-c", ce_constant)->capture_default_str();
    cert_cmd->add_option("--out", ce_out)->capture_default_str();

    // gd-run ---------------------------------------------------------------------
    auto* gd_cmd = app.add_subcommand("gd-run", "gradient descent trace (CSV)");
    std::string gd_model = "sigmoid", gd_out;
    int gd_d = 5, gd_n = 1024, gd_steps = 200;
    double gd_tau = 1.0, gd_delta_M = 0.5, gd_noise = 0.1, gd_sigma = 1.0, gd_step = 0.0,
           gd_delta = 0.1;
    std::uint64_t gd_seed = 1;
    gd_cmd->add_option("--model", gd_model, "sigmoid | quadratic | linear")->capture_default_str();
    gd_cmd->add_option("--d", gd_d)->capture_default_str();
    gd_cmd->add_option("--n", gd_n)->capture_default_str();
    gd_cmd->add_option("--steps", gd_steps)->capture_default_str();
    gd_cmd->add_option("--tau", gd_tau)->capture_default_str();
    gd_cmd->add_option("--delta-M", gd_delta_M)->capture_default_str();
    gd_cmd->add_option("--noise-sd", gd_noise)->capture_default_str();
    gd_cmd->add_option("--sigma", gd_sigma)->capture_default_str();
    gd_cmd->add_option("--step", gd_step, "step size (default 1/beta)")->capture_default_str();
    gd_cmd->add_option("--delta", gd_delta)->capture_default_str();
    gd_cmd->add_option("--seed", gd_seed)->capture_default_str();
    gd_cmd->add_option("--out", gd_out)->capture_default_str();

    // em-run ---------------------------------------------------------------------
    auto* em_cmd = app.add_subcommand("em-run", "first-order EM trace (CSV)");
    std::string em_model = "gmm", em_out;
    int em_d = 2, em_n = 2000, em_steps = 50;
    double em_sigma = 1.0, em_norm = 3.0, em_step = 0.0, em_delta = 0.1;
    std::uint64_t em_seed = 1;
    em_cmd->add_option("--model", em_model, "gmm | mlr")->capture_default_str();
    em_cmd->add_option("--d", em_d)->capture_default_str();
    em_cmd->add_option("--n", em_n)->capture_default_str();
    em_cmd->add_option("--steps", em_steps)->capture_default_str();
    em_cmd->add_option("--sigma", em_sigma)->capture_default_str();
    em_cmd->add_option("--norm", em_norm, "||theta*||")->capture_default_str();
    em_cmd->add_option("--step", em_step)->capture_default_str();
    em_cmd->add_option("--delta", em_delta)->capture_default_str();
    em_cmd->add_option("--seed", em_seed)->capture_default_str();
    em_cmd->add_option("--out", em_out)->capture_default_str();

    // huber-exp ---------------------------------------------------------------------
    auto* hu_cmd = app.add_subcommand("huber-exp", "Huber vs square on heavy tails (CSV)");
    int hu_d = 10, hu_trials = 500;
    double hu_dof = 2.5, hu_scale = 1.0;
    std::vector<int> hu_n = {500};
    std::uint64_t hu_seed = 1;
    std::string hu_out;
    hu_cmd->add_option("--d", hu_d)->capture_default_str();
    hu_cmd->add_option("--dof", hu_dof)->capture_default_str();
    hu_cmd->add_option("--scale", hu_scale)->capture_default_str();
    hu_cmd->add_option("--n", hu_n)->capture_default_str();
    hu_cmd->add_option("--trials", hu_trials)->capture_default_str();
    hu_cmd->add_option("--seed", hu_seed)->capture_default_str();
    hu_cmd->add_option("--out", hu_out)->capture_default_str();

    // thm81-bound ---------------------------------------------------------------------
    auto* t81_cmd = app.add_subcommand("thm81-bound", "convex-cost fixed-point bound (JSON)");
    std::string t81_cost = "huber", t81_out;
    int t81_d = 10, t81_probes = 20000;
    double t81_dof = 2.5, t81_scale = 1.0, t81_delta = 0.1, t81_r0 = 1e-8, t81_gamma_mult = 8.0;
    std::int64_t t81_n = 10000;
    std::vector<double> t81_kappas = {0.25, 0.5, 0.75};
    std::uint64_t t81_seed = 1;
    t81_cmd->add_option("--cost", t81_cost, "square | huber | logistic")->capture_default_str();
    t81_cmd->add_option("--gamma-mult", t81_gamma_mult, "huber gamma = mult * ||xi||_L2")->capture_default_str();
    t81_cmd->add_option("--d", t81_d)->capture_default_str();
    t81_cmd->add_option("--dof", t81_dof)->capture_default_str();
    t81_cmd->add_option("--scale", t81_scale)->capture_default_str();
    t81_cmd->add_option("--n", t81_n)->capture_default_str();
    t81_cmd->add_option("--delta", t81_delta)->capture_default_str();
    t81_cmd->add_option("--r0", t81_r0)->capture_default_str();
    t81_cmd->add_option("--kappa", t81_kappas, "small-ball kappa grid")->capture_default_str();
    t81_cmd->add_option("--probes", t81_probes)->capture_default_str();
    t81_cmd->add_option("--seed", t81_seed)->capture_default_str();
    t81_cmd->add_option("--out", t81_out)->capture_default_str();

    // run-experiment ---------------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run-experiment", "configured Monte Carlo sweep");
    std::string run_config;
    int run_threads = 0;
    run_cmd->add_option("--config", run_config)->required();
    run_cmd->add_option("--threads", run_threads, "0 = auto")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (fp_cmd->parsed()) {
        FixedPointResult res;
        if (fp_kind == "sqrt") {
            res = fixed_point([&](double r) { return std::sqrt(fp_a * r); }, fp_domain, fp_tol);
        } else if (fp_kind == "const") {
            res = fixed_point([&](double r) { (void)r; return fp_a; }, fp_domain, fp_tol);
        } else if (fp_kind == "linear") {
            res = fixed_point([&](double r) { return fp_a * r; }, fp_domain, fp_tol);
        } else if (fp_kind == "erm-nonparametric") {
            const Surrogate psi = Surrogate::nonparametric(fp_rho, fp_n, 1.0, 4.0 * fp_B * fp_B);
            res = fixed_point([&](double r) { return 6.0 * fp_B * psi(8.0 * r, fp_delta); },
                              4.0 * fp_B * fp_B, fp_tol);
        } else {
            throw std::invalid_argument("unknown fixed-point kind " + fp_kind);
        }
        std::cout << "{\"r_star\": " << num(res.r_star) << ", \"iterations\": " << res.iterations
                  << ", \"bracket_width\": " << num(res.bracket_width) << "}\n";
        return 0;
    }

    if (dud_cmd->parsed()) {
        const auto colon = dud_entropy.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("--entropy needs kind:value");
        const std::string kind = dud_entropy.substr(0, colon);
        const double arg = std::stod(dud_entropy.substr(colon + 1));
        std::function<double(double)> entropy;
        if (kind == "const")
            entropy = [arg](double) { return arg; };
        else if (kind == "log")
            entropy = [arg](double eps) { return arg * std::log(1.0 / eps); };
        else
            throw std::invalid_argument("unknown entropy kind " + kind);
        std::cout << num(dudley_bound(entropy, dud_r, dud_n)) << "\n";
        return 0;
    }

    if (ratio_cmd->parsed()) {
        std::cout << num(suboptimality_ratio(ra_V, ra_B, ra_n, ra_rho)) << "\n";
        return 0;
    }

    if (peel_cmd->parsed()) {
        const FiniteLossProblem problem =
            pe_H == 2 ? gen_finite_zero_variance(0.1, pe_B, pe_seed)
                      : gen_finite_random(pe_H, pe_outcomes, pe_B, pe_seed);
        Surrogate psi = [&]() {
            if (pe_psi == "empirical") {
                const int build_n = pe_psi_n > 0 ? pe_psi_n : pe_n;
                const Eigen::MatrixXd build_sample = problem.sample(0xb51dULL, build_n);
                return build_psi(build_sample, pe_B, *problem.optimal_index(), pe_mc, pe_seed)
                    .as_surrogate();
            }
            return parse_surrogate(pe_psi, pe_B, pe_n);
        }();
        const PeelingReport rep = validate_peeling(problem, psi, pe_n, pe_delta, pe_r0,
                                                   pe_trials, pe_seed);
        std::cout << "{\"violation_rate\": " << num(rep.violation_rate)
                  << ", \"se\": " << num(rep.se) << ", \"trials\": " << rep.trials
                  << ", \"delta\": " << num(rep.delta) << ", \"r0\": " << num(rep.r0)
                  << ", \"C_r0\": " << num(rep.c_r0) << ", \"n\": " << rep.n << "}\n";
        return 0;
    }

    if (cert_cmd->parsed()) {
        const CsvMatrix csv = read_loss_csv(ce_input);
        const int total = static_cast<int>(csv.values.rows());
        if (total < 2) throw std::invalid_argument("need at least 2 rows to split");
        std::vector<int> order(total);
        for (int i = 0; i < total; ++i) order[i] = i;
        if (ce_split == "seeded-random") {
            rng::Substream shuffle = rng::CounterRng(ce_seed, 0x73686566ULL).at(0);
            for (int i = total - 1; i > 0; --i) {
                const int j = static_cast<int>(shuffle.next_u64() % static_cast<std::uint64_t>(i + 1));
                std::swap(order[i], order[j]);
            }
        } else if (ce_split != "first-half-aux") {
            throw std::invalid_argument("unknown split " + ce_split);
        }
        const int half = total / 2;
        Eigen::MatrixXd aux(half, csv.values.cols()), primary(half, csv.values.cols());
        for (int i = 0; i < half; ++i) {
            aux.row(i) = csv.values.row(order[i]);
            primary.row(i) = csv.values.row(order[half + i]);
        }
        const double B = ce_B > 0.0 ? ce_B : csv.values.array().abs().maxCoeff();
        const Surrogate psi =
            ce_psi == "empirical"
                ? build_psi(primary, B, erm(primary), ce_mc, ce_seed).as_surrogate()
                : parse_surrogate(ce_psi, B, half, ce_constant);

        const Certificate erm_cert =
            certify_loss_rate(primary, B, psi, ce_delta, ce_r0, /*data_dependent=*/true, ce_constant);
        const MPResult mp = moment_penalized(primary, aux, B, psi, ce_delta, ce_constant);
        const NMPResult nmp = variance_certificate(primary, B, mp.l_hat0, psi, ce_delta);

        std::string out = "{\n  \"hypotheses\": [";
        for (std::size_t i = 0; i < csv.header.size(); ++i)
            out += (i ? ", \"" : "\"") + csv.header[i] + "\"";
        out += "],\n  \"erm_index\": " + std::to_string(erm(primary));
        out += ",\n  \"mp_index\": " + std::to_string(mp.index);
        out += ",\n  \"mp_hypothesis\": \"" + csv.header[mp.index] + "\"";
        out += ",\n  \"loss_certificate\": " + erm_cert.to_json();
        out += ",\n  \"mp_certificate\": " + mp.certificate.to_json();
        out += ",\n  \"variance_certificate\": " + nmp.certificate.to_json();
        out += "\n}\n";
        write_text(ce_out, out);
        return 0;
    }

    if (gd_cmd->parsed()) {
        SmoothParametricModel model =
            gd_model == "sigmoid" ? gen_sigmoid_regression(gd_d, gd_tau, gd_delta_M, gd_noise, gd_seed)
            : gd_model == "quadratic" ? gen_quadratic_mean(gd_d, gd_sigma, gd_seed)
            : gd_model == "linear " ? gen_linear_regression(gd_d, gd_noise, gd_seed)
            : gd_model == "linear" ? gen_linear_regression(gd_d, gd_noise, gd_seed)
            : throw std::invalid_argument("unknown model " + gd_model);
        const SampleSet sample = model.sample(1, gd_n);
        const double init_radius = std::sqrt(model.mu / model.beta) * model.delta_m;
        rng::Substream init = rng::CounterRng(gd_seed, 0x696e6974ULL).at(0);
        const Eigen::VectorXd theta0 = model.theta_star + init.sphere(model.dim, 0.5 * init_radius);
        const GDTrace trace = gradient_descent(model, sample, theta0, gd_steps,
                                               gd_step > 0.0 ? std::optional<double>(gd_step)
                                                             : std::nullopt,
                                               gd_delta);
        std::string out = trace_csv(trace);
        out += "# stat_error_prediction = " + num(trace.stat_error_prediction) + "\n";
        write_text(gd_out, out);
        return 0;
    }

    if (em_cmd->parsed()) {
        const Eigen::VectorXd theta_star =
            rng::CounterRng(em_seed, 0x746172ULL).at(0).sphere(em_d, em_norm);
        const EMModel model = em_model == "gmm" ? gen_gmm2(em_d, em_sigma, theta_star, em_seed)
                              : em_model == "mlr" ? gen_mlr2(em_d, em_sigma, theta_star, em_seed)
                              : throw std::invalid_argument("unknown model " + em_model);
        const Eigen::MatrixXd Z = model.sample(1, em_n);
        const Eigen::VectorXd theta0 = em_default_init(model, 0);
        const GDTrace trace = first_order_em(model, Z, theta0, em_steps,
                                             em_step > 0.0 ? em_step : -1.0,
                                             /*eval_n=*/20000, em_delta);
        std::string out = trace_csv(trace);
        out += "# stat_error_prediction = " + num(trace.stat_error_prediction) + "\n";
        const SnrParams snr = snr_parameters(model);
        out += "# mu2 = " + num(snr.mu2) + ", admissible = " + (snr.admissible ? "true" : "false") + "\n";
        write_text(em_out, out);
        return 0;
    }

    if (hu_cmd->parsed()) {
        const auto rows = huber_vs_square_experiment(hu_d, hu_dof, hu_n, hu_trials, hu_seed, hu_scale);
        std::string out = "cost,n,median_err,p95_err,trials\n";
        for (const auto& row : rows)
            out += row.cost + "," + std::to_string(row.n) + "," + num(row.median_err) + "," +
                   num(row.p95_err) + "," + std::to_string(row.trials) + "\n";
        write_text(hu_out, out);
        return 0;
    }

    if (t81_cmd->parsed()) {
        const ConvexCostData data = gen_heavy_tailed_linear(t81_d, t81_dof, t81_scale, t81_seed);
        const CostSpec cost = t81_cost == "square" ? CostSpec::square()
                              : t81_cost == "huber" ? CostSpec::huber(t81_gamma_mult * data.xi_l2)
                              : t81_cost == "logistic" ? CostSpec::logistic()
                              : throw std::invalid_argument("unknown cost " + t81_cost);
        const SmallBallEstimate sb = small_ball_estimate(
            data, linear_family(t81_d, data.family_radius), t81_kappas, t81_probes, t81_seed);
        // Version-space surrogate: Rademacher complexity of the local linear
        // class, sqrt(d r / n).  Noise surrogate: the noise-multiplier process,
        // bounded by min(gamma, ||xi||) for Huber and ||xi|| otherwise.
        const Surrogate phi_ver = Surrogate::parametric(t81_d, t81_n, 1.0, 4.0 * data.Delta * data.Delta);
        const double noise_scale = cost.kind == CostSpec::Kind::huber
                                       ? std::min(cost.gamma, data.xi_l2)
                                       : data.xi_l2;
        const double dd = static_cast<double>(t81_d);
        const Surrogate phi_noise = Surrogate::wrap(
            "noise-multiplier",
            [noise_scale, dd, t81_n](double r, double delta) {
                return std::sqrt(noise_scale * noise_scale * (dd + std::log(1.0 / delta)) * r /
                                 static_cast<double>(t81_n));
            },
            4.0 * data.Delta * data.Delta);
        const Certificate cert =
            theorem81_bound(cost, data, phi_ver, phi_noise, sb, t81_delta, t81_r0, t81_n);
        write_text(t81_out, cert.to_json() + "\n");
        return 0;
    }

    if (run_cmd->parsed()) {
        const ExperimentConfig cfg = ExperimentConfig::from_file(run_config);
        const ScalingReport report = run_experiment(cfg, run_threads);
        const std::string prefix = cfg.get_string("output_path", "");
        if (prefix.empty()) {
            std::cout << report.to_json();
        } else {
            write_text(prefix + ".csv", report.to_csv());
            write_text(prefix + ".json", report.to_json());
            std::cout << "wrote " << prefix << ".csv and " << prefix << ".json\n";
        }
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::logic_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}
