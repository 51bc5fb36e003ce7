#include "locbound/gradflow.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace locbound {

namespace {

constexpr std::uint64_t kEvalStream = 0x6576616cULL;

void require_oracle(const SmoothParametricModel& model, const char* who) {
    if (model.theta_star.size() == 0)
        throw std::logic_error(std::string(who) + ": model does not expose theta_star (oracle unavailable)");
}

double eval_grad_sq_at_star(const SmoothParametricModel& model, const SampleSet& eval) {
    double acc = 0.0;
    for (int i = 0; i < eval.size(); ++i)
        acc += model.grad(model.theta_star, eval.X.row(i).transpose(), eval.y[i]).squaredNorm();
    return acc / eval.size();
}

}  // namespace

GDTrace gradient_descent(const SmoothParametricModel& model, const SampleSet& sample,
                         const Eigen::VectorXd& theta0, int steps,
                         std::optional<double> step_size, double delta, int eval_n) {
    if (steps < 0) throw std::invalid_argument("gradient_descent: steps must be >= 0");
    const double alpha = step_size.value_or(1.0 / model.beta);
    if (!(alpha > 0.0)) throw std::invalid_argument("gradient_descent: step size must be positive");

    const bool oracle = model.theta_star.size() > 0 && eval_n > 0;
    SampleSet eval;
    double loss_star = 0.0;
    GDTrace trace;
    trace.step_size = alpha;
    trace.stat_error_prediction = std::numeric_limits<double>::quiet_NaN();
    if (oracle) {
        eval = model.sample(kEvalStream, eval_n);
        loss_star = model.batch_loss_mean(model.theta_star, eval);
        const double grad_sq = eval_grad_sq_at_star(model, eval);
        const double n = static_cast<double>(sample.size());
        const double log4d = std::log(4.0 / delta);
        trace.stat_error_prediction =
            16.0 * grad_sq * log4d / (model.mu * n) +
            (8.0 * model.g_star * model.g_star * log4d * log4d + model.mu * model.mu) /
                (model.mu * n * n);
    }

    Eigen::VectorXd theta = theta0;
    for (int t = 0; t <= steps; ++t) {
        const Eigen::VectorXd g = model.batch_grad_mean(theta, sample);
        if (!g.allFinite())
            throw std::runtime_error("gradient_descent: non-finite gradient at iteration " + std::to_string(t));
        trace.iterates.push_back(theta);
        trace.empirical_grad_norms.push_back(g.norm());
        if (model.theta_star.size() > 0)
            trace.param_error.push_back((theta - model.theta_star).norm());
        if (oracle)
            trace.population_excess.push_back(model.batch_loss_mean(theta, eval) - loss_star);
        if (t == steps) break;
        theta -= alpha * g;
        if (model.theta_star.size() > 0 &&
            (theta - model.theta_star).norm() > 10.0 * model.delta_M)
            throw std::runtime_error("gradient_descent: divergence guard tripped at iteration " + std::to_string(t + 1));
    }
    return trace;
}

bool stationary_point_check(const SmoothParametricModel& model, const SampleSet& sample,
                            const Eigen::VectorXd& theta, double delta, int eval_n) {
    require_oracle(model, "stationary_point_check");
    const SampleSet eval = model.sample(kEvalStream, eval_n);
    const double grad_sq = eval_grad_sq_at_star(model, eval);
    const double n = static_cast<double>(sample.size());
    const double log4d = std::log(4.0 / delta);
    const double threshold = std::sqrt(2.0 * grad_sq * log4d / n) + model.g_star * log4d / n;
    const double norm = model.batch_grad_mean(theta, sample).norm();
    return norm <= threshold;
}

DiagnosticReport localized_gradient_diagnostic(const SmoothParametricModel& model,
                                               const SampleSet& sample,
                                               const std::vector<Eigen::VectorXd>& probes,
                                               double delta, double constant_c, int eval_n) {
    require_oracle(model, "localized_gradient_diagnostic");
    const SampleSet eval = model.sample(kEvalStream, eval_n);
    const double n = static_cast<double>(sample.size());
    const double L = std::log(4.0 * std::log2(2.0 * n * model.delta_M + 2.0) / delta);
    const double d = static_cast<double>(model.dim);
    const double dev = std::sqrt((d + L) / n) + (d + L) / n;

    const Eigen::VectorXd g_star_sample = model.batch_grad_mean(model.theta_star, sample);
    const Eigen::VectorXd g_star_eval = model.batch_grad_mean(model.theta_star, eval);

    DiagnosticReport report;
    int ok = 0;
    for (const auto& theta : probes) {
        DiagnosticRow row;
        row.distance = (theta - model.theta_star).norm();
        const Eigen::VectorXd centered_eval = model.batch_grad_mean(theta, eval) - g_star_eval;
        const Eigen::VectorXd centered_sample = model.batch_grad_mean(theta, sample) - g_star_sample;
        row.lhs = (centered_eval - centered_sample).norm();
        row.rhs = constant_c * model.beta * std::max(row.distance, 1.0 / n) * dev;
        if (row.lhs <= row.rhs) ++ok;
        report.rows.push_back(row);
    }
    report.satisfied_fraction = probes.empty() ? 1.0 : static_cast<double>(ok) / probes.size();
    return report;
}

}  // namespace locbound
