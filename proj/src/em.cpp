#include "locbound/em.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "locbound/classes.hpp"

namespace locbound {

namespace {

constexpr std::uint64_t kEvalStream = 0x6576616cULL;  // reserved oracle stream
constexpr std::uint64_t kInitStream = 0x696e6974ULL;

// Logistic with an exact complement: w(-a) == 1 - w(a) bit-for-bit, so the
// GMM weight symmetry w(z) + w(-z) = 1 holds exactly.  Clamped away from
// {0, 1} at machine-epsilon distance.
double logistic_exact(double a) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (a < 0.0) return 1.0 - logistic_exact(-a);
    const double w = 1.0 / (1.0 + std::exp(-a));
    return std::min(w, 1.0 - eps);
}

double logsumexp2(double a, double b) {
    const double m = a > b ? a : b;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

double gmm2_weight(const Eigen::VectorXd& theta_prime, const Eigen::VectorXd& z,
                   double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gmm2_weight: sigma must be positive");
    return logistic_exact(2.0 * theta_prime.dot(z) / (sigma * sigma));
}

Eigen::MatrixXd EMModel::sample(std::uint64_t stream, int n) const {
    rng::CounterRng base(seed, stream);
    rng::Substream probe = base.at(0);
    const Eigen::VectorXd first = draw(probe);
    Eigen::MatrixXd Z(n, first.size());
    Z.row(0) = first.transpose();
    for (int i = 1; i < n; ++i) {
        rng::Substream sub = base.at(static_cast<std::uint64_t>(i));
        Z.row(i) = draw(sub).transpose();
    }
    return Z;
}

EMModel gen_gmm2(int d, double sigma, const Eigen::VectorXd& theta_star, std::uint64_t seed) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gen_gmm2: sigma must be positive");
    if (theta_star.size() != d) throw std::invalid_argument("gen_gmm2: theta_star has wrong dimension");

    EMModel m;
    m.family = "gmm2";
    m.dim = d;
    m.sigma = sigma;
    m.theta_star = theta_star;
    m.beta = 1.0;
    m.mu1 = 1.0;
    m.g_star = sigma * std::sqrt(static_cast<double>(d));
    m.seed = seed;
    m.guard_radius = 10.0 * std::max(1.0, theta_star.norm());

    m.draw = [d, sigma, theta_star](rng::Substream& sub) {
        const double s = sub.sign();
        Eigen::VectorXd z(d);
        for (int i = 0; i < d; ++i) z[i] = s * theta_star[i] + sigma * sub.normal();
        return z;
    };
    m.weight = [sigma](const Eigen::VectorXd& tp, const Eigen::VectorXd& z) {
        return gmm2_weight(tp, z, sigma);
    };
    m.surrogate_grad = [sigma](const Eigen::VectorXd& tp, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& z) {
        const double w = gmm2_weight(tp, z, sigma);
        // w*(theta - z) + (1-w)*(theta + z) = theta - (2w-1) z
        return Eigen::VectorXd(theta - (2.0 * w - 1.0) * z);
    };
    m.marginal_loss = [sigma](const Eigen::VectorXd& theta, const Eigen::VectorXd& z) {
        const double s2 = sigma * sigma;
        const double a = -(z - theta).squaredNorm() / (2.0 * s2);
        const double b = -(z + theta).squaredNorm() / (2.0 * s2);
        return -s2 * logsumexp2(a, b);
    };
    m.batch_self_grad_mean = [sigma](const Eigen::VectorXd& theta, const Eigen::MatrixXd& Z) {
        const int n = static_cast<int>(Z.rows());
        const Eigen::ArrayXd a = 2.0 * (Z * theta).array() / (sigma * sigma);
        Eigen::VectorXd g = theta;
        Eigen::VectorXd coef(n);
        for (int i = 0; i < n; ++i) coef[i] = 2.0 * logistic_exact(a[i]) - 1.0;
        g.noalias() -= Z.transpose() * coef / static_cast<double>(n);
        return g;
    };
    m.batch_marginal_loss_mean = [loss = m.marginal_loss](const Eigen::VectorXd& theta,
                                                          const Eigen::MatrixXd& Z) {
        double acc = 0.0;
        for (int i = 0; i < Z.rows(); ++i) acc += loss(theta, Z.row(i).transpose());
        return acc / static_cast<double>(Z.rows());
    };
    return m;
}

EMModel gen_mlr2(int d, double sigma, const Eigen::VectorXd& theta_star, std::uint64_t seed) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gen_mlr2: sigma must be positive");
    if (theta_star.size() != d) throw std::invalid_argument("gen_mlr2: theta_star has wrong dimension");

    EMModel m;
    m.family = "mlr2";
    m.dim = d;
    m.sigma = sigma;
    m.theta_star = theta_star;
    m.beta = 1.0;
    m.mu1 = 1.0;
    m.g_star = sigma * std::sqrt(static_cast<double>(d));
    m.seed = seed;
    m.guard_radius = 10.0 * std::max(1.0, theta_star.norm());

    // Observation encoding: z = [x; y], x in the first d slots.
    m.draw = [d, sigma, theta_star](rng::Substream& sub) {
        Eigen::VectorXd z(d + 1);
        for (int i = 0; i < d; ++i) z[i] = sub.normal();
        const double s = sub.sign();
        z[d] = s * theta_star.dot(z.head(d)) + sigma * sub.normal();
        return z;
    };
    m.weight = [d, sigma](const Eigen::VectorXd& tp, const Eigen::VectorXd& z) {
        const double u = tp.dot(z.head(d));
        return logistic_exact(2.0 * u * z[d] / (sigma * sigma));
    };
    m.surrogate_grad = [d, sigma](const Eigen::VectorXd& tp, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& z) {
        const Eigen::VectorXd x = z.head(d);
        const double y = z[d];
        const double w = logistic_exact(2.0 * tp.dot(x) * y / (sigma * sigma));
        // (xx^T) theta - (2w-1) y x
        return Eigen::VectorXd((theta.dot(x) - (2.0 * w - 1.0) * y) * x);
    };
    m.marginal_loss = [d, sigma](const Eigen::VectorXd& theta, const Eigen::VectorXd& z) {
        const double s2 = sigma * sigma;
        const double u = theta.dot(z.head(d));
        const double y = z[d];
        const double a = -(y - u) * (y - u) / (2.0 * s2);
        const double b = -(y + u) * (y + u) / (2.0 * s2);
        return -s2 * logsumexp2(a, b);
    };
    m.batch_self_grad_mean = [d, sigma](const Eigen::VectorXd& theta, const Eigen::MatrixXd& Z) {
        const int n = static_cast<int>(Z.rows());
        const auto X = Z.leftCols(d);
        const auto y = Z.col(d);
        const Eigen::ArrayXd u = (X * theta).array();
        Eigen::VectorXd coef(n);
        for (int i = 0; i < n; ++i) {
            const double w = logistic_exact(2.0 * u[i] * y[i] / (sigma * sigma));
            coef[i] = u[i] - (2.0 * w - 1.0) * y[i];
        }
        return Eigen::VectorXd(X.transpose() * coef / static_cast<double>(n));
    };
    m.batch_marginal_loss_mean = [loss = m.marginal_loss](const Eigen::VectorXd& theta,
                                                          const Eigen::MatrixXd& Z) {
        double acc = 0.0;
        for (int i = 0; i < Z.rows(); ++i) acc += loss(theta, Z.row(i).transpose());
        return acc / static_cast<double>(Z.rows());
    };
    return m;
}

SnrParams snr_parameters(const EMModel& model, double c1, double c2, double eta_threshold) {
    SnrParams p;
    const double eta = model.snr();
    p.admissible = eta >= eta_threshold;
    if (model.family == "mlr2") {
        p.mu2 = 0.25;
    } else {
        const double e2 = eta * eta;
        p.mu2 = e2 > 0.0 ? c1 * (1.0 + 1.0 / e2 + e2) * std::exp(-c2 * e2)
                         : std::numeric_limits<double>::infinity();
    }
    return p;
}

Eigen::VectorXd em_default_init(const EMModel& model, std::uint64_t stream) {
    const double frac = model.family == "mlr2" ? 1.0 / 64.0 : 1.0 / 8.0;
    rng::Substream sub = rng::CounterRng(model.seed, kInitStream + stream).at(0);
    return model.theta_star + sub.sphere(model.dim, frac * model.theta_star.norm());
}

GDTrace first_order_em(const EMModel& model, const Eigen::MatrixXd& Z,
                       const Eigen::VectorXd& theta0, int steps,
                       double step_size, int eval_n, double delta) {
    if (steps < 0) throw std::invalid_argument("first_order_em: steps must be >= 0");
    const double alpha = step_size > 0.0 ? step_size : 2.0 / (model.beta + model.mu1);

    Eigen::MatrixXd eval;
    double loss_star = 0.0;
    double grad_sq_star = 0.0;
    if (eval_n > 0) {
        eval = model.sample(kEvalStream, eval_n);
        loss_star = model.batch_marginal_loss_mean(model.theta_star, eval);
        double acc = 0.0;
        for (int i = 0; i < eval.rows(); ++i)
            acc += model.surrogate_grad(model.theta_star, model.theta_star,
                                        eval.row(i).transpose()).squaredNorm();
        grad_sq_star = acc / eval.rows();
    }

    GDTrace trace;
    trace.step_size = alpha;
    const int n = static_cast<int>(Z.rows());
    if (eval_n > 0) {
        const double log4d = std::log(4.0 / delta);
        const double root = std::sqrt(2.0 * grad_sq_star * log4d / n) +
                            (model.g_star * log4d + model.mu1) / n;
        trace.stat_error_prediction = 16.0 * model.beta / (model.mu1 * model.mu1) * root * root;
    } else {
        trace.stat_error_prediction = std::numeric_limits<double>::quiet_NaN();
    }

    Eigen::VectorXd theta = theta0;
    for (int t = 0; t <= steps; ++t) {
        const Eigen::VectorXd g = model.batch_self_grad_mean(theta, Z);
        if (!g.allFinite())
            throw std::runtime_error("first_order_em: non-finite gradient at iteration " + std::to_string(t));
        trace.iterates.push_back(theta);
        trace.empirical_grad_norms.push_back(g.norm());
        trace.param_error.push_back((theta - model.theta_star).norm());
        if (eval_n > 0)
            trace.population_excess.push_back(model.batch_marginal_loss_mean(theta, eval) - loss_star);
        if (t == steps) break;
        theta -= alpha * g;
        if ((theta - model.theta_star).norm() > model.guard_radius)
            throw std::runtime_error("first_order_em: divergence guard tripped at iteration " + std::to_string(t + 1));
    }
    return trace;
}

}  // namespace locbound
