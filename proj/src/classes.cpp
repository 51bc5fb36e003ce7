#include "locbound/classes.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace locbound {

namespace {

// Reserved stream offsets inside a model's seed space.
constexpr std::uint64_t kParamStream = 0x706172616dULL;  // model parameter draws

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double sigmoid_deriv(double t) {
    const double s = sigmoid(t);
    return s * (1.0 - s);
}

}  // namespace

FiniteLossProblem::FiniteLossProblem(int num_hypotheses, double B, std::uint64_t seed,
                                     std::function<Eigen::VectorXd(rng::Substream&)> row_fn,
                                     std::optional<Eigen::VectorXd> population_risks,
                                     std::optional<int> optimal_index)
    : num_hypotheses_(num_hypotheses),
      B_(B),
      seed_(seed),
      row_fn_(std::move(row_fn)),
      population_risks_(std::move(population_risks)),
      optimal_index_(optimal_index) {
    if (num_hypotheses_ < 1) throw std::invalid_argument("FiniteLossProblem: need at least one hypothesis");
    if (!(B_ > 0.0)) throw std::invalid_argument("FiniteLossProblem: B must be positive");
}

Eigen::VectorXd FiniteLossProblem::sample_row(std::uint64_t stream, std::uint64_t index) const {
    rng::Substream sub = rng::CounterRng(seed_, stream).at(index);
    Eigen::VectorXd row = row_fn_(sub);
    if (row.size() != num_hypotheses_)
        throw std::runtime_error("FiniteLossProblem: row oracle returned wrong width");
    for (int h = 0; h < num_hypotheses_; ++h) {
        if (!(std::abs(row[h]) <= B_ + 1e-12))
            throw std::runtime_error("FiniteLossProblem: loss bound |l| <= B violated");
    }
    return row;
}

Eigen::MatrixXd FiniteLossProblem::sample(std::uint64_t stream, int n) const {
    Eigen::MatrixXd m(n, num_hypotheses_);
    for (int i = 0; i < n; ++i) m.row(i) = sample_row(stream, static_cast<std::uint64_t>(i));
    return m;
}

FiniteLossProblem gen_finite_zero_variance(double eps, double B, std::uint64_t seed) {
    if (!(eps > 0.0) || !(eps < 0.5)) throw std::invalid_argument("gen_finite_zero_variance: eps must be in (0, 0.5)");
    if (!(B > 0.0)) throw std::invalid_argument("gen_finite_zero_variance: B must be positive");
    auto row_fn = [eps, B](rng::Substream& sub) {
        Eigen::VectorXd row(2);
        row[0] = 0.0;
        row[1] = sub.bernoulli(0.5 + eps) ? B : -B;
        return row;
    };
    Eigen::VectorXd risks(2);
    risks << 0.0, 2.0 * eps * B;
    return FiniteLossProblem(2, B, seed, row_fn, risks, 0);
}

FiniteLossProblem gen_finite_random(int num_hypotheses, int outcomes, double B,
                                    std::uint64_t seed) {
    if (num_hypotheses < 1 || outcomes < 1)
        throw std::invalid_argument("gen_finite_random: sizes must be positive");
    if (!(B > 0.0)) throw std::invalid_argument("gen_finite_random: B must be positive");

    rng::Substream setup = rng::CounterRng(seed, kParamStream).at(0);
    Eigen::MatrixXd table(outcomes, num_hypotheses);
    for (int j = 0; j < outcomes; ++j)
        for (int h = 0; h < num_hypotheses; ++h)
            table(j, h) = setup.uniform(-B, B);
    Eigen::VectorXd probs(outcomes);
    double total = 0.0;
    for (int j = 0; j < outcomes; ++j) {
        probs[j] = setup.uniform(0.05, 1.0);
        total += probs[j];
    }
    probs /= total;
    Eigen::VectorXd cum(outcomes);
    double acc = 0.0;
    for (int j = 0; j < outcomes; ++j) { acc += probs[j]; cum[j] = acc; }
    cum[outcomes - 1] = 1.0;

    Eigen::VectorXd risks = table.transpose() * probs;
    int best = 0;
    risks.minCoeff(&best);

    auto row_fn = [table, cum, outcomes](rng::Substream& sub) {
        const double u = sub.uniform01();
        int j = 0;
        while (j + 1 < outcomes && u > cum[j]) ++j;
        return Eigen::VectorXd(table.row(j).transpose());
    };
    return FiniteLossProblem(num_hypotheses, B, seed, row_fn, risks, best);
}

SampleSet SmoothParametricModel::sample(std::uint64_t stream, int n) const {
    SampleSet s;
    s.X.resize(n, dim);
    s.y.resize(n);
    rng::CounterRng base(seed, stream);
    for (int i = 0; i < n; ++i) {
        rng::Substream sub = base.at(static_cast<std::uint64_t>(i));
        Eigen::VectorXd row(dim);
        double label = 0.0;
        draw(sub, row, label);
        s.X.row(i) = row.transpose();
        s.y[i] = label;
    }
    return s;
}

SmoothParametricModel gen_sigmoid_regression(int d, double tau, double delta_M,
                                             double noise_sd, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("gen_sigmoid_regression: d must be >= 1");
    if (!(tau > 0.0) || !(delta_M > 0.0))
        throw std::invalid_argument("gen_sigmoid_regression: tau and delta_M must be positive");

    SmoothParametricModel m;
    m.dim = d;
    m.seed = seed;
    m.delta_M = delta_M;
    m.theta_star = rng::CounterRng(seed, kParamStream).at(0).sphere(d, 0.25 * delta_M);
    m.delta_m = 0.25 * delta_M;  // ball around theta* inside {||theta|| <= delta_M/2}

    // Link constants on the instantiated domain |t| <= T0.
    const double T0 = delta_M * tau * std::sqrt(static_cast<double>(d));
    double c_eta = std::numeric_limits<double>::infinity();
    double C_eta = 0.0;
    const int grid = 20001;
    for (int i = 0; i < grid; ++i) {
        const double t = -T0 + 2.0 * T0 * i / (grid - 1);
        const double d1 = sigmoid_deriv(t);
        const double s = sigmoid(t);
        const double d2 = std::abs(d1 * (1.0 - 2.0 * s));
        C_eta = std::max({C_eta, d1, d2});
        c_eta = std::min(c_eta, d1);
    }
    const double B = 4.0;      // (eta - y)^2 with eta in (0,1), y clipped to [-1, 2]
    const double gamma = 1.0 / 3.0;  // E[xx^T] = (tau^2/3) I for iid U[-tau, tau]
    m.beta = 2.0 * C_eta * (C_eta + std::sqrt(B)) * tau * tau;
    m.mu = 2.0 * std::pow(c_eta, 3.0) * tau * tau * gamma / C_eta;
    m.g_star = 2.0 * C_eta * tau * std::sqrt(B * d);

    const Eigen::VectorXd theta_star = m.theta_star;
    m.draw = [d, tau, noise_sd, theta_star](rng::Substream& sub,
                                            Eigen::Ref<Eigen::VectorXd> x, double& y) {
        for (int i = 0; i < d; ++i) x[i] = sub.uniform(-tau, tau);
        y = sigmoid(theta_star.dot(x));
        if (noise_sd > 0.0) y += noise_sd * sub.normal();
        y = std::min(std::max(y, -1.0), 2.0);
    };
    m.loss = [](const Eigen::VectorXd& theta, const Eigen::VectorXd& x, double y) {
        const double e = sigmoid(theta.dot(x)) - y;
        return e * e;
    };
    m.grad = [](const Eigen::VectorXd& theta, const Eigen::VectorXd& x, double y) {
        const double t = theta.dot(x);
        return Eigen::VectorXd(2.0 * (sigmoid(t) - y) * sigmoid_deriv(t) * x);
    };
    m.batch_loss_mean = [](const Eigen::VectorXd& theta, const SampleSet& s) {
        const Eigen::ArrayXd u = (s.X * theta).array();
        const Eigen::ArrayXd e = 1.0 / (1.0 + (-u).exp()) - s.y.array();
        return (e * e).mean();
    };
    m.batch_grad_mean = [](const Eigen::VectorXd& theta, const SampleSet& s) {
        const Eigen::ArrayXd u = (s.X * theta).array();
        const Eigen::ArrayXd w = 1.0 / (1.0 + (-u).exp());
        const Eigen::ArrayXd coef = 2.0 * (w - s.y.array()) * w * (1.0 - w);
        return Eigen::VectorXd(s.X.transpose() * coef.matrix() / static_cast<double>(s.size()));
    };
    return m;
}

SmoothParametricModel gen_quadratic_mean(int d, double sigma, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("gen_quadratic_mean: d must be >= 1");
    if (!(sigma >= 0.0)) throw std::invalid_argument("gen_quadratic_mean: sigma must be >= 0");

    SmoothParametricModel m;
    m.dim = d;
    m.seed = seed;
    m.theta_star = rng::CounterRng(seed, kParamStream).at(0).normal_vector(d);
    m.beta = 1.0;
    m.mu = 1.0;
    m.g_star = sigma * std::sqrt(static_cast<double>(d));
    m.delta_M = 10.0 * (1.0 + m.theta_star.norm());
    m.delta_m = m.delta_M;

    const Eigen::VectorXd theta_star = m.theta_star;
    m.draw = [d, sigma, theta_star](rng::Substream& sub,
                                    Eigen::Ref<Eigen::VectorXd> x, double& y) {
        for (int i = 0; i < d; ++i) x[i] = theta_star[i] + sigma * sub.normal();
        y = 0.0;
    };
    m.loss = [](const Eigen::VectorXd& theta, const Eigen::VectorXd& z, double) {
        return 0.5 * (theta - z).squaredNorm();
    };
    m.grad = [](const Eigen::VectorXd& theta, const Eigen::VectorXd& z, double) {
        return Eigen::VectorXd(theta - z);
    };
    m.batch_loss_mean = [](const Eigen::VectorXd& theta, const SampleSet& s) {
        double acc = 0.0;
        for (int i = 0; i < s.size(); ++i)
            acc += 0.5 * (theta - s.X.row(i).transpose()).squaredNorm();
        return acc / s.size();
    };
    m.batch_grad_mean = [](const Eigen::VectorXd& theta, const SampleSet& s) {
        return Eigen::VectorXd(theta - s.X.colwise().mean().transpose());
    };
    return m;
}

SmoothParametricModel gen_linear_regression(int d, double noise_sd, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("gen_linear_regression: d must be >= 1");

    SmoothParametricModel m;
    m.dim = d;
    m.seed = seed;
    m.theta_star = rng::CounterRng(seed, kParamStream).at(0).sphere(d, 1.0);
    m.beta = 1.0;  // E[xx^T] = I
    m.mu = 1.0;
    m.g_star = noise_sd * std::sqrt(static_cast<double>(d));
    m.delta_M = 20.0;
    m.delta_m = 20.0;

    const Eigen::VectorXd theta_star = m.theta_star;
    m.draw = [d, noise_sd, theta_star](rng::Substream& sub,
                                       Eigen::Ref<Eigen::VectorXd> x, double& y) {
        for (int i = 0; i < d; ++i) x[i] = sub.normal();
        y = theta_star.dot(x) + noise_sd * sub.normal();
    };
    m.loss = [](const Eigen::VectorXd& theta, const Eigen::VectorXd& x, double y) {
        const double e = theta.dot(x) - y;
        return 0.5 * e * e;
    };
    m.grad = [](const Eigen::VectorXd& theta, const Eigen::VectorXd& x, double y) {
        return Eigen::VectorXd((theta.dot(x) - y) * x);
    };
    m.batch_loss_mean = [](const Eigen::VectorXd& theta, const SampleSet& s) {
        return 0.5 * (s.X * theta - s.y).squaredNorm() / s.size();
    };
    m.batch_grad_mean = [](const Eigen::VectorXd& theta, const SampleSet& s) {
        return Eigen::VectorXd(s.X.transpose() * (s.X * theta - s.y) / static_cast<double>(s.size()));
    };
    return m;
}

SampleSet ConvexCostData::sample(std::uint64_t stream, int n) const {
    SampleSet s;
    s.X.resize(n, dim);
    s.y.resize(n);
    rng::CounterRng base(seed, stream);
    const bool gaussian = std::isinf(dof);
    for (int i = 0; i < n; ++i) {
        rng::Substream sub = base.at(static_cast<std::uint64_t>(i));
        for (int j = 0; j < dim; ++j) s.X(i, j) = sub.normal();
        const double noise = gaussian ? sub.normal() : sub.student_t(dof);
        s.y[i] = theta_star.dot(s.X.row(i)) + scale * noise;
    }
    return s;
}

ConvexCostData gen_heavy_tailed_linear(int d, double dof, double scale, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("gen_heavy_tailed_linear: d must be >= 1");
    if (!(dof > 2.0)) throw std::invalid_argument("gen_heavy_tailed_linear: dof must be > 2");
    if (!(scale >= 0.0)) throw std::invalid_argument("gen_heavy_tailed_linear: scale must be >= 0");

    ConvexCostData data;
    data.dim = d;
    data.seed = seed;
    data.dof = dof;
    data.scale = scale;
    data.theta_star = rng::CounterRng(seed, kParamStream).at(0).sphere(d, 1.0);
    data.xi_l2 = std::isinf(dof) ? scale : scale * std::sqrt(dof / (dof - 2.0));
    data.family_radius = 2.0 * data.theta_star.norm() + 1.0;
    const double reach = data.family_radius + data.theta_star.norm();
    data.Delta = std::sqrt(reach * reach + data.xi_l2 * data.xi_l2);
    return data;
}

}  // namespace locbound
