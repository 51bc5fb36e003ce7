#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include <Eigen/Core>

#include "locbound/em.hpp"
#include "locbound/rng.hpp"

namespace locbound {

/// Finite hypothesis class with an explicit per-sample loss oracle.  A drawn
/// "sample" is represented by its loss row: the vector of losses of every
/// hypothesis at that sample.  Rows are pure functions of (seed, stream,
/// index); boundedness |loss| <= B is enforced on every draw.
class FiniteLossProblem {
public:
    FiniteLossProblem(int num_hypotheses, double B, std::uint64_t seed,
                      std::function<Eigen::VectorXd(rng::Substream&)> row_fn,
                      std::optional<Eigen::VectorXd> population_risks = std::nullopt,
                      std::optional<int> optimal_index = std::nullopt);

    int num_hypotheses() const { return num_hypotheses_; }
    double bound() const { return B_; }
    std::uint64_t seed() const { return seed_; }

    Eigen::VectorXd sample_row(std::uint64_t stream, std::uint64_t index) const;

    /// n rows  x  num_hypotheses columns.
    Eigen::MatrixXd sample(std::uint64_t stream, int n) const;

    const std::optional<Eigen::VectorXd>& population_risks() const { return population_risks_; }
    const std::optional<int>& optimal_index() const { return optimal_index_; }

private:
    int num_hypotheses_;
    double B_;
    std::uint64_t seed_;
    std::function<Eigen::VectorXd(rng::Substream&)> row_fn_;
    std::optional<Eigen::VectorXd> population_risks_;
    std::optional<int> optimal_index_;
};

/// Two hypotheses: h0 with loss identically 0 (so the optimal variance is 0)
/// and h1 with loss B*s, s = +1 with probability 1/2 + eps.  Population risks
/// are (0, 2*eps*B).
FiniteLossProblem gen_finite_zero_variance(double eps, double B, std::uint64_t seed);

/// Random finite problem over `outcomes` latent states with a fixed loss
/// table; population risks are exact.  Used as a generic finite testbed.
FiniteLossProblem gen_finite_random(int num_hypotheses, int outcomes, double B,
                                    std::uint64_t seed);

/// A realized i.i.d. sample for parametric models: one feature row per draw
/// plus a scalar label (label is 0 where the model does not use it).
struct SampleSet {
    Eigen::MatrixXd X;  // n x d
    Eigen::VectorXd y;  // n
    int size() const { return static_cast<int>(X.rows()); }
};

/// Smooth parametric model with loss/gradient oracles and the structural
/// constants of the fast-rate regime.
class SmoothParametricModel {
public:
    int dim = 0;
    Eigen::VectorXd theta_star;
    double beta = 0.0;     // smoothness / sub-exponential scale
    double mu = 0.0;       // Polyak-Lojasiewicz constant
    double g_star = 0.0;   // Bernstein scale of the gradient at theta_star
    double delta_m = 0.0;  // inscribed-ball radius
    double delta_M = 0.0;  // circumscribed-ball radius
    std::uint64_t seed = 0;

    std::function<void(rng::Substream&, Eigen::Ref<Eigen::VectorXd>, double&)> draw;
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&, double)> loss;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&, double)> grad;

    /// Batch means over a realized sample (vectorized fast paths).
    std::function<double(const Eigen::VectorXd&, const SampleSet&)> batch_loss_mean;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const SampleSet&)> batch_grad_mean;

    SampleSet sample(std::uint64_t stream, int n) const;
};

/// Non-convex regression with sigmoid link: loss (eta(theta^T x) - y)^2,
/// x with i.i.d. coordinates uniform on [-tau, tau], y = eta(x^T theta*) +
/// noise clipped so that y stays in [-1, 2] (worst-case loss bound B = 4).
/// beta, mu, g_star follow the instantiated-domain formulas
/// beta = 2 C_eta (C_eta + sqrt(B)) tau^2, mu = 2 c_eta^3 tau^2 gamma / C_eta,
/// g_star = 2 C_eta tau sqrt(B d), with C_eta, c_eta evaluated numerically on
/// |t| <= Delta_M tau sqrt(d) and gamma = 1/3 for the uniform feature law.
SmoothParametricModel gen_sigmoid_regression(int d, double tau, double delta_M,
                                             double noise_sd, std::uint64_t seed);

/// Quadratic localization testbed: loss(theta; z) = 0.5 ||theta - z||^2 with
/// z ~ N(theta*, sigma^2 I).  One gradient step of size 1 from any point
/// lands exactly on the sample mean.
SmoothParametricModel gen_quadratic_mean(int d, double sigma, std::uint64_t seed);

/// Well-specified linear regression, loss 0.5 (x^T theta - y)^2 with standard
/// normal features.  Gradient differences are exactly (xx^T)(theta - theta*)
/// -shaped, which makes it the reference instance for the localized gradient
/// diagnostic.
SmoothParametricModel gen_linear_regression(int d, double noise_sd, std::uint64_t seed);

/// Mixture of two Gaussians, z = s*theta* + sigma*g with s uniform on {-1,+1}.
EMModel gen_gmm2(int d, double sigma, const Eigen::VectorXd& theta_star, std::uint64_t seed);

/// Mixture of two linear regressions, x ~ N(0,I), y = s*x^T theta* + sigma*g.
EMModel gen_mlr2(int d, double sigma, const Eigen::VectorXd& theta_star, std::uint64_t seed);

/// Regression data with heavy-tailed Student-t noise: y = x^T theta* +
/// scale * t(dof).  Requires dof > 2 so that ||xi||_{L2} is finite; pass
/// dof = infinity for the Gaussian comparison arm.
struct ConvexCostData {
    int dim = 0;
    Eigen::VectorXd theta_star;
    double xi_l2 = 0.0;          // L2 norm of xi = h*(x) - y
    double Delta = 0.0;          // sup_h ||h(x) - y||_{L2} over the family
    double family_radius = 0.0;  // linear family {theta : ||theta|| <= radius}
    double dof = 0.0;            // infinity means Gaussian noise
    double scale = 0.0;
    std::uint64_t seed = 0;

    SampleSet sample(std::uint64_t stream, int n) const;
    double h_star(const Eigen::VectorXd& x) const { return theta_star.dot(x); }
};

ConvexCostData gen_heavy_tailed_linear(int d, double dof, double scale, std::uint64_t seed);

}  // namespace locbound
