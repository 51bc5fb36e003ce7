#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Core>

#include "locbound/rng.hpp"
#include "locbound/trace.hpp"

namespace locbound {

/// Latent-variable model driven by first-order EM.  A realized observation is
/// encoded as one vector: the point z itself for the Gaussian mixture, the
/// stacked [x; y] for mixed linear regression.
///
/// `marginal_loss` is the marginal negative log-likelihood scaled by sigma^2
/// and shifted by a constant; with that normalization the gradient identity
/// grad_theta loss_{theta'}(theta; z) | theta=theta' = grad marginal_loss(theta'; z)
/// holds exactly and the quadratic surrogate has beta = mu1 = 1.
struct EMModel {
    std::string family;  // "gmm2", "mlr2", or a user tag
    int dim = 0;
    double sigma = 0.0;
    Eigen::VectorXd theta_star;
    double beta = 1.0;
    double mu1 = 1.0;
    double g_star = 0.0;   // Bernstein scale of the gradient at theta*
    double guard_radius = 0.0;  // divergence guard on ||theta - theta*||
    std::uint64_t seed = 0;

    std::function<Eigen::VectorXd(rng::Substream&)> draw;
    std::function<double(const Eigen::VectorXd& theta_prime, const Eigen::VectorXd& z)> weight;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& theta_prime,
                                  const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& z)> surrogate_grad;
    std::function<double(const Eigen::VectorXd& theta, const Eigen::VectorXd& z)> marginal_loss;

    /// Mean surrogate gradient at theta'=theta over a realized sample
    /// (vectorized per family; this is the first-order EM update direction).
    std::function<Eigen::VectorXd(const Eigen::VectorXd& theta, const Eigen::MatrixXd& Z)> batch_self_grad_mean;
    std::function<double(const Eigen::VectorXd& theta, const Eigen::MatrixXd& Z)> batch_marginal_loss_mean;

    double snr() const { return sigma > 0.0 ? theta_star.norm() / sigma : 0.0; }

    /// n rows, each one encoded observation.
    Eigen::MatrixXd sample(std::uint64_t stream, int n) const;
};

/// Posterior weight of the +theta' component for the two-Gaussian mixture,
/// evaluated through the logistic form 1/(1 + exp(-2 theta'.z / sigma^2)).
/// Never returns exactly 0 or 1, and satisfies
/// gmm2_weight(t, z, s) + gmm2_weight(t, -z, s) == 1 exactly.
double gmm2_weight(const Eigen::VectorXd& theta_prime, const Eigen::VectorXd& z,
                   double sigma);

struct SnrParams {
    double mu2 = 0.0;
    bool admissible = false;
};

/// Gradient-smoothness constant mu2 of the built-in examples as a function of
/// the signal-to-noise ratio eta = ||theta*||/sigma:
/// GMM: c1 (1 + 1/eta^2 + eta^2) exp(-c2 eta^2); MLR: 1/4.
/// `admissible` reports eta >= eta_threshold.
SnrParams snr_parameters(const EMModel& model, double c1 = 1.0, double c2 = 1.0,
                         double eta_threshold = 1.5);

/// First-order EM iteration theta <- theta - alpha * Pn grad loss_theta(theta; z).
/// Default step size is 2/(beta + mu1), which is 1 for both built-in examples.
/// `eval_n` > 0 requests oracle excess-risk tracking on a fixed evaluation
/// set of that size (stream is reserved inside the model's seed space).
/// Non-finite updates or iterates leaving the divergence guard abort with the
/// offending iteration index in the message.
GDTrace first_order_em(const EMModel& model, const Eigen::MatrixXd& Z,
                       const Eigen::VectorXd& theta0, int steps,
                       double step_size = -1.0, int eval_n = 0,
                       double delta = 0.1);

/// Default initialization: uniform on the sphere around theta* of radius
/// ||theta*||/8 (GMM) or ||theta*||/64 (MLR), half the radius the local
/// convergence guarantee asks for.
Eigen::VectorXd em_default_init(const EMModel& model, std::uint64_t stream);

}  // namespace locbound
