#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "locbound/certificate.hpp"
#include "locbound/classes.hpp"
#include "locbound/numkit.hpp"
#include "locbound/rng.hpp"

namespace locbound {

/// Structured convex cost with its localized strong-convexity profile alpha(v)
/// and the population-risk smoothness constant beta_sv from the catalogue:
/// square 1/2, huber 1/2, logistic 1/4.
struct CostSpec {
    enum class Kind { square, huber, logistic };
    Kind kind = Kind::square;
    double gamma = 0.0;  // Huber truncation level
    double beta_sv = 0.5;

    static CostSpec square() { return {Kind::square, 0.0, 0.5}; }
    static CostSpec huber(double gamma);
    static CostSpec logistic() { return {Kind::logistic, 0.0, 0.25}; }

    std::string name() const;
    double value(double pred, double y) const;
    double deriv(double pred, double y) const;  // d/dpred
};

/// Localized strong-convexity parameter alpha(v):
/// square -> 1/2; huber -> 1/2 if v <= gamma else 0;
/// logistic -> exp(v+1)/(exp(v+1)+1)^2.
double alpha(const CostSpec& cost, double v);

struct SmallBallEstimate {
    double kappa = 0.0;
    double c_kappa = 0.0;
    int probe_count = 0;
};

/// A samplable hypothesis family for the small-ball probe: draws a hypothesis
/// x -> h(x).
using HypothesisFamily = std::function<std::function<double(const Eigen::VectorXd&)>(rng::Substream&)>;

/// Linear family {x -> theta^T x : ||theta|| <= radius}, thetas drawn uniform
/// on spheres of random radius.
HypothesisFamily linear_family(int dim, double radius);

/// Monte Carlo estimate of the small-ball constants: for each kappa in the
/// grid, c_kappa = min over sampled hypotheses of
/// Prob(|h(x) - h*(x)| >= kappa ||h - h*||_{L2}); returns the grid point
/// maximizing kappa^2 c_kappa.  Requires probes >= 1e4; throws on a family
/// degenerate at h*.
SmallBallEstimate small_ball_estimate(const ConvexCostData& data,
                                      const HypothesisFamily& family,
                                      const std::vector<double>& kappa_grid,
                                      int probes, std::uint64_t seed,
                                      int hypothesis_draws = 32);

/// Fixed-point generalization bound for supervised learning with structured
/// convex cost:
///   fp_noise = fixed point of  4/(c_k k^2 a) * phi_noise(2r; delta/C_{r0}),
///   fp_ver   = fixed point of  8/(c_k k) * sqrt(2r) * phi_ver(2r),
///   a = alpha(4 ||xi||_{L2} / sqrt(c_k)),
///   C_{r0} = 2 + (16/c_k + 2) log(4 Delta^2 / r0),
///   bound = (beta_sv/2) * max(fp_noise, fp_ver, r0).
/// Throws a curvature-vanished error when a = 0 (e.g. Huber with
/// gamma < 4||xi||/sqrt(c_k)).  The certificate records the L2 estimation
/// radius, both fixed points, and the sample-size precondition flags.
Certificate theorem81_bound(const CostSpec& cost, const ConvexCostData& data,
                            const Surrogate& phi_ver, const Surrogate& phi_noise,
                            const SmallBallEstimate& sb, double delta, double r0,
                            std::int64_t n);

struct HuberExpRow {
    std::string cost;
    int n = 0;
    double median_err = 0.0;
    double p95_err = 0.0;
    int trials = 0;
    int failures = 0;  // trials whose optimizer missed the gradient tolerance
};

/// Head-to-head squared-parameter-error comparison of the square and Huber
/// costs on heavy-tailed linear data; the Huber truncation is gamma = 2
/// ||xi||_{L2}.  Square solves the normal equations; Huber runs IRLS to
/// gradient norm <= 1e-8 (misses are flagged per trial, not fatal).
std::vector<HuberExpRow> huber_vs_square_experiment(int d, double dof,
                                                    const std::vector<int>& n_grid,
                                                    int trials, std::uint64_t seed,
                                                    double scale = 1.0,
                                                    int threads = 0);

/// Huber M-estimation by iteratively reweighted least squares.  Returns the
/// estimate; `grad_norm_out` reports the final mean-gradient norm.
Eigen::VectorXd huber_irls(const SampleSet& s, double gamma, int max_iters,
                           double grad_tol, double* grad_norm_out = nullptr);

}  // namespace locbound
