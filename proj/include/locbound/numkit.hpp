#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace locbound {

/// Result of the monotone fixed-point search sup{r > 0 : r <= phi(r)}.
struct FixedPointResult {
    double r_star = 0.0;
    int iterations = 0;
    double bracket_width = 0.0;
};

/// Largest r in [0, domain_hi] with r <= phi(r), for phi non-decreasing,
/// non-negative and bounded.  sup of the empty set is 0.  The search scans a
/// log-spaced probe grid (4096 points) from domain_hi downward and bisects the
/// bracketing interval, which keeps step discontinuities from being jumped
/// over silently.
///
/// Throws std::invalid_argument on domain_hi <= 0, tol <= 0, or when phi is
/// detected to decrease by more than tol on the probe grid.
FixedPointResult fixed_point(const std::function<double(double)>& phi,
                             double domain_hi, double tol);

/// True iff phi(r)/sqrt(r) is non-increasing across the grid, within the
/// given relative tolerance.  Grid must be non-empty, positive and strictly
/// increasing.
bool is_sub_root(const std::function<double(double)>& phi,
                 const std::vector<double>& grid, double rel_tol = 1e-9);

/// Dudley's entropy integral bound:
///   inf over eps0 in [0, sqrt(r)] of { 4*eps0 + 12*int_{eps0}^{sqrt(r)} sqrt(entropy(eps)/n) deps }.
/// `entropy` is the metric entropy eps -> log N(eps); it must be non-increasing
/// and may diverge as eps -> 0 (integrable singularities are handled).
/// Quadrature is adaptive Simpson at 1e-6 relative tolerance; the outer
/// minimisation is golden-section (the objective is convex since the
/// integrand is non-increasing).
double dudley_bound(const std::function<double(double)>& entropy,
                    double r, std::int64_t n);

/// Sub-optimality ratio between the previous-best and the new
/// variance-dependent rates for nonparametric classes of polynomial growth:
///   max(1, (V * (n/B^2)^{1/(1+rho)})^{rho/2}).
double suboptimality_ratio(double V, double B, std::int64_t n, double rho);

/// A surrogate function psi(r; delta): non-decreasing, non-negative and
/// bounded in r for each fixed delta.  Evaluation beyond cap_R returns the
/// value at cap_R (the localized set saturates there).
///
/// Built-in kinds:
///   nonparametric(rho) : c * sqrt(r^{1-rho} / n)
///   vc(d, B)           : c * max(sqrt(d r log(8B^2/r) / n), B d log(8B^2/r) / n),
///                        log factor clamped at r = B^2 d / n and the whole
///                        curve monotone-hulled so it is non-decreasing
///   parametric(d)      : c * sqrt(d r / n)
///   user table         : bilinear interpolation of a (r, delta) grid
///   wrapped            : adapter around an arbitrary callable (used for the
///                        empirically estimated psi from the rademacher module)
class Surrogate {
public:
    static Surrogate nonparametric(double rho, std::int64_t n,
                                   double constant_c = 1.0, double cap_R = 4.0);
    static Surrogate vc(int d, double B, std::int64_t n, double constant_c = 1.0);
    static Surrogate parametric(int d, std::int64_t n,
                                double constant_c = 1.0, double cap_R = 4.0);
    static Surrogate user_table(std::vector<double> r_grid,
                                std::vector<double> delta_grid,
                                std::vector<std::vector<double>> values,
                                double cap_R);
    static Surrogate wrap(std::string kind,
                          std::function<double(double, double)> fn,
                          double cap_R, double constant_c = 1.0,
                          std::uint64_t digest = 0);

    /// Evaluate psi(min(r, cap_R); delta).  delta must lie in (0,1).
    double operator()(double r, double delta) const;

    const std::string& kind() const { return kind_; }
    double cap() const { return cap_R_; }
    double constant_c() const { return constant_c_; }
    std::uint64_t digest() const { return digest_; }

private:
    Surrogate() = default;
    std::string kind_;
    std::function<double(double, double)> fn_;
    double cap_R_ = 4.0;
    double constant_c_ = 1.0;
    std::uint64_t digest_ = 0;
};

/// Parse "nonparametric:0.5", "vc:8", "parametric:3" into a Surrogate for a
/// problem with the given bound B and sample size n.  Used by the CLI.
Surrogate parse_surrogate(const std::string& text, double B, std::int64_t n,
                          double constant_c = 1.0);

}  // namespace locbound
