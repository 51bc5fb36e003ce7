#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "locbound/classes.hpp"
#include "locbound/numkit.hpp"
#include "locbound/rng.hpp"

namespace locbound {

/// Localized empirical Rademacher complexity of the excess loss class of a
/// finite problem:  E_v sup over {h : Pn[(l(h)-l(center))^2] <= 2r} of
/// (1/n) sum_i v_i (l(h; z_i) - l(center; z_i)).
///
/// `losses` is the realized n x H loss matrix.  mc_draws > 0 averages over
/// that many sign vectors; mc_draws == 0 enumerates all 2^n sign vectors
/// exactly (n <= 20 enforced).  The supremum over an empty localized set is 0
/// (the zero function of the center is always in the class, so the set is
/// never empty for a valid center, but the convention is kept explicit).
double local_rademacher(const Eigen::MatrixXd& losses, int center_index, double r,
                        int mc_draws, std::uint64_t seed);

/// Monte Carlo standard error companion to local_rademacher (0 in exact mode).
struct LocalRademacherEstimate {
    double value = 0.0;
    double se = 0.0;
};
LocalRademacherEstimate local_rademacher_estimate(const Eigen::MatrixXd& losses,
                                                  int center_index, double r,
                                                  int mc_draws, std::uint64_t seed);

/// Concrete surrogate for the moment-penalized machinery:
///   psi(r; delta) = 4 R_n{f: Pn f^2 <= 2r} + sqrt(2 r log(8/delta) / n)
///                   + 9 B log(8/delta) / n.
/// The Rademacher part is memoized on a log-spaced r grid, monotone-hulled,
/// and (by default) replaced by its least sub-root majorant
///   psi~(r) = sqrt(r) * sup_{s >= r} psi(s)/sqrt(s),
/// which still dominates the recipe pointwise and is what the sub-root
/// precondition of the second-stage estimator consumes.  For a singleton
/// class both hulls are identities and evaluate() equals the formula exactly.
class EmpiricalPsi {
public:
    EmpiricalPsi(const Eigen::MatrixXd& losses, double B, int center_index,
                 int mc_draws, std::uint64_t seed, bool subroot_hull = true,
                 int grid_size = 96);

    /// delta must be in (0,1); non-decreasing in r and in 1/delta.
    double evaluate(double r, double delta) const;

    double bound() const { return B_; }
    int sample_size() const { return n_; }
    double cap() const { return cap_R_; }
    std::uint64_t digest() const { return digest_; }
    bool subroot_hulled() const { return subroot_hull_; }

    /// Wrap as a numkit Surrogate (kind "empirical").
    Surrogate as_surrogate() const;

private:
    double rademacher_part(double r) const;

    int n_ = 0;
    double B_ = 0.0;
    double cap_R_ = 0.0;
    bool subroot_hull_ = true;
    std::uint64_t digest_ = 0;
    std::vector<double> r_grid_;    // ascending, r_grid_[0] == 0
    std::vector<double> rn4_grid_;  // 4 * R_n at the grid points, hulled
};

EmpiricalPsi build_psi(const Eigen::MatrixXd& losses, double B, int center_index,
                       int mc_draws, std::uint64_t seed, bool subroot_hull = true);

struct PeelingReport {
    double violation_rate = 0.0;
    double se = 0.0;
    int trials = 0;
    double delta = 0.0;
    double r0 = 0.0;
    double c_r0 = 0.0;
    int n = 0;
};

/// Monte Carlo check of the peeling argument: fraction of independent
/// dataset draws (size n each) on which some hypothesis violates
///   (P - Pn) f <= psi(2 T(f) v r0; delta / C_{r0}),
/// with C_{r0} = 2 log2(2R/r0), R = 4B^2, f the excess loss against the
/// problem's optimal hypothesis, and T(f) = P[f^2] estimated once on a
/// held-out reference set of 1e6 samples.  Requires trials >= 100.
PeelingReport validate_peeling(const FiniteLossProblem& problem, const Surrogate& psi,
                               int n, double delta, double r0, int trials,
                               std::uint64_t seed);

}  // namespace locbound
