#pragma once

#include <Eigen/Core>

#include "locbound/certificate.hpp"
#include "locbound/numkit.hpp"

namespace locbound {

/// Empirical risk minimizer over a realized loss matrix (rows = samples,
/// columns = hypotheses); ties break to the lowest index.
int erm(const Eigen::MatrixXd& losses);

/// Empirical effective loss  L^ = Pn[ l(h; z) - inf_H l(.; z) ]  of the given
/// hypothesis (the infimum is per-sample).
double empirical_effective_loss(const Eigen::MatrixXd& losses, int h);

/// Loss-dependent ERM certificate:
///   bound = psi(24 B L^; delta/C) v r*/(6B) v r0/(48B),
/// with r* the fixed point of 6B psi(8r; delta/C).  The default pathway uses
/// C = C_{r0} = 2 log2(8 B^2 / r0) (kind "loss-dependent"); the
/// data-dependent pathway uses C = C_n = 2 log2 n + 6 (kind "data-loss").
Certificate certify_loss_rate(const Eigen::MatrixXd& losses, double B,
                              const Surrogate& psi, double delta, double r0,
                              bool data_dependent = false,
                              double constant_c = 1.0);

struct MPResult {
    int index = 0;
    double l_hat0 = 0.0;  // first-stage ERM value on the auxiliary sample
    double v_hat = 0.0;   // empirical centered second moment of the pick
    Certificate certificate;
};

/// Two-stage moment-penalized estimator.  Stage 1 sets L^0 = inf_H P_{S'} l
/// on the auxiliary sample; stage 2 minimizes
///   Pn l(h;z) + psi(16 Pn[(l(h;z) - L^0)^2]; delta/C_n),   C_n = 2 log2 n + 5,
/// over the primary sample.  psi must be sub-root on [0, 4B^2] (checked on a
/// log grid); samples must have equal sizes.  The certificate is
///   bound = 2 psi(c1 V^; delta/C_n) v c1 r*/(8B),
/// with V^ the pick's own centered second moment, r* the fixed point of
/// B psi(r; delta/C_n), and c1 the constants convention (kind
/// "variance-dependent"; the strict data-dependent pathway is
/// variance_certificate).
MPResult moment_penalized(const Eigen::MatrixXd& primary, const Eigen::MatrixXd& aux,
                          double B, const Surrogate& psi, double delta,
                          double constant_c = 1.0);

struct NMPResult {
    int index = 0;
    double v_hat = 0.0;
    Certificate certificate;
};

/// Negative-moment-penalized variance estimate:
///   h_NMP minimizes Pn l(h;z) - 2 psi(16 Pn[(l(h;z)-L^0)^2]; delta/C_n),
///   V^ = Pn[(l(h_NMP;z) - L^0)^2],
///   bound = 4 psi(16 V^; delta/C_n) v r*/(8B),
/// with r* the fixed point of 16 B psi(r; delta/C_n) (kind "data-variance").
NMPResult variance_certificate(const Eigen::MatrixXd& primary, double B, double l_hat0,
                               const Surrogate& psi, double delta);

}  // namespace locbound
