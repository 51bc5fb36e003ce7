#pragma once

#include <optional>
#include <vector>

#include "locbound/classes.hpp"
#include "locbound/trace.hpp"

namespace locbound {

/// Fixed-step gradient descent theta <- theta - alpha * Pn grad loss(theta; z).
/// Default step size is 1/beta.  Oracle excess risk is tracked on a fixed
/// 1e5-sample evaluation set (override via eval_n; 0 disables tracking).
/// The trace carries the statistical-error prediction
///   16 P[||grad l(theta*;z)||^2] log(4/delta) / (mu n)
///     + (8 G*^2 log^2(4/delta) + mu^2) / (mu n^2)
/// with the population quantity estimated on the evaluation set.
/// Non-finite gradients or iterates drifting past 10*Delta_M from theta*
/// abort with the offending iteration index.
GDTrace gradient_descent(const SmoothParametricModel& model, const SampleSet& sample,
                         const Eigen::VectorXd& theta0, int steps,
                         std::optional<double> step_size = std::nullopt,
                         double delta = 0.1, int eval_n = 100000);

/// Empirical stationarity criterion:
///   ||Pn grad l(theta;z)|| <= sqrt(2 P[||grad l(theta*;z)||^2] log(4/delta) / n)
///                               + G* log(4/delta) / n,
/// with the population term estimated on the oracle evaluation set.  Only
/// available for synthetic models with known theta*.
bool stationary_point_check(const SmoothParametricModel& model, const SampleSet& sample,
                            const Eigen::VectorXd& theta, double delta,
                            int eval_n = 100000);

struct DiagnosticRow {
    double distance = 0.0;  // ||theta - theta*||
    double lhs = 0.0;       // ||(Phat - Pn)(grad l(theta) - grad l(theta*))||
    double rhs = 0.0;       // localized envelope
};

struct DiagnosticReport {
    std::vector<DiagnosticRow> rows;
    double satisfied_fraction = 0.0;
};

/// Localized gradient-concentration diagnostic: for each probe theta,
/// compares the empirical deviation of the centered gradient against the
/// envelope c * beta * max(||theta - theta*||, 1/n) *
/// (sqrt((d + L)/n) + (d + L)/n), L = log(4 log2(2 n Delta_M + 2) / delta).
DiagnosticReport localized_gradient_diagnostic(const SmoothParametricModel& model,
                                               const SampleSet& sample,
                                               const std::vector<Eigen::VectorXd>& probes,
                                               double delta, double constant_c = 1.0,
                                               int eval_n = 100000);

}  // namespace locbound
