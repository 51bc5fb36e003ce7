#pragma once

#include <vector>

#include <Eigen/Core>

namespace locbound {

/// Iterate-level record of a gradient-descent or first-order-EM run.
/// Entry 0 is the initial point.  `population_excess` is oracle-evaluated on
/// a fixed evaluation set and empty when no evaluation set was requested;
/// `param_error` is ||theta_t - theta*||.
struct GDTrace {
    std::vector<Eigen::VectorXd> iterates;
    std::vector<double> empirical_grad_norms;
    std::vector<double> population_excess;
    std::vector<double> param_error;
    double step_size = 0.0;
    double stat_error_prediction = 0.0;
};

}  // namespace locbound
