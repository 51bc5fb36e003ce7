#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace locbound {

/// Quantile of an ascending-sorted vector, linear interpolation between
/// order statistics.
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Deterministic parallel loop: fn(i) for i in [0, count).  Results must be
/// written to preallocated slots; the schedule never influences values.
/// threads <= 0 picks LOCBOUND_THREADS from the environment, falling back to
/// the hardware count.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

struct FitLine {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares on (log x, log y).  Needs >= 3 points, all
/// positive.  Constant ys fit slope 0 with r2 = 0 (degenerate-variance
/// convention).
FitLine fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys);

/// Flat key = value experiment configuration.  Lists are comma-separated.
/// '#' starts a comment.  Unknown keys are rejected against the experiment
/// schema at run time.
class ExperimentConfig {
public:
    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_text(const std::string& text);

    const std::string& experiment() const { return experiment_; }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::vector<double> get_real_list(const std::string& key) const;
    std::vector<std::int64_t> get_int_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

private:
    std::string experiment_;
    std::map<std::string, std::string> kv_;
};

struct CellStats {
    std::map<std::string, double> params;  // axis name -> value
    std::string metric;
    double median = 0.0;
    double mean = 0.0;
    double p05 = 0.0;
    double p95 = 0.0;
    double se = 0.0;
    int trials = 0;
    int failures = 0;
};

struct FitResult {
    std::string axis;
    std::string metric;
    std::string group;  // fixed values of the other axes, "" if none
    FitLine line;
};

struct ScalingReport {
    std::vector<CellStats> cells;
    std::vector<FitResult> fits;
    std::string config_echo;  // resolved config, canonical key order
    std::string build_id;
    double wall_seconds = 0.0;

    /// CSV body: header + one row per (cell, metric).  Byte-identical across
    /// reruns of the same config regardless of thread count.
    std::string to_csv() const;
    std::string to_json() const;

    /// Median of a metric at given axis values; throws if absent.
    double cell_median(const std::string& metric,
                       const std::map<std::string, double>& params) const;
    const FitResult& fit_for(const std::string& metric, const std::string& axis,
                             const std::string& group = "") const;
};

/// Execute a configured experiment: trials x sweep cells with counter-based
/// per-cell-per-trial seeds, deterministic aggregation, and log-log slope
/// fits across each swept axis with >= 3 points.  Known experiments:
/// stub-powerlaw, mp-vs-erm, gd-sigmoid, em-gmm, em-mlr, huber-vs-square.
/// Per-trial failures are excluded and counted; more than 1% failed trials
/// aborts.  Throws std::invalid_argument on schema violations.
ScalingReport run_experiment(const ExperimentConfig& config, int threads = 0);

/// Names of the known experiments (for CLI help/validation).
std::vector<std::string> experiment_names();

}  // namespace locbound
