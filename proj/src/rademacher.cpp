#include "locbound/rademacher.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "locbound/certificate.hpp"

namespace locbound {

namespace {

constexpr std::uint64_t kSignStream = 0x7369676eULL;
constexpr std::uint64_t kReferenceStream = 0x726566ULL;
constexpr int kReferenceSamples = 1000000;

// Excess-loss columns and the in-ball subset {h : Pn f_h^2 <= 2r}.
struct Localized {
    Eigen::MatrixXd F;          // n x H excess losses
    std::vector<int> in_ball;   // column indices inside the ball
};

Localized localize(const Eigen::MatrixXd& losses, int center, double r) {
    const int n = static_cast<int>(losses.rows());
    const int H = static_cast<int>(losses.cols());
    if (n < 1) throw std::invalid_argument("local_rademacher: empty sample");
    if (center < 0 || center >= H) throw std::invalid_argument("local_rademacher: bad center index");
    if (r < 0.0) throw std::invalid_argument("local_rademacher: r must be >= 0");
    Localized loc;
    loc.F = losses.colwise() - losses.col(center);
    for (int h = 0; h < H; ++h) {
        const double second_moment = loc.F.col(h).squaredNorm() / n;
        if (second_moment <= 2.0 * r + 1e-15) loc.in_ball.push_back(h);
    }
    return loc;
}

double sup_over_ball(const Localized& loc, const Eigen::VectorXd& signs) {
    const int n = static_cast<int>(loc.F.rows());
    double best = 0.0;  // empty-set convention
    bool any = false;
    for (int h : loc.in_ball) {
        const double v = signs.dot(loc.F.col(h)) / n;
        if (!any || v > best) { best = v; any = true; }
    }
    return any ? best : 0.0;
}

}  // namespace

LocalRademacherEstimate local_rademacher_estimate(const Eigen::MatrixXd& losses,
                                                  int center_index, double r,
                                                  int mc_draws, std::uint64_t seed) {
    const Localized loc = localize(losses, center_index, r);
    const int n = static_cast<int>(loc.F.rows());
    LocalRademacherEstimate est;

    if (mc_draws == 0) {
        if (n > 20) throw std::invalid_argument("local_rademacher: exact mode needs n <= 20");
        const std::uint64_t total = 1ULL << n;
        double acc = 0.0;
        Eigen::VectorXd signs(n);
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            for (int i = 0; i < n; ++i) signs[i] = (mask >> i) & 1ULL ? 1.0 : -1.0;
            acc += sup_over_ball(loc, signs);
        }
        est.value = acc / static_cast<double>(total);
        est.se = 0.0;
        return est;
    }
    if (mc_draws < 0) throw std::invalid_argument("local_rademacher: mc_draws must be >= 0");

    rng::CounterRng draws(seed, kSignStream);
    double acc = 0.0, acc2 = 0.0;
    Eigen::VectorXd signs(n);
    for (int j = 0; j < mc_draws; ++j) {
        rng::Substream sub = draws.at(static_cast<std::uint64_t>(j));
        for (int i = 0; i < n; ++i) signs[i] = static_cast<double>(sub.sign());
        const double v = sup_over_ball(loc, signs);
        acc += v;
        acc2 += v * v;
    }
    est.value = acc / mc_draws;
    const double var = std::max(0.0, acc2 / mc_draws - est.value * est.value);
    est.se = std::sqrt(var / mc_draws);
    return est;
}

double local_rademacher(const Eigen::MatrixXd& losses, int center_index, double r,
                        int mc_draws, std::uint64_t seed) {
    return local_rademacher_estimate(losses, center_index, r, mc_draws, seed).value;
}

EmpiricalPsi::EmpiricalPsi(const Eigen::MatrixXd& losses, double B, int center_index,
                           int mc_draws, std::uint64_t seed, bool subroot_hull,
                           int grid_size)
    : n_(static_cast<int>(losses.rows())),
      B_(B),
      cap_R_(4.0 * B * B),
      subroot_hull_(subroot_hull) {
    if (!(B > 0.0)) throw std::invalid_argument("EmpiricalPsi: B must be positive");
    if (grid_size < 8) throw std::invalid_argument("EmpiricalPsi: grid too small");

    Digest dig;
    dig.add(std::string("empirical-psi")).add(losses).add(B);
    dig.add(static_cast<std::uint64_t>(center_index)).add(static_cast<std::uint64_t>(mc_draws));
    dig.add(seed).add(static_cast<std::uint64_t>(subroot_hull ? 1 : 0));
    digest_ = dig.value();

    // r = 0 plus a log-spaced grid reaching cap_R.
    r_grid_.resize(grid_size);
    rn4_grid_.resize(grid_size);
    r_grid_[0] = 0.0;
    const double lo = cap_R_ * 1e-8;
    for (int i = 1; i < grid_size; ++i) {
        const double t = static_cast<double>(i - 1) / (grid_size - 2);
        r_grid_[i] = lo * std::pow(cap_R_ / lo, t);
    }
    r_grid_.back() = cap_R_;

    for (int i = 0; i < grid_size; ++i)
        rn4_grid_[i] = 4.0 * local_rademacher(losses, center_index, r_grid_[i], mc_draws, seed);

    // Monotone hull: R_n is non-decreasing in r; Monte Carlo noise may not be.
    for (int i = 1; i < grid_size; ++i)
        rn4_grid_[i] = std::max(rn4_grid_[i], rn4_grid_[i - 1]);

    if (subroot_hull_) {
        // Least sub-root majorant: make ratio(r) = g(r)/sqrt(r) non-increasing
        // across the nodes by propagating the running sup from the right.
        // Node values stay non-decreasing because the raw ones were.
        double ratio = 0.0;
        for (int i = grid_size - 1; i >= 1; --i) {
            ratio = std::max(ratio, rn4_grid_[i] / std::sqrt(r_grid_[i]));
            rn4_grid_[i] = ratio * std::sqrt(r_grid_[i]);
        }
        for (int i = 1; i < grid_size; ++i)
            rn4_grid_[i] = std::max(rn4_grid_[i], rn4_grid_[0]);
    }
}

double EmpiricalPsi::rademacher_part(double r) const {
    // Interpolation is linear in sqrt(r).  For nodes with non-decreasing
    // values and non-increasing value/sqrt(r) ratios this preserves both
    // properties everywhere, not just at the nodes.
    if (r <= 0.0) return rn4_grid_.front();
    if (r >= r_grid_.back()) return rn4_grid_.back();
    const auto it = std::upper_bound(r_grid_.begin(), r_grid_.end(), r);
    const std::size_t i = static_cast<std::size_t>(it - r_grid_.begin()) - 1;
    const double s = std::sqrt(r);
    const double s0 = std::sqrt(r_grid_[i]);
    const double s1 = std::sqrt(r_grid_[i + 1]);
    const double w = (s - s0) / (s1 - s0);
    return (1.0 - w) * rn4_grid_[i] + w * rn4_grid_[i + 1];
}

double EmpiricalPsi::evaluate(double r, double delta) const {
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("EmpiricalPsi: delta must be in (0,1)");
    if (!(r >= 0.0)) throw std::invalid_argument("EmpiricalPsi: r must be >= 0");
    const double rc = std::min(r, cap_R_);
    const double log8d = std::log(8.0 / delta);
    return rademacher_part(rc) + std::sqrt(2.0 * rc * log8d / n_) + 9.0 * B_ * log8d / n_;
}

Surrogate EmpiricalPsi::as_surrogate() const {
    EmpiricalPsi copy = *this;
    return Surrogate::wrap(
        "empirical",
        [copy](double r, double delta) { return copy.evaluate(r, delta); },
        cap_R_, 1.0, digest_);
}

EmpiricalPsi build_psi(const Eigen::MatrixXd& losses, double B, int center_index,
                       int mc_draws, std::uint64_t seed, bool subroot_hull) {
    return EmpiricalPsi(losses, B, center_index, mc_draws, seed, subroot_hull);
}

PeelingReport validate_peeling(const FiniteLossProblem& problem, const Surrogate& psi,
                               int n, double delta, double r0, int trials,
                               std::uint64_t seed) {
    if (trials < 100) throw std::invalid_argument("validate_peeling: trials must be >= 100 to be meaningful");
    const double B = problem.bound();
    const double R = 4.0 * B * B;
    if (!(r0 > 0.0) || !(r0 <= R)) throw std::invalid_argument("validate_peeling: r0 must be in (0, 4B^2]");
    if (!(delta > 0.0) || !(delta < 1.0)) throw std::invalid_argument("validate_peeling: delta must be in (0,1)");
    if (!problem.optimal_index())
        throw std::invalid_argument("validate_peeling: problem must expose its optimal hypothesis");

    const int H = problem.num_hypotheses();
    const int center = *problem.optimal_index();

    // Distinct stream ids for the reference pass and each trial, derived from
    // the caller's seed so they cannot collide with the data psi was built on.
    Digest ref_id;
    ref_id.add(std::string("peel-reference")).add(seed).add(kReferenceStream);
    auto trial_stream = [seed](int t) {
        Digest d;
        d.add(std::string("peel-trial")).add(seed).add(static_cast<std::uint64_t>(t));
        return d.value();
    };

    // Held-out reference pass: population mean and second moment of each
    // excess loss, streamed so the reference set is never materialized.
    Eigen::VectorXd mean_f = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd sq_f = Eigen::VectorXd::Zero(H);
    for (int i = 0; i < kReferenceSamples; ++i) {
        const Eigen::VectorXd row = problem.sample_row(ref_id.value(),
                                                       static_cast<std::uint64_t>(i));
        const Eigen::VectorXd f = row.array() - row[center];
        mean_f += f;
        sq_f += f.cwiseProduct(f);
    }
    mean_f /= kReferenceSamples;
    sq_f /= kReferenceSamples;

    const double c_r0 = 2.0 * std::log2(2.0 * R / r0);
    const double delta_eff = delta / c_r0;

    // Per-hypothesis thresholds psi(2 T(f) v r0; delta/C_{r0}) are
    // trial-independent; precompute them.
    Eigen::VectorXd threshold(H);
    for (int h = 0; h < H; ++h)
        threshold[h] = psi(std::max(2.0 * sq_f[h], r0), delta_eff);

    int violations = 0;
    for (int t = 0; t < trials; ++t) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(H);
        const std::uint64_t stream = trial_stream(t);
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd row = problem.sample_row(stream, static_cast<std::uint64_t>(i));
            acc += (row.array() - row[center]).matrix();
        }
        acc /= n;
        bool violated = false;
        for (int h = 0; h < H && !violated; ++h)
            violated = (mean_f[h] - acc[h]) > threshold[h];
        if (violated) ++violations;
    }

    PeelingReport report;
    report.trials = trials;
    report.delta = delta;
    report.r0 = r0;
    report.c_r0 = c_r0;
    report.n = n;
    report.violation_rate = static_cast<double>(violations) / trials;
    report.se = std::sqrt(std::max(report.violation_rate * (1.0 - report.violation_rate), 1e-12) / trials);
    return report;
}

}  // namespace locbound
