#include "locbound/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace locbound {

namespace {

constexpr double kFixedPointTol = 1e-12;

int argmin_with_tie_to_lowest(const Eigen::VectorXd& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v[i] < v[best]) best = i;
    return best;
}

// phi is constant once its psi argument saturates the cap, so any r above
// max(cap, phi_max) satisfies r > phi(r); searching up to that level keeps
// the fixed point exact instead of clipping it at 4B^2.
double fp_domain(double cap, double phi_at_cap) {
    return std::max(cap, phi_at_cap * (1.0 + 1e-9)) + 1e-300;
}

// Sequential per-column mean.  Eigen's vectorized reductions can sum equal
// columns in different orders depending on alignment, which would break the
// exact-tie rule; a plain loop keeps identical columns bit-identical.
double column_mean(const Eigen::MatrixXd& m, int h) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) acc += m(i, h);
    return acc / static_cast<double>(m.rows());
}

std::vector<double> subroot_check_grid(double cap) {
    std::vector<double> grid;
    const double lo = cap * 1e-9;
    for (int i = 0; i < 64; ++i)
        grid.push_back(lo * std::pow(cap / lo, static_cast<double>(i) / 63.0));
    grid.back() = cap;
    return grid;
}

std::uint64_t data_digest(const Eigen::MatrixXd& m, const Surrogate& psi,
                          double delta, double r0) {
    Digest d;
    d.add(m).add(psi.kind()).add(psi.constant_c()).add(psi.digest()).add(delta).add(r0);
    return d.value();
}

}  // namespace

int erm(const Eigen::MatrixXd& losses) {
    if (losses.rows() < 1 || losses.cols() < 1)
        throw std::invalid_argument("erm: empty loss matrix");
    Eigen::VectorXd means(losses.cols());
    for (int h = 0; h < losses.cols(); ++h) means[h] = column_mean(losses, h);
    return argmin_with_tie_to_lowest(means);
}

double empirical_effective_loss(const Eigen::MatrixXd& losses, int h) {
    if (h < 0 || h >= losses.cols()) throw std::invalid_argument("empirical_effective_loss: bad index");
    const Eigen::VectorXd row_min = losses.rowwise().minCoeff();
    return (losses.col(h) - row_min).mean();
}

Certificate certify_loss_rate(const Eigen::MatrixXd& losses, double B,
                              const Surrogate& psi, double delta, double r0,
                              bool data_dependent, double constant_c) {
    if (!(B > 0.0)) throw std::invalid_argument("certify_loss_rate: B must be positive");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("certify_loss_rate: delta must be in (0,1)");
    if (!(r0 > 0.0) || !(r0 < 4.0 * B * B))
        throw std::invalid_argument("certify_loss_rate: r0 must be in (0, 4B^2)");

    const int n = static_cast<int>(losses.rows());
    const int h = erm(losses);
    const double l_hat = empirical_effective_loss(losses, h);

    const double c_peeling = data_dependent
                                 ? 2.0 * std::log2(static_cast<double>(n)) + 6.0
                                 : 2.0 * std::log2(8.0 * B * B / r0);
    const double delta_eff = delta / c_peeling;

    auto phi_loss = [&](double r) { return constant_c * 6.0 * B * psi(8.0 * r, delta_eff); };
    const auto fp = fixed_point(phi_loss, fp_domain(4.0 * B * B, phi_loss(4.0 * B * B)),
                                kFixedPointTol);

    const double arg = constant_c * 24.0 * B * l_hat;
    const double psi_term = psi(arg, delta_eff);
    const double bound = std::max({psi_term, fp.r_star / (6.0 * B), r0 / (48.0 * B)});

    Certificate cert;
    cert.bound = bound;
    cert.delta = delta;
    cert.kind = data_dependent ? "data-loss" : "loss-dependent";
    cert.c_peeling = c_peeling;
    cert.c_label = data_dependent ? "C_n" : "C_r0";
    cert.constant_c = constant_c;
    cert.r0 = r0;
    cert.r_star = fp.r_star;
    cert.psi_kind = psi.kind();
    cert.extras["erm_index"] = h;
    cert.extras["l_hat"] = l_hat;
    cert.extras["psi_argument"] = arg;
    cert.extras["psi_term"] = psi_term;
    cert.extras["n"] = n;
    cert.inputs_digest = data_digest(losses, psi, delta, r0);
    return cert;
}

MPResult moment_penalized(const Eigen::MatrixXd& primary, const Eigen::MatrixXd& aux,
                          double B, const Surrogate& psi, double delta,
                          double constant_c) {
    if (primary.rows() != aux.rows() || primary.cols() != aux.cols())
        throw std::invalid_argument("moment_penalized: primary and auxiliary samples must have equal shape");
    if (primary.rows() < 1) throw std::invalid_argument("moment_penalized: empty sample");
    if (!(B > 0.0)) throw std::invalid_argument("moment_penalized: B must be positive");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("moment_penalized: delta must be in (0,1)");

    const int n = static_cast<int>(primary.rows());
    const int H = static_cast<int>(primary.cols());
    const double cap = 4.0 * B * B;
    const double c_n = 2.0 * std::log2(static_cast<double>(n)) + 5.0;
    const double delta_eff = delta / c_n;

    if (!is_sub_root([&](double r) { return psi(r, delta_eff); }, subroot_check_grid(cap)))
        throw std::invalid_argument("moment_penalized: psi is not sub-root on [0, 4B^2]");

    // Stage 1: preliminary estimate of the optimal risk on the auxiliary set.
    double l_hat0 = column_mean(aux, 0);
    for (int h = 1; h < H; ++h) l_hat0 = std::min(l_hat0, column_mean(aux, h));

    // Stage 2: penalized minimization on the primary set.
    Eigen::VectorXd objective(H);
    Eigen::VectorXd second_moment(H);
    for (int h = 0; h < H; ++h) {
        double sq = 0.0;
        for (Eigen::Index i = 0; i < primary.rows(); ++i) {
            const double c = primary(i, h) - l_hat0;
            sq += c * c;
        }
        second_moment[h] = sq / static_cast<double>(primary.rows());
        objective[h] = column_mean(primary, h) + psi(16.0 * second_moment[h], delta_eff);
    }
    const int pick = argmin_with_tie_to_lowest(objective);

    auto phi_var = [&](double r) { return B * psi(r, delta_eff); };
    const auto fp = fixed_point(phi_var, fp_domain(cap, phi_var(cap)), kFixedPointTol);

    MPResult res;
    res.index = pick;
    res.l_hat0 = l_hat0;
    res.v_hat = second_moment[pick];

    const double arg = constant_c * res.v_hat;
    const double bound = std::max(2.0 * psi(arg, delta_eff),
                                  constant_c * fp.r_star / (8.0 * B));
    Certificate cert;
    cert.bound = bound;
    cert.delta = delta;
    cert.kind = "variance-dependent";
    cert.c_peeling = c_n;
    cert.c_label = "C_n";
    cert.constant_c = constant_c;
    cert.r0 = 0.0;
    cert.r_star = fp.r_star;
    cert.psi_kind = psi.kind();
    cert.extras["mp_index"] = pick;
    cert.extras["l_hat0"] = l_hat0;
    cert.extras["v_hat"] = res.v_hat;
    cert.extras["psi_argument"] = arg;
    cert.extras["n"] = n;
    Digest d;
    d.add(primary).add(aux).add(psi.kind()).add(psi.digest()).add(delta);
    cert.inputs_digest = d.value();
    res.certificate = cert;
    return res;
}

NMPResult variance_certificate(const Eigen::MatrixXd& primary, double B, double l_hat0,
                               const Surrogate& psi, double delta) {
    if (primary.rows() < 1) throw std::invalid_argument("variance_certificate: empty sample");
    if (!(B > 0.0)) throw std::invalid_argument("variance_certificate: B must be positive");
    if (!(l_hat0 >= -B) || !(l_hat0 <= B))
        throw std::invalid_argument("variance_certificate: L^0 must lie in [-B, B]");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("variance_certificate: delta must be in (0,1)");

    const int n = static_cast<int>(primary.rows());
    const int H = static_cast<int>(primary.cols());
    const double c_n = 2.0 * std::log2(static_cast<double>(n)) + 5.0;
    const double delta_eff = delta / c_n;

    Eigen::VectorXd objective(H);
    Eigen::VectorXd second_moment(H);
    for (int h = 0; h < H; ++h) {
        double sq = 0.0;
        for (Eigen::Index i = 0; i < primary.rows(); ++i) {
            const double c = primary(i, h) - l_hat0;
            sq += c * c;
        }
        second_moment[h] = sq / static_cast<double>(primary.rows());
        objective[h] = column_mean(primary, h) - 2.0 * psi(16.0 * second_moment[h], delta_eff);
    }
    const int pick = argmin_with_tie_to_lowest(objective);

    auto phi_nmp = [&](double r) { return 16.0 * B * psi(r, delta_eff); };
    const auto fp = fixed_point(phi_nmp, fp_domain(4.0 * B * B, phi_nmp(4.0 * B * B)),
                                kFixedPointTol);

    NMPResult res;
    res.index = pick;
    res.v_hat = second_moment[pick];

    Certificate cert;
    cert.bound = std::max(4.0 * psi(16.0 * res.v_hat, delta_eff), fp.r_star / (8.0 * B));
    cert.delta = delta;
    cert.kind = "data-variance";
    cert.c_peeling = c_n;
    cert.c_label = "C_n";
    cert.constant_c = 1.0;
    cert.r0 = 0.0;
    cert.r_star = fp.r_star;
    cert.psi_kind = psi.kind();
    cert.extras["nmp_index"] = pick;
    cert.extras["l_hat0"] = l_hat0;
    cert.extras["v_hat"] = res.v_hat;
    cert.extras["n"] = n;
    Digest d;
    d.add(primary).add(psi.kind()).add(psi.digest()).add(delta).add(l_hat0);
    cert.inputs_digest = d.value();
    res.certificate = cert;
    return res;
}

}  // namespace locbound
