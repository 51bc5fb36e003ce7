#include "locbound/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace locbound {

namespace {

constexpr int kProbeGridSize = 4096;

// Log-spaced grid over [lo, hi], ascending, endpoints included.
std::vector<double> log_grid(double lo, double hi, int count) {
    std::vector<double> g(count);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / (count - 1);
        g[i] = std::exp(llo + t * (lhi - llo));
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

}  // namespace

FixedPointResult fixed_point(const std::function<double(double)>& phi,
                             double domain_hi, double tol) {
    if (!(domain_hi > 0.0)) throw std::invalid_argument("fixed_point: domain_hi must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("fixed_point: tol must be positive");

    const double grid_lo = std::min(tol, domain_hi) * 0.5;
    const std::vector<double> grid = log_grid(grid_lo, domain_hi, kProbeGridSize);

    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = phi(grid[i]);
        if (!std::isfinite(v)) throw std::invalid_argument("fixed_point: phi returned a non-finite value");
        if (v < 0.0) throw std::invalid_argument("fixed_point: phi must be non-negative");
        vals[i] = v;
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (vals[i] < vals[i - 1] - tol)
            throw std::invalid_argument("fixed_point: phi is not non-decreasing on the probe grid");
    }

    FixedPointResult res;

    // Scan from the top for the largest grid point still inside {r <= phi(r)}.
    std::size_t hit = grid.size();
    for (std::size_t i = grid.size(); i-- > 0;) {
        if (grid[i] <= vals[i]) { hit = i; break; }
    }
    if (hit == grid.size()) {
        res.r_star = 0.0;
        res.bracket_width = grid_lo;
        return res;
    }
    if (hit + 1 == grid.size()) {
        // phi(domain_hi) >= domain_hi: the sup is clipped at the domain edge.
        res.r_star = domain_hi;
        return res;
    }

    double lo = grid[hit];       // lo <= phi(lo)
    double hi = grid[hit + 1];   // hi >  phi(hi)
    int it = 0;
    while (hi - lo > tol && it < 200) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= phi(mid)) lo = mid; else hi = mid;
        ++it;
    }
    res.r_star = lo;
    res.iterations = it;
    res.bracket_width = hi - lo;
    return res;
}

bool is_sub_root(const std::function<double(double)>& phi,
                 const std::vector<double>& grid, double rel_tol) {
    if (grid.empty()) throw std::invalid_argument("is_sub_root: empty grid");
    double prev_ratio = std::numeric_limits<double>::infinity();
    double prev_r = 0.0;
    for (double r : grid) {
        if (!(r > 0.0)) throw std::invalid_argument("is_sub_root: grid values must be positive");
        if (r <= prev_r) throw std::invalid_argument("is_sub_root: grid must be strictly increasing");
        const double ratio = phi(r) / std::sqrt(r);
        if (ratio > prev_ratio * (1.0 + rel_tol) + rel_tol) return false;
        prev_ratio = ratio;
        prev_r = r;
    }
    return true;
}

namespace {

// Integrand guard: nudge the evaluation point away from 0 so integrable
// entropy singularities (e.g. d*log(1/eps)) do not produce inf at the node.
double entropy_integrand(const std::function<double(double)>& entropy,
                         double eps, double eps_floor, std::int64_t n) {
    const double e = std::max(eps, eps_floor);
    const double h = entropy(e);
    if (!std::isfinite(h) || h < 0.0)
        throw std::invalid_argument("dudley_bound: entropy must be finite and non-negative");
    return std::sqrt(h / static_cast<double>(n));
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole,
                        double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    if (b <= a) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double tol = std::max(std::abs(whole), 1e-30) * rel_tol;
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double dudley_bound(const std::function<double(double)>& entropy,
                    double r, std::int64_t n) {
    if (!(r > 0.0)) throw std::invalid_argument("dudley_bound: r must be positive");
    if (n < 1) throw std::invalid_argument("dudley_bound: n must be >= 1");

    const double sr = std::sqrt(r);
    const double eps_floor = sr * 1e-12;
    auto g = [&](double eps) { return entropy_integrand(entropy, eps, eps_floor, n); };

    auto objective = [&](double eps0) {
        return 4.0 * eps0 + 12.0 * integrate(g, eps0, sr, 1e-6);
    };

    // Golden-section over eps0 in [0, sqrt(r)]; the objective is convex
    // because its derivative 4 - 12*g(eps0) is non-decreasing.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = sr;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    while (b - a > 1e-9 * sr) {
        if (f1 <= f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a); f1 = objective(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a); f2 = objective(x2);
        }
    }
    const double interior = std::min(f1, f2);
    return std::min({interior, objective(0.0), objective(sr)});
}

double suboptimality_ratio(double V, double B, std::int64_t n, double rho) {
    if (!(V >= 0.0) || !std::isfinite(V)) throw std::invalid_argument("suboptimality_ratio: V must be finite and >= 0");
    if (!(B > 0.0)) throw std::invalid_argument("suboptimality_ratio: B must be positive");
    if (n < 1) throw std::invalid_argument("suboptimality_ratio: n must be >= 1");
    if (!(rho > 0.0) || !(rho <= 1.0)) throw std::invalid_argument("suboptimality_ratio: rho must be in (0, 1]");
    const double x = V * std::pow(static_cast<double>(n) / (B * B), 1.0 / (1.0 + rho));
    return std::max(1.0, std::pow(x, 0.5 * rho));
}

Surrogate Surrogate::nonparametric(double rho, std::int64_t n,
                                   double constant_c, double cap_R) {
    if (!(rho > 0.0) || !(rho < 1.0)) throw std::invalid_argument("Surrogate: rho must be in (0,1)");
    if (n < 1) throw std::invalid_argument("Surrogate: n must be >= 1");
    Surrogate s;
    s.kind_ = "nonparametric";
    s.cap_R_ = cap_R;
    s.constant_c_ = constant_c;
    const double nn = static_cast<double>(n);
    s.fn_ = [rho, nn, constant_c](double r, double) {
        return constant_c * std::sqrt(std::pow(r, 1.0 - rho) / nn);
    };
    return s;
}

Surrogate Surrogate::vc(int d, double B, std::int64_t n, double constant_c) {
    if (d < 1) throw std::invalid_argument("Surrogate: d must be >= 1");
    if (!(B > 0.0)) throw std::invalid_argument("Surrogate: B must be positive");
    if (n < 1) throw std::invalid_argument("Surrogate: n must be >= 1");
    Surrogate s;
    s.kind_ = "vc";
    s.cap_R_ = 4.0 * B * B;
    s.constant_c_ = constant_c;
    const double nn = static_cast<double>(n);
    const double r_floor = B * B * d / nn;
    // r log(8B^2/r) peaks at r = 8B^2/e; freeze the curve there so the
    // surrogate stays non-decreasing up to the cap.
    const double r_peak = 8.0 * B * B / std::exp(1.0);
    s.fn_ = [d, B, nn, constant_c, r_floor, r_peak](double r, double) {
        // The raw VC form is also decreasing for tiny r via its log factor;
        // clamp the log argument at the localization floor B^2 d / n.
        auto raw = [&](double rr) {
            const double lg = std::log(8.0 * B * B / std::max(rr, r_floor));
            const double root = std::sqrt(d * rr * lg / nn);
            const double lin = B * d * lg / nn;
            return constant_c * std::max(root, lin);
        };
        if (r <= r_floor) return raw(r_floor) * std::sqrt(std::max(r, 0.0) / r_floor);
        return std::max(raw(std::min(r, r_peak)), raw(r_floor));
    };
    return s;
}

Surrogate Surrogate::parametric(int d, std::int64_t n,
                                double constant_c, double cap_R) {
    if (d < 1) throw std::invalid_argument("Surrogate: d must be >= 1");
    if (n < 1) throw std::invalid_argument("Surrogate: n must be >= 1");
    Surrogate s;
    s.kind_ = "parametric";
    s.cap_R_ = cap_R;
    s.constant_c_ = constant_c;
    const double nn = static_cast<double>(n);
    s.fn_ = [d, nn, constant_c](double r, double) {
        return constant_c * std::sqrt(d * r / nn);
    };
    return s;
}

Surrogate Surrogate::user_table(std::vector<double> r_grid,
                                std::vector<double> delta_grid,
                                std::vector<std::vector<double>> values,
                                double cap_R) {
    if (r_grid.size() < 2 || delta_grid.empty())
        throw std::invalid_argument("Surrogate: user table needs >= 2 r points and >= 1 delta point");
    if (values.size() != r_grid.size())
        throw std::invalid_argument("Surrogate: table rows must match r grid");
    for (const auto& row : values)
        if (row.size() != delta_grid.size())
            throw std::invalid_argument("Surrogate: table columns must match delta grid");
    for (std::size_t i = 1; i < r_grid.size(); ++i)
        if (r_grid[i] <= r_grid[i - 1])
            throw std::invalid_argument("Surrogate: r grid must be strictly increasing");
    // Monotone hull along r for every delta column.
    for (std::size_t j = 0; j < delta_grid.size(); ++j)
        for (std::size_t i = 1; i < values.size(); ++i)
            values[i][j] = std::max(values[i][j], values[i - 1][j]);

    Surrogate s;
    s.kind_ = "user";
    s.cap_R_ = cap_R;
    s.fn_ = [r_grid = std::move(r_grid), delta_grid = std::move(delta_grid),
             values = std::move(values)](double r, double delta) {
        auto interp1 = [](const std::vector<double>& xs, double x) {
            // clamped linear interpolation indices/weight
            if (x <= xs.front()) return std::pair<std::size_t, double>{0, 0.0};
            if (x >= xs.back()) return std::pair<std::size_t, double>{xs.size() - 2, 1.0};
            std::size_t i = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin() - 1;
            const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
            return std::pair<std::size_t, double>{i, w};
        };
        const auto [ri, rw] = interp1(r_grid, r);
        if (delta_grid.size() == 1) {
            return (1.0 - rw) * values[ri][0] + rw * values[ri + 1][0];
        }
        const auto [di, dw] = interp1(delta_grid, delta);
        const double lo = (1.0 - rw) * values[ri][di] + rw * values[ri + 1][di];
        const double hi = (1.0 - rw) * values[ri][di + 1] + rw * values[ri + 1][di + 1];
        return (1.0 - dw) * lo + dw * hi;
    };
    return s;
}

Surrogate Surrogate::wrap(std::string kind,
                          std::function<double(double, double)> fn,
                          double cap_R, double constant_c, std::uint64_t digest) {
    Surrogate s;
    s.kind_ = std::move(kind);
    s.fn_ = std::move(fn);
    s.cap_R_ = cap_R;
    s.constant_c_ = constant_c;
    s.digest_ = digest;
    return s;
}

double Surrogate::operator()(double r, double delta) const {
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("Surrogate: delta must be in (0,1)");
    if (!(r >= 0.0)) throw std::invalid_argument("Surrogate: r must be >= 0");
    const double v = fn_(std::min(r, cap_R_), delta);
    if (!std::isfinite(v) || v < 0.0)
        throw std::runtime_error("Surrogate: evaluation produced an invalid value");
    return v;
}

Surrogate parse_surrogate(const std::string& text, double B, std::int64_t n,
                          double constant_c) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "nonparametric") {
        if (arg.empty()) throw std::invalid_argument("psi nonparametric:RHO requires rho");
        return Surrogate::nonparametric(std::stod(arg), n, constant_c, 4.0 * B * B);
    }
    if (head == "vc") {
        if (arg.empty()) throw std::invalid_argument("psi vc:D requires d");
        return Surrogate::vc(std::stoi(arg), B, n, constant_c);
    }
    if (head == "parametric") {
        if (arg.empty()) throw std::invalid_argument("psi parametric:D requires d");
        return Surrogate::parametric(std::stoi(arg), n, constant_c, 4.0 * B * B);
    }
    throw std::invalid_argument("unknown surrogate spec: " + text);
}

}  // namespace locbound
