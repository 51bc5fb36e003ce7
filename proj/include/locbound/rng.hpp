#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>

namespace locbound {

/// Counter-based random number generation.
///
/// Every random quantity in the library is addressed as (seed, stream, index):
/// `stream` identifies a logical consumer (a trial, a Rademacher draw, the
/// evaluation set, ...) and `index` the item within it.  Sub-generators for
/// distinct indices are independent, so results do not depend on evaluation
/// order or on how work is split across threads.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Sequential generator for one (seed, stream, index) cell.
class Substream {
public:
    explicit Substream(std::uint64_t state) : state_(state) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Rademacher sign, +1 or -1 with equal probability.
    int sign() { return (next_u64() & 1u) ? 1 : -1; }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller (uses two uniforms, no cached state).
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    Eigen::VectorXd normal_vector(int d) {
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) v[i] = normal();
        return v;
    }

    Eigen::VectorXd uniform_vector(int d, double lo, double hi) {
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) v[i] = uniform(lo, hi);
        return v;
    }

    /// Uniform point on the sphere of the given radius.
    Eigen::VectorXd sphere(int d, double radius) {
        Eigen::VectorXd v = normal_vector(d);
        double nrm = v.norm();
        while (nrm == 0.0) {  // essentially impossible, but keep the contract
            v = normal_vector(d);
            nrm = v.norm();
        }
        return v * (radius / nrm);
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang; rejection consumes a variable
    /// number of draws, which is fine inside a dedicated substream.
    double gamma(double shape) {
        if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be positive");
        if (shape < 1.0) {
            const double u = uniform01();
            return gamma(shape + 1.0) * std::pow(u > 0 ? u : 1e-300, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Student-t with `dof` degrees of freedom (any real dof > 0).
    double student_t(double dof) {
        const double z = normal();
        const double g = gamma(0.5 * dof);
        return z / std::sqrt(2.0 * g / dof);
    }

private:
    std::uint64_t state_;
};

/// Factory of substreams: a pure function of (seed, stream, index).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    Substream at(std::uint64_t index) const {
        std::uint64_t s = seed_;
        (void)splitmix64(s);
        s ^= 0x6a09e667f3bcc908ULL + stream_;
        (void)splitmix64(s);
        s ^= 0xbb67ae8584caa73bULL + index;
        (void)splitmix64(s);
        return Substream(s);
    }

    CounterRng fork(std::uint64_t substream) const {
        std::uint64_t s = seed_;
        (void)splitmix64(s);
        s ^= stream_ * 0x9e3779b97f4a7c15ULL + substream;
        return CounterRng(splitmix64(s), substream);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

}  // namespace rng
}  // namespace locbound
