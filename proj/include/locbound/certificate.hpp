#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <Eigen/Core>

namespace locbound {

/// FNV-1a running digest; used to fingerprint the inputs a certificate was
/// computed from (psi kind/constant, data, split, seed).
class Digest {
public:
    Digest& add_bytes(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Digest& add(double v) { return add_bytes(&v, sizeof v); }
    Digest& add(std::uint64_t v) { return add_bytes(&v, sizeof v); }
    Digest& add(const std::string& s) { return add_bytes(s.data(), s.size()); }
    Digest& add(const Eigen::MatrixXd& m) {
        return add_bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

/// A numeric generalization bound together with the convention that produced
/// it.  `kind` is one of: loss-dependent, variance-dependent, data-loss,
/// data-variance, convex-cost.
struct Certificate {
    double bound = 0.0;
    double delta = 0.0;
    std::string kind;

    /// Peeling/union-bound factor actually used (C_{r0} or C_n) and its label.
    double c_peeling = 0.0;
    std::string c_label;

    double constant_c = 1.0;
    double r0 = 0.0;
    double r_star = 0.0;

    /// Extra named quantities (psi argument, empirical moments, fixed points...).
    std::map<std::string, double> extras;

    std::string psi_kind;
    std::uint64_t inputs_digest = 0;

    /// Render as a JSON object string (keys sorted, stable across runs).
    std::string to_json() const;
};

}  // namespace locbound
