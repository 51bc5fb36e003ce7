#include "locbound/certificate.hpp"

#include <cstdio>
#include <sstream>

namespace locbound {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string Certificate::to_json() const {
    std::ostringstream out;
    out << "{";
    out << "\"bound\": " << num(bound);
    out << ", \"delta\": " << num(delta);
    out << ", \"kind\": \"" << kind << "\"";
    out << ", \"" << (c_label.empty() ? std::string("C") : c_label) << "\": " << num(c_peeling);
    out << ", \"constant_c\": " << num(constant_c);
    out << ", \"r0\": " << num(r0);
    out << ", \"r_star\": " << num(r_star);
    out << ", \"psi_kind\": \"" << psi_kind << "\"";
    for (const auto& [k, v] : extras) out << ", \"" << k << "\": " << num(v);
    char digest_hex[24];
    std::snprintf(digest_hex, sizeof digest_hex, "%016llx",
                  static_cast<unsigned long long>(inputs_digest));
    out << ", \"inputs_digest\": \"" << digest_hex << "\"";
    out << "}";
    return out.str();
}

}  // namespace locbound
