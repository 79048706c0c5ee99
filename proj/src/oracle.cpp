#include "wtrace/oracle.hpp"

#include <cmath>
#include <complex>

// Straight transcriptions of the closed forms. No propagation, no shared
// helpers with the engine: this file must stay an independent reference.

namespace wtrace::oracle {

namespace {
inline std::complex<double> phase(double t) { return std::polar(1.0, t); }
} // namespace

double p_exit3_equal_split(double alpha, double beta, double gamma, double eps) {
    const std::complex<double> u = phase(gamma) + phase(beta) - phase(alpha);
    return eps + (1.0 - 3.0 * eps) / 9.0 * std::norm(u);
}

double p_exit3(double alpha, double beta, double gamma, double eps, double R) {
    const double T = 1.0 - R;
    const std::complex<double> z =
        std::sqrt(R) * phase(gamma) + (phase(beta) - phase(alpha)) * std::sqrt(T / 2.0);
    return eps + (1.0 - 3.0 * eps) / 3.0 * std::norm(z);
}

double p_exit3_balanced_inner(double eps, double R) {
    return eps + (1.0 - 3.0 * eps) * R / 3.0;
}

double p_exit3_shared_phase(double alpha, double beta, double eps, double R) {
    const double T = 1.0 - R;
    const double s = std::sqrt(2.0 * R * T);
    return eps + (1.0 - 3.0 * eps) / 3.0 * (1.0 - s + (s - T) * std::cos(alpha - beta));
}

FringeAnalysis fringe(double R, double eps) {
    const double T = 1.0 - R;
    const double s = std::sqrt(2.0 * R * T);
    FringeAnalysis out;
    out.offset = eps + (1.0 - 3.0 * eps) / 3.0 * (1.0 - s);
    out.cos_coefficient = (1.0 - 3.0 * eps) / 3.0 * (s - T);
    out.R = R;
    out.T = T;
    out.eps = eps;
    return out;
}

} // namespace wtrace::oracle
