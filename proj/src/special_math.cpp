#include "evid/special_math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evid {

namespace {

constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // ln(2*pi)/2

void require_positive(double x, const char* fn) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error(std::string(fn) + ": argument must be positive and finite");
    }
}

}  // namespace

double log_gamma(double x) {
    require_positive(x, "log_gamma");
    // Shift into x >= 12 where the Stirling series converges fast,
    // accumulating the recurrence ln G(x) = ln G(x+n) - sum ln(x+i).
    double shift = 0.0;
    while (x < 12.0) {
        shift += std::log(x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli-number coefficients B_{2n} / (2n (2n-1)).
    double series = inv * (1.0 / 12.0
        + inv2 * (-1.0 / 360.0
        + inv2 * (1.0 / 1260.0
        + inv2 * (-1.0 / 1680.0
        + inv2 * (1.0 / 1188.0
        + inv2 * (-691.0 / 360360.0
        + inv2 * (1.0 / 156.0)))))));
    return (x - 0.5) * std::log(x) - x + kHalfLogTwoPi + series - shift;
}

double digamma(double x) {
    require_positive(x, "digamma");
    // psi(x) = psi(x+1) - 1/x pushes x into the asymptotic regime.
    double acc = 0.0;
    while (x < 12.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // psi(x) ~ ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
    double series = inv2 * (1.0 / 12.0
        + inv2 * (-1.0 / 120.0
        + inv2 * (1.0 / 252.0
        + inv2 * (-1.0 / 240.0
        + inv2 * (1.0 / 132.0
        + inv2 * (-691.0 / 32760.0
        + inv2 * (1.0 / 12.0)))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
    require_positive(x, "trigamma");
    // psi'(x) = psi'(x+1) + 1/x^2
    double acc = 0.0;
    while (x < 12.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // psi'(x) ~ 1/x + 1/(2x^2) + sum B_{2n} / x^{2n+1}
    double series = inv * (1.0
        + inv * (0.5
        + inv * (1.0 / 6.0
        + inv2 * (-1.0 / 30.0
        + inv2 * (1.0 / 42.0
        + inv2 * (-1.0 / 30.0
        + inv2 * (5.0 / 66.0)))))));
    return acc + series;
}

std::vector<double> stable_softmax(std::span<const double> v) {
    if (v.empty()) {
        throw std::invalid_argument("stable_softmax: empty input");
    }
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("stable_softmax: non-finite input");
        }
    }
    const double m = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double z = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        z += out[i];
    }
    for (double& p : out) p /= z;
    return out;
}

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) {
        throw std::invalid_argument("log_sum_exp: empty input");
    }
    const double m = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace evid
