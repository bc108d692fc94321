#include <cmath>

#include "gw/kernels.hpp"

namespace gw::kernels::scalar {

namespace {
constexpr std::uint8_t kNumber = 1;
}

Moments moments(std::span<const double> values, std::span<const std::uint8_t> kinds) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t count = 0;
    const std::size_t n = values.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (kinds[i] == kNumber) {
            lane[i % 4] += values[i];
            ++count;
        }
    }
    Moments m;
    m.count = count;
    if (count == 0) return m;
    const double dn = static_cast<double>(count);
    m.mean = ((lane[0] + lane[1]) + (lane[2] + lane[3])) / dn;

    double sq[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        if (kinds[i] == kNumber) {
            const double d = values[i] - m.mean;
            sq[i % 4] += d * d;
        }
    }
    m.stddev = std::sqrt(((sq[0] + sq[1]) + (sq[2] + sq[3])) / dn);
    return m;
}

void outliers(std::span<const double> values, std::span<const std::uint8_t> kinds, double mean, double threshold,
              std::span<std::uint8_t> flags) {
    const std::size_t n = values.size();
    for (std::size_t i = 0; i < n; ++i) {
        flags[i] = (kinds[i] == kNumber && std::fabs(values[i] - mean) > threshold) ? 1 : 0;
    }
}

void diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b, std::vector<std::size_t>& out) {
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] != b[i]) out.push_back(i);
    }
}

}  // namespace gw::kernels::scalar
