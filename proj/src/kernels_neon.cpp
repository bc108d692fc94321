#include <arm_neon.h>

#include <cmath>

#include "gw/kernels.hpp"

// Two float64x2 accumulators stand in for the four interleaved lanes:
// lo holds lanes 0 and 1, hi holds lanes 2 and 3.

namespace gw::kernels::neon {

namespace {

constexpr std::uint8_t kNumber = 1;

inline uint64x2_t pair_mask(const std::uint8_t* p) {
    const std::uint64_t a = p[0] == kNumber ? ~std::uint64_t{0} : 0;
    const std::uint64_t b = p[1] == kNumber ? ~std::uint64_t{0} : 0;
    return vcombine_u64(vcreate_u64(a), vcreate_u64(b));
}

inline float64x2_t masked(uint64x2_t mask, float64x2_t v) {
    return vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(v)));
}

}  // namespace

Moments moments(std::span<const double> values, std::span<const std::uint8_t> kinds) {
    const std::size_t n = values.size();
    const std::size_t blocks = n / 4 * 4;
    const double* v = values.data();
    const std::uint8_t* k = kinds.data();

    float64x2_t lo = vdupq_n_f64(0.0);
    float64x2_t hi = vdupq_n_f64(0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < blocks; i += 4) {
        lo = vaddq_f64(lo, masked(pair_mask(k + i), vld1q_f64(v + i)));
        hi = vaddq_f64(hi, masked(pair_mask(k + i + 2), vld1q_f64(v + i + 2)));
        for (std::size_t j = 0; j < 4; ++j) count += k[i + j] == kNumber;
    }
    double lanes[4] = {vgetq_lane_f64(lo, 0), vgetq_lane_f64(lo, 1), vgetq_lane_f64(hi, 0), vgetq_lane_f64(hi, 1)};
    for (std::size_t i = blocks; i < n; ++i) {
        if (k[i] == kNumber) {
            lanes[i % 4] += v[i];
            ++count;
        }
    }
    Moments m;
    m.count = count;
    if (count == 0) return m;
    const double dn = static_cast<double>(count);
    m.mean = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) / dn;

    const float64x2_t mean = vdupq_n_f64(m.mean);
    float64x2_t sq_lo = vdupq_n_f64(0.0);
    float64x2_t sq_hi = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < blocks; i += 4) {
        const float64x2_t d0 = masked(pair_mask(k + i), vsubq_f64(vld1q_f64(v + i), mean));
        const float64x2_t d1 = masked(pair_mask(k + i + 2), vsubq_f64(vld1q_f64(v + i + 2), mean));
        sq_lo = vaddq_f64(sq_lo, vmulq_f64(d0, d0));
        sq_hi = vaddq_f64(sq_hi, vmulq_f64(d1, d1));
    }
    double sq[4] = {vgetq_lane_f64(sq_lo, 0), vgetq_lane_f64(sq_lo, 1), vgetq_lane_f64(sq_hi, 0),
                    vgetq_lane_f64(sq_hi, 1)};
    for (std::size_t i = blocks; i < n; ++i) {
        if (k[i] == kNumber) {
            const double d = v[i] - m.mean;
            sq[i % 4] += d * d;
        }
    }
    m.stddev = std::sqrt(((sq[0] + sq[1]) + (sq[2] + sq[3])) / dn);
    return m;
}

void outliers(std::span<const double> values, std::span<const std::uint8_t> kinds, double mean, double threshold,
              std::span<std::uint8_t> flags) {
    const std::size_t n = values.size();
    const std::size_t blocks = n / 2 * 2;
    const float64x2_t vmean = vdupq_n_f64(mean);
    const float64x2_t vthr = vdupq_n_f64(threshold);
    for (std::size_t i = 0; i < blocks; i += 2) {
        const float64x2_t dev = vabsq_f64(vsubq_f64(vld1q_f64(values.data() + i), vmean));
        const uint64x2_t hit = vandq_u64(pair_mask(kinds.data() + i), vcgtq_f64(dev, vthr));
        flags[i] = vgetq_lane_u64(hit, 0) ? 1 : 0;
        flags[i + 1] = vgetq_lane_u64(hit, 1) ? 1 : 0;
    }
    for (std::size_t i = blocks; i < n; ++i) {
        flags[i] = (kinds[i] == kNumber && std::fabs(values[i] - mean) > threshold) ? 1 : 0;
    }
}

void diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b, std::vector<std::size_t>& out) {
    const std::size_t n = a.size();
    const std::size_t blocks = n / 16 * 16;
    for (std::size_t i = 0; i < blocks; i += 16) {
        const uint8x16_t eq = vceqq_u8(vld1q_u8(a.data() + i), vld1q_u8(b.data() + i));
        if (vminvq_u8(eq) == 0xFF) continue;
        for (std::size_t j = 0; j < 16; ++j) {
            if (a[i + j] != b[i + j]) out.push_back(i + j);
        }
    }
    for (std::size_t i = blocks; i < n; ++i) {
        if (a[i] != b[i]) out.push_back(i);
    }
}

}  // namespace gw::kernels::neon
