#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "gw/kernels.hpp"

namespace gw::kernels::avx2 {

namespace {

constexpr std::uint8_t kNumber = 1;

// All-ones 64-bit lanes where the four kind bytes at p equal Number.
inline __m256d number_mask(const std::uint8_t* p) {
    std::int32_t packed;
    std::memcpy(&packed, p, sizeof packed);
    const __m256i kinds = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(packed));
    return _mm256_castsi256_pd(_mm256_cmpeq_epi64(kinds, _mm256_set1_epi64x(kNumber)));
}

}  // namespace

Moments moments(std::span<const double> values, std::span<const std::uint8_t> kinds) {
    const std::size_t n = values.size();
    const std::size_t blocks = n / 4 * 4;
    const double* v = values.data();
    const std::uint8_t* k = kinds.data();

    __m256d acc = _mm256_setzero_pd();
    std::size_t count = 0;
    for (std::size_t i = 0; i < blocks; i += 4) {
        const __m256d mask = number_mask(k + i);
        acc = _mm256_add_pd(acc, _mm256_and_pd(mask, _mm256_loadu_pd(v + i)));
        count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(mask))));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
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

    const __m256d mean = _mm256_set1_pd(m.mean);
    __m256d sq = _mm256_setzero_pd();
    for (std::size_t i = 0; i < blocks; i += 4) {
        const __m256d mask = number_mask(k + i);
        const __m256d d = _mm256_and_pd(mask, _mm256_sub_pd(_mm256_loadu_pd(v + i), mean));
        sq = _mm256_add_pd(sq, _mm256_mul_pd(d, d));
    }
    alignas(32) double sq_lanes[4];
    _mm256_store_pd(sq_lanes, sq);
    for (std::size_t i = blocks; i < n; ++i) {
        if (k[i] == kNumber) {
            const double d = v[i] - m.mean;
            sq_lanes[i % 4] += d * d;
        }
    }
    m.stddev = std::sqrt(((sq_lanes[0] + sq_lanes[1]) + (sq_lanes[2] + sq_lanes[3])) / dn);
    return m;
}

void outliers(std::span<const double> values, std::span<const std::uint8_t> kinds, double mean, double threshold,
              std::span<std::uint8_t> flags) {
    const std::size_t n = values.size();
    const std::size_t blocks = n / 4 * 4;
    const double* v = values.data();
    const std::uint8_t* k = kinds.data();
    std::uint8_t* out = flags.data();

    const __m256d vmean = _mm256_set1_pd(mean);
    const __m256d vthr = _mm256_set1_pd(threshold);
    const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    for (std::size_t i = 0; i < blocks; i += 4) {
        const __m256d dev = _mm256_and_pd(abs_mask, _mm256_sub_pd(_mm256_loadu_pd(v + i), vmean));
        const __m256d hit = _mm256_and_pd(number_mask(k + i), _mm256_cmp_pd(dev, vthr, _CMP_GT_OQ));
        const int bits = _mm256_movemask_pd(hit);
        out[i] = static_cast<std::uint8_t>(bits & 1);
        out[i + 1] = static_cast<std::uint8_t>((bits >> 1) & 1);
        out[i + 2] = static_cast<std::uint8_t>((bits >> 2) & 1);
        out[i + 3] = static_cast<std::uint8_t>((bits >> 3) & 1);
    }
    for (std::size_t i = blocks; i < n; ++i) {
        out[i] = (k[i] == kNumber && std::fabs(v[i] - mean) > threshold) ? 1 : 0;
    }
}

void diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b, std::vector<std::size_t>& out) {
    const std::size_t n = a.size();
    const std::size_t blocks = n / 32 * 32;
    for (std::size_t i = 0; i < blocks; i += 32) {
        const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a.data() + i));
        const __m256i y = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b.data() + i));
        auto bits = ~static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(x, y)));
        while (bits) {
            out.push_back(i + static_cast<std::size_t>(__builtin_ctz(bits)));
            bits &= bits - 1;
        }
    }
    for (std::size_t i = blocks; i < n; ++i) {
        if (a[i] != b[i]) out.push_back(i);
    }
}

}  // namespace gw::kernels::avx2
