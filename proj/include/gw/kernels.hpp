#pragma once

// Data-parallel inner loops of detection: column moments and outlier
// classification over the dense per-slot numeric caches.
//
// Every variant accumulates in four interleaved lanes (slot i feeds lane i % 4)
// and folds them as (l0 + l1) + (l2 + l3), so the scalar reference and the
// vector variants return bit-identical results. Builds must not contract
// multiply-add pairs (-ffp-contract=off).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace gw::kernels {

struct Moments {
    std::size_t count = 0;  // slots with kind == Number
    double mean = 0.0;
    double stddev = 0.0;  // population
};

// Mean and population standard deviation over slots whose kind is Number (1).
using MomentsFn = Moments (*)(std::span<const double> values, std::span<const std::uint8_t> kinds);

// flags[i] = kinds[i] == Number && |values[i] - mean| > threshold.
using OutlierFn = void (*)(std::span<const double> values, std::span<const std::uint8_t> kinds, double mean,
                           double threshold, std::span<std::uint8_t> flags);

// Appends every i where a[i] != b[i].
using DiffFn = void (*)(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                        std::vector<std::size_t>& out);

struct KernelTable {
    std::string_view name;
    MomentsFn moments;
    OutlierFn outliers;
    DiffFn diff;
};

namespace scalar {
Moments moments(std::span<const double> values, std::span<const std::uint8_t> kinds);
void outliers(std::span<const double> values, std::span<const std::uint8_t> kinds, double mean, double threshold,
              std::span<std::uint8_t> flags);
void diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b, std::vector<std::size_t>& out);
}  // namespace scalar

#if defined(GW_HAVE_AVX2)
namespace avx2 {
Moments moments(std::span<const double> values, std::span<const std::uint8_t> kinds);
void outliers(std::span<const double> values, std::span<const std::uint8_t> kinds, double mean, double threshold,
              std::span<std::uint8_t> flags);
void diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b, std::vector<std::size_t>& out);
}  // namespace avx2
#endif

#if defined(GW_HAVE_NEON)
namespace neon {
Moments moments(std::span<const double> values, std::span<const std::uint8_t> kinds);
void outliers(std::span<const double> values, std::span<const std::uint8_t> kinds, double mean, double threshold,
              std::span<std::uint8_t> flags);
void diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b, std::vector<std::size_t>& out);
}  // namespace neon
#endif

const KernelTable& scalar_table() noexcept;

// Variants compiled in and supported by the running CPU, scalar first.
std::vector<const KernelTable*> available_tables();

// Chosen once per process: the widest supported variant, unless the
// GW_KERNELS environment variable names one ("scalar", "avx2", "neon").
const KernelTable& active() noexcept;

}  // namespace gw::kernels
