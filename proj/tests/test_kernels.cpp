#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "gw/kernels.hpp"

using namespace gw::kernels;

namespace {

struct Column {
    std::vector<double> values;
    std::vector<std::uint8_t> kinds;
};

Column random_column(std::mt19937_64& rng, std::size_t n) {
    Column c;
    std::normal_distribution<double> d(500.0, 120.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::uint8_t>(rng() % 10 == 0 ? rng() % 4 : 1);
        c.kinds.push_back(k);
        double v = k == 1 ? d(rng) : 0.0;
        if (k == 1 && rng() % 50 == 0) v *= 30.0;
        c.values.push_back(v);
    }
    return c;
}

}  // namespace

TEST(Kernels, ScalarIsListedFirst) {
    const auto tables = available_tables();
    ASSERT_FALSE(tables.empty());
    EXPECT_EQ(tables.front(), &scalar_table());
    EXPECT_NE(active().moments, nullptr);
}

TEST(Kernels, ScalarMomentsMatchDefinition) {
    const std::vector<double> v{1200, 0, 0, 0, 1100, 1150, 95000, 1000};
    const std::vector<std::uint8_t> k{1, 1, 2, 3, 1, 1, 1, 1};
    const auto m = scalar::moments(v, k);
    EXPECT_EQ(m.count, 6u);
    EXPECT_DOUBLE_EQ(m.mean, 16575.0);
    EXPECT_NEAR(m.stddev, 35075.0, 1.0);
}

TEST(Kernels, EmptyAndAllDead) {
    for (const auto* t : available_tables()) {
        const std::vector<double> v(7, 3.0);
        const std::vector<std::uint8_t> k(7, 0);
        const auto m = t->moments(v, k);
        EXPECT_EQ(m.count, 0u) << t->name;
        EXPECT_EQ(m.mean, 0.0);
        EXPECT_EQ(m.stddev, 0.0);
        const auto e = t->moments({}, {});
        EXPECT_EQ(e.count, 0u);
    }
}

// Every variant must agree bit for bit with the scalar reference, at every
// length (tails included).
TEST(Kernels, VariantsBitIdentical) {
    std::mt19937_64 rng(99);
    const auto tables = available_tables();
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 100, 1001, 4099, 50000}) {
        const auto col = random_column(rng, n);
        const auto ref = scalar::moments(col.values, col.kinds);
        std::vector<std::uint8_t> ref_flags(n);
        scalar::outliers(col.values, col.kinds, ref.mean, 2.0 * ref.stddev, ref_flags);
        auto other = ref_flags;
        for (std::size_t i = 0; i < n; ++i) {
            if (rng() % 7 == 0) other[i] ^= 1;
        }
        std::vector<std::size_t> ref_diff;
        scalar::diff(ref_flags, other, ref_diff);
        for (const auto* t : tables) {
            const auto m = t->moments(col.values, col.kinds);
            EXPECT_EQ(m.count, ref.count) << t->name << " n=" << n;
            EXPECT_EQ(std::memcmp(&m.mean, &ref.mean, sizeof(double)), 0) << t->name << " n=" << n;
            EXPECT_EQ(std::memcmp(&m.stddev, &ref.stddev, sizeof(double)), 0) << t->name << " n=" << n;
            std::vector<std::uint8_t> flags(n, 7);
            t->outliers(col.values, col.kinds, ref.mean, 2.0 * ref.stddev, flags);
            EXPECT_EQ(flags, ref_flags) << t->name << " n=" << n;
            std::vector<std::size_t> d;
            t->diff(ref_flags, other, d);
            EXPECT_EQ(d, ref_diff) << t->name << " n=" << n;
        }
    }
}

TEST(Kernels, OutlierOnlyForNumbers) {
    const std::vector<double> v{0.0, 1e9, 1e9, 1e9};
    const std::vector<std::uint8_t> k{1, 2, 3, 0};
    for (const auto* t : available_tables()) {
        std::vector<std::uint8_t> f(4, 9);
        t->outliers(v, k, 0.0, 1.0, f);
        EXPECT_EQ(f, (std::vector<std::uint8_t>{0, 0, 0, 0})) << t->name;
    }
}
