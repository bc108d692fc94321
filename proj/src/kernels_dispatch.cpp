#include <cstdlib>
#include <string_view>

#include "gw/kernels.hpp"

namespace gw::kernels {

namespace {

const KernelTable kScalar{"scalar", &scalar::moments, &scalar::outliers, &scalar::diff};
#if defined(GW_HAVE_AVX2)
const KernelTable kAvx2{"avx2", &avx2::moments, &avx2::outliers, &avx2::diff};
#endif
#if defined(GW_HAVE_NEON)
const KernelTable kNeon{"neon", &neon::moments, &neon::outliers, &neon::diff};
#endif

const KernelTable& choose() noexcept {
    const auto tables = available_tables();
    if (const char* forced = std::getenv("GW_KERNELS")) {
        for (const auto* t : tables) {
            if (t->name == std::string_view(forced)) return *t;
        }
    }
    return *tables.back();
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

std::vector<const KernelTable*> available_tables() {
    std::vector<const KernelTable*> out{&kScalar};
#if defined(GW_HAVE_AVX2)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2")) out.push_back(&kAvx2);
#endif
#if defined(GW_HAVE_NEON)
    out.push_back(&kNeon);
#endif
    return out;
}

const KernelTable& active() noexcept {
    static const KernelTable& table = choose();
    return table;
}

}  // namespace gw::kernels
