#include "ccest/errors.hpp"
#include "ccest/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace ccest::kernels {

#if !defined(CCEST_HAVE_AVX2)
namespace detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace detail
#endif
#if !defined(CCEST_HAVE_NEON)
namespace detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace detail
#endif

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

Isa isa_from_string(std::string_view name) {
    if (name == "scalar") return Isa::Scalar;
    if (name == "avx2") return Isa::Avx2;
    if (name == "neon") return Isa::Neon;
    throw ConfigError("unknown ISA '" + std::string(name) + "' (expected scalar, avx2 or neon)");
}

bool supported(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(CCEST_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::Neon:
            return detail::neon_table() != nullptr;
    }
    return false;
}

std::vector<Isa> available() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon})
        if (supported(isa)) out.push_back(isa);
    return out;
}

const KernelTable& table(Isa isa) {
    if (!supported(isa)) throw ValidationError("ISA '" + std::string(to_string(isa)) + "' is not supported here");
    switch (isa) {
        case Isa::Avx2: return *detail::avx2_table();
        case Isa::Neon: return *detail::neon_table();
        case Isa::Scalar: break;
    }
    return detail::scalar_table();
}

namespace {

const KernelTable* initial_table() {
    if (const char* env = std::getenv("CCEST_ISA"); env && *env) return &table(isa_from_string(env));
    if (supported(Isa::Avx2)) return &table(Isa::Avx2);
    if (supported(Isa::Neon)) return &table(Isa::Neon);
    return &detail::scalar_table();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> ptr{initial_table()};
    return ptr;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

}  // namespace ccest::kernels
