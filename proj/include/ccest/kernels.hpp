#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation and optional AVX2/NEON variants selected at runtime.
// All variants accumulate in double; results agree with the scalar
// reference up to summation-order rounding.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ccest::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);
Isa isa_from_string(std::string_view name);

struct KernelTable {
    Isa isa;
    double (*dot)(const float* a, const float* b, std::size_t n);
    double (*sq_dist)(const float* a, const float* b, std::size_t n);
    // acc[i] += x[i]
    void (*accumulate)(double* acc, const float* x, std::size_t n);
    // out[r] = dot(q, rows + r * dim)
    void (*dot_rows)(const float* q, const float* rows, std::size_t count, std::size_t dim, double* out);
    // out[r] = sq_dist(q, rows + r * dim)
    void (*sq_dist_rows)(const float* q, const float* rows, std::size_t count, std::size_t dim, double* out);
};

bool supported(Isa isa);
std::vector<Isa> available();

// Throws ValidationError when the ISA is not supported on this machine/build.
const KernelTable& table(Isa isa);

// The process-wide selection. Defaults to the best supported ISA, or the
// value of the CCEST_ISA environment variable when set.
const KernelTable& active();
void select(Isa isa);

inline double dot(std::span<const float> a, std::span<const float> b) {
    return active().dot(a.data(), b.data(), a.size());
}
inline double sq_dist(std::span<const float> a, std::span<const float> b) {
    return active().sq_dist(a.data(), b.data(), a.size());
}
inline double sq_norm(std::span<const float> a) {
    return active().dot(a.data(), a.data(), a.size());
}

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();
}  // namespace detail

}  // namespace ccest::kernels
