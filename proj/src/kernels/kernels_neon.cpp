// aarch64 only; see CMakeLists.txt.
#include "ccest/kernels.hpp"

#include <arm_neon.h>

namespace ccest::kernels {
namespace {

double dot_neon(const float* a, const float* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t va = vld1q_f32(a + i);
        const float32x4_t vb = vld1q_f32(b + i);
        acc0 = vfmaq_f64(acc0, vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
        acc1 = vfmaq_f64(acc1, vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

double sq_dist_neon(const float* a, const float* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t va = vld1q_f32(a + i);
        const float32x4_t vb = vld1q_f32(b + i);
        const float64x2_t d0 = vsubq_f64(vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
        const float64x2_t d1 = vsubq_f64(vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
        acc0 = vfmaq_f64(acc0, d0, d0);
        acc1 = vfmaq_f64(acc1, d1, d1);
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
    }
    return sum;
}

void accumulate_neon(double* acc, const float* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t v = vld1q_f32(x + i);
        vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vcvt_f64_f32(vget_low_f32(v))));
        vst1q_f64(acc + i + 2, vaddq_f64(vld1q_f64(acc + i + 2), vcvt_high_f64_f32(v)));
    }
    for (; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

void dot_rows_neon(const float* q, const float* rows, std::size_t count, std::size_t dim, double* out) {
    for (std::size_t r = 0; r < count; ++r) out[r] = dot_neon(q, rows + r * dim, dim);
}

void sq_dist_rows_neon(const float* q, const float* rows, std::size_t count, std::size_t dim, double* out) {
    for (std::size_t r = 0; r < count; ++r) out[r] = sq_dist_neon(q, rows + r * dim, dim);
}

}  // namespace

namespace detail {
const KernelTable* neon_table() {
    static const KernelTable t{Isa::Neon, dot_neon, sq_dist_neon, accumulate_neon,
                               dot_rows_neon, sq_dist_rows_neon};
    return &t;
}
}  // namespace detail

}  // namespace ccest::kernels
