#include "ccest/kernels.hpp"

namespace ccest::kernels {
namespace {

double dot_scalar(const float* a, const float* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

double sq_dist_scalar(const float* a, const float* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
    }
    return sum;
}

void accumulate_scalar(double* acc, const float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

void dot_rows_scalar(const float* q, const float* rows, std::size_t count, std::size_t dim, double* out) {
    for (std::size_t r = 0; r < count; ++r) out[r] = dot_scalar(q, rows + r * dim, dim);
}

void sq_dist_rows_scalar(const float* q, const float* rows, std::size_t count, std::size_t dim, double* out) {
    for (std::size_t r = 0; r < count; ++r) out[r] = sq_dist_scalar(q, rows + r * dim, dim);
}

}  // namespace

namespace detail {
const KernelTable& scalar_table() {
    static const KernelTable t{Isa::Scalar, dot_scalar, sq_dist_scalar, accumulate_scalar,
                               dot_rows_scalar, sq_dist_rows_scalar};
    return t;
}
}  // namespace detail

}  // namespace ccest::kernels
