#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops. Each kernel has a scalar reference version and
// an AVX2/FMA version; the public entry points dispatch once at startup to the
// best variant the CPU supports. Setting QDGATE_SIMD=scalar in the
// environment pins the reference path.
namespace qdgate::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// Variant chosen for this process.
Isa active_isa();

/// True when the AVX2 variants were compiled in and the CPU reports AVX2+FMA.
bool avx2_available();

/// Sum of a[i] * b[i].
double dot(std::span<const double> a, std::span<const double> b);

/// y = M x for a row-major real matrix M (rows x cols) applied to a complex
/// vector stored as separate real and imaginary parts.
void real_matvec_split(std::span<const double> matrix, std::size_t rows, std::size_t cols,
                       std::span<const double> x_re, std::span<const double> x_im,
                       std::span<double> y_re, std::span<double> y_im);

/// y += (s_re + i s_im) * x, split-complex storage.
void complex_axpy_split(double s_re, double s_im, std::span<const double> x_re,
                        std::span<const double> x_im, std::span<double> y_re,
                        std::span<double> y_im);

/// Sum of |x|^2 over a split-complex vector.
double norm2_split(std::span<const double> x_re, std::span<const double> x_im);

/// Hermitian off-diagonal block product for a real row-major M (rows x cols):
/// y_lo += s M x_up and y_up += conj(s) M^T x_lo, in one pass over M.
struct SplitVec {
  const double* re;
  const double* im;
};
struct SplitOut {
  double* re;
  double* im;
};
void hermitian_block_apply(std::span<const double> matrix, std::size_t rows, std::size_t cols,
                           double s_re, double s_im, SplitVec x_lo, SplitVec x_up, SplitOut y_lo,
                           SplitOut y_up);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void real_matvec_split(const double* m, std::size_t rows, std::size_t cols, const double* x_re,
                       const double* x_im, double* y_re, double* y_im);
void complex_axpy_split(double s_re, double s_im, const double* x_re, const double* x_im,
                        double* y_re, double* y_im, std::size_t n);
double norm2_split(const double* x_re, const double* x_im, std::size_t n);
void hermitian_block_apply(const double* m, std::size_t rows, std::size_t cols, double s_re,
                           double s_im, const double* xl_re, const double* xl_im,
                           const double* xu_re, const double* xu_im, double* yl_re, double* yl_im,
                           double* yu_re, double* yu_im);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void real_matvec_split(const double* m, std::size_t rows, std::size_t cols, const double* x_re,
                       const double* x_im, double* y_re, double* y_im);
void complex_axpy_split(double s_re, double s_im, const double* x_re, const double* x_im,
                        double* y_re, double* y_im, std::size_t n);
double norm2_split(const double* x_re, const double* x_im, std::size_t n);
void hermitian_block_apply(const double* m, std::size_t rows, std::size_t cols, double s_re,
                           double s_im, const double* xl_re, const double* xl_im,
                           const double* xu_re, const double* xu_im, double* yl_re, double* yl_im,
                           double* yu_re, double* yu_im);
}  // namespace avx2

}  // namespace qdgate::kernels
