#include <cassert>
#include <cstdlib>
#include <string>

#include "qdgate/kernels.hpp"

namespace qdgate::kernels {

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool avx2_available() {
#if defined(QDGATE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__)) && \
    (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Isa detect() {
  if (const char* env = std::getenv("QDGATE_SIMD")) {
    if (std::string(env) == "scalar") return Isa::Scalar;
  }
  return avx2_available() ? Isa::Avx2 : Isa::Scalar;
}

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*matvec)(const double*, std::size_t, std::size_t, const double*, const double*, double*,
                 double*);
  void (*axpy)(double, double, const double*, const double*, double*, double*, std::size_t);
  double (*norm2)(const double*, const double*, std::size_t);
  void (*block)(const double*, std::size_t, std::size_t, double, double, const double*,
                const double*, const double*, const double*, double*, double*, double*, double*);
};

const Table& table() {
  static const Table t = [] {
#if defined(QDGATE_HAVE_AVX2)
    if (detect() == Isa::Avx2) {
      return Table{avx2::dot, avx2::real_matvec_split, avx2::complex_axpy_split,
                   avx2::norm2_split, avx2::hermitian_block_apply};
    }
#endif
    return Table{scalar::dot, scalar::real_matvec_split, scalar::complex_axpy_split,
                 scalar::norm2_split, scalar::hermitian_block_apply};
  }();
  return t;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = [] {
#if defined(QDGATE_HAVE_AVX2)
    return detect();
#else
    return Isa::Scalar;
#endif
  }();
  return isa;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return table().dot(a.data(), b.data(), a.size());
}

void real_matvec_split(std::span<const double> matrix, std::size_t rows, std::size_t cols,
                       std::span<const double> x_re, std::span<const double> x_im,
                       std::span<double> y_re, std::span<double> y_im) {
  assert(matrix.size() >= rows * cols);
  assert(x_re.size() >= cols && x_im.size() >= cols);
  assert(y_re.size() >= rows && y_im.size() >= rows);
  table().matvec(matrix.data(), rows, cols, x_re.data(), x_im.data(), y_re.data(), y_im.data());
}

void complex_axpy_split(double s_re, double s_im, std::span<const double> x_re,
                        std::span<const double> x_im, std::span<double> y_re,
                        std::span<double> y_im) {
  assert(x_re.size() == y_re.size());
  table().axpy(s_re, s_im, x_re.data(), x_im.data(), y_re.data(), y_im.data(), x_re.size());
}

double norm2_split(std::span<const double> x_re, std::span<const double> x_im) {
  assert(x_re.size() == x_im.size());
  return table().norm2(x_re.data(), x_im.data(), x_re.size());
}

void hermitian_block_apply(std::span<const double> matrix, std::size_t rows, std::size_t cols,
                           double s_re, double s_im, SplitVec x_lo, SplitVec x_up, SplitOut y_lo,
                           SplitOut y_up) {
  assert(matrix.size() >= rows * cols);
  table().block(matrix.data(), rows, cols, s_re, s_im, x_lo.re, x_lo.im, x_up.re, x_up.im,
                y_lo.re, y_lo.im, y_up.re, y_up.im);
}

}  // namespace qdgate::kernels
