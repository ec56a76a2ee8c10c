// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "qdgate/kernels.hpp"

namespace qdgate::kernels::avx2 {

namespace {
inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}
}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void real_matvec_split(const double* m, std::size_t rows, std::size_t cols, const double* x_re,
                       const double* x_im, double* y_re, double* y_im) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = m + r * cols;
    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_im = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d mv = _mm256_loadu_pd(row + c);
      acc_re = _mm256_fmadd_pd(mv, _mm256_loadu_pd(x_re + c), acc_re);
      acc_im = _mm256_fmadd_pd(mv, _mm256_loadu_pd(x_im + c), acc_im);
    }
    double sum_re = hsum(acc_re);
    double sum_im = hsum(acc_im);
    for (; c < cols; ++c) {
      sum_re += row[c] * x_re[c];
      sum_im += row[c] * x_im[c];
    }
    y_re[r] = sum_re;
    y_im[r] = sum_im;
  }
}

void complex_axpy_split(double s_re, double s_im, const double* x_re, const double* x_im,
                        double* y_re, double* y_im, std::size_t n) {
  const __m256d sr = _mm256_set1_pd(s_re);
  const __m256d si = _mm256_set1_pd(s_im);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xr = _mm256_loadu_pd(x_re + i);
    const __m256d xi = _mm256_loadu_pd(x_im + i);
    __m256d yr = _mm256_loadu_pd(y_re + i);
    __m256d yi = _mm256_loadu_pd(y_im + i);
    yr = _mm256_fmadd_pd(sr, xr, yr);
    yr = _mm256_fnmadd_pd(si, xi, yr);
    yi = _mm256_fmadd_pd(sr, xi, yi);
    yi = _mm256_fmadd_pd(si, xr, yi);
    _mm256_storeu_pd(y_re + i, yr);
    _mm256_storeu_pd(y_im + i, yi);
  }
  for (; i < n; ++i) {
    y_re[i] += s_re * x_re[i] - s_im * x_im[i];
    y_im[i] += s_re * x_im[i] + s_im * x_re[i];
  }
}

double norm2_split(const double* x_re, const double* x_im, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xr = _mm256_loadu_pd(x_re + i);
    const __m256d xi = _mm256_loadu_pd(x_im + i);
    acc = _mm256_fmadd_pd(xr, xr, acc);
    acc = _mm256_fmadd_pd(xi, xi, acc);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) sum += x_re[i] * x_re[i] + x_im[i] * x_im[i];
  return sum;
}

void hermitian_block_apply(const double* m, std::size_t rows, std::size_t cols, double s_re,
                           double s_im, const double* xl_re, const double* xl_im,
                           const double* xu_re, const double* xu_im, double* yl_re, double* yl_im,
                           double* yu_re, double* yu_im) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = m + r * cols;
    // conj(s) * x_lo[r]
    const double ar = s_re * xl_re[r] + s_im * xl_im[r];
    const double ai = s_re * xl_im[r] - s_im * xl_re[r];
    const __m256d var = _mm256_set1_pd(ar);
    const __m256d vai = _mm256_set1_pd(ai);
    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_im = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d mv = _mm256_loadu_pd(row + c);
      acc_re = _mm256_fmadd_pd(mv, _mm256_loadu_pd(xu_re + c), acc_re);
      acc_im = _mm256_fmadd_pd(mv, _mm256_loadu_pd(xu_im + c), acc_im);
      _mm256_storeu_pd(yu_re + c, _mm256_fmadd_pd(mv, var, _mm256_loadu_pd(yu_re + c)));
      _mm256_storeu_pd(yu_im + c, _mm256_fmadd_pd(mv, vai, _mm256_loadu_pd(yu_im + c)));
    }
    double dr = hsum(acc_re);
    double di = hsum(acc_im);
    for (; c < cols; ++c) {
      dr += row[c] * xu_re[c];
      di += row[c] * xu_im[c];
      yu_re[c] += row[c] * ar;
      yu_im[c] += row[c] * ai;
    }
    yl_re[r] += s_re * dr - s_im * di;
    yl_im[r] += s_re * di + s_im * dr;
  }
}

}  // namespace qdgate::kernels::avx2
