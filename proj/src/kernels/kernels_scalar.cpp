#include "qdgate/kernels.hpp"

namespace qdgate::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void real_matvec_split(const double* m, std::size_t rows, std::size_t cols, const double* x_re,
                       const double* x_im, double* y_re, double* y_im) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = m + r * cols;
    double acc_re = 0.0;
    double acc_im = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      acc_re += row[c] * x_re[c];
      acc_im += row[c] * x_im[c];
    }
    y_re[r] = acc_re;
    y_im[r] = acc_im;
  }
}

void complex_axpy_split(double s_re, double s_im, const double* x_re, const double* x_im,
                        double* y_re, double* y_im, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    y_re[i] += s_re * x_re[i] - s_im * x_im[i];
    y_im[i] += s_re * x_im[i] + s_im * x_re[i];
  }
}

double norm2_split(const double* x_re, const double* x_im, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += x_re[i] * x_re[i] + x_im[i] * x_im[i];
  return sum;
}

void hermitian_block_apply(const double* m, std::size_t rows, std::size_t cols, double s_re,
                           double s_im, const double* xl_re, const double* xl_im,
                           const double* xu_re, const double* xu_im, double* yl_re, double* yl_im,
                           double* yu_re, double* yu_im) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = m + r * cols;
    const double ar = s_re * xl_re[r] + s_im * xl_im[r];
    const double ai = s_re * xl_im[r] - s_im * xl_re[r];
    double dr = 0.0;
    double di = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      dr += row[c] * xu_re[c];
      di += row[c] * xu_im[c];
      yu_re[c] += row[c] * ar;
      yu_im[c] += row[c] * ai;
    }
    yl_re[r] += s_re * dr - s_im * di;
    yl_im[r] += s_re * di + s_im * dr;
  }
}

}  // namespace qdgate::kernels::scalar
