#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "qdgate/kernels.hpp"

using namespace qdgate::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

constexpr double kTol = 1e-13;

}  // namespace

TEST_CASE("dispatch honours the environment pin") {
  const char* env = std::getenv("QDGATE_SIMD");
  if (env && std::string(env) == "scalar") {
    CHECK(active_isa() == Isa::Scalar);
  } else {
    CHECK(active_isa() == (avx2_available() ? Isa::Avx2 : Isa::Scalar));
  }
  MESSAGE("active kernels: ", to_string(active_isa()));
}

TEST_CASE("reductions and axpy match a plain loop") {
  std::mt19937_64 rng(1);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 16u, 31u, 135u}) {
    const auto a = random_vec(n, rng), b = random_vec(n, rng);
    double ref_dot = 0.0, ref_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ref_dot += a[i] * b[i];
      ref_norm += a[i] * a[i] + b[i] * b[i];
    }
    CHECK(std::abs(scalar::dot(a.data(), b.data(), n) - ref_dot) < kTol);
    CHECK(std::abs(dot(a, b) - ref_dot) < kTol);
    CHECK(std::abs(norm2_split(a, b) - ref_norm) < kTol);

    auto yr = random_vec(n, rng), yi = random_vec(n, rng);
    auto er = yr, ei = yi;
    const double sr = 0.3, si = -1.7;
    for (std::size_t i = 0; i < n; ++i) {
      er[i] += sr * a[i] - si * b[i];
      ei[i] += sr * b[i] + si * a[i];
    }
    complex_axpy_split(sr, si, a, b, yr, yi);
    CHECK(max_diff(yr, er) < kTol);
    CHECK(max_diff(yi, ei) < kTol);
  }
}

TEST_CASE("matrix kernels match a plain loop") {
  std::mt19937_64 rng(2);
  const std::pair<std::size_t, std::size_t> shapes[] = {{1, 1}, {1, 10}, {10, 124}, {7, 5}, {13, 9}, {4, 8}};
  for (auto [rows, cols] : shapes) {
    const auto m = random_vec(rows * cols, rng);
    const auto xr = random_vec(cols, rng), xi = random_vec(cols, rng);
    std::vector<double> yr(rows), yi(rows), er(rows, 0.0), ei(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        er[r] += m[r * cols + c] * xr[c];
        ei[r] += m[r * cols + c] * xi[c];
      }
    real_matvec_split(m, rows, cols, xr, xi, yr, yi);
    CHECK(max_diff(yr, er) < kTol);
    CHECK(max_diff(yi, ei) < kTol);

    // y_lo += s M x_up, y_up += conj(s) M^T x_lo
    const std::complex<double> s(0.4, -0.9);
    const auto lr = random_vec(rows, rng), li = random_vec(rows, rng);
    auto ylr = random_vec(rows, rng), yli = random_vec(rows, rng);
    auto yur = random_vec(cols, rng), yui = random_vec(cols, rng);
    std::vector<std::complex<double>> lo(rows), up(cols);
    for (std::size_t r = 0; r < rows; ++r) lo[r] = {ylr[r], yli[r]};
    for (std::size_t c = 0; c < cols; ++c) up[c] = {yur[c], yui[c]};
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        lo[r] += s * m[r * cols + c] * std::complex<double>(xr[c], xi[c]);
        up[c] += std::conj(s) * m[r * cols + c] * std::complex<double>(lr[r], li[r]);
      }
    auto sylr = ylr, syli = yli, syur = yur, syui = yui;
    hermitian_block_apply(m, rows, cols, s.real(), s.imag(), {lr.data(), li.data()},
                          {xr.data(), xi.data()}, {ylr.data(), yli.data()},
                          {yur.data(), yui.data()});
    scalar::hermitian_block_apply(m.data(), rows, cols, s.real(), s.imag(), lr.data(), li.data(),
                                  xr.data(), xi.data(), sylr.data(), syli.data(), syur.data(),
                                  syui.data());
    for (std::size_t r = 0; r < rows; ++r) {
      CHECK(std::abs(ylr[r] - lo[r].real()) < kTol);
      CHECK(std::abs(yli[r] - lo[r].imag()) < kTol);
      CHECK(std::abs(sylr[r] - lo[r].real()) < kTol);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      CHECK(std::abs(yur[c] - up[c].real()) < kTol);
      CHECK(std::abs(yui[c] - up[c].imag()) < kTol);
      CHECK(std::abs(syui[c] - up[c].imag()) < kTol);
    }
  }
}

TEST_CASE("AVX2 variants agree with the scalar reference") {
  if (!avx2_available()) {
    MESSAGE("AVX2/FMA not available; equivalence not exercised");
    return;
  }
#if defined(QDGATE_HAVE_AVX2)
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u, 9u, 17u, 64u, 125u}) {
    const auto a = random_vec(n, rng), b = random_vec(n, rng);
    CHECK(std::abs(avx2::dot(a.data(), b.data(), n) - scalar::dot(a.data(), b.data(), n)) < kTol);
    CHECK(std::abs(avx2::norm2_split(a.data(), b.data(), n) - scalar::norm2_split(a.data(), b.data(), n)) < kTol);
    auto y1 = random_vec(n, rng), y2 = random_vec(n, rng);
    auto z1 = y1, z2 = y2;
    avx2::complex_axpy_split(0.2, 0.7, a.data(), b.data(), y1.data(), y2.data(), n);
    scalar::complex_axpy_split(0.2, 0.7, a.data(), b.data(), z1.data(), z2.data(), n);
    CHECK(max_diff(y1, z1) < kTol);
    CHECK(max_diff(y2, z2) < kTol);

    for (std::size_t rows : {1u, 3u, 10u}) {
      const std::size_t cols = n;
      const auto m = random_vec(rows * cols, rng);
      const auto xr = random_vec(cols, rng), xi = random_vec(cols, rng);
      std::vector<double> ar(rows), ai(rows), sr(rows), si(rows);
      avx2::real_matvec_split(m.data(), rows, cols, xr.data(), xi.data(), ar.data(), ai.data());
      scalar::real_matvec_split(m.data(), rows, cols, xr.data(), xi.data(), sr.data(), si.data());
      CHECK(max_diff(ar, sr) < kTol);
      CHECK(max_diff(ai, si) < kTol);

      const auto lr = random_vec(rows, rng), li = random_vec(rows, rng);
      auto a1 = random_vec(rows, rng), a2 = random_vec(rows, rng), a3 = random_vec(cols, rng),
           a4 = random_vec(cols, rng);
      auto s1 = a1, s2 = a2, s3 = a3, s4 = a4;
      avx2::hermitian_block_apply(m.data(), rows, cols, -0.3, 1.1, lr.data(), li.data(), xr.data(),
                                  xi.data(), a1.data(), a2.data(), a3.data(), a4.data());
      scalar::hermitian_block_apply(m.data(), rows, cols, -0.3, 1.1, lr.data(), li.data(),
                                    xr.data(), xi.data(), s1.data(), s2.data(), s3.data(), s4.data());
      CHECK(max_diff(a1, s1) < kTol);
      CHECK(max_diff(a2, s2) < kTol);
      CHECK(max_diff(a3, s3) < kTol);
      CHECK(max_diff(a4, s4) < kTol);
    }
  }
#endif
}
