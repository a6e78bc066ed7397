#include "kernels_impl.hpp"

#if defined(QROTOR_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#define QROTOR_AVX2 __attribute__((target("avx2,fma")))

namespace qrotor::kernels {

namespace {

// Two complex doubles per register: [re0 im0 re1 im1].

// y += a * x for complex scalar a = (ar, ai).
QROTOR_AVX2 inline __m256d cmul_bcast(__m256d ar, __m256d ai, __m256d x) {
  const __m256d xs = _mm256_permute_pd(x, 0b0101);  // [im0 re0 im1 re1]
  return _mm256_fmaddsub_pd(ar, x, _mm256_mul_pd(ai, xs));
}

QROTOR_AVX2 void herk_upper(const cplx* O, const double* w, std::size_t n, std::size_t p,
                            cplx* S) {
  for (std::size_t mu = 0; mu < p; ++mu) {
    double* row = reinterpret_cast<double*>(S + mu * p);
    for (std::size_t s = 0; s < n; ++s) {
      const cplx* o = O + s * p;
      const cplx a = w[s] * std::conj(o[mu]);
      const __m256d ar = _mm256_set1_pd(a.real());
      const __m256d ai = _mm256_set1_pd(a.imag());
      const double* x = reinterpret_cast<const double*>(o);
      std::size_t nu = mu;
      for (; nu + 2 <= p; nu += 2) {
        const __m256d xv = _mm256_loadu_pd(x + 2 * nu);
        const __m256d yv = _mm256_loadu_pd(row + 2 * nu);
        _mm256_storeu_pd(row + 2 * nu, _mm256_add_pd(yv, cmul_bcast(ar, ai, xv)));
      }
      for (; nu < p; ++nu) S[mu * p + nu] += a * o[nu];
    }
  }
}

QROTOR_AVX2 void gemv_conj(const cplx* O, const double* w, const cplx* e, std::size_t n,
                           std::size_t p, cplx* g) {
  const __m256d conj_mask = _mm256_set_pd(-0.0, 0.0, -0.0, 0.0);
  double* gd = reinterpret_cast<double*>(g);
  for (std::size_t s = 0; s < n; ++s) {
    const cplx c = w[s] * e[s];
    const __m256d cr = _mm256_set1_pd(c.real());
    const __m256d ci = _mm256_set1_pd(c.imag());
    const double* x = reinterpret_cast<const double*>(O + s * p);
    std::size_t mu = 0;
    for (; mu + 2 <= p; mu += 2) {
      const __m256d xv = _mm256_xor_pd(_mm256_loadu_pd(x + 2 * mu), conj_mask);
      const __m256d yv = _mm256_loadu_pd(gd + 2 * mu);
      _mm256_storeu_pd(gd + 2 * mu, _mm256_add_pd(yv, cmul_bcast(cr, ci, xv)));
    }
    for (; mu < p; ++mu) g[mu] += std::conj(O[s * p + mu]) * c;
  }
}

QROTOR_AVX2 void scaled_axpy(double a, const double* scale, const double* x, double* y,
                             std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d sx = _mm256_mul_pd(_mm256_loadu_pd(scale + i), _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, sx, _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * scale[i] * x[i];
}

QROTOR_AVX2 double weighted_sumsq(const double* x, const double* scale, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(scale + i), xv), xv, acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) total += scale[i] * x[i] * x[i];
  return total;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::Avx2, herk_upper, gemv_conj, scaled_axpy, weighted_sumsq};
  return table;
}

}  // namespace qrotor::kernels

#endif
