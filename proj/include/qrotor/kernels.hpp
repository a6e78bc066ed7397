#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace qrotor::kernels {

using cplx = std::complex<double>;

enum class Isa { Scalar, Avx2 };

std::string to_string(Isa isa);

/// Data-parallel inner loops used by the sampler and the QGT reduction.
/// Every entry has a scalar reference and optionally an AVX2+FMA variant;
/// the two agree to rounding (FMA contraction changes the last bits).
struct KernelTable {
  Isa isa;

  /// Upper triangle (nu >= mu) of S += sum_s w_s conj(O[s, mu]) O[s, nu].
  /// O is row-major n x p, S row-major p x p. The strict lower triangle of S
  /// is left untouched.
  void (*herk_upper)(const cplx* O, const double* w, std::size_t n, std::size_t p, cplx* S);

  /// g[mu] += sum_s w_s conj(O[s, mu]) e[s].
  void (*gemv_conj)(const cplx* O, const double* w, const cplx* e, std::size_t n, std::size_t p,
                    cplx* g);

  /// y[i] += a * scale[i] * x[i]
  void (*scaled_axpy)(double a, const double* scale, const double* x, double* y, std::size_t n);

  /// sum_i scale[i] * x[i]^2
  double (*weighted_sumsq)(const double* x, const double* scale, std::size_t n);
};

const KernelTable& scalar_table();

/// Tables usable on this CPU, scalar first.
std::vector<const KernelTable*> available_tables();

/// The table picked at first use: the widest supported ISA unless the
/// environment variable QROTOR_SIMD=scalar forces the reference kernels.
const KernelTable& active();

}  // namespace qrotor::kernels
