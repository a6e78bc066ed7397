#include "kernels_impl.hpp"

namespace qrotor::kernels {

namespace {

void herk_upper(const cplx* O, const double* w, std::size_t n, std::size_t p, cplx* S) {
  for (std::size_t mu = 0; mu < p; ++mu) {
    cplx* row = S + mu * p;
    for (std::size_t s = 0; s < n; ++s) {
      const cplx* o = O + s * p;
      const cplx a = w[s] * std::conj(o[mu]);
      for (std::size_t nu = mu; nu < p; ++nu) row[nu] += a * o[nu];
    }
  }
}

void gemv_conj(const cplx* O, const double* w, const cplx* e, std::size_t n, std::size_t p,
               cplx* g) {
  for (std::size_t s = 0; s < n; ++s) {
    const cplx* o = O + s * p;
    const cplx c = w[s] * e[s];
    for (std::size_t mu = 0; mu < p; ++mu) g[mu] += std::conj(o[mu]) * c;
  }
}

void scaled_axpy(double a, const double* scale, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * scale[i] * x[i];
}

double weighted_sumsq(const double* x, const double* scale, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += scale[i] * x[i] * x[i];
  return acc;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar, herk_upper, gemv_conj, scaled_axpy, weighted_sumsq};
  return table;
}

}  // namespace qrotor::kernels
