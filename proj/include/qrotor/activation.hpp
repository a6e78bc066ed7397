#pragma once

#include <complex>

namespace qrotor {

/// Degree-6 Taylor polynomial of ln I0(z): z^2/4 - z^4/64 + z^6/576.
/// Entire in z, so networks built from it stay holomorphic in their
/// parameters.
inline std::complex<double> poly_log_I0(std::complex<double> z) {
  const auto z2 = z * z;
  return z2 * (1.0 / 4.0 + z2 * (-1.0 / 64.0 + z2 * (1.0 / 576.0)));
}

/// Degree-5 Taylor polynomial of I1(z)/I0(z): z/2 - z^3/16 + z^5/96.
/// This is exactly d/dz poly_log_I0.
inline std::complex<double> poly_I1_over_I0(std::complex<double> z) {
  const auto z2 = z * z;
  return z * (1.0 / 2.0 + z2 * (-1.0 / 16.0 + z2 * (1.0 / 96.0)));
}

/// Second derivative of poly_log_I0: 1/2 - 3z^2/16 + 5z^4/96.
inline std::complex<double> poly_log_I0_dd(std::complex<double> z) {
  const auto z2 = z * z;
  return 1.0 / 2.0 + z2 * (-3.0 / 16.0 + z2 * (5.0 / 96.0));
}

// The same polynomial written in u = z^2, used by the circular RBM where the
// hidden-unit argument is |x|^2 = x_1^2 + x_2^2 and never needs a square root.
inline std::complex<double> log_I0_of_square(std::complex<double> u) {
  return u * (1.0 / 4.0 + u * (-1.0 / 64.0 + u * (1.0 / 576.0)));
}
inline std::complex<double> log_I0_of_square_d(std::complex<double> u) {
  return 1.0 / 4.0 + u * (-1.0 / 32.0 + u * (1.0 / 192.0));
}
inline std::complex<double> log_I0_of_square_dd(std::complex<double> u) {
  return -1.0 / 32.0 + u * (1.0 / 96.0);
}

}  // namespace qrotor
