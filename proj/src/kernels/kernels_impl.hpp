#pragma once

#include "qrotor/kernels.hpp"

namespace qrotor::kernels {

#if defined(QROTOR_HAVE_AVX2_KERNELS)
const KernelTable& avx2_table();
#endif

}  // namespace qrotor::kernels
