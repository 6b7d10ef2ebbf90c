#pragma once

#include "evtrack/kernels.hpp"

namespace evtrack::kernels {

namespace scalar {
const KernelTable& table();
}
#ifdef EVTRACK_HAVE_AVX2
namespace avx2 {
const KernelTable& table();
}
#endif
#ifdef EVTRACK_HAVE_NEON
namespace neon {
const KernelTable& table();
}
#endif

}  // namespace evtrack::kernels
