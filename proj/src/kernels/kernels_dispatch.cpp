#include <cstdlib>
#include <cstring>

#include "milkit/errors.hpp"
#include "milkit/kernels/kernels.hpp"

namespace milkit::kernels {

namespace scalar {
extern const KernelTable kTable;
}

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const KernelTable kTable;
}
#endif

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Backend pick_default() {
  if (const char* env = std::getenv("MILKIT_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!avx2_supported())
        throw Error("MILKIT_KERNELS=avx2 but CPU lacks AVX2/FMA");
      return Backend::avx2;
    }
  }
  return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = pick_default();

}  // namespace

Backend active_backend() { return g_backend; }

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_supported())
    throw Error("AVX2 backend not available on this CPU");
  g_backend = b;
}

const KernelTable& table_for(Backend b) {
#if defined(__x86_64__) || defined(_M_X64)
  if (b == Backend::avx2) return avx2::kTable;
#endif
  return scalar::kTable;
}

const KernelTable& active() { return table_for(g_backend); }

}  // namespace milkit::kernels
