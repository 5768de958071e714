#include <cstdlib>
#include <string>

#include "ecpe/kernels.hpp"

namespace ecpe::kernels {

#if defined(ECPE_HAVE_AVX2_TU)
const Ops& avx2_ops_impl();  // defined in kernels_avx2.cpp
#endif

bool avx2_supported() {
#if defined(ECPE_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops& avx2_ops() {
#if defined(ECPE_HAVE_AVX2_TU)
  if (avx2_supported()) return avx2_ops_impl();
#endif
  return scalar_ops();
}

namespace {

struct State {
  Backend backend;
  const Ops* ops;
};

State resolve(Backend b) {
  if (b == Backend::Auto) {
    if (const char* env = std::getenv("ECPE_KERNELS")) {
      std::string s(env);
      if (s == "scalar") b = Backend::Scalar;
      else if (s == "avx2") b = Backend::Avx2;
    }
  }
  if (b == Backend::Auto) {
    b = avx2_supported() ? Backend::Avx2 : Backend::Scalar;
  }
  if (b == Backend::Avx2 && !avx2_supported()) b = Backend::Scalar;
  return {b, b == Backend::Avx2 ? &avx2_ops() : &scalar_ops()};
}

State& state() {
  static State s = resolve(Backend::Auto);
  return s;
}

}  // namespace

const Ops& active() { return *state().ops; }

Backend active_backend() { return state().backend; }

Backend select(Backend b) {
  state() = resolve(b);
  return state().backend;
}

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::Auto: return "auto";
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "?";
}

}  // namespace ecpe::kernels
