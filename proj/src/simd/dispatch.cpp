#include <cstdlib>
#include <string>

#include "kgalign/error.hpp"
#include "kgalign/simd/kernels.hpp"

namespace kgalign::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

namespace {

Isa resolve() {
  if (const char* pinned = std::getenv("KGALIGN_ISA")) {
    const std::string want(pinned);
    for (const Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == to_string(isa)) {
        if (!isa_available(isa)) {
          throw Error(ErrorKind::ConfigError, "KGALIGN_ISA=" + want + " not supported here");
        }
        return isa;
      }
    }
    throw Error(ErrorKind::ConfigError, "unknown KGALIGN_ISA value '" + want + "'");
  }
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  if (isa_available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = resolve();
  return isa;
}

DotFn dot_for(Isa isa) {
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2: return &dot_avx2;
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
    case Isa::Neon: return &dot_neon;
#endif
    default: return &dot_scalar;
  }
}

DotManyFn dot_many_for(Isa isa) {
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2: return &dot_many_avx2;
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
    case Isa::Neon: return &dot_many_neon;
#endif
    default: return &dot_many_scalar;
  }
}

}  // namespace kgalign::simd
