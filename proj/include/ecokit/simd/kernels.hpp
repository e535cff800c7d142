#pragma once

#include <cstddef>
#include <string_view>

namespace ecokit::simd {

enum class Level { scalar, avx2 };

// Kernel set used by the dispatching entry points below. Resolved once from
// CPUID (overridable with the ECOKIT_SIMD environment variable, values
// "scalar", "avx2" or "auto"); set_level() switches it explicitly and throws
// if the requested level is not available on this machine.
[[nodiscard]] Level active_level();
void set_level(Level level);
[[nodiscard]] bool level_available(Level level);
[[nodiscard]] std::string_view level_name(Level level);

// Double-precision kernels. The scalar namespace is the reference semantics;
// vector variants may reorder accumulation and are held to a relative
// tolerance against the reference (tests/test_simd.cpp).
[[nodiscard]] double dot(const double* a, const double* b, std::size_t n);
[[nodiscard]] double sumsq(const double* a, std::size_t n);
[[nodiscard]] double sum(const double* a, std::size_t n);
[[nodiscard]] double sq_diff_sum(const double* a, const double* b, std::size_t n);
// y := y + alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
// x := alpha * x
void scale(double alpha, double* x, std::size_t n);

namespace scalar {
[[nodiscard]] double dot(const double* a, const double* b, std::size_t n);
[[nodiscard]] double sumsq(const double* a, std::size_t n);
[[nodiscard]] double sum(const double* a, std::size_t n);
[[nodiscard]] double sq_diff_sum(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
}  // namespace scalar

#if defined(ECOKIT_HAVE_AVX2)
namespace avx2 {
[[nodiscard]] double dot(const double* a, const double* b, std::size_t n);
[[nodiscard]] double sumsq(const double* a, std::size_t n);
[[nodiscard]] double sum(const double* a, std::size_t n);
[[nodiscard]] double sq_diff_sum(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
}  // namespace avx2
#endif

}  // namespace ecokit::simd
