#include "ecokit/simd/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ecokit::simd {

namespace {

bool cpu_has_avx2_fma() {
#if defined(ECOKIT_HAVE_AVX2) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Level resolve_initial_level() {
    const char* env = std::getenv("ECOKIT_SIMD");
    if (env != nullptr) {
        const std::string v(env);
        if (v == "scalar") return Level::scalar;
        if (v == "avx2") {
            if (!cpu_has_avx2_fma())
                throw std::runtime_error("ECOKIT_SIMD=avx2 but AVX2+FMA is unavailable");
            return Level::avx2;
        }
        // anything else, including "auto", falls through to detection
    }
    return cpu_has_avx2_fma() ? Level::avx2 : Level::scalar;
}

Level& current_level() {
    static Level level = resolve_initial_level();
    return level;
}

}  // namespace

Level active_level() { return current_level(); }

bool level_available(Level level) {
    if (level == Level::scalar) return true;
    return cpu_has_avx2_fma();
}

void set_level(Level level) {
    if (!level_available(level))
        throw std::runtime_error("requested SIMD level not available on this CPU/build");
    current_level() = level;
}

std::string_view level_name(Level level) {
    return level == Level::avx2 ? "avx2" : "scalar";
}

#if defined(ECOKIT_HAVE_AVX2)
#define ECOKIT_DISPATCH(fn, ...) \
    return current_level() == Level::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#define ECOKIT_DISPATCH_VOID(fn, ...)                  \
    if (current_level() == Level::avx2) {              \
        avx2::fn(__VA_ARGS__);                         \
    } else {                                           \
        scalar::fn(__VA_ARGS__);                       \
    }
#else
#define ECOKIT_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#define ECOKIT_DISPATCH_VOID(fn, ...) scalar::fn(__VA_ARGS__)
#endif

double dot(const double* a, const double* b, std::size_t n) { ECOKIT_DISPATCH(dot, a, b, n); }
double sumsq(const double* a, std::size_t n) { ECOKIT_DISPATCH(sumsq, a, n); }
double sum(const double* a, std::size_t n) { ECOKIT_DISPATCH(sum, a, n); }
double sq_diff_sum(const double* a, const double* b, std::size_t n) {
    ECOKIT_DISPATCH(sq_diff_sum, a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
    ECOKIT_DISPATCH_VOID(axpy, alpha, x, y, n);
}
void scale(double alpha, double* x, std::size_t n) { ECOKIT_DISPATCH_VOID(scale, alpha, x, n); }

#undef ECOKIT_DISPATCH
#undef ECOKIT_DISPATCH_VOID

}  // namespace ecokit::simd
