#ifndef ODEGRAD_VEC_HPP
#define ODEGRAD_VEC_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "odegrad/errors.hpp"

namespace odegrad {

// Dense ODE state z(t). Dimension is fixed by the owning dynamics.
using StateVector = std::vector<double>;
// Flattened parameter vector theta.
using ParamVector = std::vector<double>;

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void require_finite(std::span<const double> v, const char* what) {
    if (!all_finite(v)) throw OdeError(ErrorCode::NonfiniteState, what);
}

inline void require_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw OdeError(ErrorCode::DimensionMismatch,
                       std::string(what) + " (got " + std::to_string(got) + ", want " +
                           std::to_string(want) + ")");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double rms_norm(std::span<const double> a) {
    if (a.empty()) return 0.0;
    return std::sqrt(dot(a, a) / static_cast<double>(a.size()));
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline StateVector sub(const StateVector& a, const StateVector& b) {
    StateVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

// Exact element equality (inputs are finite by contract).
inline bool bitwise_equal(const StateVector& a, const StateVector& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

} // namespace odegrad

#endif
