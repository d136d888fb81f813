#ifndef ODEGRAD_DETAIL_RK_KERNELS_HPP
#define ODEGRAD_DETAIL_RK_KERNELS_HPP

#include "odegrad/tableau.hpp"
#include "odegrad/vec.hpp"

// Stage arithmetic shared by the forward step and every backward pass.
// The backward passes recompute stage points with these exact routines so
// the replayed values match the forward pass bitwise; do not reorder the
// accumulations.

namespace odegrad::detail {

// y = z + h * sum_{l<j} a[j][l] * k_l
inline void stage_point(const ButcherTableau& tb, int j, const StateVector& z, double h,
                        const std::vector<StateVector>& k, StateVector& y) {
    y = z;
    for (int l = 0; l < j; ++l) {
        const double a = tb.a_at(j, l);
        if (a == 0.0) continue;
        axpy(h * a, k[l], y);
    }
}

// z_new = z + h * sum_j b[j] * k_j
inline void combine_solution(const ButcherTableau& tb, const StateVector& z, double h,
                             const std::vector<StateVector>& k, StateVector& z_new) {
    z_new = z;
    for (int j = 0; j < tb.stages; ++j) {
        const double b = tb.b[static_cast<std::size_t>(j)];
        if (b == 0.0) continue;
        axpy(h * b, k[static_cast<std::size_t>(j)], z_new);
    }
}

// err = h * sum_j (b[j] - b_hat[j]) * k_j
inline void error_vector(const ButcherTableau& tb, double h, const std::vector<StateVector>& k,
                         StateVector& err) {
    err.assign(k.front().size(), 0.0);
    for (int j = 0; j < tb.stages; ++j) {
        const double d = tb.b[static_cast<std::size_t>(j)] - tb.b_hat[static_cast<std::size_t>(j)];
        if (d == 0.0) continue;
        axpy(h * d, k[static_cast<std::size_t>(j)], err);
    }
}

} // namespace odegrad::detail

#endif
