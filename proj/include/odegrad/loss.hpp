#ifndef ODEGRAD_LOSS_HPP
#define ODEGRAD_LOSS_HPP

#include "odegrad/vec.hpp"

namespace odegrad {

enum class LossKind {
    SquaredState, // J = sum_i z(T)_i^2
    MseToTarget,  // J = mean_i (z(T)_i - target_i)^2
};

struct LossSpec {
    LossKind kind = LossKind::SquaredState;
    StateVector target; // MseToTarget only
};

struct LossValue {
    double loss = 0.0;
    StateVector seed; // dJ/dz(T)
};

LossValue terminal_loss_grad(const LossSpec& spec, const StateVector& z_T);

} // namespace odegrad

#endif
