#include "odegrad/loss.hpp"

namespace odegrad {

LossValue terminal_loss_grad(const LossSpec& spec, const StateVector& z_T) {
    require_finite(z_T, "terminal_loss_grad: z(T)");
    LossValue out;
    out.seed.assign(z_T.size(), 0.0);
    switch (spec.kind) {
        case LossKind::SquaredState: {
            double s = 0.0;
            for (std::size_t i = 0; i < z_T.size(); ++i) {
                s += z_T[i] * z_T[i];
                out.seed[i] = 2.0 * z_T[i];
            }
            out.loss = s;
            break;
        }
        case LossKind::MseToTarget: {
            require_dim(spec.target.size(), z_T.size(), "terminal_loss_grad: target");
            const double n = static_cast<double>(z_T.size());
            double s = 0.0;
            for (std::size_t i = 0; i < z_T.size(); ++i) {
                const double r = z_T[i] - spec.target[i];
                s += r * r;
                out.seed[i] = 2.0 * r / n;
            }
            out.loss = s / n;
            break;
        }
    }
    return out;
}

} // namespace odegrad
