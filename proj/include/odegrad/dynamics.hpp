#ifndef ODEGRAD_DYNAMICS_HPP
#define ODEGRAD_DYNAMICS_HPP

#include <memory>
#include <span>

#include "odegrad/vec.hpp"

namespace odegrad {

struct VjpResult {
    StateVector wrt_state;  // v^T df/dz
    ParamVector wrt_params; // v^T df/dtheta
};

/// Right-hand side f(z, t, theta) of dz/dt = f together with its
/// vector-Jacobian products. Implementations are immutable after
/// construction; eval/vjp are pure, so instances can be shared across
/// concurrent integrations.
class DifferentiableDynamics {
public:
    virtual ~DifferentiableDynamics() = default;

    virtual int state_dim() const = 0;
    virtual int param_dim() const = 0;

    /// Parameter values the dynamics was constructed with.
    virtual ParamVector default_params() const { return ParamVector(static_cast<std::size_t>(param_dim()), 0.0); }

    /// dz = f(z, t, theta). dz has size state_dim.
    virtual void eval_into(double t, std::span<const double> z, std::span<const double> theta,
                           std::span<double> dz) const = 0;

    /// out_z = v^T df/dz (size state_dim), out_theta = v^T df/dtheta (size param_dim).
    /// Outputs are overwritten, not accumulated.
    virtual void vjp_into(double t, std::span<const double> z, std::span<const double> theta,
                          std::span<const double> v, std::span<double> out_z,
                          std::span<double> out_theta) const = 0;

    StateVector eval(double t, const StateVector& z, const ParamVector& theta) const {
        require_dim(z.size(), static_cast<std::size_t>(state_dim()), "eval state");
        require_dim(theta.size(), static_cast<std::size_t>(param_dim()), "eval params");
        StateVector dz(z.size());
        eval_into(t, z, theta, dz);
        return dz;
    }

    VjpResult vjp(double t, const StateVector& z, const ParamVector& theta, const StateVector& v) const {
        require_dim(z.size(), static_cast<std::size_t>(state_dim()), "vjp state");
        require_dim(theta.size(), static_cast<std::size_t>(param_dim()), "vjp params");
        require_dim(v.size(), static_cast<std::size_t>(state_dim()), "vjp cotangent");
        VjpResult r;
        r.wrt_state.assign(z.size(), 0.0);
        r.wrt_params.assign(theta.size(), 0.0);
        vjp_into(t, z, theta, v, r.wrt_state, r.wrt_params);
        return r;
    }
};

/// f = k * z elementwise, theta = [k].
std::shared_ptr<DifferentiableDynamics> linear_dynamics(double k, int dim = 1);

/// Van der Pol oscillator, state (y1, y2):
///   dy1/dt = y2
///   dy2/dt = (mu - y1^2) * y2 - y1
/// No free parameters; mu is fixed at construction (default 0.15).
std::shared_ptr<DifferentiableDynamics> van_der_pol_dynamics(double mu = 0.15);

} // namespace odegrad

#endif
