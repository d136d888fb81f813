#ifndef ODEGRAD_GRADIENTS_HPP
#define ODEGRAD_GRADIENTS_HPP

#include <string_view>

#include "odegrad/loss.hpp"
#include "odegrad/solver.hpp"
#include "odegrad/tape.hpp"

namespace odegrad {

enum class Method { Naive, Adjoint, Aca };

Method method_from_string(std::string_view name); // "naive" | "adjoint" | "aca"
const char* method_name(Method m);

struct CostStats {
    long forward_f_evals = 0;  // dynamics evaluations during the forward pass
    long backward_f_evals = 0; // dynamics evaluations during the backward pass
    long forward_accepted = 0;
    long forward_rejected = 0;
    long reverse_accepted = 0; // adjoint only: accepted steps of the reverse IVP
    long reverse_rejected = 0;
    long peak_tape_nodes = 0;  // naive only: retained solver-graph nodes
};

struct GradientResult {
    ParamVector d_loss_d_theta;
    StateVector d_loss_d_z0;
    double loss = 0.0;
    CostStats stats;
};

/// Reverse-pass samples of the adjoint method: costate lambda(t) (convention
/// lambda(T) = -dJ/dz(T)) and the reverse-time state reconstruction, at the
/// reverse solver's accepted points (times run from T down to t0).
struct AdjointTrace {
    std::vector<double> times;
    std::vector<StateVector> costates;
    std::vector<StateVector> reconstructed_states;
};

struct GradientOptions {
    const ButcherTableau* reverse_tableau = nullptr; // adjoint: default = forward tableau
    const SolverConfig* reverse_cfg = nullptr;       // adjoint: default = forward config
    long tape_node_budget = 50000000;                // naive: TAPE_OVERFLOW above this
    AdjointTrace* trace = nullptr;                   // adjoint: optional reverse-pass trace
};

/// Adaptive-checkpoint gradient: forward integration keeps the accepted
/// (t_i, z_i) checkpoints, the backward pass re-executes exactly one step per
/// interval and composes its vector-Jacobian products. The recomputed step
/// must reproduce the cached state bitwise (CACHE_MISMATCH otherwise).
GradientResult grad_aca(const DifferentiableDynamics& dyn, const StateVector& z0,
                        const ParamVector& theta, double t0, double T, const ButcherTableau& tb,
                        const SolverConfig& cfg, const LossSpec& loss,
                        const GradientOptions& opts = {});

/// Continuous adjoint: the forward pass keeps only z(T); the backward pass
/// solves one reverse IVP of dimension 2*state_dim + param_dim carrying the
/// reverse-time state, the costate and the running parameter integral.
GradientResult grad_adjoint(const DifferentiableDynamics& dyn, const StateVector& z0,
                            const ParamVector& theta, double t0, double T,
                            const ButcherTableau& tb, const SolverConfig& cfg,
                            const LossSpec& loss, const GradientOptions& opts = {});

/// Direct backpropagation through the solver: the forward pass records every
/// computation (rejected trials and the step-size controller included) and
/// the backward pass replays the tape in reverse.
GradientResult grad_naive(const DifferentiableDynamics& dyn, const StateVector& z0,
                          const ParamVector& theta, double t0, double T, const ButcherTableau& tb,
                          const SolverConfig& cfg, const LossSpec& loss,
                          const GradientOptions& opts = {});

GradientResult gradient_dispatch(Method method, const DifferentiableDynamics& dyn,
                                 const StateVector& z0, const ParamVector& theta, double t0,
                                 double T, const ButcherTableau& tb, const SolverConfig& cfg,
                                 const LossSpec& loss, const GradientOptions& opts = {});

/// Seeded backward passes, used to chain gradients across trajectory
/// segments: `seed` is dL/dz(T) and the returned d_loss_d_z0/d_loss_d_theta
/// are the pullbacks through the segment.
struct SeededBackward {
    ParamVector d_loss_d_theta;
    StateVector d_loss_d_z0;
};

SeededBackward aca_backward(const DifferentiableDynamics& dyn, const ParamVector& theta,
                            const ButcherTableau& tb, const SolverConfig& cfg,
                            const CheckpointCache& cache, const StateVector& seed,
                            CostStats* stats = nullptr);

SeededBackward adjoint_backward(const DifferentiableDynamics& dyn, const ParamVector& theta,
                                const ButcherTableau& tb, const SolverConfig& cfg, double t0,
                                double T, const StateVector& z_T, const StateVector& seed,
                                CostStats* stats = nullptr, AdjointTrace* trace = nullptr);

SeededBackward naive_backward(const DifferentiableDynamics& dyn, const ParamVector& theta,
                              const ButcherTableau& tb, const SolverConfig& cfg,
                              const ForwardTape& tape, const CheckpointCache& cache,
                              const StateVector& seed, CostStats* stats = nullptr);

/// Node count of the graph the ACA backward pass touches for the same run:
/// accepted steps only, all stages re-evaluated, no controller/error nodes.
long aca_equivalent_node_count(const CheckpointCache& cache, const ButcherTableau& tb);

} // namespace odegrad

#endif
