#include "odegrad/gradients.hpp"

#include <cassert>
#include <cmath>

#include "odegrad/detail/rk_kernels.hpp"

namespace odegrad {

Method method_from_string(std::string_view name) {
    if (name == "naive") return Method::Naive;
    if (name == "adjoint") return Method::Adjoint;
    if (name == "aca") return Method::Aca;
    throw OdeError(ErrorCode::UnknownMethod, std::string(name));
}

const char* method_name(Method m) {
    switch (m) {
        case Method::Naive: return "naive";
        case Method::Adjoint: return "adjoint";
        case Method::Aca: return "aca";
    }
    return "?";
}

namespace {

/// Pass-through wrapper counting dynamics evaluations. Single-threaded use.
class CountingDynamics final : public DifferentiableDynamics {
public:
    explicit CountingDynamics(const DifferentiableDynamics& inner) : inner_(inner) {}

    int state_dim() const override { return inner_.state_dim(); }
    int param_dim() const override { return inner_.param_dim(); }
    ParamVector default_params() const override { return inner_.default_params(); }

    void eval_into(double t, std::span<const double> z, std::span<const double> theta,
                   std::span<double> dz) const override {
        ++evals_;
        inner_.eval_into(t, z, theta, dz);
    }

    void vjp_into(double t, std::span<const double> z, std::span<const double> theta,
                  std::span<const double> v, std::span<double> out_z,
                  std::span<double> out_theta) const override {
        inner_.vjp_into(t, z, theta, v, out_z, out_theta);
    }

    long evals() const { return evals_; }
    void reset() { evals_ = 0; }

private:
    const DifferentiableDynamics& inner_;
    mutable long evals_ = 0;
};

struct StepBackward {
    StateVector z_bar;
    double h_bar = 0.0;
};

/// Reverse sweep of one explicit RK step. Stage points are recomputed with
/// the same kernels as the forward pass; theta cotangents accumulate into
/// `theta_bar` in stage order s-1..0. When `resolve_k1` is false the first
/// stage's cotangent is exported through `k1_cot_out` instead of being pulled
/// through the dynamics (the stage value was shared from another trial).
StepBackward step_backward(const ButcherTableau& tb, const DifferentiableDynamics& dyn, double t,
                           const StateVector& z, const ParamVector& theta, double h,
                           const std::vector<StateVector>& k, const StateVector& w,
                           const std::vector<StateVector>* extra_k_cot,
                           const StateVector* k_last_extra, bool resolve_k1,
                           StateVector* k1_cot_out, ParamVector& theta_bar) {
    const int s = tb.stages;
    const std::size_t d = z.size();
    const std::size_t q = theta.size();

    std::vector<StateVector> g(static_cast<std::size_t>(s));
    for (int j = 0; j < s; ++j) {
        auto& gj = g[static_cast<std::size_t>(j)];
        gj.assign(d, 0.0);
        const double hb = h * tb.b[static_cast<std::size_t>(j)];
        if (hb != 0.0)
            for (std::size_t i = 0; i < d; ++i) gj[i] = hb * w[i];
        if (extra_k_cot) axpy(1.0, (*extra_k_cot)[static_cast<std::size_t>(j)], gj);
    }
    if (k_last_extra) axpy(1.0, *k_last_extra, g[static_cast<std::size_t>(s - 1)]);

    StepBackward out;
    out.z_bar = w;
    double h_bar = 0.0;
    for (int j = 0; j < s; ++j) {
        const double b = tb.b[static_cast<std::size_t>(j)];
        if (b != 0.0) h_bar += b * dot(w, k[static_cast<std::size_t>(j)]);
    }

    StateVector y(d), u_z(d);
    ParamVector u_th(q);
    for (int j = s - 1; j >= 1; --j) {
        const auto& gj = g[static_cast<std::size_t>(j)];
        detail::stage_point(tb, j, z, h, k, y);
        dyn.vjp_into(t + tb.c[static_cast<std::size_t>(j)] * h, y, theta, gj, u_z, u_th);
        axpy(1.0, u_z, out.z_bar);
        for (std::size_t i = 0; i < q; ++i) theta_bar[i] += u_th[i];
        for (int l = 0; l < j; ++l) {
            const double a = tb.a_at(j, l);
            if (a == 0.0) continue;
            h_bar += a * dot(u_z, k[static_cast<std::size_t>(l)]);
            axpy(h * a, u_z, g[static_cast<std::size_t>(l)]);
        }
    }
    if (resolve_k1) {
        dyn.vjp_into(t, z, theta, g[0], u_z, u_th);
        axpy(1.0, u_z, out.z_bar);
        for (std::size_t i = 0; i < q; ++i) theta_bar[i] += u_th[i];
    } else {
        *k1_cot_out = g[0];
    }
    out.h_bar = h_bar;
    return out;
}

/// d h_new / d h and d h_new / d err of propose_step at the recorded inputs.
/// Clamped branches and the zero-error branch have zero error-derivative.
std::pair<double, double> propose_partials(double err_norm, double h, int order,
                                           const SolverConfig& cfg) {
    if (err_norm == 0.0) return {cfg.max_factor, 0.0};
    const double expo = -1.0 / (order + 1);
    const double raw = cfg.safety * std::pow(err_norm, expo);
    if (raw <= cfg.min_factor) return {cfg.min_factor, 0.0};
    if (raw >= cfg.max_factor) return {cfg.max_factor, 0.0};
    const double dF = cfg.safety * expo * std::pow(err_norm, expo - 1.0);
    return {raw, h * dF};
}

inline double sign_of(double x) { return (x > 0.0) ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require_finite_result(GradientResult& res) {
    require_finite(res.d_loss_d_theta, "gradient w.r.t. parameters");
    require_finite(res.d_loss_d_z0, "gradient w.r.t. initial state");
}

/// Scatter the cotangent of the scaled RMS error norm into the stepsize, the
/// stage derivatives and the two states entering the scale term.
void error_norm_backward(const ButcherTableau& tb, double h, const std::vector<StateVector>& k,
                         const StateVector& z_old, const StateVector& z_new, double atol,
                         double rtol, double err_norm, double e_bar, double& h_bar,
                         std::vector<StateVector>& k_extra, StateVector& z_old_bar,
                         StateVector& z_new_bar) {
    if (e_bar == 0.0 || err_norm == 0.0) return;
    const std::size_t d = z_old.size();
    StateVector num;
    detail::error_vector(tb, h, k, num);
    StateVector num_bar(d);
    const double dn = static_cast<double>(d) * err_norm;
    for (std::size_t i = 0; i < d; ++i) {
        const double den = atol + rtol * std::max(std::abs(z_old[i]), std::abs(z_new[i]));
        const double e = num[i] / den;
        num_bar[i] = e_bar * e / (dn * den);
        const double den_bar = -e_bar * e * e / (dn * den);
        const double m_bar = rtol * den_bar;
        if (std::abs(z_old[i]) >= std::abs(z_new[i]))
            z_old_bar[i] += sign_of(z_old[i]) * m_bar;
        else
            z_new_bar[i] += sign_of(z_new[i]) * m_bar;
        h_bar += num_bar[i] * (num[i] / h);
    }
    for (int j = 0; j < tb.stages; ++j) {
        const double dj = tb.b[static_cast<std::size_t>(j)] - tb.b_hat[static_cast<std::size_t>(j)];
        if (dj == 0.0) continue;
        axpy(h * dj, num_bar, k_extra[static_cast<std::size_t>(j)]);
    }
}

/// Reverse IVP of the adjoint method: state [z, a, g] with
///   dz/dt = f(z, t, theta)
///   da/dt = -(df/dz)^T a          (a(t) = dL/dz(t); lambda = -a)
///   dg/dt = -a^T df/dtheta        (g(t0) = dL/dtheta when g(T) = 0)
class AugmentedAdjointDynamics final : public DifferentiableDynamics {
public:
    AugmentedAdjointDynamics(const DifferentiableDynamics& inner, ParamVector theta)
        : inner_(inner), theta_(std::move(theta)), d_(inner.state_dim()), q_(inner.param_dim()) {}

    int state_dim() const override { return 2 * d_ + q_; }
    int param_dim() const override { return 0; }

    void eval_into(double t, std::span<const double> y, std::span<const double>,
                   std::span<double> dy) const override {
        const auto z = y.subspan(0, static_cast<std::size_t>(d_));
        const auto a = y.subspan(static_cast<std::size_t>(d_), static_cast<std::size_t>(d_));
        inner_.eval_into(t, z, theta_, dy.subspan(0, static_cast<std::size_t>(d_)));
        inner_.vjp_into(t, z, theta_, a,
                        dy.subspan(static_cast<std::size_t>(d_), static_cast<std::size_t>(d_)),
                        dy.subspan(static_cast<std::size_t>(2 * d_), static_cast<std::size_t>(q_)));
        for (std::size_t i = static_cast<std::size_t>(d_); i < dy.size(); ++i) dy[i] = -dy[i];
    }

    void vjp_into(double, std::span<const double>, std::span<const double>,
                  std::span<const double>, std::span<double>, std::span<double>) const override {
        throw OdeError(ErrorCode::InvalidArgument, "augmented adjoint system is not differentiated");
    }

private:
    const DifferentiableDynamics& inner_;
    ParamVector theta_;
    int d_, q_;
};

} // namespace

SeededBackward aca_backward(const DifferentiableDynamics& dyn, const ParamVector& theta,
                            const ButcherTableau& tb, const SolverConfig& cfg,
                            const CheckpointCache& cache, const StateVector& seed,
                            CostStats* stats) {
    if (cache.z_values.size() != cache.time_points.size())
        throw OdeError(ErrorCode::InvalidArgument, "aca_backward: cache has no recorded states");
    const std::size_t n = cache.time_points.size();
    SeededBackward out;
    out.d_loss_d_theta.assign(theta.size(), 0.0);
    StateVector w = seed;
    for (std::size_t i = n - 1; i >= 1; --i) {
        const double t_prev = cache.time_points[i - 1];
        const double h = cache.time_points[i] - cache.time_points[i - 1];
        const StateVector& z_prev = cache.z_values[i - 1];
        StepOutcome local = step(tb, dyn, t_prev, z_prev, theta, h, cfg.atol, cfg.rtol, nullptr);
        if (stats) stats->backward_f_evals += local.f_evals;
        if (!bitwise_equal(local.z_new, cache.z_values[i]))
            throw OdeError(ErrorCode::CacheMismatch,
                           "recomputed step at t=" + std::to_string(t_prev) +
                               " differs from the checkpoint");
        StepBackward sb = step_backward(tb, dyn, t_prev, z_prev, theta, h, local.stage_derivs, w,
                                        nullptr, nullptr, true, nullptr, out.d_loss_d_theta);
        w = std::move(sb.z_bar);
    }
    out.d_loss_d_z0 = std::move(w);
    return out;
}

SeededBackward adjoint_backward(const DifferentiableDynamics& dyn, const ParamVector& theta,
                                const ButcherTableau& tb, const SolverConfig& cfg, double t0,
                                double T, const StateVector& z_T, const StateVector& seed,
                                CostStats* stats, AdjointTrace* trace) {
    const auto d = static_cast<std::size_t>(dyn.state_dim());
    const auto q = static_cast<std::size_t>(dyn.param_dim());
    CountingDynamics counted(dyn);
    AugmentedAdjointDynamics aug(counted, theta);

    StateVector y0(2 * d + q, 0.0);
    std::copy(z_T.begin(), z_T.end(), y0.begin());
    std::copy(seed.begin(), seed.end(), y0.begin() + static_cast<std::ptrdiff_t>(d));

    IntegrationResult rev = trace ? integrate(aug, y0, {}, T, t0, tb, cfg)
                                  : integrate_final_state(aug, y0, {}, T, t0, tb, cfg);
    if (stats) {
        stats->reverse_accepted += rev.cache.accepted_steps;
        stats->reverse_rejected += rev.cache.rejected_steps;
        stats->backward_f_evals += counted.evals();
    }
    if (trace) {
        trace->times = rev.cache.time_points;
        trace->costates.clear();
        trace->reconstructed_states.clear();
        for (const auto& y : rev.cache.z_values) {
            StateVector lambda(d), zbar(d);
            for (std::size_t i = 0; i < d; ++i) {
                zbar[i] = y[i];
                lambda[i] = -y[d + i];
            }
            trace->reconstructed_states.push_back(std::move(zbar));
            trace->costates.push_back(std::move(lambda));
        }
    }

    SeededBackward out;
    out.d_loss_d_z0.assign(d, 0.0);
    out.d_loss_d_theta.assign(q, 0.0);
    for (std::size_t i = 0; i < d; ++i) out.d_loss_d_z0[i] = rev.z_final[d + i];
    for (std::size_t i = 0; i < q; ++i) out.d_loss_d_theta[i] = rev.z_final[2 * d + i];
    return out;
}

SeededBackward naive_backward(const DifferentiableDynamics& dyn, const ParamVector& theta,
                              const ButcherTableau& tb, const SolverConfig& cfg,
                              const ForwardTape& tape, const CheckpointCache& cache,
                              const StateVector& seed, CostStats* stats) {
    if (cache.z_values.size() != cache.time_points.size())
        throw OdeError(ErrorCode::InvalidArgument, "naive_backward: cache has no recorded states");
    const auto n_points = cache.z_values.size(); // accepted states 0..N
    const auto n_trials = tape.trials.size();
    const std::size_t d = cache.z_values.front().size();
    const std::size_t q = theta.size();
    const int s = tb.stages;

    std::vector<StateVector> z_bar(n_points, StateVector(d, 0.0));
    z_bar.back() = seed;
    std::vector<double> t_bar(n_points, 0.0);
    std::vector<double> h_bar(n_trials, 0.0);
    std::vector<double> e_bar(n_trials, 0.0);
    ParamVector theta_bar(q, 0.0);

    // Cotangent destined for the shared first-stage value of `pending_point`.
    StateVector pending;
    int pending_point = -1;

    std::vector<StateVector> k_extra;
    StateVector k1_out(d);

    for (std::size_t idx = n_trials; idx-- > 0;) {
        const TrialRecord& tr = tape.trials[idx];
        const auto point = static_cast<std::size_t>(tr.point);
        const StateVector& z_in = cache.z_values[point];

        StateVector w;
        if (tr.accepted) {
            // time-advance node t_{p+1} = t_p + h: all consumers of t_{p+1}
            // (later truncations, the next time advance) are already done
            if (point + 2 <= n_points && t_bar[point + 1] != 0.0) {
                h_bar[idx] += t_bar[point + 1];
                t_bar[point] += t_bar[point + 1];
            }
            w = std::move(z_bar[point + 1]);
        } else {
            w.assign(d, 0.0);
        }

        // incoming cotangent for a first-stage value shared from this trial
        const bool fsal_carry_in =
            tr.accepted && pending_point == tr.point + 1 && !pending.empty();
        StateVector k_last_extra_storage;
        const StateVector* k_last_extra = nullptr;
        if (fsal_carry_in) {
            k_last_extra_storage = std::move(pending);
            k_last_extra = &k_last_extra_storage;
            pending.clear();
            pending_point = -1;
        }

        const bool has_err_cot = tape.adaptive && e_bar[idx] != 0.0;
        const bool owner_merge = tr.owns_k1 && pending_point == tr.point && !pending.empty();
        const bool need_extra = has_err_cot || owner_merge;
        const std::vector<StateVector>* extra_ptr = nullptr;
        if (need_extra) {
            k_extra.assign(static_cast<std::size_t>(s), StateVector(d, 0.0));
            if (owner_merge) {
                axpy(1.0, pending, k_extra[0]);
                pending.clear();
                pending_point = -1;
            }
            if (has_err_cot)
                error_norm_backward(tb, tr.h, tr.stage_derivs, z_in, tr.z_new, cfg.atol, cfg.rtol,
                                    tr.err_norm, e_bar[idx], h_bar[idx], k_extra, z_bar[point], w);
            extra_ptr = &k_extra;
        }

        StepBackward sb =
            step_backward(tb, dyn, tr.t, z_in, theta, tr.h, tr.stage_derivs, w, extra_ptr,
                          k_last_extra, tr.owns_k1, tr.owns_k1 ? nullptr : &k1_out, theta_bar);
        axpy(1.0, sb.z_bar, z_bar[point]);
        h_bar[idx] += sb.h_bar;

        if (!tr.owns_k1) {
            if (pending_point == tr.point) {
                axpy(1.0, k1_out, pending);
            } else {
                assert(pending.empty());
                pending = k1_out;
                pending_point = tr.point;
            }
        }

        // route this trial's stepsize cotangent to its producer
        switch (tr.h_source.kind) {
            case HSourceKind::Initial:
                break; // leaf
            case HSourceKind::Rejection:
            case HSourceKind::Growth: {
                const auto parent = static_cast<std::size_t>(tr.h_source.parent_trial);
                const TrialRecord& pt = tape.trials[parent];
                const auto [dh, derr] = propose_partials(pt.err_norm, pt.h, tb.order, cfg);
                h_bar[parent] += h_bar[idx] * dh;
                e_bar[parent] += h_bar[idx] * derr;
                break;
            }
            case HSourceKind::Truncation:
                t_bar[static_cast<std::size_t>(tr.h_source.trunc_point)] -= h_bar[idx];
                break;
        }
    }
    assert(pending.empty());

    if (stats) stats->peak_tape_nodes = tape.node_count();
    SeededBackward out;
    out.d_loss_d_theta = std::move(theta_bar);
    out.d_loss_d_z0 = std::move(z_bar[0]);
    return out;
}

long aca_equivalent_node_count(const CheckpointCache& cache, const ButcherTableau& tb) {
    // leaves z0 and theta, then per interval: `stages` evaluations,
    // `stages - 1` stage points and one solution combination
    return 2 + cache.accepted_steps * (2L * tb.stages);
}

GradientResult grad_aca(const DifferentiableDynamics& dyn, const StateVector& z0,
                        const ParamVector& theta, double t0, double T, const ButcherTableau& tb,
                        const SolverConfig& cfg, const LossSpec& loss, const GradientOptions&) {
    GradientResult res;
    CountingDynamics counted(dyn);
    IntegrationResult fwd = integrate(counted, z0, theta, t0, T, tb, cfg);
    res.stats.forward_f_evals = counted.evals();
    res.stats.forward_accepted = fwd.cache.accepted_steps;
    res.stats.forward_rejected = fwd.cache.rejected_steps;

    LossValue lv = terminal_loss_grad(loss, fwd.z_final);
    res.loss = lv.loss;
    SeededBackward bwd = aca_backward(dyn, theta, tb, cfg, fwd.cache, lv.seed, &res.stats);
    res.d_loss_d_theta = std::move(bwd.d_loss_d_theta);
    res.d_loss_d_z0 = std::move(bwd.d_loss_d_z0);
    require_finite_result(res);
    return res;
}

GradientResult grad_adjoint(const DifferentiableDynamics& dyn, const StateVector& z0,
                            const ParamVector& theta, double t0, double T,
                            const ButcherTableau& tb, const SolverConfig& cfg,
                            const LossSpec& loss, const GradientOptions& opts) {
    GradientResult res;
    CountingDynamics counted(dyn);
    IntegrationResult fwd = integrate_final_state(counted, z0, theta, t0, T, tb, cfg);
    res.stats.forward_f_evals = counted.evals();
    res.stats.forward_accepted = fwd.cache.accepted_steps;
    res.stats.forward_rejected = fwd.cache.rejected_steps;

    LossValue lv = terminal_loss_grad(loss, fwd.z_final);
    res.loss = lv.loss;
    const ButcherTableau& rtb = opts.reverse_tableau ? *opts.reverse_tableau : tb;
    const SolverConfig& rcfg = opts.reverse_cfg ? *opts.reverse_cfg : cfg;
    SeededBackward bwd = adjoint_backward(dyn, theta, rtb, rcfg, t0, T, fwd.z_final, lv.seed,
                                          &res.stats, opts.trace);
    res.d_loss_d_theta = std::move(bwd.d_loss_d_theta);
    res.d_loss_d_z0 = std::move(bwd.d_loss_d_z0);
    require_finite_result(res);
    return res;
}

GradientResult grad_naive(const DifferentiableDynamics& dyn, const StateVector& z0,
                          const ParamVector& theta, double t0, double T, const ButcherTableau& tb,
                          const SolverConfig& cfg, const LossSpec& loss,
                          const GradientOptions& opts) {
    GradientResult res;
    ForwardTape tape;
    tape.node_budget = opts.tape_node_budget;
    CountingDynamics counted(dyn);
    IntegrationResult fwd = integrate_recording(counted, z0, theta, t0, T, tb, cfg, tape);
    res.stats.forward_f_evals = counted.evals();
    res.stats.forward_accepted = fwd.cache.accepted_steps;
    res.stats.forward_rejected = fwd.cache.rejected_steps;

    LossValue lv = terminal_loss_grad(loss, fwd.z_final);
    res.loss = lv.loss;
    SeededBackward bwd = naive_backward(dyn, theta, tb, cfg, tape, fwd.cache, lv.seed, &res.stats);
    res.d_loss_d_theta = std::move(bwd.d_loss_d_theta);
    res.d_loss_d_z0 = std::move(bwd.d_loss_d_z0);
    require_finite_result(res);
    return res;
}

GradientResult gradient_dispatch(Method method, const DifferentiableDynamics& dyn,
                                 const StateVector& z0, const ParamVector& theta, double t0,
                                 double T, const ButcherTableau& tb, const SolverConfig& cfg,
                                 const LossSpec& loss, const GradientOptions& opts) {
    switch (method) {
        case Method::Naive: return grad_naive(dyn, z0, theta, t0, T, tb, cfg, loss, opts);
        case Method::Adjoint: return grad_adjoint(dyn, z0, theta, t0, T, tb, cfg, loss, opts);
        case Method::Aca: return grad_aca(dyn, z0, theta, t0, T, tb, cfg, loss, opts);
    }
    throw OdeError(ErrorCode::UnknownMethod, "bad method enum");
}

} // namespace odegrad
