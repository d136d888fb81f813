#include "odegrad/solver.hpp"

#include <algorithm>
#include <cmath>

#include "odegrad/detail/rk_kernels.hpp"

namespace odegrad {

void SolverConfig::validate() const {
    if (!(rtol > 0.0) || !(atol > 0.0))
        throw OdeError(ErrorCode::InvalidArgument, "rtol and atol must be positive");
    if (!(min_factor > 0.0 && min_factor < 1.0 && max_factor > 1.0))
        throw OdeError(ErrorCode::InvalidArgument, "need 0 < min_factor < 1 < max_factor");
    if (!(safety > 0.0 && safety < 1.0))
        throw OdeError(ErrorCode::InvalidArgument, "need 0 < safety < 1");
    if (max_rejects_per_step < 0 || max_steps < 1 || fixed_steps < 0)
        throw OdeError(ErrorCode::InvalidArgument, "bad solver limits");
    if (h_init && (*h_init == 0.0 || !std::isfinite(*h_init)))
        throw OdeError(ErrorCode::InvalidArgument, "h_init must be nonzero and finite");
    if (h_min && !(*h_min > 0.0))
        throw OdeError(ErrorCode::InvalidArgument, "h_min must be positive");
}

double error_norm(const StateVector& err_vec, const StateVector& z_old, const StateVector& z_new,
                  double atol, double rtol) {
    require_dim(z_old.size(), err_vec.size(), "error_norm z_old");
    require_dim(z_new.size(), err_vec.size(), "error_norm z_new");
    if (err_vec.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < err_vec.size(); ++i) {
        const double den = atol + rtol * std::max(std::abs(z_old[i]), std::abs(z_new[i]));
        const double e = err_vec[i] / den;
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(err_vec.size()));
}

double propose_step(double err_norm, double h, int order, const SolverConfig& cfg, double h_min) {
    double factor;
    if (err_norm == 0.0) {
        factor = cfg.max_factor;
    } else {
        factor = std::clamp(cfg.safety * std::pow(err_norm, -1.0 / (order + 1)), cfg.min_factor,
                            cfg.max_factor);
    }
    const double h_new = h * factor;
    if (std::abs(h_new) < h_min)
        throw OdeError(ErrorCode::StepUnderflow,
                       "proposed stepsize " + std::to_string(h_new) + " below h_min");
    return h_new;
}

double initial_step(const DifferentiableDynamics& dyn, double t0, const StateVector& z0,
                    const ParamVector& theta, double T, int order, const SolverConfig& cfg) {
    const double span = std::abs(T - t0);
    const double dir = (T >= t0) ? 1.0 : -1.0;
    const double h_min = cfg.h_min.value_or(1e-12 * span);
    const std::size_t d = z0.size();

    StateVector f0(d);
    dyn.eval_into(t0, z0, theta, f0);

    StateVector scaled(d);
    for (std::size_t i = 0; i < d; ++i) scaled[i] = z0[i] / (cfg.atol + cfg.rtol * std::abs(z0[i]));
    const double d0 = rms_norm(scaled);
    for (std::size_t i = 0; i < d; ++i) scaled[i] = f0[i] / (cfg.atol + cfg.rtol * std::abs(z0[i]));
    const double d1 = rms_norm(scaled);
    if (d1 == 0.0) return span; // zero derivative: take the clamp ceiling

    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);

    StateVector z1(d);
    for (std::size_t i = 0; i < d; ++i) z1[i] = z0[i] + dir * h0 * f0[i];
    StateVector f1(d);
    dyn.eval_into(t0 + dir * h0, z1, theta, f1);
    for (std::size_t i = 0; i < d; ++i)
        scaled[i] = (f1[i] - f0[i]) / (cfg.atol + cfg.rtol * std::abs(z0[i]));
    const double d2 = rms_norm(scaled) / h0;

    const double m = std::max(d1, d2);
    const double h1 = (m <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                   : std::pow(0.01 / m, 1.0 / (order + 1));
    return std::clamp(std::min(100.0 * h0, h1), h_min, span);
}

StepOutcome step(const ButcherTableau& tb, const DifferentiableDynamics& dyn, double t,
                 const StateVector& z, const ParamVector& theta, double h, double atol,
                 double rtol, const StateVector* first_stage) {
    if (h == 0.0) throw OdeError(ErrorCode::InvalidArgument, "step: h must be nonzero");
    const int s = tb.stages;
    const std::size_t d = z.size();

    StepOutcome out;
    out.stage_derivs.assign(static_cast<std::size_t>(s), StateVector());
    StateVector y(d);
    for (int j = 0; j < s; ++j) {
        auto& kj = out.stage_derivs[static_cast<std::size_t>(j)];
        if (j == 0 && first_stage != nullptr) {
            kj = *first_stage;
            continue;
        }
        kj.resize(d);
        if (j == 0) {
            dyn.eval_into(t, z, theta, kj);
        } else {
            detail::stage_point(tb, j, z, h, out.stage_derivs, y);
            dyn.eval_into(t + tb.c[static_cast<std::size_t>(j)] * h, y, theta, kj);
        }
        ++out.f_evals;
        if (!all_finite(kj))
            throw OdeError(ErrorCode::NonfiniteState, "stage derivative diverged at t=" + std::to_string(t));
    }

    detail::combine_solution(tb, z, h, out.stage_derivs, out.z_new);
    if (!all_finite(out.z_new))
        throw OdeError(ErrorCode::NonfiniteState, "step solution diverged at t=" + std::to_string(t));

    if (tb.adaptive()) {
        StateVector err;
        detail::error_vector(tb, h, out.stage_derivs, err);
        out.err_norm = error_norm(err, z, out.z_new, atol, rtol);
        if (!std::isfinite(out.err_norm))
            throw OdeError(ErrorCode::NonfiniteState, "error estimate diverged at t=" + std::to_string(t));
    }
    return out;
}

namespace {

IntegrationResult integrate_impl(const DifferentiableDynamics& dyn, const StateVector& z0,
                                 const ParamVector& theta, double t0, double T,
                                 const ButcherTableau& tb, const SolverConfig& cfg,
                                 bool record_states, ForwardTape* tape) {
    cfg.validate();
    tb.validate();
    if (T == t0) throw OdeError(ErrorCode::InvalidArgument, "integrate: T must differ from t0");
    require_dim(z0.size(), static_cast<std::size_t>(dyn.state_dim()), "integrate state");
    require_dim(theta.size(), static_cast<std::size_t>(dyn.param_dim()), "integrate params");
    require_finite(z0, "integrate: initial state");
    require_finite(theta, "integrate: parameters");

    const double span = T - t0;
    const double dir = (span > 0.0) ? 1.0 : -1.0;
    const double h_min = cfg.h_min.value_or(1e-12 * std::abs(span));
    const bool fixed = !tb.adaptive();
    const bool fixed_grid = fixed && cfg.fixed_steps > 0;

    double h; // current signed stepsize proposal
    if (fixed) {
        if (fixed_grid)
            h = span / static_cast<double>(cfg.fixed_steps);
        else if (cfg.h_init)
            h = dir * std::abs(*cfg.h_init);
        else
            throw OdeError(ErrorCode::InvalidArgument,
                           "fixed-step tableau requires fixed_steps or h_init");
    } else {
        h = cfg.h_init ? dir * std::abs(*cfg.h_init)
                       : dir * initial_step(dyn, t0, z0, theta, T, tb.order, cfg);
    }

    if (tape) {
        tape->adaptive = !fixed;
        tape->stages = tb.stages;
    }

    IntegrationResult res;
    res.cache.time_points.push_back(t0);
    if (record_states) res.cache.z_values.push_back(z0);

    double t = t0;
    StateVector z = z0;
    std::optional<StateVector> carried_k1; // f(t, z) at the current point, when already known
    HSource next_h_source{HSourceKind::Initial, -1, -1};
    long accepted = 0, rejected = 0, f_evals = 0;

    while (t != T) {
        if (accepted >= cfg.max_steps)
            throw OdeError(ErrorCode::MaxStepsExceeded,
                           "exceeded " + std::to_string(cfg.max_steps) + " accepted steps");

        int rejects_this_step = 0;
        StepOutcome out;
        double t_target = t, h_used = 0.0;
        while (true) {
            if (fixed_grid) {
                const long i = accepted + 1;
                t_target = (i == cfg.fixed_steps) ? T : t0 + static_cast<double>(i) * h;
            } else {
                const double t_next = t + h;
                if (dir * (t_next - T) >= 0.0) {
                    t_target = T;
                    if (t_next != T && tape) {
                        next_h_source = {HSourceKind::Truncation, -1, static_cast<int>(accepted)};
                        ++tape->truncation_nodes;
                    }
                } else {
                    t_target = t_next;
                }
            }
            h_used = t_target - t; // recoverable from the cache times bitwise
            if (h_used == 0.0 || !std::isfinite(h_used))
                throw OdeError(ErrorCode::StepUnderflow, "stepsize vanished at t=" + std::to_string(t));

            out = step(tb, dyn, t, z, theta, h_used, cfg.atol, cfg.rtol,
                       carried_k1 ? &*carried_k1 : nullptr);
            f_evals += out.f_evals;
            const bool owns_k1 = !carried_k1.has_value();
            if (tape) {
                tape->trials.push_back({static_cast<int>(accepted), t, h_used, next_h_source, false,
                                        owns_k1, false, out.err_norm, out.z_new, out.stage_derivs});
                if (tape->node_budget > 0 && tape->node_count() > tape->node_budget)
                    throw OdeError(ErrorCode::TapeOverflow,
                                   "solver tape exceeded " + std::to_string(tape->node_budget) + " nodes");
            }
            carried_k1 = out.stage_derivs.front(); // k1 stays valid for retries at this point

            if (fixed || out.err_norm <= 1.0) {
                if (tape) tape->trials.back().accepted = true;
                break;
            }
            ++rejected;
            ++rejects_this_step;
            if (rejects_this_step > cfg.max_rejects_per_step)
                throw OdeError(ErrorCode::MaxRejectsExceeded,
                               "step at t=" + std::to_string(t) + " rejected " +
                                   std::to_string(rejects_this_step) + " times");
            if (tape) {
                tape->trials.back().fed_propose = true;
                next_h_source = {HSourceKind::Rejection,
                                 static_cast<long>(tape->trials.size()) - 1, -1};
            }
            h = propose_step(out.err_norm, h_used, tb.order, cfg, h_min);
        }

        ++accepted;
        t = t_target;
        z = std::move(out.z_new);
        res.cache.time_points.push_back(t);
        if (record_states) res.cache.z_values.push_back(z);

        if (t != T && !fixed) {
            // stepsize may also grow after acceptance
            if (tape) {
                tape->trials.back().fed_propose = true;
                next_h_source = {HSourceKind::Growth, static_cast<long>(tape->trials.size()) - 1, -1};
            }
            h = propose_step(out.err_norm, h_used, tb.order, cfg, h_min);
        }
        carried_k1.reset();
        if (tb.fsal) carried_k1 = std::move(out.stage_derivs.back());
    }

    res.cache.accepted_steps = accepted;
    res.cache.rejected_steps = rejected;
    res.cache.total_f_evals = f_evals;
    res.z_final = z;
    return res;
}

} // namespace

IntegrationResult integrate(const DifferentiableDynamics& dyn, const StateVector& z0,
                            const ParamVector& theta, double t0, double T, const ButcherTableau& tb,
                            const SolverConfig& cfg) {
    return integrate_impl(dyn, z0, theta, t0, T, tb, cfg, true, nullptr);
}

IntegrationResult integrate_final_state(const DifferentiableDynamics& dyn, const StateVector& z0,
                                        const ParamVector& theta, double t0, double T,
                                        const ButcherTableau& tb, const SolverConfig& cfg) {
    return integrate_impl(dyn, z0, theta, t0, T, tb, cfg, false, nullptr);
}

IntegrationResult integrate_recording(const DifferentiableDynamics& dyn, const StateVector& z0,
                                      const ParamVector& theta, double t0, double T,
                                      const ButcherTableau& tb, const SolverConfig& cfg,
                                      ForwardTape& tape) {
    return integrate_impl(dyn, z0, theta, t0, T, tb, cfg, true, &tape);
}

std::vector<StateVector> integrate_piecewise(const DifferentiableDynamics& dyn,
                                             const StateVector& z0, const ParamVector& theta,
                                             std::span<const double> times,
                                             const ButcherTableau& tb, const SolverConfig& cfg) {
    if (times.empty()) throw OdeError(ErrorCode::InvalidArgument, "integrate_piecewise: no times");
    std::vector<StateVector> out;
    out.reserve(times.size());
    out.push_back(z0);
    for (std::size_t i = 1; i < times.size(); ++i) {
        IntegrationResult seg =
            integrate_final_state(dyn, out.back(), theta, times[i - 1], times[i], tb, cfg);
        out.push_back(std::move(seg.z_final));
    }
    return out;
}

} // namespace odegrad
