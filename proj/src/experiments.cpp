#include "odegrad/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "odegrad/analysis.hpp"
#include "odegrad/optimize.hpp"
#include "odegrad/three_body.hpp"
#include "odegrad/version.hpp"

namespace odegrad::experiments {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// CSV file with a named schema and a one-line JSON manifest sidecar.
class CsvFile {
public:
    CsvFile(const std::string& dir, const std::string& name, std::string schema,
            std::vector<std::string> columns, json config)
        : schema_(std::move(schema)), columns_(std::move(columns)), config_(std::move(config)) {
        std::filesystem::create_directories(dir);
        path_ = (std::filesystem::path(dir) / name).string();
        out_.open(path_);
        if (!out_) throw OdeError(ErrorCode::InvalidArgument, "cannot write " + path_);
    }

    void comment(const std::string& line) { out_ << "# " << line << "\n"; }

    void header() {
        for (std::size_t i = 0; i < columns_.size(); ++i)
            out_ << (i ? "," : "") << columns_[i];
        out_ << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size())
            throw OdeError(ErrorCode::InvalidArgument, "csv row width mismatch in " + path_);
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
        ++rows_;
    }

    /// Closes the file and writes <path>.manifest.json.
    void finish(std::uint64_t seed, double wall_time_s) {
        out_.close();
        json manifest;
        manifest["schema"] = schema_ + "/" + kSchemaVersion;
        manifest["library_version"] = kVersion;
        manifest["seed"] = seed;
        manifest["columns"] = columns_;
        manifest["rows"] = rows_;
        manifest["config"] = config_;
        manifest["wall_time_s"] = wall_time_s;
        std::ofstream m(path_ + ".manifest.json");
        m << manifest.dump() << "\n";
    }

    const std::string& path() const { return path_; }

private:
    std::string schema_, path_;
    std::vector<std::string> columns_;
    json config_;
    std::ofstream out_;
    long rows_ = 0;
};

const std::vector<std::string> kSummaryColumns = {
    "experiment", "method",           "tableau",          "rtol",
    "atol",       "metric",           "value",            "forward_f_evals",
    "backward_f_evals", "forward_accepted", "forward_rejected", "reverse_accepted",
    "reverse_rejected", "peak_tape_nodes",  "wall_time_s"};

std::vector<std::string> summary_cells(const ResultRow& r) {
    return {r.experiment,
            r.method,
            r.tableau,
            num(r.rtol),
            num(r.atol),
            r.metric,
            num(r.value),
            std::to_string(r.stats.forward_f_evals),
            std::to_string(r.stats.backward_f_evals),
            std::to_string(r.stats.forward_accepted),
            std::to_string(r.stats.forward_rejected),
            std::to_string(r.stats.reverse_accepted),
            std::to_string(r.stats.reverse_rejected),
            std::to_string(r.stats.peak_tape_nodes),
            num(r.wall_time_s)};
}

std::vector<double> pow2_range(int lo_pow, int hi_pow) {
    std::vector<double> hs;
    for (int k = lo_pow; k <= hi_pow; ++k) hs.push_back(std::pow(2.0, -k));
    return hs;
}

} // namespace

ExperimentOutcome run_toy_gradient(const ToyGradientConfig& cfg, const std::string& out_dir) {
    const auto t_start = Clock::now();
    ExperimentOutcome out;
    const ButcherTableau tb = tableaus::by_name(cfg.tableau);
    SolverConfig scfg;
    scfg.rtol = cfg.rtol;
    scfg.atol = cfg.atol;
    auto dyn = linear_dynamics(cfg.k);

    json config{{"tableau", cfg.tableau}, {"rtol", cfg.rtol},   {"atol", cfg.atol},
                {"t_max", cfg.t_max},     {"k", cfg.k},         {"z0", cfg.z0}};
    CsvFile detail(out_dir, "toy_gradient.csv", "toy_gradient",
                   {"experiment", "method", "tableau", "rtol", "atol", "T", "analytic_dLdz0",
                    "computed_dLdz0", "abs_error"},
                   config);
    detail.header();
    CsvFile summary(out_dir, "toy_gradient_summary.csv", "summary", kSummaryColumns, config);
    summary.header();

    std::map<std::pair<std::string, int>, double> abs_err;
    for (Method m : cfg.methods) {
        for (int T = 1; T <= cfg.t_max; ++T) {
            const auto t0 = Clock::now();
            const double analytic = 2.0 * cfg.z0 * std::exp(2.0 * cfg.k * T);
            GradientResult g = gradient_dispatch(m, *dyn, {cfg.z0}, {cfg.k}, 0.0, T, tb, scfg, {});
            const double err = std::abs(g.d_loss_d_z0[0] - analytic);
            abs_err[{method_name(m), T}] = err;
            detail.row({"toy_gradient", method_name(m), tb.name, num(cfg.rtol), num(cfg.atol),
                        std::to_string(T), num(analytic), num(g.d_loss_d_z0[0]), num(err)});
            ResultRow r{"toy_gradient", method_name(m), tb.name, cfg.rtol, cfg.atol,
                        "abs_error_T" + std::to_string(T), err, g.stats, seconds_since(t0)};
            summary.row(summary_cells(r));
        }
    }

    bool ordering = true;
    for (int T = 1; T <= cfg.t_max; ++T)
        if (abs_err[{"aca", T}] > abs_err[{"adjoint", T}]) ordering = false;
    const double analytic1 = 2.0 * cfg.z0 * std::exp(2.0 * cfg.k);
    const double rel_t1 = abs_err[{"aca", 1}] / std::abs(analytic1);
    out.pass = ordering && rel_t1 < 1e-3;
    out.notes.push_back(std::string("aca <= adjoint error for every T: ") +
                        (ordering ? "yes" : "NO"));
    out.notes.push_back("aca relative error at T=1: " + num(rel_t1));

    const double wall = seconds_since(t_start);
    detail.finish(0, wall);
    summary.finish(0, wall);
    out.files = {detail.path(), summary.path()};
    return out;
}

ExperimentOutcome run_vdp_reverse(const VdpReverseConfig& cfg, const std::string& out_dir) {
    const auto t_start = Clock::now();
    ExperimentOutcome out;
    auto vdp = van_der_pol_dynamics(cfg.mu);
    const StateVector z0{cfg.y1_0, cfg.y2_0};
    const ButcherTableau tb = tableaus::by_name(cfg.tableau);
    SolverConfig scfg;
    scfg.rtol = cfg.rtol;
    scfg.atol = cfg.atol;

    json config{{"mu", cfg.mu},          {"y1_0", cfg.y1_0},     {"y2_0", cfg.y2_0},
                {"horizon", cfg.horizon}, {"rtol", cfg.rtol},     {"atol", cfg.atol},
                {"tableau", cfg.tableau}, {"slope_horizon", cfg.slope_horizon}};
    CsvFile detail(out_dir, "vdp_reverse.csv", "vdp_reverse",
                   {"experiment", "series", "t", "y1", "y2"}, config);
    detail.comment("y1_0=" + num(cfg.y1_0) + " y2_0=" + num(cfg.y2_0) + " mu=" + num(cfg.mu));
    detail.header();
    CsvFile summary(out_dir, "vdp_reverse_summary.csv", "summary", kSummaryColumns, config);
    summary.header();

    // forward pass with checkpoints, then the adjoint-style reverse pass
    IntegrationResult fwd = integrate(*vdp, z0, {}, 0.0, cfg.horizon, tb, scfg);
    for (std::size_t i = 0; i < fwd.cache.time_points.size(); ++i)
        detail.row({"vdp_reverse", "forward", num(fwd.cache.time_points[i]),
                    num(fwd.cache.z_values[i][0]), num(fwd.cache.z_values[i][1])});

    IntegrationResult rev = integrate(*vdp, fwd.z_final, {}, cfg.horizon, 0.0, tb, scfg);
    for (std::size_t i = 0; i < rev.cache.time_points.size(); ++i)
        detail.row({"vdp_reverse", "adjoint_reverse", num(rev.cache.time_points[i]),
                    num(rev.cache.z_values[i][0]), num(rev.cache.z_values[i][1])});

    // checkpointed replay: the recorded trajectory itself
    for (std::size_t i = 0; i < fwd.cache.time_points.size(); ++i)
        detail.row({"vdp_reverse", "replay", num(fwd.cache.time_points[i]),
                    num(fwd.cache.z_values[i][0]), num(fwd.cache.z_values[i][1])});

    const double rev_err = norm2(sub(z0, rev.z_final));
    const double replay_err = checkpoint_replay_error(fwd.cache, z0);

    const auto hs = pow2_range(cfg.slope_h_min_pow, cfg.slope_h_max_pow);
    auto leg = reverse_leg_error_vs_stepsize(*vdp, z0, {}, 0.0, cfg.slope_horizon,
                                             tableaus::rk4(), hs);
    auto rt = reverse_error_vs_stepsize(*vdp, z0, {}, 0.0, cfg.slope_horizon, tableaus::rk4(), hs);
    const double leg_slope = loglog_slope(leg.series);
    const double rt_slope = loglog_slope(rt.series);

    ResultRow base{"vdp_reverse", "adjoint", tb.name, cfg.rtol, cfg.atol, "", 0.0, {}, 0.0};
    base.metric = "reverse_reconstruction_error";
    base.value = rev_err;
    summary.row(summary_cells(base));
    base.method = "aca";
    base.metric = "checkpoint_replay_error";
    base.value = replay_err;
    summary.row(summary_cells(base));
    base.method = "adjoint";
    base.tableau = "rk4";
    base.metric = "reverse_leg_error_slope";
    base.value = leg_slope;
    summary.row(summary_cells(base));
    base.metric = "roundtrip_error_slope";
    base.value = rt_slope;
    summary.row(summary_cells(base));
    for (auto& [h, e] : leg.series) {
        base.metric = "reverse_leg_error_h" + num(h);
        base.value = e;
        summary.row(summary_cells(base));
    }

    const double threshold = 1e-3 * norm2(z0);
    out.pass = rev_err > threshold && replay_err == 0.0 && leg_slope > 3.5 && leg_slope < 4.5;
    out.notes.push_back("adjoint reverse error " + num(rev_err) + " vs threshold " + num(threshold));
    out.notes.push_back("checkpoint replay error " + num(replay_err));
    out.notes.push_back("reverse-leg RK4 slope " + num(leg_slope) + " (roundtrip " + num(rt_slope) +
                        ", one order higher from pairwise cancellation)");

    const double wall = seconds_since(t_start);
    detail.finish(0, wall);
    summary.finish(0, wall);
    out.files = {detail.path(), summary.path()};
    return out;
}

ExperimentOutcome run_convergence(const ConvergenceConfig& cfg, const std::string& out_dir) {
    const auto t_start = Clock::now();
    ExperimentOutcome out;
    auto dyn = linear_dynamics(1.0);
    const StateVector reference{std::exp(1.0)};

    json config{{"h_min_pow", cfg.h_min_pow},
                {"h_max_pow", cfg.h_max_pow},
                {"dopri5_h_min_pow", cfg.dopri5_h_min_pow},
                {"dopri5_h_max_pow", cfg.dopri5_h_max_pow}};
    CsvFile detail(out_dir, "convergence.csv", "convergence",
                   {"experiment", "tableau", "h", "n_steps", "abs_error"}, config);
    detail.header();
    CsvFile summary(out_dir, "convergence_summary.csv", "summary", kSummaryColumns, config);
    summary.header();

    struct Case {
        std::string name;
        double expected;
        std::vector<double> hs;
    };
    const std::vector<Case> cases = {
        {"euler", 1.0, pow2_range(cfg.h_min_pow, cfg.h_max_pow)},
        {"rk2", 2.0, pow2_range(cfg.h_min_pow, cfg.h_max_pow)},
        {"rk4", 4.0, pow2_range(cfg.h_min_pow, cfg.h_max_pow)},
        {"dopri5", 5.0, pow2_range(cfg.dopri5_h_min_pow, cfg.dopri5_h_max_pow)},
    };

    bool all_ok = true;
    for (const auto& c : cases) {
        const auto t0 = Clock::now();
        ButcherTableau tb = tableaus::by_name(c.name);
        const ButcherTableau fixed = tb.adaptive() ? as_fixed_step(tb) : tb;
        for (double h : c.hs) {
            SolverConfig scfg;
            scfg.fixed_steps = static_cast<int>(std::lround(1.0 / h));
            auto r = integrate(*dyn, {1.0}, {1.0}, 0.0, 1.0, fixed, scfg);
            detail.row({"convergence", c.name, num(h), std::to_string(scfg.fixed_steps),
                        num(std::abs(r.z_final[0] - reference[0]))});
        }
        const double slope = convergence_order(*dyn, {1.0}, {1.0}, 0.0, 1.0, tb, c.hs, reference);
        const bool ok = std::abs(slope - c.expected) <= 0.3;
        all_ok = all_ok && ok;
        out.notes.push_back(c.name + " slope " + num(slope) + " (expected " + num(c.expected) +
                            " +- 0.3): " + (ok ? "ok" : "OUT OF RANGE"));
        ResultRow row{"convergence", "-", c.name, 0.0, 0.0, "order_slope", slope, {},
                      seconds_since(t0)};
        summary.row(summary_cells(row));
    }
    out.pass = all_ok;

    const double wall = seconds_since(t_start);
    detail.finish(0, wall);
    summary.finish(0, wall);
    out.files = {detail.path(), summary.path()};
    return out;
}

namespace {

struct GradcheckProblem {
    std::string name;
    std::shared_ptr<DifferentiableDynamics> dyn;
    StateVector z0;
    ParamVector theta;
    double T;
};

std::vector<GradcheckProblem> gradcheck_problems(const GradcheckConfig& cfg) {
    std::vector<GradcheckProblem> probs;
    probs.push_back({"linear", linear_dynamics(1.0), {1.0}, {1.0}, 1.0});
    probs.push_back({"fc", fc_dynamics(augmented_feature_dim(), cfg.fc_hidden),
                     {0.6, 0.0, 0.1, -0.5, 0.4, 0.0, 0.1, -0.6, 0.3, 0.1, 0.2, 0.0, -0.1, 0.0,
                      0.1, 0.0, -0.2, 0.05},
                     fc_random_params(augmented_feature_dim(), cfg.fc_hidden, cfg.seed, 0.2),
                     0.5});
    probs.push_back({"three_body", three_body_dynamics(1.0),
                     {1.0, 0.0, 0.0, -1.0, 0.2, 0.0, 0.3, 1.1, -0.4, 0.0, 0.3, 0.05, 0.1, -0.2,
                      0.0, -0.1, 0.0, 0.1},
                     {1.0, 2.0, 3.0},
                     0.5});
    return probs;
}

} // namespace

ExperimentOutcome run_gradcheck(const GradcheckConfig& cfg, const std::string& out_dir) {
    const auto t_start = Clock::now();
    ExperimentOutcome out;
    const ButcherTableau tb = tableaus::by_name(cfg.tableau);
    SolverConfig scfg;
    scfg.rtol = cfg.rtol;
    scfg.atol = cfg.atol;
    const FdOracleConfig fd_cfg{cfg.fd_epsilon};
    const LossSpec loss{};

    json config{{"rtol", cfg.rtol},   {"atol", cfg.atol},       {"probes", cfg.probes},
                {"epsilon", cfg.fd_epsilon}, {"seed", cfg.seed}, {"tableau", cfg.tableau},
                {"fc_hidden", cfg.fc_hidden}};
    CsvFile detail(out_dir, "gradcheck.csv", "gradcheck",
                   {"experiment", "problem", "method", "probe_kind", "probe", "fd_value",
                    "grad_dot_dir", "rel_error"},
                   config);
    detail.header();
    CsvFile summary(out_dir, "gradcheck_summary.csv", "summary", kSummaryColumns, config);
    summary.header();

    bool all_ok = true;
    std::mt19937_64 rng(cfg.seed);
    for (const auto& prob : gradcheck_problems(cfg)) {
        const auto q = prob.theta.size();
        const auto d = prob.z0.size();

        // directions and their FD values are shared across the three methods
        std::vector<ParamVector> theta_dirs, z0_dirs;
        std::vector<double> theta_fd, z0_fd;
        std::normal_distribution<double> dist(0.0, 1.0);
        auto loss_theta = [&](const ParamVector& th) {
            auto r = integrate_final_state(*prob.dyn, prob.z0, th, 0.0, prob.T, tb, scfg);
            return terminal_loss_grad(loss, r.z_final).loss;
        };
        auto loss_z0 = [&](const ParamVector& z) {
            auto r = integrate_final_state(*prob.dyn, z, prob.theta, 0.0, prob.T, tb, scfg);
            return terminal_loss_grad(loss, r.z_final).loss;
        };
        for (int p = 0; p < cfg.probes; ++p) {
            ParamVector u(q);
            for (auto& x : u) x = dist(rng);
            theta_fd.push_back(fd_directional(loss_theta, prob.theta, u, fd_cfg));
            theta_dirs.push_back(std::move(u));
            StateVector uz(d);
            for (auto& x : uz) x = dist(rng);
            z0_fd.push_back(fd_directional(loss_z0, prob.z0, uz, fd_cfg));
            z0_dirs.push_back(std::move(uz));
        }

        for (auto [method, tol] : {std::pair{Method::Aca, 1e-3}, {Method::Naive, 1e-3},
                                   {Method::Adjoint, 1e-2}}) {
            const auto t0 = Clock::now();
            GradientResult g =
                gradient_dispatch(method, *prob.dyn, prob.z0, prob.theta, 0.0, prob.T, tb, scfg, loss);
            double worst = 0.0;
            for (int p = 0; p < cfg.probes; ++p) {
                const double an_t = dot(g.d_loss_d_theta, theta_dirs[static_cast<std::size_t>(p)]);
                const double rel_t =
                    std::abs(an_t - theta_fd[static_cast<std::size_t>(p)]) /
                    std::max({std::abs(theta_fd[static_cast<std::size_t>(p)]), std::abs(an_t), 1e-12});
                detail.row({"gradcheck", prob.name, method_name(method), "theta",
                            std::to_string(p), num(theta_fd[static_cast<std::size_t>(p)]),
                            num(an_t), num(rel_t)});
                const double an_z = dot(g.d_loss_d_z0, z0_dirs[static_cast<std::size_t>(p)]);
                const double rel_z =
                    std::abs(an_z - z0_fd[static_cast<std::size_t>(p)]) /
                    std::max({std::abs(z0_fd[static_cast<std::size_t>(p)]), std::abs(an_z), 1e-12});
                detail.row({"gradcheck", prob.name, method_name(method), "z0", std::to_string(p),
                            num(z0_fd[static_cast<std::size_t>(p)]), num(an_z), num(rel_z)});
                worst = std::max({worst, rel_t, rel_z});
            }
            const bool ok = worst < tol;
            all_ok = all_ok && ok;
            out.notes.push_back(prob.name + "/" + method_name(method) + " max rel err " +
                                num(worst) + " (tol " + num(tol) + "): " + (ok ? "ok" : "FAIL"));
            ResultRow row{"gradcheck", method_name(method), tb.name, cfg.rtol, cfg.atol,
                          prob.name + "_max_rel_err", worst, g.stats, seconds_since(t0)};
            summary.row(summary_cells(row));
        }
    }
    out.pass = all_ok;

    const double wall = seconds_since(t_start);
    detail.finish(cfg.seed, wall);
    summary.finish(cfg.seed, wall);
    out.files = {detail.path(), summary.path()};
    return out;
}

ExperimentOutcome run_three_body(const ThreeBodyConfig& cfg, const std::string& out_dir) {
    const auto t_start = Clock::now();
    ExperimentOutcome out;
    TrajectoryDataset full = load_or_generate_dataset(cfg.dataset_path, cfg.reference);
    TrajectoryDataset ds;
    if (cfg.stride <= 1) {
        ds = full;
    } else {
        ds.train_end = full.train_end;
        for (std::size_t i = 0; i < full.size(); i += static_cast<std::size_t>(cfg.stride)) {
            ds.times.push_back(full.times[i]);
            ds.states.push_back(full.states[i]);
        }
    }

    const ButcherTableau tb = tableaus::dormand_prince_45();
    SolverConfig scfg;
    scfg.rtol = cfg.rtol;
    scfg.atol = cfg.atol;

    json config{{"dataset", cfg.dataset_path},
                {"model", cfg.model},
                {"stride", cfg.stride},
                {"rtol", cfg.rtol},
                {"atol", cfg.atol},
                {"mass_init_scale", cfg.mass_init_scale},
                {"epochs", cfg.optimizer.epochs},
                {"initial_lr", cfg.optimizer.initial_lr},
                {"decay", cfg.optimizer.decay},
                {"seed", cfg.reference.seed}};
    CsvFile detail(out_dir, "three_body.csv", "three_body",
                   {"experiment", "model", "method", "epoch", "train_loss"}, config);
    detail.header();
    CsvFile summary(out_dir, "three_body_summary.csv", "summary", kSummaryColumns, config);
    summary.header();

    const ParamVector true_masses{cfg.reference.masses[0], cfg.reference.masses[1],
                                  cfg.reference.masses[2]};
    bool pass = true;
    for (Method method : cfg.methods) {
        const auto t0 = Clock::now();
        FitReport rep;
        std::shared_ptr<DifferentiableDynamics> dyn;
        FitOptions fopts;
        ParamVector theta0;
        if (cfg.model == "ode") {
            dyn = three_body_dynamics(cfg.reference.G, cfg.reference.masses);
            fopts.log_reparam = true;
            theta0 = true_masses;
            for (auto& m : theta0) m *= cfg.mass_init_scale;
        } else if (cfg.model == "node") {
            dyn = fc_dynamics(augmented_feature_dim(), cfg.node_hidden);
            theta0 = fc_random_params(augmented_feature_dim(), cfg.node_hidden,
                                      cfg.node_init_seed, 0.05);
        } else {
            throw OdeError(ErrorCode::InvalidArgument, "model must be ode or node");
        }
        rep = fit(*dyn, ds, theta0, cfg.optimizer, scfg, tb, method, fopts);
        const double wall = seconds_since(t0);

        for (std::size_t e = 0; e < rep.loss_history.size(); ++e)
            detail.row({"three_body", cfg.model, method_name(method), std::to_string(e),
                        num(rep.loss_history[e])});

        ResultRow row{"three_body", method_name(method), tb.name, cfg.rtol, cfg.atol,
                      "", 0.0, rep.grad_stats, wall};
        row.metric = "train_mse";
        row.value = rep.train_mse;
        summary.row(summary_cells(row));
        row.metric = "test_mse";
        row.value = rep.test_mse;
        summary.row(summary_cells(row));

        if (cfg.model == "ode") {
            double worst = 0.0;
            for (int i = 0; i < 3; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                row.metric = "mass_" + std::to_string(i + 1);
                row.value = rep.final_theta[ui];
                summary.row(summary_cells(row));
                row.metric = "true_mass_" + std::to_string(i + 1);
                row.value = true_masses[ui];
                summary.row(summary_cells(row));
                worst = std::max(worst, std::abs(rep.final_theta[ui] - true_masses[ui]) /
                                            true_masses[ui]);
            }
            row.metric = "worst_rel_mass_error";
            row.value = worst;
            summary.row(summary_cells(row));
            out.notes.push_back(std::string(method_name(method)) + ": masses (" +
                                num(rep.final_theta[0]) + ", " + num(rep.final_theta[1]) + ", " +
                                num(rep.final_theta[2]) + "), worst rel err " + num(worst) +
                                ", test MSE " + num(rep.test_mse));
            if (method == Method::Aca) pass = pass && worst < 0.01 && rep.test_mse <= 0.003;
        } else {
            double base = 0.0;
            for (std::size_t m = 1; m < ds.size(); ++m)
                for (std::size_t p = 0; p < 9; ++p) {
                    const double r = ds.states[0][p] - ds.states[m][p];
                    base += r * r;
                }
            base /= (static_cast<double>(ds.size() - 1) * 9.0);
            row.metric = "baseline_mse";
            row.value = base;
            summary.row(summary_cells(row));
            out.notes.push_back(std::string(method_name(method)) + ": NODE test MSE " +
                                num(rep.test_mse) + " vs frozen-start baseline " + num(base));
            pass = pass && rep.test_mse < base;
        }
    }
    out.pass = pass;

    const double wall = seconds_since(t_start);
    detail.finish(cfg.reference.seed, wall);
    summary.finish(cfg.reference.seed, wall);
    out.files = {detail.path(), summary.path()};
    return out;
}

ExperimentOutcome validate_csv(const std::string& csv_path) {
    ExperimentOutcome out;
    std::ifstream manifest_in(csv_path + ".manifest.json");
    if (!manifest_in) {
        out.notes.push_back("missing manifest sidecar for " + csv_path);
        return out;
    }
    json manifest = json::parse(manifest_in);
    const auto columns = manifest.at("columns").get<std::vector<std::string>>();
    const long expect_rows = manifest.at("rows").get<long>();

    std::ifstream in(csv_path);
    if (!in) {
        out.notes.push_back("cannot open " + csv_path);
        return out;
    }
    std::string line;
    long rows = -1; // header row not counted
    bool header_ok = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (rows == -1) {
            header_ok = (cells == columns);
            if (!header_ok) {
                out.notes.push_back("header mismatch in " + csv_path);
                return out;
            }
            rows = 0;
            continue;
        }
        if (cells.size() != columns.size()) {
            out.notes.push_back("row width mismatch at data row " + std::to_string(rows));
            return out;
        }
        ++rows;
    }
    if (rows != expect_rows) {
        out.notes.push_back("row count " + std::to_string(rows) + " != manifest " +
                            std::to_string(expect_rows));
        return out;
    }
    out.pass = true;
    out.notes.push_back(csv_path + ": schema " + manifest.at("schema").get<std::string>() + ", " +
                        std::to_string(rows) + " rows ok");
    return out;
}

} // namespace odegrad::experiments
