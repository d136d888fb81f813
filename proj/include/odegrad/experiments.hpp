#ifndef ODEGRAD_EXPERIMENTS_HPP
#define ODEGRAD_EXPERIMENTS_HPP

#include <string>

#include "odegrad/dataset.hpp"
#include "odegrad/gradients.hpp"
#include "odegrad/optimize.hpp"

namespace odegrad::experiments {

inline constexpr const char* kSchemaVersion = "1";

/// Uniform summary-row schema shared by every experiment
/// (<experiment>_summary.csv): experiment, method, tableau, rtol, atol,
/// metric, value, the six cost counters and wall_time_s. Detail files carry
/// per-experiment schemas documented in the README. Every CSV gets a
/// one-line JSON manifest sidecar (<file>.manifest.json); result columns
/// reproduce bitwise across reruns, wall_time_s is measured.
struct ResultRow {
    std::string experiment;
    std::string method;
    std::string tableau;
    double rtol = 0.0;
    double atol = 0.0;
    std::string metric;
    double value = 0.0;
    CostStats stats;
    double wall_time_s = 0.0;
};

struct ExperimentOutcome {
    bool pass = false;
    std::vector<std::string> files; // written artifacts
    std::vector<std::string> notes; // human-readable check lines
};

struct ToyGradientConfig {
    std::vector<Method> methods{Method::Naive, Method::Adjoint, Method::Aca};
    std::string tableau = "dopri5";
    double rtol = 1e-5;
    double atol = 1e-5;
    int t_max = 10;
    double k = 1.0;
    double z0 = 1.0;
};
ExperimentOutcome run_toy_gradient(const ToyGradientConfig& cfg, const std::string& out_dir);

struct VdpReverseConfig {
    double mu = 0.15;
    double y1_0 = 2.0;
    double y2_0 = 0.0;
    double horizon = 25.0;
    double rtol = 1e-3; // ode45-style defaults
    double atol = 1e-6;
    std::string tableau = "dopri5";
    double slope_horizon = 8.0; // fixed-step RK4 reverse-order sweep
    int slope_h_min_pow = 4;    // h in {2^-4 .. 2^-9}
    int slope_h_max_pow = 9;
};
ExperimentOutcome run_vdp_reverse(const VdpReverseConfig& cfg, const std::string& out_dir);

struct ConvergenceConfig {
    // per-tableau stepsize ranges as powers of two
    int h_min_pow = 3, h_max_pow = 8;          // euler / rk2 / rk4
    int dopri5_h_min_pow = 2, dopri5_h_max_pow = 6; // order-5 weights reach roundoff sooner
};
ExperimentOutcome run_convergence(const ConvergenceConfig& cfg, const std::string& out_dir);

struct GradcheckConfig {
    double rtol = 1e-7;
    double atol = 1e-7;
    int probes = 100; // directional probes per parameter/state block
    double fd_epsilon = 1e-5;
    std::uint64_t seed = 2024;
    std::string tableau = "dopri5";
    int fc_hidden = 64;
};
ExperimentOutcome run_gradcheck(const GradcheckConfig& cfg, const std::string& out_dir);

struct ThreeBodyConfig {
    std::vector<Method> methods{Method::Aca, Method::Adjoint, Method::Naive};
    std::string dataset_path = "data/three_body_reference.txt";
    ReferenceSystemConfig reference;  // generator settings if the fixture is absent
    std::string model = "ode";        // "ode" (masses unknown) or "node" (learned accelerations)
    double mass_init_scale = 2.0;     // ODE model: theta0 = scale * true masses
    int stride = 1;                   // subsample the dataset (1 = full resolution)
    double rtol = 1e-5;
    double atol = 1e-5;
    OptimizerConfig optimizer;        // Adam, lr 0.1, decay 0.99, 100 epochs
    int node_hidden = 64;
    std::uint64_t node_init_seed = 1234;
};
ExperimentOutcome run_three_body(const ThreeBodyConfig& cfg, const std::string& out_dir);

/// Checks an emitted CSV against its manifest sidecar: schema name, row
/// count, column count per row, and parseability of numeric fields.
ExperimentOutcome validate_csv(const std::string& csv_path);

} // namespace odegrad::experiments

#endif
