// Experiment runner: reproduces the desk-scale gradient-estimation studies
// and emits CSV results with JSON manifest sidecars. Exit code 0 means every
// check of the executed subcommand passed.

#include <cstdio>

#include <CLI11.hpp>

#include "odegrad/experiments.hpp"
#include "odegrad/version.hpp"

namespace ex = odegrad::experiments;

namespace {

int report(const ex::ExperimentOutcome& out, const std::string& name) {
    for (const auto& n : out.notes) std::printf("  %s\n", n.c_str());
    for (const auto& f : out.files) std::printf("  wrote %s\n", f.c_str());
    std::printf("%s: %s\n", name.c_str(), out.pass ? "PASS" : "FAIL");
    return out.pass ? 0 : 1;
}

std::vector<odegrad::Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<odegrad::Method> ms;
    for (const auto& n : names) ms.push_back(odegrad::method_from_string(n));
    return ms;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"odegrad experiment runner"};
    app.set_version_flag("--version", odegrad::kVersion);
    app.set_config("--config", "", "flat key=value config file");
    app.require_subcommand(1);

    std::string out_dir = "results";
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    ex::ToyGradientConfig toy;
    std::vector<std::string> toy_methods{"naive", "adjoint", "aca"};
    auto* toy_cmd = app.add_subcommand("toy-gradient",
                                       "gradient error vs horizon on dz/dt = k z");
    toy_cmd->add_option("--method", toy_methods, "methods to run")->capture_default_str();
    toy_cmd->add_option("--tableau", toy.tableau)->capture_default_str();
    toy_cmd->add_option("--rtol", toy.rtol)->capture_default_str();
    toy_cmd->add_option("--atol", toy.atol)->capture_default_str();
    toy_cmd->add_option("--t-max", toy.t_max)->capture_default_str();

    ex::VdpReverseConfig vdp;
    auto* vdp_cmd = app.add_subcommand("vdp-reverse",
                                       "van der Pol reverse-reconstruction study");
    vdp_cmd->add_option("--horizon", vdp.horizon)->capture_default_str();
    vdp_cmd->add_option("--rtol", vdp.rtol)->capture_default_str();
    vdp_cmd->add_option("--atol", vdp.atol)->capture_default_str();
    vdp_cmd->add_option("--slope-horizon", vdp.slope_horizon)->capture_default_str();

    ex::ConvergenceConfig conv;
    auto* conv_cmd = app.add_subcommand("convergence", "empirical solver orders on dz/dt = z");
    (void)conv_cmd;

    ex::GradcheckConfig gc;
    auto* gc_cmd = app.add_subcommand("gradcheck",
                                      "all methods against the finite-difference oracle");
    gc_cmd->add_option("--rtol", gc.rtol)->capture_default_str();
    gc_cmd->add_option("--atol", gc.atol)->capture_default_str();
    gc_cmd->add_option("--probes", gc.probes)->capture_default_str();
    gc_cmd->add_option("--seed", gc.seed)->capture_default_str();
    gc_cmd->add_option("--fc-hidden", gc.fc_hidden)->capture_default_str();

    ex::ThreeBodyConfig tbody;
    std::vector<std::string> tbody_methods{"aca", "adjoint", "naive"};
    auto* tb_cmd = app.add_subcommand("three-body", "mass recovery on the reference system");
    tb_cmd->add_option("--method", tbody_methods)->capture_default_str();
    tb_cmd->add_option("--data", tbody.dataset_path, "fixture path (generated if absent)")
        ->capture_default_str();
    tb_cmd->add_option("--model", tbody.model, "ode or node")->capture_default_str();
    tb_cmd->add_option("--stride", tbody.stride, "dataset subsampling stride")
        ->capture_default_str();
    tb_cmd->add_option("--rtol", tbody.rtol)->capture_default_str();
    tb_cmd->add_option("--atol", tbody.atol)->capture_default_str();
    tb_cmd->add_option("--epochs", tbody.optimizer.epochs)->capture_default_str();
    tb_cmd->add_option("--lr", tbody.optimizer.initial_lr)->capture_default_str();
    tb_cmd->add_option("--decay", tbody.optimizer.decay)->capture_default_str();
    tb_cmd->add_option("--seed", tbody.reference.seed, "generator seed when regenerating")
        ->capture_default_str();

    std::vector<std::string> validate_files;
    auto* val_cmd = app.add_subcommand("validate", "check emitted CSV files against manifests");
    val_cmd->add_option("files", validate_files, "CSV files to validate")->required();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (toy_cmd->parsed()) {
            toy.methods = parse_methods(toy_methods);
            return report(ex::run_toy_gradient(toy, out_dir), "toy-gradient");
        }
        if (vdp_cmd->parsed()) return report(ex::run_vdp_reverse(vdp, out_dir), "vdp-reverse");
        if (conv_cmd->parsed()) return report(ex::run_convergence(conv, out_dir), "convergence");
        if (gc_cmd->parsed()) return report(ex::run_gradcheck(gc, out_dir), "gradcheck");
        if (tb_cmd->parsed()) {
            tbody.methods = parse_methods(tbody_methods);
            return report(ex::run_three_body(tbody, out_dir), "three-body");
        }
        if (val_cmd->parsed()) {
            int rc = 0;
            for (const auto& f : validate_files) {
                auto out = ex::validate_csv(f);
                for (const auto& n : out.notes) std::printf("  %s\n", n.c_str());
                if (!out.pass) rc = 1;
            }
            std::printf("validate: %s\n", rc == 0 ? "PASS" : "FAIL");
            return rc;
        }
    } catch (const odegrad::OdeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
