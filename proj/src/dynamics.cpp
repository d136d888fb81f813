#include "odegrad/dynamics.hpp"

#include <cmath>

namespace odegrad {

namespace {

class LinearDynamics final : public DifferentiableDynamics {
public:
    LinearDynamics(double k, int dim) : k_(k), dim_(dim) {
        if (!std::isfinite(k)) throw OdeError(ErrorCode::InvalidArgument, "linear_dynamics: k must be finite");
        if (dim < 1) throw OdeError(ErrorCode::InvalidArgument, "linear_dynamics: dim must be >= 1");
    }

    int state_dim() const override { return dim_; }
    int param_dim() const override { return 1; }
    ParamVector default_params() const override { return {k_}; }

    void eval_into(double, std::span<const double> z, std::span<const double> theta,
                   std::span<double> dz) const override {
        const double k = theta[0];
        for (std::size_t i = 0; i < z.size(); ++i) dz[i] = k * z[i];
    }

    void vjp_into(double, std::span<const double> z, std::span<const double> theta,
                  std::span<const double> v, std::span<double> out_z,
                  std::span<double> out_theta) const override {
        const double k = theta[0];
        double g = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            out_z[i] = k * v[i];
            g += v[i] * z[i];
        }
        out_theta[0] = g;
    }

private:
    double k_;
    int dim_;
};

class VanDerPolDynamics final : public DifferentiableDynamics {
public:
    explicit VanDerPolDynamics(double mu) : mu_(mu) {
        if (!std::isfinite(mu)) throw OdeError(ErrorCode::InvalidArgument, "van_der_pol_dynamics: mu must be finite");
    }

    int state_dim() const override { return 2; }
    int param_dim() const override { return 0; }

    void eval_into(double, std::span<const double> z, std::span<const double>,
                   std::span<double> dz) const override {
        const double y1 = z[0], y2 = z[1];
        dz[0] = y2;
        dz[1] = (mu_ - y1 * y1) * y2 - y1;
    }

    void vjp_into(double, std::span<const double> z, std::span<const double>,
                  std::span<const double> v, std::span<double> out_z,
                  std::span<double>) const override {
        // J = [[0, 1], [-2*y1*y2 - 1, mu - y1^2]], out = J^T v
        const double y1 = z[0], y2 = z[1];
        out_z[0] = (-2.0 * y1 * y2 - 1.0) * v[1];
        out_z[1] = v[0] + (mu_ - y1 * y1) * v[1];
    }

private:
    double mu_;
};

} // namespace

std::shared_ptr<DifferentiableDynamics> linear_dynamics(double k, int dim) {
    return std::make_shared<LinearDynamics>(k, dim);
}

std::shared_ptr<DifferentiableDynamics> van_der_pol_dynamics(double mu) {
    return std::make_shared<VanDerPolDynamics>(mu);
}

} // namespace odegrad
