#ifndef ODEGRAD_TEST_HELPERS_HPP
#define ODEGRAD_TEST_HELPERS_HPP

#include <random>

#include "odegrad/dynamics.hpp"

namespace odegrad::testing {

/// f(z) = c (constant derivative, parameter-free)
class ConstantDynamics final : public DifferentiableDynamics {
public:
    explicit ConstantDynamics(StateVector c) : c_(std::move(c)) {}
    int state_dim() const override { return static_cast<int>(c_.size()); }
    int param_dim() const override { return 0; }
    void eval_into(double, std::span<const double>, std::span<const double>,
                   std::span<double> dz) const override {
        for (std::size_t i = 0; i < c_.size(); ++i) dz[i] = c_[i];
    }
    void vjp_into(double, std::span<const double>, std::span<const double>,
                  std::span<const double>, std::span<double> out_z,
                  std::span<double>) const override {
        for (std::size_t i = 0; i < c_.size(); ++i) out_z[i] = 0.0;
    }

private:
    StateVector c_;
};

/// f(z) = z^2 elementwise; blows up in finite time from positive z0.
class QuadraticBlowupDynamics final : public DifferentiableDynamics {
public:
    int state_dim() const override { return 1; }
    int param_dim() const override { return 0; }
    void eval_into(double, std::span<const double> z, std::span<const double>,
                   std::span<double> dz) const override {
        dz[0] = z[0] * z[0];
    }
    void vjp_into(double, std::span<const double> z, std::span<const double>,
                  std::span<const double> v, std::span<double> out_z,
                  std::span<double>) const override {
        out_z[0] = 2.0 * z[0] * v[0];
    }
};

/// Counts eval calls; forwards everything to the wrapped dynamics.
class EvalCounter final : public DifferentiableDynamics {
public:
    explicit EvalCounter(const DifferentiableDynamics& inner) : inner_(inner) {}
    int state_dim() const override { return inner_.state_dim(); }
    int param_dim() const override { return inner_.param_dim(); }
    ParamVector default_params() const override { return inner_.default_params(); }
    void eval_into(double t, std::span<const double> z, std::span<const double> theta,
                   std::span<double> dz) const override {
        ++count;
        inner_.eval_into(t, z, theta, dz);
    }
    void vjp_into(double t, std::span<const double> z, std::span<const double> theta,
                  std::span<const double> v, std::span<double> oz,
                  std::span<double> ot) const override {
        inner_.vjp_into(t, z, theta, v, oz, ot);
    }
    mutable long count = 0;

private:
    const DifferentiableDynamics& inner_;
};

inline StateVector random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    StateVector v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

} // namespace odegrad::testing

#endif
