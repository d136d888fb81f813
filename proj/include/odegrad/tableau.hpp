#ifndef ODEGRAD_TABLEAU_HPP
#define ODEGRAD_TABLEAU_HPP

#include <string>
#include <string_view>
#include <vector>

namespace odegrad {

/// Coefficients (a, b, b_hat, c) of an explicit one-step Runge-Kutta method.
/// An empty b_hat marks a fixed-step tableau (no embedded error estimate).
/// `order` is the order of the embedded error estimator for adaptive pairs
/// (the step controller exponent is -1/(order+1)) and the method order for
/// fixed-step tableaux.
struct ButcherTableau {
    std::string name;
    int stages = 0;
    int order = 0;
    bool fsal = false;
    std::vector<double> a; // row-major stages x stages, strictly lower triangular
    std::vector<double> b;
    std::vector<double> b_hat; // empty for fixed-step tableaux
    std::vector<double> c;

    bool adaptive() const { return !b_hat.empty(); }
    double a_at(int i, int j) const { return a[static_cast<std::size_t>(i) * stages + j]; }

    /// Throws InvalidArgument on inconsistent coefficients:
    /// row sums must equal c, sum(b) = 1 (and sum(b_hat) = 1 when present),
    /// and a must be strictly lower triangular.
    void validate() const;
};

namespace tableaus {

ButcherTableau euler();
ButcherTableau rk2_heun();
ButcherTableau rk4();
ButcherTableau heun_euler_12();
ButcherTableau bogacki_shampine_23();
ButcherTableau dormand_prince_45();

/// Lookup by name: euler, rk2, rk4, heun_euler, bs23, dopri5.
ButcherTableau by_name(std::string_view name);
std::vector<std::string> names();

} // namespace tableaus

/// Copy of `tb` with the embedded weights removed, so integrate() runs it
/// as a constant-step method using the higher-order solution weights.
ButcherTableau as_fixed_step(const ButcherTableau& tb);

} // namespace odegrad

#endif
