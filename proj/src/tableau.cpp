#include "odegrad/tableau.hpp"

#include <cmath>
#include <cstdlib>

#include "odegrad/errors.hpp"

namespace odegrad {

void ButcherTableau::validate() const {
    const auto n = static_cast<std::size_t>(stages);
    if (n == 0 || b.size() != n || c.size() != n || a.size() != n * n)
        throw OdeError(ErrorCode::InvalidArgument, "tableau " + name + ": inconsistent sizes");
    if (!b_hat.empty() && b_hat.size() != n)
        throw OdeError(ErrorCode::InvalidArgument, "tableau " + name + ": b_hat size");
    constexpr double tol = 1e-12;
    for (int i = 0; i < stages; ++i) {
        double row = 0.0;
        for (int j = 0; j < stages; ++j) {
            if (j >= i && a_at(i, j) != 0.0)
                throw OdeError(ErrorCode::InvalidArgument, "tableau " + name + ": not strictly lower triangular");
            row += a_at(i, j);
        }
        if (std::abs(row - c[static_cast<std::size_t>(i)]) > tol)
            throw OdeError(ErrorCode::InvalidArgument, "tableau " + name + ": row sum != c");
    }
    double sb = 0.0, sbh = 0.0;
    for (int j = 0; j < stages; ++j) {
        sb += b[static_cast<std::size_t>(j)];
        if (!b_hat.empty()) sbh += b_hat[static_cast<std::size_t>(j)];
    }
    if (std::abs(sb - 1.0) > tol)
        throw OdeError(ErrorCode::InvalidArgument, "tableau " + name + ": sum(b) != 1");
    if (!b_hat.empty() && std::abs(sbh - 1.0) > tol)
        throw OdeError(ErrorCode::InvalidArgument, "tableau " + name + ": sum(b_hat) != 1");
}

ButcherTableau as_fixed_step(const ButcherTableau& tb) {
    ButcherTableau fixed = tb;
    fixed.name = tb.name + "_fixed";
    fixed.b_hat.clear();
    fixed.fsal = tb.fsal;
    return fixed;
}

namespace tableaus {

ButcherTableau euler() {
    ButcherTableau t;
    t.name = "euler";
    t.stages = 1;
    t.order = 1;
    t.a = {0.0};
    t.b = {1.0};
    t.c = {0.0};
    return t;
}

ButcherTableau rk2_heun() {
    ButcherTableau t;
    t.name = "rk2";
    t.stages = 2;
    t.order = 2;
    t.a = {0.0, 0.0,
           1.0, 0.0};
    t.b = {0.5, 0.5};
    t.c = {0.0, 1.0};
    return t;
}

ButcherTableau rk4() {
    ButcherTableau t;
    t.name = "rk4";
    t.stages = 4;
    t.order = 4;
    t.a = {0.0, 0.0, 0.0, 0.0,
           0.5, 0.0, 0.0, 0.0,
           0.0, 0.5, 0.0, 0.0,
           0.0, 0.0, 1.0, 0.0};
    t.b = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
    t.c = {0.0, 0.5, 0.5, 1.0};
    return t;
}

// Embedded Euler/Heun pair: second-order solution propagated, first-order
// embedded estimate.
ButcherTableau heun_euler_12() {
    ButcherTableau t;
    t.name = "heun_euler";
    t.stages = 2;
    t.order = 1;
    t.a = {0.0, 0.0,
           1.0, 0.0};
    t.b = {0.5, 0.5};
    t.b_hat = {1.0, 0.0};
    t.c = {0.0, 1.0};
    return t;
}

ButcherTableau bogacki_shampine_23() {
    ButcherTableau t;
    t.name = "bs23";
    t.stages = 4;
    t.order = 2;
    t.fsal = true;
    t.a = {0.0,       0.0,       0.0,       0.0,
           1.0 / 2.0, 0.0,       0.0,       0.0,
           0.0,       3.0 / 4.0, 0.0,       0.0,
           2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0, 0.0};
    t.b = {2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0, 0.0};
    t.b_hat = {7.0 / 24.0, 1.0 / 4.0, 1.0 / 3.0, 1.0 / 8.0};
    t.c = {0.0, 1.0 / 2.0, 3.0 / 4.0, 1.0};
    return t;
}

ButcherTableau dormand_prince_45() {
    ButcherTableau t;
    t.name = "dopri5";
    t.stages = 7;
    t.order = 4;
    t.fsal = true;
    t.a = {
        0.0,              0.0,             0.0,            0.0,          0.0,             0.0,       0.0,
        1.0 / 5.0,        0.0,             0.0,            0.0,          0.0,             0.0,       0.0,
        3.0 / 40.0,       9.0 / 40.0,      0.0,            0.0,          0.0,             0.0,       0.0,
        44.0 / 45.0,     -56.0 / 15.0,     32.0 / 9.0,     0.0,          0.0,             0.0,       0.0,
        19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0,       0.0,       0.0,
        9017.0 / 3168.0, -355.0 / 33.0,    46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0,   0.0,
        35.0 / 384.0,     0.0,             500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0};
    t.b = {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0};
    t.b_hat = {5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0,
               187.0 / 2100.0, 1.0 / 40.0};
    t.c = {0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0};
    return t;
}

ButcherTableau by_name(std::string_view name) {
    if (name == "euler") return euler();
    if (name == "rk2") return rk2_heun();
    if (name == "rk4") return rk4();
    if (name == "heun_euler") return heun_euler_12();
    if (name == "bs23") return bogacki_shampine_23();
    if (name == "dopri5") return dormand_prince_45();
    throw OdeError(ErrorCode::InvalidArgument, "unknown tableau: " + std::string(name));
}

std::vector<std::string> names() {
    return {"euler", "rk2", "rk4", "heun_euler", "bs23", "dopri5"};
}

} // namespace tableaus
} // namespace odegrad
