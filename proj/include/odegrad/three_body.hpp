#ifndef ODEGRAD_THREE_BODY_HPP
#define ODEGRAD_THREE_BODY_HPP

#include <array>
#include <cstdint>
#include <memory>

#include "odegrad/dynamics.hpp"

namespace odegrad {

/// Gravitational constant in solar masses, astronomical units and years
/// (4 pi^2: one solar mass at 1 AU gives a 1-year circular orbit).
inline constexpr double kGravitySolarAuYear = 39.47841760435743;

/// Point-mass gravity for three bodies. State is 18-dimensional:
/// positions r_1, r_2, r_3 then velocities (3 components each);
/// theta = [m_1, m_2, m_3]. Throws CollinearSingularity when a pairwise
/// distance drops below eps_min.
std::shared_ptr<DifferentiableDynamics> three_body_dynamics(
    double G, std::array<double, 3> default_masses = {1.0, 2.0, 3.0}, double eps_min = 1e-8);

/// Dimension of the augmented feature vector for 3 bodies in 3-D:
/// 3 positions + 6 ordered pairs x 4 scalings = 81 components.
int augmented_feature_dim();

/// Feature map over the 9 position coordinates: the bodies' positions
/// followed, body-major and scaling-power-minor, by
/// (r_i - r_j) / |r_i - r_j|^p for every ordered pair j != i and
/// p in {0, 1, 2, 3}.
StateVector augmented_features(const StateVector& positions, double eps_min = 1e-8);

/// Accumulates w^T d(augmented_features)/d(positions) into pos_bar (size 9).
void augmented_features_vjp(std::span<const double> positions, std::span<const double> w,
                            std::span<double> pos_bar, double eps_min = 1e-8);

/// Second-order dynamics with learned accelerations: d(r, v)/dt =
/// (v, FC(Aug(r))) where FC is a one-hidden-layer tanh network from the
/// augmented features to the 9 acceleration components. Parameters are
/// W1 (hidden x feature, row-major), b1, W2 (9 x hidden, row-major), b2,
/// flattened in that order. feature_dim must equal augmented_feature_dim().
std::shared_ptr<DifferentiableDynamics> fc_dynamics(int feature_dim, int hidden = 64,
                                                    double eps_min = 1e-8);

/// Seeded small-scale Gaussian initialization for fc_dynamics parameters.
ParamVector fc_random_params(int feature_dim, int hidden, std::uint64_t seed, double scale = 0.05);

/// Total energy (kinetic + pairwise potential) of an 18-dim state.
double three_body_energy(const StateVector& state, const ParamVector& masses, double G);

/// Total linear momentum (3 components).
std::array<double, 3> three_body_momentum(const StateVector& state, const ParamVector& masses);

} // namespace odegrad

#endif
