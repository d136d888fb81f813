#ifndef ODEGRAD_DATASET_HPP
#define ODEGRAD_DATASET_HPP

#include <array>
#include <cstdint>
#include <string>

#include "odegrad/solver.hpp"
#include "odegrad/three_body.hpp"

namespace odegrad {

/// Sampled trajectory observations. Samples with time <= train_end form the
/// training split; evaluation runs over the full range.
struct TrajectoryDataset {
    std::vector<double> times;
    std::vector<StateVector> states;
    double train_end = 1.0;

    std::size_t size() const { return times.size(); }
    std::size_t train_count() const;
    void validate() const;
};

/// Plain-text fixture format: '#' comment lines (the first documents the
/// columns), then one row per sample: time followed by the 18 state values.
TrajectoryDataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const TrajectoryDataset& ds,
                  const std::vector<std::string>& header_notes);

/// Reference three-body system used by the fitting experiments: unequal
/// masses, seeded random center-of-mass-frame initial conditions, trajectory
/// generated segment-by-segment at tight tolerance with Dormand-Prince.
struct ReferenceSystemConfig {
    std::array<double, 3> masses{1.0, 2.0, 3.0};
    double G = kGravitySolarAuYear;
    std::uint64_t seed = 99;
    double box_half_width = 0.5;  // positions uniform per coordinate [AU]
    double velocity_scale = 6.0;  // stddev of velocity components [AU/yr]
    double t_end = 2.0;           // years
    double train_end = 1.0;       // years
    int samples_per_year = 1000;
    double rtol = 1e-10;
    double atol = 1e-10;
};

/// Seeded initial state (positions uniform in the box, Gaussian velocities),
/// shifted to the center-of-mass frame.
StateVector reference_initial_state(const ReferenceSystemConfig& cfg);

TrajectoryDataset generate_three_body_dataset(const ReferenceSystemConfig& cfg);

/// Loads `path` if it exists, otherwise generates the dataset and saves it
/// there (with a header recording the generator settings).
TrajectoryDataset load_or_generate_dataset(const std::string& path,
                                           const ReferenceSystemConfig& cfg);

} // namespace odegrad

#endif
