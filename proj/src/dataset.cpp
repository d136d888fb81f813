#include "odegrad/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "odegrad/tableau.hpp"

namespace odegrad {

std::size_t TrajectoryDataset::train_count() const {
    std::size_t n = 0;
    while (n < times.size() && times[n] <= train_end) ++n;
    return n;
}

void TrajectoryDataset::validate() const {
    if (times.size() != states.size())
        throw OdeError(ErrorCode::InvalidArgument, "dataset: times/states length mismatch");
    if (times.empty()) throw OdeError(ErrorCode::InvalidArgument, "dataset: empty");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw OdeError(ErrorCode::InvalidArgument, "dataset: times not increasing");
    for (const auto& s : states) require_finite(s, "dataset state");
}

TrajectoryDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw OdeError(ErrorCode::InvalidArgument, "cannot open dataset " + path);
    TrajectoryDataset ds;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            const auto pos = line.find("train_end=");
            if (pos != std::string::npos) ds.train_end = std::stod(line.substr(pos + 10));
            continue;
        }
        std::istringstream row(line);
        double t;
        if (!(row >> t)) throw OdeError(ErrorCode::InvalidArgument, "bad dataset row: " + line);
        StateVector s;
        double x;
        while (row >> x) s.push_back(x);
        ds.times.push_back(t);
        ds.states.push_back(std::move(s));
    }
    ds.validate();
    return ds;
}

void save_dataset(const std::string& path, const TrajectoryDataset& ds,
                  const std::vector<std::string>& header_notes) {
    std::ofstream out(path);
    if (!out) throw OdeError(ErrorCode::InvalidArgument, "cannot write dataset " + path);
    out << "# columns: time[years] r1x r1y r1z r2x r2y r2z r3x r3y r3z"
           " v1x v1y v1z v2x v2y v2z v3x v3y v3z\n";
    out << "# train_end=" << ds.train_end << "\n";
    for (const auto& note : header_notes) out << "# " << note << "\n";
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", ds.times[i]);
        out << buf;
        for (double x : ds.states[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out << ' ' << buf;
        }
        out << '\n';
    }
}

StateVector reference_initial_state(const ReferenceSystemConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> upos(-cfg.box_half_width, cfg.box_half_width);
    std::normal_distribution<double> uvel(0.0, cfg.velocity_scale);
    StateVector z(18);
    for (int i = 0; i < 9; ++i) z[static_cast<std::size_t>(i)] = upos(rng);
    for (int i = 9; i < 18; ++i) z[static_cast<std::size_t>(i)] = uvel(rng);

    // shift to the center-of-mass frame
    const double mtot = cfg.masses[0] + cfg.masses[1] + cfg.masses[2];
    for (int c = 0; c < 3; ++c) {
        double rc = 0.0, vc = 0.0;
        for (int i = 0; i < 3; ++i) {
            rc += cfg.masses[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(3 * i + c)];
            vc += cfg.masses[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(9 + 3 * i + c)];
        }
        rc /= mtot;
        vc /= mtot;
        for (int i = 0; i < 3; ++i) {
            z[static_cast<std::size_t>(3 * i + c)] -= rc;
            z[static_cast<std::size_t>(9 + 3 * i + c)] -= vc;
        }
    }
    return z;
}

TrajectoryDataset generate_three_body_dataset(const ReferenceSystemConfig& cfg) {
    auto dyn = three_body_dynamics(cfg.G, cfg.masses);
    const ParamVector masses = dyn->default_params();
    const StateVector z0 = reference_initial_state(cfg);

    TrajectoryDataset ds;
    ds.train_end = cfg.train_end;
    const long n = std::lround(cfg.t_end * cfg.samples_per_year);
    ds.times.reserve(static_cast<std::size_t>(n) + 1);
    for (long i = 0; i <= n; ++i)
        ds.times.push_back(static_cast<double>(i) / cfg.samples_per_year);

    SolverConfig scfg;
    scfg.rtol = cfg.rtol;
    scfg.atol = cfg.atol;
    const ButcherTableau tb = tableaus::dormand_prince_45();
    ds.states = integrate_piecewise(*dyn, z0, masses, ds.times, tb, scfg);
    ds.validate();
    return ds;
}

TrajectoryDataset load_or_generate_dataset(const std::string& path,
                                           const ReferenceSystemConfig& cfg) {
    if (std::filesystem::exists(path)) return load_dataset(path);
    TrajectoryDataset ds = generate_three_body_dataset(cfg);
    std::ostringstream note;
    note << "generator: three-body dopri5 rtol=" << cfg.rtol << " atol=" << cfg.atol
         << " G=" << cfg.G << " masses=" << cfg.masses[0] << "," << cfg.masses[1] << ","
         << cfg.masses[2] << " seed=" << cfg.seed << " box=" << cfg.box_half_width
         << " vel_scale=" << cfg.velocity_scale;
    save_dataset(path, ds, {note.str()});
    return ds;
}

} // namespace odegrad
