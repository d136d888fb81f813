#include "odegrad/three_body.hpp"

#include <cmath>
#include <random>

namespace odegrad {

namespace {

constexpr int kBodies = 3;
constexpr int kDim = 3;
constexpr int kStateDim = 2 * kBodies * kDim; // 18

class ThreeBodyDynamics final : public DifferentiableDynamics {
public:
    ThreeBodyDynamics(double G, std::array<double, 3> masses, double eps_min)
        : G_(G), masses_(masses), eps_min_(eps_min) {
        if (!(G > 0.0)) throw OdeError(ErrorCode::InvalidArgument, "three_body_dynamics: G must be > 0");
        for (double m : masses)
            if (!(m > 0.0))
                throw OdeError(ErrorCode::InvalidArgument, "three_body_dynamics: masses must be > 0");
        if (!(eps_min > 0.0))
            throw OdeError(ErrorCode::InvalidArgument, "three_body_dynamics: eps_min must be > 0");
    }

    int state_dim() const override { return kStateDim; }
    int param_dim() const override { return kBodies; }
    ParamVector default_params() const override { return {masses_[0], masses_[1], masses_[2]}; }

    void eval_into(double, std::span<const double> z, std::span<const double> theta,
                   std::span<double> dz) const override {
        // dr/dt = v
        for (int i = 0; i < kBodies * kDim; ++i) dz[i] = z[9 + i];
        double* acc = dz.data() + 9;
        for (int i = 0; i < kBodies * kDim; ++i) acc[i] = 0.0;
        for (int i = 0; i < kBodies; ++i) {
            for (int j = i + 1; j < kBodies; ++j) {
                double u[kDim]; // r_j - r_i
                double n2 = 0.0;
                for (int c = 0; c < kDim; ++c) {
                    u[c] = z[3 * j + c] - z[3 * i + c];
                    n2 += u[c] * u[c];
                }
                const double n = std::sqrt(n2);
                if (n < eps_min_)
                    throw OdeError(ErrorCode::CollinearSingularity,
                                   "bodies " + std::to_string(i) + "," + std::to_string(j) +
                                       " at distance " + std::to_string(n));
                const double s = G_ / (n2 * n);
                for (int c = 0; c < kDim; ++c) {
                    const double w = s * u[c];
                    acc[3 * i + c] += theta[static_cast<std::size_t>(j)] * w;
                    acc[3 * j + c] -= theta[static_cast<std::size_t>(i)] * w;
                }
            }
        }
    }

    void vjp_into(double, std::span<const double> z, std::span<const double> theta,
                  std::span<const double> v, std::span<double> out_z,
                  std::span<double> out_theta) const override {
        // velocity rows are the identity into the position slots
        for (int i = 0; i < 9; ++i) {
            out_z[i] = 0.0;
            out_z[9 + i] = v[i];
        }
        for (int i = 0; i < kBodies; ++i) out_theta[static_cast<std::size_t>(i)] = 0.0;
        const double* wv = v.data() + 9; // cotangent of the accelerations
        for (int i = 0; i < kBodies; ++i) {
            for (int j = i + 1; j < kBodies; ++j) {
                double u[kDim];
                double n2 = 0.0;
                for (int c = 0; c < kDim; ++c) {
                    u[c] = z[3 * j + c] - z[3 * i + c];
                    n2 += u[c] * u[c];
                }
                const double n = std::sqrt(n2);
                if (n < eps_min_)
                    throw OdeError(ErrorCode::CollinearSingularity,
                                   "bodies " + std::to_string(i) + "," + std::to_string(j) +
                                       " at distance " + std::to_string(n));
                const double inv3 = 1.0 / (n2 * n);
                const double inv5 = inv3 / n2;
                // s(u) = u/|u|^3, J_s = I/|u|^3 - 3 u u^T/|u|^5 (symmetric)
                // acc_i += G m_j s(u), acc_j -= G m_i s(u) with u = r_j - r_i
                double q[kDim]; // G * (m_j wv_i - m_i wv_j)
                double udotq = 0.0;
                for (int c = 0; c < kDim; ++c) {
                    q[c] = G_ * (theta[static_cast<std::size_t>(j)] * wv[3 * i + c] -
                                 theta[static_cast<std::size_t>(i)] * wv[3 * j + c]);
                    udotq += u[c] * q[c];
                }
                double sdot_i = 0.0, sdot_j = 0.0; // s(u) . wv_i, s(u) . wv_j
                for (int c = 0; c < kDim; ++c) {
                    const double sc = u[c] * inv3;
                    sdot_i += sc * wv[3 * i + c];
                    sdot_j += sc * wv[3 * j + c];
                    const double jq = q[c] * inv3 - 3.0 * u[c] * udotq * inv5;
                    out_z[3 * j + c] += jq;
                    out_z[3 * i + c] -= jq;
                }
                out_theta[static_cast<std::size_t>(j)] += G_ * sdot_i;
                out_theta[static_cast<std::size_t>(i)] -= G_ * sdot_j;
            }
        }
    }

private:
    double G_;
    std::array<double, 3> masses_;
    double eps_min_;
};

// feature block (i, j, p) -> u / |u|^p with u = r_i - r_j
void pair_distance(std::span<const double> r, int i, int j, double eps_min, double u[kDim],
                   double& n) {
    double n2 = 0.0;
    for (int c = 0; c < kDim; ++c) {
        u[c] = r[3 * i + c] - r[3 * j + c];
        n2 += u[c] * u[c];
    }
    n = std::sqrt(n2);
    if (n < eps_min)
        throw OdeError(ErrorCode::CollinearSingularity, "bodies " + std::to_string(i) + "," +
                                                            std::to_string(j) + " at distance " +
                                                            std::to_string(n));
}

class FcDynamics final : public DifferentiableDynamics {
public:
    FcDynamics(int feature_dim, int hidden, double eps_min)
        : feat_(feature_dim), hidden_(hidden), eps_min_(eps_min) {
        if (feature_dim != augmented_feature_dim())
            throw OdeError(ErrorCode::DimensionMismatch,
                           "fc_dynamics: feature_dim " + std::to_string(feature_dim) +
                               " != " + std::to_string(augmented_feature_dim()));
        if (hidden < 1) throw OdeError(ErrorCode::InvalidArgument, "fc_dynamics: hidden must be >= 1");
    }

    int state_dim() const override { return kStateDim; }
    int param_dim() const override { return (feat_ + 1) * hidden_ + (hidden_ + 1) * 9; }

    void eval_into(double, std::span<const double> z, std::span<const double> theta,
                   std::span<double> dz) const override {
        for (int i = 0; i < 9; ++i) dz[i] = z[9 + i];
        StateVector aug(static_cast<std::size_t>(feat_));
        features(z, aug);
        StateVector hact(static_cast<std::size_t>(hidden_));
        forward_net(theta, aug, hact, dz.subspan(9, 9));
    }

    void vjp_into(double, std::span<const double> z, std::span<const double> theta,
                  std::span<const double> v, std::span<double> out_z,
                  std::span<double> out_theta) const override {
        for (int i = 0; i < 9; ++i) {
            out_z[i] = 0.0;
            out_z[9 + i] = v[i];
        }
        for (std::size_t i = 0; i < out_theta.size(); ++i) out_theta[i] = 0.0;

        StateVector aug(static_cast<std::size_t>(feat_));
        features(z, aug);
        StateVector hact(static_cast<std::size_t>(hidden_));
        StateVector acc(9);
        forward_net(theta, aug, hact, acc);

        const double* wv = v.data() + 9; // cotangent of accelerations
        const double* w1 = theta.data();
        const std::size_t b1_off = static_cast<std::size_t>(feat_) * hidden_;
        const std::size_t w2_off = b1_off + static_cast<std::size_t>(hidden_);
        const std::size_t b2_off = w2_off + static_cast<std::size_t>(hidden_) * 9;
        const double* w2 = theta.data() + w2_off;

        // output layer: acc_o = sum_h W2[o][h] hact[h] + b2[o]
        StateVector gh(static_cast<std::size_t>(hidden_), 0.0);
        for (int o = 0; o < 9; ++o) {
            const double g2 = wv[o];
            out_theta[b2_off + static_cast<std::size_t>(o)] = g2;
            for (int h = 0; h < hidden_; ++h) {
                out_theta[w2_off + static_cast<std::size_t>(o) * hidden_ + h] = g2 * hact[static_cast<std::size_t>(h)];
                gh[static_cast<std::size_t>(h)] += w2[static_cast<std::size_t>(o) * hidden_ + h] * g2;
            }
        }
        // hidden layer: hact = tanh(W1 aug + b1)
        StateVector gaug(static_cast<std::size_t>(feat_), 0.0);
        for (int h = 0; h < hidden_; ++h) {
            const double th = hact[static_cast<std::size_t>(h)];
            const double gpre = gh[static_cast<std::size_t>(h)] * (1.0 - th * th);
            out_theta[b1_off + static_cast<std::size_t>(h)] = gpre;
            const double* w1row = w1 + static_cast<std::size_t>(h) * feat_;
            for (int f = 0; f < feat_; ++f) {
                out_theta[static_cast<std::size_t>(h) * feat_ + f] = gpre * aug[static_cast<std::size_t>(f)];
                gaug[static_cast<std::size_t>(f)] += w1row[f] * gpre;
            }
        }
        augmented_features_vjp(z.subspan(0, 9), gaug, out_z.subspan(0, 9), eps_min_);
    }

private:
    void features(std::span<const double> z, StateVector& aug) const {
        const auto r = z.subspan(0, 9);
        int idx = 0;
        for (int i = 0; i < 9; ++i) aug[static_cast<std::size_t>(idx++)] = r[static_cast<std::size_t>(i)];
        for (int i = 0; i < kBodies; ++i) {
            for (int j = 0; j < kBodies; ++j) {
                if (j == i) continue;
                double u[kDim], n;
                pair_distance(r, i, j, eps_min_, u, n);
                for (int p = 0; p <= 3; ++p) {
                    const double invp = std::pow(n, -static_cast<double>(p));
                    for (int c = 0; c < kDim; ++c) aug[static_cast<std::size_t>(idx++)] = u[c] * invp;
                }
            }
        }
    }

    void forward_net(std::span<const double> theta, const StateVector& aug, StateVector& hact,
                     std::span<double> acc) const {
        const double* w1 = theta.data();
        const std::size_t b1_off = static_cast<std::size_t>(feat_) * hidden_;
        const std::size_t w2_off = b1_off + static_cast<std::size_t>(hidden_);
        const std::size_t b2_off = w2_off + static_cast<std::size_t>(hidden_) * 9;
        for (int h = 0; h < hidden_; ++h) {
            double s = theta[b1_off + static_cast<std::size_t>(h)];
            const double* row = w1 + static_cast<std::size_t>(h) * feat_;
            for (int f = 0; f < feat_; ++f) s += row[f] * aug[static_cast<std::size_t>(f)];
            hact[static_cast<std::size_t>(h)] = std::tanh(s);
        }
        for (int o = 0; o < 9; ++o) {
            double s = theta[b2_off + static_cast<std::size_t>(o)];
            const double* row = theta.data() + w2_off + static_cast<std::size_t>(o) * hidden_;
            for (int h = 0; h < hidden_; ++h) s += row[h] * hact[static_cast<std::size_t>(h)];
            acc[static_cast<std::size_t>(o)] = s;
        }
    }

    int feat_, hidden_;
    double eps_min_;
};

} // namespace

std::shared_ptr<DifferentiableDynamics> three_body_dynamics(double G,
                                                            std::array<double, 3> default_masses,
                                                            double eps_min) {
    return std::make_shared<ThreeBodyDynamics>(G, default_masses, eps_min);
}

int augmented_feature_dim() { return 9 + kBodies * (kBodies - 1) * 4 * kDim; }

StateVector augmented_features(const StateVector& positions, double eps_min) {
    require_dim(positions.size(), 9, "augmented_features positions");
    require_finite(positions, "augmented_features positions");
    StateVector out(static_cast<std::size_t>(augmented_feature_dim()));
    int idx = 0;
    for (int i = 0; i < 9; ++i) out[static_cast<std::size_t>(idx++)] = positions[static_cast<std::size_t>(i)];
    for (int i = 0; i < kBodies; ++i) {
        for (int j = 0; j < kBodies; ++j) {
            if (j == i) continue;
            double u[kDim], n;
            pair_distance(positions, i, j, eps_min, u, n);
            for (int p = 0; p <= 3; ++p) {
                const double invp = std::pow(n, -static_cast<double>(p));
                for (int c = 0; c < kDim; ++c) out[static_cast<std::size_t>(idx++)] = u[c] * invp;
            }
        }
    }
    return out;
}

void augmented_features_vjp(std::span<const double> positions, std::span<const double> w,
                            std::span<double> pos_bar, double eps_min) {
    int idx = 0;
    for (int i = 0; i < 9; ++i) pos_bar[static_cast<std::size_t>(i)] += w[static_cast<std::size_t>(idx++)];
    for (int i = 0; i < kBodies; ++i) {
        for (int j = 0; j < kBodies; ++j) {
            if (j == i) continue;
            double u[kDim], n;
            pair_distance(positions, i, j, eps_min, u, n);
            for (int p = 0; p <= 3; ++p) {
                const double invp = std::pow(n, -static_cast<double>(p));
                const double invp2 = invp / (n * n);
                const double* wp = w.data() + idx;
                double udotw = 0.0;
                for (int c = 0; c < kDim; ++c) udotw += u[c] * wp[c];
                for (int c = 0; c < kDim; ++c) {
                    const double g = wp[c] * invp - static_cast<double>(p) * u[c] * udotw * invp2;
                    pos_bar[static_cast<std::size_t>(3 * i + c)] += g;
                    pos_bar[static_cast<std::size_t>(3 * j + c)] -= g;
                }
                idx += kDim;
            }
        }
    }
}

std::shared_ptr<DifferentiableDynamics> fc_dynamics(int feature_dim, int hidden, double eps_min) {
    return std::make_shared<FcDynamics>(feature_dim, hidden, eps_min);
}

ParamVector fc_random_params(int feature_dim, int hidden, std::uint64_t seed, double scale) {
    const std::size_t n = static_cast<std::size_t>((feature_dim + 1) * hidden + (hidden + 1) * 9);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, scale);
    ParamVector theta(n);
    for (auto& x : theta) x = dist(rng);
    return theta;
}

double three_body_energy(const StateVector& state, const ParamVector& masses, double G) {
    double e = 0.0;
    for (int i = 0; i < kBodies; ++i) {
        double v2 = 0.0;
        for (int c = 0; c < kDim; ++c) {
            const double vc = state[static_cast<std::size_t>(9 + 3 * i + c)];
            v2 += vc * vc;
        }
        e += 0.5 * masses[static_cast<std::size_t>(i)] * v2;
    }
    for (int i = 0; i < kBodies; ++i) {
        for (int j = i + 1; j < kBodies; ++j) {
            double n2 = 0.0;
            for (int c = 0; c < kDim; ++c) {
                const double dd = state[static_cast<std::size_t>(3 * j + c)] -
                                  state[static_cast<std::size_t>(3 * i + c)];
                n2 += dd * dd;
            }
            e -= G * masses[static_cast<std::size_t>(i)] * masses[static_cast<std::size_t>(j)] /
                 std::sqrt(n2);
        }
    }
    return e;
}

std::array<double, 3> three_body_momentum(const StateVector& state, const ParamVector& masses) {
    std::array<double, 3> p{0.0, 0.0, 0.0};
    for (int i = 0; i < kBodies; ++i)
        for (int c = 0; c < kDim; ++c)
            p[static_cast<std::size_t>(c)] +=
                masses[static_cast<std::size_t>(i)] * state[static_cast<std::size_t>(9 + 3 * i + c)];
    return p;
}

} // namespace odegrad
