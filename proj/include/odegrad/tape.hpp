#ifndef ODEGRAD_TAPE_HPP
#define ODEGRAD_TAPE_HPP

#include <cstdint>
#include <vector>

#include "odegrad/vec.hpp"

namespace odegrad {

/// Where a trial's stepsize value came from. Rejection and Growth are both
/// outputs of the step controller (propose_step) applied to the parent
/// trial's (err_norm, h); Truncation is h = T - t at the named point;
/// Initial is a leaf (user-provided or heuristic h0, fixed-step h).
enum class HSourceKind : std::uint8_t { Initial, Rejection, Growth, Truncation };

struct HSource {
    HSourceKind kind = HSourceKind::Initial;
    long parent_trial = -1; // Rejection/Growth: trial whose (err, h) fed propose_step
    int trunc_point = -1;   // Truncation: index of the time point t in h = T - t
};

/// One executed trial step psi_h(t, z_point) recorded by the forward pass.
/// Together with the accepted-state checkpoints this is the full solver
/// computation graph: stage combinations and dynamics evaluations live in
/// `stage_derivs` (with `owns_k1` marking whether the first stage was a fresh
/// evaluation or a value shared from an earlier trial), error-norm and
/// controller nodes are implied by `err_norm`/`h_source`, and rejected trials
/// stay on the tape.
struct TrialRecord {
    int point = 0; // accepted-state index this trial starts from
    double t = 0.0;
    double h = 0.0; // stepsize actually used for the stages
    HSource h_source;
    bool accepted = false;
    bool owns_k1 = true;
    bool fed_propose = false; // (err, h) of this trial was consumed by a controller node
    double err_norm = 0.0;
    StateVector z_new;
    std::vector<StateVector> stage_derivs;
};

/// Append-only record of every solver computation in one forward integration,
/// including rejected trials and the step-size controller chain. Node counts
/// follow the elementary-operation view: per trial there are `stages` stage
/// points and dynamics evaluations (one fewer evaluation when the first stage
/// was shared) plus one solution combination; adaptive trials add an
/// error-norm node and, when consumed, a controller node; each accepted trial
/// adds a time-advance node and each truncation one subtraction node.
struct ForwardTape {
    std::vector<TrialRecord> trials;
    bool adaptive = false;
    int stages = 0;
    long truncation_nodes = 0;
    long node_budget = 0; // 0 = unlimited; exceeded => TAPE_OVERFLOW

    long node_count() const {
        long n = 3; // leaves: z0, theta, h0
        for (const auto& tr : trials) {
            n += (tr.owns_k1 ? stages : stages - 1); // dynamics evaluations
            n += stages - 1;                         // stage points y_2..y_s
            n += 1;                                  // solution combination
            if (adaptive) n += 1;                    // error norm
            if (tr.fed_propose) n += 1;              // step controller
            if (tr.accepted) n += 1;                 // time advance
        }
        n += truncation_nodes;
        return n;
    }
};

} // namespace odegrad

#endif
