#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "stressnet/errors.hpp"
#include "stressnet/leverage.hpp"
#include "stressnet/types.hpp"

namespace stressnet {

/// How a bank's distress maps into the loss transmitted to its lenders.
/// DebtRank transmits the distress level itself; the default cascade
/// transmits only outright default.
enum class Dynamics { DebtRank, DefaultCascade };

inline double distress_transfer(Dynamics dynamics, double h) {
    if (dynamics == Dynamics::DebtRank)
        return h;
    return h >= 1.0 ? 1.0 : 0.0;
}

inline Dynamics parse_dynamics(const std::string& name) {
    if (name == "debtrank")
        return Dynamics::DebtRank;
    if (name == "cascade")
        return Dynamics::DefaultCascade;
    throw ValidationError("unknown dynamics '" + name + "' (expected debtrank or cascade)");
}

inline const char* dynamics_name(Dynamics d) {
    return d == Dynamics::DebtRank ? "debtrank" : "cascade";
}

/// Relative price shocks per external asset class, each in [0,1].
struct ShockVector {
    Vec shocks;

    static ShockVector common(Eigen::Index asset_count, double r) {
        return {Vec::Constant(asset_count, r)};
    }
};

/// Distress trajectory of one propagation run. h holds the cumulative
/// relative equity loss of each bank, capped at 1 (default); rounds_ records
/// the snapshot at the end of every round starting with h(1).
class ContagionState {
public:
    ContagionState(Vec h1, std::vector<int> active, Vec equity_weights)
        : rounds_{h1}, active_(std::move(active)),
          propagated_(static_cast<std::size_t>(h1.size()), false),
          transmissions_(static_cast<std::size_t>(h1.size()), 0),
          weights_(std::move(equity_weights)) {}

    Eigen::Index size() const { return rounds_.front().size(); }
    const Vec& h() const { return rounds_.back(); }
    const Vec& equity_weights() const { return weights_; }
    const std::vector<int>& active_set() const { return active_; }
    const std::vector<bool>& propagated() const { return propagated_; }

    /// Termination round T: the last round at which anything happened. A run
    /// with an empty initial active set never leaves round 1.
    int termination_round() const { return static_cast<int>(rounds_.size()); }

    /// Snapshot of h at a given round; h is constant after termination, so
    /// rounds beyond T return the final state. Round 0 is the baseline.
    const Vec& h_at(int round) const {
        if (round < 0)
            throw std::out_of_range("round must be nonnegative");
        if (round == 0) {
            if (baseline_.size() != rounds_.front().size())
                baseline_ = Vec::Zero(rounds_.front().size());
            return baseline_;
        }
        std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(round), rounds_.size());
        return rounds_[idx - 1];
    }

    /// Number of times each bank transmitted distress; the one-shot rule
    /// keeps every entry at most 1.
    const std::vector<int>& transmission_counts() const { return transmissions_; }

    void push_round(Vec h, std::vector<int> next_active) {
        for (int j : active_) {
            propagated_[static_cast<std::size_t>(j)] = true;
            ++transmissions_[static_cast<std::size_t>(j)];
        }
        rounds_.push_back(std::move(h));
        active_ = std::move(next_active);
    }

private:
    std::vector<Vec> rounds_;
    std::vector<int> active_;
    std::vector<bool> propagated_;
    std::vector<int> transmissions_;
    Vec weights_;
    mutable Vec baseline_;
};

/// First round: the shock on external assets is amplified by external
/// leverage, h_i(1) = min(1, sum_k l^e_ik r_k). Every distressed bank enters
/// the active set and will transmit in round 2.
inline ContagionState first_round(const LeverageNetworks& leverage, const ShockVector& shock) {
    if (shock.shocks.size() != leverage.external.cols())
        throw ValidationError("shock dimension does not match external asset breadth");
    if ((shock.shocks.array() < 0.0).any() || (shock.shocks.array() > 1.0).any())
        throw ValidationError("shocks must lie in [0,1]");
    Vec h1 = (leverage.external * shock.shocks).cwiseMin(1.0);
    std::vector<int> active;
    for (Eigen::Index i = 0; i < h1.size(); ++i)
        if (h1[i] > 0.0)
            active.push_back(static_cast<int>(i));
    return ContagionState(std::move(h1), std::move(active), leverage.equity_weights());
}

inline ContagionState first_round(const LeverageNetworks& leverage, double common_shock) {
    return first_round(leverage, ShockVector::common(leverage.external.cols(), common_shock));
}

/// Runs the interbank reverberation to termination. Each active bank j
/// transmits once: lender i accrues l^b_ij * f(h_j(t-1)), capped at 1.
/// Banks whose distress increased this round and that have not yet
/// transmitted become active next round; the process ends when the active
/// set empties. A transmitting bank never re-enters the active set, which
/// excludes every walk that would reuse a node.
inline ContagionState propagate(ContagionState state, const LeverageNetworks& leverage,
                                Dynamics dynamics) {
    const Eigen::Index n = state.size();
    if (leverage.interbank.rows() != n)
        throw ValidationError("leverage dimensions do not match state");
    while (!state.active_set().empty()) {
        const Vec& h_prev = state.h();
        Vec transfer = Vec::Zero(n);
        std::vector<bool> spent = state.propagated();
        for (int j : state.active_set()) {
            transfer[j] = distress_transfer(dynamics, h_prev[j]);
            spent[static_cast<std::size_t>(j)] = true;
        }
        Vec h_next = (h_prev + leverage.interbank * transfer).cwiseMin(1.0);
        std::vector<int> next_active;
        for (Eigen::Index i = 0; i < n; ++i)
            if (h_next[i] > h_prev[i] && !spent[static_cast<std::size_t>(i)])
                next_active.push_back(static_cast<int>(i));
        state.push_round(std::move(h_next), std::move(next_active));
    }
    return state;
}

/// Closed form for the end of the second round under a common shock and
/// DebtRank dynamics: h_i(2) = min(1, l^e_i r + sum_j l^b_ij l^e_j r).
inline Vec closed_form_second_round(const LeverageNetworks& leverage, double common_shock) {
    Vec first = leverage.external_total * common_shock;
    return (first + leverage.interbank * first).cwiseMin(1.0);
}

/// Global vulnerability H = sum_i w_i h_i at the requested round.
inline double global_vulnerability(const ContagionState& state, int round) {
    return state.equity_weights().dot(state.h_at(round));
}

/// Monetary value of the global loss at a round: H * total initial equity.
inline double global_loss_value(const ContagionState& state, int round,
                                const LeverageNetworks& leverage) {
    return global_vulnerability(state, round) * leverage.equity.sum();
}

/// Mean-field estimate of H(2): lbar_e r + lbar_b lbar_e r with equity-
/// weighted average leverages. Exact when the cohort is homogeneous.
inline double approx_global_second_round(const LeverageNetworks& leverage, double common_shock) {
    Vec w = leverage.equity_weights();
    double mean_external = w.dot(leverage.external_total);
    double mean_interbank = w.dot(leverage.interbank_total);
    return mean_external * common_shock + mean_interbank * mean_external * common_shock;
}

/// Impact of forcing one bank into default and propagating to termination.
struct ImpactResult {
    double gross = 0.0;    // sum_i w_i h_i(T), seed included
    double net = 0.0;      // seed's own loss excluded
    double monetary = 0.0; // gross * total initial equity
    Vec h_final;
    int termination_round = 1;
};

inline ImpactResult impact(Eigen::Index bank, const LeverageNetworks& leverage,
                           Dynamics dynamics) {
    const Eigen::Index n = leverage.size();
    if (bank < 0 || bank >= n)
        throw ValidationError("impact: bank index out of range");
    Vec h1 = Vec::Zero(n);
    h1[bank] = 1.0;
    ContagionState state(std::move(h1), {static_cast<int>(bank)}, leverage.equity_weights());
    state = propagate(std::move(state), leverage, dynamics);
    ImpactResult result;
    const Vec& w = state.equity_weights();
    result.gross = w.dot(state.h());
    result.net = result.gross - w[bank] * state.h()[bank];
    result.monetary = result.gross * leverage.equity.sum();
    result.h_final = state.h();
    result.termination_round = state.termination_round();
    return result;
}

} // namespace stressnet
