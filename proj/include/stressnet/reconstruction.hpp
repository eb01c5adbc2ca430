#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stressnet/cohort.hpp"
#include "stressnet/errors.hpp"
#include "stressnet/rng.hpp"
#include "stressnet/types.hpp"

namespace stressnet {

/// Network totals after reconciling the two sides of the interbank market:
/// the lending volume is the minimum of total interbank assets and
/// liabilities, and each bank's propensity is its share of its own side.
struct RebalancedTotals {
    double total_volume = 0.0;
    Vec lending_propensity;   // A_i / sum_j A_j
    Vec borrowing_propensity; // L_i / sum_j L_j
};

inline RebalancedTotals rebalance_totals(const Cohort& cohort) {
    Vec lending = cohort.interbank_assets();
    Vec borrowing = cohort.interbank_liabilities();
    double total_lending = lending.sum();
    double total_borrowing = borrowing.sum();
    if (total_lending <= 0.0 || total_borrowing <= 0.0)
        throw InfeasibleError("rebalance_totals: a side of the interbank market is empty");
    RebalancedTotals t;
    t.total_volume = std::min(total_lending, total_borrowing);
    t.lending_propensity = lending / total_lending;
    t.borrowing_propensity = borrowing / total_borrowing;
    return t;
}

/// Fitness of each bank: the average of its lending and borrowing propensity.
inline Vec compute_fitness(const Vec& lending_propensity, const Vec& borrowing_propensity) {
    return 0.5 * (lending_propensity + borrowing_propensity);
}

/// Expected number of sampled (undirected) pairs under link probabilities
/// p_ij = z x_i x_j / (1 + z x_i x_j).
inline double expected_link_count(const Vec& fitness, double z) {
    const Eigen::Index n = fitness.size();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double w = z * fitness[i] * fitness[j];
            sum += w / (1.0 + w);
        }
    }
    return sum;
}

/// Solves expected_link_count(x, z) = density * n * (n-1) for z by bracketing
/// and bisection; the expectation is strictly increasing in z.
inline double calibrate_z(const Vec& fitness, double density, int n,
                          double rel_tol = 1e-8) {
    if (density <= 0.0 || density >= 1.0)
        throw InfeasibleError("calibrate_z: density must lie in (0,1)");
    if (fitness.size() != n)
        throw InfeasibleError("calibrate_z: fitness size does not match n");
    const double target = density * n * (n - 1);

    double supremum = 0.0; // number of pairs that can ever link
    for (Eigen::Index i = 0; i < fitness.size(); ++i)
        for (Eigen::Index j = i + 1; j < fitness.size(); ++j)
            if (fitness[i] > 0.0 && fitness[j] > 0.0)
                supremum += 1.0;
    if (supremum < 1.0)
        throw InfeasibleError("calibrate_z: fewer than two banks with positive fitness");
    if (target >= supremum)
        throw InfeasibleError("calibrate_z: target " + format_double(target) +
                              " links is unreachable (supremum " + format_double(supremum) + ")");

    double lo = 0.0, hi = 1.0;
    while (expected_link_count(fitness, hi) < target) {
        hi *= 2.0;
        if (!std::isfinite(hi))
            throw InfeasibleError("calibrate_z: bracketing failed");
    }
    double z = hi;
    for (int iter = 0; iter < 500; ++iter) {
        z = 0.5 * (lo + hi);
        double value = expected_link_count(fitness, z);
        if (std::abs(value - target) <= rel_tol * target)
            break;
        (value < target ? lo : hi) = z;
    }
    return z;
}

/// Calibrated fitness model for one cohort.
struct ReconstructionModel {
    Vec fitness;
    double z = 0.0;
    Mat link_probabilities; // symmetric, zero diagonal
    double target_links = 0.0;
    RebalancedTotals totals;
};

inline ReconstructionModel build_reconstruction_model(const Cohort& cohort, double density) {
    ReconstructionModel model;
    model.totals = rebalance_totals(cohort);
    model.fitness = compute_fitness(model.totals.lending_propensity,
                                    model.totals.borrowing_propensity);
    const int n = static_cast<int>(cohort.size());
    model.target_links = density * n * (n - 1);
    model.z = calibrate_z(model.fitness, density, n);
    model.link_probabilities = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double w = model.z * model.fitness[i] * model.fitness[j];
            double p = w / (1.0 + w);
            model.link_probabilities(i, j) = p;
            model.link_probabilities(j, i) = p;
        }
    }
    return model;
}

/// Samples a directed 0/1 adjacency matrix: each unordered pair links with
/// probability p_ij, and a sampled pair is oriented i->j or j->i with equal
/// probability (never both). Pairs are visited in lexicographic order and a
/// direction variate is drawn only for present pairs, so the draw sequence is
/// fixed for a given seed.
inline AdjMat sample_adjacency(const ReconstructionModel& model, std::uint64_t seed) {
    const Eigen::Index n = model.fitness.size();
    AdjMat adj = AdjMat::Zero(n, n);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (!rng.bernoulli(model.link_probabilities(i, j)))
                continue;
            if (rng.bernoulli(0.5))
                adj(i, j) = 1;
            else
                adj(j, i) = 1;
        }
    }
    return adj;
}

/// Result of fitting exposure weights on a sampled support.
struct IpfResult {
    Mat exposure;            // final matrix, scaled by total_volume
    double row_residual = 0.0; // max_i |row sum of pi - lending propensity|
    double col_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Iterative proportional fitting of relative exposures pi_ij on the sampled
/// support, starting from uniform weights on present links. Rows are scaled
/// to lending propensities, columns to borrowing propensities, until both
/// margin residuals drop below `tol` (absolute, propensity scale) or the
/// iteration cap is hit; non-convergence is flagged, not thrown. Links whose
/// lender has zero lending propensity (or borrower zero borrowing propensity)
/// are dropped up front since the margins pin them to zero.
inline IpfResult fit_weights(const AdjMat& adjacency, const Vec& lending_propensity,
                             const Vec& borrowing_propensity, double total_volume,
                             int max_iterations = 10000, double tol = 0.01) {
    const Eigen::Index n = adjacency.rows();
    Mat pi = Mat::Zero(n, n);
    int links = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && adjacency(i, j) != 0 && lending_propensity[i] > 0.0 &&
                borrowing_propensity[j] > 0.0)
                ++links;
    if (links == 0)
        throw InfeasibleError("fit_weights: no usable links in adjacency");
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && adjacency(i, j) != 0 && lending_propensity[i] > 0.0 &&
                borrowing_propensity[j] > 0.0)
                pi(i, j) = 1.0 / links;

    IpfResult result;
    auto residuals = [&]() {
        Vec row = pi.rowwise().sum() - lending_propensity;
        Vec col = pi.colwise().sum().transpose() - borrowing_propensity;
        result.row_residual = row.cwiseAbs().maxCoeff();
        result.col_residual = col.cwiseAbs().maxCoeff();
    };
    for (result.iterations = 0; result.iterations < max_iterations; ++result.iterations) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double row_sum = pi.row(i).sum();
            if (row_sum > 0.0 && lending_propensity[i] > 0.0)
                pi.row(i) *= lending_propensity[i] / row_sum;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            double col_sum = pi.col(j).sum();
            if (col_sum > 0.0 && borrowing_propensity[j] > 0.0)
                pi.col(j) *= borrowing_propensity[j] / col_sum;
        }
        residuals();
        if (result.row_residual < tol && result.col_residual < tol) {
            result.converged = true;
            ++result.iterations;
            break;
        }
    }
    result.exposure = pi * total_volume;
    return result;
}

struct MemberDiagnostics {
    std::uint64_t seed = 0;
    int resample_attempts = 0; // extra adjacency draws before coverage held
    int ipf_iterations = 0;
    double row_residual = 0.0;
    double col_residual = 0.0;
    bool converged = false;
    int directed_links = 0;
};

/// Ensemble of exposure matrices consistent with each bank's interbank totals.
struct NetworkEnsemble {
    std::vector<Mat> members;
    std::uint64_t master_seed = 0;
    double density = 0.0;
    double z = 0.0;
    double target_links = 0.0;
    double total_volume = 0.0;
    std::vector<MemberDiagnostics> diagnostics;
};

namespace detail {

/// Coverage needed for feasible weight fitting: every active lender has an
/// out-link to an active borrower, and every active borrower an in-link from
/// an active lender. Returns the index of the first uncovered bank, or -1.
inline Eigen::Index first_uncovered_bank(const AdjMat& adj, const Vec& lending_propensity,
                                         const Vec& borrowing_propensity) {
    const Eigen::Index n = adj.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (lending_propensity[i] > 0.0) {
            bool covered = false;
            for (Eigen::Index j = 0; j < n && !covered; ++j)
                covered = adj(i, j) != 0 && borrowing_propensity[j] > 0.0;
            if (!covered)
                return i;
        }
        if (borrowing_propensity[i] > 0.0) {
            bool covered = false;
            for (Eigen::Index j = 0; j < n && !covered; ++j)
                covered = adj(j, i) != 0 && lending_propensity[j] > 0.0;
            if (!covered)
                return i;
        }
    }
    return -1;
}

} // namespace detail

/// Generates `count` exposure matrices. Each member gets a pre-derived seed;
/// an adjacency that leaves an active bank unreachable is resampled with a
/// fresh derived seed, up to 100 attempts per slot.
inline NetworkEnsemble generate_ensemble(const Cohort& cohort, double density, int count,
                                         std::uint64_t master_seed) {
    constexpr int kMaxAttempts = 100;
    ReconstructionModel model = build_reconstruction_model(cohort, density);

    NetworkEnsemble ensemble;
    ensemble.master_seed = master_seed;
    ensemble.density = density;
    ensemble.z = model.z;
    ensemble.target_links = model.target_links;
    ensemble.total_volume = model.totals.total_volume;
    ensemble.members.reserve(static_cast<std::size_t>(count));

    for (int m = 0; m < count; ++m) {
        bool placed = false;
        Eigen::Index uncovered = -1;
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
            std::uint64_t seed = derive_seed(
                master_seed, "member",
                static_cast<std::uint64_t>(m) * kMaxAttempts + static_cast<std::uint64_t>(attempt));
            AdjMat adj = sample_adjacency(model, seed);
            uncovered = detail::first_uncovered_bank(adj, model.totals.lending_propensity,
                                                     model.totals.borrowing_propensity);
            if (uncovered >= 0)
                continue;
            IpfResult fit = fit_weights(adj, model.totals.lending_propensity,
                                        model.totals.borrowing_propensity,
                                        model.totals.total_volume);
            MemberDiagnostics diag;
            diag.seed = seed;
            diag.resample_attempts = attempt;
            diag.ipf_iterations = fit.iterations;
            diag.row_residual = fit.row_residual;
            diag.col_residual = fit.col_residual;
            diag.converged = fit.converged;
            diag.directed_links = adj.sum();
            ensemble.members.push_back(std::move(fit.exposure));
            ensemble.diagnostics.push_back(diag);
            placed = true;
            break;
        }
        if (!placed)
            throw InfeasibleError(
                "generate_ensemble: bank " +
                cohort.bank(static_cast<std::size_t>(uncovered)).bank_id +
                " unreachable after " + std::to_string(kMaxAttempts) + " resamples");
    }
    return ensemble;
}

} // namespace stressnet
