#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "stressnet/cohort.hpp"
#include "stressnet/errors.hpp"
#include "stressnet/rng.hpp"

namespace stressnet {

/// Controls for the synthetic cohort generator. Defaults give a heavy-tailed
/// size distribution and leverage/interbank shares in ranges typical of
/// listed-bank balance sheets.
struct SynthParams {
    double asset_log_mu = 9.0;    // lognormal size: median exp(mu)
    double asset_log_sigma = 1.3; // heavy tail
    double leverage_min = 8.0;    // total leverage l = A/E
    double leverage_max = 25.0;
    double interbank_frac_min = 0.05; // A^b as a share of A
    double interbank_frac_max = 0.25;
    double lend_borrow_correlation = 0.7; // 1 = borrowing tracks lending exactly
    int period = 2013;
};

/// Generates a deterministic cohort of n banks satisfying every BankRecord
/// invariant. Borrowing is drawn around lending with a spread controlled by
/// the correlation parameter, then capped so implied external liabilities
/// stay nonnegative.
inline Cohort synthesize_cohort(int n, std::uint64_t seed, const SynthParams& params = {}) {
    if (n < 2)
        throw InfeasibleError("synthesize_cohort: need at least 2 banks");
    if (params.leverage_min < 1.0)
        throw InfeasibleError(
            "synthesize_cohort: leverage below 1 implies negative external liabilities");
    if (params.leverage_max < params.leverage_min)
        throw InfeasibleError("synthesize_cohort: leverage_max < leverage_min");
    if (params.interbank_frac_min < 0.0 || params.interbank_frac_max > 1.0 ||
        params.interbank_frac_max < params.interbank_frac_min)
        throw InfeasibleError("synthesize_cohort: interbank fraction range invalid");
    if (params.lend_borrow_correlation < 0.0 || params.lend_borrow_correlation > 1.0)
        throw InfeasibleError("synthesize_cohort: correlation must lie in [0,1]");

    Rng rng(derive_seed(seed, "synth"));
    std::vector<BankRecord> records;
    records.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        BankRecord r;
        char id[16];
        std::snprintf(id, sizeof id, "S%04d", i + 1);
        r.bank_id = id;
        r.name = "Synthetic Bank " + std::to_string(i + 1);
        r.period = params.period;

        r.total_assets = rng.lognormal(params.asset_log_mu, params.asset_log_sigma);
        double leverage = rng.uniform(params.leverage_min, params.leverage_max);
        r.equity = r.total_assets / leverage;
        double frac = rng.uniform(params.interbank_frac_min, params.interbank_frac_max);
        r.interbank_assets = frac * r.total_assets;

        // Borrowing = lending scaled by a lognormal spread; correlation 1
        // collapses the spread to zero.
        double spread_sigma = 0.8 * (1.0 - params.lend_borrow_correlation);
        double borrowing = r.interbank_assets * std::exp(spread_sigma * rng.normal());
        double capacity = r.total_assets - r.equity; // D^e >= 0 bound
        r.interbank_liabilities = std::min(borrowing, capacity);

        r.external_assets = r.total_assets - r.interbank_assets;
        r.external_liabilities = r.total_assets - r.interbank_liabilities - r.equity;
        records.push_back(std::move(r));
    }
    IngestResult built = build_cohort(std::move(records));
    if (!built.rejected.empty())
        throw InfeasibleError("synthesize_cohort: generated record failed validation: " +
                              built.rejected.front().reason);
    return std::move(built.cohort);
}

} // namespace stressnet
