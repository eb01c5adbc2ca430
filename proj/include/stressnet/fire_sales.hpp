#pragma once

#include <cmath>
#include <vector>

#include "stressnet/contagion.hpp"
#include "stressnet/errors.hpp"
#include "stressnet/leverage.hpp"
#include "stressnet/types.hpp"

namespace stressnet {

/// Third-round controls: the linear price-impact coefficient and the common
/// first-round shock the prices already carry.
struct FireSalesParams {
    double eta = 0.1; // price impact in [0,1]
    double r = 0.0;   // common first-round shock

    void validate() const {
        if (eta < 0.0 || eta > 1.0)
            throw ValidationError("fire sales: eta must lie in [0,1]");
        if (r < 0.0 || r >= 1.0)
            throw ValidationError("fire sales: r must lie in [0,1)");
    }
};

/// Leverage of each bank immediately after the second round,
/// l_i(T) = [(1-r) l^e_i + l^b_i - (h_i(T) - h_i(1))] / (1 - h_i(T)).
/// Defaulted banks have no defined value and are marked non-participating.
struct PostRoundLeverage {
    Vec value;                      // NaN where not participating
    std::vector<bool> participating;
};

inline PostRoundLeverage post_round2_leverage(const LeverageNetworks& leverage, const Vec& h1,
                                              const Vec& h2, double r) {
    const Eigen::Index n = leverage.size();
    if (h1.size() != n || h2.size() != n)
        throw ValidationError("post_round2_leverage: dimension mismatch");
    PostRoundLeverage out;
    out.value = Vec::Constant(n, std::numeric_limits<double>::quiet_NaN());
    out.participating.assign(static_cast<std::size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (h2[i] >= 1.0)
            continue; // defaulted: flagged, no value
        // For a surviving bank h1 = l^e r, so the numerator equals the
        // (1-r) l^e + l^b - h2 + l^e r form.
        out.value[i] = ((1.0 - r) * leverage.external_total[i] + leverage.interbank_total[i] -
                        (h2[i] - h1[i])) /
                       (1.0 - h2[i]);
        out.participating[static_cast<std::size_t>(i)] = true;
    }
    return out;
}

/// Fraction of external assets each bank sells to restore its initial
/// leverage: s_i = h_i(T) / ((1-r) l^e_i) * (l_i - 1)/(l_i + 1).
/// Defaulted banks, banks without external assets and banks with total
/// leverage at or below 1 do not sell. A fraction above 1 means full
/// restoration is infeasible; the sale is capped at the entire holding.
struct SaleFractions {
    Vec s;                       // in [0,1]
    std::vector<bool> capped;    // restoration infeasible, sold everything
    std::vector<bool> no_sale_flagged; // distressed but l_i <= 1
};

inline SaleFractions sale_fraction(const LeverageNetworks& leverage, const Vec& h2, double r) {
    const Eigen::Index n = leverage.size();
    if (h2.size() != n)
        throw ValidationError("sale_fraction: dimension mismatch");
    if (r >= 1.0)
        throw ValidationError("sale_fraction: r must be below 1");
    SaleFractions out;
    out.s = Vec::Zero(n);
    out.capped.assign(static_cast<std::size_t>(n), false);
    out.no_sale_flagged.assign(static_cast<std::size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        double distress = h2[i];
        if (distress <= 0.0 || distress >= 1.0)
            continue;
        if (leverage.external_total[i] <= 0.0)
            continue;
        double total = leverage.total[i];
        if (total <= 1.0) {
            out.no_sale_flagged[static_cast<std::size_t>(i)] = true;
            continue;
        }
        double s = distress / ((1.0 - r) * leverage.external_total[i]) * (total - 1.0) /
                   (total + 1.0);
        if (s > 1.0) {
            s = 1.0;
            out.capped[static_cast<std::size_t>(i)] = true;
        }
        out.s[i] = s;
    }
    return out;
}

/// Full третий-round outcome.
struct FireSalesOutcome {
    PostRoundLeverage post_round2;
    Vec sale_fractions;
    double sold_fraction = 0.0; // rho
    double final_price = 1.0;   // p(T+2) = (1-r)(1 - rho eta)
    Vec h_final;                // h(T+2)
    double H_final = 0.0;
    double H_round1 = 0.0;           // H(1)
    double H_round2_increment = 0.0; // H(T) - H(1)
    double H_round3_increment = 0.0; // H(T+2) - H(T)
};

/// Runs the fire-sale round after a completed propagation. Quantities Q are
/// the initial external asset holdings (unit initial price); defaulted banks
/// neither sell nor enter the sold-fraction aggregate.
inline FireSalesOutcome third_round(const LeverageNetworks& leverage, const ContagionState& state,
                                    const FireSalesParams& params, const Vec& quantities) {
    params.validate();
    const Eigen::Index n = leverage.size();
    if (quantities.size() != n)
        throw ValidationError("third_round: quantity dimension mismatch");

    const Vec& h1 = state.h_at(1);
    const Vec& h_end = state.h(); // end of the second round
    FireSalesOutcome out;
    out.post_round2 = post_round2_leverage(leverage, h1, h_end, params.r);
    SaleFractions sales = sale_fraction(leverage, h_end, params.r);
    out.sale_fractions = sales.s;

    double sold = 0.0, held = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!out.post_round2.participating[static_cast<std::size_t>(i)])
            continue;
        sold += sales.s[i] * quantities[i];
        held += quantities[i];
    }
    out.sold_fraction = held > 0.0 ? sold / held : 0.0;
    out.final_price = (1.0 - params.r) * (1.0 - out.sold_fraction * params.eta);

    double impact = (1.0 - params.r) * out.sold_fraction * params.eta;
    out.h_final =
        (h_end.array() +
         leverage.external_total.array() * (1.0 - out.sale_fractions.array()) * impact)
            .min(1.0)
            .matrix();

    const Vec& w = state.equity_weights();
    out.H_round1 = w.dot(h1);
    out.H_final = w.dot(out.h_final);
    out.H_round2_increment = w.dot(h_end) - out.H_round1;
    out.H_round3_increment = out.H_final - w.dot(h_end);
    return out;
}

} // namespace stressnet
