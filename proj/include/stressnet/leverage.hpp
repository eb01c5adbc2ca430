#pragma once

#include "stressnet/cohort.hpp"
#include "stressnet/errors.hpp"
#include "stressnet/types.hpp"

namespace stressnet {

/// The two leverage networks derived from balance sheets: interbank leverage
/// l^b_ij = A^b_ij / E_i(0) and external leverage l^e_ik = A^e_ik / E_i(0).
/// Equities are carried along so downstream dynamics can form equity weights.
struct LeverageNetworks {
    Mat interbank;      // n x n, l^b_ij
    Mat external;       // n x m (single column when no breakdown is supplied)
    Vec external_total; // l^e_i = sum_k l^e_ik
    Vec interbank_total; // l^b_i = sum_j l^b_ij
    Vec total;          // l_i = l^e_i + l^b_i
    Vec equity;         // E_i(0)

    Eigen::Index size() const { return equity.size(); }

    Vec equity_weights() const { return equity / equity.sum(); }
};

/// Derives both leverage networks from a cohort and an exposure matrix that
/// follows the cohort's ordering.
inline LeverageNetworks derive_leverage(const Cohort& cohort, const Mat& exposures) {
    const auto n = static_cast<Eigen::Index>(cohort.size());
    if (exposures.rows() != n || exposures.cols() != n)
        throw ValidationError("exposure matrix dimensions do not match cohort");

    LeverageNetworks lev;
    lev.equity = cohort.equities();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(lev.equity[i] > 0.0))
            throw ValidationError("bank " + cohort.bank(static_cast<std::size_t>(i)).bank_id +
                                  " has non-positive equity");

    lev.interbank = exposures.array().colwise() / lev.equity.array();
    if (cohort.has_breakdown())
        lev.external = cohort.external_breakdown().array().colwise() / lev.equity.array();
    else
        lev.external = (cohort.external_assets().array() / lev.equity.array()).matrix();
    lev.external_total = lev.external.rowwise().sum();
    lev.interbank_total = lev.interbank.rowwise().sum();
    lev.total = lev.external_total + lev.interbank_total;
    return lev;
}

} // namespace stressnet
