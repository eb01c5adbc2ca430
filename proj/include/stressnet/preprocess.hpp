#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stressnet/cohort.hpp"
#include "stressnet/csv.hpp"
#include "stressnet/errors.hpp"

namespace stressnet {

/// One bank-year row before gap filling; the interbank sides may be missing.
struct SeriesRecord {
    std::string bank_id;
    std::string name;
    int period = 0;
    std::optional<double> equity;
    std::optional<double> total_assets;
    std::optional<double> interbank_assets;      // lending side
    std::optional<double> interbank_liabilities; // borrowing side
    bool imputed_lending = false;
    bool imputed_borrowing = false;
};

struct PreprocessResult {
    std::vector<SeriesRecord> records;
    std::vector<RejectedRecord> excluded;
};

namespace detail {

/// Fills interior gaps of at most `max_gap` missing years by linear
/// interpolation in the period variable. Returns which entries were filled.
inline void interpolate_side(std::vector<SeriesRecord*>& series,
                             std::optional<double> SeriesRecord::*side,
                             bool SeriesRecord::*imputed_flag, int max_gap) {
    const std::size_t n = series.size();
    std::size_t i = 0;
    while (i < n) {
        if ((series[i]->*side).has_value()) {
            ++i;
            continue;
        }
        std::size_t gap_begin = i;
        while (i < n && !(series[i]->*side).has_value())
            ++i;
        std::size_t gap_end = i; // one past the last missing entry
        bool interior = gap_begin > 0 && gap_end < n;
        if (!interior || static_cast<int>(gap_end - gap_begin) > max_gap)
            continue;
        const SeriesRecord* lo = series[gap_begin - 1];
        const SeriesRecord* hi = series[gap_end];
        double v0 = *(lo->*side), v1 = *(hi->*side);
        double t0 = lo->period, t1 = hi->period;
        for (std::size_t k = gap_begin; k < gap_end; ++k) {
            double t = series[k]->period;
            series[k]->*side = v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            series[k]->*imputed_flag = true;
        }
    }
}

} // namespace detail

/// Gap-filling rules for multi-year interbank series:
///   - interior gaps of 1-2 consecutive missing years are linearly
///     interpolated between the adjacent known years;
///   - longer (or boundary) gaps on one side are set equal to the other
///     side's value for the same year;
///   - filled values are flagged as imputed;
///   - a bank with no usable value on either side is excluded and reported.
/// The operation is idempotent: a second application changes nothing.
inline PreprocessResult preprocess_series(std::vector<SeriesRecord> records) {
    constexpr int kMaxInterpolatedGap = 2;

    std::map<std::string, std::vector<std::size_t>> by_bank;
    for (std::size_t i = 0; i < records.size(); ++i)
        by_bank[records[i].bank_id].push_back(i);

    PreprocessResult result;
    std::vector<bool> drop(records.size(), false);
    for (auto& [bank_id, idxs] : by_bank) {
        std::sort(idxs.begin(), idxs.end(), [&](std::size_t a, std::size_t b) {
            return records[a].period < records[b].period;
        });
        std::vector<SeriesRecord*> series;
        series.reserve(idxs.size());
        for (std::size_t i : idxs)
            series.push_back(&records[i]);

        detail::interpolate_side(series, &SeriesRecord::interbank_assets,
                                 &SeriesRecord::imputed_lending, kMaxInterpolatedGap);
        detail::interpolate_side(series, &SeriesRecord::interbank_liabilities,
                                 &SeriesRecord::imputed_borrowing, kMaxInterpolatedGap);

        // Remaining holes: set the missing side equal to the known side.
        for (SeriesRecord* r : series) {
            if (!r->interbank_assets && r->interbank_liabilities) {
                r->interbank_assets = r->interbank_liabilities;
                r->imputed_lending = true;
            }
            if (!r->interbank_liabilities && r->interbank_assets) {
                r->interbank_liabilities = r->interbank_assets;
                r->imputed_borrowing = true;
            }
        }

        for (std::size_t i : idxs) {
            if (!records[i].interbank_assets && !records[i].interbank_liabilities) {
                drop[i] = true;
                result.excluded.push_back(
                    {bank_id, records[i].period, "both interbank sides missing"});
            }
        }
    }
    for (std::size_t i = 0; i < records.size(); ++i)
        if (!drop[i])
            result.records.push_back(std::move(records[i]));
    return result;
}

/// Reads every row of a multi-year cohort CSV (all periods, empty numeric
/// cells allowed) for preprocessing.
inline std::vector<SeriesRecord> read_series_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    const std::size_t c_id = csv_column(table, "bank_id");
    const std::size_t c_name = csv_column(table, "name");
    const std::size_t c_period = csv_column(table, "period");
    const std::size_t c_equity = csv_column(table, "equity");
    const std::size_t c_assets = csv_column(table, "total_assets");
    const std::size_t c_ib_a = csv_column(table, "interbank_assets");
    const std::size_t c_ib_l = csv_column(table, "interbank_liabilities");

    std::vector<SeriesRecord> records;
    for (std::size_t row = 0; row < table.rows.size(); ++row) {
        const auto& cells = table.rows[row];
        const std::size_t line_no = row + 2;
        SeriesRecord r;
        r.bank_id = cells[c_id];
        r.name = cells[c_name];
        auto period = parse_cell(cells[c_period], line_no, "period");
        if (!period)
            throw ParseError("line " + std::to_string(line_no) + ": missing period");
        r.period = static_cast<int>(*period);
        r.equity = parse_cell(cells[c_equity], line_no, "equity");
        r.total_assets = parse_cell(cells[c_assets], line_no, "total_assets");
        r.interbank_assets = parse_cell(cells[c_ib_a], line_no, "interbank_assets");
        r.interbank_liabilities = parse_cell(cells[c_ib_l], line_no, "interbank_liabilities");
        records.push_back(std::move(r));
    }
    return records;
}

/// Converts preprocessed series rows for one period into cohort records.
inline std::vector<BankRecord> series_to_records(const std::vector<SeriesRecord>& series,
                                                 int period) {
    std::vector<BankRecord> out;
    for (const auto& s : series) {
        if (s.period != period)
            continue;
        if (!s.equity || !s.total_assets || !s.interbank_assets || !s.interbank_liabilities)
            continue; // still incomplete; caller sees it in the rejection report
        BankRecord r;
        r.bank_id = s.bank_id;
        r.name = s.name;
        r.period = s.period;
        r.equity = *s.equity;
        r.total_assets = *s.total_assets;
        r.interbank_assets = *s.interbank_assets;
        r.interbank_liabilities = *s.interbank_liabilities;
        r.imputed_lending = s.imputed_lending;
        r.imputed_borrowing = s.imputed_borrowing;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace stressnet
