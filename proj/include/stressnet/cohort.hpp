#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stressnet/csv.hpp"
#include "stressnet/errors.hpp"
#include "stressnet/types.hpp"

namespace stressnet {

/// Relative tolerance for balance-sheet identities.
inline constexpr double kIdentityTolerance = 1e-9;

/// One institution's balance-sheet aggregates for one period.
/// external_assets and external_liabilities are derived at admission:
/// A^e = A - A^b and D^e = A - D^b - E (residual), so the identity
/// A^e + A^b = D^e + D^b + E holds exactly.
struct BankRecord {
    std::string bank_id;
    std::string name;
    int period = 0;
    double equity = 0.0;               // E_i(0)
    double total_assets = 0.0;         // A_i(0)
    double interbank_assets = 0.0;     // A^b_i
    double interbank_liabilities = 0.0; // D^b_i
    double external_assets = 0.0;      // A^e_i
    double external_liabilities = 0.0; // D^e_i, exogenous and time-constant
    bool imputed_lending = false;
    bool imputed_borrowing = false;
};

struct RejectedRecord {
    std::string bank_id;
    int period = 0;
    std::string reason;
};

/// Immutable ordered set of banks for one period. Ordering is stable and
/// shared by every matrix derived from the cohort.
class Cohort {
public:
    Cohort() = default;

    explicit Cohort(std::vector<BankRecord> banks) : banks_(std::move(banks)) {
        for (std::size_t i = 0; i < banks_.size(); ++i) {
            auto [it, inserted] = index_.emplace(banks_[i].bank_id, i);
            if (!inserted)
                throw ValidationError("duplicate bank_id: " + banks_[i].bank_id);
        }
    }

    std::size_t size() const { return banks_.size(); }
    const std::vector<BankRecord>& banks() const { return banks_; }
    const BankRecord& bank(std::size_t i) const { return banks_.at(i); }

    std::size_t index_of(const std::string& bank_id) const {
        auto it = index_.find(bank_id);
        if (it == index_.end())
            throw ValidationError("unknown bank_id: " + bank_id);
        return it->second;
    }
    bool contains(const std::string& bank_id) const { return index_.count(bank_id) > 0; }

    Vec equities() const { return column(&BankRecord::equity); }
    Vec total_assets() const { return column(&BankRecord::total_assets); }
    Vec interbank_assets() const { return column(&BankRecord::interbank_assets); }
    Vec interbank_liabilities() const { return column(&BankRecord::interbank_liabilities); }
    Vec external_assets() const { return column(&BankRecord::external_assets); }

    /// Optional per-asset-class breakdown of external assets (n x m).
    bool has_breakdown() const { return !asset_classes_.empty(); }
    const std::vector<std::string>& asset_classes() const { return asset_classes_; }
    const Mat& external_breakdown() const { return breakdown_; }

    void attach_breakdown(std::vector<std::string> classes, Mat breakdown) {
        if (breakdown.rows() != static_cast<Eigen::Index>(banks_.size()) ||
            breakdown.cols() != static_cast<Eigen::Index>(classes.size()))
            throw ValidationError("breakdown dimensions do not match cohort");
        for (std::size_t i = 0; i < banks_.size(); ++i) {
            double sum = breakdown.row(static_cast<Eigen::Index>(i)).sum();
            double expected = banks_[i].external_assets;
            double scale = std::max(std::abs(expected), 1.0);
            if (std::abs(sum - expected) > kIdentityTolerance * scale)
                throw ValidationError("external breakdown for bank " + banks_[i].bank_id +
                                      " sums to " + format_double(sum) + ", expected " +
                                      format_double(expected));
        }
        asset_classes_ = std::move(classes);
        breakdown_ = std::move(breakdown);
    }

private:
    Vec column(double BankRecord::*field) const {
        Vec v(static_cast<Eigen::Index>(banks_.size()));
        for (std::size_t i = 0; i < banks_.size(); ++i)
            v[static_cast<Eigen::Index>(i)] = banks_[i].*field;
        return v;
    }

    std::vector<BankRecord> banks_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> asset_classes_;
    Mat breakdown_;
};

struct IngestResult {
    Cohort cohort;
    std::vector<RejectedRecord> rejected;
};

namespace detail {

/// Validates one raw record and either completes the derived fields or
/// reports why the bank cannot be simulated. Hard data errors (negative
/// monetary values) throw; invariant failures land in the rejection report.
inline bool admit_record(BankRecord& r, std::vector<RejectedRecord>& rejected) {
    for (auto [value, label] : {std::pair{r.equity, "equity"},
                                std::pair{r.total_assets, "total_assets"},
                                std::pair{r.interbank_assets, "interbank_assets"},
                                std::pair{r.interbank_liabilities, "interbank_liabilities"}}) {
        if (value < 0.0)
            throw ValidationError("bank " + r.bank_id + ": negative " + label);
    }
    if (r.equity <= 0.0) {
        rejected.push_back({r.bank_id, r.period, "non-positive equity"});
        return false;
    }
    double scale = std::max(r.total_assets, 1.0);
    if (r.interbank_assets > r.total_assets + kIdentityTolerance * scale) {
        rejected.push_back({r.bank_id, r.period, "interbank assets exceed total assets"});
        return false;
    }
    r.external_assets = std::max(0.0, r.total_assets - r.interbank_assets);
    double residual = r.total_assets - r.interbank_liabilities - r.equity;
    if (residual < -kIdentityTolerance * scale) {
        rejected.push_back({r.bank_id, r.period,
                            "implied external liabilities negative (" + format_double(residual) + ")"});
        return false;
    }
    r.external_liabilities = std::max(0.0, residual);
    return true;
}

} // namespace detail

/// Builds a cohort from already-parsed records; failing records are reported,
/// not silently dropped.
inline IngestResult build_cohort(std::vector<BankRecord> records) {
    IngestResult result;
    std::vector<BankRecord> admitted;
    for (auto& r : records) {
        if (detail::admit_record(r, result.rejected))
            admitted.push_back(std::move(r));
    }
    result.cohort = Cohort(std::move(admitted));
    return result;
}

/// Reads the cohort CSV schema
/// `bank_id,name,period,equity,total_assets,interbank_assets,interbank_liabilities`
/// and returns the validated cohort for the requested period.
inline IngestResult ingest_cohort(const std::string& path, int period) {
    CsvTable table = read_csv(path);
    const std::size_t c_id = csv_column(table, "bank_id");
    const std::size_t c_name = csv_column(table, "name");
    const std::size_t c_period = csv_column(table, "period");
    const std::size_t c_equity = csv_column(table, "equity");
    const std::size_t c_assets = csv_column(table, "total_assets");
    const std::size_t c_ib_a = csv_column(table, "interbank_assets");
    const std::size_t c_ib_l = csv_column(table, "interbank_liabilities");

    std::vector<BankRecord> records;
    for (std::size_t row = 0; row < table.rows.size(); ++row) {
        const auto& cells = table.rows[row];
        const std::size_t line_no = row + 2;
        int row_period = static_cast<int>(
            parse_cell(cells[c_period], line_no, "period").value_or(-1));
        if (row_period != period)
            continue;
        BankRecord r;
        r.bank_id = cells[c_id];
        r.name = cells[c_name];
        r.period = row_period;
        if (r.bank_id.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty bank_id");
        auto required = [&](std::size_t col, const char* label) {
            auto v = parse_cell(cells[col], line_no, label);
            if (!v)
                throw ParseError("line " + std::to_string(line_no) + ": missing " +
                                 std::string(label) +
                                 " (run preprocessing on multi-year series first)");
            return *v;
        };
        r.equity = required(c_equity, "equity");
        r.total_assets = required(c_assets, "total_assets");
        r.interbank_assets = required(c_ib_a, "interbank_assets");
        r.interbank_liabilities = required(c_ib_l, "interbank_liabilities");
        records.push_back(std::move(r));
    }
    return build_cohort(std::move(records));
}

/// Attaches the optional external-asset breakdown file
/// (`bank_id,asset_class,amount`) to an ingested cohort.
inline void ingest_breakdown(Cohort& cohort, const std::string& path) {
    CsvTable table = read_csv(path);
    const std::size_t c_id = csv_column(table, "bank_id");
    const std::size_t c_class = csv_column(table, "asset_class");
    const std::size_t c_amount = csv_column(table, "amount");

    std::vector<std::string> classes;
    std::unordered_map<std::string, std::size_t> class_index;
    Mat breakdown = Mat::Zero(static_cast<Eigen::Index>(cohort.size()), 0);
    for (std::size_t row = 0; row < table.rows.size(); ++row) {
        const auto& cells = table.rows[row];
        const std::size_t line_no = row + 2;
        const std::string& id = cells[c_id];
        if (!cohort.contains(id))
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": breakdown references unknown bank " + id);
        auto amount = parse_cell(cells[c_amount], line_no, "amount");
        if (!amount || *amount < 0.0)
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": breakdown amount must be a nonnegative number");
        auto [it, inserted] = class_index.emplace(cells[c_class], classes.size());
        if (inserted) {
            classes.push_back(cells[c_class]);
            breakdown.conservativeResize(Eigen::NoChange, breakdown.cols() + 1);
            breakdown.col(breakdown.cols() - 1).setZero();
        }
        breakdown(static_cast<Eigen::Index>(cohort.index_of(id)),
                  static_cast<Eigen::Index>(it->second)) += *amount;
    }
    cohort.attach_breakdown(std::move(classes), std::move(breakdown));
}

/// Writes a cohort back out in the ingest schema.
inline void write_cohort_csv(const Cohort& cohort, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write file: " + path);
    out << "bank_id,name,period,equity,total_assets,interbank_assets,interbank_liabilities\n";
    for (const auto& b : cohort.banks()) {
        out << csv_escape(b.bank_id) << ',' << csv_escape(b.name) << ',' << b.period << ','
            << format_double(b.equity) << ',' << format_double(b.total_assets) << ','
            << format_double(b.interbank_assets) << ',' << format_double(b.interbank_liabilities)
            << '\n';
    }
}

} // namespace stressnet
