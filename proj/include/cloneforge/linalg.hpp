#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cloneforge/common.hpp"

namespace cloneforge::detail {

using Row = std::vector<std::uint8_t>;

inline int inv_mod(int a, int m) {
    a %= m;
    if (a < 0) a += m;
    for (int x = 1; x < m; ++x)
        if (a * x % m == 1) return x;
    throw std::invalid_argument("inv_mod: not invertible");
}

/// Incremental reduced row echelon form over Z_m (m prime).
/// Column 0 is the leading column, so the entry at index 0 is the most
/// significant coordinate for all canonical orderings built on top of this.
class Echelon {
public:
    Echelon(int mod, std::size_t cols) : mod_(mod), cols_(cols) {}

    /// Reduces `row` against the basis; inserts the remainder if nonzero.
    /// Returns true when the rank grew.
    bool insert(Row row) {
        reduce(row);
        std::size_t lead = leading(row);
        if (lead == cols_) return false;
        int inv = inv_mod(row[lead], mod_);
        for (auto& v : row) v = static_cast<std::uint8_t>(v * inv % mod_);
        // back-substitute into existing rows to keep the form reduced
        for (auto& r : rows_) {
            int c = r[lead];
            if (c != 0) subtract_scaled(r, row, c);
        }
        auto pos = std::lower_bound(pivots_.begin(), pivots_.end(), lead);
        std::size_t idx = static_cast<std::size_t>(pos - pivots_.begin());
        pivots_.insert(pos, lead);
        rows_.insert(rows_.begin() + static_cast<std::ptrdiff_t>(idx), std::move(row));
        return true;
    }

    /// True iff `row` lies in the span.
    bool contains(Row row) const {
        reduce(row);
        return leading(row) == cols_;
    }

    /// Coordinates of `row` in the basis, if representable.
    std::optional<Row> solve(Row row) const {
        Row coeff(rows_.size(), 0);
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            int c = row[pivots_[i]];
            if (c != 0) {
                coeff[i] = static_cast<std::uint8_t>(c);
                subtract_scaled(row, rows_[i], c);
            }
        }
        if (leading(row) != cols_) return std::nullopt;
        return coeff;
    }

    std::size_t rank() const { return rows_.size(); }
    std::size_t cols() const { return cols_; }
    int mod() const { return mod_; }
    const std::vector<Row>& rows() const { return rows_; }

    bool contains_all(const Echelon& other) const {
        for (const auto& r : other.rows_)
            if (!contains(r)) return false;
        return true;
    }

    bool operator==(const Echelon& o) const { return rows_ == o.rows_; }

    /// Every vector in the span, in deterministic order. Guarded by `cap`.
    std::vector<Row> enumerate_span(std::size_t cap = 1u << 20) const {
        std::size_t total = ipow(static_cast<std::size_t>(mod_), static_cast<unsigned>(rows_.size()));
        if (total > cap) throw resource_error("Echelon::enumerate_span: span too large");
        std::vector<Row> out;
        out.reserve(total);
        Row cur(cols_, 0);
        std::vector<int> digits(rows_.size(), 0);
        for (std::size_t k = 0; k < total; ++k) {
            out.push_back(cur);
            for (std::size_t i = 0; i < digits.size(); ++i) {
                add_scaled(cur, rows_[i], 1);
                if (++digits[i] < mod_) break;
                digits[i] = 0;
            }
        }
        return out;
    }

private:
    std::size_t leading(const Row& row) const {
        std::size_t i = 0;
        while (i < cols_ && row[i] == 0) ++i;
        return i;
    }

    void reduce(Row& row) const {
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            int c = row[pivots_[i]];
            if (c != 0) subtract_scaled(row, rows_[i], c);
        }
    }

    void add_scaled(Row& dst, const Row& src, int c) const {
        for (std::size_t j = 0; j < cols_; ++j)
            dst[j] = static_cast<std::uint8_t>((dst[j] + c * src[j]) % mod_);
    }

    void subtract_scaled(Row& dst, const Row& src, int c) const {
        int neg = (mod_ - c % mod_) % mod_;
        add_scaled(dst, src, neg);
    }

    int mod_;
    std::size_t cols_;
    std::vector<Row> rows_;     // reduced echelon rows, pivots ascending
    std::vector<std::size_t> pivots_;
};

/// Basis of the intersection of two row spans (Zassenhaus on [v|v], [w|0]).
inline std::vector<Row> span_intersection(const Echelon& a, const Echelon& b) {
    const std::size_t n = a.cols();
    const int m = a.mod();
    // plain (non-reduced) elimination on doubled rows
    std::vector<Row> work;
    for (const auto& v : a.rows()) {
        Row r(2 * n, 0);
        std::copy(v.begin(), v.end(), r.begin());
        std::copy(v.begin(), v.end(), r.begin() + static_cast<std::ptrdiff_t>(n));
        work.push_back(std::move(r));
    }
    for (const auto& w : b.rows()) {
        Row r(2 * n, 0);
        std::copy(w.begin(), w.end(), r.begin());
        work.push_back(std::move(r));
    }
    std::vector<Row> basis;
    std::vector<std::size_t> pivots;
    std::vector<Row> inter;
    for (auto row : work) {
        for (std::size_t i = 0; i < basis.size(); ++i) {
            int c = row[pivots[i]];
            if (c != 0) {
                int neg = (m - c % m) % m;
                for (std::size_t j = 0; j < 2 * n; ++j)
                    row[j] = static_cast<std::uint8_t>((row[j] + neg * basis[i][j]) % m);
            }
        }
        std::size_t lead = 0;
        while (lead < 2 * n && row[lead] == 0) ++lead;
        if (lead == 2 * n) continue;
        if (lead >= n) {
            inter.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(n), row.end());
            continue;
        }
        int inv = inv_mod(row[lead], m);
        for (auto& v : row) v = static_cast<std::uint8_t>(v * inv % m);
        pivots.push_back(lead);
        basis.push_back(std::move(row));
    }
    return inter;
}

}  // namespace cloneforge::detail
