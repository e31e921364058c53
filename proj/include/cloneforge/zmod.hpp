#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cloneforge/common.hpp"
#include "cloneforge/linalg.hpp"

namespace cloneforge {

/// Vector of residues modulo a fixed positive integer.
struct ModVec {
    int modulus = 0;
    std::vector<std::uint8_t> entries;

    static ModVec make(int modulus, std::vector<int> raw) {
        if (modulus <= 0) throw std::invalid_argument("ModVec: modulus must be positive");
        ModVec v;
        v.modulus = modulus;
        v.entries.reserve(raw.size());
        for (int x : raw) {
            int r = x % modulus;
            if (r < 0) r += modulus;
            v.entries.push_back(static_cast<std::uint8_t>(r));
        }
        return v;
    }

    std::size_t size() const { return entries.size(); }

    /// Scalar product with another vector over the same modulus.
    int dot(const std::vector<std::uint8_t>& other) const {
        if (other.size() != entries.size())
            throw std::invalid_argument("ModVec::dot: length mismatch");
        int acc = 0;
        for (std::size_t i = 0; i < entries.size(); ++i)
            acc = (acc + entries[i] * other[i]) % modulus;
        return acc;
    }

    bool operator==(const ModVec&) const = default;
};

/// Row-major matrix of residues modulo a fixed positive integer.
struct ModMatrix {
    int modulus = 0;
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> entries;

    static ModMatrix make(int modulus, int rows, int cols, std::vector<int> raw) {
        if (modulus <= 0 || rows <= 0 || cols <= 0)
            throw std::invalid_argument("ModMatrix: dimensions and modulus must be positive");
        if (raw.size() != static_cast<std::size_t>(rows) * cols)
            throw std::invalid_argument("ModMatrix: entry count mismatch");
        ModMatrix m;
        m.modulus = modulus;
        m.rows = rows;
        m.cols = cols;
        m.entries.reserve(raw.size());
        for (int x : raw) {
            int r = x % modulus;
            if (r < 0) r += modulus;
            m.entries.push_back(static_cast<std::uint8_t>(r));
        }
        return m;
    }

    int at(int r, int c) const { return entries[static_cast<std::size_t>(r) * cols + c]; }

    /// Matrix-vector product A*x over Z_modulus.
    std::vector<std::uint8_t> apply(const std::vector<std::uint8_t>& x) const {
        if (x.size() != static_cast<std::size_t>(cols))
            throw std::invalid_argument("ModMatrix::apply: length mismatch");
        std::vector<std::uint8_t> out(static_cast<std::size_t>(rows), 0);
        for (int r = 0; r < rows; ++r) {
            int acc = 0;
            for (int c = 0; c < cols; ++c) acc += at(r, c) * x[static_cast<std::size_t>(c)];
            out[static_cast<std::size_t>(r)] = static_cast<std::uint8_t>(acc % modulus);
        }
        return out;
    }

    bool operator==(const ModMatrix&) const = default;
};

/// Univariate polynomial over Z_p, coefficients low-degree first, no
/// trailing zeros.
struct PolyZp {
    int p = 0;
    std::vector<std::uint8_t> coeffs;

    static PolyZp make(int p, std::vector<int> raw) {
        if (!detail::is_prime(p)) throw std::invalid_argument("PolyZp: modulus must be prime");
        PolyZp f;
        f.p = p;
        f.coeffs.reserve(raw.size());
        for (int x : raw) {
            int r = x % p;
            if (r < 0) r += p;
            f.coeffs.push_back(static_cast<std::uint8_t>(r));
        }
        f.trim();
        return f;
    }

    void trim() {
        while (!coeffs.empty() && coeffs.back() == 0) coeffs.pop_back();
    }

    bool is_zero() const { return coeffs.empty(); }
    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    bool is_monic() const { return !coeffs.empty() && coeffs.back() == 1; }

    int eval(int x) const {
        int acc = 0;
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = (acc * x + coeffs[i]) % p;
        return acc;
    }

    friend PolyZp operator*(const PolyZp& a, const PolyZp& b) {
        if (a.is_zero() || b.is_zero()) return PolyZp{a.p, {}};
        PolyZp out;
        out.p = a.p;
        out.coeffs.assign(a.coeffs.size() + b.coeffs.size() - 1, 0);
        for (std::size_t i = 0; i < a.coeffs.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs.size(); ++j)
                out.coeffs[i + j] =
                    static_cast<std::uint8_t>((out.coeffs[i + j] + a.coeffs[i] * b.coeffs[j]) % a.p);
        return out;
    }

    /// Division with remainder by a monic divisor.
    std::pair<PolyZp, PolyZp> divmod(const PolyZp& d) const {
        if (d.is_zero() || !d.is_monic())
            throw std::invalid_argument("PolyZp::divmod: divisor must be monic and nonzero");
        PolyZp rem = *this;
        PolyZp quot{p, {}};
        if (degree() >= d.degree())
            quot.coeffs.assign(static_cast<std::size_t>(degree() - d.degree() + 1), 0);
        while (!rem.is_zero() && rem.degree() >= d.degree()) {
            int shift = rem.degree() - d.degree();
            int c = rem.coeffs.back();
            quot.coeffs[static_cast<std::size_t>(shift)] = static_cast<std::uint8_t>(c);
            for (int i = 0; i <= d.degree(); ++i) {
                std::size_t k = static_cast<std::size_t>(shift + i);
                int v = (rem.coeffs[k] - c * d.coeffs[static_cast<std::size_t>(i)]) % p;
                if (v < 0) v += p;
                rem.coeffs[k] = static_cast<std::uint8_t>(v);
            }
            rem.trim();
        }
        quot.trim();
        return {quot, rem};
    }

    bool divides_exactly(const PolyZp& divisor) const { return divmod(divisor).second.is_zero(); }

    /// Canonical comparison: degree first, then coefficient vector.
    friend bool operator<(const PolyZp& a, const PolyZp& b) {
        if (a.degree() != b.degree()) return a.degree() < b.degree();
        return a.coeffs < b.coeffs;
    }

    bool operator==(const PolyZp&) const = default;
};

/// x^e - 1 over Z_p.
inline PolyZp power_minus_one(int p, int e) {
    std::vector<int> c(static_cast<std::size_t>(e) + 1, 0);
    c[0] = p - 1;
    c[static_cast<std::size_t>(e)] = 1;
    return PolyZp::make(p, std::move(c));
}

struct Factorization {
    std::vector<std::pair<PolyZp, int>> factors;  // (monic irreducible, multiplicity)

    long long product_of(int bump) const {
        long long acc = 1;
        for (const auto& [f, k] : factors) acc *= (k + bump);
        return acc;
    }
};

namespace detail {

/// All monic polynomials of the given degree over Z_p, in canonical order.
inline std::vector<PolyZp> monic_of_degree(int p, int deg) {
    std::vector<PolyZp> out;
    std::size_t count = ipow(static_cast<std::size_t>(p), static_cast<unsigned>(deg));
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<int> c(static_cast<std::size_t>(deg) + 1, 0);
        std::size_t t = k;
        for (int i = 0; i < deg; ++i) {
            c[static_cast<std::size_t>(i)] = static_cast<int>(t % p);
            t /= p;
        }
        c[static_cast<std::size_t>(deg)] = 1;
        out.push_back(PolyZp::make(p, std::move(c)));
    }
    return out;
}

inline bool is_irreducible(const PolyZp& f) {
    for (int d = 1; 2 * d <= f.degree(); ++d)
        for (const auto& g : monic_of_degree(f.p, d))
            if (f.divides_exactly(g)) return false;
    return true;
}

}  // namespace detail

/// Factor a monic polynomial over Z_p into monic irreducibles with
/// multiplicities, by exhaustive trial division over ascending degrees.
/// Output is sorted by (degree, coefficients).
inline Factorization factor_over_zp(const PolyZp& f) {
    if (f.is_zero() || !f.is_monic())
        throw std::invalid_argument("factor_over_zp: input must be monic and nonzero");
    if (f.degree() < 1 || f.degree() > 64)
        throw std::invalid_argument("factor_over_zp: degree out of range [1, 64]");
    Factorization result;
    PolyZp rest = f;
    for (int d = 1; d <= rest.degree();) {
        bool found = false;
        for (const auto& g : detail::monic_of_degree(f.p, d)) {
            if (rest.divides_exactly(g)) {
                int mult = 0;
                while (rest.divides_exactly(g)) {
                    rest = rest.divmod(g).first;
                    ++mult;
                }
                result.factors.emplace_back(g, mult);
                found = true;
                break;  // degrees ascend, so g is irreducible; restart at same d
            }
        }
        if (!found) ++d;
    }
    std::sort(result.factors.begin(), result.factors.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    // The product must reconstruct the input exactly.
    PolyZp check = PolyZp::make(f.p, {1});
    for (const auto& [g, k] : result.factors)
        for (int i = 0; i < k; ++i) check = check * g;
    if (!(check == f)) throw consistency_error("factor_over_zp: factor product mismatch");
    return result;
}

/// Quantitative summary for a prime pair: clonoid lattice sizes from the
/// factorization formulas, clone-count bounds, the diamond-preserving count,
/// and the pi1-case bound. Two closed-form envelopes for the upper bound
/// circulate with different exponents (p*q+p+q and 2*p*q+p+q); both are
/// reported together with whether each actually dominates the product bound.
struct BoundsReport {
    PrimePair pp;
    Factorization gp_factors;  // x^(q-1) - 1 over Z_p
    Factorization gq_factors;  // x^(p-1) - 1 over Z_q
    long long clonoids_pq = 0;
    long long clonoids_qp = 0;
    long long clone_lower = 0;
    long long clone_upper = 0;
    int envelope_exponent_a = 0;  // p*q + p + q
    int envelope_exponent_b = 0;  // 2*p*q + p + q
    bool envelope_a_consistent = false;
    bool envelope_b_consistent = false;
    long long diamond_count = 0;
    long long pi1_upper = 0;
};

inline BoundsReport count_report(const PrimePair& pp) {
    BoundsReport r;
    r.pp = pp;
    r.gp_factors = factor_over_zp(power_minus_one(pp.p, pp.q - 1));
    r.gq_factors = factor_over_zp(power_minus_one(pp.q, pp.p - 1));
    long long prod_k = r.gp_factors.product_of(1);
    long long prod_d = r.gq_factors.product_of(1);
    r.clonoids_pq = 2 * prod_k;
    r.clonoids_qp = 2 * prod_d;
    r.clone_lower = 2 * (prod_k + prod_d) - 1;
    long long upper = 1;
    for (int i = 0; i < pp.p + pp.q + 2; ++i) upper *= 2;
    for (int i = 0; i < pp.p + 1; ++i) upper *= prod_k;
    for (int i = 0; i < pp.q + 1; ++i) upper *= prod_d;
    r.clone_upper = upper;
    r.envelope_exponent_a = pp.p * pp.q + pp.p + pp.q;
    r.envelope_exponent_b = 2 * pp.p * pp.q + pp.p + pp.q;
    auto fits_below = [&](int exponent) {
        // clone_upper <= 2^exponent, exact via bit length
        int bits = 0;
        unsigned long long v = static_cast<unsigned long long>(r.clone_upper);
        while (v > 1) {
            v >>= 1;
            ++bits;
        }
        // bits = floor(log2(clone_upper))
        if (bits < exponent) return true;
        if (bits > exponent) return false;
        // equal bit position: consistent iff clone_upper is exactly 2^exponent
        return (static_cast<unsigned long long>(r.clone_upper) &
                (static_cast<unsigned long long>(r.clone_upper) - 1)) == 0;
    };
    r.envelope_a_consistent = fits_below(r.envelope_exponent_a);
    r.envelope_b_consistent = fits_below(r.envelope_exponent_b);
    int np = detail::divisor_count(pp.p - 1);
    int nq = detail::divisor_count(pp.q - 1);
    r.diamond_count = static_cast<long long>(nq + 3) * (np + 3);
    r.pi1_upper = static_cast<long long>(np + 3) * (2 * prod_d) * (2 * prod_d);
    return r;
}

}  // namespace cloneforge
