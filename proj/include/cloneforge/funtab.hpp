#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "cloneforge/common.hpp"
#include "cloneforge/linalg.hpp"
#include "cloneforge/zmod.hpp"

namespace cloneforge {

/// Function table Z_src^arity -> Z_dst, indexed in mixed radix base `src`
/// with the first argument least significant.
struct CoeffFun {
    int src = 0;
    int dst = 0;
    int arity = 0;
    std::vector<std::uint8_t> table;

    static CoeffFun make(int src, int dst, int arity, std::vector<int> raw) {
        CoeffFun f;
        f.src = src;
        f.dst = dst;
        f.arity = arity;
        std::size_t len = detail::ipow(static_cast<std::size_t>(src), static_cast<unsigned>(arity));
        if (raw.size() != len) throw std::invalid_argument("CoeffFun: table length mismatch");
        f.table.reserve(len);
        for (int v : raw) {
            int r = v % dst;
            if (r < 0) r += dst;
            f.table.push_back(static_cast<std::uint8_t>(r));
        }
        return f;
    }

    static CoeffFun zero(int src, int dst, int arity) {
        CoeffFun f;
        f.src = src;
        f.dst = dst;
        f.arity = arity;
        f.table.assign(detail::ipow(static_cast<std::size_t>(src), static_cast<unsigned>(arity)), 0);
        return f;
    }

    static CoeffFun constant(int src, int dst, int arity, int value) {
        CoeffFun f = zero(src, dst, arity);
        int r = value % dst;
        if (r < 0) r += dst;
        for (auto& v : f.table) v = static_cast<std::uint8_t>(r);
        return f;
    }

    bool is_zero() const {
        for (auto v : table)
            if (v != 0) return false;
        return true;
    }

    bool is_constant() const {
        for (auto v : table)
            if (v != table[0]) return false;
        return true;
    }

    /// Little-endian base-`dst` encoding of the table; also the enumeration
    /// order used when searching for canonical unary generators.
    std::size_t encode() const {
        std::size_t acc = 0;
        for (std::size_t i = table.size(); i-- > 0;) acc = acc * dst + table[i];
        return acc;
    }

    static CoeffFun decode(int src, int dst, int arity, std::size_t code) {
        CoeffFun f = zero(src, dst, arity);
        for (auto& v : f.table) {
            v = static_cast<std::uint8_t>(code % dst);
            code /= dst;
        }
        return f;
    }

    auto operator<=>(const CoeffFun&) const = default;
};

/// Finitary function Z_p^n x Z_q^n -> Z_p x Z_q as an explicit table.
/// Index layout: idx = sum x_i p^i + p^n * sum y_i q^i with the first
/// variable of each block least significant. Serialized tables depend on
/// this encoding, so it is fixed.
struct MixedFun {
    PrimePair pp;
    int arity = 0;
    std::vector<std::array<std::uint8_t, 2>> table;

    static std::size_t table_size(const PrimePair& pp, int arity) {
        std::size_t len = detail::ipow(static_cast<std::size_t>(pp.p) * pp.q,
                                       static_cast<unsigned>(arity));
        if (len > (1u << 24)) throw resource_error("MixedFun: table too large");
        return len;
    }

    std::size_t x_count() const {
        return detail::ipow(static_cast<std::size_t>(pp.p), static_cast<unsigned>(arity));
    }
    std::size_t y_count() const {
        return detail::ipow(static_cast<std::size_t>(pp.q), static_cast<unsigned>(arity));
    }

    std::size_t index(std::size_t xIdx, std::size_t yIdx) const { return xIdx + x_count() * yIdx; }

    const std::array<std::uint8_t, 2>& at(std::size_t xIdx, std::size_t yIdx) const {
        return table[index(xIdx, yIdx)];
    }

    template <class Fn>  // Fn(xDigits, yDigits) -> pair<int,int>
    static MixedFun from_fn(const PrimePair& pp, int arity, Fn&& fn) {
        MixedFun f;
        f.pp = pp;
        f.arity = arity;
        f.table.resize(table_size(pp, arity));
        std::vector<int> xs(static_cast<std::size_t>(arity), 0), ys(static_cast<std::size_t>(arity), 0);
        std::size_t xc = f.x_count(), yc = f.y_count();
        for (std::size_t yIdx = 0; yIdx < yc; ++yIdx) {
            std::size_t t = yIdx;
            for (int i = 0; i < arity; ++i) {
                ys[static_cast<std::size_t>(i)] = static_cast<int>(t % pp.q);
                t /= pp.q;
            }
            for (std::size_t xIdx = 0; xIdx < xc; ++xIdx) {
                std::size_t u = xIdx;
                for (int i = 0; i < arity; ++i) {
                    xs[static_cast<std::size_t>(i)] = static_cast<int>(u % pp.p);
                    u /= pp.p;
                }
                auto [vp, vq] = fn(xs, ys);
                vp %= pp.p;
                if (vp < 0) vp += pp.p;
                vq %= pp.q;
                if (vq < 0) vq += pp.q;
                f.table[f.index(xIdx, yIdx)] = {static_cast<std::uint8_t>(vp),
                                                static_cast<std::uint8_t>(vq)};
            }
        }
        return f;
    }

    static MixedFun constant(const PrimePair& pp, int arity, int vp, int vq) {
        return from_fn(pp, arity, [&](const auto&, const auto&) { return std::pair{vp, vq}; });
    }

    static MixedFun projection(const PrimePair& pp, int arity, int slot) {
        if (slot < 1 || slot > arity) throw std::invalid_argument("projection: slot out of range");
        return from_fn(pp, arity, [&](const auto& xs, const auto& ys) {
            return std::pair{xs[static_cast<std::size_t>(slot - 1)], ys[static_cast<std::size_t>(slot - 1)]};
        });
    }

    /// Swap the two coordinate roles: the result is a function over (q, p)
    /// with f'(y, x) = (f_q(x, y), f_p(x, y)).
    MixedFun flipped() const {
        MixedFun g;
        g.pp = pp.swapped();
        g.arity = arity;
        g.table.resize(table.size());
        std::size_t xc = x_count(), yc = y_count();
        for (std::size_t yIdx = 0; yIdx < yc; ++yIdx)
            for (std::size_t xIdx = 0; xIdx < xc; ++xIdx) {
                auto v = table[index(xIdx, yIdx)];
                g.table[yIdx + yc * xIdx] = {v[1], v[0]};
            }
        return g;
    }

    auto operator<=>(const MixedFun&) const = default;
};

/// h(z) = f(g_1(z), ..., g_n(z)); all g_i share one arity and prime pair.
inline MixedFun compose(const MixedFun& f, const std::vector<MixedFun>& gs) {
    if (static_cast<int>(gs.size()) != f.arity)
        throw std::invalid_argument("compose: argument count must equal arity");
    if (f.arity == 0) return f;
    const int m = gs[0].arity;
    for (const auto& g : gs)
        if (!(g.pp == f.pp) || g.arity != m)
            throw std::invalid_argument("compose: argument arity or modulus mismatch");
    MixedFun h;
    h.pp = f.pp;
    h.arity = m;
    h.table.resize(MixedFun::table_size(f.pp, m));
    std::size_t zc = h.table.size();
    std::vector<std::size_t> fx(static_cast<std::size_t>(f.arity));
    for (std::size_t z = 0; z < zc; ++z) {
        std::size_t xIdx = 0, yIdx = 0, px = 1, py = 1;
        for (int i = 0; i < f.arity; ++i) {
            auto v = gs[static_cast<std::size_t>(i)].table[z];
            xIdx += px * v[0];
            yIdx += py * v[1];
            px *= static_cast<std::size_t>(f.pp.p);
            py *= static_cast<std::size_t>(f.pp.q);
        }
        h.table[z] = f.table[xIdx + f.x_count() * yIdx];
    }
    return h;
}

/// (x, y) -> (<a, x>, <b, y>).
inline MixedFun linear_map(const PrimePair& pp, const ModVec& a, const ModVec& b) {
    if (a.size() != b.size() || a.size() == 0)
        throw std::invalid_argument("linear_map: vectors must share a positive length");
    if (a.modulus != pp.p || b.modulus != pp.q)
        throw std::invalid_argument("linear_map: vector moduli must match the prime pair");
    int n = static_cast<int>(a.size());
    return MixedFun::from_fn(pp, n, [&](const auto& xs, const auto& ys) {
        int sp = 0, sq = 0;
        for (int i = 0; i < n; ++i) {
            sp += a.entries[static_cast<std::size_t>(i)] * xs[static_cast<std::size_t>(i)];
            sq += b.entries[static_cast<std::size_t>(i)] * ys[static_cast<std::size_t>(i)];
        }
        return std::pair{sp % pp.p, sq % pp.q};
    });
}

namespace detail {
inline int powmod(int base, int exp, int mod) {
    int acc = 1 % mod;
    base %= mod;
    if (base < 0) base += mod;
    while (exp-- > 0) acc = acc * base % mod;
    return acc;
}
}  // namespace detail

/// Split f into its two one-sided parts: q^(p-1) * f has zero Z_q output and
/// p^(q-1) * f has zero Z_p output; they sum back to f pointwise.
inline std::pair<MixedFun, MixedFun> crt_split(const MixedFun& f) {
    int s1p = detail::powmod(f.pp.q, f.pp.p - 1, f.pp.p);  // = 1 by Fermat
    int s2q = detail::powmod(f.pp.p, f.pp.q - 1, f.pp.q);  // = 1 by Fermat
    MixedFun a = f, b = f;
    for (std::size_t i = 0; i < f.table.size(); ++i) {
        a.table[i] = {static_cast<std::uint8_t>(s1p * f.table[i][0] % f.pp.p), 0};
        b.table[i] = {0, static_cast<std::uint8_t>(s2q * f.table[i][1] % f.pp.q)};
    }
    return {a, b};
}

namespace detail {

/// Inverse of the monomial evaluation matrix M[x][m] = x^m over Z_mod for
/// `arity` variables; cached per (mod, arity).
inline const std::vector<Row>& interpolation_matrix(int mod, int arity) {
    thread_local std::map<std::pair<int, int>, std::vector<Row>> cache;
    auto key = std::make_pair(mod, arity);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::size_t dim = ipow(static_cast<std::size_t>(mod), static_cast<unsigned>(arity));
    std::vector<Row> m(dim, Row(2 * dim, 0));
    for (std::size_t x = 0; x < dim; ++x) {
        for (std::size_t e = 0; e < dim; ++e) {
            std::size_t xv = x, ev = e;
            int prod = 1;
            for (int i = 0; i < arity; ++i) {
                int xd = static_cast<int>(xv % mod), ed = static_cast<int>(ev % mod);
                xv /= static_cast<std::size_t>(mod);
                ev /= static_cast<std::size_t>(mod);
                int f = 1;
                for (int k = 0; k < ed; ++k) f = f * xd % mod;
                prod = prod * f % mod;
            }
            m[x][e] = static_cast<std::uint8_t>(prod);
        }
        m[x][dim + x] = 1;
    }
    // Gauss-Jordan; the evaluation matrix over a finite field is invertible.
    for (std::size_t col = 0; col < dim; ++col) {
        std::size_t piv = col;
        while (piv < dim && m[piv][col] == 0) ++piv;
        if (piv == dim) throw consistency_error("interpolation_matrix: singular");
        std::swap(m[piv], m[col]);
        int inv = inv_mod(m[col][col], mod);
        for (auto& v : m[col]) v = static_cast<std::uint8_t>(v * inv % mod);
        for (std::size_t r = 0; r < dim; ++r) {
            if (r == col || m[r][col] == 0) continue;
            int c = m[r][col];
            for (std::size_t j = 0; j < 2 * dim; ++j)
                m[r][j] = static_cast<std::uint8_t>((m[r][j] + (mod - c) * m[col][j]) % mod);
        }
    }
    std::vector<Row> inv(dim, Row(dim, 0));
    for (std::size_t r = 0; r < dim; ++r)
        std::copy(m[r].begin() + static_cast<std::ptrdiff_t>(dim), m[r].end(), inv[r].begin());
    return cache.emplace(key, std::move(inv)).first->second;
}

}  // namespace detail

/// Polynomial normal form of both components:
///   f(x, y) = ( sum_m pSide[m](y) x^m , sum_h qSide[h](x) y^h )
/// with exponents below the respective modulus. Coefficient functions are
/// indexed by the mixed-radix encoding of their exponent vector.
struct SplitNormalForm {
    PrimePair pp;
    int arity = 0;
    std::vector<CoeffFun> pSide;  // length p^arity, exponent index base p
    std::vector<CoeffFun> qSide;  // length q^arity, exponent index base q

    static std::vector<std::uint8_t> exponent_of(std::size_t idx, int base, int arity) {
        std::vector<std::uint8_t> e(static_cast<std::size_t>(arity));
        for (int i = 0; i < arity; ++i) {
            e[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(idx % static_cast<std::size_t>(base));
            idx /= static_cast<std::size_t>(base);
        }
        return e;
    }
};

inline SplitNormalForm normal_form(const MixedFun& f) {
    SplitNormalForm nf;
    nf.pp = f.pp;
    nf.arity = f.arity;
    const std::size_t xc = f.x_count(), yc = f.y_count();
    const auto& minvP = detail::interpolation_matrix(f.pp.p, f.arity);
    const auto& minvQ = detail::interpolation_matrix(f.pp.q, f.arity);
    nf.pSide.assign(xc, CoeffFun::zero(f.pp.q, f.pp.p, f.arity));
    nf.qSide.assign(yc, CoeffFun::zero(f.pp.p, f.pp.q, f.arity));
    for (std::size_t y = 0; y < yc; ++y)
        for (std::size_t e = 0; e < xc; ++e) {
            int acc = 0;
            for (std::size_t x = 0; x < xc; ++x) acc += minvP[e][x] * f.at(x, y)[0];
            nf.pSide[e].table[y] = static_cast<std::uint8_t>(acc % f.pp.p);
        }
    for (std::size_t x = 0; x < xc; ++x)
        for (std::size_t e = 0; e < yc; ++e) {
            int acc = 0;
            for (std::size_t y = 0; y < yc; ++y) acc += minvQ[e][y] * f.at(x, y)[1];
            nf.qSide[e].table[x] = static_cast<std::uint8_t>(acc % f.pp.q);
        }
    return nf;
}

/// Rebuild the table from a normal form; inverse of normal_form.
inline MixedFun reconstruct(const SplitNormalForm& nf) {
    const int p = nf.pp.p, q = nf.pp.q;
    return MixedFun::from_fn(nf.pp, nf.arity, [&](const auto& xs, const auto& ys) {
        std::size_t yIdx = 0, xIdx = 0;
        for (int i = nf.arity; i-- > 0;) {
            yIdx = yIdx * static_cast<std::size_t>(q) + static_cast<std::size_t>(ys[static_cast<std::size_t>(i)]);
            xIdx = xIdx * static_cast<std::size_t>(p) + static_cast<std::size_t>(xs[static_cast<std::size_t>(i)]);
        }
        int vp = 0;
        for (std::size_t e = 0; e < nf.pSide.size(); ++e) {
            std::size_t ev = e;
            int mono = 1;
            for (int i = 0; i < nf.arity; ++i) {
                int ed = static_cast<int>(ev % static_cast<std::size_t>(p));
                ev /= static_cast<std::size_t>(p);
                for (int k = 0; k < ed; ++k) mono = mono * xs[static_cast<std::size_t>(i)] % p;
            }
            vp += nf.pSide[e].table[yIdx] * mono;
        }
        int vq = 0;
        for (std::size_t e = 0; e < nf.qSide.size(); ++e) {
            std::size_t ev = e;
            int mono = 1;
            for (int i = 0; i < nf.arity; ++i) {
                int ed = static_cast<int>(ev % static_cast<std::size_t>(q));
                ev /= static_cast<std::size_t>(q);
                for (int k = 0; k < ed; ++k) mono = mono * ys[static_cast<std::size_t>(i)] % q;
            }
            vq += nf.qSide[e].table[xIdx] * mono;
        }
        return std::pair{vp, vq};
    });
}

/// Exponent vector for variables x_1, x_2, ...: entry i is the exponent of
/// x_{i+1}.
using Exponent = std::vector<std::uint8_t>;

/// The s-ary induced function of a single coefficient monomial:
///   (x, y) -> ( r(y_1..y_n) * x^m , 0 ).
inline MixedFun induced_monomial(const PrimePair& pp, const CoeffFun& r,
                                 const Exponent& m, int s) {
    if (r.src != pp.q || r.dst != pp.p)
        throw std::invalid_argument("induced_monomial: coefficient orientation mismatch");
    if (s < static_cast<int>(m.size()) || s < r.arity)
        throw std::invalid_argument("induced_monomial: arity too small for monomial or coefficient");
    for (auto e : m)
        if (e > pp.p - 1) throw std::invalid_argument("induced_monomial: exponent above p-1");
    return MixedFun::from_fn(pp, s, [&](const auto& xs, const auto& ys) {
        std::size_t rIdx = 0;
        for (int i = r.arity; i-- > 0;)
            rIdx = rIdx * static_cast<std::size_t>(pp.q) + static_cast<std::size_t>(ys[static_cast<std::size_t>(i)]);
        int v = r.table[rIdx];
        for (std::size_t i = 0; i < m.size(); ++i)
            for (int k = 0; k < m[i]; ++k) v = v * xs[i] % pp.p;
        return std::pair{v, 0};
    });
}

// ---------------------------------------------------------------------------
// Congruences and commutator relations
// ---------------------------------------------------------------------------

/// The four congruences of Z_p x Z_q. Pi1 relates pairs with equal Z_p
/// coordinate (kernel of the projection onto Z_p); Pi2 symmetrically.
enum class CongruenceLabel : std::uint8_t { Zero, Pi1, Pi2, One };

/// Restriction of a congruence to the two coordinates: equality or full.
struct CongruenceParts {
    bool eq_p = false;
    bool eq_q = false;
};

inline CongruenceParts congruence_parts(CongruenceLabel c) {
    switch (c) {
        case CongruenceLabel::Zero: return {true, true};
        case CongruenceLabel::Pi1: return {true, false};
        case CongruenceLabel::Pi2: return {false, true};
        case CongruenceLabel::One: return {false, false};
    }
    throw std::invalid_argument("congruence_parts: bad label");
}

/// The congruence playing the same role after the two coordinates swap.
inline CongruenceLabel swapped_label(CongruenceLabel c) {
    switch (c) {
        case CongruenceLabel::Pi1: return CongruenceLabel::Pi2;
        case CongruenceLabel::Pi2: return CongruenceLabel::Pi1;
        default: return c;
    }
}

/// The 4-ary relation rho(alpha, beta, gamma) with the fixed Mal'cev term
/// m(a, b, c) = a - b + c:
///   { (a,b,c,d) : a alpha b, b beta c, m(a,b,c) gamma d }.
struct CommutatorRelation {
    CongruenceLabel alpha, beta, gamma;
};

/// Definitional membership of one quadruple of elements (given as
/// (zp, zq) pairs); used by tests as the ground truth for the fast checker.
inline bool rho_contains(const PrimePair& pp, const CommutatorRelation& rel,
                         const std::array<std::array<int, 2>, 4>& t) {
    auto related = [&](CongruenceLabel c, const std::array<int, 2>& u, const std::array<int, 2>& v) {
        auto parts = congruence_parts(c);
        if (parts.eq_p && u[0] != v[0]) return false;
        if (parts.eq_q && u[1] != v[1]) return false;
        return true;
    };
    std::array<int, 2> m = {((t[0][0] - t[1][0] + t[2][0]) % pp.p + pp.p) % pp.p,
                            ((t[0][1] - t[1][1] + t[2][1]) % pp.q + pp.q) % pp.q};
    return related(rel.alpha, t[0], t[1]) && related(rel.beta, t[1], t[2]) &&
           related(rel.gamma, m, t[3]);
}

namespace detail {

/// Digitwise add/sub tables for vectors packed as mixed-radix indices.
struct RadixOps {
    int mod = 0;
    std::size_t size = 0;
    std::vector<std::uint32_t> add, sub;

    RadixOps(int mod_, int arity) : mod(mod_) {
        size = ipow(static_cast<std::size_t>(mod), static_cast<unsigned>(arity));
        add.resize(size * size);
        sub.resize(size * size);
        for (std::size_t a = 0; a < size; ++a)
            for (std::size_t b = 0; b < size; ++b) {
                std::size_t s = 0, d = 0, weight = 1, av = a, bv = b;
                for (int i = 0; i < arity; ++i) {
                    int ad = static_cast<int>(av % static_cast<std::size_t>(mod));
                    int bd = static_cast<int>(bv % static_cast<std::size_t>(mod));
                    av /= static_cast<std::size_t>(mod);
                    bv /= static_cast<std::size_t>(mod);
                    s += weight * (static_cast<std::size_t>(ad + bd) % static_cast<std::size_t>(mod));
                    d += weight * (static_cast<std::size_t>(ad - bd + mod) % static_cast<std::size_t>(mod));
                    weight *= static_cast<std::size_t>(mod);
                }
                add[a * size + b] = static_cast<std::uint32_t>(s);
                sub[a * size + b] = static_cast<std::uint32_t>(d);
            }
    }

    std::size_t malcev(std::size_t a, std::size_t b, std::size_t c) const {
        return add[sub[a * size + b] * size + c];
    }
};

struct SidePattern {
    bool eqAB = false, eqBC = false, eqMD = false;
    bool any() const { return eqAB || eqBC || eqMD; }
};

}  // namespace detail

/// True iff f preserves rho(alpha, beta, gamma). Implemented by exhausting
/// the relation's input space, parameterized by the free input vectors the
/// congruence pattern leaves. When one coordinate side carries no output
/// condition its inputs are unconstrained and independent, so the check
/// collapses to combinations over per-point value sets on the other side.
inline bool preserves_relation(const MixedFun& f, const CommutatorRelation& rel) {
    auto pa = congruence_parts(rel.alpha);
    auto pb = congruence_parts(rel.beta);
    auto pg = congruence_parts(rel.gamma);
    detail::SidePattern sp{pa.eq_p, pb.eq_p, pg.eq_p};
    detail::SidePattern sq{pa.eq_q, pb.eq_q, pg.eq_q};
    if (!sp.any() && !sq.any()) return true;

    if (!sp.any())
        return preserves_relation(
            f.flipped(),
            {swapped_label(rel.alpha), swapped_label(rel.beta), swapped_label(rel.gamma)});

    const std::size_t xc = f.x_count(), yc = f.y_count();
    detail::RadixOps xops(f.pp.p, f.arity);
    const bool d_used = sp.eqMD || sq.eqMD;

    // One-sided shortcut: q side fully unconstrained, conditions only on p.
    if (!sq.any()) {
        std::vector<std::vector<std::uint8_t>> vals(xc);
        for (std::size_t x = 0; x < xc; ++x) {
            std::vector<bool> seen(static_cast<std::size_t>(f.pp.p), false);
            for (std::size_t y = 0; y < yc; ++y) seen[f.at(x, y)[0]] = true;
            for (int v = 0; v < f.pp.p; ++v)
                if (seen[static_cast<std::size_t>(v)]) vals[x].push_back(static_cast<std::uint8_t>(v));
        }
        for (std::size_t a = 0; a < xc; ++a)
            for (std::size_t b = sp.eqAB ? a : 0; b < (sp.eqAB ? a + 1 : xc); ++b)
                for (std::size_t c = sp.eqBC ? b : 0; c < (sp.eqBC ? b + 1 : xc); ++c) {
                    std::size_t d = d_used ? xops.malcev(a, b, c) : 0;
                    for (int va : vals[a])
                        for (int vb : vals[b]) {
                            if (sp.eqAB && va != vb) return false;
                            for (int vc : vals[c]) {
                                if (sp.eqBC && vb != vc) return false;
                                if (!sp.eqMD) continue;
                                int vm = ((va - vb + vc) % f.pp.p + f.pp.p) % f.pp.p;
                                for (int vd : vals[d])
                                    if (vm != vd) return false;
                            }
                        }
                }
        return true;
    }

    // General case: nested enumeration of the free vectors with early exit.
    detail::RadixOps yops(f.pp.q, f.arity);
    auto out = [&](std::size_t x, std::size_t y) { return f.at(x, y); };
    for (std::size_t xa = 0; xa < xc; ++xa)
        for (std::size_t xb = sp.eqAB ? xa : 0; xb < (sp.eqAB ? xa + 1 : xc); ++xb)
            for (std::size_t xi = sp.eqBC ? xb : 0; xi < (sp.eqBC ? xb + 1 : xc); ++xi) {
                std::size_t xm = xops.malcev(xa, xb, xi);
                std::size_t xd_lo = sp.eqMD ? xm : 0;
                std::size_t xd_hi = sp.eqMD ? xm + 1 : (d_used ? xc : 1);
                for (std::size_t xd = xd_lo; xd < xd_hi; ++xd)
                    for (std::size_t ya = 0; ya < yc; ++ya)
                        for (std::size_t yb = sq.eqAB ? ya : 0; yb < (sq.eqAB ? ya + 1 : yc); ++yb)
                            for (std::size_t yi = sq.eqBC ? yb : 0; yi < (sq.eqBC ? yb + 1 : yc); ++yi) {
                                std::size_t ym = yops.malcev(ya, yb, yi);
                                std::size_t yd_lo = sq.eqMD ? ym : 0;
                                std::size_t yd_hi = sq.eqMD ? ym + 1 : (d_used ? yc : 1);
                                for (std::size_t yd = yd_lo; yd < yd_hi; ++yd) {
                                    auto oa = out(xa, ya), ob = out(xb, yb), oc = out(xi, yi);
                                    if (sp.eqAB && oa[0] != ob[0]) return false;
                                    if (sq.eqAB && oa[1] != ob[1]) return false;
                                    if (sp.eqBC && ob[0] != oc[0]) return false;
                                    if (sq.eqBC && ob[1] != oc[1]) return false;
                                    if (d_used) {
                                        auto od = out(xd, yd);
                                        if (sp.eqMD &&
                                            ((oa[0] - ob[0] + oc[0]) % f.pp.p + f.pp.p) % f.pp.p != od[0])
                                            return false;
                                        if (sq.eqMD &&
                                            ((oa[1] - ob[1] + oc[1]) % f.pp.q + f.pp.q) % f.pp.q != od[1])
                                            return false;
                                    }
                                }
                            }
            }
    return true;
}

/// True iff f preserves the binary congruence relation.
inline bool preserves_congruence(const MixedFun& f, CongruenceLabel c) {
    auto parts = congruence_parts(c);
    if (!parts.eq_p && !parts.eq_q) return true;
    const std::size_t xc = f.x_count(), yc = f.y_count();
    for (std::size_t xa = 0; xa < xc; ++xa)
        for (std::size_t xb = parts.eq_p ? xa : 0; xb < (parts.eq_p ? xa + 1 : xc); ++xb)
            for (std::size_t ya = 0; ya < yc; ++ya)
                for (std::size_t yb = parts.eq_q ? ya : 0; yb < (parts.eq_q ? ya + 1 : yc); ++yb) {
                    auto u = f.at(xa, ya), v = f.at(xb, yb);
                    if (parts.eq_p && u[0] != v[0]) return false;
                    if (parts.eq_q && u[1] != v[1]) return false;
                }
    return true;
}

/// Structural booleans for one function, each with two independent routes:
/// the syntactic characterization and the relation-preservation test. The
/// two routes must agree; classify() cross-checks them and throws
/// consistency_error on any mismatch.
struct StructureReport {
    bool preserves_pi1 = false;          // f_p depends only on x
    bool preserves_pi2 = false;          // f_q depends only on y
    bool affine_first = false;           // compatible with x-y+z in the Z_p block
    bool affine_second = false;          // compatible with x-y+z in the Z_q block
    bool restriction_p_affine = false;   // x -> f_p(x, 0) affine
    bool restriction_q_affine = false;   // y -> f_q(0, y) affine
    bool rho_pi1_pi1_zero = false;
    bool rho_pi2_pi2_zero = false;
    bool rho_one_one_pi1 = false;
    bool rho_one_one_pi2 = false;
};

namespace detail {

inline bool fp_independent_of_y(const MixedFun& f) {
    for (std::size_t x = 0; x < f.x_count(); ++x)
        for (std::size_t y = 1; y < f.y_count(); ++y)
            if (f.at(x, y)[0] != f.at(x, 0)[0]) return false;
    return true;
}

inline bool fq_independent_of_x(const MixedFun& f) {
    for (std::size_t y = 0; y < f.y_count(); ++y)
        for (std::size_t x = 1; x < f.x_count(); ++x)
            if (f.at(x, y)[1] != f.at(0, y)[1]) return false;
    return true;
}

/// f(x, y1 - y2 + y3) == f(x, y1) - f(x, y2) + f(x, y3), both components.
inline bool affine_in_second(const MixedFun& f) {
    RadixOps yops(f.pp.q, f.arity);
    for (std::size_t x = 0; x < f.x_count(); ++x)
        for (std::size_t y1 = 0; y1 < f.y_count(); ++y1)
            for (std::size_t y2 = 0; y2 < f.y_count(); ++y2)
                for (std::size_t y3 = 0; y3 < f.y_count(); ++y3) {
                    std::size_t ym = yops.malcev(y1, y2, y3);
                    auto l = f.at(x, ym);
                    auto a = f.at(x, y1), b = f.at(x, y2), c = f.at(x, y3);
                    if (l[0] != ((a[0] - b[0] + c[0]) % f.pp.p + f.pp.p) % f.pp.p) return false;
                    if (l[1] != ((a[1] - b[1] + c[1]) % f.pp.q + f.pp.q) % f.pp.q) return false;
                }
    return true;
}

inline bool restriction_p_affine(const MixedFun& f) {
    RadixOps xops(f.pp.p, f.arity);
    for (std::size_t x1 = 0; x1 < f.x_count(); ++x1)
        for (std::size_t x2 = 0; x2 < f.x_count(); ++x2)
            for (std::size_t x3 = 0; x3 < f.x_count(); ++x3) {
                std::size_t xm = xops.malcev(x1, x2, x3);
                int l = f.at(xm, 0)[0];
                int r = ((f.at(x1, 0)[0] - f.at(x2, 0)[0] + f.at(x3, 0)[0]) % f.pp.p + f.pp.p) % f.pp.p;
                if (l != r) return false;
            }
    return true;
}

}  // namespace detail

inline StructureReport classify(const MixedFun& f) {
    using CL = CongruenceLabel;
    StructureReport r;
    r.preserves_pi1 = detail::fp_independent_of_y(f);
    r.preserves_pi2 = detail::fq_independent_of_x(f);
    r.affine_second = detail::affine_in_second(f);
    r.affine_first = detail::affine_in_second(f.flipped());
    r.restriction_p_affine = detail::restriction_p_affine(f);
    r.restriction_q_affine = detail::restriction_p_affine(f.flipped());
    r.rho_pi1_pi1_zero = preserves_relation(f, {CL::Pi1, CL::Pi1, CL::Zero});
    r.rho_pi2_pi2_zero = preserves_relation(f, {CL::Pi2, CL::Pi2, CL::Zero});
    r.rho_one_one_pi1 = preserves_relation(f, {CL::One, CL::One, CL::Pi1});
    r.rho_one_one_pi2 = preserves_relation(f, {CL::One, CL::One, CL::Pi2});

    if (r.preserves_pi1 != preserves_congruence(f, CL::Pi1))
        throw consistency_error("classify: pi1 routes disagree");
    if (r.preserves_pi2 != preserves_congruence(f, CL::Pi2))
        throw consistency_error("classify: pi2 routes disagree");
    if (r.preserves_pi1 && r.affine_second != r.rho_pi1_pi1_zero)
        throw consistency_error("classify: [pi1,pi1]=0 routes disagree");
    if (r.preserves_pi2 && r.affine_first != r.rho_pi2_pi2_zero)
        throw consistency_error("classify: [pi2,pi2]=0 routes disagree");
    if (r.preserves_pi2 && r.restriction_q_affine != r.rho_one_one_pi2)
        throw consistency_error("classify: [1,1]<=pi2 routes disagree");
    if (r.preserves_pi1 && r.restriction_p_affine != r.rho_one_one_pi1)
        throw consistency_error("classify: [1,1]<=pi1 routes disagree");
    return r;
}

}  // namespace cloneforge
