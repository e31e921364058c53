#pragma once

#include <map>
#include <queue>
#include <set>
#include <vector>

#include "cloneforge/common.hpp"
#include "cloneforge/funtab.hpp"
#include "cloneforge/linalg.hpp"
#include "cloneforge/zmod.hpp"

namespace cloneforge {

/// A (Z_dst, Z_src)-linearly closed clonoid: a set of functions
/// Z_src^n -> Z_dst closed under Z_dst-linear combinations and
/// precomposition with Z_src-matrices. It is determined by its unary part,
/// a subspace of Z_dst^src invariant under every scalar substitution
/// y -> a*y (including a = 0), and is stored as that subspace's reduced
/// echelon basis. Rows are indexed by the argument value with y = 0 as the
/// most significant (leading) coordinate.
struct Clonoid {
    int dst = 0;
    int src = 0;
    std::vector<detail::Row> basis;

    bool is_zero() const { return basis.empty(); }
    std::size_t dimension() const { return basis.size(); }

    detail::Echelon echelon() const {
        detail::Echelon e(dst, static_cast<std::size_t>(src));
        for (const auto& r : basis) e.insert(r);
        return e;
    }

    bool contains_unary(const detail::Row& row) const { return echelon().contains(row); }

    bool contains(const Clonoid& other) const {
        auto e = echelon();
        for (const auto& r : other.basis)
            if (!e.contains(r)) return false;
        return true;
    }

    auto operator<=>(const Clonoid&) const = default;
};

namespace detail {

/// u(a * y) as a row over Z_src.
inline Row scalar_precompose(const Row& u, int src, int a) {
    Row out(u.size());
    for (int y = 0; y < src; ++y) out[static_cast<std::size_t>(y)] = u[static_cast<std::size_t>(a * y % src)];
    return out;
}

/// Smallest invariant subspace containing the given rows.
inline Echelon closed_span(int dst, int src, const std::vector<Row>& rows) {
    Echelon e(dst, static_cast<std::size_t>(src));
    std::vector<Row> work = rows;
    while (!work.empty()) {
        Row r = std::move(work.back());
        work.pop_back();
        if (!e.insert(r)) continue;
        for (int a = 0; a < src; ++a) work.push_back(scalar_precompose(r, src, a));
    }
    return e;
}

inline Clonoid clonoid_from_echelon(int dst, int src, const Echelon& e) {
    return Clonoid{dst, src, e.rows()};
}

/// The unary shadows of an n-ary member: t -> g(a_1 t, ..., a_n t) for all
/// scalar tuples a. Substitutions compose and commute with linear
/// combinations, so these shadows span exactly the unary part of the
/// clonoid the member generates.
inline std::vector<Row> unary_shadows(const CoeffFun& g) {
    std::size_t tuples = ipow(static_cast<std::size_t>(g.src), static_cast<unsigned>(g.arity));
    std::vector<Row> out;
    out.reserve(tuples);
    for (std::size_t code = 0; code < tuples; ++code) {
        Row row(static_cast<std::size_t>(g.src));
        for (int t = 0; t < g.src; ++t) {
            std::size_t idx = 0, weight = 1, c = code;
            for (int i = 0; i < g.arity; ++i) {
                int a = static_cast<int>(c % static_cast<std::size_t>(g.src));
                c /= static_cast<std::size_t>(g.src);
                idx += weight * (static_cast<std::size_t>(a * t % g.src));
                weight *= static_cast<std::size_t>(g.src);
            }
            row[static_cast<std::size_t>(t)] = g.table[idx];
        }
        out.push_back(std::move(row));
    }
    return out;
}

/// Fast constructor: canonical clonoid generated by arbitrary members.
inline Clonoid clonoid_from_members(int dst, int src, const std::vector<CoeffFun>& members) {
    std::vector<Row> rows;
    for (const auto& g : members) {
        if (g.src != src || g.dst != dst)
            throw std::invalid_argument("clonoid_from_members: orientation mismatch");
        auto sh = unary_shadows(g);
        rows.insert(rows.end(), sh.begin(), sh.end());
    }
    return clonoid_from_echelon(dst, src, closed_span(dst, src, rows));
}

}  // namespace detail

inline Clonoid zero_clonoid(int dst, int src) { return Clonoid{dst, src, {}}; }

inline Clonoid constants_clonoid(int dst, int src) {
    detail::Row one(static_cast<std::size_t>(src), 1);
    return detail::clonoid_from_echelon(dst, src, detail::closed_span(dst, src, {one}));
}

inline Clonoid full_clonoid(int dst, int src) {
    std::vector<detail::Row> rows;
    for (int y = 0; y < src; ++y) {
        detail::Row r(static_cast<std::size_t>(src), 0);
        r[static_cast<std::size_t>(y)] = 1;
        rows.push_back(std::move(r));
    }
    return detail::clonoid_from_echelon(dst, src, detail::closed_span(dst, src, rows));
}

/// Closure of a finite generator set under the two clonoid rules, computed
/// as a fixed point on explicit tables at every arity up to `arityCap`,
/// then reduced to the canonical unary-basis representation.
inline Clonoid cig_closure(const std::vector<CoeffFun>& gens, int arityCap, int dst, int src) {
    if (arityCap < 1) throw std::invalid_argument("cig_closure: arity cap must be >= 1");
    for (const auto& g : gens) {
        if (g.src != src || g.dst != dst)
            throw std::invalid_argument("cig_closure: mixed moduli in generator set");
        if (g.arity > arityCap) throw std::invalid_argument("cig_closure: generator arity above cap");
    }
    if (detail::ipow(static_cast<std::size_t>(src),
                     static_cast<unsigned>(arityCap) * static_cast<unsigned>(arityCap)) > (1u << 24))
        throw resource_error("cig_closure: substitution matrix space too large");

    std::vector<detail::Echelon> bases;
    bases.reserve(static_cast<std::size_t>(arityCap));
    for (int n = 1; n <= arityCap; ++n)
        bases.emplace_back(dst, detail::ipow(static_cast<std::size_t>(src), static_cast<unsigned>(n)));
    auto base_of = [&](int n) -> detail::Echelon& { return bases[static_cast<std::size_t>(n - 1)]; };

    for (const auto& g : gens) {
        if (g.arity == 0)
            base_of(1).insert(detail::Row(static_cast<std::size_t>(src), g.table[0]));
        else
            base_of(g.arity).insert(g.table);
    }

    // Substitution rule: from arity m to arity l via every matrix in
    // Z_src^{m x l}. Linear combinations are implicit in the echelon spans.
    std::vector<int> entries;
    bool grew = true;
    while (grew) {
        grew = false;
        for (int m = 1; m <= arityCap; ++m) {
            std::vector<detail::Row> snapshot = base_of(m).rows();
            if (snapshot.empty()) continue;
            for (int l = 1; l <= arityCap; ++l) {
                std::size_t lc = detail::ipow(static_cast<std::size_t>(src), static_cast<unsigned>(l));
                std::size_t matrices =
                    detail::ipow(static_cast<std::size_t>(src), static_cast<unsigned>(m * l));
                for (std::size_t mat = 0; mat < matrices; ++mat) {
                    entries.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(l), 0);
                    std::size_t md = mat;  // entry (i, j) at digit i*l + j, base src
                    for (auto& e : entries) {
                        e = static_cast<int>(md % static_cast<std::size_t>(src));
                        md /= static_cast<std::size_t>(src);
                    }
                    for (const auto& f : snapshot) {
                        detail::Row img(lc);
                        for (std::size_t yIdx = 0; yIdx < lc; ++yIdx) {
                            std::size_t srcIdx = 0, weight = 1;
                            for (int i = 0; i < m; ++i) {
                                int acc = 0;
                                std::size_t yv = yIdx;
                                for (int j = 0; j < l; ++j) {
                                    acc += entries[static_cast<std::size_t>(i * l + j)] *
                                           static_cast<int>(yv % static_cast<std::size_t>(src));
                                    yv /= static_cast<std::size_t>(src);
                                }
                                srcIdx += weight * (static_cast<std::size_t>(acc) % static_cast<std::size_t>(src));
                                weight *= static_cast<std::size_t>(src);
                            }
                            img[yIdx] = f[srcIdx];
                        }
                        if (base_of(l).insert(std::move(img))) grew = true;
                    }
                }
            }
        }
    }
    return detail::clonoid_from_echelon(dst, src, detail::closed_span(dst, src, base_of(1).rows()));
}

/// Basis of the n-ary part: span of { u(<a, y>) : u in basis, a in Z_src^n },
/// rows indexed by the mixed-radix encoding of y.
struct SliceBasis {
    int arity = 0;
    std::vector<detail::Row> basis;
};

inline SliceBasis slice(const Clonoid& c, int n) {
    if (n < 1) throw std::invalid_argument("slice: arity must be >= 1");
    std::size_t cols = detail::ipow(static_cast<std::size_t>(c.src), static_cast<unsigned>(n));
    if (cols > 1000000) throw resource_error("slice: q^n exceeds the slice cap");
    detail::Echelon e(c.dst, cols);
    std::size_t tuples = cols;
    for (const auto& u : c.basis) {
        for (std::size_t a = 0; a < tuples; ++a) {
            detail::Row row(cols);
            for (std::size_t y = 0; y < cols; ++y) {
                std::size_t av = a, yv = y;
                int acc = 0;
                for (int i = 0; i < n; ++i) {
                    acc += static_cast<int>(av % static_cast<std::size_t>(c.src)) *
                           static_cast<int>(yv % static_cast<std::size_t>(c.src));
                    av /= static_cast<std::size_t>(c.src);
                    yv /= static_cast<std::size_t>(c.src);
                }
                row[y] = u[static_cast<std::size_t>(acc % c.src)];
            }
            e.insert(std::move(row));
        }
    }
    return SliceBasis{n, e.rows()};
}

/// Membership of an n-ary function, decided by linear solving against the
/// n-ary slice.
inline bool member(const Clonoid& c, const CoeffFun& f) {
    if (f.src != c.src || f.dst != c.dst)
        throw std::invalid_argument("member: orientation mismatch");
    if (f.arity == 0)  // constants live in the clonoid iff their unary lift does
        return member(c, CoeffFun::constant(c.src, c.dst, 1, f.table[0]));
    auto sl = slice(c, f.arity);
    detail::Echelon e(c.dst, f.table.size());
    for (const auto& r : sl.basis) e.insert(r);
    return e.contains(f.table);
}

enum class Orientation { PQ, QP };

/// All (Z_dst, Z_src)-linearly closed clonoids for the pair, i.e. all
/// invariant subspaces of Z_dst^src, found by closing upward from the zero
/// subspace one generator at a time. The count is checked against the
/// factorization formula before returning.
inline std::vector<Clonoid> enumerate_clonoids(const PrimePair& pp, Orientation orient) {
    int dst = orient == Orientation::PQ ? pp.p : pp.q;
    int src = orient == Orientation::PQ ? pp.q : pp.p;
    std::size_t space = detail::ipow(static_cast<std::size_t>(dst), static_cast<unsigned>(src));
    if (space > (1u << 20)) throw resource_error("enumerate_clonoids: function space too large");

    std::set<std::vector<detail::Row>> seen;
    std::vector<Clonoid> out;
    std::queue<Clonoid> work;
    Clonoid zero = zero_clonoid(dst, src);
    seen.insert(zero.basis);
    out.push_back(zero);
    work.push(zero);
    while (!work.empty()) {
        Clonoid v = std::move(work.front());
        work.pop();
        auto e = v.echelon();
        for (std::size_t code = 1; code < space; ++code) {
            CoeffFun u = CoeffFun::decode(src, dst, 1, code);
            if (e.contains(u.table)) continue;
            auto rows = v.basis;
            rows.push_back(u.table);
            Clonoid w = detail::clonoid_from_echelon(dst, src, detail::closed_span(dst, src, rows));
            if (seen.insert(w.basis).second) {
                out.push_back(w);
                work.push(w);
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Clonoid& a, const Clonoid& b) {
        if (a.dimension() != b.dimension()) return a.dimension() < b.dimension();
        return a.basis < b.basis;
    });

    Factorization fac = factor_over_zp(power_minus_one(dst, src - 1));
    long long expected = 2 * fac.product_of(1);
    if (static_cast<long long>(out.size()) != expected)
        throw consistency_error("enumerate_clonoids: count disagrees with the factorization formula");
    return out;
}

/// The first unary function (in ascending base-dst table encoding) whose
/// generated clonoid equals c. Existence is guaranteed for every closed
/// subspace here; failure to find one is a library defect.
inline CoeffFun unary_generator(const Clonoid& c) {
    if (c.is_zero()) throw std::invalid_argument("unary_generator: zero clonoid has no generator");
    std::size_t space = detail::ipow(static_cast<std::size_t>(c.dst), static_cast<unsigned>(c.src));
    for (std::size_t code = 1; code < space; ++code) {
        CoeffFun u = CoeffFun::decode(c.src, c.dst, 1, code);
        auto closed = detail::closed_span(c.dst, c.src, {u.table});
        if (closed.rows() == c.basis) return u;
    }
    throw consistency_error("unary_generator: no single unary generator found");
}

inline Clonoid meet(const Clonoid& a, const Clonoid& b) {
    if (a.dst != b.dst || a.src != b.src) throw std::invalid_argument("meet: orientation mismatch");
    auto inter = detail::span_intersection(a.echelon(), b.echelon());
    return detail::clonoid_from_echelon(a.dst, a.src, detail::closed_span(a.dst, a.src, inter));
}

inline Clonoid join(const Clonoid& a, const Clonoid& b) {
    if (a.dst != b.dst || a.src != b.src) throw std::invalid_argument("join: orientation mismatch");
    auto rows = a.basis;
    rows.insert(rows.end(), b.basis.begin(), b.basis.end());
    return detail::clonoid_from_echelon(a.dst, a.src, detail::closed_span(a.dst, a.src, rows));
}

}  // namespace cloneforge
