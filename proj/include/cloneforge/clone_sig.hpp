#pragma once

#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "cloneforge/clonoid.hpp"
#include "cloneforge/common.hpp"
#include "cloneforge/funtab.hpp"
#include "cloneforge/linalg.hpp"

namespace cloneforge {

/// A clone above the clone of linear maps, represented intensionally by the
/// tuple of coefficient clonoids it realizes: rho[i] holds the coefficients
/// r with r * x_1..x_i induced in the clone (rho[0]: bare coefficients),
/// psi[j] the same with the two coordinate roles swapped. Slots with equal
/// degree class modulo p-1 coincide from index 2 on, and rho[p] embeds into
/// rho[1] by variable collapsing; both facts are enforced as invariants.
struct CloneSignature {
    PrimePair pp;
    std::vector<Clonoid> rho;  // size p+1, functions Z_q -> Z_p
    std::vector<Clonoid> psi;  // size q+1, functions Z_p -> Z_q

    auto operator<=>(const CloneSignature&) const = default;

    /// Compact canonical key (basis rows in canonical order).
    std::string key() const {
        std::string s;
        auto emit = [&s](const Clonoid& c) {
            s += '[';
            for (const auto& row : c.basis) {
                for (auto v : row) s += static_cast<char>('0' + v);
                s += ';';
            }
            s += ']';
        };
        s += std::to_string(pp.p) + "," + std::to_string(pp.q) + ":";
        for (const auto& c : rho) emit(c);
        s += '|';
        for (const auto& c : psi) emit(c);
        return s;
    }

    CloneSignature flipped() const { return CloneSignature{pp.swapped(), psi, rho}; }

    bool contains(const CloneSignature& other) const {
        for (std::size_t i = 0; i < rho.size(); ++i)
            if (!rho[i].contains(other.rho[i])) return false;
        for (std::size_t j = 0; j < psi.size(); ++j)
            if (!psi[j].contains(other.psi[j])) return false;
        return true;
    }
};

/// Degree class of a monomial total degree: 0 and 1 name themselves, any
/// higher degree lands on its unique representative in [2, p].
inline int degree_slot(int totalDegree, int p) {
    if (totalDegree <= 1) return totalDegree;
    return 2 + (totalDegree - 2) % (p - 1);
}

/// Signature of the clone of linear maps: slot 1 holds exactly the
/// constants (c * x_1 is linear), everything else is zero.
inline CloneSignature bottom_signature(const PrimePair& pp) {
    CloneSignature s;
    s.pp = pp;
    s.rho.assign(static_cast<std::size_t>(pp.p) + 1, zero_clonoid(pp.p, pp.q));
    s.psi.assign(static_cast<std::size_t>(pp.q) + 1, zero_clonoid(pp.q, pp.p));
    s.rho[1] = constants_clonoid(pp.p, pp.q);
    s.psi[1] = constants_clonoid(pp.q, pp.p);
    return s;
}

/// One coefficient landing in one slot.
struct SlotContribution {
    bool pSide = true;
    int slot = 0;
    CoeffFun coeff;
};

/// Where each normal-form coefficient of f lives: the p-side coefficient at
/// exponent m goes to slot degree_slot(totalDegree(m), p), symmetrically on
/// the q side.
inline std::vector<SlotContribution> decompose(const MixedFun& f) {
    std::vector<SlotContribution> out;
    SplitNormalForm nf = normal_form(f);
    for (std::size_t e = 0; e < nf.pSide.size(); ++e) {
        if (nf.pSide[e].is_zero()) continue;
        auto exp = SplitNormalForm::exponent_of(e, f.pp.p, f.arity);
        int td = 0;
        for (auto v : exp) td += v;
        out.push_back({true, degree_slot(td, f.pp.p), nf.pSide[e]});
    }
    for (std::size_t e = 0; e < nf.qSide.size(); ++e) {
        if (nf.qSide[e].is_zero()) continue;
        auto exp = SplitNormalForm::exponent_of(e, f.pp.q, f.arity);
        int td = 0;
        for (auto v : exp) td += v;
        out.push_back({false, degree_slot(td, f.pp.q), nf.qSide[e]});
    }
    return out;
}

namespace detail {

/// Mutable slot spans during closure; every insert adds a scalar-substitution
/// closed family, so the spans stay invariant subspaces throughout.
struct SlotWork {
    PrimePair pp;
    std::vector<Echelon> rho, psi;

    explicit SlotWork(const PrimePair& pair) : pp(pair) {
        for (int i = 0; i <= pp.p; ++i) rho.emplace_back(pp.p, static_cast<std::size_t>(pp.q));
        for (int j = 0; j <= pp.q; ++j) psi.emplace_back(pp.q, static_cast<std::size_t>(pp.p));
    }

    std::size_t total_rank() const {
        std::size_t r = 0;
        for (const auto& e : rho) r += e.rank();
        for (const auto& e : psi) r += e.rank();
        return r;
    }

    bool absorb(bool pSide, int slot, const CoeffFun& coeff) {
        auto& target = pSide ? rho[static_cast<std::size_t>(slot)] : psi[static_cast<std::size_t>(slot)];
        bool grew = false;
        for (auto& row : unary_shadows(coeff))
            grew |= target.insert(std::move(row));
        return grew;
    }

    bool merge_rows(std::vector<Echelon>& side, int from, int into) {
        bool grew = false;
        for (const auto& r : side[static_cast<std::size_t>(from)].rows())
            grew |= side[static_cast<std::size_t>(into)].insert(r);
        return grew;
    }

    /// rho[p] collapses into rho[1] (x_1..x_p composes down to x_1 via
    /// x^p = x); the slots 2..p already carry distinct degree classes, so
    /// no other identifications arise.
    bool coherence() {
        bool grew = merge_rows(rho, pp.p, 1);
        grew |= merge_rows(psi, pp.q, 1);
        return grew;
    }

    CloneSignature to_signature() const {
        CloneSignature s;
        s.pp = pp;
        for (const auto& e : rho)
            s.rho.push_back(clonoid_from_echelon(pp.p, pp.q, closed_span(pp.p, pp.q, e.rows())));
        for (const auto& e : psi)
            s.psi.push_back(clonoid_from_echelon(pp.q, pp.p, closed_span(pp.q, pp.p, e.rows())));
        return s;
    }
};

/// Composition probe engine for one side (coefficients Z_src -> Z_dst with
/// monomial slots up to `top` = dst). Every probe corresponds to an actual
/// composition of clone members, so each contribution is sound; coverage is
/// validated downstream by the idempotence, work-arity stability and
/// count checks.
struct SideSweep {
    int dst, src, top, otherTop, workArity;
    PrimePair side_pp;  // (dst, src)

    SideSweep(int dst_, int src_, int workArity_)
        : dst(dst_), src(src_), top(dst_), otherTop(src_), workArity(workArity_),
          side_pp{dst_, src_} {}

    struct Factor {
        int slot = 0;
        Row row;
    };

    /// Span members of a slot, for positions where contributions are not
    /// linear in the entry (feeds). Falls back to basis plus pairwise sums
    /// when the span is too large to enumerate.
    static std::vector<Row> span_members(const Echelon& e, int mod) {
        if (ipow(static_cast<std::size_t>(mod), static_cast<unsigned>(e.rank())) <= 512)
            return e.enumerate_span(512);
        std::vector<Row> out;
        out.emplace_back(e.cols(), 0);
        for (const auto& a : e.rows()) {
            out.push_back(a);
            for (const auto& b : e.rows()) {
                Row s = a;
                for (std::size_t i = 0; i < s.size(); ++i)
                    s[i] = static_cast<std::uint8_t>((s[i] + b[i]) % mod);
                out.push_back(std::move(s));
            }
        }
        return out;
    }

    /// Insert the unary shadows of a product of independent-variable
    /// factors (optionally times the shadows of a multi-ary coefficient).
    bool absorb_product(Echelon& target, const std::vector<const Row*>& factors,
                        const CoeffFun* multi) const {
        bool grew = false;
        std::size_t tuples = ipow(static_cast<std::size_t>(src), static_cast<unsigned>(factors.size()));
        std::vector<Row> multiShadows;
        if (multi)
            multiShadows = unary_shadows(*multi);
        else
            multiShadows.emplace_back(static_cast<std::size_t>(src), 1);
        for (const auto& ms : multiShadows) {
            for (std::size_t code = 0; code < tuples; ++code) {
                Row row = ms;
                std::size_t c = code;
                for (const auto* f : factors) {
                    int a = static_cast<int>(c % static_cast<std::size_t>(src));
                    c /= static_cast<std::size_t>(src);
                    for (int t = 0; t < src; ++t)
                        row[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>(
                            row[static_cast<std::size_t>(t)] * (*f)[static_cast<std::size_t>(a * t % src)] % dst);
                }
                grew |= target.insert(std::move(row));
            }
        }
        return grew;
    }

    static bool row_constant(const Row& r) {
        for (auto v : r)
            if (v != r[0]) return false;
        return true;
    }

    /// Feed composite: u applied to a q-side expression, optionally shifted
    /// by a fresh variable and multiplied by a fresh monomial variable.
    /// A constant degree-zero expression needs no block of its own, so it
    /// rides the fresh variable (constBlock). Returns the (total x-degree,
    /// coefficient) terms of the normal form; memoized globally per shape.
    const std::vector<std::pair<int, CoeffFun>>& feed_terms(const Row& u, const Row& w, int l,
                                                            bool shifted, bool monomial,
                                                            bool constBlock = false) const {
        using Key = std::array<std::size_t, 8>;
        thread_local std::map<Key, std::vector<std::pair<int, CoeffFun>>> cache;
        auto enc = [](const Row& r, int mod) {
            std::size_t acc = 0;
            for (std::size_t i = r.size(); i-- > 0;) acc = acc * static_cast<std::size_t>(mod) + r[i];
            return acc;
        };
        Key key{static_cast<std::size_t>(dst), static_cast<std::size_t>(src), enc(u, dst),
                enc(w, src), static_cast<std::size_t>(l),
                static_cast<std::size_t>(shifted ? 1 : 0), static_cast<std::size_t>(monomial ? 1 : 0),
                static_cast<std::size_t>(constBlock ? 1 : 0)};
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;

        int beta = constBlock ? 0 : std::max(l, 1);
        int arity = std::max(1, beta + ((shifted || monomial) ? 1 : 0));
        MixedFun h = MixedFun::from_fn(side_pp, arity, [&](const auto& xs, const auto& ys) {
            int e = constBlock ? w[0] : w[static_cast<std::size_t>(xs[0])];
            for (int j = 0; j < l; ++j) e = e * ys[static_cast<std::size_t>(j)] % src;
            if (shifted) e = (e + ys[static_cast<std::size_t>(arity - 1)]) % src;
            int v = u[static_cast<std::size_t>(e % src)];
            if (monomial) v = v * xs[static_cast<std::size_t>(arity - 1)] % dst;
            return std::pair{v, 0};
        });
        std::vector<std::pair<int, CoeffFun>> terms;
        SplitNormalForm nf = normal_form(h);
        for (std::size_t e = 0; e < nf.pSide.size(); ++e) {
            if (nf.pSide[e].is_zero()) continue;
            auto exp = SplitNormalForm::exponent_of(e, dst, arity);
            int td = 0;
            for (auto v : exp) td += v;
            terms.emplace_back(td, nf.pSide[e]);
        }
        return cache.emplace(key, std::move(terms)).first->second;
    }

    /// Double feed u(w(x)y.. + w'(x')y'..); memoized like feed_terms.
    const std::vector<std::pair<int, CoeffFun>>& double_feed_terms(const Row& u, const Row& w,
                                                                   int l, const Row& w2,
                                                                   int l2) const {
        using Key = std::array<std::size_t, 7>;
        thread_local std::map<Key, std::vector<std::pair<int, CoeffFun>>> cache;
        auto enc = [](const Row& r, int mod) {
            std::size_t acc = 0;
            for (std::size_t i = r.size(); i-- > 0;) acc = acc * static_cast<std::size_t>(mod) + r[i];
            return acc;
        };
        Key key{static_cast<std::size_t>(dst), static_cast<std::size_t>(src), enc(u, dst),
                enc(w, src), static_cast<std::size_t>(l) * 64 + static_cast<std::size_t>(l2),
                enc(w2, src), 2};
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;

        int b1 = std::max(l, 1), b2 = std::max(l2, 1);
        int arity = b1 + b2;
        MixedFun h = MixedFun::from_fn(side_pp, arity, [&](const auto& xs, const auto& ys) {
            int e1 = w[static_cast<std::size_t>(xs[0])];
            for (int j = 0; j < l; ++j) e1 = e1 * ys[static_cast<std::size_t>(j)] % src;
            int e2 = w2[static_cast<std::size_t>(xs[static_cast<std::size_t>(b1)])];
            for (int j = 0; j < l2; ++j) e2 = e2 * ys[static_cast<std::size_t>(b1 + j)] % src;
            return std::pair{u[static_cast<std::size_t>((e1 + e2) % src)], 0};
        });
        std::vector<std::pair<int, CoeffFun>> terms;
        SplitNormalForm nf = normal_form(h);
        for (std::size_t e = 0; e < nf.pSide.size(); ++e) {
            if (nf.pSide[e].is_zero()) continue;
            auto exp = SplitNormalForm::exponent_of(e, dst, arity);
            int td = 0;
            for (auto v : exp) td += v;
            terms.emplace_back(td, nf.pSide[e]);
        }
        return cache.emplace(key, std::move(terms)).first->second;
    }

    /// Enumerate factor tuples (with repetition, canonical order) within the
    /// arity budget and invoke the sink with (degree sum, block arity sum).
    template <class Sink>
    void factor_tuples(const std::vector<Factor>& factors, int maxCount, int arityBudget,
                       Sink&& sink) const {
        std::vector<const Factor*> chosen;
        auto rec = [&](auto&& self, std::size_t start, int budget) -> void {
            sink(chosen);
            if (static_cast<int>(chosen.size()) == maxCount) return;
            for (std::size_t k = start; k < factors.size(); ++k) {
                int cost = std::max(factors[k].slot, 1);
                if (cost > budget) continue;
                chosen.push_back(&factors[k]);
                self(self, k, budget - cost);
                chosen.pop_back();
            }
        };
        rec(rec, 0, arityBudget);
    }

    /// One probing pass contributing into `main` (this side's slots) given
    /// the opposite side's slots. Returns true when anything grew.
    bool run(std::vector<Echelon>& main, const std::vector<Echelon>& other) const {
        bool grew = false;
        std::vector<Factor> factors;
        for (int l = 0; l <= top; ++l)
            for (const auto& row : main[static_cast<std::size_t>(l)].rows()) factors.push_back({l, row});
        std::vector<std::vector<Row>> otherMembers;
        for (int l = 0; l <= otherTop; ++l)
            otherMembers.push_back(span_members(other[static_cast<std::size_t>(l)], src));

        // products: outer coefficient times independent factor blocks. The
        // coefficient stays live through the first identity block, or
        // through one fresh variable when every slot takes a factor (the
        // argument is the factor plus the linear map (0, y)).
        for (int i = 1; i <= top; ++i) {
            auto uRows = main[static_cast<std::size_t>(i)].rows();
            for (const auto& u : uRows) {
                factor_tuples(factors, i, workArity, [&](const std::vector<const Factor*>& tup) {
                    int m = static_cast<int>(tup.size());
                    int blockCost = i - m;  // identity blocks
                    int degree = i - m;
                    for (const auto* f : tup) {
                        blockCost += std::max(f->slot, 1);
                        degree += f->slot;
                    }
                    int liveCost = blockCost + (m == i ? 1 : 0);
                    auto& slot = main[static_cast<std::size_t>(degree_slot(degree, top))];
                    if (liveCost <= workArity) {
                        std::vector<const Row*> rows;
                        rows.push_back(&u);
                        for (const auto* f : tup) rows.push_back(&f->row);
                        grew |= absorb_product(slot, rows, nullptr);
                    } else if (blockCost <= workArity && m == i && u[0] != 0) {
                        // dead-coefficient fallback within the tighter budget
                        std::vector<const Row*> rows;
                        for (const auto* f : tup) rows.push_back(&f->row);
                        grew |= absorb_product(slot, rows, nullptr);
                    }
                });
            }
        }

        // coefficient feeds through the opposite side
        for (int i = 0; i <= top; ++i) {
            auto uRows = main[static_cast<std::size_t>(i)].rows();
            for (const auto& u : uRows) {
                for (int l = 0; l <= otherTop; ++l) {
                    const auto& wMembers = otherMembers[static_cast<std::size_t>(l)];
                    for (const auto& w : wMembers) {
                        int beta = std::max(l, 1);
                        bool constBlock = l == 0 && row_constant(w);
                        if (i == 0) {
                            if (beta <= workArity)
                                for (const auto& [td, coeff] : feed_terms(u, w, l, false, false))
                                    grew |= absorb_slot(main, td, coeff);
                            if (beta + 1 <= workArity)
                                for (const auto& [td, coeff] : feed_terms(u, w, l, true, false))
                                    grew |= absorb_slot(main, td, coeff);
                            // double feeds over pairs of blocks
                            if (l <= 1)
                                for (int l2 = 0; l2 <= l; ++l2) {
                                    if (beta + std::max(l2, 1) > workArity) continue;
                                    for (const auto& w2 : otherMembers[static_cast<std::size_t>(l2)])
                                        for (const auto& [td, coeff] : double_feed_terms(u, w, l, w2, l2))
                                            grew |= absorb_slot(main, td, coeff);
                                }
                        } else {
                            int feedArity = constBlock ? 1 : beta + 1;
                            if (feedArity > workArity) continue;
                            const auto& terms = feed_terms(u, w, l, true, true, constBlock);
                            factor_tuples(factors, i - 1, workArity - feedArity,
                                          [&](const std::vector<const Factor*>& tup) {
                                              int m = static_cast<int>(tup.size());
                                              int blockCost = feedArity + (i - 1 - m);
                                              int degreeRest = i - 1 - m;
                                              for (const auto* f : tup) {
                                                  blockCost += std::max(f->slot, 1);
                                                  degreeRest += f->slot;
                                              }
                                              if (blockCost > workArity) return;
                                              std::vector<const Row*> rows;
                                              for (const auto* f : tup) rows.push_back(&f->row);
                                              for (const auto& [td, coeff] : terms) {
                                                  auto& slot = main[static_cast<std::size_t>(
                                                      degree_slot(td + degreeRest, top))];
                                                  grew |= absorb_product(slot, rows, &coeff);
                                              }
                                          });
                        }
                    }
                }
            }
        }
        return grew;
    }

    bool absorb_slot(std::vector<Echelon>& main, int totalDegree, const CoeffFun& coeff) const {
        auto& slot = main[static_cast<std::size_t>(degree_slot(totalDegree, top))];
        bool grew = false;
        for (auto& row : unary_shadows(coeff)) grew |= slot.insert(std::move(row));
        return grew;
    }
};

inline void sweep_fixpoint(SlotWork& work, int workArity) {
    SideSweep pSide(work.pp.p, work.pp.q, workArity);
    SideSweep qSide(work.pp.q, work.pp.p, workArity);
    bool grew = true;
    while (grew) {
        grew = work.coherence();
        grew |= pSide.run(work.rho, work.psi);
        grew |= qSide.run(work.psi, work.rho);
    }
}

inline std::string slot_state_key(const SlotWork& work) {
    std::string key = std::to_string(work.pp.p) + "," + std::to_string(work.pp.q) + ":";
    auto emit = [&key](const std::vector<Echelon>& side) {
        for (const auto& e : side) {
            key += '[';
            for (const auto& row : e.rows()) {
                for (auto v : row) key += static_cast<char>('0' + v);
                key += ';';
            }
            key += ']';
        }
    };
    emit(work.rho);
    emit(work.psi);
    return key;
}

/// Closure with memoization on the seeded state; the sweep is a pure
/// function of (state, work arity) and the join loops resubmit the same
/// unions constantly.
inline CloneSignature closed_signature(SlotWork&& work, int workArity) {
    thread_local std::map<std::string, CloneSignature> cache;
    std::string key = std::to_string(workArity) + "|" + slot_state_key(work);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    sweep_fixpoint(work, workArity);
    return cache.emplace(std::move(key), work.to_signature()).first->second;
}

}  // namespace detail

/// Least signature whose clone contains the generators: seeds the slots with
/// the generators' normal-form coefficients, then closes under the
/// composition probes until stable.
inline CloneSignature clg_signature(const PrimePair& pp, const std::vector<MixedFun>& generators,
                                    int workArity) {
    if (workArity < std::max(pp.p, pp.q))
        throw std::invalid_argument("clg_signature: work arity below max(p, q)");
    detail::SlotWork work(pp);
    CloneSignature bottom = bottom_signature(pp);
    for (std::size_t i = 0; i < bottom.rho.size(); ++i)
        for (const auto& row : bottom.rho[i].basis) work.rho[i].insert(row);
    for (std::size_t j = 0; j < bottom.psi.size(); ++j)
        for (const auto& row : bottom.psi[j].basis) work.psi[j].insert(row);
    for (const auto& g : generators) {
        if (!(g.pp == pp)) throw std::invalid_argument("clg_signature: generator prime pair mismatch");
        if (g.arity > workArity)
            throw std::invalid_argument("clg_signature: generator arity above work arity");
        for (const auto& c : decompose(g)) work.absorb(c.pSide, c.slot, c.coeff);
    }
    return detail::closed_signature(std::move(work), workArity);
}

/// Membership: every normal-form coefficient of f must lie in its slot.
inline bool member(const CloneSignature& sig, const MixedFun& f) {
    if (!(f.pp == sig.pp)) throw std::invalid_argument("member: prime pair mismatch");
    for (const auto& c : decompose(f)) {
        const Clonoid& slot = c.pSide ? sig.rho[static_cast<std::size_t>(c.slot)]
                                      : sig.psi[static_cast<std::size_t>(c.slot)];
        if (!member(slot, c.coeff)) return false;
    }
    return true;
}

/// Generating set read off the signature: for every nonzero slot, the
/// induced monomials of its basis and of its canonical unary generator,
/// plus the linear seeds. Closing this catalog must reproduce the
/// signature (tested as the idempotence property).
struct GeneratorCatalog {
    PrimePair pp;
    std::vector<MixedFun> functions;
};

inline GeneratorCatalog generator_catalog(const CloneSignature& sig) {
    GeneratorCatalog cat;
    cat.pp = sig.pp;
    const PrimePair pp = sig.pp;
    auto addSide = [&](const std::vector<Clonoid>& slots, const PrimePair& side, bool flip) {
        for (int i = 0; i < static_cast<int>(slots.size()); ++i) {
            const Clonoid& c = slots[static_cast<std::size_t>(i)];
            if (c.is_zero()) continue;
            std::vector<CoeffFun> coeffs;
            for (const auto& row : c.basis) {
                CoeffFun u = CoeffFun::zero(side.q, side.p, 1);
                u.table = row;
                coeffs.push_back(std::move(u));
            }
            coeffs.push_back(unary_generator(c));
            Exponent ones(static_cast<std::size_t>(i), 1);
            for (const auto& u : coeffs) {
                MixedFun g = induced_monomial(side, u, ones, std::max(i, 1));
                cat.functions.push_back(flip ? g.flipped() : g);
            }
        }
    };
    addSide(sig.rho, pp, false);
    addSide(sig.psi, pp.swapped(), true);
    cat.functions.push_back(MixedFun::projection(pp, 1, 1));
    std::vector<int> ones2(2, 1);
    cat.functions.push_back(linear_map(pp, ModVec::make(pp.p, ones2), ModVec::make(pp.q, ones2)));
    return cat;
}

/// The clone attached to a coefficient clonoid: bare coefficients embed as
/// slot-0 content on top of the linear maps, and nothing else appears.
inline CloneSignature embed_clonoid(const PrimePair& pp, const Clonoid& c) {
    if (c.dst != pp.p || c.src != pp.q)
        throw std::invalid_argument("embed_clonoid: orientation mismatch");
    CloneSignature s = bottom_signature(pp);
    s.rho[0] = c;
    return s;
}

// ---------------------------------------------------------------------------
// Clones on a single prime field above its linear maps
// ---------------------------------------------------------------------------

/// A clone on Z_k containing all linear maps is pinned down by whether it
/// has the constants and by which multilinear monomial degrees x_1..x_d
/// (canonical in [2, k]) it realizes; the degree set is closed under
/// d + d' - 1 (composition of monomials) and, with constants, under d - 1
/// (substituting a constant). Extensional slices materialize on demand.
struct PrimeCloneDescriptor {
    int mod = 0;
    bool constants = false;
    std::vector<int> degrees;  // sorted canonical degrees in [2, mod]

    static int clamp_degree(int d, int k) { return d <= k ? d : 2 + (d - 2) % (k - 1); }

    bool has_degree(int d) const {
        int c = clamp_degree(d, mod);
        return std::find(degrees.begin(), degrees.end(), c) != degrees.end();
    }

    void close() {
        std::set<int> ds(degrees.begin(), degrees.end());
        bool grew = true;
        while (grew) {
            grew = false;
            std::vector<int> cur(ds.begin(), ds.end());
            for (int a : cur)
                for (int b : cur) {
                    int c = clamp_degree(a + b - 1, mod);
                    if (c >= 2 && ds.insert(c).second) grew = true;
                }
            if (constants)
                for (int a : cur)
                    if (a - 1 >= 2 && ds.insert(a - 1).second) grew = true;
        }
        degrees.assign(ds.begin(), ds.end());
    }

    bool contains(const PrimeCloneDescriptor& o) const {
        if (o.constants && !constants) return false;
        for (int d : o.degrees)
            if (!has_degree(d)) return false;
        return true;
    }

    /// Echelon basis of the n-ary slice: linear maps, plus constants when
    /// present, plus every monomial with an admitted degree class.
    std::vector<detail::Row> slice_basis(int n) const {
        std::size_t cols = detail::ipow(static_cast<std::size_t>(mod), static_cast<unsigned>(n));
        detail::Echelon e(mod, cols);
        std::size_t expCount = cols;
        for (std::size_t expIdx = 0; expIdx < expCount; ++expIdx) {
            auto exp = SplitNormalForm::exponent_of(expIdx, mod, n);
            int td = 0;
            for (auto v : exp) td += v;
            bool admitted = td == 1 || (td == 0 && constants) || (td >= 2 && has_degree(td));
            if (!admitted) continue;
            detail::Row row(cols);
            for (std::size_t x = 0; x < cols; ++x) {
                std::size_t xv = x;
                int prod = 1;
                for (int i = 0; i < n; ++i) {
                    int xd = static_cast<int>(xv % static_cast<std::size_t>(mod));
                    xv /= static_cast<std::size_t>(mod);
                    for (int k = 0; k < exp[static_cast<std::size_t>(i)]; ++k) prod = prod * xd % mod;
                }
                row[x] = static_cast<std::uint8_t>(prod);
            }
            e.insert(std::move(row));
        }
        return e.rows();
    }

    /// Membership of an n-ary table over Z_mod.
    bool contains_table(const std::vector<std::uint8_t>& table, int n) const {
        const auto& minv = detail::interpolation_matrix(mod, n);
        std::size_t cols = table.size();
        for (std::size_t e = 0; e < cols; ++e) {
            int acc = 0;
            for (std::size_t x = 0; x < cols; ++x) acc += minv[e][x] * table[x];
            if (acc % mod == 0) continue;
            auto exp = SplitNormalForm::exponent_of(e, mod, n);
            int td = 0;
            for (auto v : exp) td += v;
            if (td == 0 && !constants) return false;
            if (td >= 2 && !has_degree(td)) return false;
        }
        return true;
    }

    /// Absorb the monomial degrees of an n-ary table; call close() after.
    void add_table(const std::vector<std::uint8_t>& table, int n) {
        const auto& minv = detail::interpolation_matrix(mod, n);
        std::size_t cols = table.size();
        for (std::size_t e = 0; e < cols; ++e) {
            int acc = 0;
            for (std::size_t x = 0; x < cols; ++x) acc += minv[e][x] * table[x];
            if (acc % mod == 0) continue;
            auto exp = SplitNormalForm::exponent_of(e, mod, n);
            int td = 0;
            for (auto v : exp) td += v;
            if (td == 0) constants = true;
            if (td >= 2 && !has_degree(td)) degrees.push_back(clamp_degree(td, mod));
        }
        std::sort(degrees.begin(), degrees.end());
        degrees.erase(std::unique(degrees.begin(), degrees.end()), degrees.end());
    }

    auto operator<=>(const PrimeCloneDescriptor&) const = default;
};

/// All clones on Z_k above its linear maps; the count must match
/// (number of divisors of k-1) + 3.
inline std::vector<PrimeCloneDescriptor> enumerate_prime_clones(int k) {
    std::vector<PrimeCloneDescriptor> out;
    int span = k - 1;  // candidate degrees 2..k
    for (int mask = 0; mask < (1 << span); ++mask) {
        for (int cbit = 0; cbit < 2; ++cbit) {
            PrimeCloneDescriptor d;
            d.mod = k;
            d.constants = cbit == 1;
            for (int i = 0; i < span; ++i)
                if (mask & (1 << i)) d.degrees.push_back(i + 2);
            PrimeCloneDescriptor closed = d;
            closed.close();
            if (closed == d) out.push_back(d);
        }
    }
    std::sort(out.begin(), out.end(), [](const PrimeCloneDescriptor& a, const PrimeCloneDescriptor& b) {
        if (a.degrees.size() != b.degrees.size()) return a.degrees.size() < b.degrees.size();
        if (a.degrees != b.degrees) return a.degrees < b.degrees;
        return a.constants < b.constants;
    });
    int expected = detail::divisor_count(k - 1) + 3;
    if (static_cast<int>(out.size()) != expected)
        throw consistency_error("enumerate_prime_clones: count disagrees with the divisor formula");
    return out;
}

// ---------------------------------------------------------------------------
// Splitting maps
// ---------------------------------------------------------------------------

namespace detail {

inline bool slots_below_constants(const std::vector<Clonoid>& slots) {
    for (const auto& c : slots) {
        Clonoid consts = constants_clonoid(c.dst, c.src);
        if (!consts.contains(c)) return false;
    }
    return true;
}

}  // namespace detail

/// True iff the clone preserves both coordinate congruences, i.e. every
/// realized coefficient is constant on both sides.
inline bool preserves_diamond(const CloneSignature& sig) {
    return detail::slots_below_constants(sig.rho) && detail::slots_below_constants(sig.psi);
}

/// Restriction maps onto the two coordinate clones, defined for
/// diamond-preserving clones: the Z_p side keeps the Z_p outputs of members
/// on inputs with zero Z_q part, symmetrically for Z_q. Computed from the
/// catalog, whose restrictions generate the restriction clone.
inline std::pair<PrimeCloneDescriptor, PrimeCloneDescriptor> independent_split(
    const CloneSignature& sig) {
    GeneratorCatalog precheck = generator_catalog(sig);
    bool viaCatalog = true;
    for (const auto& g : precheck.functions)
        viaCatalog &= preserves_congruence(g, CongruenceLabel::Pi1) &&
                      preserves_congruence(g, CongruenceLabel::Pi2);
    if (viaCatalog != preserves_diamond(sig))
        throw consistency_error("independent_split: diamond routes disagree");
    if (!viaCatalog)
        throw std::invalid_argument("independent_split: clone does not preserve the diamond");
    GeneratorCatalog cat = std::move(precheck);
    PrimeCloneDescriptor cp, cq;
    cp.mod = sig.pp.p;
    cq.mod = sig.pp.q;
    for (const auto& g : cat.functions) {
        std::vector<std::uint8_t> ptab(g.x_count()), qtab(g.y_count());
        for (std::size_t x = 0; x < g.x_count(); ++x) ptab[x] = g.at(x, 0)[0];
        for (std::size_t y = 0; y < g.y_count(); ++y) qtab[y] = g.at(0, y)[1];
        cp.add_table(ptab, g.arity);
        cq.add_table(qtab, g.arity);
    }
    cp.close();
    cq.close();
    return {cp, cq};
}

/// Inverse pairing: the clone of all pairs (f1(x), f2(y)) with f1, f2 drawn
/// from the two coordinate clones, reconstructed through its generators.
inline CloneSignature diamond_reconstruct(const PrimePair& pp, const PrimeCloneDescriptor& cp,
                                          const PrimeCloneDescriptor& cq, int workArity) {
    std::vector<MixedFun> gens;
    auto addFor = [&](const PrimeCloneDescriptor& d, bool flip) {
        PrimePair side = flip ? pp.swapped() : pp;
        if (d.constants) {
            MixedFun c = MixedFun::constant(side, 1, 1, 0);
            gens.push_back(flip ? c.flipped() : c);
        }
        for (int deg : d.degrees) {
            CoeffFun one = CoeffFun::constant(side.q, side.p, 1, 1);
            Exponent ones(static_cast<std::size_t>(deg), 1);
            MixedFun g = induced_monomial(side, one, ones, deg);
            gens.push_back(flip ? g.flipped() : g);
        }
    };
    addFor(cp, false);
    addFor(cq, true);
    return clg_signature(pp, gens, workArity);
}

/// True iff every realized p-side coefficient is constant and the q side
/// realizes no monomial of degree two or more: exactly the clones whose
/// members are coordinate-wise a Z_p polynomial and a Z_q-affine form.
inline bool preserves_pi1_abelian(const CloneSignature& sig) {
    if (!detail::slots_below_constants(sig.rho)) return false;
    for (std::size_t j = 2; j < sig.psi.size(); ++j)
        if (!sig.psi[j].is_zero()) return false;
    return true;
}

struct Pi1Profile {
    PrimeCloneDescriptor pClone;
    Clonoid psi1;
    Clonoid psi0;

    auto operator<=>(const Pi1Profile&) const = default;
};

/// The injective triple for clones preserving pi1 with abelian first
/// kernel: the Z_p coordinate clone together with the two low psi slots.
inline Pi1Profile pi1_profile(const CloneSignature& sig) {
    GeneratorCatalog cat = generator_catalog(sig);
    bool viaCatalog = true;
    for (const auto& g : cat.functions)
        viaCatalog &= preserves_congruence(g, CongruenceLabel::Pi1) &&
                      preserves_relation(g, {CongruenceLabel::Pi1, CongruenceLabel::Pi1,
                                             CongruenceLabel::Zero});
    if (viaCatalog != preserves_pi1_abelian(sig))
        throw consistency_error("pi1_profile: family routes disagree");
    if (!viaCatalog)
        throw std::invalid_argument("pi1_profile: clone outside the pi1 abelian family");
    PrimeCloneDescriptor cp;
    cp.mod = sig.pp.p;
    for (const auto& g : cat.functions) {
        std::vector<std::uint8_t> ptab(g.x_count());
        for (std::size_t x = 0; x < g.x_count(); ++x) ptab[x] = g.at(x, 0)[0];
        cp.add_table(ptab, g.arity);
    }
    cp.close();
    return Pi1Profile{cp, sig.psi[1], sig.psi[0]};
}

}  // namespace cloneforge
