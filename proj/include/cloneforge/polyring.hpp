#pragma once

#include <map>
#include <optional>
#include <vector>

#include "cloneforge/common.hpp"
#include "cloneforge/funtab.hpp"
#include "cloneforge/linalg.hpp"

namespace cloneforge {

// Exponent vectors inside polynomials are stored trimmed (no trailing
// zeros) with entries in [0, p-1].

namespace detail {
inline void trim_exponent(Exponent& e) {
    while (!e.empty() && e.back() == 0) e.pop_back();
}
inline int total_degree(const Exponent& e) {
    int d = 0;
    for (auto v : e) d += v;
    return d;
}
/// x^p = x: exponents above p-1 wrap back into [1, p-1].
inline int reduce_exponent(int e, int p) {
    if (e <= 0) return 0;
    return (e - 1) % (p - 1) + 1;
}
}  // namespace detail

/// Element of the polynomial ring over R = Z_p^(Z_q^n) with all variable
/// exponents at most p-1; the canonical representative of its induced
/// function. Coefficients are full function tables Z_q^n -> Z_p.
struct RPoly {
    PrimePair pp;
    int coeffArity = 0;
    std::map<Exponent, CoeffFun> terms;

    static RPoly zero(const PrimePair& pp, int coeffArity) { return RPoly{pp, coeffArity, {}}; }

    static RPoly monomial(const PrimePair& pp, int coeffArity, Exponent e, CoeffFun r) {
        if (r.src != pp.q || r.dst != pp.p || r.arity != coeffArity)
            throw std::invalid_argument("RPoly::monomial: coefficient shape mismatch");
        RPoly f{pp, coeffArity, {}};
        detail::trim_exponent(e);
        for (auto v : e)
            if (v > pp.p - 1) throw std::invalid_argument("RPoly::monomial: exponent above p-1");
        if (!r.is_zero()) f.terms.emplace(std::move(e), std::move(r));
        return f;
    }

    bool is_zero() const { return terms.empty(); }

    int max_index() const {  // highest live variable index (0 when constant)
        int m = 0;
        for (const auto& [e, r] : terms) m = std::max(m, static_cast<int>(e.size()));
        return m;
    }

    int max_total_degree() const {
        int d = 0;
        for (const auto& [e, r] : terms) d = std::max(d, detail::total_degree(e));
        return d;
    }

    std::vector<Exponent> degrees() const {
        std::vector<Exponent> out;
        out.reserve(terms.size());
        for (const auto& [e, r] : terms) out.push_back(e);
        return out;
    }

    void add_term(Exponent e, const CoeffFun& r) {
        detail::trim_exponent(e);
        auto it = terms.find(e);
        if (it == terms.end()) {
            if (!r.is_zero()) terms.emplace(std::move(e), r);
            return;
        }
        for (std::size_t i = 0; i < r.table.size(); ++i)
            it->second.table[i] = static_cast<std::uint8_t>((it->second.table[i] + r.table[i]) % pp.p);
        if (it->second.is_zero()) terms.erase(it);
    }

    friend RPoly operator+(const RPoly& a, const RPoly& b) {
        RPoly out = a;
        for (const auto& [e, r] : b.terms) out.add_term(e, r);
        return out;
    }

    /// Scalar multiple over Z_p.
    RPoly scaled(int c) const {
        c %= pp.p;
        if (c < 0) c += pp.p;
        RPoly out = zero(pp, coeffArity);
        for (const auto& [e, r] : terms) {
            CoeffFun s = r;
            for (auto& v : s.table) v = static_cast<std::uint8_t>(v * c % pp.p);
            out.add_term(e, s);
        }
        return out;
    }

    /// Ring product; coefficients multiply pointwise in R, exponents add and
    /// then reduce via x^p = x.
    friend RPoly operator*(const RPoly& a, const RPoly& b) {
        RPoly out = zero(a.pp, a.coeffArity);
        for (const auto& [ea, ra] : a.terms)
            for (const auto& [eb, rb] : b.terms) {
                Exponent e(std::max(ea.size(), eb.size()), 0);
                for (std::size_t i = 0; i < e.size(); ++i) {
                    int s = (i < ea.size() ? ea[i] : 0) + (i < eb.size() ? eb[i] : 0);
                    e[i] = static_cast<std::uint8_t>(detail::reduce_exponent(s, a.pp.p));
                }
                CoeffFun r = ra;
                for (std::size_t i = 0; i < r.table.size(); ++i)
                    r.table[i] = static_cast<std::uint8_t>(r.table[i] * rb.table[i] % a.pp.p);
                out.add_term(std::move(e), r);
            }
        return out;
    }

    RPoly power(int k) const {
        RPoly acc = monomial(pp, coeffArity, {}, CoeffFun::constant(pp.q, pp.p, coeffArity, 1));
        for (int i = 0; i < k; ++i) acc = acc * *this;
        return acc;
    }

    /// Value of the induced Z_p-part at x (mixed-radix over max_index vars,
    /// least significant first) and y (mixed-radix over coeffArity).
    int eval(std::size_t xIdx, std::size_t yIdx) const {
        int acc = 0;
        for (const auto& [e, r] : terms) {
            int mono = r.table[yIdx];
            std::size_t xv = xIdx;
            for (std::size_t i = 0; i < e.size() && mono != 0; ++i) {
                int xd = static_cast<int>(xv % static_cast<std::size_t>(pp.p));
                xv /= static_cast<std::size_t>(pp.p);
                for (int k = 0; k < e[i]; ++k) mono = mono * xd % pp.p;
            }
            // skip remaining digits; exponents beyond e.size() are zero
            acc += mono;
        }
        return acc % pp.p;
    }

    /// The s-ary induced function (zero Z_q output).
    MixedFun induced(int s) const {
        int need = std::max(max_index(), coeffArity);
        if (s < need) throw std::invalid_argument("RPoly::induced: arity too small");
        MixedFun out = MixedFun::constant(pp, s, 0, 0);
        for (const auto& [e, r] : terms) {
            MixedFun part = induced_monomial(pp, r, e, s);
            for (std::size_t i = 0; i < out.table.size(); ++i)
                out.table[i][0] = static_cast<std::uint8_t>((out.table[i][0] + part.table[i][0]) % pp.p);
        }
        return out;
    }

    auto operator<=>(const RPoly&) const = default;
};

/// Canonical representative of a polynomial given with unrestricted
/// exponents: exponents wrap via x^p = x, like terms merge, zero
/// coefficients vanish. The induced function is unchanged.
inline RPoly reduce(const PrimePair& pp, int coeffArity,
                    const std::vector<std::pair<std::vector<int>, CoeffFun>>& rawTerms) {
    RPoly out = RPoly::zero(pp, coeffArity);
    for (const auto& [rawExp, r] : rawTerms) {
        if (r.src != pp.q || r.dst != pp.p || r.arity != coeffArity)
            throw std::invalid_argument("reduce: coefficient shape mismatch");
        Exponent e(rawExp.size());
        for (std::size_t i = 0; i < rawExp.size(); ++i) {
            if (rawExp[i] < 0) throw std::invalid_argument("reduce: negative exponent");
            e[i] = static_cast<std::uint8_t>(detail::reduce_exponent(rawExp[i], pp.p));
        }
        out.add_term(std::move(e), r);
    }
    return out;
}

/// g composed at the slots named by the strictly increasing index vector b
/// (1-based), every other variable kept in place, then reduced.
inline RPoly compose_at(const RPoly& f, const std::vector<int>& slots,
                        const std::vector<RPoly>& gs) {
    if (slots.size() != gs.size())
        throw std::invalid_argument("compose_at: slot/argument count mismatch");
    for (std::size_t k = 0; k < slots.size(); ++k) {
        if (slots[k] < 1 || slots[k] > f.max_index())
            throw std::invalid_argument("compose_at: slot outside the variable range");
        if (k > 0 && slots[k] <= slots[k - 1])
            throw std::invalid_argument("compose_at: slots must be strictly increasing");
        if (!(gs[k].pp == f.pp) || gs[k].coeffArity != f.coeffArity)
            throw std::invalid_argument("compose_at: argument shape mismatch");
    }
    RPoly out = RPoly::zero(f.pp, f.coeffArity);
    for (const auto& [e, r] : f.terms) {
        Exponent keep = e;
        for (std::size_t k = 0; k < slots.size(); ++k) {
            std::size_t idx = static_cast<std::size_t>(slots[k] - 1);
            if (idx < keep.size()) keep[idx] = 0;
        }
        RPoly acc = RPoly::monomial(f.pp, f.coeffArity, keep, r);
        for (std::size_t k = 0; k < slots.size() && !acc.is_zero(); ++k) {
            std::size_t idx = static_cast<std::size_t>(slots[k] - 1);
            int exp = idx < e.size() ? e[idx] : 0;
            if (exp > 0) acc = acc * gs[k].power(exp);
        }
        out = out + acc;
    }
    return out;
}

/// The Z_p-linear form sum_i a_i x_i as a polynomial.
inline RPoly linear_form(const PrimePair& pp, int coeffArity, const std::vector<std::uint8_t>& a) {
    RPoly out = RPoly::zero(pp, coeffArity);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        Exponent e(i + 1, 0);
        e[i] = 1;
        out.add_term(std::move(e), CoeffFun::constant(pp.q, pp.p, coeffArity, a[i]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Derivations: recorded applications of the two generation rules
// ---------------------------------------------------------------------------

/// One rule application. LinComb: result = a*poly[i] + b*poly[j].
/// Subst: result = poly[i] with the linear form `form` substituted into
/// variable `slot` (1-based); this is the only substitution shape the
/// generation rules admit.
struct DerivationStep {
    enum class Kind { LinComb, Subst };
    Kind kind = Kind::LinComb;
    int i = 0, j = 0;
    std::uint8_t a = 0, b = 0;
    int slot = 0;
    std::vector<std::uint8_t> form;
    RPoly result;
};

/// A derivation from `start`; step k produces poly index k+1, poly 0 is the
/// start. Replaying recomputes every step and checks the recorded results.
struct Derivation {
    RPoly start;
    std::vector<DerivationStep> steps;

    const RPoly& final() const { return steps.empty() ? start : steps.back().result; }

    RPoly replay() const {
        std::vector<RPoly> pool{start};
        for (const auto& st : steps) {
            RPoly r = st.kind == DerivationStep::Kind::LinComb
                          ? pool[static_cast<std::size_t>(st.i)].scaled(st.a) +
                                pool[static_cast<std::size_t>(st.j)].scaled(st.b)
                          : compose_at(pool[static_cast<std::size_t>(st.i)], {st.slot},
                                       {linear_form(start.pp, start.coeffArity, st.form)});
            if (!(r == st.result)) throw consistency_error("Derivation::replay: recorded step mismatch");
            pool.push_back(std::move(r));
        }
        return pool.back();
    }
};

namespace detail {

struct DerivationBuilder {
    Derivation der;
    int cur = 0;  // index of the newest poly

    explicit DerivationBuilder(RPoly start) { der.start = std::move(start); }

    const RPoly& poly(int idx) const {
        return idx == 0 ? der.start : der.steps[static_cast<std::size_t>(idx - 1)].result;
    }
    const RPoly& current() const { return poly(cur); }

    int subst(int srcIdx, int slot, std::vector<std::uint8_t> form) {
        DerivationStep st;
        st.kind = DerivationStep::Kind::Subst;
        st.i = srcIdx;
        st.slot = slot;
        st.form = std::move(form);
        st.result = compose_at(poly(srcIdx), {slot},
                               {linear_form(der.start.pp, der.start.coeffArity, st.form)});
        der.steps.push_back(std::move(st));
        cur = static_cast<int>(der.steps.size());
        return cur;
    }

    int lincomb(std::uint8_t a, int i, std::uint8_t b, int j) {
        DerivationStep st;
        st.kind = DerivationStep::Kind::LinComb;
        st.a = a;
        st.i = i;
        st.b = b;
        st.j = j;
        st.result = poly(i).scaled(a) + poly(j).scaled(b);
        der.steps.push_back(std::move(st));
        cur = static_cast<int>(der.steps.size());
        return cur;
    }
};

inline std::vector<std::uint8_t> unit_form(int index) {  // x_index
    std::vector<std::uint8_t> a(static_cast<std::size_t>(index), 0);
    a[static_cast<std::size_t>(index - 1)] = 1;
    return a;
}

/// Cancels the companion terms around a full-support monomial: while other
/// terms remain, pick one, find a variable in [1..d] it misses, and subtract
/// the zero-substitution at that slot. Terms lacking the variable cancel and
/// the monomial x_1..x_d survives untouched.
inline void strip_companions(DerivationBuilder& b, int d) {
    const Exponent target(static_cast<std::size_t>(d), 1);
    while (b.current().terms.size() > 1) {
        int slot = 0;
        for (const auto& [e, r] : b.current().terms) {
            if (e == target) continue;
            for (int l = 1; l <= d; ++l) {
                if (static_cast<std::size_t>(l) > e.size() || e[static_cast<std::size_t>(l - 1)] == 0) {
                    slot = l;
                    break;
                }
            }
            break;
        }
        if (slot == 0) throw consistency_error("strip_companions: no cancellable variable");
        int src = b.cur;
        int zeroed = b.subst(src, slot, std::vector<std::uint8_t>{0});
        b.lincomb(1, src, static_cast<std::uint8_t>(b.current().pp.p - 1), zeroed);
    }
}

}  // namespace detail

/// Isolates a single monomial from h + g where h = r * x_1..x_d, g has
/// total degree at most d, no term with exponent pattern (1,..,1) on the
/// first d variables, and the hypotheses of the cancellation argument hold.
/// Returns the derivation from h + g down to h.
inline Derivation strip_tail(const RPoly& h, const RPoly& g) {
    if (h.terms.size() != 1) throw std::invalid_argument("strip_tail: h must be one monomial");
    const auto& [he, hr] = *h.terms.begin();
    int d = detail::total_degree(he);
    for (auto v : he)
        if (v > 1) throw std::invalid_argument("strip_tail: h must be multilinear x_1..x_d");
    if (static_cast<int>(he.size()) != d)
        throw std::invalid_argument("strip_tail: h must use exactly x_1..x_d");
    if (g.max_total_degree() > d)
        throw std::invalid_argument("strip_tail: tail degree above the monomial degree");
    if (g.terms.count(he))
        throw std::invalid_argument("strip_tail: tail contains the monomial's exponent");

    detail::DerivationBuilder b(h + g);
    // zero every variable of the tail outside x_1..x_d, one slot at a time
    for (int v = b.current().max_index(); v > d; --v) {
        bool live = false;
        for (const auto& [e, r] : b.current().terms)
            if (static_cast<std::size_t>(v) <= e.size() && e[static_cast<std::size_t>(v - 1)] > 0) live = true;
        if (live) b.subst(b.cur, v, std::vector<std::uint8_t>{0});
    }
    detail::strip_companions(b, d);
    if (!(b.current() == h)) throw consistency_error("strip_tail: did not reach the monomial");
    return b.der;
}

namespace detail {

/// Lexicographically smallest exponent among the maximal-total-degree terms.
inline Exponent leading_exponent(const RPoly& f) {
    int d = f.max_total_degree();
    for (const auto& [e, r] : f.terms)
        if (total_degree(e) == d) return e;
    throw std::invalid_argument("leading_exponent: zero polynomial");
}

/// Derives coeff * x_1..x_d from `from` (index fromIdx in b), where the
/// leading exponent s has total degree d: repeated variable splitting
/// x_j -> x_j + x_fresh with binomial bookkeeping, then zeroing and
/// renaming onto x_1..x_d, then companion stripping.
inline void extract_full_support(DerivationBuilder& b, int d) {
    const int p = b.current().pp.p;
    Exponent t = leading_exponent(b.current());
    CoeffFun r = b.current().terms.at(t);

    // split repeated variables until the target monomial is multilinear
    while (true) {
        int j = -1;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] >= 2) {
                j = static_cast<int>(i);
                break;
            }
        if (j < 0) break;
        int u = t[static_cast<std::size_t>(j)];
        int fresh = b.current().max_index() + 1;
        std::vector<std::uint8_t> form(static_cast<std::size_t>(fresh), 0);
        form[static_cast<std::size_t>(j)] = 1;
        form[static_cast<std::size_t>(fresh - 1)] = 1;
        b.subst(b.cur, j + 1, std::move(form));
        t.resize(static_cast<std::size_t>(fresh), 0);
        t[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(u - 1);
        t[static_cast<std::size_t>(fresh - 1)] = 1;
        int inv = inv_mod(u, p);
        if (inv != 1) b.lincomb(static_cast<std::uint8_t>(inv), b.cur, 0, b.cur);
        auto it = b.current().terms.find(t);
        if (it == b.current().terms.end() || !(it->second == r))
            throw consistency_error("extract_full_support: split lost the target coefficient");
    }

    // zero every variable outside the target's support
    std::vector<bool> support(static_cast<std::size_t>(b.current().max_index()) + 1, false);
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] > 0) support[i + 1] = true;
    for (int v = b.current().max_index(); v >= 1; --v) {
        if (support[static_cast<std::size_t>(v)]) continue;
        bool live = false;
        for (const auto& [e, rr] : b.current().terms)
            if (static_cast<std::size_t>(v) <= e.size() && e[static_cast<std::size_t>(v - 1)] > 0) live = true;
        if (live) b.subst(b.cur, v, std::vector<std::uint8_t>{0});
    }

    // rename the support onto x_1..x_d; targets are never current sources
    std::vector<int> sources;
    for (int v = 1; v < static_cast<int>(support.size()); ++v)
        if (support[static_cast<std::size_t>(v)]) sources.push_back(v);
    std::vector<bool> inPlace(static_cast<std::size_t>(d) + 1, false);
    std::vector<int> pending;
    for (int v : sources)
        if (v <= d) inPlace[static_cast<std::size_t>(v)] = true;
    for (int v : sources)
        if (v > d) pending.push_back(v);
    for (int v : pending) {
        int target = 1;
        while (inPlace[static_cast<std::size_t>(target)]) ++target;
        b.subst(b.cur, v, unit_form(target));
        inPlace[static_cast<std::size_t>(target)] = true;
    }
    strip_companions(b, d);
}

/// Appends the steps turning coeff * x_1..x_d into coeff * x^target where
/// the target has total degree d: first park the d slots on fresh
/// variables, then merge them onto the target positions.
inline void rename_to_target(DerivationBuilder& b, int d, const Exponent& target) {
    if (total_degree(target) != d) throw std::invalid_argument("rename_to_target: degree mismatch");
    if (d == 0) return;
    std::vector<int> positions;  // target variable for each of the d slots
    for (std::size_t i = 0; i < target.size(); ++i)
        for (int k = 0; k < target[i]; ++k) positions.push_back(static_cast<int>(i) + 1);
    int base = std::max(b.current().max_index(), static_cast<int>(target.size()));
    bool direct = true;  // fast path: no target position collides with a slot
    for (std::size_t i = 0; i < positions.size(); ++i)
        if (positions[i] <= d && positions[i] != static_cast<int>(i) + 1) direct = false;
    if (direct) {
        for (std::size_t i = 0; i < positions.size(); ++i)
            if (positions[i] != static_cast<int>(i) + 1) b.subst(b.cur, static_cast<int>(i) + 1, unit_form(positions[i]));
        return;
    }
    for (int i = 1; i <= d; ++i) b.subst(b.cur, i, unit_form(base + i));
    for (int i = d; i >= 1; --i)
        b.subst(b.cur, base + i, unit_form(positions[static_cast<std::size_t>(i - 1)]));
}

}  // namespace detail

/// From a nonzero polynomial, derive coeff * x_1..x_d where d is the
/// maximal total degree and coeff belongs to the lexicographically first
/// maximal-degree term (or the constant coefficient itself when d = 0).
inline std::pair<RPoly, Derivation> extract_leading(const RPoly& f) {
    if (f.is_zero()) throw std::invalid_argument("extract_leading: zero polynomial");
    int d = f.max_total_degree();
    if (d == 0) {
        Derivation der;
        der.start = f;
        return {f, der};
    }
    detail::DerivationBuilder b(f);
    detail::extract_full_support(b, d);
    return {b.current(), b.der};
}

/// Derivation from f to its own term coeff * x^target; the target exponent
/// must occur in f. Follows the induction on the number of terms: extract
/// the leading monomial, subtract it, recurse.
inline Derivation extract_monomial(const RPoly& f, Exponent target) {
    detail::trim_exponent(target);
    if (!f.terms.count(target))
        throw std::invalid_argument("extract_monomial: target exponent not present");
    if (f.terms.size() == 1) {
        Derivation der;
        der.start = f;
        return der;
    }
    detail::DerivationBuilder b(f);
    int currentIdx = 0;
    while (true) {
        RPoly cur = b.poly(currentIdx);
        Exponent top = detail::leading_exponent(cur);
        if (cur.terms.size() == 1) {
            if (!(top == target)) throw consistency_error("extract_monomial: lost the target");
            break;
        }
        int d = detail::total_degree(top);
        // derive coeff(top) * x^top, then either stop or subtract it
        b.cur = currentIdx;
        detail::extract_full_support(b, d);
        detail::rename_to_target(b, d, top);
        int isolatedIdx = b.cur;
        if (top == target) break;
        b.lincomb(1, currentIdx, static_cast<std::uint8_t>(f.pp.p - 1), isolatedIdx);
        currentIdx = b.cur;
    }
    if (!(b.current().terms.size() == 1 && b.current().terms.begin()->first == target))
        throw consistency_error("extract_monomial: did not isolate the target");
    return b.der;
}

// ---------------------------------------------------------------------------
// Clone-level composition witnesses
// ---------------------------------------------------------------------------

/// A replayable sequence of table compositions: pool[0..seedCount) are given
/// functions, every step appends compose(pool[outer], pool[args...]).
struct CloneWitness {
    PrimePair pp;
    std::vector<MixedFun> pool;
    std::size_t seedCount = 0;
    struct Step {
        int outer = 0;
        std::vector<int> args;
    };
    std::vector<Step> steps;

    const MixedFun& final() const { return pool.back(); }

    /// Recomputes every step from the seeds and checks the recorded pool.
    void replay() const {
        std::vector<MixedFun> work(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(seedCount));
        for (const auto& st : steps) {
            std::vector<MixedFun> args;
            args.reserve(st.args.size());
            for (int a : st.args) args.push_back(work[static_cast<std::size_t>(a)]);
            work.push_back(compose(work[static_cast<std::size_t>(st.outer)], args));
            if (!(work.back() == pool[work.size() - 1]))
                throw consistency_error("CloneWitness::replay: recorded step mismatch");
        }
        if (work.size() != pool.size()) throw consistency_error("CloneWitness::replay: pool size mismatch");
    }
};

namespace detail {

struct WitnessBuilder {
    CloneWitness w;

    int add_seed(MixedFun f) {
        if (!w.steps.empty()) throw consistency_error("WitnessBuilder: seeds must precede steps");
        w.pool.push_back(std::move(f));
        w.seedCount = w.pool.size();
        return static_cast<int>(w.pool.size()) - 1;
    }

    int add_raw(MixedFun f) {  // linear helpers are seeds too
        return add_seed(std::move(f));
    }

    int compose_step(int outer, std::vector<int> args) {
        std::vector<MixedFun> fs;
        fs.reserve(args.size());
        for (int a : args) fs.push_back(w.pool[static_cast<std::size_t>(a)]);
        w.pool.push_back(compose(w.pool[static_cast<std::size_t>(outer)], fs));
        w.steps.push_back({outer, std::move(args)});
        return static_cast<int>(w.pool.size()) - 1;
    }
};

}  // namespace detail

/// Clone-level witness that the induced monomial coeff * x^target is
/// generated by coeff * x_1..x_d when the total degree of the target is
/// congruent to d modulo p-1 (d >= 2). Self-composition raises the degree
/// in steps of d-1; the first argument is the previous stage plus the
/// linear map (0, y_1), which keeps the coefficient slot fed, so each raise
/// multiplies the coefficient by itself and after a multiple of p-1 raises
/// it returns to coeff. Variable collapsing lowers the degree in steps of
/// p-1 and a final renaming merges onto the target exponent. Replaying the
/// steps in table space reproduces the target's induced function exactly.
inline CloneWitness degree_shift_witness(const PrimePair& pp, const CoeffFun& r, int d,
                                         const Exponent& targetIn) {
    Exponent target = targetIn;
    detail::trim_exponent(target);
    if (d < 2) throw std::invalid_argument("degree_shift_witness: base degree must be >= 2");
    if (target.empty()) throw std::invalid_argument("degree_shift_witness: target must be nonzero");
    if (r.src != pp.q || r.dst != pp.p)
        throw std::invalid_argument("degree_shift_witness: coefficient orientation mismatch");
    for (auto e : target)
        if (e > pp.p - 1) throw std::invalid_argument("degree_shift_witness: exponent above p-1");
    int u = detail::total_degree(target);
    if ((u - d) % (pp.p - 1) != 0)
        throw std::invalid_argument("degree_shift_witness: degree not congruent to the base");
    if (r.arity > std::min(d, u))
        throw std::invalid_argument("degree_shift_witness: coefficient arity above the degrees");

    detail::WitnessBuilder wb;
    wb.w.pp = pp;
    Exponent ones(static_cast<std::size_t>(d), 1);
    int base = wb.add_seed(induced_monomial(pp, r, ones, d));

    // number of self-compositions: k-1 raises with k = 1 mod (p-1), so the
    // coefficient power lands back on the coefficient itself
    int k = 1;
    while (d + (k - 1) * (d - 1) < u) k += pp.p - 1;
    int finalArity = std::max(static_cast<int>(target.size()), r.arity);
    auto zero_vec = [](int len) { return std::vector<int>(static_cast<std::size_t>(len), 0); };

    // seed every helper map before the first composition step
    int addMap = -1;
    std::vector<std::vector<int>> projSets;   // extension projections per raise
    std::vector<std::vector<int>> tailSets;   // slot-i args (x_{D+i-1}, y_i) per raise
    std::vector<int> yFeeds;
    if (k > 1) {
        std::vector<int> two(2, 1);
        addMap = wb.add_seed(linear_map(pp, ModVec::make(pp.p, two), ModVec::make(pp.q, two)));
        int D = d;
        for (int step = 1; step < k; ++step) {
            int M = D + d - 1;
            std::vector<int> projs;
            for (int i = 1; i <= D; ++i) projs.push_back(wb.add_seed(MixedFun::projection(pp, M, i)));
            projSets.push_back(std::move(projs));
            std::vector<int> tails;
            for (int i = 2; i <= d; ++i) {
                auto av = zero_vec(M), bv = zero_vec(M);
                av[static_cast<std::size_t>(D + i - 2)] = 1;
                bv[static_cast<std::size_t>(i - 1)] = 1;
                tails.push_back(
                    wb.add_seed(linear_map(pp, ModVec::make(pp.p, av), ModVec::make(pp.q, bv))));
            }
            tailSets.push_back(std::move(tails));
            auto bv = zero_vec(M);
            bv[0] = 1;
            yFeeds.push_back(wb.add_seed(
                linear_map(pp, ModVec::make(pp.p, zero_vec(M)), ModVec::make(pp.q, bv))));
            D = M;
        }
    }
    std::vector<int> collapseArgs, renameArgs;
    int Dfinal = d + (k - 1) * (d - 1);
    if (Dfinal > u) {
        for (int i = 1; i <= Dfinal; ++i) {
            if (i <= u) {
                collapseArgs.push_back(wb.add_seed(MixedFun::projection(pp, u, i)));
            } else {
                auto av = zero_vec(u), bv = zero_vec(u);
                av[0] = 1;
                bv[0] = 1;
                collapseArgs.push_back(
                    wb.add_seed(linear_map(pp, ModVec::make(pp.p, av), ModVec::make(pp.q, bv))));
            }
        }
    }
    bool renameNeeded =
        !(static_cast<int>(target.size()) == u &&
          std::all_of(target.begin(), target.end(), [](std::uint8_t e) { return e == 1; })) ||
        finalArity != u;
    if (renameNeeded) {
        std::vector<int> positions;
        for (std::size_t i = 0; i < target.size(); ++i)
            for (int c = 0; c < target[i]; ++c) positions.push_back(static_cast<int>(i) + 1);
        for (int i = 1; i <= u; ++i) {
            auto av = zero_vec(finalArity), bv = zero_vec(finalArity);
            av[static_cast<std::size_t>(positions[static_cast<std::size_t>(i - 1)] - 1)] = 1;
            if (i <= finalArity) bv[static_cast<std::size_t>(i - 1)] = 1;
            renameArgs.push_back(
                wb.add_seed(linear_map(pp, ModVec::make(pp.p, av), ModVec::make(pp.q, bv))));
        }
    }

    // raise: next = base(prev + (0, y_1), (x_{D+1}, y_2), ..., (x_M, y_d))
    int cur = base;
    int D = d;
    for (int step = 1; step < k; ++step) {
        int M = D + d - 1;
        const auto& projs = projSets[static_cast<std::size_t>(step - 1)];
        const auto& tails = tailSets[static_cast<std::size_t>(step - 1)];
        std::vector<int> extendArgs(projs.begin(), projs.end());
        int ext = wb.compose_step(cur, std::move(extendArgs));
        int fed = wb.compose_step(addMap, {ext, yFeeds[static_cast<std::size_t>(step - 1)]});
        std::vector<int> args;
        args.push_back(fed);
        for (int i = 2; i <= d; ++i) args.push_back(tails[static_cast<std::size_t>(i - 2)]);
        cur = wb.compose_step(base, std::move(args));
        D = M;
    }
    if (D > u) {
        cur = wb.compose_step(cur, collapseArgs);
        D = u;
    }
    if (renameNeeded) cur = wb.compose_step(cur, renameArgs);
    return wb.w;
}

// ---------------------------------------------------------------------------
// Closure oracle
// ---------------------------------------------------------------------------

enum class OracleResult { Yes, No, Indeterminate };

struct OracleCaps {
    int maxIndex = 6;
    std::size_t maxTerms = 4096;
};

/// Breadth-first closure of S under the two generation rules, restricted to
/// linear forms supported on x_1..x_maxIndex. Linear combinations are kept
/// as a span, so the state space is a subspace of a fixed finite vector
/// space and the closure always terminates. Yes means derivable within the
/// caps. No is only reported when the total-degree invariant rules the
/// target out independently of any cap (substituting linear forms never
/// raises total degree); otherwise a miss is Indeterminate.
inline OracleResult oracle_member(const std::vector<RPoly>& S, const RPoly& f, OracleCaps caps) {
    if (S.empty()) throw std::invalid_argument("oracle_member: empty generator set");
    const PrimePair pp = S[0].pp;
    const int n = S[0].coeffArity;
    int maxTD = 0;
    for (const auto& g : S) {
        if (!(g.pp == pp) || g.coeffArity != n)
            throw std::invalid_argument("oracle_member: mixed generator shapes");
        maxTD = std::max(maxTD, g.max_total_degree());
    }
    if (f.max_total_degree() > maxTD) return OracleResult::No;

    std::size_t expSpace = detail::ipow(static_cast<std::size_t>(pp.p), static_cast<unsigned>(caps.maxIndex));
    std::size_t ySpace = detail::ipow(static_cast<std::size_t>(pp.q), static_cast<unsigned>(n));
    if (expSpace * ySpace > (1u << 21)) throw resource_error("oracle_member: state space too large");

    auto expIndex = [&](const Exponent& e) -> std::size_t {
        std::size_t idx = 0, w = 1;
        for (int i = 0; i < caps.maxIndex; ++i) {
            int v = static_cast<std::size_t>(i) < e.size() ? e[static_cast<std::size_t>(i)] : 0;
            idx += w * static_cast<std::size_t>(v);
            w *= static_cast<std::size_t>(pp.p);
        }
        return idx;
    };
    auto encode = [&](const RPoly& g) {
        detail::Row row(expSpace * ySpace, 0);
        for (const auto& [e, r] : g.terms) {
            std::size_t base = expIndex(e) * ySpace;
            for (std::size_t y = 0; y < ySpace; ++y) row[base + y] = r.table[y];
        }
        return row;
    };

    for (const auto& g : S)
        if (g.max_index() > caps.maxIndex) return OracleResult::Indeterminate;
    bool truncated = false;

    detail::Echelon span(pp.p, expSpace * ySpace);
    std::vector<RPoly> work = S;
    for (const auto& g : S) span.insert(encode(g));

    std::vector<std::vector<std::uint8_t>> forms;
    std::size_t formCount = detail::ipow(static_cast<std::size_t>(pp.p), static_cast<unsigned>(caps.maxIndex));
    for (std::size_t code = 0; code < formCount; ++code) {
        std::vector<std::uint8_t> a(static_cast<std::size_t>(caps.maxIndex));
        std::size_t c = code;
        for (auto& v : a) {
            v = static_cast<std::uint8_t>(c % static_cast<std::size_t>(pp.p));
            c /= static_cast<std::size_t>(pp.p);
        }
        forms.push_back(std::move(a));
    }

    while (!work.empty()) {
        RPoly g = std::move(work.back());
        work.pop_back();
        for (int slot = 1; slot <= g.max_index(); ++slot) {
            for (const auto& a : forms) {
                RPoly h = compose_at(g, {slot}, {linear_form(pp, n, a)});
                if (h.terms.size() > caps.maxTerms) {
                    truncated = true;
                    continue;
                }
                if (h.max_index() > caps.maxIndex) {
                    truncated = true;
                    continue;
                }
                if (span.insert(encode(h))) work.push_back(std::move(h));
            }
        }
    }

    if (f.max_index() <= caps.maxIndex && span.contains(encode(f))) return OracleResult::Yes;
    (void)truncated;
    return OracleResult::Indeterminate;
}

}  // namespace cloneforge
