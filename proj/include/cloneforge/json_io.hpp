#pragma once

#include <json.hpp>

#include <sstream>
#include <string>

#include "cloneforge/clone_sig.hpp"
#include "cloneforge/clonoid.hpp"
#include "cloneforge/funtab.hpp"
#include "cloneforge/polyring.hpp"
#include "cloneforge/zmod.hpp"

namespace cloneforge {

using nlohmann::json;

inline json factorization_to_json(const Factorization& f) {
    json arr = json::array();
    for (const auto& [poly, mult] : f.factors) {
        json coeffs = json::array();
        for (auto c : poly.coeffs) coeffs.push_back(static_cast<int>(c));
        arr.push_back({{"coeffs", coeffs}, {"multiplicity", mult}});
    }
    return arr;
}

inline json bounds_report_to_json(const BoundsReport& r) {
    return json{{"p", r.pp.p},
                {"q", r.pp.q},
                {"clonoids_pq", r.clonoids_pq},
                {"clonoids_qp", r.clonoids_qp},
                {"clone_lower", r.clone_lower},
                {"clone_upper", r.clone_upper},
                {"diamond_count", r.diamond_count},
                {"pi1_upper", r.pi1_upper},
                {"gp_factors", factorization_to_json(r.gp_factors)},
                {"gq_factors", factorization_to_json(r.gq_factors)},
                {"envelope_exponents", json::array({r.envelope_exponent_a, r.envelope_exponent_b})},
                {"envelope_consistent",
                 json::array({r.envelope_a_consistent, r.envelope_b_consistent})}};
}

inline json mixed_fun_to_json(const MixedFun& f) {
    json table = json::array();
    for (const auto& v : f.table) table.push_back(json::array({v[0], v[1]}));
    return json{{"p", f.pp.p}, {"q", f.pp.q}, {"arity", f.arity}, {"table", table}};
}

inline MixedFun mixed_fun_from_json(const json& j) {
    PrimePair pp = PrimePair::make(j.at("p").get<int>(), j.at("q").get<int>());
    MixedFun f;
    f.pp = pp;
    f.arity = j.at("arity").get<int>();
    std::size_t len = MixedFun::table_size(pp, f.arity);
    const auto& table = j.at("table");
    if (table.size() != len) throw std::invalid_argument("mixed function: table length mismatch");
    for (const auto& entry : table) {
        int vp = entry.at(0).get<int>(), vq = entry.at(1).get<int>();
        if (vp < 0 || vp >= pp.p || vq < 0 || vq >= pp.q)
            throw std::invalid_argument("mixed function: value out of range");
        f.table.push_back({static_cast<std::uint8_t>(vp), static_cast<std::uint8_t>(vq)});
    }
    return f;
}

/// One-line text form: "p q n v0p v0q v1p v1q ..." in table index order.
inline MixedFun mixed_fun_from_text(const std::string& text) {
    std::istringstream in(text);
    int p = 0, q = 0, n = 0;
    if (!(in >> p >> q >> n)) throw std::invalid_argument("mixed function: bad text header");
    PrimePair pp = PrimePair::make(p, q);
    MixedFun f;
    f.pp = pp;
    f.arity = n;
    std::size_t len = MixedFun::table_size(pp, n);
    for (std::size_t i = 0; i < len; ++i) {
        int vp = 0, vq = 0;
        if (!(in >> vp >> vq)) throw std::invalid_argument("mixed function: truncated text table");
        if (vp < 0 || vp >= p || vq < 0 || vq >= q)
            throw std::invalid_argument("mixed function: value out of range");
        f.table.push_back({static_cast<std::uint8_t>(vp), static_cast<std::uint8_t>(vq)});
    }
    return f;
}

inline json clonoid_to_json(const Clonoid& c) {
    json basis = json::array();
    for (const auto& row : c.basis) {
        json r = json::array();
        for (auto v : row) r.push_back(static_cast<int>(v));
        basis.push_back(r);
    }
    return json{{"p", c.dst}, {"q", c.src}, {"unary_basis", basis}};
}

inline Clonoid clonoid_from_json(const json& j) {
    int dst = j.at("p").get<int>(), src = j.at("q").get<int>();
    std::vector<detail::Row> rows;
    for (const auto& r : j.at("unary_basis")) {
        detail::Row row;
        for (const auto& v : r) row.push_back(static_cast<std::uint8_t>(v.get<int>() % dst));
        if (row.size() != static_cast<std::size_t>(src))
            throw std::invalid_argument("clonoid: basis row length mismatch");
        rows.push_back(std::move(row));
    }
    return detail::clonoid_from_echelon(dst, src, detail::closed_span(dst, src, rows));
}

inline json signature_to_json(const CloneSignature& s) {
    json rho = json::array(), psi = json::array();
    for (const auto& c : s.rho) rho.push_back(clonoid_to_json(c));
    for (const auto& c : s.psi) psi.push_back(clonoid_to_json(c));
    return json{{"p", s.pp.p}, {"q", s.pp.q}, {"rho", rho}, {"psi", psi}};
}

inline CloneSignature signature_from_json(const json& j) {
    CloneSignature s;
    s.pp = PrimePair::make(j.at("p").get<int>(), j.at("q").get<int>());
    for (const auto& c : j.at("rho")) s.rho.push_back(clonoid_from_json(c));
    for (const auto& c : j.at("psi")) s.psi.push_back(clonoid_from_json(c));
    if (s.rho.size() != static_cast<std::size_t>(s.pp.p) + 1 ||
        s.psi.size() != static_cast<std::size_t>(s.pp.q) + 1)
        throw std::invalid_argument("signature: slot count mismatch");
    return s;
}

/// Canonical id: hash of the canonical serialization.
inline std::string signature_id(const CloneSignature& s) {
    return detail::hex64(detail::fnv1a(signature_to_json(s).dump()));
}

inline json coeff_fun_to_json(const CoeffFun& c) {
    json t = json::array();
    for (auto v : c.table) t.push_back(static_cast<int>(v));
    return t;
}

inline json rpoly_to_json(const RPoly& f) {
    json terms = json::array();
    for (const auto& [e, r] : f.terms) {
        json exp = json::array();
        for (auto v : e) exp.push_back(static_cast<int>(v));
        terms.push_back({{"exp", exp}, {"coeff", coeff_fun_to_json(r)}});
    }
    return json{{"p", f.pp.p}, {"q", f.pp.q}, {"coeff_arity", f.coeffArity}, {"terms", terms}};
}

inline RPoly rpoly_from_json(const json& j) {
    PrimePair pp = PrimePair::make(j.at("p").get<int>(), j.at("q").get<int>());
    int n = j.at("coeff_arity").get<int>();
    std::vector<std::pair<std::vector<int>, CoeffFun>> raw;
    for (const auto& term : j.at("terms")) {
        std::vector<int> exp;
        for (const auto& v : term.at("exp")) exp.push_back(v.get<int>());
        std::vector<int> table;
        for (const auto& v : term.at("coeff")) table.push_back(v.get<int>());
        raw.emplace_back(std::move(exp), CoeffFun::make(pp.q, pp.p, n, std::move(table)));
    }
    return reduce(pp, n, raw);
}

inline json derivation_to_json(const Derivation& d) {
    json steps = json::array();
    for (const auto& st : d.steps) {
        json s;
        if (st.kind == DerivationStep::Kind::LinComb) {
            s["op"] = "lincomb";
            s["a"] = static_cast<int>(st.a);
            s["i"] = st.i;
            s["b"] = static_cast<int>(st.b);
            s["j"] = st.j;
        } else {
            s["op"] = "subst";
            s["i"] = st.i;
            s["slot"] = st.slot;
            json form = json::array();
            for (auto v : st.form) form.push_back(static_cast<int>(v));
            s["form"] = form;
        }
        s["result"] = rpoly_to_json(st.result);
        steps.push_back(std::move(s));
    }
    return json{{"start", rpoly_to_json(d.start)}, {"steps", steps},
                {"final", rpoly_to_json(d.final())}};
}

inline json witness_to_json(const CloneWitness& w) {
    json seeds = json::array();
    for (std::size_t i = 0; i < w.seedCount; ++i) seeds.push_back(mixed_fun_to_json(w.pool[i]));
    json steps = json::array();
    for (const auto& st : w.steps) {
        json args = json::array();
        for (int a : st.args) args.push_back(a);
        steps.push_back({{"outer", st.outer}, {"args", args}});
    }
    return json{{"p", w.pp.p},
                {"q", w.pp.q},
                {"seeds", seeds},
                {"steps", steps},
                {"final", mixed_fun_to_json(w.final())}};
}

inline json prime_clone_to_json(const PrimeCloneDescriptor& d) {
    json degs = json::array();
    for (int v : d.degrees) degs.push_back(v);
    return json{{"mod", d.mod}, {"constants", d.constants}, {"degrees", degs}};
}

inline json structure_report_to_json(const StructureReport& r) {
    return json{{"preserves_pi1", r.preserves_pi1},
                {"preserves_pi2", r.preserves_pi2},
                {"affine_first", r.affine_first},
                {"affine_second", r.affine_second},
                {"restriction_p_affine", r.restriction_p_affine},
                {"restriction_q_affine", r.restriction_q_affine},
                {"rho_pi1_pi1_zero", r.rho_pi1_pi1_zero},
                {"rho_pi2_pi2_zero", r.rho_pi2_pi2_zero},
                {"rho_one_one_pi1", r.rho_one_one_pi1},
                {"rho_one_one_pi2", r.rho_one_one_pi2}};
}

}  // namespace cloneforge
