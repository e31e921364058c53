#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cloneforge/clone_sig.hpp"
#include "cloneforge/json_io.hpp"

namespace cloneforge {

struct CloneFlags {
    bool preserves_pi1 = false;
    bool preserves_pi2 = false;
    bool diamond = false;
    bool polynomial = false;        // contains every constant operation
    bool comm_pi1_pi1_zero = false; // [pi1, pi1] = 0
    bool comm_one_one_pi1 = false;  // [1, 1] <= pi1
    bool comm_one_one_pi2 = false;  // [1, 1] <= pi2

    auto operator<=>(const CloneFlags&) const = default;
};

/// Flags read off the slot structure. Each has an equivalent member-level
/// relation characterization; flags_from_catalog computes that route and
/// the two are compared in the verification report.
inline CloneFlags flags_from_slots(const CloneSignature& sig) {
    CloneFlags fl;
    fl.preserves_pi1 = detail::slots_below_constants(sig.rho);
    fl.preserves_pi2 = detail::slots_below_constants(sig.psi);
    fl.diamond = fl.preserves_pi1 && fl.preserves_pi2;
    Clonoid cp = constants_clonoid(sig.pp.p, sig.pp.q);
    Clonoid cq = constants_clonoid(sig.pp.q, sig.pp.p);
    fl.polynomial = sig.rho[0].contains(cp) && sig.psi[0].contains(cq);
    fl.comm_pi1_pi1_zero = preserves_pi1_abelian(sig);
    // [1,1] <= pi1: the whole Z_p output is affine, i.e. no p-side monomial
    // of degree two and only constant low coefficients.
    auto affineSide = [](const std::vector<Clonoid>& slots) {
        Clonoid consts = constants_clonoid(slots[0].dst, slots[0].src);
        if (!consts.contains(slots[0]) || !consts.contains(slots[1])) return false;
        for (std::size_t i = 2; i < slots.size(); ++i)
            if (!slots[i].is_zero()) return false;
        return true;
    };
    fl.comm_one_one_pi1 = affineSide(sig.rho);
    fl.comm_one_one_pi2 = affineSide(sig.psi);
    return fl;
}

namespace detail {

/// Relation bits per member table, memoized: catalog members repeat heavily
/// across the lattice.
inline std::uint8_t member_relation_bits(const MixedFun& g) {
    using CL = CongruenceLabel;
    thread_local std::map<std::pair<PrimePair, std::vector<std::array<std::uint8_t, 2>>>,
                          std::uint8_t>
        cache;
    auto key = std::make_pair(g.pp, g.table);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::uint8_t bits = 0;
    bits |= preserves_congruence(g, CL::Pi1) ? 1 : 0;
    bits |= preserves_congruence(g, CL::Pi2) ? 2 : 0;
    bits |= preserves_relation(g, {CL::Pi1, CL::Pi1, CL::Zero}) ? 4 : 0;
    bits |= preserves_relation(g, {CL::One, CL::One, CL::Pi1}) ? 8 : 0;
    bits |= preserves_relation(g, {CL::One, CL::One, CL::Pi2}) ? 16 : 0;
    return cache.emplace(std::move(key), bits).first->second;
}

}  // namespace detail

inline CloneFlags flags_from_catalog(const CloneSignature& sig) {
    GeneratorCatalog cat = generator_catalog(sig);
    std::uint8_t bits = 31;
    for (const auto& g : cat.functions) bits &= detail::member_relation_bits(g);
    CloneFlags fl;
    fl.preserves_pi1 = bits & 1;
    fl.preserves_pi2 = bits & 2;
    fl.comm_pi1_pi1_zero = bits & 4;
    fl.comm_one_one_pi1 = bits & 8;
    fl.comm_one_one_pi2 = bits & 16;
    fl.diamond = fl.preserves_pi1 && fl.preserves_pi2;
    fl.polynomial = member(sig, MixedFun::constant(sig.pp, 1, 1, 0)) &&
                    member(sig, MixedFun::constant(sig.pp, 1, 0, 1));
    return fl;
}

struct CloneRecord {
    std::string id;
    CloneSignature signature;
    CloneFlags flags;
};

struct LatticeGraph {
    PrimePair pp;
    int workArity = 0;
    std::vector<CloneRecord> nodes;                 // sorted by id
    std::vector<std::pair<int, int>> coverEdges;    // (lower, upper) indices

    int find(const std::string& id) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].id == id) return static_cast<int>(i);
        return -1;
    }
};

/// Join in the clone lattice: union the slot spans and re-close.
inline CloneSignature join_signatures(const CloneSignature& a, const CloneSignature& b,
                                      int workArity) {
    if (a.contains(b)) return a;
    if (b.contains(a)) return b;
    detail::SlotWork work(a.pp);
    for (std::size_t i = 0; i < a.rho.size(); ++i) {
        for (const auto& r : a.rho[i].basis) work.rho[i].insert(r);
        for (const auto& r : b.rho[i].basis) work.rho[i].insert(r);
    }
    for (std::size_t j = 0; j < a.psi.size(); ++j) {
        for (const auto& r : a.psi[j].basis) work.psi[j].insert(r);
        for (const auto& r : b.psi[j].basis) work.psi[j].insert(r);
    }
    return detail::closed_signature(std::move(work), workArity);
}

/// Meet: slotwise clonoid intersection (the slot maps commute with
/// intersections, and intersections of invariant subspaces stay invariant).
inline CloneSignature meet_signatures(const CloneSignature& a, const CloneSignature& b) {
    CloneSignature out;
    out.pp = a.pp;
    for (std::size_t i = 0; i < a.rho.size(); ++i) out.rho.push_back(meet(a.rho[i], b.rho[i]));
    for (std::size_t j = 0; j < a.psi.size(); ++j) out.psi.push_back(meet(a.psi[j], b.psi[j]));
    return out;
}

/// The full clone lattice above the linear maps: every clone is the join of
/// the one-generated clones of its catalog members, and the catalog members
/// of any clone live in the induced-monomial universe below, so seeding
/// with that universe and closing under joins reaches everything.
inline LatticeGraph enumerate_clones(const PrimePair& pp, int workArity) {
    if (workArity < std::max(pp.p, pp.q))
        throw std::invalid_argument("enumerate_clones: work arity below max(p, q)");
    int maxAr = std::max(pp.p, pp.q);
    std::vector<MixedFun> universe;
    auto addSide = [&](const PrimePair& side, bool flip) {
        std::size_t space = detail::ipow(static_cast<std::size_t>(side.p), static_cast<unsigned>(side.q));
        for (std::size_t code = 1; code < space; ++code) {
            CoeffFun u = CoeffFun::decode(side.q, side.p, 1, code);
            for (int i = 0; i <= maxAr; ++i) {
                MixedFun g = induced_monomial(side, u, Exponent(static_cast<std::size_t>(i), 1),
                                              std::max(i, 1));
                universe.push_back(flip ? g.flipped() : g);
            }
        }
    };
    addSide(pp, false);
    addSide(pp.swapped(), true);

    std::vector<CloneSignature> sigs;
    std::set<std::string> keys;
    auto add = [&](CloneSignature s) {
        if (keys.insert(s.key()).second) sigs.push_back(std::move(s));
    };
    add(bottom_signature(pp));
    std::vector<CloneSignature> seeded(universe.size(), bottom_signature(pp));
    detail::parallel_for(universe.size(), [&](std::size_t k) {
        seeded[k] = clg_signature(pp, {universe[k]}, workArity);
    });
    for (auto& s : seeded) add(std::move(s));

    for (std::size_t i = 0; i < sigs.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) add(join_signatures(sigs[i], sigs[j], workArity));

    LatticeGraph g;
    g.pp = pp;
    g.workArity = workArity;
    for (auto& s : sigs) {
        CloneRecord rec;
        rec.id = signature_id(s);
        rec.flags = flags_from_slots(s);
        rec.signature = std::move(s);
        g.nodes.push_back(std::move(rec));
    }
    std::sort(g.nodes.begin(), g.nodes.end(),
              [](const CloneRecord& a, const CloneRecord& b) { return a.id < b.id; });

    // cover edges = transitive reduction of strict slotwise containment
    std::size_t n = g.nodes.size();
    std::vector<std::vector<bool>> lt(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && g.nodes[j].signature.contains(g.nodes[i].signature) &&
                !(g.nodes[i].signature == g.nodes[j].signature))
                lt[i][j] = true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (!lt[i][j]) continue;
            bool covered = true;
            for (std::size_t k = 0; k < n && covered; ++k)
                if (lt[i][k] && lt[k][j]) covered = false;
            if (covered) g.coverEdges.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
    std::sort(g.coverEdges.begin(), g.coverEdges.end());
    return g;
}

/// Longest-path heights above the bottom, for layered rendering.
inline std::vector<int> lattice_heights(const LatticeGraph& g) {
    std::vector<int> h(g.nodes.size(), 0);
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [lo, hi] : g.coverEdges)
            if (h[static_cast<std::size_t>(hi)] < h[static_cast<std::size_t>(lo)] + 1) {
                h[static_cast<std::size_t>(hi)] = h[static_cast<std::size_t>(lo)] + 1;
                changed = true;
            }
    }
    return h;
}

inline std::string flags_string(const CloneFlags& f) {
    std::string s;
    auto app = [&s](bool v, const char* name) {
        if (!v) return;
        if (!s.empty()) s += ' ';
        s += name;
    };
    app(f.preserves_pi1, "pi1");
    app(f.preserves_pi2, "pi2");
    app(f.diamond, "diamond");
    app(f.polynomial, "const");
    app(f.comm_pi1_pi1_zero, "c110-1");
    app(f.comm_one_one_pi1, "c11p1");
    app(f.comm_one_one_pi2, "c11p2");
    return s.empty() ? "-" : s;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

struct VerificationCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerificationReport {
    PrimePair pp;
    int workArity = 0;
    BoundsReport bounds;
    long long cloneCount = 0;
    long long diamondCount = 0;
    long long polynomialCount = 0;
    long long pi1FamilyCount = 0;
    long long gammaImageCount = 0;
    std::vector<VerificationCheck> checks;
    bool pass = true;

    void add(std::string name, bool ok, std::string detail = "") {
        pass &= ok;
        checks.push_back({std::move(name), ok, std::move(detail)});
    }
};

/// Runs every quantitative claim against the enumerated lattice: clonoid
/// counts against the factorization formulas, the clonoid embedding, the
/// diamond product isomorphism, the count bounds, catalog idempotence, and
/// the pi1-family injection. Any failure carries a short counterexample tag.
inline VerificationReport verify_report(const PrimePair& pp, int workArity) {
    VerificationReport rep;
    rep.pp = pp;
    rep.workArity = workArity;
    rep.bounds = count_report(pp);

    auto clonoidsPQ = enumerate_clonoids(pp, Orientation::PQ);
    auto clonoidsQP = enumerate_clonoids(pp, Orientation::QP);
    rep.add("clonoid-count-pq",
            static_cast<long long>(clonoidsPQ.size()) == rep.bounds.clonoids_pq,
            std::to_string(clonoidsPQ.size()) + " vs formula " + std::to_string(rep.bounds.clonoids_pq));
    rep.add("clonoid-count-qp",
            static_cast<long long>(clonoidsQP.size()) == rep.bounds.clonoids_qp,
            std::to_string(clonoidsQP.size()) + " vs formula " + std::to_string(rep.bounds.clonoids_qp));

    LatticeGraph graph = enumerate_clones(pp, workArity);
    rep.cloneCount = static_cast<long long>(graph.nodes.size());
    std::map<std::string, int> byKey;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i)
        byKey.emplace(graph.nodes[i].signature.key(), static_cast<int>(i));
    auto nodeOf = [&](const CloneSignature& s) {
        auto it = byKey.find(s.key());
        return it == byKey.end() ? -1 : it->second;
    };

    // clonoid embedding: injective, lands on nodes, preserves meet and join
    {
        bool allNodes = true, injective = true, meets = true, joins = true;
        std::set<std::string> ids;
        for (const auto& c : clonoidsPQ) {
            CloneSignature gc = embed_clonoid(pp, c);
            if (nodeOf(gc) < 0) allNodes = false;
            if (!ids.insert(gc.key()).second) injective = false;
        }
        rep.gammaImageCount = static_cast<long long>(ids.size());
        for (std::size_t i = 0; i < clonoidsPQ.size(); ++i)
            for (std::size_t j = 0; j < i; ++j) {
                CloneSignature a = embed_clonoid(pp, clonoidsPQ[i]);
                CloneSignature b = embed_clonoid(pp, clonoidsPQ[j]);
                CloneSignature m = meet_signatures(a, b);
                CloneSignature jn = join_signatures(a, b, workArity);
                meets &= m == embed_clonoid(pp, meet(clonoidsPQ[i], clonoidsPQ[j]));
                joins &= jn == embed_clonoid(pp, join(clonoidsPQ[i], clonoidsPQ[j]));
                meets &= nodeOf(m) >= 0;
                joins &= nodeOf(jn) >= 0;
            }
        rep.add("clonoid-embedding-nodes", allNodes);
        rep.add("clonoid-embedding-injective", injective);
        rep.add("clonoid-embedding-meets", meets);
        rep.add("clonoid-embedding-joins", joins);
    }

    // flags: the slot route must agree with the member-level relation route
    {
        bool agree = true;
        std::string bad;
        for (const auto& node : graph.nodes) {
            CloneFlags viaCatalog = flags_from_catalog(node.signature);
            if (!(viaCatalog == node.flags)) {
                agree = false;
                bad = node.id;
                break;
            }
        }
        rep.add("flag-routes-agree", agree, bad);
    }

    // diamond family: product isomorphism with the coordinate clone lattices
    {
        auto primesP = enumerate_prime_clones(pp.p);
        auto primesQ = enumerate_prime_clones(pp.q);
        std::vector<int> diamondNodes;
        for (std::size_t i = 0; i < graph.nodes.size(); ++i)
            if (graph.nodes[i].flags.diamond) diamondNodes.push_back(static_cast<int>(i));
        rep.diamondCount = static_cast<long long>(diamondNodes.size());
        bool countOk = rep.diamondCount == rep.bounds.diamond_count &&
                       rep.diamondCount ==
                           static_cast<long long>(primesP.size()) * static_cast<long long>(primesQ.size());
        rep.add("diamond-count", countOk,
                std::to_string(rep.diamondCount) + " vs " + std::to_string(rep.bounds.diamond_count));

        std::map<std::pair<PrimeCloneDescriptor, PrimeCloneDescriptor>, int> pairOf;
        std::vector<std::pair<PrimeCloneDescriptor, PrimeCloneDescriptor>> splits;
        bool splitInjective = true, roundTrip = true, orderIso = true, onto = true;
        for (int idx : diamondNodes) {
            auto pr = independent_split(graph.nodes[static_cast<std::size_t>(idx)].signature);
            if (!pairOf.emplace(pr, idx).second) splitInjective = false;
            CloneSignature back = diamond_reconstruct(pp, pr.first, pr.second, workArity);
            roundTrip &= back == graph.nodes[static_cast<std::size_t>(idx)].signature;
            splits.push_back(std::move(pr));
        }
        for (const auto& cp : primesP)
            for (const auto& cq : primesQ) {
                CloneSignature sig = diamond_reconstruct(pp, cp, cq, workArity);
                int idx = nodeOf(sig);
                if (idx < 0 || !graph.nodes[static_cast<std::size_t>(idx)].flags.diamond) {
                    onto = false;
                    continue;
                }
                auto pr = independent_split(sig);
                roundTrip &= pr.first == cp && pr.second == cq;
            }
        for (std::size_t a = 0; a < diamondNodes.size(); ++a)
            for (std::size_t b = 0; b < diamondNodes.size(); ++b) {
                const auto& sa = graph.nodes[static_cast<std::size_t>(diamondNodes[a])].signature;
                const auto& sb = graph.nodes[static_cast<std::size_t>(diamondNodes[b])].signature;
                bool sigLe = sb.contains(sa);
                bool prodLe = splits[b].first.contains(splits[a].first) &&
                              splits[b].second.contains(splits[a].second);
                if (sigLe != prodLe) orderIso = false;
            }
        rep.add("diamond-split-injective", splitInjective);
        rep.add("diamond-split-inverse", roundTrip);
        rep.add("diamond-split-onto", onto);
        rep.add("diamond-order-isomorphism", orderIso);
    }

    // total count within the formula bounds, polynomial subfamily size
    rep.add("clone-count-bounds",
            rep.cloneCount >= rep.bounds.clone_lower && rep.cloneCount <= rep.bounds.clone_upper,
            std::to_string(rep.cloneCount) + " in [" + std::to_string(rep.bounds.clone_lower) +
                ", " + std::to_string(rep.bounds.clone_upper) + "]");
    for (const auto& node : graph.nodes)
        if (node.flags.polynomial) ++rep.polynomialCount;
    rep.add("polynomial-count", rep.polynomialCount == 17,
            std::to_string(rep.polynomialCount) + " vs 17");

    // catalog idempotence: every clone is rebuilt from its own catalog
    {
        bool idem = true;
        std::string bad;
        for (const auto& node : graph.nodes) {
            GeneratorCatalog cat = generator_catalog(node.signature);
            CloneSignature rebuilt = clg_signature(pp, cat.functions, workArity);
            if (!(rebuilt == node.signature)) {
                idem = false;
                bad = node.id;
                break;
            }
        }
        rep.add("catalog-idempotence", idem, bad);
    }

    // pi1 abelian family: triple map injective and within the bound
    {
        std::set<std::string> triples;
        bool injective = true;
        for (const auto& node : graph.nodes) {
            if (!(node.flags.preserves_pi1 && node.flags.comm_pi1_pi1_zero)) continue;
            ++rep.pi1FamilyCount;
            Pi1Profile prof = pi1_profile(node.signature);
            std::string key = prime_clone_to_json(prof.pClone).dump() + "/" +
                              clonoid_to_json(prof.psi1).dump() + "/" +
                              clonoid_to_json(prof.psi0).dump();
            if (!triples.insert(key).second) injective = false;
        }
        rep.add("pi1-family-injective", injective);
        rep.add("pi1-family-bound", rep.pi1FamilyCount <= rep.bounds.pi1_upper,
                std::to_string(rep.pi1FamilyCount) + " <= " + std::to_string(rep.bounds.pi1_upper));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline json verification_report_to_json(const VerificationReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    return json{{"p", r.pp.p},
                {"q", r.pp.q},
                {"work_arity", r.workArity},
                {"bounds", bounds_report_to_json(r.bounds)},
                {"clone_count", r.cloneCount},
                {"diamond_count", r.diamondCount},
                {"polynomial_count", r.polynomialCount},
                {"pi1_family_count", r.pi1FamilyCount},
                {"gamma_image_count", r.gammaImageCount},
                {"checks", checks},
                {"pass", r.pass}};
}

inline json clone_record_to_json(const CloneRecord& rec) {
    json dims = json::array();
    for (const auto& c : rec.signature.rho) dims.push_back(c.dimension());
    json dimsQ = json::array();
    for (const auto& c : rec.signature.psi) dimsQ.push_back(c.dimension());
    return json{{"id", rec.id},
                {"signature", signature_to_json(rec.signature)},
                {"flags",
                 {{"pi1", rec.flags.preserves_pi1},
                  {"pi2", rec.flags.preserves_pi2},
                  {"diamond", rec.flags.diamond},
                  {"polynomial", rec.flags.polynomial},
                  {"comm_pi1_pi1_zero", rec.flags.comm_pi1_pi1_zero},
                  {"comm_one_one_pi1", rec.flags.comm_one_one_pi1},
                  {"comm_one_one_pi2", rec.flags.comm_one_one_pi2}}},
                {"rho_dims", dims},
                {"psi_dims", dimsQ}};
}

inline json lattice_to_json(const LatticeGraph& g, const VerificationReport* report = nullptr) {
    json nodes = json::array();
    for (const auto& rec : g.nodes) nodes.push_back(clone_record_to_json(rec));
    json edges = json::array();
    for (const auto& [lo, hi] : g.coverEdges) edges.push_back(json::array({lo, hi}));
    json out{{"p", g.pp.p},
             {"q", g.pp.q},
             {"work_arity", g.workArity},
             {"nodes", nodes},
             {"cover_edges", edges}};
    out["report"] = report ? verification_report_to_json(*report) : json(nullptr);
    return out;
}

inline LatticeGraph lattice_from_json(const json& j) {
    LatticeGraph g;
    g.pp = PrimePair::make(j.at("p").get<int>(), j.at("q").get<int>());
    g.workArity = j.at("work_arity").get<int>();
    for (const auto& n : j.at("nodes")) {
        CloneRecord rec;
        rec.signature = signature_from_json(n.at("signature"));
        rec.id = signature_id(rec.signature);
        rec.flags = flags_from_slots(rec.signature);
        g.nodes.push_back(std::move(rec));
    }
    for (const auto& e : j.at("cover_edges"))
        g.coverEdges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    return g;
}

inline std::string export_dot(const LatticeGraph& g) {
    auto heights = lattice_heights(g);
    int maxH = 0;
    for (int h : heights) maxH = std::max(maxH, h);
    std::string out = "digraph clones {\n  rankdir=BT;\n  node [shape=box, fontsize=10];\n";
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        out += "  n" + std::to_string(i) + " [label=\"" + g.nodes[i].id.substr(0, 8) + "\\n" +
               flags_string(g.nodes[i].flags) + "\"];\n";
    }
    for (int h = 0; h <= maxH; ++h) {
        std::string rank;
        for (std::size_t i = 0; i < g.nodes.size(); ++i)
            if (heights[i] == h) rank += " n" + std::to_string(i) + ";";
        if (!rank.empty()) out += "  { rank=same;" + rank + " }\n";
    }
    for (const auto& [lo, hi] : g.coverEdges)
        out += "  n" + std::to_string(lo) + " -> n" + std::to_string(hi) + ";\n";
    out += "}\n";
    return out;
}

inline std::string export_csv(const LatticeGraph& g) {
    std::string out =
        "id,pi1,pi2,diamond,polynomial,comm_pi1_pi1_zero,comm_one_one_pi1,comm_one_one_pi2,"
        "rho_dims,psi_dims\n";
    for (const auto& rec : g.nodes) {
        out += rec.id;
        auto b = [&](bool v) { out += v ? ",1" : ",0"; };
        b(rec.flags.preserves_pi1);
        b(rec.flags.preserves_pi2);
        b(rec.flags.diamond);
        b(rec.flags.polynomial);
        b(rec.flags.comm_pi1_pi1_zero);
        b(rec.flags.comm_one_one_pi1);
        b(rec.flags.comm_one_one_pi2);
        out += ",";
        for (std::size_t i = 0; i < rec.signature.rho.size(); ++i)
            out += (i ? "|" : "") + std::to_string(rec.signature.rho[i].dimension());
        out += ",";
        for (std::size_t j = 0; j < rec.signature.psi.size(); ++j)
            out += (j ? "|" : "") + std::to_string(rec.signature.psi[j].dimension());
        out += "\n";
    }
    return out;
}

}  // namespace cloneforge
