// Command-line front end: enumerate clonoid and clone lattices, run the
// verification report, manipulate coefficient polynomials, classify function
// tables, and convert lattice documents between formats.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "cloneforge/clonoid.hpp"
#include "cloneforge/json_io.hpp"
#include "cloneforge/lattice.hpp"
#include "cloneforge/polyring.hpp"

namespace cf = cloneforge;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& doc) {
    if (path.empty() || path == "-") {
        std::cout << doc;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    out << doc;
}

cf::MixedFun load_mixed_fun(const std::string& path) {
    std::string text = read_file(path);
    auto pos = text.find_first_not_of(" \t\r\n");
    if (pos != std::string::npos && text[pos] == '{')
        return cf::mixed_fun_from_json(cf::json::parse(text));
    return cf::mixed_fun_from_text(text);
}

cf::LatticeGraph filtered(const cf::LatticeGraph& g, const std::string& filter) {
    if (filter.empty()) return g;
    cf::LatticeGraph out;
    out.pp = g.pp;
    out.workArity = g.workArity;
    for (const auto& rec : g.nodes) {
        bool keep = filter == "diamond"      ? rec.flags.diamond
                    : filter == "polynomial" ? rec.flags.polynomial
                    : filter == "pi1" ? (rec.flags.preserves_pi1 && rec.flags.comm_pi1_pi1_zero)
                                      : throw std::invalid_argument("unknown filter: " + filter);
        if (keep) out.nodes.push_back(rec);
    }
    // cover relation of the filtered subposet
    std::size_t n = out.nodes.size();
    std::vector<std::vector<bool>> lt(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && out.nodes[j].signature.contains(out.nodes[i].signature) &&
                !(out.nodes[i].signature == out.nodes[j].signature))
                lt[i][j] = true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (!lt[i][j]) continue;
            bool covered = true;
            for (std::size_t k = 0; k < n && covered; ++k)
                if (lt[i][k] && lt[k][j]) covered = false;
            if (covered) out.coverEdges.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
    std::sort(out.coverEdges.begin(), out.coverEdges.end());
    return out;
}

std::string render(const cf::LatticeGraph& g, const std::string& format,
                   const cf::VerificationReport* rep = nullptr) {
    if (format == "dot") return cf::export_dot(g);
    if (format == "csv") return cf::export_csv(g);
    if (format == "json") return cf::lattice_to_json(g, rep).dump(2) + "\n";
    throw std::invalid_argument("unknown format: " + format);
}

cf::Exponent parse_exponent(const std::string& text) {
    cf::Exponent e;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) e.push_back(static_cast<std::uint8_t>(std::stoi(item)));
    return e;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clone and clonoid lattices over Z_p x Z_q"};
    app.require_subcommand(1);
    int jobs = 1;
    unsigned long long seed = 0;
    app.add_option("--jobs", jobs, "worker thread cap (default 1)");
    app.add_option("--seed", seed,
                   "seed for randomized spot-checks; the standard checks are exhaustive");

    int p = 2, q = 3, workArity = 0;
    std::string orientation = "pq", filter, format = "json", inputPath, outputPath;

    auto* cClonoids = app.add_subcommand("clonoids", "enumerate the coefficient clonoid lattice");
    cClonoids->add_option("-p", p, "first prime")->required();
    cClonoids->add_option("-q", q, "second prime")->required();
    cClonoids->add_option("--orientation", orientation, "pq (Z_q -> Z_p) or qp")
        ->check(CLI::IsMember({"pq", "qp"}));
    cClonoids->add_option("-o,--output", outputPath, "output path (default stdout)");

    auto* cClones = app.add_subcommand("clones", "enumerate the clone lattice");
    cClones->add_option("-p", p, "first prime")->required();
    cClones->add_option("-q", q, "second prime")->required();
    cClones->add_option("--work-arity", workArity, "composition arity cap (default max(p, q))");
    cClones->add_option("--filter", filter, "diamond | polynomial | pi1")
        ->check(CLI::IsMember({"diamond", "polynomial", "pi1"}));
    cClones->add_option("--format", format, "json | dot | csv")
        ->check(CLI::IsMember({"json", "dot", "csv"}));
    cClones->add_option("-o,--output", outputPath, "output path (default stdout)");

    auto* cVerify = app.add_subcommand("verify", "run every quantitative check");
    cVerify->add_option("-p", p, "first prime")->required();
    cVerify->add_option("-q", q, "second prime")->required();
    cVerify->add_option("--work-arity", workArity, "composition arity cap (default max(p, q))");
    cVerify->add_option("--format", format, "json")->check(CLI::IsMember({"json"}));
    cVerify->add_option("-o,--output", outputPath, "output path (default stdout)");

    auto* cPoly = app.add_subcommand("poly", "coefficient polynomial operations");
    cPoly->require_subcommand(1);
    std::string monomial;
    auto* cExtract = cPoly->add_subcommand("extract", "derive a monomial with a replayable witness");
    cExtract->add_option("-i,--input", inputPath, "polynomial JSON")->required();
    cExtract->add_option("--monomial", monomial, "target exponents, comma separated (default leading)");
    cExtract->add_option("-o,--output", outputPath, "output path (default stdout)");
    auto* cReduce = cPoly->add_subcommand("reduce", "canonical representative of a polynomial");
    cReduce->add_option("-i,--input", inputPath, "polynomial JSON")->required();
    cReduce->add_option("-o,--output", outputPath, "output path (default stdout)");
    auto* cCompose = cPoly->add_subcommand("compose", "substitute polynomials into slots");
    cCompose->add_option("-i,--input", inputPath, R"(JSON {"f":poly,"b":[slots],"gs":[polys]})")
        ->required();
    cCompose->add_option("-o,--output", outputPath, "output path (default stdout)");

    auto* cClassify = app.add_subcommand("classify", "structural report for a function table");
    cClassify->add_option("-i,--input", inputPath, "table as JSON or one-line text")->required();
    cClassify->add_option("-o,--output", outputPath, "output path (default stdout)");

    auto* cExport = app.add_subcommand("export", "convert a lattice document");
    cExport->add_option("-i,--input", inputPath, "lattice JSON")->required();
    cExport->add_option("--format", format, "dot | json | csv")
        ->check(CLI::IsMember({"dot", "json", "csv"}))
        ->required();
    cExport->add_option("-o,--output", outputPath, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    cf::worker_count() = std::max(1, jobs);

    try {
        if (*cClonoids) {
            cf::PrimePair pp = cf::PrimePair::make(p, q);
            auto orient = orientation == "pq" ? cf::Orientation::PQ : cf::Orientation::QP;
            auto list = cf::enumerate_clonoids(pp, orient);
            cf::BoundsReport bounds = cf::count_report(pp);
            long long formula = orientation == "pq" ? bounds.clonoids_pq : bounds.clonoids_qp;
            cf::json arr = cf::json::array();
            for (const auto& c : list) arr.push_back(cf::clonoid_to_json(c));
            cf::json doc{{"p", p},
                         {"q", q},
                         {"orientation", orientation},
                         {"count", list.size()},
                         {"formula_count", formula},
                         {"clonoids", arr}};
            write_output(outputPath, doc.dump(2) + "\n");
            return static_cast<long long>(list.size()) == formula ? 0 : 1;
        }
        if (*cClones) {
            cf::PrimePair pp = cf::PrimePair::make(p, q);
            if (workArity == 0) workArity = std::max(p, q);
            cf::LatticeGraph g = cf::enumerate_clones(pp, workArity);
            write_output(outputPath, render(filtered(g, filter), format));
            return 0;
        }
        if (*cVerify) {
            cf::PrimePair pp = cf::PrimePair::make(p, q);
            if (workArity == 0) workArity = std::max(p, q);
            cf::VerificationReport rep = cf::verify_report(pp, workArity);
            write_output(outputPath, cf::verification_report_to_json(rep).dump(2) + "\n");
            return rep.pass ? 0 : 1;
        }
        if (*cExtract) {
            cf::RPoly f = cf::rpoly_from_json(cf::json::parse(read_file(inputPath)));
            cf::Derivation der;
            if (monomial.empty())
                der = cf::extract_leading(f).second;
            else
                der = cf::extract_monomial(f, parse_exponent(monomial));
            der.replay();  // throws on any recorded-step mismatch
            cf::json doc = cf::derivation_to_json(der);
            doc["replay_ok"] = true;
            write_output(outputPath, doc.dump(2) + "\n");
            return 0;
        }
        if (*cReduce) {
            cf::RPoly f = cf::rpoly_from_json(cf::json::parse(read_file(inputPath)));
            write_output(outputPath, cf::rpoly_to_json(f).dump(2) + "\n");
            return 0;
        }
        if (*cCompose) {
            cf::json doc = cf::json::parse(read_file(inputPath));
            cf::RPoly f = cf::rpoly_from_json(doc.at("f"));
            std::vector<int> slots;
            for (const auto& v : doc.at("b")) slots.push_back(v.get<int>());
            std::vector<cf::RPoly> gs;
            for (const auto& v : doc.at("gs")) gs.push_back(cf::rpoly_from_json(v));
            write_output(outputPath, cf::rpoly_to_json(cf::compose_at(f, slots, gs)).dump(2) + "\n");
            return 0;
        }
        if (*cClassify) {
            cf::MixedFun f = load_mixed_fun(inputPath);
            cf::StructureReport rep = cf::classify(f);
            write_output(outputPath, cf::structure_report_to_json(rep).dump(2) + "\n");
            return 0;
        }
        if (*cExport) {
            cf::LatticeGraph g = cf::lattice_from_json(cf::json::parse(read_file(inputPath)));
            write_output(outputPath, render(g, format));
            return 0;
        }
    } catch (const cf::resource_error& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return 3;
    } catch (const cf::consistency_error& e) {
        std::cerr << "verification failure: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const cf::json::exception& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
