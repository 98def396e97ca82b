// Command-line driver: lattice inspection, theta tables, neighbours, genus
// enumeration, and the Hecke identity verification, with machine-readable
// reports.  All numeric output is exact (integers or num/den rationals).

#include <algorithm>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "thetalat/hecke.hpp"

using namespace thetalat;

namespace {

struct RunConfig {
    std::string lattice_path;
    std::int64_t p = 2;
    int n = 1;
    int j = 1;
    std::int64_t bound = 4;
    int r = 1;
    std::string format = "text";
    std::string out_path;
    std::int64_t node_budget = theta::kDefaultNodeBudget;
    std::int64_t isometry_budget = genus::kDefaultIsometryBudget;
    int threads = 2;
    bool corrupt_v = false;
};

void write_out(const RunConfig& cfg, const std::string& payload) {
    if (cfg.out_path.empty()) {
        std::cout << payload;
        if (!payload.empty() && payload.back() != '\n') std::cout << "\n";
        return;
    }
    std::ofstream out(cfg.out_path);
    if (!out) throw std::runtime_error("cannot open output file " + cfg.out_path);
    out << payload;
}

lat::LatticePtr load(const RunConfig& cfg) {
    if (cfg.lattice_path.empty()) throw std::invalid_argument("--lattice is required");
    return std::make_shared<lat::Lattice>(lat::lattice_from_json_file(cfg.lattice_path));
}

int cmd_invariants(const RunConfig& cfg) {
    lat::LatticePtr l = load(cfg);
    std::vector<std::pair<std::int64_t, int>> chis;
    for (std::int64_t p = 2; p <= 19; ++p) {
        if (!arith::is_prime(p) || !l->good_prime(p)) continue;
        chis.emplace_back(p, l->chi_star(p));
    }
    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["label"] = l->label();
        j["m"] = l->rank();
        j["k"] = l->k();
        j["det"] = l->det().get_str();
        j["level"] = l->level().get_str();
        j["even_integral"] = true;  // construction invariant
        auto arr = nlohmann::ordered_json::array();
        for (auto [p, chi] : chis) {
            nlohmann::ordered_json e;
            e["p"] = p;
            e["chi_star"] = chi;
            arr.push_back(e);
        }
        j["chi_star"] = arr;
        write_out(cfg, j.dump(2));
    } else {
        std::ostringstream os;
        os << "lattice " << (l->label().empty() ? cfg.lattice_path : l->label()) << "\n"
           << "  m = " << l->rank() << "  (k = " << l->k() << ")\n"
           << "  det = " << l->det().get_str() << "\n"
           << "  level = " << l->level().get_str() << "\n"
           << "  even integral: yes\n";
        for (auto [p, chi] : chis) os << "  chi*(" << p << ") = " << (chi > 0 ? "+1" : "-1") << "\n";
        write_out(cfg, os.str());
    }
    return 0;
}

int cmd_theta(const RunConfig& cfg) {
    lat::LatticePtr l = load(cfg);
    theta::CoeffTable table =
        theta::theta_table(*l, cfg.n, cfg.bound, cfg.node_budget, cfg.threads);
    if (cfg.format == "json")
        write_out(cfg, table.to_json());
    else if (cfg.format == "csv")
        write_out(cfg, table.to_csv());
    else {
        std::ostringstream os;
        os << "theta table of " << l->label() << " degree " << cfg.n << " trace <= " << cfg.bound
           << "\n";
        for (const auto& [key, val] : table.entries)
            os << "  " << key.str() << " : " << val.get_str() << "\n";
        write_out(cfg, os.str());
    }
    return 0;
}

int cmd_neighbors(const RunConfig& cfg) {
    lat::LatticePtr l = load(cfg);
    // stream: large sets (e.g. rank-2 neighbours at p=3) need no materialization
    std::vector<std::string> grams;
    genus::for_each_neighbor(l, cfg.p, cfg.r, [&](const lat::SubframeBasis& k) {
        grams.push_back(arith::mat_str(arith::to_integral(k.gram_of())));
    });
    std::sort(grams.begin(), grams.end());
    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["label"] = l->label();
        j["p"] = cfg.p;
        j["r"] = cfg.r;
        j["count"] = static_cast<long long>(grams.size());
        j["grams"] = grams;
        write_out(cfg, j.dump(2));
    } else {
        std::ostringstream os;
        os << "p^r-neighbours of " << l->label() << " at p=" << cfg.p << ", r=" << cfg.r << ": "
           << grams.size() << "\n";
        for (const auto& g : grams) os << "  " << g << "\n";
        write_out(cfg, os.str());
    }
    return 0;
}

int cmd_genus(const RunConfig& cfg) {
    lat::LatticePtr l = load(cfg);
    genus::GenusDecomposition g = genus::genus_classes(l, cfg.p, cfg.isometry_budget);
    if (cfg.format == "json") {
        write_out(cfg, genus::genus_to_json(g));
    } else {
        std::ostringstream os;
        os << "genus of " << l->label() << " via p=" << cfg.p << " neighbours: "
           << g.classes.size() << " classes, mass " << g.mass().get_str() << "\n";
        for (size_t c = 0; c < g.classes.size(); ++c)
            os << "  class " << c << ": " << arith::mat_str(g.classes[c].gram())
               << "  |O| = " << g.aut_orders[c].get_str() << "\n";
        os << "closure certificate: " << (g.closure_verified ? "verified" : "NOT verified") << "\n";
        write_out(cfg, os.str());
    }
    return g.closure_verified ? 0 : 2;
}

int cmd_verify(const RunConfig& cfg) {
    lat::LatticePtr l = load(cfg);
    hecke::VerifyOptions opt;
    opt.node_budget = cfg.node_budget;
    opt.isometry_budget = cfg.isometry_budget;
    opt.threads = cfg.threads;
    opt.corrupt_v = cfg.corrupt_v;
    hecke::VerificationReport rep =
        hecke::verify_eigenvalue(l, cfg.p, cfg.n, cfg.j, cfg.bound, opt);
    if (cfg.format == "json")
        write_out(cfg, rep.to_json());
    else
        write_out(cfg, rep.to_text());
    if (!cfg.out_path.empty()) std::cout << rep.to_text();
    switch (rep.verdict) {
        case hecke::Verdict::Pass:
            return 0;
        case hecke::Verdict::Fail:
            return 1;
        case hecke::Verdict::Inconclusive:
            return 2;
    }
    return 2;
}

int cmd_ffcheck(const RunConfig& cfg) {
    // closing-identity grid of the T~ completion over F_q, q = cfg.p
    std::int64_t q = cfg.p;
    if (q == 2) throw std::invalid_argument("ffcheck: q must be an odd prime");
    int failures = 0, checks = 0;
    std::ostringstream os;
    int w = 0;
    for (int x = 2; x < q; ++x) {
        bool sq = false;
        for (int y = 1; y < q; ++y) sq = sq || (y * y % q == x);
        if (!sq) { w = x; break; }
    }
    // all diagonal shapes with entries 0 (radical), 1 (unit) or w (nonsquare)
    std::vector<std::vector<int>> diags = {{}};
    std::function<void(std::vector<int>&)> rec = [&](std::vector<int>& cur) {
        if (!cur.empty()) diags.push_back(cur);
        if (cur.size() >= 3) return;
        for (int v : {0, 1, w}) {
            cur.push_back(v);
            rec(cur);
            cur.pop_back();
        }
    };
    std::vector<int> cur;
    rec(cur);
    for (const auto& d : diags) {
        int dim = static_cast<int>(d.size());
        arith::MatZ g(dim, dim);
        for (int i = 0; i < dim; ++i) g(i, i) = 2 * d[static_cast<size_t>(i)];
        ffq::FFQuadSpace space = ffq::FFQuadSpace::from_even_gram(g, q);
        for (int r = 0; r <= 3; ++r) {
            int n = dim + r;
            for (int j = r; j <= std::min(n, 3); ++j) {
                ++checks;
                bool ok = ffq::thm45_closing_identity_check(space, n, j, r);
                if (!ok) {
                    ++failures;
                    os << "  FAIL dim=" << dim << " r=" << r << " j=" << j << "\n";
                }
            }
        }
    }
    os << "ffcheck q=" << q << ": " << checks << " identities, " << failures << " failures\n";
    write_out(cfg, os.str());
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact Siegel theta / Hecke identity toolkit"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_common = [&](CLI::App* sub, bool needs_lattice = true) {
        if (needs_lattice) sub->add_option("--lattice", cfg.lattice_path, "lattice JSON file");
        sub->add_option("--p", cfg.p, "prime");
        sub->add_option("--n", cfg.n, "degree");
        sub->add_option("--j", cfg.j, "operator index");
        sub->add_option("--bound", cfg.bound, "trace bound");
        sub->add_option("--r", cfg.r, "neighbour rank");
        sub->add_option("--format", cfg.format, "json, csv or text")
            ->check(CLI::IsMember({"json", "csv", "text"}));
        sub->add_option("--out", cfg.out_path, "output file (default stdout)");
        sub->add_option("--node-budget", cfg.node_budget, "enumeration node budget");
        sub->add_option("--isometry-budget", cfg.isometry_budget, "isometry search budget");
        sub->add_option("--threads", cfg.threads, "worker threads");
    };

    auto* invariants = app.add_subcommand("invariants", "rank, determinant, level, characters");
    add_common(invariants);
    auto* thetac = app.add_subcommand("theta", "exact theta coefficient table");
    add_common(thetac);
    auto* neighborsc = app.add_subcommand("neighbors", "p^r-neighbour enumeration");
    add_common(neighborsc);
    auto* genusc = app.add_subcommand("genus", "genus classes by neighbour closure");
    add_common(genusc);
    auto* verifyc = app.add_subcommand("verify", "eigenvalue identity verification");
    add_common(verifyc);
    verifyc->add_flag("--corrupt-v", cfg.corrupt_v,
                      "test hook: perturb one v_i coefficient (expected failure)");
    auto* ffcheckc = app.add_subcommand("ffcheck", "finite-field closing-identity grid");
    add_common(ffcheckc, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (invariants->parsed()) return cmd_invariants(cfg);
        if (thetac->parsed()) return cmd_theta(cfg);
        if (neighborsc->parsed()) return cmd_neighbors(cfg);
        if (genusc->parsed()) return cmd_genus(cfg);
        if (verifyc->parsed()) return cmd_verify(cfg);
        if (ffcheckc->parsed()) return cmd_ffcheck(cfg);
    } catch (const CapacityError& e) {
        std::cerr << "capacity: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
