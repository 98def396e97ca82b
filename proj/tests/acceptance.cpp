// Acceptance suite: one line per criterion, every comparison exact.

#include <chrono>
#include <iostream>
#include <random>
#include <sstream>

#include "lattices.hpp"
#include "thetalat/hecke.hpp"

using namespace thetalat;
using arith::MatZ;
using lat::Lattice;
using theta::TIndex;

namespace {

using Clock = std::chrono::steady_clock;

struct Criterion {
    int id;
    std::string name;
    bool pass = true;
    double secs = 0;
    std::string detail;
};

std::vector<Criterion> results;

template <class F>
void run_criterion(int id, const std::string& name, F&& body) {
    Criterion c;
    c.id = id;
    c.name = name;
    auto t0 = Clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.pass = false;
        c.detail += std::string(" exception: ") + e.what();
    }
    c.secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << "criterion " << c.id << " (" << name << ")"
              << " [" << c.secs << "s]" << (c.detail.empty() ? "" : ":" + c.detail) << std::endl;
    results.push_back(c);
}

void expect(Criterion& c, bool ok, const std::string& what) {
    if (!ok) {
        c.pass = false;
        c.detail += " FAILED{" + what + "}";
    }
}

// brute-force count of linearly independent a-tuples in F_q^r
long long independent_tuples(int q, int r, int a) {
    std::vector<std::vector<int>> tuple(static_cast<size_t>(a), std::vector<int>(static_cast<size_t>(r), 0));
    long long total = 1;
    for (int i = 0; i < a * r; ++i) total *= q;
    long long count = 0;
    for (long long it = 0; it < total; ++it) {
        long long w = it;
        for (int s = 0; s < a; ++s)
            for (int i = 0; i < r; ++i) { tuple[static_cast<size_t>(s)][static_cast<size_t>(i)] = static_cast<int>(w % q); w /= q; }
        auto m = tuple;
        int rank = 0;
        for (int col = 0; col < r && rank < a; ++col) {
            int piv = -1;
            for (int s = rank; s < a; ++s)
                if (m[static_cast<size_t>(s)][static_cast<size_t>(col)] % q != 0) { piv = s; break; }
            if (piv < 0) continue;
            std::swap(m[static_cast<size_t>(piv)], m[static_cast<size_t>(rank)]);
            int inv = 0;
            for (int x = 1; x < q; ++x)
                if (m[static_cast<size_t>(rank)][static_cast<size_t>(col)] * x % q == 1) inv = x;
            for (int s = rank + 1; s < a; ++s) {
                int f = m[static_cast<size_t>(s)][static_cast<size_t>(col)] * inv % q;
                for (int cc = 0; cc < r; ++cc)
                    m[static_cast<size_t>(s)][static_cast<size_t>(cc)] =
                        ((m[static_cast<size_t>(s)][static_cast<size_t>(cc)] - f * m[static_cast<size_t>(rank)][static_cast<size_t>(cc)]) % q + q) % q;
            }
            ++rank;
        }
        if (rank == a) ++count;
    }
    return count;
}

void criterion1(Criterion& c) {
    for (int q : {2, 3}) {
        for (int r = 0; r <= 4; ++r) {
            expect(c, arith::beta(q, r, 0) == 1, "beta(r,0)");
            expect(c, arith::beta(q, r, r) == 1, "beta(r,r)");
            for (int a = 1; a <= std::min(r, 3); ++a) {
                long long big = independent_tuples(q, r, a);
                long long small = independent_tuples(q, a, a);
                expect(c, big % small == 0, "tuple divisibility");
                expect(c, arith::beta(q, r, a) == Int(static_cast<long>(big / small)),
                       "beta vs subspace count q=" + std::to_string(q) + " r=" + std::to_string(r) +
                           " a=" + std::to_string(a));
            }
        }
        for (int r = 1; r <= 3; ++r)
            expect(c, arith::eta(q, r, 0) == Int(static_cast<long>(independent_tuples(q, r, r))),
                   "eta(r,0) = |GL_r|");
        // eta(r,a): extensions of a fixed rank-a matrix to GL_r, brute force
        for (int r = 2; r <= 3; ++r)
            for (int a = 1; a < r; ++a) {
                // C = first a unit columns; count G in GL_r with first a columns = C
                long long exts = 0;
                long long total = 1;
                for (int i = 0; i < r * (r - a); ++i) total *= q;
                std::vector<std::vector<int>> g(static_cast<size_t>(r), std::vector<int>(static_cast<size_t>(r), 0));
                for (int i = 0; i < a; ++i) g[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1;
                for (long long it = 0; it < total; ++it) {
                    long long w = it;
                    for (int col = a; col < r; ++col)
                        for (int i = 0; i < r; ++i) { g[static_cast<size_t>(i)][static_cast<size_t>(col)] = static_cast<int>(w % q); w /= q; }
                    // rank r check via the tuple rank routine on the transpose
                    std::vector<std::vector<int>> rows(static_cast<size_t>(r), std::vector<int>(static_cast<size_t>(r)));
                    for (int i = 0; i < r; ++i)
                        for (int jj = 0; jj < r; ++jj) rows[static_cast<size_t>(jj)][static_cast<size_t>(i)] = g[static_cast<size_t>(i)][static_cast<size_t>(jj)];
                    int rank = 0;
                    for (int col = 0; col < r && rank < r; ++col) {
                        int piv = -1;
                        for (int s = rank; s < r; ++s)
                            if (rows[static_cast<size_t>(s)][static_cast<size_t>(col)] % q != 0) { piv = s; break; }
                        if (piv < 0) continue;
                        std::swap(rows[static_cast<size_t>(piv)], rows[static_cast<size_t>(rank)]);
                        int inv = 0;
                        for (int x = 1; x < q; ++x)
                            if (rows[static_cast<size_t>(rank)][static_cast<size_t>(col)] * x % q == 1) inv = x;
                        for (int s = rank + 1; s < r; ++s) {
                            int f = rows[static_cast<size_t>(s)][static_cast<size_t>(col)] * inv % q;
                            for (int cc = 0; cc < r; ++cc)
                                rows[static_cast<size_t>(s)][static_cast<size_t>(cc)] =
                                    ((rows[static_cast<size_t>(s)][static_cast<size_t>(cc)] - f * rows[static_cast<size_t>(rank)][static_cast<size_t>(cc)]) % q + q) % q;
                        }
                        ++rank;
                    }
                    if (rank == r) ++exts;
                }
                expect(c, arith::eta(q, r, a) == Int(static_cast<long>(exts)),
                       "eta extension count q=" + std::to_string(q) + " r=" + std::to_string(r) +
                           " a=" + std::to_string(a));
            }
    }
    c.detail = " beta/eta match exhaustive subspace and GL counts, q in {2,3}, r <= 4";
}

void criterion2(Criterion& c) {
    std::mt19937_64 rng(20260808);
    std::uniform_int_distribution<int> diag(-4, 4), off(-3, 3);
    int cases = 0;
    for (std::int64_t p : {3, 5, 7}) {
        for (int rep = 0; rep < 8; ++rep) {
            int m = 2 * (1 + static_cast<int>(rng() % 4));  // 2, 4, 6, 8
            MatZ g(m, m);
            Int detg;
            do {
                for (int i = 0; i < m; ++i) {
                    g(i, i) = 2 * diag(rng);
                    for (int j = i + 1; j < m; ++j) {
                        g(i, j) = off(rng);
                        g(j, i) = g(i, j);
                    }
                }
                detg = arith::det(g);
            } while (detg == 0 || mpz_divisible_ui_p(detg.get_mpz_t(), static_cast<unsigned long>(p)));
            int k = m / 2;
            Int arg = detg;
            if (k % 2 == 1) arg = -arg;
            int chi = arith::kronecker(arg, Int(static_cast<long>(p)));
            Int expected;
            mpz_ui_pow_ui(expected.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(k));
            expected *= chi;
            arith::CycInt sum = ffq::gauss_sum_lattice(g, p);
            expect(c, sum.is_integer() && sum.to_integer() == expected,
                   "gauss sum p=" + std::to_string(p) + " case " + std::to_string(rep));
            ++cases;
        }
    }
    c.detail = " " + std::to_string(cases) + " exact cyclotomic sums reduce to chi*(p) p^k";
}

void criterion3(Criterion& c) {
    int checks = 0;
    for (std::int64_t q : {3, 5}) {
        int w = 2;
        for (int x = 2; x < q; ++x) {
            bool sq = false;
            for (int y = 1; y < q; ++y) sq = sq || (y * y % q == x);
            if (!sq) { w = x; break; }
        }
        std::vector<std::vector<int>> diags = {{}};
        std::vector<int> cur;
        std::function<void()> rec = [&]() {
            if (!cur.empty()) diags.push_back(cur);
            if (cur.size() >= 3) return;
            for (int v : {0, 1, w}) {
                cur.push_back(v);
                rec();
                cur.pop_back();
            }
        };
        rec();
        for (const auto& d : diags) {
            int dim = static_cast<int>(d.size());
            MatZ g(dim, dim);
            for (int i = 0; i < dim; ++i) g(i, i) = 2 * d[static_cast<size_t>(i)];
            ffq::FFQuadSpace space = ffq::FFQuadSpace::from_even_gram(g, q);
            for (int r = 0; r <= 3; ++r) {
                int n = dim + r;
                for (int j = r; j <= std::min(n, 3); ++j) {
                    ++checks;
                    bool ok = ffq::thm45_closing_identity_check(space, n, j, r);
                    expect(c, ok, "q=" + std::to_string(q) + " dim=" + std::to_string(dim) +
                                      " r=" + std::to_string(r) + " j=" + std::to_string(j));
                }
            }
        }
    }
    c.detail = " " + std::to_string(checks) +
               " closing identities, q in {3,5}, dim V <= 3, all Witt types";
}

void criterion4(Criterion& c) {
    auto e8 = std::make_shared<Lattice>(e8_gram(), "E8");
    for (std::int64_t p : {2, 3}) {
        ffq::FFQuadSpace space = ffq::FFQuadSpace::from_even_gram(e8->gram(), p);
        Int brute = ffq::count_totally_isotropic_brute(space, 1);
        genus::NeighborSet set = genus::neighbors(e8, p, 1);
        expect(c, Int(static_cast<long>(set.members.size())) == brute,
               "neighbour count vs quadric lines p=" + std::to_string(p));
        if (p == 2) expect(c, set.members.size() == 135, "135 at p=2");
        c.detail += " p=" + std::to_string(p) + ":" + std::to_string(set.members.size());
    }
}

struct Thm53Grid {
    MatZ gram;
    std::string name;
    std::vector<std::int64_t> primes;
};

void run_thm53_lattice(Criterion& c, const Lattice& l, std::int64_t p, std::int64_t bound) {
    int k = l.k();
    int chi = l.chi_star(p);
    int nmax = 2;
    genus::ClassTableCache cache(1, bound, theta::kDefaultNodeBudget,
                                 genus::kDefaultIsometryBudget, 2);
    genus::ClassTableCache cache2(2, bound, theta::kDefaultNodeBudget,
                                  genus::kDefaultIsometryBudget, 2);
    auto shared = std::make_shared<Lattice>(l);
    for (int n = 1; n <= nmax; ++n) {
        int jmax = std::min(n, k);
        // admissible j under the theorem's hypotheses
        std::vector<int> js;
        for (int j = 1; j <= jmax; ++j)
            if ((chi == 1 && j <= k) || (chi == -1 && j < k)) js.push_back(j);
        if (js.empty()) {
            // hypothesis-violating corner: the named error is the contract
            try {
                hecke::rhs_thm53_table(l, p, n, 1, bound, n == 1 ? cache : cache2);
                expect(c, false, l.label() + " p=" + std::to_string(p) + " expected Thm 5.3 error");
            } catch (const std::domain_error& e) {
                expect(c, std::string(e.what()).find("Thm 5.3") != std::string::npos,
                       "error names the hypothesis");
            }
            continue;
        }
        std::vector<TIndex> keys = hecke::nonsingular_keys(n, bound);
        auto sums = hecke::ttilde_sums_batch(l, p, n, keys, theta::kDefaultNodeBudget, 2);
        // neighbour theta sums per rank
        int rmax = js.back();
        std::vector<theta::CoeffTable> nsum(static_cast<size_t>(rmax) + 1);
        for (int r = 0; r <= rmax; ++r) {
            nsum[static_cast<size_t>(r)].n = n;
            nsum[static_cast<size_t>(r)].bound = bound;
            genus::for_each_neighbor(shared, p, r, [&](const lat::SubframeBasis& kb) {
                auto& cachex = (n == 1) ? cache : cache2;
                nsum[static_cast<size_t>(r)].add_scaled(
                    cachex.table_for(arith::to_integral(kb.gram_of())), Rat(1));
            });
        }
        for (int j : js) {
            for (size_t ki = 0; ki < keys.size(); ++ki) {
                Rat lhs(0), rhs(0);
                for (int i = 0; i <= j; ++i) {
                    lhs += Rat(arith::u_coeff(p, n, j, i)) * sums[ki][static_cast<size_t>(j - i)];
                    rhs += Rat(arith::v_coeff(p, k, n, j, i, chi)) *
                           nsum[static_cast<size_t>(j - i)].at(keys[ki]);
                }
                lhs.canonicalize();
                rhs.canonicalize();
                expect(c, lhs == rhs,
                       l.label() + " p=" + std::to_string(p) + " n=" + std::to_string(n) +
                           " j=" + std::to_string(j) + " T=" + keys[ki].str());
            }
        }
    }
}

void criterion5(Criterion& c) {
    std::int64_t bound = 6;
    std::vector<Thm53Grid> grid = {
        {e8_gram(), "E8", {2, 3}},
        {det23a_gram(), "det23a", {2, 3}},
        {det23b_gram(), "det23b", {2, 3}},
        {diag22_gram(), "diag22", {2, 3, 5}},  // p=2 divides the level; p=5 exercises chi=+1
    };
    int lattices = 0;
    for (const auto& item : grid) {
        Lattice l(item.gram, item.name);
        for (std::int64_t p : item.primes) {
            if (!l.good_prime(p)) {
                c.detail += " [" + item.name + " p=" + std::to_string(p) + " bad prime, skipped]";
                continue;
            }
            run_thm53_lattice(c, l, p, bound);
            ++lattices;
        }
    }
    c.detail += " " + std::to_string(lattices) + " (lattice, prime) pairs, trace <= 6, exact";
}

void criterion6(Criterion& c) {
    hecke::VerifyOptions opt;
    opt.threads = 2;
    struct Case {
        MatZ gram;
        std::string name;
        std::int64_t p;
        int n, j;
        std::int64_t bound;
        Int lambda;
    };
    std::vector<Case> cases = {
        {e8_gram(), "E8", 2, 1, 1, 6, Int(72)},
        {e8_gram(), "E8", 3, 2, 1, 4, Int(1008)},
        {e8_gram(), "E8", 3, 2, 2, 4, Int(68040)},
        {det23a_gram(), "det23a", 2, 1, 1, 8, Int(2)},
    };
    for (const auto& cs : cases) {
        auto seed = std::make_shared<Lattice>(cs.gram, cs.name);
        auto rep = hecke::verify_eigenvalue(seed, cs.p, cs.n, cs.j, cs.bound, opt);
        expect(c, rep.verdict == hecke::Verdict::Pass,
               cs.name + " p=" + std::to_string(cs.p) + " n=" + std::to_string(cs.n) +
                   " j=" + std::to_string(cs.j) + " verdict");
        expect(c, rep.lambda == cs.lambda, cs.name + " lambda value");
        c.detail += " [" + cs.name + ",p=" + std::to_string(cs.p) + ",n=" + std::to_string(cs.n) +
                    ",j=" + std::to_string(cs.j) + ": lambda=" + rep.lambda.get_str() + "]";
    }
}

void criterion7(Criterion& c) {
    // det-23 genus at p = 5: kronecker(-23,5) = -1 and j = k = 1
    expect(c, arith::kronecker(-23, 5) == -1, "chi*(5) = -1");
    hecke::VerifyOptions opt;
    opt.threads = 2;
    auto seed = std::make_shared<Lattice>(det23a_gram(), "det23a");
    auto rep = hecke::verify_eigenvalue(seed, 5, 1, 1, 8, opt);
    expect(c, rep.verdict == hecke::Verdict::Pass, "vanishing verdict");
    expect(c, rep.lambda == 0, "lambda = 0");
    bool all_zero_rhs = true;
    for (const auto& e : rep.entries) all_zero_rhs = all_zero_rhs && e.rhs == 0;
    expect(c, all_zero_rhs, "zero table");
    expect(c, !rep.entries.empty(), "keys present");
    c.detail = " assembled T'_1 table identically zero at " + std::to_string(rep.entries.size()) +
               " keys, trace <= 8";
}

void criterion8(Criterion& c) {
    auto seed = std::make_shared<Lattice>(det23a_gram(), "det23a");
    genus::GenusDecomposition g = genus::genus_classes(seed, 2);
    expect(c, g.classes.size() == 2, "2 classes");
    expect(c, g.closure_verified, "closure certificate");
    expect(c, genus::is_isometric(g.classes[1].gram(), det23b_gram()).status ==
                  genus::IsoStatus::Found,
           "second class is [[4,1],[1,6]]");
    // |O| orders are (4,2): [[2,1],[1,12]] is an ambiguous form with the
    // improper involution [[1,1],[0,-1]], so its full orthogonal group has
    // order 4 (the proper-rotation counts would be (2,2)); the Cor 5.4
    // weights in criterion 6 confirm these orders.
    expect(c, g.aut_orders[0] == 4 && g.aut_orders[1] == 2, "aut orders (4,2)");
    expect(c, g.mass() == Rat(3, 4), "mass 3/4");
    c.detail = " 2 classes, closure verified, |O| = (4,2) [spec's (2,2) is the proper-rotation count]";
}

}  // namespace

int main() {
    std::cout << "acceptance suite: every comparison is exact (integer/rational equality)\n";
    run_criterion(1, "q-combinatorics vs exhaustive counts", criterion1);
    run_criterion(2, "Gauss sums reduce to chi* p^k", criterion2);
    run_criterion(3, "closing identity grid over F_q", criterion3);
    run_criterion(4, "neighbour counts vs quadric lines", criterion4);
    run_criterion(5, "per-lattice neighbour-sum identity", criterion5);
    run_criterion(6, "genus eigenvalue identity", criterion6);
    run_criterion(7, "vanishing case", criterion7);
    run_criterion(8, "det-23 genus enumeration", criterion8);
    bool all = true;
    for (const auto& r : results) all = all && r.pass;
    std::cout << (all ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << std::endl;
    return all ? 0 : 1;
}
