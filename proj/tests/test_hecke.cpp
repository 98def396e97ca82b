#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lattices.hpp"
#include "thetalat/hecke.hpp"

using namespace thetalat;
using arith::MatZ;
using hecke::Verdict;
using lat::Lattice;
using lat::LatticePtr;
using theta::TIndex;

namespace {

LatticePtr mk(const MatZ& g, const char* label = "") {
    return std::make_shared<Lattice>(g, label);
}

TIndex t1(long v) {
    MatZ m(1, 1);
    m(0, 0) = v;
    return TIndex(1, m);
}

TIndex t2(long a, long b, long c) { return TIndex(2, gram2(a, b, c)); }

}  // namespace

TEST_CASE("exponent identities") {
    // spec substitutions
    CHECK(hecke::exponent_E_j(4, 1, 1, 1, 0) == 0);
    CHECK(hecke::exponent_e_j(1, 1, 0) == 0);
    for (int k : {1, 2, 4})
        for (int n : {1, 2, 3})
            for (int j = 0; j <= 3 && j <= n; ++j) {
                // r0 = r2 = 0 collapses to kj + j(j+1)/2 - j(n+1)
                CHECK(hecke::exponent_E_j(k, n, j, 0, 0) ==
                      static_cast<long>(k) * j + static_cast<long>(j) * (j + 1) / 2 -
                          static_cast<long>(j) * (n + 1));
                for (int r0 = 0; r0 <= j; ++r0)
                    for (int r2 = 0; r0 + r2 <= j; ++r2) {
                        int r = r0 + r2;
                        // the T~ assembly collapses the primed exponents level
                        // by level: for every ell in [r, j],
                        //   E_j = j(k-n-1) + k ell + E'_ell + (j-r)(j-r+1)/2
                        // and e_j = (j - ell) + e'_ell mod 2.
                        for (int ell = r; ell <= j; ++ell) {
                            long lhs = hecke::exponent_E_j(k, n, j, r0, r2);
                            long rhs = static_cast<long>(j) * (k - n - 1) +
                                       static_cast<long>(k) * ell +
                                       hecke::exponent_E_j(k, n, ell, r0, r2, true) +
                                       static_cast<long>(j - r) * (j - r + 1) / 2;
                            CHECK(lhs == rhs);
                            long pe = (j - ell) + hecke::exponent_e_j(ell, r0, r2, true);
                            CHECK((hecke::exponent_e_j(j, r0, r2) - pe) % 2 == 0);
                        }
                    }
            }
}

TEST_CASE("omega classes for E8 at p=2, degree 1") {
    auto e8 = mk(e8_gram(), "E8");
    auto classes = hecke::omega_classes_at(e8, 2, 1, t1(2));
    Int total = 0;
    Int d0_classes = 0, d1_classes = 0;
    for (const auto& [cls, count] : classes) {
        CHECK(count == 2);  // |O(T)| = |{+-1}|
        CHECK(cls.d0 + cls.d1 + cls.d2 == 1);
        total += count;
        if (cls.d0 == 1) d0_classes += 1;
        if (cls.d1 == 1) d1_classes += 1;
    }
    // fiber = {u : q(u) = 8}; the d1 classes come from u = 2v with q(v) = 2
    CHECK(total == theta::rep_number(*e8, t1(8)));
    CHECK(d1_classes == theta::rep_number(*e8, t1(2)) / 2);
    CHECK(d0_classes + d1_classes == Int(static_cast<long>(classes.size())));

    // lambda positions: for a d1 class, j = 0 admits exactly the Lambda = Omega slot
    for (const auto& [cls, count] : classes) {
        auto pos0 = hecke::lambda_positions(cls, 0);
        if (cls.d0 == 1) {
            CHECK(pos0.empty());
        } else {
            REQUIRE(pos0.size() == 1);
            CHECK(pos0[0].r0 == 0);
            CHECK(pos0[0].r2 == 0);
        }
        auto pos1 = hecke::lambda_positions(cls, 1);
        for (const auto& pp : pos1) CHECK(pp.r0 + pp.r2 <= 1);
    }

    // singular index rejected
    CHECK_THROWS_AS(hecke::omega_classes_at(e8, 2, 2, t2(2, 0, 0)), std::invalid_argument);
}

TEST_CASE("T~_0 is the identity map") {
    // the j = 0 coefficient of theta(L)|T~_0 at T equals a(L, T)
    std::vector<MatZ> grams = {det23a_gram(), det23b_gram(), a2_gram(), d4_gram()};
    for (const auto& g : grams) {
        Lattice l(g);
        for (std::int64_t p : {2, 3, 5}) {
            if (!l.good_prime(p)) continue;
            for (long t = 2; t <= 6; t += 2) {
                CAPTURE(arith::mat_str(g));
                CAPTURE(p);
                CAPTURE(t);
                Rat got = hecke::ttilde_coefficient(l, p, 1, 0, t1(t));
                CHECK(got == Rat(theta::rep_number(l, t1(t))));
            }
            for (const auto& key : hecke::nonsingular_keys(2, 6)) {
                CAPTURE(arith::mat_str(g));
                CAPTURE(p);
                CAPTURE(key.str());
                Rat got = hecke::ttilde_coefficient(l, p, 2, 0, key);
                CHECK(got == Rat(theta::rep_number(l, key)));
            }
        }
    }
}

TEST_CASE("split backend agrees with the generic class enumeration") {
    struct Probe {
        MatZ gram;
        std::int64_t p;
    };
    std::vector<Probe> probes = {{det23a_gram(), 2}, {det23a_gram(), 3}, {det23b_gram(), 2},
                                 {a2_gram(), 5},     {diag22_gram(), 3}, {d4_gram(), 3},
                                 {d4_gram(), 5}};
    for (const auto& probe : probes) {
        Lattice l(probe.gram);
        // degree 1
        for (long t = 2; t <= 6; t += 2) {
            auto fast = hecke::ttilde_sums(l, probe.p, 1, t1(t));
            auto slow = hecke::ttilde_sums(l, probe.p, 1, t1(t), theta::kDefaultNodeBudget, 1, true);
            CAPTURE(arith::mat_str(probe.gram));
            CAPTURE(probe.p);
            CAPTURE(t);
            CHECK(fast == slow);
        }
        // degree 2
        for (const auto& key : hecke::nonsingular_keys(2, 6)) {
            auto fast = hecke::ttilde_sums(l, probe.p, 2, key);
            auto slow =
                hecke::ttilde_sums(l, probe.p, 2, key, theta::kDefaultNodeBudget, 1, true);
            CAPTURE(arith::mat_str(probe.gram));
            CAPTURE(probe.p);
            CAPTURE(key.str());
            CHECK(fast == slow);
        }
    }
}

TEST_CASE("thm 5.3 on small lattices") {
    hecke::VerifyOptions opt;
    opt.threads = 2;
    struct Probe {
        MatZ gram;
        std::int64_t p;
        int n;
        int j;
    };
    std::vector<Probe> probes = {
        {det23a_gram(), 2, 1, 1}, {det23a_gram(), 3, 1, 1}, {det23b_gram(), 2, 1, 1},
        {det23a_gram(), 2, 2, 1}, {det23a_gram(), 3, 2, 1}, {a2_gram(), 7, 1, 1},
        {diag22_gram(), 5, 1, 1}, {d4_gram(), 3, 1, 1},     {d4_gram(), 3, 2, 1},
        {d4_gram(), 3, 2, 2},     {d4_gram(), 5, 1, 1},
    };
    for (const auto& probe : probes) {
        Lattice l(probe.gram);
        CAPTURE(arith::mat_str(probe.gram));
        CAPTURE(probe.p);
        CAPTURE(probe.n);
        CAPTURE(probe.j);
        auto rep = hecke::verify_thm53(l, probe.p, probe.n, probe.j, 6, opt);
        if (rep.verdict != Verdict::Pass) MESSAGE(rep.to_text());
        CHECK(rep.verdict == Verdict::Pass);
        CHECK_FALSE(rep.entries.empty());
    }
    // hypothesis violations are named errors
    Lattice d(diag22_gram());
    genus::ClassTableCache cache(1, 4, theta::kDefaultNodeBudget, genus::kDefaultIsometryBudget);
    CHECK_THROWS_WITH_AS(hecke::rhs_thm53_table(d, 3, 1, 1, 4, cache),
                         doctest::Contains("Thm 5.3"), std::domain_error);
    Lattice a(a2_gram());
    CHECK_THROWS_WITH_AS(hecke::rhs_thm53_table(a, 5, 1, 1, 4, cache),
                         doctest::Contains("chi* = -1"), std::domain_error);
}

TEST_CASE("eigenvalue verification on small genera") {
    hecke::VerifyOptions opt;
    opt.threads = 2;
    {
        auto rep = hecke::verify_eigenvalue(mk(det23a_gram(), "det23a"), 2, 1, 1, 8, opt);
        if (rep.verdict != Verdict::Pass) MESSAGE(rep.to_text());
        CHECK(rep.verdict == Verdict::Pass);
        CHECK(rep.lambda == 2);
    }
    {
        // class number 1 at a good prime with chi = +1
        auto rep = hecke::verify_eigenvalue(mk(diag22_gram(), "diag22"), 5, 1, 1, 6, opt);
        CHECK(rep.verdict == Verdict::Pass);
        CHECK(rep.lambda == 2);
    }
    {
        // Cor 5.4(b): chi*(5) = -1 for the det-23 genus and j = k = 1
        auto rep = hecke::verify_eigenvalue(mk(det23a_gram(), "det23a"), 5, 1, 1, 6, opt);
        if (rep.verdict != Verdict::Pass) MESSAGE(rep.to_text());
        CHECK(rep.verdict == Verdict::Pass);
        CHECK(rep.lambda == 0);
        for (const auto& e : rep.entries) CHECK(e.rhs == 0);
    }
    {
        // negative control: corrupted v table must fail with a first mismatch
        hecke::VerifyOptions bad = opt;
        bad.corrupt_v = true;
        auto rep = hecke::verify_eigenvalue(mk(det23a_gram(), "det23a"), 2, 1, 1, 6, bad);
        CHECK(rep.verdict == Verdict::Fail);
    }
    {
        // tiny budget: inconclusive
        hecke::VerifyOptions tiny = opt;
        tiny.node_budget = 3;
        auto rep = hecke::verify_eigenvalue(mk(det23a_gram(), "det23a"), 2, 1, 1, 6, tiny);
        CHECK(rep.verdict == Verdict::Inconclusive);
    }
    // report serialization smoke
    auto rep = hecke::verify_eigenvalue(mk(det23a_gram(), "det23a"), 2, 1, 1, 4, opt);
    std::string js = rep.to_json();
    CHECK(js.find("\"verdict\": \"pass\"") != std::string::npos);
    CHECK(rep.to_text().find("verdict: pass") != std::string::npos);
}
