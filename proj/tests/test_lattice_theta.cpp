#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <random>

#include "lattices.hpp"
#include "thetalat/lattice.hpp"
#include "thetalat/theta.hpp"

using namespace thetalat;
using arith::MatQ;
using arith::MatZ;
using lat::Lattice;
using lat::LatticePtr;
using lat::SubframeBasis;
using theta::CoeffTable;
using theta::TIndex;

namespace {

TIndex t1(long v) {
    MatZ m(1, 1);
    m(0, 0) = v;
    return TIndex(1, m);
}

TIndex t2(long a, long b, long c) { return TIndex(2, gram2(a, b, c)); }

MatZ random_unimodular2(std::mt19937_64& rng) {
    MatZ u = MatZ::identity(2);
    std::uniform_int_distribution<int> coef(-2, 2);
    for (int s = 0; s < 4; ++s) {
        int c = coef(rng);
        if (s % 2 == 0)
            for (int r = 0; r < 2; ++r) u(r, 1) += c * u(r, 0);
        else
            for (int r = 0; r < 2; ++r) u(r, 0) += c * u(r, 1);
    }
    return u;
}

}  // namespace

TEST_CASE("lattice invariants") {
    Lattice e8(e8_gram(), "E8");
    CHECK(e8.rank() == 8);
    CHECK(e8.k() == 4);
    CHECK(e8.det() == 1);
    CHECK(e8.level() == 1);
    for (std::int64_t p : {2, 3, 5, 7, 11}) CHECK(e8.chi_star(p) == 1);

    Lattice a(det23a_gram());
    CHECK(a.det() == 23);
    CHECK(a.level() == 23);
    CHECK(a.chi_star(2) == 1);                       // -23 = 1 mod 8
    CHECK(a.chi_star(5) == arith::kronecker(-23, 5));
    CHECK(a.chi_star(5) == -1);
    CHECK_THROWS_AS(a.chi_star(23), std::domain_error);

    Lattice d(diag22_gram());
    CHECK(d.level() == 4);
    CHECK_THROWS_AS(d.chi_star(2), std::domain_error);
    CHECK(d.chi_star(3) == -1);
    CHECK(d.chi_star(5) == 1);

    Lattice a2(a2_gram());
    CHECK(a2.det() == 3);
    CHECK(a2.chi_star(5) == -1);  // kronecker(-3, 5)

    // invariant violations are named
    CHECK_THROWS_WITH_AS((Lattice(gram2(1, 0, 2))), doctest::Contains("not even"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS((Lattice(gram2(2, 3, 2))), doctest::Contains("positive definite"),
                         std::invalid_argument);
    MatZ odd3(3, 3);
    for (int i = 0; i < 3; ++i) odd3(i, i) = 2;
    CHECK_THROWS_WITH_AS((Lattice(odd3)), doctest::Contains("m must be even"),
                         std::invalid_argument);
    MatZ asym = gram2(2, 1, 2);
    asym(0, 1) = 0;
    CHECK_THROWS_WITH_AS((Lattice(asym)), doctest::Contains("symmetric"), std::invalid_argument);
}

TEST_CASE("lattice json io") {
    Lattice a = lat::lattice_from_json(R"({"label":"det23a","gram":[[2,1],[1,12]]})");
    CHECK(a.label() == "det23a");
    CHECK(a.det() == 23);
    std::string round = lat::lattice_to_json(a);
    Lattice b = lat::lattice_from_json(round);
    CHECK(b.gram() == a.gram());
    CHECK_THROWS_WITH_AS(lat::lattice_from_json(R"({"gram":[[2,1],[1]]})"),
                         doctest::Contains("square"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(lat::lattice_from_json(R"({"label":"x"})"),
                         doctest::Contains("gram"), std::invalid_argument);
    CHECK_THROWS_AS(lat::lattice_from_json("{"), std::invalid_argument);
}

TEST_CASE("dual and subframes") {
    auto e8 = std::make_shared<Lattice>(e8_gram(), "E8");
    SubframeBasis dual_e8 = lat::dual(e8);
    CHECK(dual_e8.cols() == MatQ::identity(8));  // unimodular: dual = L
    CHECK(dual_e8.is_even_integral());

    auto d = std::make_shared<Lattice>(diag22_gram());
    SubframeBasis dual_d = lat::dual(d);
    MatQ expect(2, 2);
    expect(0, 0) = Rat(1, 2);
    expect(1, 1) = Rat(1, 2);
    CHECK(dual_d.cols() == expect);
    CHECK(arith::det(dual_d.gram_of()) == Rat(1, 4));  // 1/det
    CHECK_FALSE(dual_d.is_even_integral());

    // invariant factor multiplicities
    SubframeBasis full(d, MatQ::identity(2));
    auto mm = full.invariant_mults(2);
    CHECK(mm == std::map<int, int>({{0, 2}}));
    MatQ half = MatQ::identity(2);
    half(0, 0) = Rat(1, 2);
    half(1, 1) = Rat(1, 2);
    SubframeBasis pinv(d, half);
    CHECK(pinv.invariant_mults(2) == std::map<int, int>({{-1, 2}}));
    CHECK_FALSE(pinv.is_even_integral());
    MatQ twice = MatQ::identity(2);
    twice(0, 0) = 2;
    twice(1, 1) = 2;
    SubframeBasis pl(d, twice);
    CHECK(pl.invariant_mults(2) == std::map<int, int>({{1, 2}}));
    CHECK(pl.is_even_integral());

    // canonical HNF: same span, same representative
    std::mt19937_64 rng(404);
    for (int it = 0; it < 20; ++it) {
        MatZ u = random_unimodular2(rng);
        MatQ cols = arith::mul(half, arith::to_rational(u));
        SubframeBasis again(d, cols);
        CHECK(again.cols() == pinv.cols());
    }
}

TEST_CASE("canonicalize_T") {
    CHECK(theta::canonicalize_T(t1(4)) == t1(4));
    CHECK(theta::canonicalize_T(t2(2, -1, 2)) == t2(2, 1, 2));
    CHECK(theta::canonicalize_T(t2(4, 0, 2)) == t2(2, 0, 4));
    CHECK(theta::canonicalize_T(t2(8, 4, 2)) == t2(2, 0, 0));  // rank one: 2(2x+y)^2
    CHECK(theta::canonicalize_T(t2(0, 0, 0)) == t2(0, 0, 0));
    CHECK_THROWS_AS(theta::canonicalize_T(t2(2, 2, 1)), std::invalid_argument);   // odd diagonal
    CHECK_THROWS_AS(theta::canonicalize_T(t2(2, 3, 2)), std::invalid_argument);   // indefinite
    // canonical form is a GL_2(Z)-class invariant
    std::mt19937_64 rng(777);
    std::vector<TIndex> probes = {t2(2, 0, 2), t2(2, 1, 2), t2(2, 1, 4), t2(4, 2, 6), t2(2, 0, 0), t2(6, 3, 2)};
    for (const auto& t : probes) {
        TIndex canon = theta::canonicalize_T(t);
        for (int it = 0; it < 25; ++it) {
            MatZ g = random_unimodular2(rng);
            MatZ tg = arith::mul(arith::mul(g.transpose(), t.mat), g);
            CHECK(theta::canonicalize_T(TIndex(2, tg)) == canon);
        }
    }
}

TEST_CASE("representation numbers") {
    Lattice e8(e8_gram(), "E8");
    CHECK(theta::rep_number(e8, t1(0)) == 1);
    CHECK(theta::rep_number(e8, t1(2)) == 240);
    CHECK(theta::rep_number(e8, t1(4)) == 2160);
    CHECK(theta::rep_number(e8, t1(6)) == 6720);

    Lattice d(diag22_gram());
    CHECK(theta::rep_number(d, t1(2)) == 4);

    // degree 2 values cross-checked against the pair table below
    CHECK(theta::rep_number(e8, t2(2, 0, 2)) == 240 * 126);
    CHECK(theta::rep_number(e8, t2(2, 1, 2)) == 240 * 56);

    // diagonal probe at degree 3 agrees with a hand degree-2 reduction:
    // a(diag(2,2,2)) counts orthogonal triples of roots
    TIndex t3(3, [] {
        MatZ m(3, 3);
        m(0, 0) = 2; m(1, 1) = 2; m(2, 2) = 2;
        return m;
    }());
    Lattice d4(d4_gram(), "D4");
    // count via pairs: for each orthogonal root pair, roots orthogonal to both
    Int expected = 0;
    auto shell2 = theta::shell_vectors(d4.gram(), 2);
    for (const auto& u : shell2)
        for (const auto& v : shell2) {
            if (arith::bilinear(d4.gram(), u, v) != 0) continue;
            for (const auto& w : shell2) {
                if (arith::bilinear(d4.gram(), u, w) == 0 &&
                    arith::bilinear(d4.gram(), v, w) == 0)
                    expected += 1;
            }
        }
    CHECK(theta::rep_number(d4, t3) == expected);
}

TEST_CASE("GL invariance of representation numbers") {
    std::mt19937_64 rng(9001);
    Lattice a(det23a_gram());
    Lattice e8(e8_gram(), "E8");
    // single shears keep the transformed entries small enough to enumerate
    std::vector<MatZ> gs;
    for (int c : {-2, -1, 1, 2}) {
        MatZ g = MatZ::identity(2);
        g(0, 1) = c;
        gs.push_back(g);
        MatZ h = MatZ::identity(2);
        h(1, 0) = c;
        gs.push_back(h);
    }
    MatZ sw(2, 2);
    sw(0, 1) = 1;
    sw(1, 0) = -1;
    gs.push_back(sw);
    std::vector<TIndex> probes = {t2(2, 0, 2), t2(2, 1, 2), t2(2, 1, 4), t2(2, 0, 4)};
    for (const auto& t : probes) {
        Int base_a = theta::rep_number(a, t);
        Int base_e = theta::rep_number(e8, t);
        for (const auto& g : gs) {
            MatZ tg = arith::mul(arith::mul(g.transpose(), t.mat), g);
            TIndex tt(2, tg);
            CHECK(theta::rep_number(a, tt) == base_a);
            CHECK(theta::rep_number(e8, tt) == base_e);
        }
    }
}

TEST_CASE("theta tables") {
    Lattice e8(e8_gram(), "E8");
    CoeffTable tab = theta::theta_table(e8, 1, 4);
    CHECK(tab.at(t1(0)) == 1);
    CHECK(tab.at(t1(2)) == 240);
    CHECK(tab.at(t1(4)) == 2160);
    CHECK(tab.entries.size() == 3);

    CoeffTable zero_bound = theta::theta_table(e8, 1, 0);
    CHECK(zero_bound.at(t1(0)) == 1);
    CHECK(zero_bound.entries.size() == 1);

    // degree 2: every entry agrees with an independent rep_number computation
    CoeffTable tab2 = theta::theta_table(e8, 2, 4);
    for (const auto& [key, val] : tab2.entries) {
        CAPTURE(key.str());
        CHECK(Rat(theta::rep_number(e8, key)) == val);
    }
    // no two keys GL-equivalent, all canonical
    for (const auto& [key, val] : tab2.entries) CHECK(theta::canonicalize_T(key) == key);

    // determinism under threading
    CoeffTable tab2b = theta::theta_table(e8, 2, 4, theta::kDefaultNodeBudget, 2);
    CHECK(tab2 == tab2b);

    // column consistency at degree 2 (raw double enumeration oracle)
    Lattice a(det23a_gram());
    std::int64_t bound = 6;
    CoeffTable ta = theta::theta_table(a, 2, bound);
    std::map<std::array<long, 3>, Rat> raw;
    std::vector<std::vector<Int>> ball;
    for (std::int64_t q = 0; q <= bound; q += 2)
        for (const auto& v : theta::shell_vectors(a.gram(), q)) {
            std::vector<Int> vi(v.size());
            for (size_t i = 0; i < v.size(); ++i) vi[i] = Int(static_cast<long>(v[i]));
            ball.push_back(vi);
        }
    for (const auto& u : ball)
        for (const auto& v : ball) {
            Int qu = arith::bilinear(a.gram(), u, u);
            Int qv = arith::bilinear(a.gram(), v, v);
            if (qu + qv > bound) continue;
            Int b = arith::bilinear(a.gram(), u, v);
            raw[{qu.get_si(), b.get_si(), qv.get_si()}] += 1;
        }
    for (const auto& [key, val] : ta.entries) {
        auto it = raw.find({key.mat(0, 0).get_si(), key.mat(0, 1).get_si(), key.mat(1, 1).get_si()});
        Rat rv = it == raw.end() ? Rat(0) : it->second;
        CAPTURE(key.str());
        CHECK(rv == val);
    }
    // marginal: sum over second columns equals a(L,(t)) * #ball-slices
    for (std::int64_t t = 0; t <= bound; t += 2) {
        Int lhs = 0;
        for (const auto& u : ball) {
            if (arith::bilinear(a.gram(), u, u) != t) continue;
            for (const auto& v : ball)
                if (t + arith::bilinear(a.gram(), v, v) <= bound) lhs += 1;
        }
        Int vecs_t = theta::rep_number(a, t1(t));
        Int ball_rest = 0;
        for (std::int64_t q = 0; q + t <= bound; q += 2) ball_rest += theta::rep_number(a, t1(q));
        CHECK(lhs == vecs_t * ball_rest);
    }
}

TEST_CASE("coeff table serialization round trip") {
    Lattice a(det23a_gram());
    for (int n : {1, 2}) {
        CoeffTable t = theta::theta_table(a, n, 6);
        CoeffTable back = CoeffTable::from_csv(t.to_csv());
        CHECK(back == t);
        CHECK(back.to_csv() == t.to_csv());  // bit-exact
        CoeffTable jback = CoeffTable::from_json(t.to_json());
        CHECK(jback == t);
        CHECK(jback.to_json() == t.to_json());
    }
    // rational entries survive
    CoeffTable g;
    g.n = 1;
    g.bound = 2;
    g.entries[t1(0)] = Rat(1, 696729600);
    g.entries[t1(2)] = Rat(240, 696729600);
    for (auto& [k, v] : g.entries) v.canonicalize();
    CHECK(CoeffTable::from_csv(g.to_csv()) == g);
    CHECK(CoeffTable::from_json(g.to_json()) == g);
}
