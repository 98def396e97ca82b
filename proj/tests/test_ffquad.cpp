#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lattices.hpp"
#include "thetalat/ffquad.hpp"

using namespace thetalat;
using namespace thetalat::ffq;
using arith::MatZ;

namespace {

// Spaces over F_p assembled from standard even blocks, covering all Witt
// types and radical paddings.
FFQuadSpace block_space(std::int64_t p, const std::string& spec_str) {
    // each char: 'h' hyperbolic plane, 'm' minus plane, '1' unit line <2>,
    // 'w' nonsquare line <2w>, 'z' zero line, 'd' defective line (p=2 only)
    std::vector<MatZ> blocks;
    std::vector<int> qd2;
    for (char c : spec_str) {
        switch (c) {
            case 'h': blocks.push_back(gram2(0, 1, 0)); if (p == 2) { qd2.push_back(0); qd2.push_back(0);} break;
            case 'm':
                if (p == 2) { blocks.push_back(gram2(2, 1, 2)); qd2.push_back(1); qd2.push_back(1); }
                else {
                    // <2, -2w> with w a nonsquare mod p
                    int w = 0;
                    for (int x = 2; x < p; ++x) {
                        bool sq = false;
                        for (int y = 1; y < p; ++y) sq = sq || (y * y % p == x);
                        if (!sq) { w = x; break; }
                    }
                    MatZ b(2, 2);
                    b(0, 0) = 2;
                    b(1, 1) = -2 * w;
                    blocks.push_back(b);
                }
                break;
            case '1': { MatZ b(1, 1); b(0, 0) = 2; blocks.push_back(b); if (p == 2) qd2.push_back(1); break; }
            case 'w': {
                int w = 0;
                for (int x = 2; x < p; ++x) {
                    bool sq = false;
                    for (int y = 1; y < p; ++y) sq = sq || (y * y % p == x);
                    if (!sq) { w = x; break; }
                }
                MatZ b(1, 1);
                b(0, 0) = 2 * w;
                blocks.push_back(b);
                break;
            }
            case 'z': { MatZ b(1, 1); blocks.push_back(b); if (p == 2) qd2.push_back(0); break; }
            case 'd': { MatZ b(1, 1); blocks.push_back(b); qd2.push_back(1); break; }
            default: throw std::logic_error("bad block spec");
        }
    }
    int dim = 0;
    for (auto& b : blocks) dim += b.rows;
    MatZ g(dim, dim);
    int off = 0;
    for (auto& b : blocks) {
        for (int i = 0; i < b.rows; ++i)
            for (int j = 0; j < b.cols; ++j) g(off + i, off + j) = b(i, j);
        off += b.rows;
    }
    if (p == 2) {
        std::vector<int> bil(static_cast<size_t>(dim) * dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                bil[static_cast<size_t>(i) * dim + j] =
                    (i == j) ? 0 : static_cast<int>(mpz_fdiv_ui(g(i, j).get_mpz_t(), 2));
        return FFQuadSpace(2, dim, bil, qd2);
    }
    return FFQuadSpace::from_even_gram(g, p);
}

}  // namespace

TEST_CASE("witt classification") {
    auto h3 = block_space(3, "h");
    auto r = classify(h3);
    CHECK(r.radical_dim == 0);
    CHECK(r.witt_type == WittType::Plus);

    // diag(1,1) over F_3: x^2 + y^2 has only the trivial zero
    auto m3 = FFQuadSpace::from_even_gram(gram2(2, 0, 2), 3);
    bool any_zero = false;
    for (int x = 0; x < 3 && !any_zero; ++x)
        for (int y = 0; y < 3; ++y) {
            if (x == 0 && y == 0) continue;
            if (m3.q_value({x, y}) == 0) { any_zero = true; break; }
        }
    CHECK_FALSE(any_zero);
    auto rm = classify(m3);
    CHECK(rm.radical_dim == 0);
    CHECK(rm.witt_type == WittType::Minus);

    auto z2 = block_space(3, "zz");
    auto rz = classify(z2);
    CHECK(rz.radical_dim == 2);
    CHECK(rz.nondegenerate_dim == 0);

    // p = 2: hyperbolic vs the even anisotropic plane
    auto h2 = block_space(2, "h");
    CHECK(classify(h2).witt_type == WittType::Plus);
    auto a2 = block_space(2, "m");
    CHECK(classify(a2).witt_type == WittType::Minus);
    auto d2 = block_space(2, "hd");
    auto rd = classify(d2);
    CHECK(rd.witt_type == WittType::Odd);

    // odd-dimensional regular space over F_3
    auto o3 = block_space(3, "h1");
    CHECK(classify(o3).witt_type == WittType::Odd);
    CHECK(classify(o3).radical_dim == 0);
}

TEST_CASE("totally isotropic counts: closed form vs echelon brute force") {
    CHECK(count_totally_isotropic(block_space(2, "hhhh"), 1) == 135);
    CHECK(count_totally_isotropic(block_space(3, "m"), 1) == 0);
    CHECK(count_totally_isotropic(block_space(3, "h"), 1) == 2);
    for (std::int64_t p : {2, 3}) {
        std::vector<std::string> specs = {"h", "m", "hh", "hm", "h1", "hz", "mz", "hhz", "1", "w", "hhh"};
        if (p == 2) specs = {"h", "m", "hh", "hm", "hz", "mz", "hd", "hhz", "d", "hhh"};
        for (const auto& s : specs) {
            auto v = block_space(p, s);
            if (v.dim() > 6) continue;
            for (int d = 0; d <= v.dim(); ++d) {
                CAPTURE(p);
                CAPTURE(s);
                CAPTURE(d);
                CHECK(count_totally_isotropic(v, d) == count_totally_isotropic_brute(v, d));
            }
        }
    }
}

TEST_CASE("alpha_j edge cases") {
    auto v = block_space(3, "h");
    CHECK(alpha_j(v, 2, 0, 0, 0) == 1);   // j = r = 0
    CHECK(alpha_j(v, 2, 1, 0, 0) == 2);   // isotropic lines of H
    auto zero_dim = FFQuadSpace(3, 0, {});
    CHECK(alpha_j(zero_dim, 2, 2, 1, 1) == 1);  // j = r0 + r2
    CHECK(alpha_j(zero_dim, 2, 1, 1, 1) == 0);  // j < r0 + r2
}

TEST_CASE("r*, R* and orthogonal group orders") {
    auto zero0 = FFQuadSpace(3, 0, {});
    auto rs0 = rep_count_rstar(block_space(3, "h"), zero0);
    CHECK(rs0.r_star == 1);
    CHECK(rs0.big_r_star == 1);
    CHECK(orth_order(zero0) == 1);

    auto h = block_space(3, "h");
    auto zero1 = FFQuadSpace(3, 1, {0});
    auto rs = rep_count_rstar(h, zero1);
    CHECK(rs.r_star == 4);           // nonzero isotropic vectors of H
    CHECK(orth_order(zero1) == 2);   // GL_1(F_3)
    CHECK(rs.big_r_star == 2);       // isotropic lines

    CHECK(orth_order(h) == 4);       // O^+_2(F_3), order 2(q-1)

    // identity embedding V = U gives R* >= 1
    auto rs2 = rep_count_rstar(h, h);
    CHECK(rs2.big_r_star >= 1);

    // orbit-stabilizer consistency at q = 3, dims <= 2 (divisibility is
    // asserted inside rep_count_rstar; recheck the product here)
    for (const char* s : {"1", "w", "z", "h", "m"}) {
        auto u = block_space(3, s);
        if (u.dim() > h.dim()) continue;
        auto rr = rep_count_rstar(h, u);
        CHECK(rr.r_star == rr.big_r_star * orth_order(u));
    }
}

TEST_CASE("gauss sums reduce to chi* p^k") {
    // hyperbolic plane at p = 3
    auto g1 = gauss_sum_lattice(gram2(0, 1, 0), 3);
    CHECK(g1.is_integer());
    CHECK(g1.to_integer() == 3);
    // E8 at p = 3: 3^8-term sum collapses to 3^4
    auto g2 = gauss_sum_lattice(e8_gram(), 3);
    CHECK(g2.is_integer());
    CHECK(g2.to_integer() == 81);
    // <2, -2w> with w a nonsquare: -p
    for (std::int64_t p : {3, 5, 7}) {
        int w = 0;
        for (int x = 2; x < p; ++x) {
            bool sq = false;
            for (int y = 1; y < p; ++y) sq = sq || (y * y % p == x);
            if (!sq) { w = x; break; }
        }
        auto g3 = gauss_sum_lattice(gram2(2, 0, -2 * w), p);
        CHECK(g3.is_integer());
        CHECK(g3.to_integer() == -p);
    }
    // p dividing the level is rejected
    CHECK_THROWS_AS(gauss_sum_lattice(diag22_gram(), 2), std::invalid_argument);
    CHECK_THROWS_AS(gauss_sum_lattice(gram2(0, 3, 0), 3), std::domain_error);
}

TEST_CASE("thm 4.5 closing identity on a reduced grid") {
    // full grid at q = 3 for dims <= 3, plus spot checks at q = 5
    for (std::int64_t q : {3, 5}) {
        std::vector<std::string> specs = {"", "1", "w", "z", "h", "m", "1z", "hz", "h1", "hw", "mz", "1zz"};
        for (const auto& s : specs) {
            auto v = block_space(q, s);
            if (v.dim() > 3) continue;
            if (q == 5 && v.dim() > 2) continue;
            for (int r = 0; r <= 2; ++r) {
                int n = v.dim() + r;
                for (int j = r; j <= std::min(n, 3); ++j) {
                    CAPTURE(q);
                    CAPTURE(s);
                    CAPTURE(r);
                    CAPTURE(j);
                    CHECK(thm45_closing_identity_check(v, n, j, r));
                }
            }
        }
    }
    // spec examples
    CHECK(thm45_closing_identity_check(block_space(3, "h"), 2, 1, 0));
    CHECK(thm45_closing_identity_check(block_space(3, "m"), 2, 2, 0));
}
