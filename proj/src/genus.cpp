#include "thetalat/genus.hpp"

#include <algorithm>
#include <set>
#include <thread>

#include <json.hpp>

namespace thetalat {
namespace genus {

using arith::MatQ;
using arith::MatZ;
using lat::Lattice;
using lat::LatticePtr;
using lat::SubframeBasis;
using theta::EnumSpec;
using theta::GramEnumContext;
using theta::enumerate;
using theta::int32_t;
using theta::int64_t;

namespace {

int mod_pos(std::int64_t v, std::int64_t p) {
    std::int64_t r = v % p;
    return static_cast<int>(r < 0 ? r + p : r);
}

// One solution w of b(v_j, w) = rhs_j mod p for given rows v_j (the system is
// solvable because the v_j are independent mod p and the gram is unimodular
// mod p).
std::vector<Int> solve_functional_system(const MatZ& gram, std::int64_t p,
                                         const std::vector<std::vector<Int>>& vs,
                                         const std::vector<int>& rhs) {
    int m = gram.rows;
    int k = static_cast<int>(vs.size());
    // rows of the system: (G v_j)^T mod p
    std::vector<std::vector<int>> a(static_cast<size_t>(k), std::vector<int>(static_cast<size_t>(m) + 1, 0));
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < m; ++i) {
            Int acc = 0;
            for (int t = 0; t < m; ++t) acc += gram(i, t) * vs[static_cast<size_t>(j)][static_cast<size_t>(t)];
            a[static_cast<size_t>(j)][static_cast<size_t>(i)] =
                static_cast<int>(mpz_fdiv_ui(acc.get_mpz_t(), static_cast<unsigned long>(p)));
        }
        a[static_cast<size_t>(j)][static_cast<size_t>(m)] = mod_pos(rhs[static_cast<size_t>(j)], p);
    }
    // Gaussian elimination mod p
    auto inv_mod = [&](int x) {
        for (int y = 1; y < p; ++y)
            if (x * y % p == 1) return y;
        throw std::logic_error("solve_functional_system: not invertible");
    };
    std::vector<int> pivot_col(static_cast<size_t>(k), -1);
    int rank = 0;
    for (int c = 0; c < m && rank < k; ++c) {
        int piv = -1;
        for (int r = rank; r < k; ++r)
            if (a[static_cast<size_t>(r)][static_cast<size_t>(c)] != 0) { piv = r; break; }
        if (piv < 0) continue;
        std::swap(a[static_cast<size_t>(piv)], a[static_cast<size_t>(rank)]);
        int iv = inv_mod(a[static_cast<size_t>(rank)][static_cast<size_t>(c)]);
        for (int cc = 0; cc <= m; ++cc)
            a[static_cast<size_t>(rank)][static_cast<size_t>(cc)] =
                static_cast<int>(static_cast<std::int64_t>(a[static_cast<size_t>(rank)][static_cast<size_t>(cc)]) * iv % p);
        for (int r = 0; r < k; ++r) {
            if (r == rank) continue;
            int f = a[static_cast<size_t>(r)][static_cast<size_t>(c)];
            if (f == 0) continue;
            for (int cc = 0; cc <= m; ++cc)
                a[static_cast<size_t>(r)][static_cast<size_t>(cc)] =
                    mod_pos(a[static_cast<size_t>(r)][static_cast<size_t>(cc)] - static_cast<std::int64_t>(f) * a[static_cast<size_t>(rank)][static_cast<size_t>(cc)], p);
        }
        pivot_col[static_cast<size_t>(rank)] = c;
        ++rank;
    }
    if (rank < k) throw std::logic_error("solve_functional_system: dependent functionals");
    std::vector<Int> w(static_cast<size_t>(m), 0);
    for (int r = 0; r < k; ++r)
        w[static_cast<size_t>(pivot_col[static_cast<size_t>(r)])] = a[static_cast<size_t>(r)][static_cast<size_t>(m)];
    return w;
}

Int q_of(const MatZ& gram, const std::vector<Int>& v) {
    Int acc = 0;
    for (int i = 0; i < gram.rows; ++i) {
        if (v[static_cast<size_t>(i)] == 0) continue;
        Int row = 0;
        for (int j = 0; j < gram.cols; ++j) row += gram(i, j) * v[static_cast<size_t>(j)];
        acc += v[static_cast<size_t>(i)] * row;
    }
    return acc;
}

Int b_of(const MatZ& gram, const std::vector<Int>& v, const std::vector<Int>& w) {
    Int acc = 0;
    for (int i = 0; i < gram.rows; ++i) {
        if (v[static_cast<size_t>(i)] == 0) continue;
        Int row = 0;
        for (int j = 0; j < gram.cols; ++j) row += gram(i, j) * w[static_cast<size_t>(j)];
        acc += v[static_cast<size_t>(i)] * row;
    }
    return acc;
}

// Lifts of an isotropic subspace basis adjusted so that the scaled tuple
// (1/p) X spans an even integral piece: X^T G X = 0 mod p^2 with diagonal
// 0 mod 2 p^2.
std::vector<std::vector<Int>> adjusted_lifts(const MatZ& gram, std::int64_t p,
                                             const std::vector<std::vector<int>>& rows) {
    int m = gram.rows;
    int r = static_cast<int>(rows.size());
    std::vector<std::vector<Int>> vs;
    for (int i = 0; i < r; ++i) {
        std::vector<Int> v(static_cast<size_t>(m));
        for (int j = 0; j < m; ++j) v[static_cast<size_t>(j)] = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
        // corrections against the already-final vectors and itself
        std::vector<std::vector<Int>> sys(vs.begin(), vs.end());
        sys.push_back(v);
        std::vector<int> rhs(static_cast<size_t>(vs.size()) + 1, 0);
        for (size_t j = 0; j < vs.size(); ++j) {
            Int cross = b_of(gram, v, vs[j]);
            Int cp;
            if (p == 2) {
                // want b(v', v_j) = 0 mod 4, have it = 0 mod 2
                cp = -(cross / 2);
            } else {
                cp = -(cross / p);
            }
            rhs[j] = static_cast<int>(mpz_fdiv_ui(cp.get_mpz_t(), static_cast<unsigned long>(p)));
        }
        Int qv = q_of(gram, v);
        Int cself;
        if (p == 2)
            cself = -(qv / 4);
        else
            cself = -(qv / (2 * p));
        rhs[vs.size()] = static_cast<int>(mpz_fdiv_ui(cself.get_mpz_t(), static_cast<unsigned long>(p)));
        std::vector<Int> w = solve_functional_system(gram, p, sys, rhs);
        for (int j = 0; j < m; ++j) v[static_cast<size_t>(j)] += p * w[static_cast<size_t>(j)];
        vs.push_back(std::move(v));
    }
    // exact check of the adjustment
    for (int i = 0; i < r; ++i) {
        Int qi = q_of(gram, vs[static_cast<size_t>(i)]);
        if (qi % (2 * p * p) != 0) throw std::logic_error("adjusted_lifts: diagonal adjustment failed");
        for (int j = 0; j < i; ++j)
            if (b_of(gram, vs[static_cast<size_t>(i)], vs[static_cast<size_t>(j)]) % (p * p) != 0)
                throw std::logic_error("adjusted_lifts: cross adjustment failed");
    }
    return vs;
}

// K = span((1/p) X) + {x in L : X^T G x = 0 mod p} as a canonical subframe.
SubframeBasis assemble_neighbor(LatticePtr lattice, std::int64_t p,
                                const std::vector<std::vector<Int>>& xs) {
    const MatZ& gram = lattice->gram();
    int m = gram.rows;
    int r = static_cast<int>(xs.size());
    // kernel mod p of the r x m matrix X^T G, lifted to Z, plus p Z^m
    std::vector<std::vector<int>> a(static_cast<size_t>(r), std::vector<int>(static_cast<size_t>(m)));
    for (int j = 0; j < r; ++j)
        for (int i = 0; i < m; ++i) {
            Int acc = 0;
            for (int t = 0; t < m; ++t) acc += gram(i, t) * xs[static_cast<size_t>(j)][static_cast<size_t>(t)];
            a[static_cast<size_t>(j)][static_cast<size_t>(i)] =
                static_cast<int>(mpz_fdiv_ui(acc.get_mpz_t(), static_cast<unsigned long>(p)));
        }
    // kernel basis mod p by elimination
    std::vector<std::vector<int>> mat = a;
    std::vector<int> pivots;
    auto inv_mod = [&](int x) {
        for (int y = 1; y < p; ++y)
            if (x * y % p == 1) return y;
        throw std::logic_error("assemble_neighbor: not invertible");
    };
    int rank = 0;
    for (int c = 0; c < m && rank < r; ++c) {
        int piv = -1;
        for (int row2 = rank; row2 < r; ++row2)
            if (mat[static_cast<size_t>(row2)][static_cast<size_t>(c)] != 0) { piv = row2; break; }
        if (piv < 0) continue;
        std::swap(mat[static_cast<size_t>(piv)], mat[static_cast<size_t>(rank)]);
        int iv = inv_mod(mat[static_cast<size_t>(rank)][static_cast<size_t>(c)]);
        for (int cc = 0; cc < m; ++cc)
            mat[static_cast<size_t>(rank)][static_cast<size_t>(cc)] =
                static_cast<int>(static_cast<std::int64_t>(mat[static_cast<size_t>(rank)][static_cast<size_t>(cc)]) * iv % p);
        for (int row2 = 0; row2 < r; ++row2) {
            if (row2 == rank) continue;
            int f = mat[static_cast<size_t>(row2)][static_cast<size_t>(c)];
            if (f == 0) continue;
            for (int cc = 0; cc < m; ++cc)
                mat[static_cast<size_t>(row2)][static_cast<size_t>(cc)] =
                    mod_pos(mat[static_cast<size_t>(row2)][static_cast<size_t>(cc)] - static_cast<std::int64_t>(f) * mat[static_cast<size_t>(rank)][static_cast<size_t>(cc)], p);
        }
        pivots.push_back(c);
        ++rank;
    }
    if (rank != r) throw std::logic_error("assemble_neighbor: functionals not independent");
    // free coordinates give kernel vectors e_c - sum pivots
    MatQ cols(m, r + (m - rank) + m);
    int cidx = 0;
    for (int j = 0; j < r; ++j, ++cidx)
        for (int i = 0; i < m; ++i) cols(i, cidx) = Rat(xs[static_cast<size_t>(j)][static_cast<size_t>(i)], p);
    for (int c = 0; c < m; ++c) {
        if (std::find(pivots.begin(), pivots.end(), c) != pivots.end()) continue;
        for (int row2 = 0; row2 < r; ++row2) {
            int pc = pivots[static_cast<size_t>(row2)];
            int coeff = mat[static_cast<size_t>(row2)][static_cast<size_t>(c)];
            if (coeff != 0) cols(pc, cidx) = -coeff;
        }
        cols(c, cidx) = 1;
        ++cidx;
    }
    for (int c = 0; c < m; ++c, ++cidx) cols(c, cidx) = p;
    for (auto& e : cols.a) e.canonicalize();
    return SubframeBasis(std::move(lattice), cols);
}

void validate_neighbor(const Lattice& base, std::int64_t p, int r, const SubframeBasis& k) {
    auto mults = k.invariant_mults(p);
    std::map<int, int> expect;
    if (r > 0) expect[-1] = r;
    if (base.rank() - 2 * r > 0) expect[0] = base.rank() - 2 * r;
    if (r > 0) expect[1] = r;
    if (mults != expect) throw std::logic_error("neighbor: invariant factor profile violated");
    if (!k.is_even_integral()) throw std::logic_error("neighbor: not even integral");
    MatQ g = k.gram_of();
    if (arith::det(g) != Rat(base.det())) throw std::logic_error("neighbor: determinant changed");
    if (lat::even_lattice_level(arith::to_integral(g)) != base.level())
        throw std::logic_error("neighbor: level changed");
}

}  // namespace

void for_each_neighbor(LatticePtr lattice, std::int64_t p, int r,
                       const std::function<void(const SubframeBasis&)>& cb,
                       std::int64_t subspace_budget) {
    if (!arith::is_prime(p)) throw std::invalid_argument("neighbors: p must be prime");
    if (!lattice->good_prime(p))
        throw std::domain_error("neighbors: p divides the level");
    if (r < 0 || 2 * r > lattice->rank())
        throw std::invalid_argument("neighbors: need 0 <= r <= m/2");
    if (r == 0) {
        cb(SubframeBasis(lattice, MatQ::identity(lattice->rank())));
        return;
    }
    const MatZ& gram = lattice->gram();
    ffq::FFQuadSpace space = ffq::FFQuadSpace::from_even_gram(gram, p);
    Int nsub = arith::beta(p, space.dim(), r);
    if (nsub > subspace_budget)
        throw CapacityError("neighbors: isotropic subspace enumeration over budget");

    // antisymmetric twists S mod p (S_ii = 0, S_ji = -S_ij)
    int npairs = r * (r - 1) / 2;
    std::int64_t twists = 1;
    for (int i = 0; i < npairs; ++i) twists *= p;

    ffq::for_each_totally_isotropic(space, r, [&](const std::vector<std::vector<int>>& rows) {
        auto base = adjusted_lifts(gram, p, rows);
        for (std::int64_t tw = 0; tw < twists; ++tw) {
            std::vector<std::vector<int>> s(static_cast<size_t>(r), std::vector<int>(static_cast<size_t>(r), 0));
            std::int64_t w = tw;
            for (int i = 0; i < r; ++i)
                for (int j = i + 1; j < r; ++j) {
                    int e = static_cast<int>(w % p);
                    w /= p;
                    s[static_cast<size_t>(i)][static_cast<size_t>(j)] = e;
                    s[static_cast<size_t>(j)][static_cast<size_t>(i)] = (p - e) % static_cast<int>(p);
                }
            std::vector<std::vector<Int>> xs = base;
            if (tw != 0) {
                for (int i = 0; i < r; ++i) {
                    std::vector<int> rhs(static_cast<size_t>(r));
                    for (int l = 0; l < r; ++l) rhs[static_cast<size_t>(l)] = s[static_cast<size_t>(l)][static_cast<size_t>(i)];
                    std::vector<Int> u = solve_functional_system(gram, p, base, rhs);
                    for (int j = 0; j < gram.rows; ++j)
                        xs[static_cast<size_t>(i)][static_cast<size_t>(j)] += p * u[static_cast<size_t>(j)];
                }
            }
            SubframeBasis k = assemble_neighbor(lattice, p, xs);
            validate_neighbor(*lattice, p, r, k);
            cb(k);
        }
    });
}

NeighborSet neighbors(LatticePtr lattice, std::int64_t p, int r, std::int64_t subspace_budget) {
    NeighborSet set;
    set.base = lattice;
    set.p = p;
    set.r = r;
    for_each_neighbor(lattice, p, r, [&](const SubframeBasis& k) { set.members.push_back(k); },
                      subspace_budget);
    // pairwise distinct canonical forms
    std::vector<std::string> keys;
    for (const auto& k : set.members) keys.push_back(arith::mat_str(k.cols()));
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
        throw std::logic_error("neighbors: duplicate members");
    std::sort(set.members.begin(), set.members.end(),
              [](const SubframeBasis& a, const SubframeBasis& b) {
                  return arith::mat_str(a.cols()) < arith::mat_str(b.cols());
              });
    return set;
}

Int neighbor_count(const Lattice& lattice, std::int64_t p, int r) {
    if (r == 0) return 1;
    ffq::FFQuadSpace space = ffq::FFQuadSpace::from_even_gram(lattice.gram(), p);
    Int subspaces = ffq::count_totally_isotropic(space, r);
    Int twists;
    mpz_ui_pow_ui(twists.get_mpz_t(), static_cast<unsigned long>(p),
                  static_cast<unsigned long>(r * (r - 1) / 2));
    return subspaces * twists;
}

namespace {

struct SearchTables {
    int m = 0;
    std::vector<std::vector<int32_t>> cands;   // candidate vectors (reduced frame of L2)
    std::vector<int64_t> cand_norm;
    std::vector<int32_t> ip;                   // cand x cand inner products
    std::vector<int64_t> need_norm;            // R1 diagonal
    std::vector<std::vector<int64_t>> need_ip;  // R1 rows

    int64_t pair_ip(size_t a, size_t b) const { return ip[a * cands.size() + b]; }
};

// Collect candidate vectors of every norm appearing on the reduced diagonal.
bool build_tables(const MatZ& g1red, const MatZ& g2red, SearchTables& t,
                  std::int64_t node_budget) {
    int m = g1red.rows;
    t.m = m;
    std::set<int64_t> norms;
    int64_t maxnorm = 0;
    for (int i = 0; i < m; ++i) {
        int64_t v = g1red(i, i).get_si();
        norms.insert(v);
        maxnorm = std::max(maxnorm, v);
    }
    GramEnumContext ctx(g2red);
    EnumSpec spec;
    spec.target = maxnorm;
    spec.upto = true;
    spec.node_budget = node_budget;
    enumerate(ctx, spec, [&](const int32_t* z, int64_t q) {
        if (q == 0 || norms.find(q) == norms.end()) return;
        t.cands.emplace_back(z, z + m);
        t.cand_norm.push_back(q);
    });
    // deterministic candidate order
    std::vector<size_t> order(t.cands.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (t.cand_norm[a] != t.cand_norm[b]) return t.cand_norm[a] < t.cand_norm[b];
        return t.cands[a] < t.cands[b];
    });
    std::vector<std::vector<int32_t>> c2;
    std::vector<int64_t> n2;
    for (size_t i : order) {
        c2.push_back(t.cands[i]);
        n2.push_back(t.cand_norm[i]);
    }
    t.cands = std::move(c2);
    t.cand_norm = std::move(n2);

    size_t nc = t.cands.size();
    if (nc * nc > (size_t(1) << 26)) return false;
    std::vector<std::vector<int64_t>> gv(nc, std::vector<int64_t>(static_cast<size_t>(m)));
    std::vector<int64_t> g64(g2red.a.size());
    for (size_t i = 0; i < g2red.a.size(); ++i) g64[i] = g2red.a[i].get_si();
    for (size_t v = 0; v < nc; ++v)
        for (int i = 0; i < m; ++i) {
            int64_t acc = 0;
            for (int j = 0; j < m; ++j) acc += g64[static_cast<size_t>(i) * m + j] * t.cands[v][static_cast<size_t>(j)];
            gv[v][static_cast<size_t>(i)] = acc;
        }
    t.ip.resize(nc * nc);
    for (size_t a = 0; a < nc; ++a)
        for (size_t b = 0; b < nc; ++b) {
            int64_t acc = 0;
            for (int i = 0; i < m; ++i) acc += static_cast<int64_t>(t.cands[a][static_cast<size_t>(i)]) * gv[b][static_cast<size_t>(i)];
            t.ip[a * nc + b] = static_cast<int32_t>(acc);
        }
    t.need_norm.resize(static_cast<size_t>(m));
    t.need_ip.assign(static_cast<size_t>(m), std::vector<int64_t>(static_cast<size_t>(m)));
    for (int i = 0; i < m; ++i) {
        t.need_norm[static_cast<size_t>(i)] = g1red(i, i).get_si();
        for (int j = 0; j < m; ++j) t.need_ip[static_cast<size_t>(i)][static_cast<size_t>(j)] = g1red(i, j).get_si();
    }
    return true;
}

// Plesken-Souvignier style backtracking: slot s at depth d keeps a pool of
// candidates already consistent with every chosen vector, maintained by
// incremental filtering on descent.  count_all counts every completion;
// otherwise the first witness stops the search.
struct IsoSearch {
    const SearchTables& t;
    std::int64_t budget;
    bool count_all;
    Int count = 0;
    bool budget_hit = false;
    std::vector<size_t> chosen;
    std::vector<size_t> first_witness;
    // pools[depth][s]: candidates for slot s filtered against chosen[0..depth-1]
    std::vector<std::vector<std::vector<size_t>>> pools;

    explicit IsoSearch(const SearchTables& tables, std::int64_t node_budget, bool all)
        : t(tables), budget(node_budget), count_all(all) {
        int m = t.m;
        chosen.resize(static_cast<size_t>(m));
        pools.assign(static_cast<size_t>(m) + 1,
                     std::vector<std::vector<size_t>>(static_cast<size_t>(m)));
        for (int s = 0; s < m; ++s)
            for (size_t c = 0; c < t.cands.size(); ++c)
                if (t.cand_norm[c] == t.need_norm[static_cast<size_t>(s)])
                    pools[0][static_cast<size_t>(s)].push_back(c);
    }

    // returns true when the search must abort (budget, or witness found)
    bool dfs(int depth) {
        if (depth == t.m) {
            count += 1;
            if (first_witness.empty()) first_witness = chosen;
            return !count_all;
        }
        const auto& pool = pools[static_cast<size_t>(depth)][static_cast<size_t>(depth)];
        for (size_t ci : pool) {
            if (--budget < 0) {
                budget_hit = true;
                return true;
            }
            chosen[static_cast<size_t>(depth)] = ci;
            if (descend(depth, ci)) {
                if (dfs(depth + 1)) return true;
            }
        }
        return false;
    }

    // Build depth+1 pools from depth pools using the new choice; false if a
    // future slot has no candidates left.
    bool descend(int depth, size_t ci) {
        int m = t.m;
        for (int s = depth + 1; s < m; ++s) {
            const auto& src = pools[static_cast<size_t>(depth)][static_cast<size_t>(s)];
            auto& dst = pools[static_cast<size_t>(depth) + 1][static_cast<size_t>(s)];
            dst.clear();
            int64_t target = t.need_ip[static_cast<size_t>(s)][static_cast<size_t>(depth)];
            for (size_t cj : src)
                if (t.pair_ip(ci, cj) == target) dst.push_back(cj);
            if (dst.empty()) return false;
        }
        return true;
    }

    // Entry point fixing the first slot to one candidate (for striping).
    bool run_first(size_t ci) {
        if (--budget < 0) {
            budget_hit = true;
            return true;
        }
        chosen[0] = ci;
        if (!descend(0, ci)) return false;
        return dfs(1);
    }
};

}  // namespace

IsometryOutcome is_isometric(const MatZ& gram1, const MatZ& gram2, std::int64_t node_budget) {
    IsometryOutcome out;
    if (gram1.rows != gram2.rows) return out;
    if (arith::det(gram1) != arith::det(gram2)) return out;
    if (lat::even_lattice_level(gram1) != lat::even_lattice_level(gram2)) return out;
    arith::LLLResult r1 = arith::lll_reduce_gram(gram1);
    arith::LLLResult r2 = arith::lll_reduce_gram(gram2);

    // shell fingerprint up to the largest reduced diagonal
    int64_t max1 = 0, max2 = 0;
    for (int i = 0; i < gram1.rows; ++i) {
        max1 = std::max(max1, r1.gram(i, i).get_si());
        max2 = std::max(max2, r2.gram(i, i).get_si());
    }
    int64_t maxn = std::max(max1, max2);
    SearchTables tables;
    try {
        GramEnumContext c1(r1.gram), c2(r2.gram);
        std::map<int64_t, int64_t> f1, f2;
        EnumSpec spec;
        spec.target = maxn;
        spec.upto = true;
        spec.node_budget = node_budget;
        enumerate(c1, spec, [&](const int32_t*, int64_t q) { ++f1[q]; });
        enumerate(c2, spec, [&](const int32_t*, int64_t q) { ++f2[q]; });
        if (f1 != f2) return out;
        if (!build_tables(r1.gram, r2.gram, tables, node_budget))
            throw CapacityError("is_isometric: candidate table over budget");
    } catch (const CapacityError&) {
        out.status = IsoStatus::BudgetExhausted;
        return out;
    }
    IsoSearch search(tables, node_budget, false);
    search.dfs(0);
    if (search.budget_hit) {
        out.status = IsoStatus::BudgetExhausted;
        return out;
    }
    if (search.count == 0) return out;

    // Witness columns live in the reduced frame of gram2:
    //   (u2 X)^T gram2 (u2 X) = u1^T gram1 u1,
    // so W = u2 X u1^{-1} pulls gram2 back to gram1 and g = W^{-1} satisfies
    // g^T gram1 g = gram2 (the spec orientation).
    int m = gram1.rows;
    MatZ x(m, m);
    for (int i = 0; i < m; ++i)
        for (int s = 0; s < m; ++s)
            x(i, s) = tables.cands[search.first_witness[static_cast<size_t>(s)]][static_cast<size_t>(i)];
    MatZ y = arith::mul(r2.u, x);
    MatZ w = arith::to_integral(arith::mul(arith::to_rational(y), arith::inverse(arith::to_rational(r1.u))));
    if (!(arith::mul(arith::mul(w.transpose(), gram2), w) == gram1))
        throw std::logic_error("is_isometric: witness verification failed");
    MatZ g = arith::to_integral(arith::inverse(arith::to_rational(w)));
    if (!(arith::mul(arith::mul(g.transpose(), gram1), g) == gram2))
        throw std::logic_error("is_isometric: witness orientation failed");
    out.status = IsoStatus::Found;
    out.witness = g;
    return out;
}

IsometryOutcome is_isometric(const Lattice& l1, const Lattice& l2, std::int64_t node_budget) {
    return is_isometric(l1.gram(), l2.gram(), node_budget);
}

Int aut_order(const MatZ& gram, std::int64_t node_budget, int threads) {
    arith::LLLResult r = arith::lll_reduce_gram(gram);
    SearchTables tables;
    if (!build_tables(r.gram, r.gram, tables, node_budget))
        throw CapacityError("aut_order: candidate table over budget");

    int nthreads = std::max(1, threads);
    if (nthreads == 1) {
        IsoSearch search(tables, node_budget, true);
        search.dfs(0);
        if (search.budget_hit) throw CapacityError("aut_order: node budget exhausted");
        return search.count;
    }
    // stripe the first slot's candidates across threads
    std::vector<size_t> first_pool;
    for (size_t c = 0; c < tables.cands.size(); ++c)
        if (tables.cand_norm[c] == tables.need_norm[0]) first_pool.push_back(c);
    std::vector<Int> parts(static_cast<size_t>(nthreads), 0);
    std::vector<bool> hits(static_cast<size_t>(nthreads), false);
    auto work = [&](int tid) {
        IsoSearch search(tables, node_budget, true);
        for (size_t idx = static_cast<size_t>(tid); idx < first_pool.size();
             idx += static_cast<size_t>(nthreads)) {
            if (search.run_first(first_pool[idx]) && search.budget_hit) break;
        }
        parts[static_cast<size_t>(tid)] = search.count;
        hits[static_cast<size_t>(tid)] = search.budget_hit;
    };
    std::vector<std::thread> ts;
    for (int tid = 0; tid < nthreads; ++tid) ts.emplace_back(work, tid);
    for (auto& th : ts) th.join();
    for (bool h : hits)
        if (h) throw CapacityError("aut_order: node budget exhausted");
    Int total = 0;
    for (const Int& c : parts) total += c;
    return total;
}

Int aut_order(const Lattice& lattice, std::int64_t node_budget, int threads) {
    return aut_order(lattice.gram(), node_budget, threads);
}

Rat GenusDecomposition::mass() const {
    Rat m(0);
    for (const Int& o : aut_orders) {
        Rat term(1, o);
        term.canonicalize();
        m += term;
    }
    m.canonicalize();
    return m;
}

GenusDecomposition genus_classes(LatticePtr seed, std::int64_t p, std::int64_t isometry_budget,
                                 std::int64_t subspace_budget) {
    GenusDecomposition g;
    g.seed = seed;
    g.p = p;
    g.classes.push_back(*seed);
    g.closure_verified = true;

    size_t next = 0;
    while (next < g.classes.size()) {
        auto rep = std::make_shared<Lattice>(g.classes[next]);
        std::vector<Int> row(g.classes.size(), 0);
        for_each_neighbor(rep, p, 1, [&](const SubframeBasis& k) {
            Lattice kl = lat::lattice_from_subframe(k);
            for (size_t c = 0; c < g.classes.size(); ++c) {
                IsometryOutcome iso = is_isometric(g.classes[c], kl, isometry_budget);
                if (iso.status == IsoStatus::BudgetExhausted)
                    throw CapacityError("genus_classes: isometry budget exhausted");
                if (iso.status == IsoStatus::Found) {
                    if (c < row.size()) row[c] += 1;
                    return;
                }
            }
            g.classes.push_back(kl);
            row.push_back(1);
        }, subspace_budget);
        row.resize(g.classes.size(), 0);
        g.neighbor_multiplicity.push_back(row);
        ++next;
    }
    for (auto& row : g.neighbor_multiplicity) row.resize(g.classes.size(), 0);
    for (const auto& cls : g.classes) g.aut_orders.push_back(aut_order(cls.gram(), isometry_budget, 2));
    return g;
}

theta::CoeffTable genus_average_table(const GenusDecomposition& genus, int n, std::int64_t bound,
                                      std::int64_t node_budget, int threads) {
    theta::CoeffTable avg;
    avg.n = n;
    avg.bound = bound;
    for (size_t c = 0; c < genus.classes.size(); ++c) {
        theta::CoeffTable t = theta::theta_table(genus.classes[c], n, bound, node_budget, threads);
        Rat w(1, genus.aut_orders[c]);
        w.canonicalize();
        avg.add_scaled(t, w);
    }
    return avg;
}

std::string genus_to_json(const GenusDecomposition& genus) {
    nlohmann::ordered_json j;
    j["seed"] = genus.seed ? genus.seed->label() : "";
    j["p"] = genus.p;
    j["closure_verified"] = genus.closure_verified;
    j["mass"] = genus.mass().get_str();
    auto classes = nlohmann::ordered_json::array();
    for (size_t c = 0; c < genus.classes.size(); ++c) {
        nlohmann::ordered_json e;
        auto rows = nlohmann::ordered_json::array();
        const auto& gm = genus.classes[c].gram();
        for (int i = 0; i < gm.rows; ++i) {
            auto row = nlohmann::ordered_json::array();
            for (int jj = 0; jj < gm.cols; ++jj) row.push_back(gm(i, jj).get_si());
            rows.push_back(row);
        }
        e["gram"] = rows;
        e["aut_order"] = genus.aut_orders[c].get_str();
        classes.push_back(e);
    }
    j["classes"] = classes;
    auto mat = nlohmann::ordered_json::array();
    for (const auto& row : genus.neighbor_multiplicity) {
        auto r = nlohmann::ordered_json::array();
        for (const auto& v : row) r.push_back(v.get_str());
        mat.push_back(r);
    }
    j["neighbor_multiplicity"] = mat;
    return j.dump(2);
}

const theta::CoeffTable& ClassTableCache::table_for(const MatZ& gram) {
    for (size_t i = 0; i < reps_.size(); ++i) {
        IsometryOutcome iso = is_isometric(reps_[i], gram, isometry_budget_);
        if (iso.status == IsoStatus::BudgetExhausted)
            throw CapacityError("class table cache: isometry budget exhausted");
        if (iso.status == IsoStatus::Found) return tables_[i];
    }
    reps_.push_back(gram);
    tables_.push_back(theta::theta_table(gram, n_, bound_, node_budget_, threads_));
    return tables_.back();
}

}  // namespace genus
}  // namespace thetalat
