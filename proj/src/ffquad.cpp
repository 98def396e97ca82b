#include "thetalat/ffquad.hpp"

#include <algorithm>
#include <cmath>

namespace thetalat {
namespace ffq {

using arith::CycInt;
using arith::MatZ;

namespace {

int mod_pos(std::int64_t v, std::int64_t p) {
    std::int64_t r = v % p;
    return static_cast<int>(r < 0 ? r + p : r);
}

int inv_mod(int a, std::int64_t p) {
    // p is a small prime
    int a0 = mod_pos(a, p);
    for (int x = 1; x < p; ++x)
        if (a0 * x % p == 1) return x;
    throw std::domain_error("inv_mod: not invertible");
}

int legendre(std::int64_t a, std::int64_t p) {
    int r = mod_pos(a, p);
    if (r == 0) return 0;
    for (int x = 1; x < p; ++x)
        if (x * x % p == r) return 1;
    return -1;
}

// Kernel of the bilinear Gram over F_p, as a list of basis vectors,
// plus the indices of coordinates giving a complement.
struct KernelData {
    std::vector<std::vector<int>> kernel;
    std::vector<int> pivot_coords;
};

KernelData bilin_kernel(const FFQuadSpace& s) {
    std::int64_t p = s.p();
    int n = s.dim();
    std::vector<std::vector<int>> m(static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(n)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m[static_cast<size_t>(i)][static_cast<size_t>(j)] = s.bilin(i, j);
    // Column elimination: columns are images of basis vectors.
    std::vector<int> pivot_row_of_col(static_cast<size_t>(n), -1);
    std::vector<int> col_perm(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) col_perm[static_cast<size_t>(j)] = j;
    // Track elimination coefficients: combo[j] = expression of current column j
    // in terms of original basis vectors.
    std::vector<std::vector<int>> combo(static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(n), 0));
    for (int j = 0; j < n; ++j) combo[static_cast<size_t>(j)][static_cast<size_t>(j)] = 1;
    int rank = 0;
    std::vector<int> pivots;
    for (int i = 0; i < n && rank < n; ++i) {
        int pc = -1;
        for (int j = rank; j < n; ++j)
            if (m[static_cast<size_t>(i)][static_cast<size_t>(j)] != 0) { pc = j; break; }
        if (pc < 0) continue;
        for (int r = 0; r < n; ++r) std::swap(m[static_cast<size_t>(r)][static_cast<size_t>(rank)], m[static_cast<size_t>(r)][static_cast<size_t>(pc)]);
        std::swap(combo[static_cast<size_t>(rank)], combo[static_cast<size_t>(pc)]);
        int inv = inv_mod(m[static_cast<size_t>(i)][static_cast<size_t>(rank)], p);
        for (int j = rank + 1; j < n; ++j) {
            int f = static_cast<int>(static_cast<std::int64_t>(m[static_cast<size_t>(i)][static_cast<size_t>(j)]) * inv % p);
            if (f == 0) continue;
            for (int r = 0; r < n; ++r)
                m[static_cast<size_t>(r)][static_cast<size_t>(j)] =
                    mod_pos(m[static_cast<size_t>(r)][static_cast<size_t>(j)] - static_cast<std::int64_t>(f) * m[static_cast<size_t>(r)][static_cast<size_t>(rank)], p);
            for (int r = 0; r < n; ++r)
                combo[static_cast<size_t>(j)][static_cast<size_t>(r)] =
                    mod_pos(combo[static_cast<size_t>(j)][static_cast<size_t>(r)] - static_cast<std::int64_t>(f) * combo[static_cast<size_t>(rank)][static_cast<size_t>(r)], p);
        }
        pivots.push_back(i);
        ++rank;
    }
    KernelData kd;
    for (int j = rank; j < n; ++j) kd.kernel.push_back(combo[static_cast<size_t>(j)]);
    // Coordinates whose basis vectors stay independent modulo the kernel.
    // The first `rank` post-elimination columns correspond to combinations,
    // so instead pick original coordinates greedily by rank growth.
    kd.pivot_coords.clear();
    {
        // Greedy: e_i kept if it increases the rank of the span with kernel.
        std::vector<std::vector<int>> rowspace;  // echelon rows over F_p
        auto reduce_insert = [&](std::vector<int> v) -> bool {
            for (auto& row : rowspace) {
                int lead = -1;
                for (int t = 0; t < n; ++t)
                    if (row[static_cast<size_t>(t)] != 0) { lead = t; break; }
                if (lead < 0) continue;
                int c = v[static_cast<size_t>(lead)];
                if (c != 0) {
                    int f = static_cast<int>(static_cast<std::int64_t>(c) * inv_mod(row[static_cast<size_t>(lead)], p) % p);
                    for (int t = 0; t < n; ++t)
                        v[static_cast<size_t>(t)] = mod_pos(v[static_cast<size_t>(t)] - static_cast<std::int64_t>(f) * row[static_cast<size_t>(t)], p);
                }
            }
            bool nonzero = std::any_of(v.begin(), v.end(), [](int t) { return t != 0; });
            if (nonzero) rowspace.push_back(v);
            return nonzero;
        };
        for (const auto& kv : kd.kernel) reduce_insert(kv);
        for (int i = 0; i < n; ++i) {
            std::vector<int> e(static_cast<size_t>(n), 0);
            e[static_cast<size_t>(i)] = 1;
            if (reduce_insert(e)) kd.pivot_coords.push_back(i);
        }
    }
    return kd;
}

}  // namespace

FFQuadSpace::FFQuadSpace(std::int64_t p, int dim, std::vector<int> bilin,
                         std::vector<int> qdiag)
    : p_(p), dim_(dim), b_(std::move(bilin)), qd_(std::move(qdiag)) {
    if (!arith::is_prime(p)) throw std::invalid_argument("FFQuadSpace: p must be prime");
    if (b_.size() != static_cast<size_t>(dim) * dim)
        throw std::invalid_argument("FFQuadSpace: bilin size mismatch");
    for (auto& x : b_) x = mod_pos(x, p_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < i; ++j)
            if (this->bilin(i, j) != this->bilin(j, i))
                throw std::invalid_argument("FFQuadSpace: bilin not symmetric");
    if (p_ == 2) {
        if (qd_.size() != static_cast<size_t>(dim))
            throw std::invalid_argument("FFQuadSpace: qdiag required when p = 2");
        for (auto& x : qd_) x = mod_pos(x, 2);
        for (int i = 0; i < dim_; ++i)
            if (this->bilin(i, i) != 0)
                throw std::invalid_argument("FFQuadSpace: p = 2 bilinear diagonal must vanish");
    } else {
        if (!qd_.empty()) throw std::invalid_argument("FFQuadSpace: qdiag only for p = 2");
    }
}

FFQuadSpace FFQuadSpace::from_even_gram(const MatZ& gram, std::int64_t p) {
    if (!arith::is_symmetric(gram)) throw std::invalid_argument("from_even_gram: not symmetric");
    if (!arith::has_even_diagonal(gram)) throw std::invalid_argument("from_even_gram: diagonal not even");
    int n = gram.rows;
    std::vector<int> b(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            b[static_cast<size_t>(i) * n + j] = static_cast<int>(mpz_fdiv_ui(gram(i, j).get_mpz_t(), static_cast<unsigned long>(p)));
    std::vector<int> qd;
    if (p == 2) {
        qd.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            Int half = gram(i, i) / 2;
            qd[static_cast<size_t>(i)] = static_cast<int>(mpz_fdiv_ui(half.get_mpz_t(), 2));
        }
    }
    return FFQuadSpace(p, n, std::move(b), std::move(qd));
}

int FFQuadSpace::b_value(const std::vector<int>& x, const std::vector<int>& y) const {
    std::int64_t s = 0;
    for (int i = 0; i < dim_; ++i) {
        if (x[static_cast<size_t>(i)] == 0) continue;
        std::int64_t row = 0;
        for (int j = 0; j < dim_; ++j) row += static_cast<std::int64_t>(bilin(i, j)) * y[static_cast<size_t>(j)];
        s += x[static_cast<size_t>(i)] * (row % p_);
    }
    return mod_pos(s, p_);
}

int FFQuadSpace::q_value(const std::vector<int>& x) const {
    if (p_ == 2) {
        std::int64_t s = 0;
        for (int i = 0; i < dim_; ++i) {
            if (x[static_cast<size_t>(i)] % 2 == 0) continue;
            s += qd_[static_cast<size_t>(i)];
            for (int j = i + 1; j < dim_; ++j)
                s += static_cast<std::int64_t>(bilin(i, j)) * x[static_cast<size_t>(j)];
        }
        return mod_pos(s, 2);
    }
    std::int64_t bv = b_value(x, x);
    return static_cast<int>(static_cast<std::int64_t>(bv) * inv_mod(2, p_) % p_);
}

FFQuadSpace FFQuadSpace::restrict_to(const std::vector<std::vector<int>>& basis) const {
    int d = static_cast<int>(basis.size());
    std::vector<int> b(static_cast<size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            b[static_cast<size_t>(i) * d + j] = b_value(basis[static_cast<size_t>(i)], basis[static_cast<size_t>(j)]);
    std::vector<int> qd;
    if (p_ == 2) {
        qd.resize(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i) {
            qd[static_cast<size_t>(i)] = q_value(basis[static_cast<size_t>(i)]);
            b[static_cast<size_t>(i) * d + i] = 0;
        }
    }
    return FFQuadSpace(p_, d, std::move(b), std::move(qd));
}

WittReport classify(const FFQuadSpace& space) {
    std::int64_t p = space.p();
    int n = space.dim();
    WittReport rep;
    KernelData kd = bilin_kernel(space);

    if (p == 2) {
        // q is linear on ker(b); the radical is where q vanishes too.
        std::vector<std::vector<int>> rad;
        std::vector<std::vector<int>> defective;
        for (const auto& v : kd.kernel)
            (space.q_value(v) == 0 ? rad : defective).push_back(v);
        // If several kernel vectors have q = 1, their pairwise sums have q = 0;
        // at most one defective direction survives.
        while (defective.size() > 1) {
            auto v = defective.back();
            defective.pop_back();
            auto& w = defective.back();
            std::vector<int> s(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) s[static_cast<size_t>(i)] = (v[static_cast<size_t>(i)] + w[static_cast<size_t>(i)]) % 2;
            rad.push_back(s);
        }
        rep.radical_dim = static_cast<int>(rad.size());
        rep.nondegenerate_dim = n - rep.radical_dim;
        if (!defective.empty()) {
            rep.witt_type = WittType::Odd;
            return rep;
        }
        if (rep.nondegenerate_dim == 0) {
            rep.witt_type = WittType::Plus;
            return rep;
        }
        // Even-dimensional regular part: decide by counting q-zeros, which is
        // 2^{d-1} + 2^{d/2 - 1} for plus type and 2^{d-1} - 2^{d/2 - 1} for minus.
        std::vector<std::vector<int>> comp;
        for (int i : kd.pivot_coords) {
            std::vector<int> e(static_cast<size_t>(n), 0);
            e[static_cast<size_t>(i)] = 1;
            comp.push_back(e);
        }
        FFQuadSpace w = space.restrict_to(comp);
        int d = w.dim();
        std::int64_t zeros = 0, total = std::int64_t(1) << d;
        std::vector<int> x(static_cast<size_t>(d), 0);
        for (std::int64_t it = 0; it < total; ++it) {
            std::int64_t v = it;
            for (int i = 0; i < d; ++i) { x[static_cast<size_t>(i)] = static_cast<int>(v & 1); v >>= 1; }
            if (w.q_value(x) == 0) ++zeros;
        }
        std::int64_t mid = total / 2;
        rep.witt_type = (zeros > mid) ? WittType::Plus : WittType::Minus;
        return rep;
    }

    rep.radical_dim = static_cast<int>(kd.kernel.size());
    rep.nondegenerate_dim = n - rep.radical_dim;
    if (rep.nondegenerate_dim % 2 == 1) {
        rep.witt_type = WittType::Odd;
        return rep;
    }
    if (rep.nondegenerate_dim == 0) {
        rep.witt_type = WittType::Plus;
        return rep;
    }
    // Restrict to the complement and test whether (-1)^{d/2} det(M) is a
    // square, M the classical Gram of <x,y> = B(x,y)/2.
    std::vector<std::vector<int>> comp;
    for (int i : kd.pivot_coords) {
        std::vector<int> e(static_cast<size_t>(n), 0);
        e[static_cast<size_t>(i)] = 1;
        comp.push_back(e);
    }
    FFQuadSpace w = space.restrict_to(comp);
    int d = w.dim();
    // det over F_p by Gaussian elimination
    std::vector<std::vector<std::int64_t>> m(static_cast<size_t>(d), std::vector<std::int64_t>(static_cast<size_t>(d)));
    int inv2 = inv_mod(2, p);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m[static_cast<size_t>(i)][static_cast<size_t>(j)] = static_cast<std::int64_t>(w.bilin(i, j)) * inv2 % p;
    std::int64_t detv = 1;
    for (int k = 0; k < d; ++k) {
        int piv = -1;
        for (int i = k; i < d; ++i)
            if (m[static_cast<size_t>(i)][static_cast<size_t>(k)] != 0) { piv = i; break; }
        if (piv < 0) throw std::logic_error("classify: regular part is singular");
        if (piv != k) { std::swap(m[static_cast<size_t>(piv)], m[static_cast<size_t>(k)]); detv = p - detv; }
        detv = detv * m[static_cast<size_t>(k)][static_cast<size_t>(k)] % p;
        std::int64_t f = inv_mod(static_cast<int>(m[static_cast<size_t>(k)][static_cast<size_t>(k)]), p);
        for (int i = k + 1; i < d; ++i) {
            std::int64_t c = m[static_cast<size_t>(i)][static_cast<size_t>(k)] * f % p;
            if (c == 0) continue;
            for (int j = k; j < d; ++j)
                m[static_cast<size_t>(i)][static_cast<size_t>(j)] = mod_pos(m[static_cast<size_t>(i)][static_cast<size_t>(j)] - c * m[static_cast<size_t>(k)][static_cast<size_t>(j)], p);
        }
    }
    std::int64_t disc = detv;
    if ((d / 2) % 2 == 1) disc = p - disc;  // times (-1)^{d/2}
    rep.witt_type = (legendre(disc, p) == 1) ? WittType::Plus : WittType::Minus;
    return rep;
}

namespace {

// Enumerate echelon bases of d-dimensional subspaces of F_p^n.
// rows[i] has pivot 1 at pivots[i], zeros before it and at other pivots.
struct SubspaceEnum {
    std::int64_t p;
    int n, d;
    const std::function<bool(const std::vector<std::vector<int>>&)>* visit;

    std::vector<int> pivots;
    std::vector<std::vector<int>> rows;

    bool rec_pivot(int i, int from) {
        if (i == d) return fill_free(0, 0);
        for (int c = from; c <= n - (d - i); ++c) {
            pivots[static_cast<size_t>(i)] = c;
            if (!rec_pivot(i + 1, c + 1)) return false;
        }
        return true;
    }

    // Fill free entries row by row, position by position.
    bool fill_free(int row, int col) {
        if (row == d) return (*visit)(rows);
        if (col == n) return fill_free(row + 1, 0);
        int pc = pivots[static_cast<size_t>(row)];
        bool is_pivot_col = false;
        for (int i = 0; i < d; ++i)
            if (pivots[static_cast<size_t>(i)] == col) is_pivot_col = true;
        if (col < pc || (is_pivot_col && col != pc)) {
            rows[static_cast<size_t>(row)][static_cast<size_t>(col)] = 0;
            return fill_free(row, col + 1);
        }
        if (col == pc) {
            rows[static_cast<size_t>(row)][static_cast<size_t>(col)] = 1;
            return fill_free(row, col + 1);
        }
        for (int v = 0; v < p; ++v) {
            rows[static_cast<size_t>(row)][static_cast<size_t>(col)] = v;
            if (!fill_free(row, col + 1)) return false;
        }
        return true;
    }

    void run() {
        pivots.assign(static_cast<size_t>(d), 0);
        rows.assign(static_cast<size_t>(d), std::vector<int>(static_cast<size_t>(n), 0));
        if (d == 0) {
            (*visit)(rows);
            return;
        }
        rec_pivot(0, 0);
    }
};

void for_each_subspace(std::int64_t p, int n, int d,
                       const std::function<bool(const std::vector<std::vector<int>>&)>& visit) {
    SubspaceEnum e{p, n, d, &visit, {}, {}};
    e.run();
}

bool basis_totally_isotropic(const FFQuadSpace& s, const std::vector<std::vector<int>>& rows) {
    int d = static_cast<int>(rows.size());
    for (int i = 0; i < d; ++i)
        if (s.q_value(rows[static_cast<size_t>(i)]) != 0) return false;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (s.b_value(rows[static_cast<size_t>(i)], rows[static_cast<size_t>(j)]) != 0) return false;
    return true;
}

}  // namespace

Int count_totally_isotropic_brute(const FFQuadSpace& space, int d) {
    if (d < 0 || d > space.dim()) return 0;
    if (d == 0) return 1;
    Int budget_check = arith::beta(space.p(), space.dim(), d);
    if (budget_check > kVectorEnumBudget)
        throw CapacityError("count_totally_isotropic: subspace enumeration over budget");
    Int count = 0;
    for_each_subspace(space.p(), space.dim(), d,
                      [&](const std::vector<std::vector<int>>& rows) {
                          if (basis_totally_isotropic(space, rows)) ++count;
                          return true;
                      });
    return count;
}

Int count_totally_isotropic(const FFQuadSpace& space, int d) {
    if (d < 0 || d > space.dim()) return 0;
    if (d == 0) return 1;
    WittReport rep = classify(space);
    std::int64_t q = space.p();
    if (rep.radical_dim == 0) {
        if (rep.witt_type == WittType::Plus) {
            int s = rep.nondegenerate_dim / 2;
            if (d > s) return 0;
            Int num = 1, den = 1;
            for (int i = 0; i < d; ++i) {
                Int qa, qb, qc;
                mpz_ui_pow_ui(qa.get_mpz_t(), static_cast<unsigned long>(q), static_cast<unsigned long>(s - i));
                mpz_ui_pow_ui(qb.get_mpz_t(), static_cast<unsigned long>(q), static_cast<unsigned long>(s - i - 1));
                mpz_ui_pow_ui(qc.get_mpz_t(), static_cast<unsigned long>(q), static_cast<unsigned long>(d - i));
                num *= (qa - 1) * (qb + 1);
                den *= qc - 1;
            }
            Int quo, rem;
            mpz_tdiv_qr(quo.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
            if (rem != 0) throw std::logic_error("count_totally_isotropic: bad closed form (+)");
            return quo;
        }
        if (rep.witt_type == WittType::Minus) {
            int s = rep.nondegenerate_dim / 2;
            if (d > s - 1) return 0;
            Int num = 1, den = 1;
            for (int i = 0; i < d; ++i) {
                Int qa, qb, qc;
                mpz_ui_pow_ui(qa.get_mpz_t(), static_cast<unsigned long>(q), static_cast<unsigned long>(s - 1 - i));
                mpz_ui_pow_ui(qb.get_mpz_t(), static_cast<unsigned long>(q), static_cast<unsigned long>(s - i));
                mpz_ui_pow_ui(qc.get_mpz_t(), static_cast<unsigned long>(q), static_cast<unsigned long>(d - i));
                num *= (qa - 1) * (qb + 1);
                den *= qc - 1;
            }
            Int quo, rem;
            mpz_tdiv_qr(quo.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
            if (rem != 0) throw std::logic_error("count_totally_isotropic: bad closed form (-)");
            return quo;
        }
        // Odd-dimensional regular space (p odd): Witt index (dim-1)/2.
        int s = (rep.nondegenerate_dim - 1) / 2;
        if (d > s) return 0;
        Int num = 1, den = 1;
        for (int i = 0; i < d; ++i) {
            Int qa, qc;
            mpz_ui_pow_ui(qa.get_mpz_t(), static_cast<unsigned long>(q), static_cast<unsigned long>(2 * (s - i)));
            mpz_ui_pow_ui(qc.get_mpz_t(), static_cast<unsigned long>(q), static_cast<unsigned long>(d - i));
            num *= qa - 1;
            den *= qc - 1;
        }
        Int quo, rem;
        mpz_tdiv_qr(quo.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
        if (rem != 0) throw std::logic_error("count_totally_isotropic: bad closed form (odd)");
        return quo;
    }
    return count_totally_isotropic_brute(space, d);
}

void for_each_totally_isotropic(
    const FFQuadSpace& space, int d,
    const std::function<void(const std::vector<std::vector<int>>&)>& cb) {
    if (d < 0 || d > space.dim()) return;
    Int budget_check = arith::beta(space.p(), space.dim(), d);
    if (budget_check > kVectorEnumBudget)
        throw CapacityError("for_each_totally_isotropic: subspace enumeration over budget");
    for_each_subspace(space.p(), space.dim(), d,
                      [&](const std::vector<std::vector<int>>& rows) {
                          if (basis_totally_isotropic(space, rows)) cb(rows);
                          return true;
                      });
}

Int alpha_j(const FFQuadSpace& space, int n, int j, int r0, int r2) {
    if (space.dim() != n - r0 - r2)
        throw std::invalid_argument("alpha_j: space dimension must be n - r0 - r2");
    int r = r0 + r2;
    if (j < r) return 0;
    if (j == r) return 1;
    return count_totally_isotropic(space, j - r);
}

namespace {

// Integer lift used for the p = 2 congruences: off-diagonal entries are the
// bilinear form in {0,1}, diagonal entries are 2 q(e_i) in {0,2}; conditions
// are mod 2 off the diagonal and mod 4 on it.
std::vector<std::int64_t> integer_lift(const FFQuadSpace& s) {
    int n = s.dim();
    std::vector<std::int64_t> m(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m[static_cast<size_t>(i) * n + j] = (i == j && s.p() == 2) ? 2 * s.qdiag(i) : s.bilin(i, j);
    return m;
}

int rank_mod_p(std::vector<std::vector<int>> m, std::int64_t p) {
    int rows = static_cast<int>(m.size());
    if (rows == 0) return 0;
    int cols = static_cast<int>(m[0].size());
    int rank = 0;
    for (int c = 0; c < cols && rank < rows; ++c) {
        int piv = -1;
        for (int r = rank; r < rows; ++r)
            if (m[static_cast<size_t>(r)][static_cast<size_t>(c)] % p != 0) { piv = r; break; }
        if (piv < 0) continue;
        std::swap(m[static_cast<size_t>(piv)], m[static_cast<size_t>(rank)]);
        int inv = inv_mod(m[static_cast<size_t>(rank)][static_cast<size_t>(c)], p);
        for (int r = rank + 1; r < rows; ++r) {
            int f = static_cast<int>(static_cast<std::int64_t>(mod_pos(m[static_cast<size_t>(r)][static_cast<size_t>(c)], p)) * inv % p);
            if (f == 0) continue;
            for (int cc = 0; cc < cols; ++cc)
                m[static_cast<size_t>(r)][static_cast<size_t>(cc)] = mod_pos(m[static_cast<size_t>(r)][static_cast<size_t>(cc)] - static_cast<std::int64_t>(f) * m[static_cast<size_t>(rank)][static_cast<size_t>(cc)], p);
        }
        ++rank;
    }
    return rank;
}

// Does C (as columns spanning, v.dim x a) satisfy C^t V C = U in the
// quadratic-space sense (p = 2: diagonal mod 4, off-diagonal mod 2)?
bool congruent_image(const FFQuadSpace& v, const FFQuadSpace& u,
                     const std::vector<std::vector<int>>& cols) {
    int a = u.dim();
    std::int64_t p = v.p();
    if (p == 2) {
        std::vector<std::int64_t> vl = integer_lift(v);
        int n = v.dim();
        for (int s = 0; s < a; ++s)
            for (int t = s; t < a; ++t) {
                std::int64_t acc = 0;
                for (int i = 0; i < n; ++i) {
                    if (cols[static_cast<size_t>(s)][static_cast<size_t>(i)] == 0) continue;
                    for (int j = 0; j < n; ++j)
                        acc += static_cast<std::int64_t>(cols[static_cast<size_t>(s)][static_cast<size_t>(i)]) * vl[static_cast<size_t>(i) * n + j] * cols[static_cast<size_t>(t)][static_cast<size_t>(j)];
                }
                if (s == t) {
                    if (mod_pos(acc - 2 * u.qdiag(s), 4) != 0) return false;
                } else {
                    if (mod_pos(acc - u.bilin(s, t), 2) != 0) return false;
                }
            }
        return true;
    }
    for (int s = 0; s < a; ++s)
        for (int t = s; t < a; ++t) {
            int bv = v.b_value(cols[static_cast<size_t>(s)], cols[static_cast<size_t>(t)]);
            if (bv != u.bilin(s, t)) return false;
        }
    return true;
}

}  // namespace

RStarResult rep_count_rstar(const FFQuadSpace& v, const FFQuadSpace& u) {
    if (u.dim() > v.dim()) throw std::invalid_argument("rep_count_rstar: dim U > dim V");
    if (u.p() != v.p()) throw std::invalid_argument("rep_count_rstar: mixed primes");
    int n = v.dim(), a = u.dim();
    std::int64_t p = v.p();
    if (a == 0) return RStarResult{1, 1};
    double cells = static_cast<double>(n) * a * std::log2(static_cast<double>(p));
    if (cells > 22.0) throw CapacityError("rep_count_rstar: matrix enumeration over budget");
    Int r_star = 0;
    std::vector<std::vector<int>> cols(static_cast<size_t>(a), std::vector<int>(static_cast<size_t>(n), 0));
    std::int64_t total = 1;
    for (int i = 0; i < n * a; ++i) total *= p;
    for (std::int64_t it = 0; it < total; ++it) {
        std::int64_t w = it;
        for (int s = 0; s < a; ++s)
            for (int i = 0; i < n; ++i) { cols[static_cast<size_t>(s)][static_cast<size_t>(i)] = static_cast<int>(w % p); w /= p; }
        if (!congruent_image(v, u, cols)) continue;
        if (rank_mod_p(cols, p) != a) continue;
        ++r_star;
    }
    Int o = orth_order(u);
    Int quo, rem;
    mpz_tdiv_qr(quo.get_mpz_t(), rem.get_mpz_t(), r_star.get_mpz_t(), o.get_mpz_t());
    if (rem != 0) throw std::logic_error("rep_count_rstar: r* not divisible by o(U)");
    return RStarResult{r_star, quo};
}

Int orth_order(const FFQuadSpace& u) {
    int a = u.dim();
    std::int64_t p = u.p();
    if (a == 0) return 1;
    double cells = static_cast<double>(a) * a * std::log2(static_cast<double>(p));
    if (cells > 22.0) throw CapacityError("orth_order: matrix enumeration over budget");
    Int count = 0;
    std::vector<std::vector<int>> cols(static_cast<size_t>(a), std::vector<int>(static_cast<size_t>(a), 0));
    std::int64_t total = 1;
    for (int i = 0; i < a * a; ++i) total *= p;
    for (std::int64_t it = 0; it < total; ++it) {
        std::int64_t w = it;
        for (int s = 0; s < a; ++s)
            for (int i = 0; i < a; ++i) { cols[static_cast<size_t>(s)][static_cast<size_t>(i)] = static_cast<int>(w % p); w /= p; }
        if (!congruent_image(u, u, cols)) continue;
        if (rank_mod_p(cols, p) != a) continue;
        ++count;
    }
    return count;
}

arith::CycInt gauss_sum_lattice(const MatZ& gram, std::int64_t p, std::int64_t c) {
    if (p == 2 || !arith::is_prime(p))
        throw std::invalid_argument("gauss_sum_lattice: p must be an odd prime");
    if (!arith::is_symmetric(gram) || !arith::has_even_diagonal(gram))
        throw std::invalid_argument("gauss_sum_lattice: even symmetric Gram required");
    int m = gram.rows;
    Int detg = arith::det(gram);
    if (mpz_divisible_ui_p(detg.get_mpz_t(), static_cast<unsigned long>(p)))
        throw std::domain_error("gauss_sum_lattice: p divides the level (Gram singular mod p)");
    double cells = static_cast<double>(m) * std::log2(static_cast<double>(p));
    if (cells > std::log2(static_cast<double>(kGaussSumBudget)))
        throw CapacityError("gauss_sum_lattice: p^m over budget");

    // Incremental odometer walk over F_p^m keeping g = B u and Q[u]/2 mod p.
    std::vector<int> b(static_cast<size_t>(m) * m);
    std::vector<int> half(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j)
            b[static_cast<size_t>(i) * m + j] = static_cast<int>(mpz_fdiv_ui(gram(i, j).get_mpz_t(), static_cast<unsigned long>(p)));
        Int h = gram(i, i) / 2;
        half[static_cast<size_t>(i)] = static_cast<int>(mpz_fdiv_ui(h.get_mpz_t(), static_cast<unsigned long>(p)));
    }
    std::vector<std::int64_t> counts(static_cast<size_t>(p), 0);
    std::vector<int> u(static_cast<size_t>(m), 0), g(static_cast<size_t>(m), 0);
    int val = 0;
    std::int64_t total = 1;
    for (int i = 0; i < m; ++i) total *= p;
    for (std::int64_t it = 0;; ++it) {
        ++counts[static_cast<size_t>(val)];
        if (it + 1 == total) break;
        // Odometer step: u_i += 1 adds g_i + half_i to Q[u]/2 and row i of B
        // to g.  A wrap applies the step p times, which is a no-op mod p, so
        // the carry needs no correction.
        int i = 0;
        for (;; ++i) {
            val = static_cast<int>((val + g[static_cast<size_t>(i)] + half[static_cast<size_t>(i)]) % p);
            for (int j = 0; j < m; ++j)
                g[static_cast<size_t>(j)] = static_cast<int>((g[static_cast<size_t>(j)] + b[static_cast<size_t>(i) * m + j]) % p);
            if (++u[static_cast<size_t>(i)] < p) break;
            u[static_cast<size_t>(i)] = 0;
        }
    }
    arith::CycInt s(p);
    for (int e = 0; e < p; ++e)
        s.add_zeta_pow(static_cast<std::int64_t>(e) * c, Int(counts[static_cast<size_t>(e)]));
    return s;
}

bool thm45_closing_identity_check(const FFQuadSpace& v, int n, int j, int r) {
    if (v.p() == 2)
        throw std::invalid_argument("thm45_closing_identity_check: p must be odd");
    if (v.dim() != n - r)
        throw std::invalid_argument("thm45_closing_identity_check: dim V must be n - r");
    if (!(0 <= r && r <= j && j <= n))
        throw std::invalid_argument("thm45_closing_identity_check: need 0 <= r <= j <= n");
    std::int64_t p = v.p();
    int inv2 = inv_mod(2, p);

    arith::CycInt lhs(p);
    for (int a = 0; a <= j - r; ++a) {
        Int coeff = arith::beta(p, n - r - a, j - r - a);
        if (coeff == 0) continue;
        arith::CycInt alpha_prime(p);
        if (a == 0) {
            alpha_prime.add_zeta_pow(0);
        } else {
            // invertible symmetric a x a matrices mod p
            std::vector<std::vector<std::vector<int>>> wmats;
            int na = a * (a + 1) / 2;
            std::int64_t total = 1;
            for (int i = 0; i < na; ++i) total *= p;
            std::vector<std::vector<int>> w(static_cast<size_t>(a), std::vector<int>(static_cast<size_t>(a)));
            for (std::int64_t it = 0; it < total; ++it) {
                std::int64_t t = it;
                for (int i = 0; i < a; ++i)
                    for (int jj = i; jj < a; ++jj) {
                        int e = static_cast<int>(t % p);
                        t /= p;
                        w[static_cast<size_t>(i)][static_cast<size_t>(jj)] = e;
                        w[static_cast<size_t>(jj)][static_cast<size_t>(i)] = e;
                    }
                if (rank_mod_p(w, p) == a) wmats.push_back(w);
            }
            for_each_subspace(p, v.dim(), a, [&](const std::vector<std::vector<int>>& rows) {
                // half-Gram of the subspace in this basis
                std::vector<std::vector<int>> mhalf(static_cast<size_t>(a), std::vector<int>(static_cast<size_t>(a)));
                for (int s = 0; s < a; ++s)
                    for (int t = 0; t < a; ++t)
                        mhalf[static_cast<size_t>(s)][static_cast<size_t>(t)] =
                            static_cast<int>(static_cast<std::int64_t>(v.b_value(rows[static_cast<size_t>(s)], rows[static_cast<size_t>(t)])) * inv2 % p);
                for (const auto& wm : wmats) {
                    std::int64_t tr = 0;
                    for (int s = 0; s < a; ++s)
                        for (int t = 0; t < a; ++t)
                            tr += static_cast<std::int64_t>(mhalf[static_cast<size_t>(s)][static_cast<size_t>(t)]) * wm[static_cast<size_t>(t)][static_cast<size_t>(s)];
                    alpha_prime.add_zeta_pow(tr % p);
                }
                return true;
            });
        }
        lhs += alpha_prime * coeff;
    }

    FFQuadSpace zero_form(p, j - r, std::vector<int>(static_cast<size_t>(j - r) * (j - r), 0));
    RStarResult rs = rep_count_rstar(v, zero_form);
    Int rhs;
    mpz_ui_pow_ui(rhs.get_mpz_t(), static_cast<unsigned long>(p),
                  static_cast<unsigned long>((j - r) * (j - r + 1) / 2));
    rhs *= rs.big_r_star;
    return lhs.is_integer() && lhs.to_integer() == rhs;
}

}  // namespace ffq
}  // namespace thetalat
