#include "thetalat/enumerate.hpp"

#include <numeric>

namespace thetalat {
namespace theta {

using arith::MatQ;
using arith::MatZ;

namespace {

int64_t to_i64(const Int& v, const char* what) {
    if (!v.fits_slong_p()) throw std::overflow_error(std::string(what) + ": entry exceeds int64");
    return v.get_si();
}

int64_t to_i64(i128 v, const char* what) {
    if (v > (i128(1) << 62) || v < -(i128(1) << 62))
        throw std::overflow_error(std::string(what) + ": value exceeds int64");
    return static_cast<int64_t>(v);
}

std::vector<int64_t> flatten_i64(const MatZ& m, const char* what) {
    std::vector<int64_t> r(m.a.size());
    for (size_t i = 0; i < m.a.size(); ++i) r[i] = to_i64(m.a[i], what);
    return r;
}

}  // namespace

GramEnumContext::GramEnumContext(const MatZ& g) {
    if (!arith::is_symmetric(g)) throw std::invalid_argument("enum context: gram not symmetric");
    m = g.rows;
    gram = flatten_i64(g, "enum context gram");

    // Fraction-free (Bareiss) elimination collecting pivots and stage rows.
    std::vector<i128> work(gram.begin(), gram.end());
    auto at = [&](int i, int j) -> i128& { return work[static_cast<size_t>(i) * m + j]; };
    delta.assign(static_cast<size_t>(m) + 1, 1);
    brow.assign(static_cast<size_t>(m) * m, 0);
    for (int k = 0; k < m; ++k) {
        if (at(k, k) <= 0) throw std::domain_error("enum context: gram not positive definite");
        delta[static_cast<size_t>(k) + 1] = to_i64(at(k, k), "enum context minor");
        for (int j = k + 1; j < m; ++j)
            brow[static_cast<size_t>(k) * m + j] = to_i64(at(k, j), "enum context row");
        for (int i = k + 1; i < m; ++i)
            for (int j = k + 1; j < m; ++j)
                at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / delta[static_cast<size_t>(k)];
    }
    lden = 1;
    for (int i = 0; i < m; ++i) {
        int64_t prod = delta[static_cast<size_t>(i)] * delta[static_cast<size_t>(i) + 1];
        lden = std::lcm(lden, prod);
        if (lden > (int64_t(1) << 40))
            throw std::overflow_error("enum context: pivot products too large (reduce the gram first)");
    }
    w.assign(static_cast<size_t>(m), 0);
    for (int i = 0; i < m; ++i)
        w[static_cast<size_t>(i)] =
            lden / (delta[static_cast<size_t>(i)] * delta[static_cast<size_t>(i) + 1]);
    inv_dp.assign(static_cast<size_t>(m), 0.0);
    for (int i = 0; i < m; ++i)
        inv_dp[static_cast<size_t>(i)] = 1.0 / static_cast<double>(delta[static_cast<size_t>(i) + 1]);
    inv_w0 = 1.0 / static_cast<double>(w[0]);
}

struct CosetEnumerator::Impl {
    int m, n;
    std::vector<int64_t> lin;
    std::vector<int64_t> gram;    // m x m
    int64_t g = 0;
    std::vector<int64_t> part;    // lin . part == g
    std::vector<int64_t> kernel;  // m x n, reduced frame
    std::vector<int64_t> adj_h;   // n x n adjugate of kernel gram
    int64_t det_h = 1;
    GramEnumContext hctx;
    int64_t node_budget;

    Impl(const MatZ& gmat, const std::vector<int64_t>& lin_in, int64_t budget,
         const MatZ& kern_mat, const MatZ& h_mat, const MatZ& adj_mat, const Int& dh,
         const std::vector<int64_t>& part_in, int64_t g_in)
        : m(gmat.rows),
          n(gmat.rows - 1),
          lin(lin_in),
          gram(flatten_i64(gmat, "coset gram")),
          g(g_in),
          part(part_in),
          kernel(flatten_i64(kern_mat, "coset kernel")),
          adj_h(flatten_i64(adj_mat, "coset adjugate")),
          det_h(to_i64(dh, "coset det")),
          hctx(h_mat),
          node_budget(budget) {}

    int64_t gm(int i, int j) const { return gram[static_cast<size_t>(i) * m + j]; }
    int64_t km(int i, int c) const { return kernel[static_cast<size_t>(i) * n + c]; }
    int64_t am(int i, int j) const { return adj_h[static_cast<size_t>(i) * n + j]; }

    template <class CB>
    int64_t run(int64_t lin_target, int64_t target, const std::vector<int64_t>* tnum,
                int64_t tden, bool need_x, CB&& cb) const {
        if (lin_target % g != 0) return 0;
        int64_t scale = lin_target / g;

        // Particular solution, Babai-rounded against the kernel to stay small:
        // xs -= K round(H^{-1} K^T G xs), twice to settle.
        std::vector<i128> xs(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) xs[static_cast<size_t>(i)] = static_cast<i128>(part[static_cast<size_t>(i)]) * scale;
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<i128> gx(static_cast<size_t>(m), 0);
            for (int i = 0; i < m; ++i) {
                i128 acc = 0;
                for (int j = 0; j < m; ++j) acc += static_cast<i128>(gm(i, j)) * xs[static_cast<size_t>(j)];
                gx[static_cast<size_t>(i)] = acc;
            }
            std::vector<i128> b0(static_cast<size_t>(n), 0);
            for (int c = 0; c < n; ++c) {
                i128 acc = 0;
                for (int i = 0; i < m; ++i) acc += static_cast<i128>(km(i, c)) * gx[static_cast<size_t>(i)];
                b0[static_cast<size_t>(c)] = acc;
            }
            bool moved = false;
            for (int c = 0; c < n; ++c) {
                i128 acc = 0;
                for (int j = 0; j < n; ++j) acc += static_cast<i128>(am(c, j)) * b0[static_cast<size_t>(j)];
                i128 dh = det_h;
                i128 r = acc >= 0 ? (acc + dh / 2) / dh : -((-acc + dh / 2) / dh);
                if (r == 0) continue;
                moved = true;
                for (int i = 0; i < m; ++i) xs[static_cast<size_t>(i)] -= r * km(i, c);
            }
            if (!moved) break;
        }
        std::vector<int64_t> xstar(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) xstar[static_cast<size_t>(i)] = to_i64(xs[static_cast<size_t>(i)], "coset xstar");

        // s = xstar + tnum/tden with common denominator d.
        const int64_t d = tden;
        std::vector<int64_t> snum(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) {
            i128 v = static_cast<i128>(xstar[static_cast<size_t>(i)]) * d + (tnum ? (*tnum)[static_cast<size_t>(i)] : 0);
            snum[static_cast<size_t>(i)] = to_i64(v, "coset center");
        }
        std::vector<int64_t> gs(static_cast<size_t>(m));
        i128 qs = 0;
        for (int i = 0; i < m; ++i) {
            i128 acc = 0;
            for (int j = 0; j < m; ++j) acc += static_cast<i128>(gm(i, j)) * snum[static_cast<size_t>(j)];
            gs[static_cast<size_t>(i)] = to_i64(acc, "coset G s");
            qs += static_cast<i128>(snum[static_cast<size_t>(i)]) * gs[static_cast<size_t>(i)];
        }
        std::vector<int64_t> sb(static_cast<size_t>(n));
        for (int c = 0; c < n; ++c) {
            i128 acc = 0;
            for (int i = 0; i < m; ++i) acc += static_cast<i128>(km(i, c)) * gs[static_cast<size_t>(i)];
            sb[static_cast<size_t>(c)] = to_i64(acc, "coset sb");
        }
        // center = adj(H) sb / (d det H); target scaled by (d det H)^2:
        //   T (d det H)^2 - q(s) det(H)^2 + (sb^T adj(H) sb) det H
        std::vector<int64_t> cnum(static_cast<size_t>(n));
        i128 sbadj = 0;
        for (int c = 0; c < n; ++c) {
            i128 acc = 0;
            for (int j = 0; j < n; ++j) acc += static_cast<i128>(am(c, j)) * sb[static_cast<size_t>(j)];
            cnum[static_cast<size_t>(c)] = to_i64(acc, "coset center num");
            sbadj += static_cast<i128>(sb[static_cast<size_t>(c)]) * acc;
        }
        i128 dd = static_cast<i128>(d) * det_h;
        i128 ts = static_cast<i128>(target) * dd * dd - qs * det_h * det_h + sbadj * det_h;
        if (ts < 0) return 0;

        EnumSpec spec;
        spec.target_scaled = to_i64(ts, "coset scaled target");
        spec.center_num = &cnum;
        spec.center_den = to_i64(dd, "coset center den");
        spec.node_budget = node_budget;

        if (!need_x) {
            detail::Noop noop;
            return enumerate(hctx, spec, noop);
        }
        std::vector<int64_t> xbuf(static_cast<size_t>(m));
        return enumerate(hctx, spec, [&](const int32_t* z, int64_t) {
            for (int i = 0; i < m; ++i) {
                int64_t acc = xstar[static_cast<size_t>(i)];
                for (int c = 0; c < n; ++c) acc += km(i, c) * z[c];
                xbuf[static_cast<size_t>(i)] = acc;
            }
            // exact re-verification of both constraints
            i128 lv = 0;
            for (int i = 0; i < m; ++i) lv += static_cast<i128>(lin[static_cast<size_t>(i)]) * xbuf[static_cast<size_t>(i)];
            if (lv != lin_target) throw std::logic_error("coset: linear verification failed");
            i128 qv = 0;
            for (int i = 0; i < m; ++i) {
                i128 xi = static_cast<i128>(xbuf[static_cast<size_t>(i)]) * d + (tnum ? (*tnum)[static_cast<size_t>(i)] : 0);
                i128 row = 0;
                for (int j = 0; j < m; ++j) {
                    i128 xj = static_cast<i128>(xbuf[static_cast<size_t>(j)]) * d + (tnum ? (*tnum)[static_cast<size_t>(j)] : 0);
                    row += static_cast<i128>(gm(i, j)) * xj;
                }
                qv += xi * row;
            }
            if (qv != static_cast<i128>(target) * d * d)
                throw std::logic_error("coset: quadratic verification failed");
            cb(xbuf);
        });
    }
};

CosetEnumerator::CosetEnumerator(const MatZ& gram, const std::vector<int64_t>& lin,
                                 int64_t node_budget) {
    int m = gram.rows;
    if (static_cast<int>(lin.size()) != m)
        throw std::invalid_argument("coset: functional size mismatch");
    if (m < 2) throw std::invalid_argument("coset: rank must be at least 2");
    bool nonzero = false;
    for (int64_t v : lin) nonzero = nonzero || v != 0;
    if (!nonzero) throw std::invalid_argument("coset: zero functional");

    // lin . v = (+-g, 0, ..., 0): column 0 gives the particular solution,
    // the remaining columns a saturated kernel basis.
    MatZ row(1, m);
    for (int j = 0; j < m; ++j) row(0, j) = lin[static_cast<size_t>(j)];
    arith::SmithResult sm = arith::smith(row);
    MatZ v = sm.v;
    Int g = 0;
    for (int j = 0; j < m; ++j) g += row(0, j) * v(j, 0);
    if (g < 0) {
        g = -g;
        for (int i = 0; i < m; ++i) v(i, 0) = -v(i, 0);
    }
    std::vector<int64_t> part(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) part[static_cast<size_t>(i)] = to_i64(v(i, 0), "coset particular");

    MatZ kern(m, m - 1);
    for (int i = 0; i < m; ++i)
        for (int j = 1; j < m; ++j) kern(i, j - 1) = v(i, j);
    MatZ h = arith::mul(arith::mul(kern.transpose(), gram), kern);
    arith::LLLResult red = arith::lll_reduce_gram(h);
    MatZ kern_red = arith::mul(kern, red.u);
    Int dh = arith::det(red.gram);
    MatQ adjq = arith::inverse(arith::to_rational(red.gram));
    for (auto& e : adjq.a) {
        e *= Rat(dh);
        e.canonicalize();
    }
    impl_ = std::make_shared<Impl>(gram, lin, node_budget, kern_red, red.gram,
                                   arith::to_integral(adjq), dh, part, to_i64(g, "coset gcd"));
}

int64_t CosetEnumerator::count(int64_t lin_target, int64_t target,
                               const std::vector<int64_t>* tnum, int64_t tden) const {
    return impl_->run(lin_target, target, tnum, tden, false,
                      [](const std::vector<int64_t>&) {});
}

int64_t CosetEnumerator::enumerate_solutions(
    int64_t lin_target, int64_t target,
    const std::function<void(const std::vector<int64_t>&)>& cb,
    const std::vector<int64_t>* tnum, int64_t tden) const {
    return impl_->run(lin_target, target, tnum, tden, true, cb);
}

}  // namespace theta
}  // namespace thetalat
