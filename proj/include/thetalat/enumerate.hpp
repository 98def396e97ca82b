#ifndef THETALAT_ENUMERATE_HPP
#define THETALAT_ENUMERATE_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "thetalat/mat.hpp"

namespace thetalat {
namespace theta {

using std::int32_t;
using std::int64_t;
using i128 = __int128;

// Exact lattice-point enumeration on a positive definite integer Gram
// matrix.  All bounds come from integer square roots of exact fractions; no
// floating point touches a decision.
//
// Fraction-free Cholesky data from Bareiss elimination: with delta_i the
// leading principal i x i minor (delta_0 = 1) and B_ij the stage-i row
// entries, the form splits as
//
//   q(x) = sum_i N_i(x)^2 / (delta_i delta_{i+1}),
//   N_i(x) = delta_{i+1} x_i + sum_{j>i} B_ij x_j.
//
// Everything is scaled by lden = lcm_i(delta_i delta_{i+1}):
//   q(x) <= T  <=>  sum_i w_i N_i(x)^2 <= T * lden,
// with integer weights w_i = lden / (delta_i delta_{i+1}).
struct GramEnumContext {
    int m = 0;
    std::vector<int64_t> gram;    // row-major m x m
    std::vector<int64_t> delta;   // delta_0 .. delta_m
    std::vector<int64_t> brow;    // B_ij row-major (j > i slots used)
    std::vector<int64_t> w;       // per-level weights
    int64_t lden = 1;
    // double reciprocals backing the exact division fixups in the hot loop
    std::vector<double> inv_dp;
    double inv_w0 = 0.0;

    explicit GramEnumContext(const arith::MatZ& g);

    int64_t b(int i, int j) const { return brow[static_cast<size_t>(i) * m + j]; }
};

// Enumeration of x with q(x + c) == target (or <= target in upto mode),
// where c = center_num / center_den is an optional rational center.
// target_scaled, when set, overrides target with the exact rational value
// target_scaled / center_den^2.
struct EnumSpec {
    int64_t target = 0;
    bool upto = false;
    std::optional<int64_t> target_scaled;
    const std::vector<int64_t>* center_num = nullptr;
    int64_t center_den = 1;
    int64_t node_budget = int64_t(1) << 62;
};

namespace detail {

inline int64_t floor_div(int64_t a, int64_t b) {
    int64_t q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
inline int64_t ceil_div(int64_t a, int64_t b) { return -floor_div(-a, b); }

template <class CB>
struct Runner {
    const GramEnumContext& ctx;
    const EnumSpec& spec;
    CB& cb;

    int m;
    int64_t pden;
    double pden_d;
    std::vector<int32_t> x;
    std::vector<int64_t> ne;   // N_i(center_num)
    // sig[j*m + i] = pden * sum_{l >= j} B_il x_l + ne_i, maintained on descent
    std::vector<int64_t> sig;
    int64_t nodes_left;
    int64_t count = 0;

    Runner(const GramEnumContext& c, const EnumSpec& s, CB& k)
        : ctx(c), spec(s), cb(k), m(c.m), pden(s.center_den),
          pden_d(static_cast<double>(s.center_den)) {
        if (pden < 1) throw std::invalid_argument("enumerate: center_den must be positive");
        x.assign(static_cast<size_t>(m), 0);
        ne.assign(static_cast<size_t>(m), 0);
        nodes_left = s.node_budget;
        if (spec.center_num) {
            for (int i = 0; i < m; ++i) {
                int64_t acc = ctx.delta[static_cast<size_t>(i) + 1] * (*spec.center_num)[static_cast<size_t>(i)];
                for (int j = i + 1; j < m; ++j) acc += ctx.b(i, j) * (*spec.center_num)[static_cast<size_t>(j)];
                ne[static_cast<size_t>(i)] = acc;
            }
        } else if (pden != 1) {
            throw std::invalid_argument("enumerate: center_den without center");
        }
    }

    int64_t run() {
        i128 scaled = spec.target_scaled ? static_cast<i128>(*spec.target_scaled)
                                         : static_cast<i128>(spec.target) * pden * pden;
        i128 rbudget = scaled * ctx.lden;
        if (rbudget < 0) return 0;
        if (rbudget > (i128(1) << 62))
            throw std::overflow_error("enumerate: scaled budget too large");
        sig.assign(static_cast<size_t>(m + 1) * m, 0);
        for (int i = 0; i < m; ++i) sig[static_cast<size_t>(m) * m + i] = ne[static_cast<size_t>(i)];
        // small perfect-square table for the exact leaf solve
        if (!spec.upto) {
            int64_t sq_max = static_cast<int64_t>(rbudget) / ctx.w[0];
            if (sq_max <= (int64_t(1) << 22)) {
                sqrt_tab.assign(static_cast<size_t>(sq_max) + 1, -1);
                for (int64_t s = 0; s * s <= sq_max; ++s)
                    sqrt_tab[static_cast<size_t>(s * s)] = static_cast<int32_t>(s);
            }
        }
        rec(m - 1, static_cast<int64_t>(rbudget));
        return count;
    }

    std::vector<int32_t> sqrt_tab;

    // Nearest integer to -sp/dp without a division (dp > 0); exact via fixup.
    static int64_t center_of(int64_t sp, int64_t dp, double inv_dp) {
        int64_t c = static_cast<int64_t>(-static_cast<double>(sp) * inv_dp);
        // want |dp*c + sp| minimized: adjust by whole steps
        int64_t r = dp * c + sp;
        while (2 * r > dp) { --c; r -= dp; }
        while (2 * r < -dp) { ++c; r += dp; }
        return c;
    }

    // update sig rows below level i for the choice x_i = v
    inline void push_sig(int i, int64_t v) {
        const int64_t* brow = &ctx.brow[0];
        const int64_t pv = pden * v;
        int64_t* dst = &sig[static_cast<size_t>(i) * m];
        const int64_t* src = &sig[static_cast<size_t>(i + 1) * m];
        for (int r = 0; r < i; ++r) dst[r] = src[r] + brow[static_cast<size_t>(r) * m + i] * pv;
    }

    void rec(int i, int64_t rbudget) {
        if (--nodes_left < 0) throw CapacityError("enumerate: node budget exhausted");
        const int64_t wi = ctx.w[static_cast<size_t>(i)];
        const int64_t sp = sig[static_cast<size_t>(i + 1) * m + i];
        const int64_t dp = pden * ctx.delta[static_cast<size_t>(i) + 1];

        if (i == 0) {
            leaf(rbudget, sp, dp, wi);
            return;
        }
        if (i == 1 && !spec.upto) {
            // fused bottom pair: iterate x_1 and solve x_0 inline
            fused_level1(rbudget, sp, dp, wi);
            return;
        }
        // scan outward from the real minimizer: the feasible x_i form an
        // interval that, when nonempty, contains the rounded center
        const int64_t c0 = center_of(sp, dp, ctx.inv_dp[static_cast<size_t>(i)] / pden_d);
        int64_t np = dp * c0 + sp;
        for (int64_t v = c0, nv = np;; ++v, nv += dp) {
            int64_t child = rbudget - wi * nv * nv;
            if (child < 0) break;
            x[static_cast<size_t>(i)] = static_cast<int32_t>(v);
            push_sig(i, v);
            rec(i - 1, child);
        }
        for (int64_t v = c0 - 1, nv = np - dp;; --v, nv -= dp) {
            int64_t child = rbudget - wi * nv * nv;
            if (child < 0) break;
            x[static_cast<size_t>(i)] = static_cast<int32_t>(v);
            push_sig(i, v);
            rec(i - 1, child);
        }
    }

    void fused_level1(int64_t rbudget, int64_t sp, int64_t dp, int64_t wi) {
        const int64_t w0 = ctx.w[0];
        const int64_t dp0 = pden * ctx.delta[1];
        const int64_t b01p = ctx.b(0, 1) * pden;
        const int64_t sp0_base = sig[2 * static_cast<size_t>(m)];
        const int64_t c0 = center_of(sp, dp, ctx.inv_dp[1] / pden_d);
        int64_t np = dp * c0 + sp;
        for (int64_t v = c0, nv = np;; ++v, nv += dp) {
            int64_t child = rbudget - wi * nv * nv;
            if (child < 0) break;
            x[1] = static_cast<int32_t>(v);
            solve_leaf(child, sp0_base + b01p * v, dp0, w0);
        }
        for (int64_t v = c0 - 1, nv = np - dp;; --v, nv -= dp) {
            int64_t child = rbudget - wi * nv * nv;
            if (child < 0) break;
            x[1] = static_cast<int32_t>(v);
            solve_leaf(child, sp0_base + b01p * v, dp0, w0);
        }
    }

    inline void solve_leaf(int64_t rbudget, int64_t sp, int64_t dp, int64_t w0) {
        if (--nodes_left < 0) throw CapacityError("enumerate: node budget exhausted");
        int64_t sq = static_cast<int64_t>(static_cast<double>(rbudget) * ctx.inv_w0);
        while (sq * w0 > rbudget) --sq;
        while ((sq + 1) * w0 <= rbudget) ++sq;
        if (sq * w0 != rbudget) return;
        int64_t s;
        if (!sqrt_tab.empty()) {
            int32_t ts = sqrt_tab[static_cast<size_t>(sq)];
            if (ts < 0) return;
            s = ts;
        } else {
            s = static_cast<int64_t>(std::sqrt(static_cast<double>(sq)));
            while (s > 0 && s * s > sq) --s;
            while ((s + 1) * (s + 1) <= sq) ++s;
            if (s * s != sq) return;
        }
        for (int sign = 0; sign < 2; ++sign) {
            if (sign == 1 && s == 0) break;
            int64_t num = (sign ? -s : s) - sp;
            int64_t v = static_cast<int64_t>(static_cast<double>(num) * ctx.inv_dp[0] / pden_d);
            while (v * dp > num) --v;
            while ((v + 1) * dp <= num) ++v;
            if (v * dp != num) continue;
            x[0] = static_cast<int32_t>(v);
            ++count;
            cb(x.data(), spec.target);
        }
    }

    void leaf(int64_t rbudget, int64_t sp, int64_t dp, int64_t w0) {
        if (spec.upto) {
            const int64_t scale = ctx.lden * pden * pden;
            const int64_t c0 = center_of(sp, dp, ctx.inv_dp[0] / pden_d);
            int64_t np = dp * c0 + sp;
            for (int64_t v = c0, nv = np;; ++v, nv += dp) {
                int64_t rem = rbudget - w0 * nv * nv;
                if (rem < 0) break;
                x[0] = static_cast<int32_t>(v);
                ++count;
                cb(x.data(), spec.target - rem / scale);
            }
            for (int64_t v = c0 - 1, nv = np - dp;; --v, nv -= dp) {
                int64_t rem = rbudget - w0 * nv * nv;
                if (rem < 0) break;
                x[0] = static_cast<int32_t>(v);
                ++count;
                cb(x.data(), spec.target - rem / scale);
            }
            return;
        }
        // solve w0 (dp x + sp)^2 == rbudget exactly, divisions by fixup
        int64_t sq = static_cast<int64_t>(static_cast<double>(rbudget) * ctx.inv_w0);
        while (sq * w0 > rbudget) --sq;
        while ((sq + 1) * w0 <= rbudget) ++sq;
        if (sq * w0 != rbudget) return;
        int64_t s;
        if (!sqrt_tab.empty()) {
            int32_t ts = sqrt_tab[static_cast<size_t>(sq)];
            if (ts < 0) return;
            s = ts;
        } else {
            s = static_cast<int64_t>(std::sqrt(static_cast<double>(sq)));
            while (s > 0 && s * s > sq) --s;
            while ((s + 1) * (s + 1) <= sq) ++s;
            if (s * s != sq) return;
        }
        for (int sign = 0; sign < 2; ++sign) {
            if (sign == 1 && s == 0) break;
            int64_t num = (sign ? -s : s) - sp;
            int64_t v = static_cast<int64_t>(static_cast<double>(num) * ctx.inv_dp[0] / pden_d);
            while (v * dp > num) --v;
            while ((v + 1) * dp <= num) ++v;
            if (v * dp != num) continue;
            x[0] = static_cast<int32_t>(v);
            ++count;
            cb(x.data(), spec.target);
        }
    }
};

struct Noop {
    void operator()(const int32_t*, int64_t) const {}
};

}  // namespace detail

template <class CB>
int64_t enumerate(const GramEnumContext& ctx, const EnumSpec& spec, CB&& cb) {
    if (ctx.m == 0) return 0;
    detail::Runner<std::remove_reference_t<CB>> r(ctx, spec, cb);
    return r.run();
}

inline int64_t count_points(const GramEnumContext& ctx, const EnumSpec& spec) {
    detail::Noop noop;
    return enumerate(ctx, spec, noop);
}

// Enumeration in the affine slice {x : lin . x == lin_target} of
// {x : q(x + t) == target}: the constraint is eliminated via a unimodular
// change of variables, so the inner enumeration is an unconstrained one on
// the rank m-1 kernel lattice.  Setup is reusable across right-hand sides.
class CosetEnumerator {
public:
    CosetEnumerator(const arith::MatZ& gram, const std::vector<int64_t>& lin,
                    int64_t node_budget = int64_t(1) << 62);

    // Count solutions of q(x + tnum/tden) == target, lin . x == lin_target.
    int64_t count(int64_t lin_target, int64_t target,
                  const std::vector<int64_t>* tnum = nullptr, int64_t tden = 1) const;
    // Same, invoking cb(x) for each solution (x in the original frame);
    // every reported x is re-verified exactly.
    int64_t enumerate_solutions(int64_t lin_target, int64_t target,
                                const std::function<void(const std::vector<int64_t>&)>& cb,
                                const std::vector<int64_t>* tnum = nullptr,
                                int64_t tden = 1) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

}  // namespace theta
}  // namespace thetalat

#endif
