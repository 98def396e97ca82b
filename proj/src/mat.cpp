#include "thetalat/mat.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace thetalat {
namespace arith {

MatZ mul(const MatZ& x, const MatZ& y) {
    if (x.cols != y.rows) throw std::invalid_argument("mul: shape mismatch");
    MatZ r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const Int& v = x(i, k);
            if (v == 0) continue;
            for (int j = 0; j < y.cols; ++j) r(i, j) += v * y(k, j);
        }
    return r;
}

MatQ mul(const MatQ& x, const MatQ& y) {
    if (x.cols != y.rows) throw std::invalid_argument("mul: shape mismatch");
    MatQ r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const Rat& v = x(i, k);
            if (v == 0) continue;
            for (int j = 0; j < y.cols; ++j) r(i, j) += v * y(k, j);
        }
    return r;
}

MatQ to_rational(const MatZ& m) {
    MatQ r(m.rows, m.cols);
    for (size_t i = 0; i < m.a.size(); ++i) r.a[i] = Rat(m.a[i]);
    return r;
}

bool is_integral(const MatQ& m) {
    for (const auto& x : m.a)
        if (x.get_den() != 1) return false;
    return true;
}

MatZ to_integral(const MatQ& m) {
    MatZ r(m.rows, m.cols);
    for (size_t i = 0; i < m.a.size(); ++i) {
        if (m.a[i].get_den() != 1) throw std::domain_error("to_integral: non-integral entry");
        r.a[i] = m.a[i].get_num();
    }
    return r;
}

Int bilinear(const MatZ& g, const std::vector<Int>& x, const std::vector<Int>& y) {
    if (static_cast<int>(x.size()) != g.rows || static_cast<int>(y.size()) != g.cols)
        throw std::invalid_argument("bilinear: shape mismatch");
    Int s = 0;
    for (int i = 0; i < g.rows; ++i) {
        if (x[static_cast<size_t>(i)] == 0) continue;
        Int row = 0;
        for (int j = 0; j < g.cols; ++j) row += g(i, j) * y[static_cast<size_t>(j)];
        s += x[static_cast<size_t>(i)] * row;
    }
    return s;
}

Int bilinear(const MatZ& g, const std::vector<std::int64_t>& x,
             const std::vector<std::int64_t>& y) {
    std::vector<Int> xi(x.size()), yi(y.size());
    for (size_t i = 0; i < x.size(); ++i) xi[i] = Int(static_cast<long>(x[i]));
    for (size_t i = 0; i < y.size(); ++i) yi[i] = Int(static_cast<long>(y[i]));
    return bilinear(g, xi, yi);
}

Int det(const MatZ& m) {
    if (m.rows != m.cols) throw std::invalid_argument("det: square matrix required");
    int n = m.rows;
    if (n == 0) return 1;
    MatZ w = m;
    Int prev = 1;
    int sign = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (w(k, k) == 0) {
            int piv = -1;
            for (int i = k + 1; i < n; ++i)
                if (w(i, k) != 0) { piv = i; break; }
            if (piv < 0) return 0;
            for (int j = 0; j < n; ++j) std::swap(w(k, j), w(piv, j));
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j) {
                Int t = w(i, j) * w(k, k) - w(i, k) * w(k, j);
                mpz_divexact(t.get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
                w(i, j) = t;
            }
        prev = w(k, k);
    }
    return sign > 0 ? w(n - 1, n - 1) : Int(-w(n - 1, n - 1));
}

Rat det(const MatQ& m) {
    if (m.rows != m.cols) throw std::invalid_argument("det: square matrix required");
    int n = m.rows;
    MatQ w = m;
    Rat result = 1;
    for (int k = 0; k < n; ++k) {
        int piv = -1;
        for (int i = k; i < n; ++i)
            if (w(i, k) != 0) { piv = i; break; }
        if (piv < 0) return Rat(0);
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(w(k, j), w(piv, j));
            result = -result;
        }
        result *= w(k, k);
        Rat inv = 1 / w(k, k);
        for (int i = k + 1; i < n; ++i) {
            Rat f = w(i, k) * inv;
            if (f == 0) continue;
            for (int j = k; j < n; ++j) w(i, j) -= f * w(k, j);
        }
    }
    return result;
}

MatQ inverse(const MatQ& m) {
    if (m.rows != m.cols) throw std::invalid_argument("inverse: square matrix required");
    int n = m.rows;
    MatQ w = m, inv = MatQ::identity(n);
    for (int k = 0; k < n; ++k) {
        int piv = -1;
        for (int i = k; i < n; ++i)
            if (w(i, k) != 0) { piv = i; break; }
        if (piv < 0) throw std::domain_error("inverse: singular matrix");
        if (piv != k)
            for (int j = 0; j < n; ++j) {
                std::swap(w(k, j), w(piv, j));
                std::swap(inv(k, j), inv(piv, j));
            }
        Rat d = 1 / w(k, k);
        for (int j = 0; j < n; ++j) { w(k, j) *= d; inv(k, j) *= d; }
        for (int i = 0; i < n; ++i) {
            if (i == k || w(i, k) == 0) continue;
            Rat f = w(i, k);
            for (int j = 0; j < n; ++j) {
                w(i, j) -= f * w(k, j);
                inv(i, j) -= f * inv(k, j);
            }
        }
    }
    return inv;
}

bool is_symmetric(const MatZ& m) {
    if (m.rows != m.cols) return false;
    for (int i = 0; i < m.rows; ++i)
        for (int j = i + 1; j < m.cols; ++j)
            if (m(i, j) != m(j, i)) return false;
    return true;
}

bool has_even_diagonal(const MatZ& m) {
    for (int i = 0; i < std::min(m.rows, m.cols); ++i)
        if (m(i, i) % 2 != 0) return false;
    return true;
}

bool is_positive_definite(const MatZ& m) {
    if (m.rows != m.cols) return false;
    for (int k = 1; k <= m.rows; ++k) {
        MatZ sub(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) sub(i, j) = m(i, j);
        if (det(sub) <= 0) return false;
    }
    return true;
}

MatZ hnf_col(const MatZ& m) {
    MatZ w = m;
    int npiv = 0;
    for (int i = 0; i < w.rows && npiv < w.cols; ++i) {
        // Collect the gcd of row i over columns >= npiv into column npiv,
        // zeroing the rest of the row to its right.
        int nz = -1;
        for (int j = npiv; j < w.cols; ++j)
            if (w(i, j) != 0) { nz = j; break; }
        if (nz < 0) continue;
        if (nz != npiv)
            for (int r = 0; r < w.rows; ++r) std::swap(w(r, npiv), w(r, nz));
        for (int j = npiv + 1; j < w.cols; ++j) {
            while (w(i, j) != 0) {
                Int q = w(i, npiv) / w(i, j);  // truncated division is fine here
                if (q != 0)
                    for (int r = 0; r < w.rows; ++r) w(r, npiv) -= q * w(r, j);
                for (int r = 0; r < w.rows; ++r) std::swap(w(r, npiv), w(r, j));
            }
        }
        if (w(i, npiv) < 0)
            for (int r = 0; r < w.rows; ++r) w(r, npiv) = -w(r, npiv);
        // Reduce the entries of row i in the earlier pivot columns.
        for (int j = 0; j < npiv; ++j) {
            Int q;
            mpz_fdiv_q(q.get_mpz_t(), w(i, j).get_mpz_t(), w(i, npiv).get_mpz_t());
            if (q != 0)
                for (int r = 0; r < w.rows; ++r) w(r, j) -= q * w(r, npiv);
        }
        ++npiv;
    }
    // Drop the trailing zero columns: the result is a basis of the span.
    if (npiv != w.cols) {
        MatZ out(w.rows, npiv);
        for (int i = 0; i < w.rows; ++i)
            for (int j = 0; j < npiv; ++j) out(i, j) = w(i, j);
        return out;
    }
    return w;
}

MatQ hnf_col(const MatQ& m) {
    Int den = 1;
    for (const auto& x : m.a) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), x.get_den_mpz_t());
    MatZ w(m.rows, m.cols);
    for (size_t i = 0; i < m.a.size(); ++i) {
        Rat t = m.a[i] * Rat(den);
        w.a[i] = t.get_num();
    }
    MatZ h = hnf_col(w);
    MatQ r(h.rows, h.cols);
    for (size_t i = 0; i < h.a.size(); ++i) {
        r.a[i] = Rat(h.a[i], den);
        r.a[i].canonicalize();
    }
    return r;
}

SmithResult smith(const MatZ& m) {
    int rows = m.rows, cols = m.cols;
    MatZ w = m;
    MatZ u = MatZ::identity(rows), v = MatZ::identity(cols);
    int t = 0;
    int steps = std::min(rows, cols);
    while (t < steps) {
        // Find a nonzero pivot in the trailing block.
        int pi = -1, pj = -1;
        for (int i = t; i < rows && pi < 0; ++i)
            for (int j = t; j < cols; ++j)
                if (w(i, j) != 0) { pi = i; pj = j; break; }
        if (pi < 0) break;
        if (pi != t)
            for (int j = 0; j < cols; ++j) std::swap(w(t, j), w(pi, j));
        if (pi != t)
            for (int j = 0; j < rows; ++j) std::swap(u(t, j), u(pi, j));
        if (pj != t) {
            for (int i = 0; i < rows; ++i) std::swap(w(i, t), w(i, pj));
            for (int i = 0; i < cols; ++i) std::swap(v(i, t), v(i, pj));
        }
        bool clean = false;
        while (!clean) {
            clean = true;
            for (int i = t + 1; i < rows; ++i) {
                if (w(i, t) == 0) continue;
                Int q = w(i, t) / w(t, t);
                if (q != 0) {
                    for (int j = 0; j < cols; ++j) w(i, j) -= q * w(t, j);
                    for (int j = 0; j < rows; ++j) u(i, j) -= q * u(t, j);
                }
                if (w(i, t) != 0) {
                    for (int j = 0; j < cols; ++j) std::swap(w(t, j), w(i, j));
                    for (int j = 0; j < rows; ++j) std::swap(u(t, j), u(i, j));
                    clean = false;
                }
            }
            for (int j = t + 1; j < cols; ++j) {
                if (w(t, j) == 0) continue;
                Int q = w(t, j) / w(t, t);
                if (q != 0) {
                    for (int i = 0; i < rows; ++i) w(i, j) -= q * w(i, t);
                    for (int i = 0; i < cols; ++i) v(i, j) -= q * v(i, t);
                }
                if (w(t, j) != 0) {
                    for (int i = 0; i < rows; ++i) std::swap(w(i, t), w(i, j));
                    for (int i = 0; i < cols; ++i) std::swap(v(i, t), v(i, j));
                    clean = false;
                }
            }
        }
        // Enforce divisibility of the remaining block by the pivot.
        bool redo = false;
        for (int i = t + 1; i < rows && !redo; ++i)
            for (int j = t + 1; j < cols; ++j)
                if (w(i, j) % w(t, t) != 0) {
                    for (int jj = 0; jj < cols; ++jj) w(t, jj) += w(i, jj);
                    for (int jj = 0; jj < rows; ++jj) u(t, jj) += u(i, jj);
                    redo = true;
                    break;
                }
        if (redo) continue;
        if (w(t, t) < 0) {
            for (int j = 0; j < cols; ++j) w(t, j) = -w(t, j);
            for (int j = 0; j < rows; ++j) u(t, j) = -u(t, j);
        }
        ++t;
    }
    SmithResult res;
    res.u = u;
    res.v = v;
    res.d.resize(static_cast<size_t>(steps));
    for (int i = 0; i < steps; ++i) res.d[static_cast<size_t>(i)] = w(i, i);
    return res;
}

std::vector<int> snf_valuations_int(const MatZ& m, std::int64_t p) {
    SmithResult s = smith(m);
    std::vector<int> vals;
    for (const Int& d : s.d) {
        if (d == 0) throw std::domain_error("snf_valuations: singular matrix");
        Int t = d;
        int v = 0;
        while (mpz_divisible_ui_p(t.get_mpz_t(), static_cast<unsigned long>(p))) {
            mpz_divexact_ui(t.get_mpz_t(), t.get_mpz_t(), static_cast<unsigned long>(p));
            ++v;
        }
        vals.push_back(v);
    }
    std::sort(vals.begin(), vals.end());
    return vals;
}

std::vector<int> snf_valuations(const MatQ& m, std::int64_t p) {
    if (m.rows != m.cols) throw std::invalid_argument("snf_valuations: square matrix required");
    Int den = 1;
    for (const auto& x : m.a) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), x.get_den_mpz_t());
    // Denominators must be powers of the context prime.
    Int d = den;
    int t = 0;
    while (mpz_divisible_ui_p(d.get_mpz_t(), static_cast<unsigned long>(p))) {
        mpz_divexact_ui(d.get_mpz_t(), d.get_mpz_t(), static_cast<unsigned long>(p));
        ++t;
    }
    if (d != 1)
        throw std::domain_error("snf_valuations: denominators are not powers of p");
    MatZ w(m.rows, m.cols);
    for (size_t i = 0; i < m.a.size(); ++i) {
        Rat x = m.a[i] * Rat(den);
        w.a[i] = x.get_num();
    }
    std::vector<int> vals = snf_valuations_int(w, p);
    for (auto& v : vals) v -= t;
    return vals;
}

MatQ intersect_columns(const MatQ& b1, const MatQ& b2) {
    if (b1.rows != b2.rows || b1.rows != b1.cols || b2.rows != b2.cols)
        throw std::invalid_argument("intersect_columns: full-rank square bases required");
    int n = b1.rows;
    MatQ x = mul(inverse(b2), b1);
    Int den = 1;
    for (const auto& e : x.a) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), e.get_den_mpz_t());
    MatZ pmat(n, n);
    for (size_t i = 0; i < x.a.size(); ++i) {
        Rat t = x.a[i] * Rat(den);
        pmat.a[i] = t.get_num();
    }
    // {y in Z^n : pmat * y == 0 mod den}; with u*pmat*v = diag(d) the solutions
    // are v * diag(den / gcd(d_i, den)) Z^n.
    SmithResult s = smith(pmat);
    MatZ scale(n, n);
    for (int i = 0; i < n; ++i) {
        Int g;
        mpz_gcd(g.get_mpz_t(), s.d[static_cast<size_t>(i)].get_mpz_t(), den.get_mpz_t());
        scale(i, i) = den / g;
    }
    MatQ basis = to_rational(mul(s.v, scale));
    return hnf_col(mul(b1, basis));
}

// Cohen, "A Course in Computational Algebraic Number Theory", Alg. 2.6.7:
// all-integer LLL working on the Gram matrix, delta = 3/4.
namespace {

struct LLLState {
    int n;
    MatZ h;  // current gram
    MatZ u;  // transform
    std::vector<Int> d;               // d[0] = 1, d[i+1] = Gram determinant of first i+1 vectors
    std::vector<std::vector<Int>> lam;

    void col_op(int k, int l, const Int& q) {
        // basis_k -= q * basis_l
        if (q == 0) return;
        for (int i = 0; i < n; ++i) u(i, k) -= q * u(i, l);
        for (int i = 0; i < n; ++i) h(k, i) -= q * h(l, i);
        for (int i = 0; i < n; ++i) h(i, k) -= q * h(i, l);
    }

    void swap_basis(int k) {
        for (int i = 0; i < n; ++i) std::swap(u(i, k), u(i, k - 1));
        for (int i = 0; i < n; ++i) std::swap(h(k, i), h(k - 1, i));
        for (int i = 0; i < n; ++i) std::swap(h(i, k), h(i, k - 1));
    }
};

}  // namespace

LLLResult lll_reduce_gram(const MatZ& g) {
    if (!is_symmetric(g)) throw std::invalid_argument("lll_reduce_gram: symmetric input required");
    int n = g.rows;
    LLLState st;
    st.n = n;
    st.h = g;
    st.u = MatZ::identity(n);
    st.d.assign(static_cast<size_t>(n) + 1, Int(1));
    st.lam.assign(static_cast<size_t>(n), std::vector<Int>(static_cast<size_t>(n), Int(0)));

    auto recompute_gs = [&]() {
        st.d[0] = 1;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j <= i; ++j) {
                Int uu = st.h(i, j);
                for (int k = 0; k < j; ++k) {
                    Int t = st.d[static_cast<size_t>(k) + 1] * uu -
                            st.lam[static_cast<size_t>(i)][static_cast<size_t>(k)] *
                                st.lam[static_cast<size_t>(j)][static_cast<size_t>(k)];
                    mpz_divexact(t.get_mpz_t(), t.get_mpz_t(), st.d[static_cast<size_t>(k)].get_mpz_t());
                    uu = t;
                }
                if (j < i)
                    st.lam[static_cast<size_t>(i)][static_cast<size_t>(j)] = uu;
                else {
                    st.d[static_cast<size_t>(i) + 1] = uu;
                    if (uu <= 0) throw std::domain_error("lll_reduce_gram: not positive definite");
                }
            }
        }
    };

    auto redi = [&](int k, int l) {
        Int two_lam = 2 * st.lam[static_cast<size_t>(k)][static_cast<size_t>(l)];
        Int dl = st.d[static_cast<size_t>(l) + 1];
        if (two_lam > dl || two_lam < -dl) {
            // q = nearest integer to lam / d
            Int num = two_lam + dl;
            Int den = 2 * dl;
            Int q;
            mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
            st.col_op(k, l, q);
            st.lam[static_cast<size_t>(k)][static_cast<size_t>(l)] -= q * dl;
            for (int i = 0; i < l; ++i)
                st.lam[static_cast<size_t>(k)][static_cast<size_t>(i)] -=
                    q * st.lam[static_cast<size_t>(l)][static_cast<size_t>(i)];
        }
    };

    auto swapk = [&](int k) {
        st.swap_basis(k);
        for (int j = 0; j < k - 1; ++j)
            std::swap(st.lam[static_cast<size_t>(k)][static_cast<size_t>(j)],
                      st.lam[static_cast<size_t>(k) - 1][static_cast<size_t>(j)]);
        Int lam = st.lam[static_cast<size_t>(k)][static_cast<size_t>(k) - 1];
        Int b = st.d[static_cast<size_t>(k) - 1] * st.d[static_cast<size_t>(k) + 1] + lam * lam;
        mpz_divexact(b.get_mpz_t(), b.get_mpz_t(), st.d[static_cast<size_t>(k)].get_mpz_t());
        for (int i = k + 1; i < n; ++i) {
            Int t = st.lam[static_cast<size_t>(i)][static_cast<size_t>(k)];
            Int x = st.d[static_cast<size_t>(k) + 1] *
                        st.lam[static_cast<size_t>(i)][static_cast<size_t>(k) - 1] -
                    lam * t;
            mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), st.d[static_cast<size_t>(k)].get_mpz_t());
            st.lam[static_cast<size_t>(i)][static_cast<size_t>(k)] = x;
            Int y = b * t + lam * x;
            mpz_divexact(y.get_mpz_t(), y.get_mpz_t(), st.d[static_cast<size_t>(k) + 1].get_mpz_t());
            st.lam[static_cast<size_t>(i)][static_cast<size_t>(k) - 1] = y;
        }
        st.d[static_cast<size_t>(k)] = b;
    };

    recompute_gs();
    int k = 1;
    while (k < n) {
        redi(k, k - 1);
        Int lam = st.lam[static_cast<size_t>(k)][static_cast<size_t>(k) - 1];
        Int lhs = 4 * st.d[static_cast<size_t>(k) + 1] * st.d[static_cast<size_t>(k) - 1];
        Int rhs = 3 * st.d[static_cast<size_t>(k)] * st.d[static_cast<size_t>(k)] - 4 * lam * lam;
        if (lhs < rhs) {
            swapk(k);
            k = std::max(1, k - 1);
        } else {
            for (int l = k - 2; l >= 0; --l) redi(k, l);
            ++k;
        }
    }
    LLLResult res;
    res.gram = st.h;
    res.u = st.u;
    return res;
}

std::string mat_str(const MatZ& m) {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < m.rows; ++i) {
        if (i) os << "; ";
        for (int j = 0; j < m.cols; ++j) {
            if (j) os << " ";
            os << m(i, j).get_str();
        }
    }
    os << "]";
    return os.str();
}

std::string mat_str(const MatQ& m) {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < m.rows; ++i) {
        if (i) os << "; ";
        for (int j = 0; j < m.cols; ++j) {
            if (j) os << " ";
            os << m(i, j).get_num().get_str();
            if (m(i, j).get_den() != 1) os << "/" << m(i, j).get_den().get_str();
        }
    }
    os << "]";
    return os.str();
}

}  // namespace arith
}  // namespace thetalat
