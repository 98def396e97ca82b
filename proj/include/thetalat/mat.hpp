#ifndef THETALAT_MAT_HPP
#define THETALAT_MAT_HPP

#include <functional>
#include <map>
#include <vector>

#include "thetalat/arith.hpp"

namespace thetalat {
namespace arith {

// Small dense exact matrices.  Row-major, desk-scale dimensions.
template <typename T>
struct Mat {
    int rows = 0, cols = 0;
    std::vector<T> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, T(0)) {}

    T& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    const T& operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    Mat transpose() const {
        Mat t(cols, rows);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool operator==(const Mat& o) const {
        return rows == o.rows && cols == o.cols && a == o.a;
    }
};

using MatZ = Mat<Int>;
using MatQ = Mat<Rat>;

MatZ mul(const MatZ& x, const MatZ& y);
MatQ mul(const MatQ& x, const MatQ& y);
MatQ to_rational(const MatZ& m);
// Requires every entry integral.
MatZ to_integral(const MatQ& m);
bool is_integral(const MatQ& m);

// x^T G y for column vectors.
Int bilinear(const MatZ& g, const std::vector<Int>& x, const std::vector<Int>& y);
Int bilinear(const MatZ& g, const std::vector<std::int64_t>& x,
             const std::vector<std::int64_t>& y);

Int det(const MatZ& m);        // Bareiss, exact
Rat det(const MatQ& m);
MatQ inverse(const MatQ& m);   // throws std::domain_error if singular

bool is_symmetric(const MatZ& m);
bool has_even_diagonal(const MatZ& m);
bool is_positive_definite(const MatZ& m);  // symmetric input assumed

// Canonical column Hermite normal form of the column span (full column rank
// required).  Pivots are positive, sit in the lowest possible rows, and the
// entries left of each pivot are reduced into [0, pivot).  Two integer
// matrices span the same column lattice iff their forms agree.
MatZ hnf_col(const MatZ& m);
// Same for a rational matrix: canonical basis of the spanned lattice.
MatQ hnf_col(const MatQ& m);

// Smith normal form with transforms: u * m * v = diag(d) with u, v
// unimodular and d_i >= 0, d_i | d_{i+1}.
struct SmithResult {
    MatZ u, v;
    std::vector<Int> d;
};
SmithResult smith(const MatZ& m);

// Sorted p-adic valuations of the invariant factors of a nonsingular square
// rational matrix whose denominators are powers of p.
std::vector<int> snf_valuations(const MatQ& m, std::int64_t p);

// Basis of the intersection of two full-rank column lattices.
MatQ intersect_columns(const MatQ& b1, const MatQ& b2);

// All-integer LLL (delta = 3/4) acting on a positive definite Gram matrix.
// Returns reduced = u^T * g * u with u unimodular.
struct LLLResult {
    MatZ gram;
    MatZ u;
};
LLLResult lll_reduce_gram(const MatZ& g);

std::vector<int> snf_valuations_int(const MatZ& m, std::int64_t p);

std::string mat_str(const MatZ& m);
std::string mat_str(const MatQ& m);

}  // namespace arith
}  // namespace thetalat

#endif
