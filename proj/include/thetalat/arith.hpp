#ifndef THETALAT_ARITH_HPP
#define THETALAT_ARITH_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace thetalat {

using Int = mpz_class;
using Rat = mpq_class;

// Thrown when a brute-force search exceeds its configured budget.  A budget
// failure is a distinct outcome from a negative mathematical answer.
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

namespace arith {

// Floor of sqrt(n) for n >= 0.
Int isqrt(const Int& n);
std::int64_t isqrt64(std::int64_t n);

bool is_prime(std::int64_t n);

// Kronecker symbol (a/b), b != 0.  Completely multiplicative in b, equal to
// the Legendre symbol when b is an odd prime not dividing a.  At b = 2 uses
// the standard rule: a odd maps to +1 for a = +-1 mod 8 and -1 for a = +-3.
int kronecker(const Int& a, const Int& b);
int kronecker(std::int64_t a, std::int64_t b);

// Exact q-combinatorics.  q is the residue field size N(P).
//
//   beta(r,a)  = prod_{i<a} (q^{r-i}-1)/(q^{a-i}-1), the number of
//                a-dimensional subspaces of an r-dimensional F_q-space;
//                0 when a < 0 or a > r (vanishing product convention).
//   eta(r,a)   = prod_{i=a}^{r-1} (q^{r-i} - q^{a-i}); eta(r,0) = |GL_r(F_q)|,
//                and for a rank-a matrix C in F_q^{r,a} it counts the ways to
//                extend C to an element of GL_r(F_q).
//   delta(m,r) = prod_{i<r} (q^{m-i}+1),  mu(m,r) = prod_{i<r} (q^{m-i}-1),
//                with delta(m,0) = mu(m,0) = 1.
Int beta(std::int64_t q, std::int64_t r, std::int64_t a);
Int eta(std::int64_t q, std::int64_t r, std::int64_t a);
Int delta(std::int64_t q, std::int64_t m, std::int64_t r);
Int mu(std::int64_t q, std::int64_t m, std::int64_t r);

// Coefficients of the operator identities:
//   u_i(j) = (-1)^i q^{i(i-1)/2} beta(n-j+i, i)
//   v_i(j) = (-1)^i beta(k-n+i-1, i) delta(k-j+i-1, i)   if chi = +1
//            (-1)^i delta(k-n+i-1, i) beta(k-j+i-1, i)   if chi = -1
Int u_coeff(std::int64_t q, std::int64_t n, std::int64_t j, std::int64_t i);
Int v_coeff(std::int64_t q, std::int64_t k, std::int64_t n, std::int64_t j,
            std::int64_t i, int chi);

// Eigenvalue of T'_j(P^2) on the average theta series:
//   q^{j(k-n)+j(j-1)/2} beta(n,j) delta(k-1,j)  when chi = +1 and j <= k,
//   q^{j(k-n)+j(j-1)/2} beta(n,j) mu(k-1,j)     when chi = -1 and j < k,
//   0 otherwise.
Int lambda_j(std::int64_t q, std::int64_t k, std::int64_t n, std::int64_t j,
             int chi);

// Element of Z[zeta_p], p prime, stored as a coefficient vector of length p
// on 1, zeta, ..., zeta^{p-1}.  Two vectors represent the same value iff they
// differ by a constant vector (1 + zeta + ... + zeta^{p-1} = 0); the
// canonical form has last slot zero.
class CycInt {
public:
    CycInt() : p_(2), c_(2, 0) {}
    explicit CycInt(std::int64_t p);
    CycInt(std::int64_t p, const Int& constant);

    static CycInt zeta_pow(std::int64_t p, std::int64_t e);

    std::int64_t prime() const { return p_; }
    const std::vector<Int>& coeffs() const { return c_; }

    void add_zeta_pow(std::int64_t e, const Int& mult = 1);

    CycInt& operator+=(const CycInt& o);
    CycInt& operator-=(const CycInt& o);
    CycInt operator+(const CycInt& o) const;
    CycInt operator-(const CycInt& o) const;
    CycInt operator*(const CycInt& o) const;
    CycInt operator*(const Int& s) const;
    CycInt operator-() const;
    bool operator==(const CycInt& o) const;
    bool operator!=(const CycInt& o) const { return !(*this == o); }

    // Canonical form: subtract the last coefficient from every slot.
    CycInt canonical() const;
    bool is_zero() const;
    // The value is a rational integer iff slots 1..p-1 agree; then it equals
    // c_0 - c_1 in canonical coordinates.
    bool is_integer() const;
    Int to_integer() const;

    std::string str() const;

private:
    std::int64_t p_;
    std::vector<Int> c_;
};

}  // namespace arith
}  // namespace thetalat

#endif
