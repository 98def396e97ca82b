#include "thetalat/arith.hpp"

#include <cmath>
#include <sstream>

namespace thetalat {
namespace arith {

Int isqrt(const Int& n) {
    if (n < 0) throw std::invalid_argument("isqrt: negative argument");
    Int r;
    mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
    return r;
}

std::int64_t isqrt64(std::int64_t n) {
    if (n < 0) throw std::invalid_argument("isqrt64: negative argument");
    if (n == 0) return 0;
    auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
    while (r > 0 && r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

bool is_prime(std::int64_t n) {
    if (n < 2) return false;
    for (std::int64_t d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

int kronecker(const Int& a, const Int& b) {
    if (b == 0) throw std::invalid_argument("kronecker: b must be nonzero");
    Int aa = a, bb = b;
    int result = 1;
    if (bb < 0) {
        bb = -bb;
        if (aa < 0) result = -result;  // (a/-1) = sign of a
    }
    // Split off the even part of b; (a/2) is 0 for even a, else +-1 by a mod 8.
    if (bb % 2 == 0) {
        if (aa % 2 == 0) return 0;
        int e = 0;
        while (bb % 2 == 0) { bb /= 2; ++e; }
        if (e % 2 == 1) {
            long m = mpz_fdiv_ui(aa.get_mpz_t(), 8);
            if (m == 3 || m == 5) result = -result;
        }
    }
    // Now bb is odd and positive: Jacobi symbol (aa/bb) by reciprocity.
    aa = Int(aa % bb);
    if (aa < 0) aa += bb;
    while (aa != 0) {
        while (aa % 2 == 0) {
            aa /= 2;
            long m = mpz_fdiv_ui(bb.get_mpz_t(), 8);
            if (m == 3 || m == 5) result = -result;
        }
        std::swap(aa, bb);
        if (mpz_fdiv_ui(aa.get_mpz_t(), 4) == 3 && mpz_fdiv_ui(bb.get_mpz_t(), 4) == 3)
            result = -result;
        aa %= bb;
    }
    if (bb != 1) return 0;  // gcd(a,b) > 1
    return result;
}

int kronecker(std::int64_t a, std::int64_t b) {
    return kronecker(Int(a), Int(b));
}

static Int ipow(std::int64_t q, std::int64_t e) {
    Int r;
    mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(q),
                  static_cast<unsigned long>(e));
    return r;
}

Int beta(std::int64_t q, std::int64_t r, std::int64_t a) {
    if (q < 2) throw std::invalid_argument("beta: q must be >= 2");
    if (a == 0) return 1;  // empty product, any r
    if (a < 0 || a > r) return 0;
    Int num = 1, den = 1;
    for (std::int64_t i = 0; i < a; ++i) {
        num *= ipow(q, r - i) - 1;
        den *= ipow(q, a - i) - 1;
    }
    Int quo, rem;
    mpz_tdiv_qr(quo.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    if (rem != 0) throw std::logic_error("beta: non-integral Gaussian binomial");
    return quo;
}

Int eta(std::int64_t q, std::int64_t r, std::int64_t a) {
    if (q < 2) throw std::invalid_argument("eta: q must be >= 2");
    if (a < 0 || a > r) throw std::invalid_argument("eta: need 0 <= a <= r");
    Int prod = 1;
    for (std::int64_t i = a; i < r; ++i) prod *= ipow(q, r) - ipow(q, i);
    return prod;
}

Int delta(std::int64_t q, std::int64_t m, std::int64_t r) {
    if (r < 0) throw std::invalid_argument("delta: r must be >= 0");
    if (r > 0 && m - r + 1 < 0)
        throw std::invalid_argument("delta: negative exponent in product");
    Int prod = 1;
    for (std::int64_t i = 0; i < r; ++i) prod *= ipow(q, m - i) + 1;
    return prod;
}

Int mu(std::int64_t q, std::int64_t m, std::int64_t r) {
    if (r < 0) throw std::invalid_argument("mu: r must be >= 0");
    if (r > 0 && m - r + 1 < 0)
        throw std::invalid_argument("mu: negative exponent in product");
    Int prod = 1;
    for (std::int64_t i = 0; i < r; ++i) prod *= ipow(q, m - i) - 1;
    return prod;
}

Int u_coeff(std::int64_t q, std::int64_t n, std::int64_t j, std::int64_t i) {
    if (i < 0 || i > j || j > n) throw std::invalid_argument("u_coeff: need 0 <= i <= j <= n");
    Int r = ipow(q, i * (i - 1) / 2) * beta(q, n - j + i, i);
    return (i % 2 == 0) ? r : Int(-r);
}

Int v_coeff(std::int64_t q, std::int64_t k, std::int64_t n, std::int64_t j,
            std::int64_t i, int chi) {
    if (i < 0 || i > j || j > n) throw std::invalid_argument("v_coeff: need 0 <= i <= j <= n");
    if (chi != 1 && chi != -1) throw std::invalid_argument("v_coeff: chi must be +-1");
    Int r;
    if (chi == 1)
        r = beta(q, k - n + i - 1, i) * delta(q, k - j + i - 1, i);
    else
        r = delta(q, k - n + i - 1, i) * beta(q, k - j + i - 1, i);
    return (i % 2 == 0) ? r : Int(-r);
}

Int lambda_j(std::int64_t q, std::int64_t k, std::int64_t n, std::int64_t j,
             int chi) {
    if (j < 1 || j > n) throw std::invalid_argument("lambda_j: need 1 <= j <= n");
    if (chi != 1 && chi != -1) throw std::invalid_argument("lambda_j: chi must be +-1");
    if (chi == 1 && j > k) return 0;
    if (chi == -1 && j >= k) return 0;
    Int tail = (chi == 1) ? delta(q, k - 1, j) : mu(q, k - 1, j);
    return ipow(q, j * (k - n) + j * (j - 1) / 2) * beta(q, n, j) * tail;
}

CycInt::CycInt(std::int64_t p) : p_(p), c_(static_cast<size_t>(p), Int(0)) {
    if (p < 2 || !is_prime(p)) throw std::invalid_argument("CycInt: p must be prime");
}

CycInt::CycInt(std::int64_t p, const Int& constant) : CycInt(p) {
    c_[0] = constant;
}

CycInt CycInt::zeta_pow(std::int64_t p, std::int64_t e) {
    CycInt z(p);
    z.add_zeta_pow(e);
    return z;
}

void CycInt::add_zeta_pow(std::int64_t e, const Int& mult) {
    std::int64_t r = e % p_;
    if (r < 0) r += p_;
    c_[static_cast<size_t>(r)] += mult;
}

CycInt& CycInt::operator+=(const CycInt& o) {
    if (p_ != o.p_) throw std::invalid_argument("CycInt: mixed primes");
    for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

CycInt& CycInt::operator-=(const CycInt& o) {
    if (p_ != o.p_) throw std::invalid_argument("CycInt: mixed primes");
    for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

CycInt CycInt::operator+(const CycInt& o) const { CycInt r = *this; r += o; return r; }
CycInt CycInt::operator-(const CycInt& o) const { CycInt r = *this; r -= o; return r; }

CycInt CycInt::operator*(const CycInt& o) const {
    if (p_ != o.p_) throw std::invalid_argument("CycInt: mixed primes");
    CycInt r(p_);
    for (std::int64_t i = 0; i < p_; ++i) {
        if (c_[static_cast<size_t>(i)] == 0) continue;
        for (std::int64_t j = 0; j < p_; ++j) {
            std::int64_t k = (i + j) % p_;
            r.c_[static_cast<size_t>(k)] += c_[static_cast<size_t>(i)] * o.c_[static_cast<size_t>(j)];
        }
    }
    return r;
}

CycInt CycInt::operator*(const Int& s) const {
    CycInt r = *this;
    for (auto& x : r.c_) x *= s;
    return r;
}

CycInt CycInt::operator-() const {
    CycInt r = *this;
    for (auto& x : r.c_) x = -x;
    return r;
}

CycInt CycInt::canonical() const {
    CycInt r = *this;
    Int last = r.c_.back();
    if (last != 0)
        for (auto& x : r.c_) x -= last;
    return r;
}

bool CycInt::operator==(const CycInt& o) const {
    if (p_ != o.p_) return false;
    Int d = c_[0] - o.c_[0];
    for (size_t i = 1; i < c_.size(); ++i)
        if (c_[i] - o.c_[i] != d) return false;
    return true;
}

bool CycInt::is_zero() const { return *this == CycInt(p_); }

bool CycInt::is_integer() const {
    for (size_t i = 2; i < c_.size(); ++i)
        if (c_[i] != c_[1]) return false;
    return true;
}

Int CycInt::to_integer() const {
    if (!is_integer()) throw std::domain_error("CycInt: value is not a rational integer");
    return c_[0] - c_[1];
}

std::string CycInt::str() const {
    std::ostringstream os;
    CycInt cn = canonical();
    os << "[";
    for (size_t i = 0; i < cn.c_.size(); ++i) {
        if (i) os << ",";
        os << cn.c_[i].get_str();
    }
    os << "]_" << p_;
    return os.str();
}

}  // namespace arith
}  // namespace thetalat
