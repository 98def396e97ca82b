#ifndef THETALAT_FFQUAD_HPP
#define THETALAT_FFQUAD_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "thetalat/arith.hpp"
#include "thetalat/mat.hpp"

namespace thetalat {
namespace ffq {

// Brute-force capacity thresholds.  Exceeding one is a CapacityError, never
// silent slowness.
constexpr std::int64_t kVectorEnumBudget = std::int64_t(1) << 20;
constexpr std::int64_t kMatrixEnumBudget = std::int64_t(1) << 22;
constexpr std::int64_t kGaussSumBudget = std::int64_t(1) << 24;

enum class WittType { Plus, Minus, Odd };

struct WittReport {
    int radical_dim = 0;
    WittType witt_type = WittType::Plus;
    int nondegenerate_dim = 0;
};

// Quadratic space over F_p in the even-Gram convention: bilin is the
// reduction of an even symmetric integer matrix B, and q(x) = B[x]/2.
// For p = 2 that quotient is not determined by B mod 2, so the diagonal
// q(e_i) = B_ii/2 mod 2 is carried separately and
// q(x+y) = q(x) + q(y) + b(x,y) holds with b = B mod 2.
class FFQuadSpace {
public:
    FFQuadSpace(std::int64_t p, int dim, std::vector<int> bilin,
                std::vector<int> qdiag = {});
    // Reduce an even symmetric integer matrix.
    static FFQuadSpace from_even_gram(const arith::MatZ& gram, std::int64_t p);

    std::int64_t p() const { return p_; }
    int dim() const { return dim_; }
    int bilin(int i, int j) const { return b_[static_cast<size_t>(i) * dim_ + j]; }
    int qdiag(int i) const { return qd_[static_cast<size_t>(i)]; }

    int b_value(const std::vector<int>& x, const std::vector<int>& y) const;
    int q_value(const std::vector<int>& x) const;

    FFQuadSpace restrict_to(const std::vector<std::vector<int>>& basis) const;

private:
    std::int64_t p_;
    int dim_;
    std::vector<int> b_;   // dim x dim, entries in [0, p)
    std::vector<int> qd_;  // p=2 only: q(e_i) in {0,1}
};

WittReport classify(const FFQuadSpace& space);

// Number of d-dimensional subspaces on which q vanishes identically.
// Closed form for nondegenerate spaces, echelon brute force otherwise.
Int count_totally_isotropic(const FFQuadSpace& space, int d);
Int count_totally_isotropic_brute(const FFQuadSpace& space, int d);

// Visit one echelon basis (rows) per totally isotropic d-subspace.
void for_each_totally_isotropic(
    const FFQuadSpace& space, int d,
    const std::function<void(const std::vector<std::vector<int>>&)>& cb);

// alpha_j of the Hecke expansion: totally isotropic subspaces of
// codimension n-j in a space of dimension n-r0-r2.
Int alpha_j(const FFQuadSpace& space, int n, int j, int r0, int r2);

struct RStarResult {
    Int r_star;      // #{C : C^t V C = U, rank C = a}
    Int big_r_star;  // r_star / o(U)
};
RStarResult rep_count_rstar(const FFQuadSpace& v, const FFQuadSpace& u);

Int orth_order(const FFQuadSpace& u);

// Prop 2.6 specialization: the exact p^m-term cyclotomic sum
// sum_{u in F_p^m} zeta_p^{(Q[u]/2) c} for an even Gram matrix invertible
// mod p (p odd); c defaults to 1.
arith::CycInt gauss_sum_lattice(const arith::MatZ& gram, std::int64_t p,
                                std::int64_t c = 1);

// The closing identity of the Thm 4.5 proof:
//   sum_{a=0}^{j-r} beta(n-r-a, j-r-a) alpha'_{r+a}(V)
//     = p^{(j-r)(j-r+1)/2} R*(V, 0_{j-r})
// with alpha'_{r+a} evaluated as an exact character sum over pairs of an
// a-dimensional subspace and an invertible symmetric a x a matrix.
bool thm45_closing_identity_check(const FFQuadSpace& v, int n, int j, int r);

}  // namespace ffq
}  // namespace thetalat

#endif
