#ifndef THETALAT_HECKE_HPP
#define THETALAT_HECKE_HPP

#include "thetalat/genus.hpp"

namespace thetalat {
namespace hecke {

// Exponents of the Hecke expansions.  Unprimed (the completed operator):
//   e_j = j + r2 - r0,
//   E_j = k(j + r2 - r0) + r0(n - r2 + 1) + (j-r0-r2)(j-r0-r2+1)/2 - j(n+1);
// primed (the bare S...T_j image): e'_j = r2 - r0 - j,
//   E'_j = k(r2 - r0 - j) + r0(n - r2 + 1).
long exponent_e_j(int j, int r0, int r2, bool primed = false);
long exponent_E_j(int k, int n, int j, int r0, int r2, bool primed = false);

// Local shape of a rank-n sublattice Omega of p^{-1}L: depths f_i of an
// adapted basis (y_i = p^{f_i} w_i with w_i part of an L-basis, f_i >= -1)
// and the exact Gram matrix of Omega in that basis.  Everything the Hecke
// coefficient needs is a function of this data.
struct OmegaLocalData {
    std::int64_t p = 0;
    std::vector<int> f;
    arith::MatZ gram;
};

OmegaLocalData omega_local_data(std::int64_t p, const arith::MatZ& scaled_cols,
                                const arith::MatZ& parent_gram);

// One lattice Lambda with p Omega <= Lambda <= Delta: its multiplicities and
// the quadratic space (Omega cap Lambda)/p(Omega + Lambda).
struct LambdaPosition {
    int r0 = 0, r2 = 0;
    ffq::FFQuadSpace omega1;
};

std::vector<LambdaPosition> positions_from_local(const OmegaLocalData& local);

// c~_j(Omega) for every j = 0..n at once (exact rationals; the exponent E_j
// may be negative).
std::vector<Rat> ttilde_coeffs(const OmegaLocalData& local, int k, int n, int chi);

// A GL_n(Z)-class of sublattices of p^{-1}L meeting the fiber Q[U] = T.
struct OmegaClass {
    lat::LatticePtr parent;
    std::int64_t p = 0;
    int n = 0;
    arith::MatQ rep;  // canonical HNF columns
    int d0 = 0, d1 = 0, d2 = 0;
};

std::vector<std::pair<OmegaClass, Int>> omega_classes_at(
    lat::LatticePtr lattice, std::int64_t p, int n, const theta::TIndex& t,
    std::int64_t node_budget = theta::kDefaultNodeBudget);

std::vector<LambdaPosition> lambda_positions(const OmegaClass& omega, int j);

// sum over the whole fiber {U in (p^{-1}L)^n : Q[U] = T} of c~_j(Omega(U)),
// for every j = 0..n.  This is the T-th Fourier coefficient of
// theta(L)|T~_j(p^2).  force_generic selects the class-enumeration backend
// (used for cross-validation; the split backend is the default for n = 2).
std::vector<Rat> ttilde_sums(const lat::Lattice& lattice, std::int64_t p, int n,
                             const theta::TIndex& t,
                             std::int64_t node_budget = theta::kDefaultNodeBudget,
                             int threads = 1, bool force_generic = false);

// Batch variant sharing the outer-column enumeration between indices with a
// common (1,1) entry.
std::vector<std::vector<Rat>> ttilde_sums_batch(const lat::Lattice& lattice, std::int64_t p,
                                                int n, const std::vector<theta::TIndex>& ts,
                                                std::int64_t node_budget = theta::kDefaultNodeBudget,
                                                int threads = 1, bool force_generic = false);

Rat ttilde_coefficient(const lat::Lattice& lattice, std::int64_t p, int n, int j,
                       const theta::TIndex& t,
                       std::int64_t node_budget = theta::kDefaultNodeBudget,
                       int threads = 1);

// Canonical nonsingular index list for a degree and trace bound.
std::vector<theta::TIndex> nonsingular_keys(int n, std::int64_t bound);

// theta(L)|T'_j(p^2) assembled through the u_i / T~ route, at the
// nonsingular canonical keys of trace <= bound.
theta::CoeffTable tprime_table_u_route(const lat::Lattice& lattice, std::int64_t p, int n,
                                       int j, std::int64_t bound,
                                       std::int64_t node_budget = theta::kDefaultNodeBudget,
                                       int threads = 1);

// Right-hand side of Thm 5.3: sum_i v_i(j) sum_{K_{j-i}} theta(K).
// Throws std::domain_error naming the violated hypothesis when j exceeds the
// theorem's range for chi*(p).
theta::CoeffTable rhs_thm53_table(const lat::Lattice& lattice, std::int64_t p, int n,
                                  int j, std::int64_t bound,
                                  genus::ClassTableCache& cache,
                                  std::int64_t subspace_budget = ffq::kVectorEnumBudget,
                                  bool corrupt_v = false);

enum class Verdict { Pass, Fail, Inconclusive };

struct VerificationReport {
    std::string kind;
    std::string lattice_label;
    std::int64_t p = 0;
    int n = 0, j = 0;
    std::int64_t bound = 0;
    Int lambda = 0;
    Verdict verdict = Verdict::Inconclusive;
    struct Entry {
        theta::TIndex key;
        Rat lhs, rhs;
        bool match = false;
    };
    std::vector<Entry> entries;
    std::vector<std::string> notes;
    double elapsed_seconds = 0.0;

    std::string to_json() const;
    std::string to_text() const;
};

struct VerifyOptions {
    std::int64_t node_budget = theta::kDefaultNodeBudget;
    std::int64_t isometry_budget = genus::kDefaultIsometryBudget;
    std::int64_t subspace_budget = ffq::kVectorEnumBudget;
    int threads = 1;
    bool corrupt_v = false;  // test hook: perturbs one v_i coefficient
};

// Per-lattice Thm 5.3 check: for every nonsingular canonical T of trace <=
// bound and every admissible j, sum_i u_i(j) (T~ coefficient) must equal the
// neighbour-sum coefficient.
VerificationReport verify_thm53(const lat::Lattice& lattice, std::int64_t p, int n, int j,
                                std::int64_t bound, const VerifyOptions& opt = {});

// Cor 5.4: the genus average is an eigenform with the stated eigenvalue
// (case (a)), or is annihilated (case (b)).
VerificationReport verify_eigenvalue(lat::LatticePtr seed, std::int64_t p, int n, int j,
                                     std::int64_t bound, const VerifyOptions& opt = {});

}  // namespace hecke
}  // namespace thetalat

#endif
